use super::trace::{trace_record, write_trace_dat, TraceRecord};
use super::{atomic_write, generate_convdiff, read_matrix_market, HarnessError};
use crate::adversarial::{
    build_adversarial_operator, build_stagnating_system, verify_sharpness, verify_sharpness_upto,
};
use crate::bounds::{
    asymptotic_rate, ffom_bound, fgmres_bound, fgmres_bound_capped, gamma_sequence, omega_sequence, stalling_index,
    BoundValue, StallIndex,
};
use crate::linalg::{c64, unit, CsrMatrix, Vector};
use crate::solver::{fgmres, InnerGmresPreconditioner, SolveTrace, SolverConfig, Termination};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::PathBuf;

/// Settings shared by every experiment. `n` is the system dimension for
/// the constructed systems and the grid size for the generated PDE matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub mu: f64,
    pub outer: usize,
    pub inner: usize,
    pub n: usize,
    pub matrix: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub peclet: f64,
}

impl ExperimentConfig {
    fn base(name: &str, mu: f64, outer: usize, inner: usize, n: usize) -> Self {
        Self { name: name.into(), mu, outer, inner, n, matrix: None, out: None, seed: 0, peclet: 1.0 }
    }

    /// `mu = 0.5`, `m = 20`, `k = 100`, `N = 2500`.
    pub fn sharp() -> Self {
        Self::base("sharp", 0.5, 20, 100, 2500)
    }

    /// `mu = 0.55`, `m = 20`, `k = 100`, `N = 2500`.
    pub fn stagnate() -> Self {
        Self::base("stagnate", 0.55, 20, 100, 2500)
    }

    /// `mu = 0.1` target, up to 30 outer and 200 inner steps, 40x40 grid.
    pub fn solve() -> Self {
        Self::base("solve", 0.1, 30, 200, 40)
    }

    pub fn bound() -> Self {
        Self::base("bound", 0.5, 20, 1, 1)
    }

    fn check_counts(&self) -> Result<(), HarnessError> {
        if self.outer == 0 || self.inner == 0 || self.n == 0 {
            return Err(HarnessError::Config("outer, inner and n must be positive".into()));
        }
        Ok(())
    }

    fn check_adversarial(&self) -> Result<(), HarnessError> {
        self.check_counts()?;
        if self.outer.checked_mul(self.inner).is_none_or(|mk| mk >= self.n) {
            return Err(HarnessError::Config(format!(
                "need outer * inner < n, got {} * {} >= {}",
                self.outer, self.inner, self.n
            )));
        }
        Ok(())
    }

    fn meta(&self) -> Vec<String> {
        let mut m = vec![
            format!("experiment = {}", self.name),
            format!("mu = {}", self.mu),
            format!("outer = {}", self.outer),
            format!("inner = {}", self.inner),
            format!("n = {}", self.n),
            format!("seed = {}", self.seed),
        ];
        if let Some(p) = &self.matrix {
            m.push(format!("matrix = {}", p.display()));
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// A priori bound from the contraction factor.
    Omega,
    /// A posteriori bound from the measured inner residuals.
    Gamma,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub record: TraceRecord,
    pub status: Termination,
    pub bound_kind: BoundKind,
    /// Largest relative gap to the bound (constructed systems only).
    pub max_gap: Option<f64>,
    /// Last iteration with a real decrease and its relative residual.
    pub stall: Option<(usize, f64)>,
    pub summary: Vec<String>,
}

fn write_if_requested(cfg: &ExperimentConfig, record: &TraceRecord) -> Result<(), HarnessError> {
    match &cfg.out {
        Some(p) => write_trace_dat(record, p),
        None => Ok(()),
    }
}

fn tiny_tol() -> SolverConfig {
    SolverConfig::default().with_tol(f64::MIN_POSITIVE)
}

/// FGMRES with inner GMRES(k) on the worst-case system for `mu <= 1/2`.
pub fn cmd_sharp(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    if !(cfg.mu > 0.0 && cfg.mu <= 0.5) {
        return Err(HarnessError::Config(format!("sharp needs 0 < mu <= 1/2, got {}", cfg.mu)));
    }
    cfg.check_adversarial()?;
    let sys = build_adversarial_operator(&unit(cfg.n, 0), cfg.mu, cfg.outer, cfg.inner, cfg.n)?;
    let mut pre = InnerGmresPreconditioner::fixed(&sys, cfg.inner);
    let out = fgmres(&sys, sys.rhs(), None, &mut pre, &tiny_tol().with_max_outer(sys.outer_steps()))?;
    let gap = verify_sharpness(&out.trace, cfg.mu);
    let record =
        trace_record(&out.trace, with_bound_meta(cfg.meta(), BoundKind::Omega), |j| fgmres_bound_capped(cfg.mu, j));
    write_if_requested(cfg, &record)?;
    let last = record.rows.last().unwrap();
    let summary = vec![
        format!("outer iterations: {}", out.trace.steps.len()),
        format!("final relative residual: {:.6e}", last.fg_rel),
        format!("bound at final step: {:.6e}", last.bound),
        format!("max relative gap to bound: {gap:.3e}"),
    ];
    Ok(ExperimentReport {
        record,
        status: out.trace.status,
        bound_kind: BoundKind::Omega,
        max_gap: Some(gap),
        stall: None,
        summary,
    })
}

fn last_decrease(trace: &SolveTrace) -> (usize, f64) {
    let fg = trace.relative_fg();
    let j = (1..fg.len()).rev().find(|&j| fg[j] < fg[j - 1] * (1.0 - 1e-8)).unwrap_or(0);
    (j, fg[j])
}

/// The stagnating worst-case system for `1/2 < mu < 1`.
pub fn cmd_stagnate(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    if !(cfg.mu > 0.5 && cfg.mu < 1.0) {
        return Err(HarnessError::Config(format!("stagnate needs 1/2 < mu < 1, got {}", cfg.mu)));
    }
    cfg.check_adversarial()?;
    let sys = build_stagnating_system(&unit(cfg.n, 0), cfg.mu, cfg.outer, cfg.inner, cfg.n)?;
    let mut pre = InnerGmresPreconditioner::fixed(&sys, cfg.inner);
    let solver_cfg = tiny_tol().with_max_outer(sys.outer_steps()).with_stop_on_stagnation(false);
    let out = fgmres(&sys, sys.rhs(), None, &mut pre, &solver_cfg)?;
    let m_star = stalling_index(cfg.mu);
    let sharp_upto = m_star.finite().unwrap_or(usize::MAX).min(out.trace.steps.len());
    let gap = verify_sharpness_upto(&out.trace, cfg.mu, sharp_upto);
    let stall = last_decrease(&out.trace);
    let record =
        trace_record(&out.trace, with_bound_meta(cfg.meta(), BoundKind::Omega), |j| fgmres_bound_capped(cfg.mu, j));
    write_if_requested(cfg, &record)?;
    let summary = vec![
        format!("stalling index m* = {m_star}"),
        format!("residual decreases through iteration {}", stall.0),
        format!("relative residual at stall: {:.6e}", stall.1),
        format!("max relative gap to bound through m*: {gap:.3e}"),
    ];
    Ok(ExperimentReport {
        record,
        status: out.trace.status,
        bound_kind: BoundKind::Omega,
        max_gap: Some(gap),
        stall: Some(stall),
        summary,
    })
}

fn with_bound_meta(mut meta: Vec<String>, kind: BoundKind) -> Vec<String> {
    meta.push(match kind {
        BoundKind::Omega => "bound = fgmres a priori bound, held at the stalling index".into(),
        BoundKind::Gamma => "bound = a posteriori bound from measured inner residuals".into(),
    });
    meta
}

/// Cumulative `prod gamma_i`, held at its last valid value.
fn gamma_bounds(p: &[f64]) -> Vec<f64> {
    let g = gamma_sequence(p);
    let mut out = vec![1.0];
    let mut acc = 1.0;
    for (v, ok) in g.values.iter().zip(&g.valid) {
        if *ok && *v < 1.0 {
            acc *= v;
        }
        out.push(acc);
    }
    out
}

fn seeded_rhs(n: usize, seed: u64) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| c64::new(rng.gen_range(-1.0..1.0), 0.0)).collect()
}

/// FGMRES with inner GMRES run to relative residual `mu` on a Matrix
/// Market matrix or, by default, the convection-diffusion matrix.
pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    if !(cfg.mu > 0.0 && cfg.mu < 1.0) {
        return Err(HarnessError::Config(format!("solve needs 0 < mu < 1, got {}", cfg.mu)));
    }
    cfg.check_counts()?;
    let a: CsrMatrix = match &cfg.matrix {
        Some(p) => read_matrix_market(p)?,
        None => {
            if cfg.n < 2 {
                return Err(HarnessError::Config("grid size n must be at least 2".into()));
            }
            generate_convdiff(cfg.n, cfg.peclet)
        }
    };
    if a.rows() != a.cols() {
        return Err(HarnessError::Config(format!("matrix is {}x{}, not square", a.rows(), a.cols())));
    }
    let b = seeded_rhs(a.rows(), cfg.seed);
    let mut pre = InnerGmresPreconditioner::with_target(&a, cfg.mu, cfg.inner);
    let out = fgmres(&a, &b, None, &mut pre, &SolverConfig::default().with_max_outer(cfg.outer))?;
    let p = out.trace.p_resnorms();
    let kind = if p.iter().all(|&r| r <= cfg.mu) { BoundKind::Omega } else { BoundKind::Gamma };
    let gammas = gamma_bounds(&p);
    let mut meta = cfg.meta();
    if cfg.matrix.is_none() {
        meta.push(format!("matrix = convection-diffusion {0}x{0} grid, peclet {1}", cfg.n, cfg.peclet));
    }
    let record = trace_record(&out.trace, with_bound_meta(meta, kind), |j| match kind {
        BoundKind::Omega => fgmres_bound_capped(cfg.mu, j),
        BoundKind::Gamma => gammas[j],
    });
    write_if_requested(cfg, &record)?;
    let inner: Vec<String> = out.trace.steps.iter().map(|s| s.inner_iterations.to_string()).collect();
    let summary = vec![
        format!("dimension: {}", a.rows()),
        format!("status: {:?} after {} outer iterations", out.trace.status, out.trace.steps.len()),
        format!("final relative residual: {:.6e}", record.rows.last().unwrap().fg_rel),
        format!("true final residual: {:.6e}", out.trace.final_true_resnorm / out.trace.initial_resnorm),
        format!("inner iterations per step: {}", inner.join(", ")),
        format!("bound column: {}", if kind == BoundKind::Omega { "omega (a priori)" } else { "gamma (a posteriori)" }),
    ];
    if out.trace.status == Termination::Breakdown {
        return Err(HarnessError::Numerical(format!(
            "Arnoldi breakdown without convergence at step {}",
            out.trace.steps.len()
        )));
    }
    Ok(ExperimentReport { record, status: out.trace.status, bound_kind: kind, max_gap: None, stall: None, summary })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub mu: f64,
    pub phase1: f64,
    pub phase2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table2Row {
    pub mu: f64,
    pub stall: StallIndex,
    pub bound: f64,
}

pub fn table1_rows() -> Vec<Table1Row> {
    [0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.8]
        .into_iter()
        .map(|mu| Table1Row { mu, phase1: mu, phase2: asymptotic_rate(mu) })
        .collect()
}

pub fn table2_rows() -> Vec<Table2Row> {
    [0.5, 0.501, 0.51, 0.55, 0.6, 0.8]
        .into_iter()
        .map(|mu| {
            let stall = stalling_index(mu);
            let bound = stall.finite().map_or(0.0, |m| fgmres_bound(mu, m).value().unwrap_or(f64::NAN));
            Table2Row { mu, stall, bound }
        })
        .collect()
}

/// Both tables as text.
pub fn cmd_tables() -> String {
    let mut s = String::new();
    writeln!(s, "Two phases of FGMRES convergence").unwrap();
    writeln!(s, "{:>8}  {:>18}  {:>18}", "mu", "phase 1 rate", "phase 2 rate").unwrap();
    for r in table1_rows() {
        let p2 = if r.mu > 0.5 { "1 (stagnation)".to_string() } else { format!("{:.15}", r.phase2) };
        writeln!(s, "{:>8}  {:>18}  {:>18}", r.mu, r.phase1, p2).unwrap();
    }
    writeln!(s).unwrap();
    writeln!(s, "Stalling index").unwrap();
    writeln!(s, "{:>8}  {:>6}  {:>10}", "mu", "m*", "bound").unwrap();
    for r in table2_rows() {
        let b = if r.stall == StallIndex::Infinite { "0".to_string() } else { format!("{:.2e}", r.bound) };
        writeln!(s, "{:>8}  {:>6}  {:>10}", r.mu, r.stall.to_string().replace("inf", "∞"), b).unwrap();
    }
    s
}

/// The bound quantities for one `mu` over `cfg.outer` steps, as text.
pub fn cmd_bound(cfg: &ExperimentConfig) -> Result<String, HarnessError> {
    if !(cfg.mu > 0.0 && cfg.mu < 1.0) {
        return Err(HarnessError::Config(format!("bound needs 0 < mu < 1, got {}", cfg.mu)));
    }
    if cfg.outer == 0 {
        return Err(HarnessError::Config("outer must be positive".into()));
    }
    let om = omega_sequence(cfg.mu, cfg.outer);
    let fmt = |b: BoundValue| b.value().map_or_else(|| "stalled".to_string(), |v| format!("{v:.16e}"));
    let mut s = String::new();
    writeln!(s, "# mu = {}", cfg.mu).unwrap();
    writeln!(s, "# stalling index m* = {}", stalling_index(cfg.mu)).unwrap();
    writeln!(s, "# asymptotic rate = {:.15}", asymptotic_rate(cfg.mu)).unwrap();
    writeln!(s, "# m omega_m fgmres_bound ffom_bound").unwrap();
    for j in 1..=cfg.outer {
        let w = if om.valid[j - 1] { format!("{:.16e}", om.values[j - 1]) } else { "nan".into() };
        writeln!(s, "{j} {w} {} {}", fmt(fgmres_bound(cfg.mu, j)), fmt(ffom_bound(cfg.mu, j))).unwrap();
    }
    if let Some(p) = &cfg.out {
        atomic_write(p, |w| w.write_all(s.as_bytes()))?;
    }
    Ok(s)
}
