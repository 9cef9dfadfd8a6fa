//! A priori and a posteriori residual bounds for FGMRES and FFOM.
//!
//! With the inner residual `‖v_j - A z_j‖ <= mu` at every outer step, the
//! per-step contraction obeys `omega_j = mu / sqrt(1 - omega_{j-1}^2)`,
//! `omega_0 = 0`, and the cumulative product telescopes to
//! `mu^m / sqrt(b_m)` where `b_m = b_{m-1} - mu^2 b_{m-2}`, `b_0 = b_1 = 1`.
//! Equivalently `b_m = mu^m U_m(1 / (2 mu))` with `U_m` the Chebyshev
//! polynomial of the second kind.
//!
//! Everything here evaluates through the `b_m` recurrence: `b_m` stays in
//! `[0, 1]` for `mu <= 1/2`, whereas `U_m(1/(2 mu))` overflows for small
//! `mu`, and for `mu > 1/2` the characteristic roots are complex.

use std::f64::consts::PI;
use std::fmt;

/// Values at or below `1 + OMEGA_SLACK` count as `omega <= 1`.
pub const OMEGA_SLACK: f64 = 1e-14;

/// A recursively defined sequence whose later terms may be undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct Recursion {
    /// Terms with index 1..=m; `NaN` where the recursion cannot continue.
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl Recursion {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Term `j` (one-based), if valid.
    pub fn get(&self, j: usize) -> Option<f64> {
        (j >= 1 && j <= self.len() && self.valid[j - 1]).then(|| self.values[j - 1])
    }

    pub fn all_valid(&self) -> bool {
        self.valid.iter().all(|&v| v)
    }
}

/// `omega_1..omega_m`. Term `j` is flagged invalid once some earlier
/// term reached 1 (the square root would be of a nonpositive number).
pub fn omega_sequence(mu: f64, m: usize) -> Recursion {
    let mut values = Vec::with_capacity(m);
    let mut valid = Vec::with_capacity(m);
    let mut prev = 0.0f64;
    let mut ok = true;
    for _ in 0..m {
        ok = ok && prev < 1.0;
        let next = if ok { mu / (1.0 - prev * prev).sqrt() } else { f64::NAN };
        values.push(next);
        valid.push(ok);
        prev = next;
    }
    Recursion { values, valid }
}

/// `gamma_j = ‖r_j^P‖ / sqrt(1 - gamma_{j-1}^2)` from measured inner
/// residual norms. Term `j` is valid while every `gamma_i`, `i <= j`, is
/// below 1.
pub fn gamma_sequence(inner_residuals: &[f64]) -> Recursion {
    let mut values = Vec::with_capacity(inner_residuals.len());
    let mut valid = Vec::with_capacity(inner_residuals.len());
    let mut prev = 0.0f64;
    let mut ok = true;
    for &rp in inner_residuals {
        let next = if prev < 1.0 { rp / (1.0 - prev * prev).sqrt() } else { f64::NAN };
        ok = ok && next < 1.0;
        values.push(next);
        valid.push(ok);
        prev = next;
    }
    Recursion { values, valid }
}

/// `b_0..b_m` from `b_j = b_{j-1} - mu^2 b_{j-2}`, `b_0 = b_1 = 1`.
pub fn b_sequence(mu: f64, m: usize) -> Vec<f64> {
    let mu2 = mu * mu;
    let mut b = Vec::with_capacity(m + 1);
    b.push(1.0);
    if m >= 1 {
        b.push(1.0);
    }
    for j in 2..=m {
        b.push(b[j - 1] - mu2 * b[j - 2]);
    }
    b
}

/// Chebyshev polynomial of the second kind by its three-term recurrence.
pub fn chebyshev_u(m: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if m == 0 {
        return prev;
    }
    for _ in 1..m {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// A bound evaluation that may have passed the point where the bound
/// stops decreasing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundValue {
    Value(f64),
    Stalled,
}

impl BoundValue {
    pub fn value(self) -> Option<f64> {
        match self {
            BoundValue::Value(v) => Some(v),
            BoundValue::Stalled => None,
        }
    }

    pub fn is_stalled(self) -> bool {
        matches!(self, BoundValue::Stalled)
    }
}

/// Index of the first omega above 1, if any among `omega_1..omega_m`.
fn first_omega_above_one(mu: f64, m: usize) -> Option<usize> {
    let mut prev = 0.0f64;
    for j in 1..=m {
        if prev >= 1.0 {
            return Some(j);
        }
        let next = mu / (1.0 - prev * prev).sqrt();
        if next > 1.0 + OMEGA_SLACK {
            return Some(j);
        }
        prev = next;
    }
    None
}

/// Relative FGMRES residual bound `mu^m / sqrt(b_m)` after `m` outer
/// steps; `Stalled` once some `omega_j > 1`, `j <= m`.
pub fn fgmres_bound(mu: f64, m: usize) -> BoundValue {
    if first_omega_above_one(mu, m).is_some() {
        return BoundValue::Stalled;
    }
    let b = b_sequence(mu, m)[m];
    BoundValue::Value(mu.powi(m as i32) / b.max(0.0).sqrt())
}

/// Relative FFOM residual bound `mu^m / sqrt(b_{m+1})`.
pub fn ffom_bound(mu: f64, m: usize) -> BoundValue {
    if first_omega_above_one(mu, m).is_some() {
        return BoundValue::Stalled;
    }
    let b = b_sequence(mu, m + 1)[m + 1];
    if b <= 0.0 {
        return BoundValue::Stalled;
    }
    BoundValue::Value(mu.powi(m as i32) / b.sqrt())
}

/// [`fgmres_bound`] held at its last value past the stalling index, i.e.
/// evaluated at `min(m, m*)`. This is what a residual history can be
/// compared against at every step.
pub fn fgmres_bound_capped(mu: f64, m: usize) -> f64 {
    let m = match stalling_index(mu) {
        StallIndex::Finite(s) => m.min(s),
        StallIndex::Infinite => m,
    };
    fgmres_bound(mu, m).value().unwrap_or(1.0)
}

/// Closed form of [`fgmres_bound`] through the characteristic roots
/// `r_± = (1 ± sqrt(1 - 4 mu^2)) / 2`; requires `0 < mu < 1/2`.
pub fn fgmres_bound_closed_form(mu: f64, m: usize) -> f64 {
    let (rp, rm) = char_roots(mu);
    let bm = (rp.powi(m as i32 + 1) - rm.powi(m as i32 + 1)) / (rp - rm);
    mu.powi(m as i32) / bm.sqrt()
}

/// Closed form of [`ffom_bound`]; requires `0 < mu < 1/2`.
pub fn ffom_bound_closed_form(mu: f64, m: usize) -> f64 {
    let (rp, rm) = char_roots(mu);
    let b = (rp.powi(m as i32 + 2) - rm.powi(m as i32 + 2)) / (rp - rm);
    mu.powi(m as i32) / b.sqrt()
}

/// Roots of `r^2 - r + mu^2 = 0` for `mu <= 1/2`.
pub fn char_roots(mu: f64) -> (f64, f64) {
    let d = (1.0 - 4.0 * mu * mu).max(0.0).sqrt();
    ((1.0 + d) / 2.0, (1.0 - d) / 2.0)
}

/// `omega_m` through the Chebyshev ratio, `sqrt(mu^2 b_{m-1} / b_m)`.
pub fn local_rate(mu: f64, m: usize) -> f64 {
    assert!(m >= 1, "local rate is defined for m >= 1");
    let b = b_sequence(mu, m);
    (mu * mu * b[m - 1] / b[m]).sqrt()
}

/// Limit of `omega_m`: `sin(arcsin(2 mu) / 2)` for `mu <= 1/2`, and 1
/// (stagnation) above.
pub fn asymptotic_rate(mu: f64) -> f64 {
    if mu > 0.5 {
        1.0
    } else {
        ((2.0 * mu).asin() / 2.0).sin()
    }
}

/// Largest `mu` for which `omega_j <= 1` for all `j <= m`:
/// `1 / (2 cos(pi / (m + 2)))`.
pub fn mu_threshold(m: usize) -> f64 {
    1.0 / (2.0 * (PI / (m as f64 + 2.0)).cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StallIndex {
    Finite(usize),
    Infinite,
}

impl StallIndex {
    pub fn finite(self) -> Option<usize> {
        match self {
            StallIndex::Finite(m) => Some(m),
            StallIndex::Infinite => None,
        }
    }
}

impl fmt::Display for StallIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StallIndex::Finite(m) => write!(f, "{m}"),
            StallIndex::Infinite => write!(f, "inf"),
        }
    }
}

/// Largest `m` with `omega_j <= 1` for every `j <= m`, found by running
/// the omega recursion.
pub fn stalling_index(mu: f64) -> StallIndex {
    if mu <= 0.5 {
        return StallIndex::Infinite;
    }
    let mut prev = 0.0f64;
    let mut m = 0usize;
    loop {
        let next = mu / (1.0 - prev * prev).sqrt();
        if !(next <= 1.0 + OMEGA_SLACK) {
            return StallIndex::Finite(m);
        }
        m += 1;
        prev = next;
    }
}

/// Stalling index by inverting the threshold, `max { m : mu <= mu_m }`.
pub fn stalling_index_from_threshold(mu: f64) -> StallIndex {
    if mu <= 0.5 {
        return StallIndex::Infinite;
    }
    let estimate = (PI / (1.0 / (2.0 * mu)).acos() - 2.0).floor().max(0.0) as usize;
    // Settle floating-point boundary effects against the exact predicate.
    let mut m = estimate;
    while m > 0 && mu > mu_threshold(m) * (1.0 + OMEGA_SLACK) {
        m -= 1;
    }
    while mu <= mu_threshold(m + 1) * (1.0 + OMEGA_SLACK) {
        m += 1;
    }
    StallIndex::Finite(m)
}

/// The full set of bound quantities for a given `mu` over `m` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSeries {
    pub mu: f64,
    pub omegas: Recursion,
    /// `b_0..b_m`
    pub b_seq: Vec<f64>,
    /// Relative FGMRES bounds for steps `0..=m`.
    pub fg_bounds: Vec<BoundValue>,
    /// Relative FFOM bounds for steps `0..=m`.
    pub ff_bounds: Vec<BoundValue>,
    pub stall_index: StallIndex,
}

pub fn bound_series(mu: f64, m: usize) -> BoundSeries {
    BoundSeries {
        mu,
        omegas: omega_sequence(mu, m),
        b_seq: b_sequence(mu, m),
        fg_bounds: (0..=m).map(|j| fgmres_bound(mu, j)).collect(),
        ff_bounds: (0..=m).map(|j| ffom_bound(mu, j)).collect(),
        stall_index: stalling_index(mu),
    }
}

/// Summary of the two convergence phases for a contraction factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub phase1: f64,
    pub phase2: f64,
    pub stall_index: StallIndex,
    /// Relative bound at the stalling index (0 when it is infinite).
    pub bound_at_stall: f64,
}

pub fn rate_report(mu: f64) -> RateReport {
    let stall_index = stalling_index(mu);
    let bound_at_stall = match stall_index {
        StallIndex::Infinite => 0.0,
        StallIndex::Finite(m) => fgmres_bound(mu, m).value().unwrap_or(f64::NAN),
    };
    RateReport { phase1: mu, phase2: asymptotic_rate(mu), stall_index, bound_at_stall }
}
