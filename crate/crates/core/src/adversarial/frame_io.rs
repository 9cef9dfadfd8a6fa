//! Little-endian binary dump of an [`AdversarialSystem`], so a large
//! construction can be reused without regenerating it.
//!
//! Layout: magic, `n`, `k`, `mu`, happy-breakdown flag, then the sequence
//! (rhs, v's, w's, sharp flags, residual norms) and the `X`, `Y` frames as
//! sparse columns. Every count is a `u64`, every scalar an `f64`.

use super::frame::{Frame, SparseColumn};
use super::system::{AdversarialSystem, WSequence};
use super::AdversarialError;
use crate::linalg::{c64, Vector};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"FKFRAME1";

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u64(&mut self, x: u64) -> std::io::Result<()> {
        self.0.write_all(&x.to_le_bytes())
    }
    fn f64(&mut self, x: f64) -> std::io::Result<()> {
        self.0.write_all(&x.to_le_bytes())
    }
    fn c64(&mut self, x: c64) -> std::io::Result<()> {
        self.f64(x.re)?;
        self.f64(x.im)
    }
    fn dense(&mut self, x: &[c64]) -> std::io::Result<()> {
        self.u64(x.len() as u64)?;
        x.iter().try_for_each(|&v| self.c64(v))
    }
    fn dense_list(&mut self, xs: &[Vector]) -> std::io::Result<()> {
        self.u64(xs.len() as u64)?;
        xs.iter().try_for_each(|x| self.dense(x))
    }
    fn frame(&mut self, f: &Frame) -> std::io::Result<()> {
        self.u64(f.len() as u64)?;
        for col in f.columns() {
            self.u64(col.nnz() as u64)?;
            for (&i, &v) in col.indices.iter().zip(&col.values) {
                self.u64(i as u64)?;
                self.c64(v)?;
            }
        }
        Ok(())
    }
}

struct Reader<R: Read> {
    inner: R,
    n: usize,
}

impl<R: Read> Reader<R> {
    fn u64(&mut self) -> Result<u64, AdversarialError> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
    fn f64(&mut self) -> Result<f64, AdversarialError> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn c64(&mut self) -> Result<c64, AdversarialError> {
        Ok(c64::new(self.f64()?, self.f64()?))
    }
    /// A count, sanity-limited so a corrupt file cannot request huge
    /// allocations.
    fn count(&mut self, limit: usize, what: &str) -> Result<usize, AdversarialError> {
        let x = self.u64()?;
        usize::try_from(x)
            .ok()
            .filter(|&x| x <= limit)
            .ok_or_else(|| AdversarialError::Format(format!("{what} = {x} exceeds {limit}")))
    }
    fn dense(&mut self) -> Result<Vector, AdversarialError> {
        let len = self.count(self.n, "vector length")?;
        if len != self.n {
            return Err(AdversarialError::Format(format!("vector of length {len}, expected {}", self.n)));
        }
        (0..len).map(|_| self.c64()).collect()
    }
    fn dense_list(&mut self) -> Result<Vec<Vector>, AdversarialError> {
        let count = self.count(self.n + 1, "vector count")?;
        (0..count).map(|_| self.dense()).collect()
    }
    fn frame(&mut self) -> Result<Frame, AdversarialError> {
        let cols = self.count(self.n, "frame columns")?;
        let mut f = Frame::new(self.n);
        for _ in 0..cols {
            let nnz = self.count(self.n, "column nnz")?;
            let mut col = SparseColumn { indices: Vec::with_capacity(nnz), values: Vec::with_capacity(nnz) };
            for _ in 0..nnz {
                let i = self.count(self.n - 1, "row index")?;
                if col.indices.last().is_some_and(|&last| last >= i) {
                    return Err(AdversarialError::Format("column indices must increase".into()));
                }
                col.indices.push(i);
                col.values.push(self.c64()?);
            }
            f.push(col);
        }
        Ok(f)
    }
}

pub fn save_system(sys: &AdversarialSystem, path: &Path) -> Result<(), AdversarialError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = Writer(BufWriter::new(tmp.as_file()));
        let seq = sys.sequence();
        w.0.write_all(MAGIC)?;
        w.u64(seq.dim() as u64)?;
        w.u64(sys.k() as u64)?;
        w.f64(seq.mu)?;
        w.u64(seq.happy_breakdown as u64)?;
        w.dense(&seq.rhs)?;
        w.dense_list(&seq.v)?;
        w.dense_list(&seq.w)?;
        w.u64(seq.sharp.len() as u64)?;
        for &s in &seq.sharp {
            w.u64(s as u64)?;
        }
        w.u64(seq.fg_norms.len() as u64)?;
        for (&fg, ff) in seq.fg_norms.iter().zip(&seq.ff_norms) {
            w.f64(fg)?;
            w.f64(ff.unwrap_or(f64::NAN))?;
        }
        w.frame(sys.x_frame())?;
        w.frame(sys.y_frame())?;
        w.0.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn load_system(path: &Path) -> Result<AdversarialSystem, AdversarialError> {
    let mut inner = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    inner.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(AdversarialError::Format("bad magic".into()));
    }
    let mut r = Reader { inner, n: usize::MAX };
    let n = r.count(1 << 32, "dimension")?;
    if n == 0 {
        return Err(AdversarialError::Format("dimension is zero".into()));
    }
    r.n = n;
    let k = r.count(n, "k")?;
    let mu = r.f64()?;
    let happy_breakdown = r.u64()? != 0;
    let rhs = r.dense()?;
    let v = r.dense_list()?;
    let w = r.dense_list()?;
    let ns = r.count(n, "steps")?;
    let sharp = (0..ns).map(|_| r.u64().map(|x| x != 0)).collect::<Result<Vec<_>, _>>()?;
    let nr = r.count(n + 1, "norm count")?;
    let mut fg_norms = Vec::with_capacity(nr);
    let mut ff_norms = Vec::with_capacity(nr);
    for _ in 0..nr {
        fg_norms.push(r.f64()?);
        let ff = r.f64()?;
        ff_norms.push((!ff.is_nan()).then_some(ff));
    }
    let x = r.frame()?;
    let y = r.frame()?;
    if x.len() != y.len() || w.len() != sharp.len() || nr != w.len() + 1 || k == 0 {
        return Err(AdversarialError::Format("inconsistent section sizes".into()));
    }
    let sequence = WSequence { mu, rhs, v, w, sharp, fg_norms, ff_norms, happy_breakdown };
    Ok(AdversarialSystem { k, x, y, sequence })
}
