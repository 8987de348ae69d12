//! Potential kernel a(x) of simple random walk on Z².
//!
//! `a(0) = 0`, `a` is harmonic off the origin and
//! `a(x) = (2/π) ln‖x‖ + κ + O(‖x‖⁻²)` with `κ = (2γ + ln 8)/π`. The table is
//! the solution of the Dirichlet problem on B(0, R) minus the origin with
//! boundary values taken from the asymptotic expansion, computed with
//! multigrid-preconditioned CG and stored on one octant.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::multigrid::{MaskedGrid, Multigrid};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Additive constant of the asymptotic expansion, (2γ + ln 8)/π.
pub fn kappa() -> f64 {
    (2.0 * EULER_GAMMA + 8f64.ln()) / std::f64::consts::PI
}

/// (2/π) ln r + κ, for r > 0.
#[inline]
pub fn a_asymptotic_norm(r: f64) -> f64 {
    std::f64::consts::FRAC_2_PI * r.ln() + kappa()
}

/// Asymptotic expansion without the O(‖x‖⁻²) term; 0 at the origin.
#[inline]
pub fn a_asymptotic(p: Point) -> f64 {
    if p == Point::ORIGIN {
        0.0
    } else {
        std::f64::consts::FRAC_2_PI * 0.5 * (p.norm2() as f64).ln() + kappa()
    }
}

/// Default solver tolerance on the max-norm harmonicity residual.
pub const DEFAULT_TOL: f64 = 1e-12;

const CACHE_MAGIC: &[u8; 8] = b"RI2DPOT\0";
const CACHE_VERSION: u32 = 1;

/// Where an evaluation came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// Lattice solve, ‖x‖ ≤ R/2.
    Table,
    /// Asymptotic expansion; error bounded by about 0.053/‖x‖².
    Asymptotic,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Lookup {
    pub value: f64,
    pub regime: Regime,
}

/// Fitted coefficient of cos(4θ)/‖x‖² in a − a_asymptotic.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CorrectionFit {
    pub coefficient: f64,
    pub max_misfit: f64,
    pub points: usize,
}

#[derive(Clone, Debug)]
pub struct PotentialTable {
    radius: u32,
    tol: f64,
    residual: f64,
    iterations: usize,
    values: Vec<f64>,
}

#[inline]
fn octant(p: Point) -> (u64, u64) {
    let (x, y) = (p.x.unsigned_abs(), p.y.unsigned_abs());
    if x >= y {
        (x, y)
    } else {
        (y, x)
    }
}

#[inline]
fn octant_index(u: u64, v: u64) -> usize {
    (u * (u + 1) / 2 + v) as usize
}

impl PotentialTable {
    /// Solves the Dirichlet problem on B(0, `radius`).
    pub fn build(radius: u32, tol: f64) -> Result<Self> {
        if radius < 4 {
            return Err(Error::Domain("potential table radius must be at least 4".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::Domain("tolerance must be positive".into()));
        }
        let r = radius as i64;
        let side = (2 * r + 3) as usize;
        let off = r + 1;
        let cells = side * side;
        // 13 f64 arrays of the full box at peak, plus the masks.
        let bytes = cells as u64 * (13 * 8 + 2);
        if bytes > 4_500_000_000 {
            return Err(Error::Resource(format!("potential table R={radius} needs about {} MB", bytes >> 20)));
        }
        let r2 = r * r;
        let inside = |x: i64, y: i64| x * x + y * y <= r2;
        let mut mask = vec![false; cells];
        let mut known = vec![f64::NAN; cells];
        for j in 0..side as i64 {
            let y = j - off;
            for i in 0..side as i64 {
                let x = i - off;
                if !inside(x, y) {
                    continue;
                }
                let k = j as usize * side + i as usize;
                let boundary = !(inside(x + 1, y) && inside(x - 1, y) && inside(x, y + 1) && inside(x, y - 1));
                if x == 0 && y == 0 {
                    known[k] = 0.0;
                } else if boundary {
                    known[k] = a_asymptotic(Point::new(x, y));
                } else {
                    mask[k] = true;
                }
            }
        }
        let mut b = vec![0.0; cells];
        let mut x = vec![0.0; cells];
        for k in 0..cells {
            if mask[k] {
                for kk in [k - 1, k + 1, k - side, k + side] {
                    if !mask[kk] {
                        b[k] += 0.25 * known[kk];
                    }
                }
                let (i, j) = ((k % side) as i64 - off, (k / side) as i64 - off);
                x[k] = a_asymptotic(Point::new(i, j));
            }
        }
        let grid = MaskedGrid::new(side, side, mask)?;
        let stats = {
            let mut mg = Multigrid::new(&grid);
            mg.solve(&b, &mut x, tol, 200)?
        };
        drop(b);
        let mask = grid.mask;
        let mut values = vec![f64::NAN; octant_index(radius as u64, radius as u64) + 1];
        for u in 0..=r {
            for v in 0..=u {
                if u * u + v * v > r2 {
                    break;
                }
                let k = (v + off) as usize * side + (u + off) as usize;
                values[octant_index(u as u64, v as u64)] = if mask[k] { x[k] } else { known[k] };
            }
        }
        let table = PotentialTable { radius, tol, residual: stats.residual, iterations: stats.iterations, values };
        log::info!("potential table R={radius}: {} PCG iterations, residual {:.2e}", stats.iterations, stats.residual);
        Ok(table)
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Max-norm residual reported by the solver.
    pub fn solver_residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Stored value for ‖p‖ ≤ R (None outside the disk).
    #[inline]
    pub fn stored(&self, p: Point) -> Option<f64> {
        let (u, v) = octant(p);
        let r = self.radius as u64;
        if u > r || u * u + v * v > r * r {
            return None;
        }
        Some(self.values[octant_index(u, v)])
    }

    /// a(p) with the regime it came from: the table for ‖p‖ ≤ R/2,
    /// otherwise the asymptotic expansion.
    #[inline]
    pub fn lookup(&self, p: Point) -> Lookup {
        let (u, v) = octant(p);
        let h = (self.radius / 2) as u64;
        if u <= h && u * u + v * v <= h * h {
            Lookup { value: self.values[octant_index(u, v)], regime: Regime::Table }
        } else {
            Lookup { value: a_asymptotic(p), regime: Regime::Asymptotic }
        }
    }

    #[inline]
    pub fn a(&self, p: Point) -> f64 {
        self.lookup(p).value
    }

    /// Radius up to which lookups are exact.
    pub fn exact_radius(&self) -> f64 {
        (self.radius / 2) as f64
    }

    /// Max over solved points (0 < ‖x‖, all neighbours in the disk) of
    /// |a(x) − mean of a over the neighbours|.
    pub fn harmonicity_residual(&self) -> f64 {
        let r = self.radius as i64;
        let mut worst: f64 = 0.0;
        for u in 0..r {
            for v in 0..=u {
                let p = Point::new(u, v);
                if p == Point::ORIGIN {
                    continue;
                }
                let nb = p.neighbors();
                if p.norm2() > r * r || nb.iter().any(|q| q.norm2() > r * r) {
                    continue;
                }
                let c = self.stored(p).unwrap();
                let m = 0.25 * nb.iter().map(|q| self.stored(*q).unwrap()).sum::<f64>();
                worst = worst.max((c - m).abs());
            }
        }
        worst
    }

    /// Least-squares fit of (a − a_asymptotic)·‖x‖² = C·cos 4θ over stored
    /// points with r_min ≤ ‖x‖ ≤ r_max.
    pub fn fit_correction(&self, r_min: f64, r_max: f64) -> CorrectionFit {
        let (mut num, mut den, mut n) = (0.0, 0.0, 0usize);
        let mut samples = Vec::new();
        let hi = r_max.min(self.radius as f64) as i64;
        for u in 0..=hi {
            for v in 0..=u {
                let p = Point::new(u, v);
                let nrm = p.norm();
                if nrm < r_min || nrm > r_max {
                    continue;
                }
                let Some(val) = self.stored(p) else { continue };
                let d = (val - a_asymptotic(p)) * nrm * nrm;
                let c4 = (4.0 * (v as f64).atan2(u as f64)).cos();
                num += d * c4;
                den += c4 * c4;
                n += 1;
                samples.push((d, c4));
            }
        }
        let coefficient = num / den;
        let max_misfit = samples.iter().fold(0.0f64, |m, (d, c)| m.max((d - coefficient * c).abs()));
        CorrectionFit { coefficient, max_misfit, points: n }
    }

    fn cache_key(radius: u32, tol: f64) -> String {
        let mut h = Sha256::new();
        h.update(CACHE_MAGIC);
        h.update(CACHE_VERSION.to_le_bytes());
        h.update(radius.to_le_bytes());
        h.update(tol.to_bits().to_le_bytes());
        let d = h.finalize();
        d.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    /// Cache file name for `(radius, tol)`.
    pub fn cache_file(dir: &Path, radius: u32, tol: f64) -> PathBuf {
        dir.join(format!("potential-R{radius}-{}.bin", Self::cache_key(radius, tol)))
    }

    /// Binary serialisation: header, octant values, SHA-256 of all preceding
    /// bytes.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(self.values.len() * 8 + 64);
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.radius.to_le_bytes());
        buf.extend_from_slice(&self.tol.to_le_bytes());
        buf.extend_from_slice(&self.residual.to_le_bytes());
        buf.extend_from_slice(&(self.iterations as u64).to_le_bytes());
        buf.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&buf);
        buf.extend_from_slice(&digest);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&buf)?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < 8 + 4 + 4 + 8 + 8 + 8 + 8 + 32 {
            return Err(Error::Corrupt(format!("{}: truncated", path.display())));
        }
        let (body, digest) = buf.split_at(buf.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Corrupt(format!("{}: checksum mismatch", path.display())));
        }
        if &body[..8] != CACHE_MAGIC {
            return Err(Error::Corrupt(format!("{}: bad magic", path.display())));
        }
        let u32_at = |o: usize| u32::from_le_bytes(body[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(body[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(body[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != CACHE_VERSION {
            return Err(Error::Corrupt(format!("{}: format version {version}", path.display())));
        }
        let radius = u32_at(12);
        let tol = f64_at(16);
        let residual = f64_at(24);
        let iterations = u64_at(32) as usize;
        let n = u64_at(40) as usize;
        if n != octant_index(radius as u64, radius as u64) + 1 || body.len() != 48 + 8 * n {
            return Err(Error::Corrupt(format!("{}: size mismatch", path.display())));
        }
        let values = (0..n).map(|i| f64_at(48 + 8 * i)).collect();
        Ok(PotentialTable { radius, tol, residual, iterations, values })
    }

    /// Loads from `dir` if a valid cache exists, otherwise builds and stores.
    pub fn load_or_build(radius: u32, tol: f64, dir: Option<&Path>) -> Result<Self> {
        if let Some(dir) = dir {
            let path = Self::cache_file(dir, radius, tol);
            if path.exists() {
                match Self::load(&path) {
                    Ok(t) if t.radius == radius && t.tol == tol => return Ok(t),
                    Ok(_) => log::warn!("{}: key mismatch, rebuilding", path.display()),
                    Err(e) => log::warn!("{e}; rebuilding"),
                }
            }
            let t = Self::build(radius, tol)?;
            if let Err(e) = t.save(&path) {
                log::warn!("could not write potential cache: {e}");
            }
            Ok(t)
        } else {
            Self::build(radius, tol)
        }
    }

    /// Process-wide shared table at the default tolerance, backed by the
    /// on-disk cache.
    pub fn shared(radius: u32) -> Result<Arc<PotentialTable>> {
        static TABLES: OnceLock<Mutex<HashMap<u32, Arc<OnceLock<Arc<PotentialTable>>>>>> = OnceLock::new();
        let slot = {
            let mut m = TABLES.get_or_init(|| Mutex::new(HashMap::new())).lock().unwrap();
            m.entry(radius).or_default().clone()
        };
        if let Some(t) = slot.get() {
            return Ok(t.clone());
        }
        let dir = cache_dir();
        let t = Arc::new(Self::load_or_build(radius, DEFAULT_TOL, Some(&dir))?);
        Ok(slot.get_or_init(|| t).clone())
    }

    /// Writes `x,y,a` for stored points with ‖x‖ ≤ r_max in the first octant.
    pub fn write_csv<W: Write>(&self, mut w: W, r_max: f64) -> Result<()> {
        writeln!(w, "# schema=potential_table/1 radius={} tol={:e}", self.radius, self.tol)?;
        writeln!(w, "x,y,a,regime")?;
        let hi = r_max.min(self.radius as f64) as i64;
        for u in 0..=hi {
            for v in 0..=u {
                let p = Point::new(u, v);
                if p.norm() > r_max {
                    continue;
                }
                let l = self.lookup(p);
                let regime = if l.regime == Regime::Table { "table" } else { "asymptotic" };
                writeln!(w, "{u},{v},{:.15e},{regime}", l.value)?;
            }
        }
        Ok(())
    }
}

/// Cache directory: `RI2D_CACHE_DIR` if set, otherwise a directory under the
/// system temp dir.
pub fn cache_dir() -> PathBuf {
    match std::env::var_os("RI2D_CACHE_DIR") {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => std::env::temp_dir().join("ri2d-cache"),
    }
}
