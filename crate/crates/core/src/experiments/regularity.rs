//! Entrance-measure regularity on annuli and the reversibility identity.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::harmonic::{harmonic_measure, HarmonicMeasure, HmMethod};
use crate::lattice::{ball, Point, PointSet};
use crate::potential::PotentialTable;
use crate::solver::{AbsorbingSystem, BackendChoice, Srw, Topology};
use crate::stats::{linear_fit, LinearFit};

/// A_n = (B(cn) \ B(n)) ∪ ∂B(n) and its internal boundary.
pub fn annulus_domain(n: i64, c: f64) -> (PointSet, PointSet) {
    let inner = ball(Point::ORIGIN, n as f64);
    let a = ball(Point::ORIGIN, c * n as f64).difference(&inner).union(&inner.internal_boundary());
    let boundary = a.internal_boundary();
    (a, boundary)
}

fn annulus_system(n: i64, c: f64, choice: BackendChoice) -> Result<AbsorbingSystem> {
    let (a, boundary) = annulus_domain(n, c);
    AbsorbingSystem::within(&a, &boundary, Topology::Plane, &Srw, choice)
}

/// A start point for the scan: ‖x‖ = radius·n at angle `angle`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct XChoice {
    pub radius: f64,
    pub angle: f64,
}

impl XChoice {
    pub fn point(&self, n: i64) -> Point {
        let r = self.radius * n as f64;
        Point::new((r * self.angle.cos()).round() as i64, (r * self.angle.sin()).round() as i64)
    }
}

/// Mid-annulus starts on the axis and on the diagonal.
pub fn default_x_choices(c: f64, eps: f64) -> Vec<XChoice> {
    let mid = 0.5 * ((1.0 + 2.0 * eps) + c * (1.0 - eps));
    vec![XChoice { radius: mid, angle: 0.0 }, XChoice { radius: mid, angle: PI / 4.0 }]
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HolderPair {
    pub x: Point,
    pub y: Point,
    pub z: Point,
    /// ‖y − z‖ / n.
    pub distance: f64,
    /// H(x,y)/hm(y) − H(x,z)/hm(z), signed.
    pub difference: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HolderBin {
    pub lo: f64,
    pub hi: f64,
    pub pairs: usize,
    /// Largest |difference| in the bin.
    pub max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderScale {
    pub n: i64,
    pub r_far: f64,
    pub xs: Vec<Point>,
    #[serde(skip)]
    pub pairs: Vec<HolderPair>,
    pub bins: Vec<HolderBin>,
    /// Fit of ln(max |difference|) on ln(distance) over non-empty bins.
    pub fit: LinearFit,
    /// The same fit with hm from the far circle at r_far / 2.
    pub fit_half_far: LinearFit,
    /// Largest relative change of H/hm between the two far radii.
    pub far_sensitivity: f64,
    /// Cauchy L¹ certificate of the far-circle harmonic measure.
    pub hm_cauchy_l1: Option<f64>,
    /// max |D(y,y)| and max |D(y,z) + D(z,y)| over all x, y, z.
    pub diagonal_max: f64,
    pub antisymmetry_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderScanResult {
    pub ns: Vec<i64>,
    pub c: f64,
    pub eps: f64,
    pub x_choices: Vec<XChoice>,
    pub scales: Vec<HolderScale>,
    /// Fit over the bins of all scales together.
    pub pooled: LinearFit,
}

impl HolderScanResult {
    /// Fitted exponent β̂ (pooled).
    pub fn beta(&self) -> f64 {
        self.pooled.slope
    }

    /// Fitted constant Ĉ (pooled).
    pub fn constant(&self) -> f64 {
        self.pooled.intercept.exp()
    }

    pub fn write_pairs_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=holder_pairs/1")?;
        writeln!(w, "n,x_x,x_y,y_x,y_y,z_x,z_y,distance,difference")?;
        for s in &self.scales {
            for p in &s.pairs {
                writeln!(w, "{},{},{},{},{},{},{},{:.10e},{:.10e}", s.n, p.x.x, p.x.y, p.y.x, p.y.y, p.z.x, p.z.y, p.distance, p.difference)?;
            }
        }
        Ok(())
    }

    pub fn write_bins_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=holder_bins/1")?;
        writeln!(w, "n,lo,hi,pairs,max")?;
        for s in &self.scales {
            for b in &s.bins {
                writeln!(w, "{},{:.10e},{:.10e},{},{:.10e}", s.n, b.lo, b.hi, b.pairs, b.max)?;
            }
        }
        Ok(())
    }
}

/// Number of logarithmic distance bins between 1/n and 2.
pub const HOLDER_BINS: usize = 12;

/// ‖y−z‖/n of 0 and differences of exactly 0 are kept in `pairs` but never
/// binned.
fn bin_pairs(pairs: &[HolderPair], n: i64) -> Vec<HolderBin> {
    let lo = (1.0 / n as f64).ln();
    let hi = (2.0f64 + 1.0 / n as f64).ln();
    let w = (hi - lo) / HOLDER_BINS as f64;
    let mut bins: Vec<HolderBin> = (0..HOLDER_BINS)
        .map(|i| HolderBin { lo: (lo + w * i as f64).exp(), hi: (lo + w * (i + 1) as f64).exp(), pairs: 0, max: 0.0 })
        .collect();
    for p in pairs {
        if p.distance <= 0.0 {
            continue;
        }
        let i = (((p.distance.ln() - lo) / w).floor().max(0.0) as usize).min(HOLDER_BINS - 1);
        bins[i].pairs += 1;
        bins[i].max = bins[i].max.max(p.difference.abs());
    }
    bins.retain(|b| b.pairs > 0);
    bins
}

fn bin_fit(bins: &[HolderBin]) -> LinearFit {
    let used: Vec<&HolderBin> = bins.iter().filter(|b| b.max > 0.0).collect();
    let x: Vec<f64> = used.iter().map(|b| (b.lo * b.hi).sqrt().ln()).collect();
    let y: Vec<f64> = used.iter().map(|b| b.max.ln()).collect();
    linear_fit(&x, &y)
}

fn normalised(rows: &[Vec<f64>], sys: &AbsorbingSystem, bnd: &PointSet, hm: &HarmonicMeasure) -> Result<Vec<Vec<f64>>> {
    let idx: Vec<usize> = bnd.iter().map(|y| sys.absorbing().index_of(*y).expect("∂B(n) ⊂ ∂A_n")).collect();
    rows.iter()
        .map(|row| {
            bnd.iter()
                .zip(&idx)
                .map(|(y, &j)| {
                    let h = hm.weight(*y);
                    if h > 0.0 {
                        Ok(row[j] / h)
                    } else {
                        domain(format!("harmonic measure vanishes at {y}"))
                    }
                })
                .collect()
        })
        .collect()
}

/// Differences H(x,y)/hm(y) − H(x,z)/hm(z) over all pairs of ∂B(n), binned
/// by ‖y−z‖/n and fitted on a log-log scale.
pub fn holder_scan(table: &PotentialTable, ns: &[i64], c: f64, eps: f64, xs: &[XChoice]) -> Result<HolderScanResult> {
    if !(eps > 0.0 && c * (1.0 - eps) > 1.0 + 2.0 * eps) {
        return domain("need ε > 0 and c(1−ε) > 1+2ε");
    }
    let mut scales = Vec::with_capacity(ns.len());
    for &n in ns {
        if n < 2 {
            return domain("holder_scan needs n ≥ 2");
        }
        let points: Vec<Point> = xs.iter().map(|x| x.point(n)).collect();
        for p in &points {
            let r = p.norm();
            if !(r >= (1.0 + 2.0 * eps) * n as f64 && r < c * (1.0 - eps) * n as f64) {
                return domain(format!("x = {p} is outside B(c(1−ε)n) \\ B((1+2ε)n)"));
            }
        }
        let sys = annulus_system(n, c, BackendChoice::Auto)?;
        let rows = sys.poisson_kernel_rows(&points)?;
        let disk = ball(Point::ORIGIN, n as f64);
        let bnd = disk.internal_boundary();
        let r_far = 64.0 * n as f64;
        let hm = harmonic_measure(table, &disk, HmMethod::FarCircle { r_far })?;
        let hm_half = harmonic_measure(table, &disk, HmMethod::FarCircle { r_far: r_far / 2.0 })?;
        let f = normalised(&rows, &sys, &bnd, &hm)?;
        let f_half = normalised(&rows, &sys, &bnd, &hm_half)?;
        let far_sensitivity = f
            .iter()
            .flatten()
            .zip(f_half.iter().flatten())
            .map(|(a, b)| ((a - b) / a).abs())
            .fold(0.0, f64::max);
        let collect = |f: &[Vec<f64>]| {
            let mut pairs = Vec::new();
            for (xi, fx) in f.iter().enumerate() {
                for i in 0..bnd.len() {
                    for j in (i + 1)..bnd.len() {
                        let (y, z) = (bnd.get(i), bnd.get(j));
                        pairs.push(HolderPair { x: points[xi], y, z, distance: y.dist(z) / n as f64, difference: fx[i] - fx[j] });
                    }
                }
            }
            pairs
        };
        let pairs = collect(&f);
        let mut diagonal_max: f64 = 0.0;
        let mut antisymmetry_max: f64 = 0.0;
        for fx in &f {
            for i in 0..fx.len() {
                diagonal_max = diagonal_max.max((fx[i] - fx[i]).abs());
                for j in 0..fx.len() {
                    antisymmetry_max = antisymmetry_max.max(((fx[i] - fx[j]) + (fx[j] - fx[i])).abs());
                }
            }
        }
        let bins = bin_pairs(&pairs, n);
        let fit = bin_fit(&bins);
        let fit_half_far = bin_fit(&bin_pairs(&collect(&f_half), n));
        scales.push(HolderScale {
            n,
            r_far,
            xs: points,
            pairs,
            bins,
            fit,
            fit_half_far,
            far_sensitivity,
            hm_cauchy_l1: hm.certificate.cauchy_l1,
            diagonal_max,
            antisymmetry_max,
        });
    }
    let all: Vec<HolderBin> = scales.iter().flat_map(|s| s.bins.iter().copied()).collect();
    let pooled = bin_fit(&all);
    Ok(HolderScanResult { ns: ns.to_vec(), c, eps, x_choices: xs.to_vec(), scales, pooled })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReversibilityReport {
    pub n: i64,
    pub c: f64,
    pub xs: Vec<Point>,
    /// Boundary points u checked per x.
    pub boundary_points: usize,
    /// max over (x,u) of |H(x,u) − ¼ Σ_{v∼u interior} G(v,x)|.
    pub max_residual: f64,
    /// Largest H(x,u) seen, for scale.
    pub max_kernel: f64,
    /// Boundary points without interior neighbours, where both sides are 0.
    pub isolated: usize,
    pub isolated_max: f64,
}

/// Start points on three rings and eight rays of the annulus.
pub fn reversibility_points(n: i64, c: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for f in [0.25, 0.5, 0.75] {
        let r = n as f64 * (1.0 + f * (c - 1.0));
        for k in 0..8 {
            let t = PI * k as f64 / 4.0 + 0.1;
            out.push(Point::new((r * t.cos()).round() as i64, (r * t.sin()).round() as i64));
        }
    }
    out
}

/// H_{A_n}(x,u) from a sparse LU factorisation against ¼ Σ G_{A_n}(v,x) from
/// multigrid-preconditioned CG.
pub fn reversibility_check(n: i64, c: f64) -> Result<ReversibilityReport> {
    if !(n >= 2 && c > 1.0) {
        return domain("reversibility_check needs n ≥ 2 and c > 1");
    }
    let direct = annulus_system(n, c, BackendChoice::Direct)?;
    let iterative = annulus_system(n, c, BackendChoice::Iterative)?;
    let xs: Vec<Point> = reversibility_points(n, c).into_iter().filter(|x| direct.interior().contains(*x)).collect();
    let rows = direct.poisson_kernel_rows(&xs)?;
    let interior = iterative.interior();
    let mut max_residual: f64 = 0.0;
    let mut max_kernel: f64 = 0.0;
    let mut isolated = 0;
    let mut isolated_max: f64 = 0.0;
    for (x, row) in xs.iter().zip(&rows) {
        let g = iterative.green_column(*x)?;
        for (j, u) in direct.absorbing().iter().enumerate() {
            let nb: Vec<usize> = u.neighbors().iter().filter_map(|v| interior.index_of(*v)).collect();
            let rhs: f64 = 0.25 * nb.iter().map(|&i| g[i]).sum::<f64>();
            if nb.is_empty() {
                isolated += 1;
                isolated_max = isolated_max.max(row[j].abs().max(rhs.abs()));
            }
            max_residual = max_residual.max((row[j] - rhs).abs());
            max_kernel = max_kernel.max(row[j]);
        }
    }
    Ok(ReversibilityReport {
        n,
        c,
        boundary_points: direct.absorbing().len(),
        xs,
        max_residual,
        max_kernel,
        isolated: isolated / rows.len().max(1),
        isolated_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversibility_small() {
        let r = reversibility_check(8, 3.0).unwrap();
        assert!(r.max_residual < 1e-10, "{r:?}");
        assert!(r.max_kernel > 0.0);
        assert_eq!(r.isolated_max, 0.0);
    }

    #[test]
    fn holder_pairs_vanish_on_the_diagonal() {
        let t = PotentialTable::shared(256).unwrap();
        let r = holder_scan(&t, &[10], 4.0, 0.1, &default_x_choices(4.0, 0.1)).unwrap();
        let s = &r.scales[0];
        assert!(s.pairs.iter().all(|p| p.y != p.z));
        assert_eq!(s.diagonal_max, 0.0);
        assert_eq!(s.antisymmetry_max, 0.0);
        assert!(s.fit.slope > 0.0);
    }
}
