//! Harmonic measures, entrance laws and capacities in the infinite plane,
//! for simple random walk and for the conditioned walk Ŝ.
//!
//! For finite A and z ∉ A the entrance law h = H_A(z, ·), supported on ∂A,
//! is the unique solution of
//!
//! ```text
//! Σ_y h(y) a(y − w) + g = a(z − w)   for w ∈ ∂A,      Σ_y h(y) = 1,
//! ```
//!
//! and the harmonic measure solves the same bordered system with a zero
//! right-hand side, its multiplier being −cap(A). Both are exact up to the
//! accuracy of the potential kernel, with no truncation of the plane.
//!
//! Ŝ quantities follow from the h-transform with h = a: for z ∉ A ∪ {0},
//! P_z[Ŝ enters A at y] = a(y) H_{A∪{0}}(z, y) / a(z).

use std::io::Write;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::lattice::{ball, ball_boundary, Point, PointSet, Torus};
use crate::potential::{a_asymptotic_norm, PotentialTable, Regime};
use crate::solver::{AbsorbingSystem, BackendChoice, ExitKernel, HatWeights, StepWeights, Topology};

// Bound on |a − a_asymptotic|·‖x‖² used for error bookkeeping.
const ASYMPTOTIC_C: f64 = 0.06;

/// Factorised bordered potential-kernel system of a finite set.
pub struct PlaneHitting<'t> {
    table: &'t PotentialTable,
    set: PointSet,
    support: PointSet,
    lu: PartialPivLu<f64>,
    kernel_error: f64,
}

impl<'t> PlaneHitting<'t> {
    pub fn new(table: &'t PotentialTable, set: &PointSet) -> Result<Self> {
        if set.is_empty() {
            return domain("hitting system of an empty set");
        }
        let support = set.internal_boundary();
        let m = support.len();
        let mut k = Mat::<f64>::zeros(m + 1, m + 1);
        let mut kernel_error: f64 = 0.0;
        let pts = support.points();
        for i in 0..m {
            for j in i..m {
                let d = pts[j] - pts[i];
                let l = table.lookup(d);
                if l.regime == Regime::Asymptotic {
                    kernel_error = kernel_error.max(ASYMPTOTIC_C / d.norm2() as f64);
                }
                k[(i, j)] = l.value;
                k[(j, i)] = l.value;
            }
            k[(i, m)] = 1.0;
            k[(m, i)] = 1.0;
        }
        let lu = k.partial_piv_lu();
        Ok(PlaneHitting { table, set: set.clone(), support, lu, kernel_error })
    }

    pub fn set(&self) -> &PointSet {
        &self.set
    }

    /// ∂A, the support of every entrance law.
    pub fn support(&self) -> &PointSet {
        &self.support
    }

    pub fn table(&self) -> &'t PotentialTable {
        self.table
    }

    /// Largest error bound of a kernel entry taken from the asymptotic
    /// expansion (0 when every entry came from the table).
    pub fn kernel_error(&self) -> f64 {
        self.kernel_error
    }

    fn solve_columns(&self, cols: &[Vec<f64>]) -> Vec<(Vec<f64>, f64)> {
        let m = self.support.len();
        let mut out = Vec::with_capacity(cols.len());
        for block in cols.chunks(256) {
            let mut rhs = Mat::<f64>::zeros(m + 1, block.len());
            for (c, col) in block.iter().enumerate() {
                for i in 0..m {
                    rhs[(i, c)] = col[i];
                }
                rhs[(m, c)] = 1.0;
            }
            let sol = self.lu.solve(&rhs);
            for c in 0..block.len() {
                out.push(((0..m).map(|i| sol[(i, c)]).collect(), sol[(m, c)]));
            }
        }
        out
    }

    /// Harmonic measure on ∂A and the capacity −g.
    pub fn harmonic_measure(&self) -> (Vec<f64>, f64) {
        let (h, g) = self.solve_columns(&[vec![0.0; self.support.len()]]).pop().unwrap();
        (h, -g)
    }

    /// H_A(z, ·) on ∂A for each z ∉ A.
    pub fn entrance_laws(&self, zs: &[Point]) -> Result<Vec<Vec<f64>>> {
        let mut cols = Vec::with_capacity(zs.len());
        for &z in zs {
            if self.set.contains(z) {
                return domain(format!("entrance law requested from {z}, which lies in the set"));
            }
            cols.push(self.support.iter().map(|&w| self.table.a(z - w)).collect());
        }
        Ok(self.solve_columns(&cols).into_iter().map(|(h, _)| h).collect())
    }

    pub fn entrance_law(&self, z: Point) -> Result<Vec<f64>> {
        Ok(self.entrance_laws(&[z])?.pop().unwrap())
    }

    /// Entrance law averaged over the start uniform on ∂B(center, r_far).
    pub fn far_circle(&self, center: Point, r_far: f64) -> Vec<f64> {
        let ring = ball_boundary(center, r_far);
        let inv = 1.0 / ring.len() as f64;
        let rhs: Vec<f64> = self
            .support
            .iter()
            .map(|&w| ring.iter().map(|&z| self.table.a(z - w)).sum::<f64>() * inv)
            .collect();
        self.solve_columns(&[rhs]).pop().unwrap().0
    }
}

/// How the harmonic measure is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum HmMethod {
    /// The limit of the entrance law from infinity.
    Limit,
    /// Entrance law from the uniform start on ∂B(c, r_far), c the lattice
    /// point nearest the centroid of A.
    FarCircle { r_far: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct HmCertificate {
    pub method: HmMethod,
    /// diam(A) / r_far, the order of the start-position bias.
    pub order_bound: f64,
    /// L¹ distance to the same computation at 2·r_far.
    pub cauchy_l1: Option<f64>,
    /// Bound on potential-kernel errors entering the solve.
    pub kernel_error: f64,
}

#[derive(Clone, Debug)]
pub struct HarmonicMeasure {
    pub support: PointSet,
    pub weights: Vec<f64>,
    pub certificate: HmCertificate,
}

impl HarmonicMeasure {
    pub fn weight(&self, x: Point) -> f64 {
        self.support.index_of(x).map_or(0.0, |i| self.weights[i])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=harmonic_measure/1")?;
        writeln!(w, "x,y,hm")?;
        for (p, v) in self.support.iter().zip(&self.weights) {
            writeln!(w, "{},{},{:.17e}", p.x, p.y, v)?;
        }
        Ok(())
    }
}

/// Harmonic measure of A for simple random walk.
pub fn harmonic_measure(table: &PotentialTable, set: &PointSet, method: HmMethod) -> Result<HarmonicMeasure> {
    let ph = PlaneHitting::new(table, set)?;
    harmonic_measure_with(&ph, method)
}

pub fn harmonic_measure_with(ph: &PlaneHitting<'_>, method: HmMethod) -> Result<HarmonicMeasure> {
    let (weights, certificate) = match method {
        HmMethod::Limit => {
            let (h, _) = ph.harmonic_measure();
            (h, HmCertificate { method, order_bound: 0.0, cauchy_l1: None, kernel_error: ph.kernel_error() })
        }
        HmMethod::FarCircle { r_far } => {
            let diam = ph.set().diameter().max(1.0);
            if diam > r_far / 16.0 {
                return domain(format!("far circle radius {r_far} is below 16·diam(A) = {}", 16.0 * diam));
            }
            let c = ph.set().center().unwrap();
            let h = ph.far_circle(c, r_far);
            let h2 = ph.far_circle(c, 2.0 * r_far);
            let cauchy: f64 = h.iter().zip(&h2).map(|(a, b)| (a - b).abs()).sum();
            (
                h,
                HmCertificate {
                    method,
                    order_bound: diam / r_far,
                    cauchy_l1: Some(cauchy),
                    kernel_error: ph.kernel_error().max(ASYMPTOTIC_C / (r_far * r_far / 4.0)),
                },
            )
        }
    };
    Ok(HarmonicMeasure { support: ph.support().clone(), weights, certificate })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Capacity {
    /// The constant Σ_y hm(y) a(y − w), w ∈ A, from the bordered solve.
    pub value: f64,
    /// Σ_y hm(y) a(y − w₀) with w₀ the member closest to the origin
    /// (Σ_x a(x) hm(x) when 0 ∈ A).
    pub sum_check: f64,
    pub kernel_error: f64,
}

/// Capacity of a finite set; translation invariant.
pub fn capacity(table: &PotentialTable, set: &PointSet) -> Result<Capacity> {
    let ph = PlaneHitting::new(table, set)?;
    let (hm, cap) = ph.harmonic_measure();
    let w0 = set.closest_to_origin().unwrap();
    let sum_check = ph.support().iter().zip(&hm).map(|(y, h)| h * table.a(*y - w0)).sum();
    Ok(Capacity { value: cap, sum_check, kernel_error: ph.kernel_error() })
}

/// Hitting law of A for Ŝ.
pub struct HatHitting<'t> {
    plane: PlaneHitting<'t>,
    target: PointSet,
    support: PointSet,
    // index into `support` for each point of the plane support (None for 0)
    map: Vec<Option<usize>>,
    a_plane: Vec<f64>,
}

/// Ŝ hit probability of the target from a point and the conditional law of
/// the entrance point.
#[derive(Clone, Debug)]
pub struct HatEntrance {
    pub hit: f64,
    pub law: Vec<f64>,
}

impl<'t> HatHitting<'t> {
    pub fn new(table: &'t PotentialTable, target: &PointSet) -> Result<Self> {
        if target.is_empty() || (target.len() == 1 && target.contains(Point::ORIGIN)) {
            return domain("Ŝ target must contain a point other than the origin");
        }
        let with_origin = target.with_point(Point::ORIGIN);
        let plane = PlaneHitting::new(table, &with_origin)?;
        let support = PointSet::new(plane.support().iter().copied().filter(|p| *p != Point::ORIGIN));
        let map = plane.support().iter().map(|p| support.index_of(*p)).collect();
        let a_plane = plane.support().iter().map(|p| table.a(*p)).collect();
        Ok(HatHitting { plane, target: target.clone(), support, map, a_plane })
    }

    pub fn target(&self) -> &PointSet {
        &self.target
    }

    /// Points of A that Ŝ can enter first.
    pub fn support(&self) -> &PointSet {
        &self.support
    }

    pub fn table(&self) -> &'t PotentialTable {
        self.plane.table()
    }

    pub fn kernel_error(&self) -> f64 {
        self.plane.kernel_error()
    }

    pub fn entrances(&self, zs: &[Point]) -> Result<Vec<HatEntrance>> {
        if zs.contains(&Point::ORIGIN) {
            return domain("Ŝ is not defined from the origin");
        }
        let laws = self.plane.entrance_laws(zs)?;
        Ok(zs
            .iter()
            .zip(laws)
            .map(|(&z, h)| {
                let az = self.table().a(z);
                let mut law = vec![0.0; self.support.len()];
                let mut hit = 0.0;
                for (k, hv) in h.iter().enumerate() {
                    if let Some(i) = self.map[k] {
                        let w = (self.a_plane[k] * hv / az).max(0.0);
                        law[i] = w;
                        hit += w;
                    }
                }
                if hit > 0.0 {
                    law.iter_mut().for_each(|v| *v /= hit);
                }
                HatEntrance { hit: hit.min(1.0), law }
            })
            .collect())
    }

    pub fn entrance(&self, z: Point) -> Result<HatEntrance> {
        Ok(self.entrances(&[z])?.pop().unwrap())
    }

    pub fn hit_probability(&self, z: Point) -> Result<f64> {
        Ok(self.entrance(z)?.hit)
    }
}

/// Equilibrium and harmonic measure of A for Ŝ.
#[derive(Clone, Debug)]
pub struct HatEquilibrium {
    pub support: PointSet,
    /// P_x[Ŝ_k ∉ A for all k ≥ 1].
    pub escape: Vec<f64>,
    /// ê_A(x) = a²(x) · escape(x).
    pub e_hat: Vec<f64>,
    /// ê_A normalised.
    pub hm_hat: Vec<f64>,
    /// Σ ê_A, which equals cap(A ∪ {0}).
    pub total: f64,
}

impl HatEquilibrium {
    pub fn weight(&self, x: Point) -> f64 {
        self.support.index_of(x).map_or(0.0, |i| self.hm_hat[i])
    }
}

/// ê_A from one Ŝ step followed by the exact plane hitting law.
pub fn hat_equilibrium(hitting: &HatHitting<'_>) -> Result<HatEquilibrium> {
    let table = hitting.table();
    let target = hitting.target();
    let support = hitting.support().clone();
    let mut outside: Vec<Point> = support
        .iter()
        .flat_map(|p| p.neighbors())
        .filter(|q| !target.contains(*q) && *q != Point::ORIGIN)
        .collect();
    outside.sort_unstable();
    outside.dedup();
    let hits: Vec<f64> = hitting.entrances(&outside)?.into_iter().map(|e| e.hit).collect();
    let mut escape = Vec::with_capacity(support.len());
    for &x in support.iter() {
        if x == Point::ORIGIN {
            escape.push(0.0);
            continue;
        }
        let nb = x.neighbors();
        let pr = crate::solver::hat_probs(table, &nb);
        let mut ret = 0.0;
        for k in 0..4 {
            let q = if target.contains(nb[k]) {
                1.0
            } else if nb[k] == Point::ORIGIN {
                0.0
            } else {
                hits[outside.binary_search(&nb[k]).unwrap()]
            };
            ret += pr[k] * q;
        }
        escape.push((1.0 - ret).max(0.0));
    }
    finish_equilibrium(table, support, escape)
}

fn finish_equilibrium(table: &PotentialTable, support: PointSet, escape: Vec<f64>) -> Result<HatEquilibrium> {
    let e_hat: Vec<f64> = support.iter().zip(&escape).map(|(p, e)| table.a(*p).powi(2) * e).collect();
    let total: f64 = e_hat.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numeric { what: "Ŝ equilibrium measure has zero mass".into(), residual: total });
    }
    let hm_hat = e_hat.iter().map(|v| v / total).collect();
    Ok(HatEquilibrium { support, escape, e_hat, hm_hat, total })
}

/// Ŝ escape probabilities on the support of `hitting`, computed by an exact
/// lattice solve of Ŝ inside B(0, rho) followed by the exact return law from
/// each exit point. Independent of the one-step route in
/// [`hat_equilibrium`] except for the return law at the exits.
pub fn hat_escape_lattice(hitting: &HatHitting<'_>, rho: f64) -> Result<HatEquilibrium> {
    let table = hitting.table();
    let target = hitting.target();
    if target.max_norm() + 2.0 > rho {
        return domain("guard ball must contain the target with a margin of two");
    }
    if rho + 1.0 > table.exact_radius() {
        return domain("guard ball exceeds the exact range of the potential table");
    }
    let guard = ball(Point::ORIGIN, rho);
    let exits = guard.external_boundary();
    let interior = guard.difference(target);
    let absorbing = target.union(&exits);
    let hat = HatWeights::new(table);
    let sys = AbsorbingSystem::new(interior, absorbing, Topology::Plane, &hat, BackendChoice::Auto)?;
    let ret: Vec<f64> = hitting.entrances(exits.points())?.into_iter().map(|e| e.hit).collect();
    let g: Vec<f64> = sys
        .absorbing()
        .iter()
        .map(|p| if target.contains(*p) { 1.0 } else { ret[exits.index_of(*p).unwrap()] })
        .collect();
    let u = sys.harmonic_extension(&g)?;
    let support = hitting.support().clone();
    let mut escape = Vec::with_capacity(support.len());
    for &x in support.iter() {
        let r = sys.first_step_average(x, &hat, &u, &g)?;
        escape.push((1.0 - r).max(0.0));
    }
    finish_equilibrium(table, support, escape)
}

/// φ̂(z, ·): where Ŝ from z next enters A, with escape replaced by a fresh
/// start from ĥm_A.
pub fn hat_entrance_rows(hitting: &HatHitting<'_>, eq: &HatEquilibrium, zs: &[Point]) -> Result<Vec<Vec<f64>>> {
    Ok(hitting
        .entrances(zs)?
        .into_iter()
        .map(|e| e.law.iter().zip(&eq.hm_hat).map(|(l, h)| e.hit * l + (1.0 - e.hit) * h).collect())
        .collect())
}

/// Relative harmonic measure hm_A^{A'}.
#[derive(Clone, Debug)]
pub struct RelativeHm {
    pub support: PointSet,
    /// P_y[τ₁(∂A') < τ₁(A)].
    pub escape: Vec<f64>,
    pub weights: Vec<f64>,
}

fn check_nested(a: &PointSet, a_outer: &PointSet) -> Result<PointSet> {
    let outer_boundary = a_outer.internal_boundary();
    if !a.is_subset(a_outer) || a.iter().any(|p| outer_boundary.contains(*p)) {
        return domain("inner set must lie in the interior of the outer set");
    }
    Ok(outer_boundary)
}

/// hm_A^{A'}(y) ∝ P_y[τ₁(∂A') < τ₁(A)] for y ∈ ∂A, for the given walk. Sets
/// are planar; on a torus they must fit without wrapping.
pub fn relative_hm(a: &PointSet, a_outer: &PointSet, weights: &dyn StepWeights) -> Result<RelativeHm> {
    let outer_boundary = check_nested(a, a_outer)?;
    let interior = a_outer.difference(a).difference(&outer_boundary);
    let absorbing = a.union(&outer_boundary);
    let sys = AbsorbingSystem::new(interior, absorbing, Topology::Plane, weights, BackendChoice::Auto)?;
    let g: Vec<f64> = sys.absorbing().iter().map(|p| if outer_boundary.contains(*p) { 1.0 } else { 0.0 }).collect();
    let u = sys.harmonic_extension(&g)?;
    let support = a.internal_boundary();
    let mut escape = Vec::with_capacity(support.len());
    for &y in support.iter() {
        escape.push(sys.first_step_average(y, weights, &u, &g)?);
    }
    let total: f64 = escape.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numeric { what: "relative harmonic measure has zero mass".into(), residual: total });
    }
    let w = escape.iter().map(|e| e / total).collect();
    Ok(RelativeHm { support, escape, weights: w })
}

/// P_y[X_{τ₁(∂A')} = z] for y ∈ ∂A: where an excursion started on ∂A first
/// reaches ∂A'.
pub fn excursion_exit_kernel(a: &PointSet, a_outer: &PointSet, weights: &dyn StepWeights) -> Result<ExitKernel> {
    let outer_boundary = check_nested(a, a_outer)?;
    let interior = a_outer.difference(&outer_boundary);
    let sys = AbsorbingSystem::new(interior, outer_boundary, Topology::Plane, weights, BackendChoice::Auto)?;
    let starts = a.internal_boundary();
    sys.exit_kernel(starts.points(), weights)
}

/// Torus entrance law φ(z, ·) = P_z[X_{τ(A)} = ·] on ∂A for each start.
/// `a` is given in torus coordinates and must not wrap.
pub fn torus_entrance_kernel(torus: Torus, a: &PointSet, starts: &[Point]) -> Result<ExitKernel> {
    if !torus.fits(a) || a.iter().any(|p| torus.wrap(*p) != *p) {
        return domain("set must lie inside the torus window without wrapping");
    }
    let boundary = a.internal_boundary();
    let interior = torus.all_points().difference(a);
    let sys = AbsorbingSystem::new(interior, boundary, Topology::Torus(torus), &crate::solver::Srw, BackendChoice::Direct)?;
    sys.exit_kernel(starts, &crate::solver::Srw)
}

/// A closed-form value with the order of its neglected terms.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FormulaValue {
    pub value: f64,
    /// Sum of the symbolic orders of the dropped terms.
    pub error_order: f64,
}

/// P_x[Ŝ hits B(y, r)] ≈ a(y)(a(y) + a(x) − a(x − y)) / (a(x)(2a(y) − a(r))).
pub fn hat_hit_prob_formula(table: &PotentialTable, x: Point, y: Point, r: f64) -> Result<FormulaValue> {
    let (nx, ny) = (x.norm(), y.norm());
    if !(r >= 1.0 && ny > 2.0 * r && (x - y).norm() > r + 1.0 && nx >= 1.0) {
        return domain("formula needs ‖y‖ > 2r, x outside B(y, r + 1) and x ≠ 0");
    }
    let (ay, ax, axy) = (table.a(y), table.a(x), table.a(x - y));
    let value = ay * (ay + ax - axy) / (ax * (2.0 * ay - a_asymptotic_norm(r)));
    Ok(FormulaValue { value, error_order: 1.0 / r + r / ny })
}

/// cap(B(y, r) ∪ {0}) ≈ a(y)² / (2a(y) − a(r)).
pub fn distant_ball_capacity(table: &PotentialTable, y: Point, r: f64) -> Result<FormulaValue> {
    let ny = y.norm();
    if !(r >= 1.0 && ny > 2.0 * r) {
        return domain("formula needs ‖y‖ > 2r and r ≥ 1");
    }
    let ay = table.a(y);
    let value = ay * ay / (2.0 * ay - a_asymptotic_norm(r));
    Ok(FormulaValue { value, error_order: 1.0 / r + r / ny })
}

/// P_x[τ₁(∂B(n + k)) < τ₁(B(n))] ≈ hm_{B(n)}(x) / ((2/π) ln(1 + k/n)).
pub fn escape_to_radius_formula(hm_x: f64, n: f64, k: f64) -> FormulaValue {
    let value = hm_x / (std::f64::consts::FRAC_2_PI * (1.0 + k / n).ln());
    FormulaValue { value, error_order: 1.0 / n }
}

/// Exact P_x[τ₁(∂B(n + k)) < τ₁(B(n))] for every x ∈ ∂B(n).
pub fn escape_to_radius_exact(n: f64, k: f64) -> Result<(PointSet, Vec<f64>)> {
    if !(n >= 1.0 && k >= 1.0) {
        return domain("escape_to_radius needs n ≥ 1 and k ≥ 1");
    }
    let inner = ball(Point::ORIGIN, n);
    let outer = ball(Point::ORIGIN, n + k);
    let far = outer.internal_boundary();
    let interior = outer.difference(&inner).difference(&far);
    let absorbing = inner.union(&far);
    let sys = AbsorbingSystem::new(interior, absorbing, Topology::Plane, &crate::solver::Srw, BackendChoice::Auto)?;
    let g: Vec<f64> = sys.absorbing().iter().map(|p| if far.contains(*p) { 1.0 } else { 0.0 }).collect();
    let u = sys.harmonic_extension(&g)?;
    let starts = inner.internal_boundary();
    let mut out = Vec::with_capacity(starts.len());
    for &x in starts.iter() {
        out.push(sys.first_step_average(x, &crate::solver::Srw, &u, &g)?);
    }
    Ok((starts, out))
}

/// P_x[τ(∂B(R)) < τ(B(r))] ≈ (ln‖x‖ − ln r) / (ln R − ln r).
pub fn annulus_escape_formula(x: Point, r: f64, big_r: f64) -> FormulaValue {
    let value = (x.norm().ln() - r.ln()) / (big_r.ln() - r.ln());
    FormulaValue { value, error_order: 1.0 / (r * (big_r.ln() - r.ln())) }
}

/// Exact P_x[τ(∂B(R)) < τ(B(r))] for each x in the open annulus.
pub fn annulus_escape_exact(r: f64, big_r: f64, xs: &[Point]) -> Result<Vec<f64>> {
    let inner = ball(Point::ORIGIN, r);
    let outer = ball(Point::ORIGIN, big_r);
    let far = outer.internal_boundary();
    let interior = outer.difference(&inner).difference(&far);
    let absorbing = inner.union(&far);
    let sys = AbsorbingSystem::new(interior, absorbing, Topology::Plane, &crate::solver::Srw, BackendChoice::Auto)?;
    let u = sys.hitting_probability(&far)?;
    xs.iter()
        .map(|x| {
            if let Some(i) = sys.interior().index_of(*x) {
                Ok(u[i])
            } else if far.contains(*x) {
                Ok(1.0)
            } else if inner.contains(*x) {
                Ok(0.0)
            } else {
                domain(format!("{x} is outside B(R)"))
            }
        })
        .collect()
}
