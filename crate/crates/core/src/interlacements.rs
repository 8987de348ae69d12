//! Two-dimensional random interlacements restricted to a finite window.
//!
//! RI(α) seen from a window W is a Poisson(πα·cap(W ∪ {0})) number of
//! independent Ŝ-trajectories started from ĥm_W. Each trajectory carries a
//! label uniform on [0, πα_max]; the interlacement at level α ≤ α_max keeps
//! the trajectories with label ≤ πα, so all levels are coupled and the vacant
//! sets are nested by construction.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::harmonic::{capacity, excursion_exit_kernel, hat_equilibrium, HatEquilibrium, HatHitting};
use crate::lattice::{ball, Point, PointSet};
use crate::potential::{kappa, PotentialTable};
use crate::rng::{poisson, stream_for, tag};
use crate::solver::HatWeights;
use crate::stats::Proportion;
use crate::walks::{hat_trajectory, HatGuard, STEP_CAP};

/// Distance from the window to the edge of the default guard region.
pub const GUARD_MARGIN: f64 = 4.0;

/// Window sampler for RI at levels up to some α_max.
pub struct RiSampler<'t> {
    table: &'t PotentialTable,
    window: PointSet,
    guard: HatGuard<'t>,
    eq: HatEquilibrium,
    start_cum: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RiCertificate {
    /// Error bound of potential-kernel entries taken from the expansion.
    pub kernel_error: f64,
    /// Largest return probability from the guard boundary (returns are
    /// sampled exactly, so this is informational).
    pub max_return: f64,
    pub guard_points: usize,
}

/// One trajectory's label, start, and the window sites it visits.
#[derive(Clone, Debug)]
pub struct RiTrajectory {
    pub label: f64,
    pub start: Point,
    /// Sorted indices into the window.
    pub visits: Vec<u32>,
    pub steps: u64,
}

/// One sample of the interlacement seen from the window.
#[derive(Clone, Debug)]
pub struct RiTrace {
    pub alpha_max: f64,
    pub window_len: usize,
    pub trajectories: Vec<RiTrajectory>,
}

impl RiTrace {
    fn level(&self, alpha: f64) -> impl Iterator<Item = &RiTrajectory> {
        assert!(alpha <= self.alpha_max, "level above the sampled maximum");
        let cut = std::f64::consts::PI * alpha;
        self.trajectories.iter().filter(move |t| t.label <= cut)
    }

    /// Number of trajectories at level α.
    pub fn count(&self, alpha: f64) -> usize {
        self.level(alpha).count()
    }

    /// Occupation flags over the window at level α.
    pub fn occupied(&self, alpha: f64) -> Vec<bool> {
        let mut occ = vec![false; self.window_len];
        for t in self.level(alpha) {
            for &i in &t.visits {
                occ[i as usize] = true;
            }
        }
        occ
    }

    pub fn vacant_set(&self, alpha: f64, window: &PointSet) -> PointSet {
        let occ = self.occupied(alpha);
        PointSet::new(window.iter().zip(occ).filter(|(_, o)| !o).map(|(p, _)| *p))
    }

    /// Occupancy bitmap in window order, least significant bit first.
    pub fn write_bitmap<W: Write>(&self, alpha: f64, mut w: W) -> Result<()> {
        let occ = self.occupied(alpha);
        let mut bytes = vec![0u8; occ.len().div_ceil(8)];
        for (i, o) in occ.iter().enumerate() {
            if *o {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        w.write_all(&bytes)?;
        Ok(())
    }
}

impl<'t> RiSampler<'t> {
    /// Sampler for the window W ∪ {0} with the default guard region, the
    /// union of the balls of radius [`GUARD_MARGIN`] around window points.
    pub fn new(table: &'t PotentialTable, window: &PointSet) -> Result<Self> {
        Self::with_margin(table, window, GUARD_MARGIN)
    }

    pub fn with_margin(table: &'t PotentialTable, window: &PointSet, margin: f64) -> Result<Self> {
        if margin < 1.0 {
            return domain("guard margin must be at least 1");
        }
        let window = window.with_point(Point::ORIGIN);
        let region = PointSet::new(window.iter().flat_map(|p| ball(*p, margin).points().to_vec()));
        Self::with_region(table, &window, region)
    }

    pub fn with_region(table: &'t PotentialTable, window: &PointSet, region: PointSet) -> Result<Self> {
        let window = window.with_point(Point::ORIGIN);
        if window.len() == 1 {
            return domain("window must contain a point other than the origin");
        }
        let hitting = HatHitting::new(table, &window)?;
        let eq = hat_equilibrium(&hitting)?;
        let guard = HatGuard::region(hitting, region)?;
        let mut acc = 0.0;
        let start_cum = eq
            .hm_hat
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        Ok(RiSampler { table, window, guard, eq, start_cum })
    }

    /// The window, always containing the origin.
    pub fn window(&self) -> &PointSet {
        &self.window
    }

    /// cap(W ∪ {0}) = Σ ê_W.
    pub fn capacity(&self) -> f64 {
        self.eq.total
    }

    pub fn equilibrium(&self) -> &HatEquilibrium {
        &self.eq
    }

    pub fn certificate(&self) -> RiCertificate {
        RiCertificate {
            kernel_error: self.guard.hitting().kernel_error(),
            max_return: self.guard.max_return(),
            guard_points: self.guard.exits().len(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, alpha_max: f64, rng: &mut R) -> Result<RiTrace> {
        if !(alpha_max > 0.0 && alpha_max.is_finite()) {
            return domain("interlacement level must be positive");
        }
        let top = std::f64::consts::PI * alpha_max;
        let n = poisson(rng, top * self.capacity());
        let mut trajectories = Vec::with_capacity(n as usize);
        let support = self.eq.support.clone();
        for _ in 0..n {
            let label = rng.random::<f64>() * top;
            let v = rng.random::<f64>() * self.start_cum.last().unwrap();
            let k = self.start_cum.partition_point(|c| *c <= v).min(support.len() - 1);
            let start = support.get(k);
            let mut visits = Vec::new();
            let steps = hat_trajectory(self.table, start, &self.guard, STEP_CAP, rng, |p| {
                visits.push(self.window.index_of(p).unwrap() as u32);
            })?;
            visits.sort_unstable();
            visits.dedup();
            trajectories.push(RiTrajectory { label, start, visits, steps });
        }
        Ok(RiTrace { alpha_max, window_len: self.window.len(), trajectories })
    }

    /// Frequencies over `samples` draws (streams `(seed, tag, i)`) of the
    /// events {S ⊂ V^α}, one per entry of `sets`.
    pub fn vacancy_frequencies(&self, alpha: f64, sets: &[PointSet], samples: u64, seed: u64) -> Result<Vec<Proportion>> {
        let idx: Vec<Vec<usize>> = sets
            .iter()
            .map(|s| {
                s.iter()
                    .map(|p| self.window.index_of(*p).ok_or_else(|| Error::Domain(format!("{p} is not in the window"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let hits = (0..samples)
            .into_par_iter()
            .map(|i| -> Result<Vec<u64>> {
                let mut rng = stream_for(seed, &[tag("ri-vacancy"), i]);
                let occ = self.sample(alpha, &mut rng)?.occupied(alpha);
                Ok(idx.iter().map(|s| s.iter().all(|&k| !occ[k]) as u64).collect())
            })
            .try_reduce(|| vec![0; sets.len()], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()))?;
        Ok(hits.into_iter().map(|h| Proportion::new(h, samples)).collect())
    }
}

/// ĉ(α) = exp(−α(2γ + ln 8)/2), the constant in P[x ∈ V^α] ≈ ĉ‖x‖^{−α}.
pub fn vacancy_constant(alpha: f64) -> f64 {
    (-alpha * std::f64::consts::PI * kappa() / 2.0).exp()
}

#[derive(Clone, Debug, Serialize)]
pub struct VacantEstimate {
    pub alpha: f64,
    pub x: Point,
    pub samples: u64,
    pub estimate: f64,
    pub std_err: f64,
    pub wilson_95: (f64, f64),
    /// exp(−πα·a(x)/2).
    pub target: f64,
    pub c_hat: f64,
    /// ĉ‖x‖^{−α}.
    pub asymptotic: f64,
    pub certificate: RiCertificate,
}

impl VacantEstimate {
    pub fn within_sigma(&self, k: f64) -> bool {
        let se = (self.target * (1.0 - self.target) / self.samples as f64).sqrt().max(self.std_err);
        (self.estimate - self.target).abs() <= k * se
    }
}

/// Monte Carlo estimate of P[x ∈ V^α] on the window {0, x}.
pub fn vacant_prob(table: &PotentialTable, alpha: f64, x: Point, samples: u64, seed: u64) -> Result<VacantEstimate> {
    if x == Point::ORIGIN {
        return domain("the origin is always vacant");
    }
    let sampler = RiSampler::new(table, &PointSet::new([Point::ORIGIN, x]))?;
    let p = sampler.vacancy_frequencies(alpha, &[PointSet::new([x])], samples, seed)?[0];
    let c_hat = vacancy_constant(alpha);
    Ok(VacantEstimate {
        alpha,
        x,
        samples,
        estimate: p.estimate,
        std_err: p.std_err,
        wilson_95: p.wilson(1.96),
        target: (-std::f64::consts::PI * alpha * table.a(x) / 2.0).exp(),
        c_hat,
        asymptotic: c_hat * x.norm().powf(-alpha),
        certificate: sampler.certificate(),
    })
}

/// One distance of the conditional decoupling scan.
#[derive(Clone, Debug, Serialize)]
pub struct DecouplingPoint {
    /// ‖x‖ / diam(A).
    pub multiple: f64,
    pub x: Point,
    /// Samples with x vacant.
    pub conditioned: u64,
    /// Samples with A ∪ {x} vacant.
    pub joint: u64,
    /// Samples with N(A) ∪ {x} vacant, N(y) = x − y.
    pub joint_reflected: u64,
    pub estimate: f64,
    pub std_err: f64,
    pub estimate_reflected: f64,
    /// exp(−πα(cap(A ∪ {x}) − cap({0, x}))), the exact conditional value.
    pub exact: f64,
    /// exp(−(πα/4)·cap(A)), the ‖x‖ → ∞ limit.
    pub limit: f64,
}

/// P[A ⊂ V^α | x ∈ V^α] for x = (m·diam(A), 0), m in `multiples`.
pub fn conditional_decoupling(
    table: &PotentialTable,
    alpha: f64,
    a: &PointSet,
    multiples: &[f64],
    samples: u64,
    seed: u64,
) -> Result<Vec<DecouplingPoint>> {
    if !a.contains(Point::ORIGIN) {
        return domain("conditional decoupling needs 0 ∈ A");
    }
    let diam = a.diameter().max(1.0);
    let cap_a = if a.len() == 1 { 0.0 } else { capacity(table, a)?.value };
    let limit = (-std::f64::consts::PI * alpha / 4.0 * cap_a).exp();
    let mut out = Vec::new();
    for (k, &m) in multiples.iter().enumerate() {
        if m < 8.0 {
            return domain("decoupling distances start at 8·diam(A)");
        }
        let x = Point::new((m * diam).round() as i64, 0);
        let reflected = PointSet::new(a.iter().map(|y| x - *y));
        let xs = PointSet::new([x]);
        let with_x = a.with_point(x);
        let refl_x = reflected.with_point(x);
        let window = with_x.union(&reflected);
        let sampler = RiSampler::new(table, &window)?;
        let f = sampler.vacancy_frequencies(alpha, &[xs.clone(), with_x.clone(), refl_x], samples, crate::rng::stream_id(&[seed, k as u64]))?;
        let conditioned = f[0].successes;
        if conditioned < 50 {
            return Err(Error::InsufficientData(format!("only {conditioned} samples with {x} vacant")));
        }
        let est = Proportion::new(f[1].successes, conditioned);
        let cap_x = capacity(table, &PointSet::new([Point::ORIGIN, x]))?.value;
        let cap_ax = capacity(table, &with_x)?.value;
        out.push(DecouplingPoint {
            multiple: m,
            x,
            conditioned,
            joint: f[1].successes,
            joint_reflected: f[2].successes,
            estimate: est.estimate,
            std_err: est.std_err,
            estimate_reflected: f[2].successes as f64 / conditioned as f64,
            exact: (-std::f64::consts::PI * alpha * (cap_ax - cap_x)).exp(),
            limit,
        });
    }
    Ok(out)
}

/// Excursions of RI(α) between ∂B and ∂B', B = B(y₀, n), B' = B(y₀, γn).
#[derive(Clone, Debug, Serialize)]
pub struct ExcursionCounts {
    pub capacity: f64,
    /// Total excursion count per sample.
    pub totals: Vec<u64>,
    /// Excursion count of each trajectory, over all samples.
    pub per_trajectory: Vec<u64>,
    /// Exact mean number of excursions of one trajectory.
    pub mean_per_trajectory: f64,
    /// Mean over ĥm_B-weighted exits of the Ŝ return probability to B.
    pub mean_return: f64,
}

/// Kernel-level excursion chain: where Ŝ from y ∈ ∂B first reaches ∂B',
/// whether it comes back to B from there, and where.
pub struct ExcursionChain {
    exit_cum: Vec<Vec<f64>>,
    outer: PointSet,
    hit: Vec<f64>,
    entry_cum: Vec<Vec<f64>>,
    start_cum: Vec<f64>,
    inner: PointSet,
    exit_rows: Vec<Vec<f64>>,
    entry_rows: Vec<Vec<f64>>,
    start: Vec<f64>,
    capacity: f64,
}

fn cumulate(v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    v.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

fn pick<R: Rng + ?Sized>(cum: &[f64], rng: &mut R) -> usize {
    let v = rng.random::<f64>() * cum.last().copied().unwrap_or(0.0);
    cum.partition_point(|c| *c <= v).min(cum.len() - 1)
}

impl ExcursionChain {
    pub fn new(table: &PotentialTable, y0: Point, n: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 && n >= 1.0) {
            return domain("need γ > 1 and n ≥ 1");
        }
        if y0.norm() < 2.0 * gamma * n {
            return domain("need ‖y₀‖ ≥ 2γn");
        }
        let b = ball(y0, n);
        let b_outer = ball(y0, gamma * n);
        let hat = HatWeights::new(table);
        let exit = excursion_exit_kernel(&b, &b_outer, &hat)?;
        let hitting = HatHitting::new(table, &b)?;
        let eq = hat_equilibrium(&hitting)?;
        let inner = hitting.support().clone();
        let outer = b_outer.internal_boundary();
        let entries = hitting.entrances(outer.points())?;
        let exit_rows: Vec<Vec<f64>> = inner.iter().map(|y| exit.row(*y).unwrap().to_vec()).collect();
        let entry_rows: Vec<Vec<f64>> = entries.iter().map(|e| e.law.clone()).collect();
        Ok(ExcursionChain {
            exit_cum: exit_rows.iter().map(|r| cumulate(r)).collect(),
            outer,
            hit: entries.iter().map(|e| e.hit).collect(),
            entry_cum: entry_rows.iter().map(|r| cumulate(r)).collect(),
            start_cum: cumulate(&eq.hm_hat),
            inner,
            exit_rows,
            entry_rows,
            start: eq.hm_hat.clone(),
            capacity: eq.total,
        })
    }

    /// cap(B ∪ {0}).
    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn inner(&self) -> &PointSet {
        &self.inner
    }

    pub fn outer(&self) -> &PointSet {
        &self.outer
    }

    pub fn start_law(&self) -> &[f64] {
        &self.start
    }

    pub fn exit_row(&self, i: usize) -> &[f64] {
        &self.exit_rows[i]
    }

    pub fn return_probability(&self, j: usize) -> f64 {
        self.hit[j]
    }

    pub fn entry_row(&self, j: usize) -> &[f64] {
        &self.entry_rows[j]
    }

    /// Excursion count of one trajectory started from ĥm_B.
    pub fn trajectory<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let mut i = pick(&self.start_cum, rng);
        let mut count = 0;
        loop {
            count += 1;
            let j = pick(&self.exit_cum[i], rng);
            if rng.random::<f64>() >= self.hit[j] {
                return count;
            }
            i = pick(&self.entry_cum[j], rng);
        }
    }

    /// Exact expected count of one trajectory, by iterating
    /// m = 1 + E·diag(hit)·L·m to convergence.
    pub fn mean_per_trajectory(&self) -> f64 {
        let ni = self.inner.len();
        let mut m = vec![1.0; ni];
        for _ in 0..100_000 {
            let back: Vec<f64> =
                (0..self.outer.len()).map(|j| self.hit[j] * self.entry_rows[j].iter().zip(&m).map(|(l, v)| l * v).sum::<f64>()).collect();
            let next: Vec<f64> = (0..ni).map(|i| 1.0 + self.exit_rows[i].iter().zip(&back).map(|(e, b)| e * b).sum::<f64>()).collect();
            let diff = next.iter().zip(&m).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            m = next;
            if diff < 1e-13 * m.iter().cloned().fold(1.0, f64::max) {
                break;
            }
        }
        self.start.iter().zip(&m).map(|(s, v)| s * v).sum()
    }

    /// Return probability averaged over the first exit from ĥm_B.
    pub fn mean_return(&self) -> f64 {
        self.start
            .iter()
            .enumerate()
            .map(|(i, s)| s * self.exit_rows[i].iter().zip(&self.hit).map(|(e, h)| e * h).sum::<f64>())
            .sum()
    }
}

pub fn ri_excursion_counts(
    table: &PotentialTable,
    alpha: f64,
    y0: Point,
    n: f64,
    gamma: f64,
    samples: u64,
    seed: u64,
) -> Result<ExcursionCounts> {
    let chain = ExcursionChain::new(table, y0, n, gamma)?;
    let lambda = std::f64::consts::PI * alpha * chain.capacity();
    let per: Vec<Vec<u64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_for(seed, &[tag("ri-excursions"), i]);
            let t = poisson(&mut rng, lambda);
            (0..t).map(|_| chain.trajectory(&mut rng)).collect()
        })
        .collect();
    Ok(ExcursionCounts {
        capacity: chain.capacity(),
        totals: per.iter().map(|v| v.iter().sum()).collect(),
        per_trajectory: per.into_iter().flatten().collect(),
        mean_per_trajectory: chain.mean_per_trajectory(),
        mean_return: chain.mean_return(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn origin_is_always_vacant_and_levels_nest() {
        let t = PotentialTable::shared(64).unwrap();
        let w = ball(Point::new(2, 0), 3.0);
        let s = RiSampler::new(&t, &w).unwrap();
        let o = s.window().index_of(Point::ORIGIN).unwrap();
        for i in 0..300 {
            let mut rng = stream(1, i);
            let tr = s.sample(1.5, &mut rng).unwrap();
            let hi = tr.occupied(1.5);
            let lo = tr.occupied(1.0);
            assert!(!hi[o]);
            assert!(lo.iter().zip(&hi).all(|(l, h)| !*l || *h));
        }
    }

    #[test]
    fn mean_trajectory_count() {
        let t = PotentialTable::shared(64).unwrap();
        let w = ball(Point::ORIGIN, 3.0);
        let s = RiSampler::new(&t, &w).unwrap();
        let draws = 4000;
        let total: usize = (0..draws).map(|i| s.sample(1.0, &mut stream(2, i)).unwrap().count(1.0)).sum();
        let lambda = std::f64::consts::PI * s.capacity();
        let mean = total as f64 / draws as f64;
        assert!((mean - lambda).abs() < 3.0 * (lambda / draws as f64).sqrt(), "{mean} vs {lambda}");
    }

    #[test]
    fn two_point_vacancy() {
        let t = PotentialTable::shared(64).unwrap();
        let x = Point::new(5, 0);
        let e = vacant_prob(&t, 1.0, x, 20_000, 3).unwrap();
        assert!(e.within_sigma(3.0), "{e:?}");
        assert!((vacancy_constant(1.0) - (-crate::potential::EULER_GAMMA).exp() / (2.0 * 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn excursion_chain_mean() {
        let t = PotentialTable::shared(64).unwrap();
        let c = ri_excursion_counts(&t, 1.0, Point::new(40, 0), 4.0, 2.0, 4000, 4).unwrap();
        let m = crate::stats::mean(&c.per_trajectory.iter().map(|v| *v as f64).collect::<Vec<_>>());
        let sd = crate::stats::variance(&c.per_trajectory.iter().map(|v| *v as f64).collect::<Vec<_>>()).sqrt();
        assert!((m - c.mean_per_trajectory).abs() < 4.0 * sd / (c.per_trajectory.len() as f64).sqrt());
    }
}
