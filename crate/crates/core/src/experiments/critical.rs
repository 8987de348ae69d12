//! The critical-level pipeline at desk scale: excursion counts of RI(1)
//! around a distant ball, coverage by i.i.d. Ŝ excursions, soft-local-time
//! domination, and the vacancy exhibit on their conjunction.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::interlacements::{ri_excursion_counts, ExcursionChain};
use crate::lattice::{ball, Point, PointSet};
use crate::potential::PotentialTable;
use crate::rng::{poisson, stream_for, stream_id, tag, StreamRng};
use crate::slt::{included, ExcursionLaw, MarkMode, SltProcess};
use crate::solver::HatWeights;
use crate::stats::{mean, median, normal_cdf, variance, Proportion};
use crate::walks::{hat_walk_until, Hitting, STEP_CAP};

/// Default scale ladder.
pub const DEFAULT_LADDER: [f64; 3] = [1e3, 3162.277_660_168_379_5, 1e4];

/// Largest b accepted.
pub const MAX_B: f64 = 1e6;

/// q with Φ(−q) = β, by bisection on the normal tail to `tol`.
pub fn q_beta(beta: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 40.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(-mid) > beta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Thresholds {
    pub b: f64,
    /// 2 ln²b / ln γ.
    pub centre: f64,
    /// √6 ln^{3/2}b / ln γ.
    pub scale: f64,
    /// centre − (ln ln b)² ln b.
    pub m: f64,
    /// centre − ln^{11/9} b.
    pub m_prime: f64,
    /// centre − q_β·scale.
    pub m_second: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalRunConfig {
    pub bs: Vec<f64>,
    pub gamma: f64,
    pub beta: f64,
    pub q_beta: f64,
    /// Coupled SLT runs per scale.
    pub reps: u64,
    /// Kernel-level samples of N_k per scale for the Φ frequency.
    pub count_reps: u64,
    pub seed: u64,
}

impl CriticalRunConfig {
    pub fn new(bs: Vec<f64>, gamma: f64, beta: f64, reps: u64, count_reps: u64, seed: u64) -> Result<Self> {
        if !(gamma > 1.0 && gamma < (PI / 2.0).sqrt()) {
            return Err(Error::Config(format!("γ = {gamma} is outside (1, √(π/2))")));
        }
        if !(beta > 0.0 && beta < 0.5 && beta + PI / (4.0 * gamma * gamma) > 1.0) {
            return Err(Error::Config(format!("β = {beta} needs 0 < β < 1/2 and β + π/(4γ²) > 1")));
        }
        if bs.is_empty() || reps == 0 {
            return Err(Error::Config("need at least one scale and one repetition".into()));
        }
        let cfg = CriticalRunConfig { bs, gamma, beta, q_beta: q_beta(beta, 1e-10), reps, count_reps, seed };
        for &b in &cfg.bs {
            if !(b >= 100.0 && b <= MAX_B) {
                return Err(Error::Config(format!("b = {b} is outside [100, {MAX_B}]")));
            }
            let t = cfg.thresholds(b);
            if !(t.m_second < t.m_prime && t.m_second >= 1.0) {
                return Err(Error::Config(format!("thresholds at b = {b} violate 1 ≤ m″ < m′: {t:?}")));
            }
        }
        Ok(cfg)
    }

    pub fn thresholds(&self, b: f64) -> Thresholds {
        let l = b.ln();
        let lg = self.gamma.ln();
        let centre = 2.0 * l * l / lg;
        let scale = 6f64.sqrt() * l.powf(1.5) / lg;
        Thresholds {
            b,
            centre,
            scale,
            m: centre - l.ln().powi(2) * l,
            m_prime: centre - l.powf(11.0 / 9.0),
            m_second: centre - self.q_beta * scale,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalScale {
    pub thresholds: Thresholds,
    pub y0: Point,
    pub radius: f64,
    /// cap(B ∪ {0}).
    pub capacity: f64,
    /// E N_k from the excursion chain: π·cap·(mean excursions per trajectory).
    pub nk_mean_exact: f64,
    /// (N_k − centre)/scale mean and sd from the kernel-level sample.
    pub nk_standardised_mean: f64,
    pub nk_standardised_sd: f64,
    /// Φ frequency from the kernel-level sample.
    pub phi_counts: Proportion,
    /// Event frequencies over the coupled runs.
    pub phi: Proportion,
    pub j: Proportion,
    pub m: Proportion,
    /// Median over runs of max_y L̂_{m″}(y) / L̃_{m′}(y); M is the event
    /// that this is at most 1.
    pub domination_ratio: f64,
    /// Median number of sites of B left uncovered by the first m′ i.i.d.
    /// excursions; J is the event that this is positive.
    pub uncovered_median: f64,
    pub conjunction: u64,
    /// Runs on the conjunction with a vacant site of B.
    pub exhibits: u64,
    /// Runs on the conjunction with B fully occupied (must be 0).
    pub implication_failures: u64,
    /// Runs on M where the first m″ RI pool points are not among the first
    /// m′ i.i.d. ones (must be 0).
    pub inclusion_failures: u64,
    /// Set when a frequency rests on fewer than [`MIN_EVENTS`] runs.
    pub insufficient: bool,
}

/// Conjunction count below which the exhibit is flagged as thin.
pub const MIN_EVENTS: u64 = 5;

#[derive(Clone, Debug, Serialize)]
pub struct CriticalReport {
    pub config: CriticalRunConfig,
    pub scales: Vec<CriticalScale>,
}

impl CriticalReport {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=critical/1")?;
        writeln!(
            w,
            "b,m_prime,m_second,capacity,nk_mean_exact,centre,phi_counts,phi,j,m,domination_ratio,uncovered_median,conjunction,exhibits,implication_failures,inclusion_failures"
        )?;
        for s in &self.scales {
            let t = &s.thresholds;
            writeln!(
                w,
                "{:.6e},{:.4},{:.4},{:.10e},{:.6e},{:.6e},{:.6},{:.6},{:.6},{:.6},{:.6},{:.1},{},{},{},{}",
                t.b,
                t.m_prime,
                t.m_second,
                s.capacity,
                s.nk_mean_exact,
                t.centre,
                s.phi_counts.estimate,
                s.phi.estimate,
                s.j.estimate,
                s.m.estimate,
                s.domination_ratio,
                s.uncovered_median,
                s.conjunction,
                s.exhibits,
                s.implication_failures,
                s.inclusion_failures
            )?;
        }
        Ok(())
    }
}

struct RunOutcome {
    phi: bool,
    j: bool,
    m: bool,
    vacant: bool,
    uncovered: usize,
    inclusion_ok: bool,
    ratio: f64,
}

/// Ŝ excursion from ∂B to ∂B', reporting the sites of B it visits.
fn excursion_walker<'a>(table: &'a PotentialTable, b: &'a PointSet, ends: &'a PointSet) -> impl Fn(Point, &mut StreamRng) -> Result<(Vec<Point>, Point)> + Sync + 'a {
    move |start, rng| {
        let mut seen = std::collections::HashSet::new();
        seen.insert(start);
        let run = hat_walk_until(
            table,
            start,
            |p| {
                if b.contains(p) {
                    seen.insert(p);
                }
                ends.contains(p)
            },
            Hitting::Tau1,
            STEP_CAP,
            false,
            rng,
        )?;
        let mut visited: Vec<Point> = seen.into_iter().collect();
        visited.sort_unstable_by_key(|p| (p.x, p.y));
        Ok((visited, run.end()))
    }
}

fn one_run(
    ri_law: &ExcursionLaw,
    iid_law: &ExcursionLaw,
    walker: &crate::slt::Walker<'_>,
    b: &PointSet,
    t: &Thresholds,
    lambda: f64,
    seed: u64,
) -> Result<RunOutcome> {
    let m2 = t.m_second.floor() as usize;
    let m1 = t.m_prime.floor() as usize;
    let mut ri = SltProcess::new(ri_law, MarkMode::Path(walker), seed);
    let mut iid = SltProcess::new(iid_law, MarkMode::Path(walker), seed);
    ri.run(m2)?;
    let l_hat = ri.soft_local_time().to_vec();
    iid.run(m1)?;
    let l_tilde = iid.soft_local_time();
    let ratio = ri_law
        .alphabet()
        .iter()
        .zip(&l_hat)
        .map(|(y, lh)| match iid_law.alphabet().index_of(*y) {
            Some(i) => lh / l_tilde[i],
            None if *lh == 0.0 => 0.0,
            None => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    let m = ratio <= 1.0;
    let inclusion_ok = !m || included(&ri.pool_points(m2), &iid.pool_points(m1));
    let mut trng = stream_for(seed, &[tag("critical-trajectories")]);
    let trajectories = poisson(&mut trng, lambda);
    let nk = ri.excursions_of_first(trajectories)?;
    let phi = nk as f64 <= t.m_second;
    let mut covered = vec![false; b.len()];
    for p in &iid.picks()[..m1] {
        for x in p.path.as_deref().unwrap_or(&[]) {
            if let Some(i) = b.index_of(*x) {
                covered[i] = true;
            }
        }
    }
    let uncovered = covered.iter().filter(|c| !**c).count();
    let j = uncovered > 0;
    let mut occupied = vec![false; b.len()];
    for p in &ri.picks()[..nk] {
        for x in p.path.as_deref().unwrap_or(&[]) {
            if let Some(i) = b.index_of(*x) {
                occupied[i] = true;
            }
        }
    }
    let vacant = occupied.iter().any(|o| !o);
    Ok(RunOutcome { phi, j, m, vacant, uncovered, inclusion_ok, ratio })
}

/// Runs every scale of the ladder. Each scale uses B = B(y₀, √b),
/// B' = B(y₀, γ√b), y₀ = (b, 0).
pub fn critical_pipeline(table: &PotentialTable, config: &CriticalRunConfig) -> Result<CriticalReport> {
    let mut scales = Vec::with_capacity(config.bs.len());
    for (si, &b) in config.bs.iter().enumerate() {
        let t = config.thresholds(b);
        let r = b.sqrt();
        let y0 = Point::new(b.round() as i64, 0);
        let inner = ball(y0, r);
        let outer = ball(y0, config.gamma * r);
        if outer.internal_boundary() == inner.internal_boundary() || !inner.is_subset(&outer) {
            return domain(format!("B and B' coincide at b = {b}"));
        }
        let ri_law = ExcursionLaw::interlacements(table, &inner, &outer)?;
        let iid_law = ExcursionLaw::iid(&inner, &outer, &HatWeights::new(table))?;
        let chain = ExcursionChain::new(table, y0, r, config.gamma)?;
        let capacity = chain.capacity();
        let lambda = PI * capacity;
        let ends = outer.internal_boundary();
        let walker = excursion_walker(table, &inner, &ends);
        let counts = ri_excursion_counts(table, 1.0, y0, r, config.gamma, config.count_reps, stream_id(&[config.seed, tag("critical-counts"), si as u64]))?;
        let z: Vec<f64> = counts.totals.iter().map(|n| (*n as f64 - t.centre) / t.scale).collect();
        let phi_counts = Proportion::new(counts.totals.iter().filter(|n| **n as f64 <= t.m_second).count() as u64, config.count_reps);
        let outcomes: Vec<RunOutcome> = (0..config.reps)
            .into_par_iter()
            .map(|rep| one_run(&ri_law, &iid_law, &walker, &inner, &t, lambda, stream_id(&[config.seed, tag("critical-run"), si as u64, rep])))
            .collect::<Result<_>>()?;
        let count = |f: &dyn Fn(&RunOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as u64;
        let conjunction = count(&|o| o.phi && o.j && o.m);
        let exhibits = count(&|o| o.phi && o.j && o.m && o.vacant);
        scales.push(CriticalScale {
            thresholds: t,
            y0,
            radius: r,
            capacity,
            nk_mean_exact: lambda * chain.mean_per_trajectory(),
            nk_standardised_mean: mean(&z),
            nk_standardised_sd: variance(&z).sqrt(),
            phi_counts,
            phi: Proportion::new(count(&|o| o.phi), config.reps),
            j: Proportion::new(count(&|o| o.j), config.reps),
            m: Proportion::new(count(&|o| o.m), config.reps),
            domination_ratio: median(&outcomes.iter().map(|o| o.ratio).collect::<Vec<_>>()),
            uncovered_median: median(&outcomes.iter().map(|o| o.uncovered as f64).collect::<Vec<_>>()),
            conjunction,
            exhibits,
            implication_failures: conjunction - exhibits,
            inclusion_failures: count(&|o| !o.inclusion_ok),
            insufficient: conjunction < MIN_EVENTS,
        });
    }
    Ok(CriticalReport { config: config.clone(), scales })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_beta_inverts_the_tail() {
        let q = q_beta(0.45, 1e-12);
        assert!((normal_cdf(-q) - 0.45).abs() < 1e-10);
        assert!((q - 0.125_661_346_855_074).abs() < 1e-8);
    }

    #[test]
    fn config_rejects_bad_gamma() {
        assert!(CriticalRunConfig::new(vec![1e3], 1.3, 0.45, 1, 1, 0).is_err());
        assert!(CriticalRunConfig::new(vec![1e3], 1.1, 0.2, 1, 1, 0).is_err());
        assert!(CriticalRunConfig::new(vec![1e3], 1.1, 0.45, 1, 1, 0).is_ok());
    }
}
