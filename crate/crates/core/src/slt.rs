//! Soft local times.
//!
//! A marked Poisson process of rate one on ∂A × R₊ is shared by every
//! excursion process built from the same seed. It is realised lazily: each
//! site owns an independent stream of Exp(1) gaps keyed by the seed and the
//! site's coordinates, and the mark of the i-th point at a site is drawn from
//! a stream keyed by the site and i. Processes on different alphabets
//! therefore see the same pool wherever their alphabets overlap.
//!
//! Given the soft local time L and the next density g, the next excursion is
//! the pool point minimising (v − L(y)) / g(y) over the lowest unused point v
//! at each site; ξ is that minimum and L becomes L + ξg.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::{
    excursion_exit_kernel, hat_entrance_rows, hat_equilibrium, relative_hm, torus_entrance_kernel, HatHitting,
};
use crate::lattice::{Point, PointSet};
use crate::potential::PotentialTable;
use crate::rng::{exp1, stream_for, tag, StreamRng};
use crate::solver::{HatWeights, Srw, StepWeights};
use crate::stats::{ks_two_sample, linear_fit, median, quantile, LinearFit};
use crate::walks::TorusExcursionSpec;

/// Tolerance on the total mass of a density row.
pub const DENSITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
enum Density {
    /// The same row for every excursion.
    Fixed(Vec<f64>),
    /// `first` for excursion one, then the row of the previous end point.
    ByEnd { first: Vec<f64>, rows: Vec<Vec<f64>> },
}

/// Which excursion process a law describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LawKind {
    TorusWalk,
    Interlacements,
    Iid,
}

/// Law of an excursion process between ∂A and ∂A': start densities and the
/// exit kernel used for kernel-mode marks.
#[derive(Clone, Debug)]
pub struct ExcursionLaw {
    pub kind: LawKind,
    alphabet: PointSet,
    ends: PointSet,
    density: Density,
    exit_cum: Vec<Vec<f64>>,
    /// Stationary start-site marginal (hm_A^{A'} or its Ŝ analogue).
    stationary: Vec<f64>,
    /// For interlacements: return probability from each end point and ĥm_A,
    /// which give the posterior probability that a start is fresh.
    fresh: Option<(Vec<f64>, Vec<f64>)>,
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

/// How the torus walk starts.
#[derive(Clone, Copy, Debug)]
pub enum WalkStart {
    /// From a fixed point outside A: first density φ(x₀, ·).
    Point(Point),
    /// From the stationary law of the endpoint chain: first density hm_A^{A'}.
    Stationary,
}

impl ExcursionLaw {
    /// Torus walk excursions for nested sets inside the torus window.
    pub fn torus_walk(spec: &TorusExcursionSpec, start: WalkStart) -> Result<Self> {
        let alphabet = spec.inner.internal_boundary();
        let ends = spec.outer_boundary().clone();
        let mut starts = ends.points().to_vec();
        if let WalkStart::Point(x0) = start {
            if spec.inner.contains(x0) {
                return Err(Error::Config("walk start must lie outside A".into()));
            }
            starts.push(spec.torus.wrap(x0));
        }
        let phi = torus_entrance_kernel(spec.torus, &spec.inner, &starts)?;
        let rows: Vec<Vec<f64>> = ends.iter().map(|z| phi.row(*z).unwrap().to_vec()).collect();
        let rel = relative_hm(&spec.inner, &spec.outer, &Srw)?;
        let first = match start {
            WalkStart::Point(x0) => phi.row(spec.torus.wrap(x0)).unwrap().to_vec(),
            WalkStart::Stationary => rel.weights.clone(),
        };
        let exit = excursion_exit_kernel(&spec.inner, &spec.outer, &Srw)?;
        Ok(ExcursionLaw {
            kind: LawKind::TorusWalk,
            exit_cum: alphabet.iter().map(|y| cumulate(exit.row(*y).unwrap())).collect(),
            alphabet,
            ends,
            density: Density::ByEnd { first, rows },
            stationary: rel.weights,
            fresh: None,
        })
    }

    /// Excursions of random interlacements between ∂A and ∂A', with A'
    /// avoiding the origin. The first start is fresh (drawn from ĥm_A).
    pub fn interlacements(table: &PotentialTable, inner: &PointSet, outer: &PointSet) -> Result<Self> {
        if outer.contains(Point::ORIGIN) {
            return Err(Error::Config("A' must not contain the origin".into()));
        }
        let hitting = HatHitting::new(table, inner)?;
        let eq = hat_equilibrium(&hitting)?;
        let alphabet = hitting.support().clone();
        let ends = outer.internal_boundary();
        let rows = hat_entrance_rows(&hitting, &eq, ends.points())?;
        let hit = hitting.entrances(ends.points())?.into_iter().map(|e| e.hit).collect();
        let hat = HatWeights::new(table);
        let rel = relative_hm(inner, outer, &hat)?;
        let exit = excursion_exit_kernel(inner, outer, &hat)?;
        Ok(ExcursionLaw {
            kind: LawKind::Interlacements,
            exit_cum: alphabet.iter().map(|y| cumulate(exit.row(*y).unwrap())).collect(),
            alphabet,
            ends,
            density: Density::ByEnd { first: eq.hm_hat.clone(), rows },
            stationary: rel.weights,
            fresh: Some((hit, eq.hm_hat)),
        })
    }

    /// I.i.d. excursions with starts from the relative harmonic measure of
    /// the given walk.
    pub fn iid(inner: &PointSet, outer: &PointSet, weights: &dyn StepWeights) -> Result<Self> {
        let rel = relative_hm(inner, outer, weights)?;
        let exit = excursion_exit_kernel(inner, outer, weights)?;
        let alphabet = rel.support.clone();
        Ok(ExcursionLaw {
            kind: LawKind::Iid,
            exit_cum: alphabet.iter().map(|y| cumulate(exit.row(*y).unwrap())).collect(),
            alphabet,
            ends: outer.internal_boundary(),
            density: Density::Fixed(rel.weights.clone()),
            stationary: rel.weights,
            fresh: None,
        })
    }

    /// The same law moved by `v`.
    pub fn translated(&self, v: Point) -> Self {
        let mut out = self.clone();
        out.alphabet = self.alphabet.translate(v);
        out.ends = self.ends.translate(v);
        out
    }

    pub fn alphabet(&self) -> &PointSet {
        &self.alphabet
    }

    pub fn ends(&self) -> &PointSet {
        &self.ends
    }

    /// hm_A^{A'} (or ĥm_A^{A'}), the limit of L_k / k.
    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Start density given the previous end (index into `ends`).
    pub fn density(&self, prev_end: Option<usize>) -> &[f64] {
        match (&self.density, prev_end) {
            (Density::Fixed(r), _) => r,
            (Density::ByEnd { first, .. }, None) => first,
            (Density::ByEnd { rows, .. }, Some(j)) => &rows[j],
        }
    }

    fn sample_end<R: Rng + ?Sized>(&self, start: usize, rng: &mut R) -> usize {
        pick(&self.exit_cum[start], rng)
    }

    /// Posterior probability that a start at site `y` after end `prev` opens
    /// a new trajectory.
    fn fresh_probability(&self, prev_end: Option<usize>, y: usize) -> Option<f64> {
        let (hit, hm) = self.fresh.as_ref()?;
        Some(match prev_end {
            None => 1.0,
            Some(j) => {
                let d = self.density(Some(j))[y];
                if d > 0.0 {
                    ((1.0 - hit[j]) * hm[y] / d).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            }
        })
    }
}

/// A realised excursion path with its endpoint.
pub type Walker<'a> = dyn Fn(Point, &mut StreamRng) -> Result<(Vec<Point>, Point)> + Sync + 'a;

/// How marks are realised.
pub enum MarkMode<'a> {
    /// The end point is drawn from the exit kernel.
    Kernel,
    /// The whole excursion is simulated.
    Path(&'a Walker<'a>),
}

/// One selected excursion.
#[derive(Clone, Debug, PartialEq)]
pub struct Pick {
    /// Index into the alphabet.
    pub site: usize,
    /// Index of the pool point at that site.
    pub point: u64,
    /// Index into the end set.
    pub end: usize,
    pub xi: f64,
    /// For interlacements, whether the excursion opens a new trajectory.
    pub fresh: Option<bool>,
    pub path: Option<Vec<Point>>,
}

struct Clock {
    rng: StreamRng,
    next: f64,
    index: u64,
}

impl Clock {
    fn new(seed: u64, p: Point) -> Self {
        let mut rng = stream_for(seed, &[tag("slt-height"), p.x as u64, p.y as u64]);
        let next = exp1(&mut rng);
        Clock { rng, next, index: 0 }
    }

    fn advance(&mut self) {
        self.next += exp1(&mut self.rng);
        self.index += 1;
    }
}

fn mark_rng(seed: u64, p: Point, index: u64) -> StreamRng {
    stream_for(seed, &[tag("slt-mark"), p.x as u64, p.y as u64, index])
}

/// A soft-local-time excursion process over the shared pool.
pub struct SltProcess<'l, 'w> {
    law: &'l ExcursionLaw,
    mode: MarkMode<'w>,
    seed: u64,
    l: Vec<f64>,
    clocks: Vec<Clock>,
    last_end: Option<usize>,
    picks: Vec<Pick>,
    ties: u64,
}

impl<'l, 'w> SltProcess<'l, 'w> {
    pub fn new(law: &'l ExcursionLaw, mode: MarkMode<'w>, seed: u64) -> Self {
        let clocks = law.alphabet.iter().map(|p| Clock::new(seed, *p)).collect();
        SltProcess { law, mode, seed, l: vec![0.0; law.alphabet.len()], clocks, last_end: None, picks: Vec::new(), ties: 0 }
    }

    pub fn law(&self) -> &ExcursionLaw {
        self.law
    }

    /// Soft local time after the excursions chosen so far.
    pub fn soft_local_time(&self) -> &[f64] {
        &self.l
    }

    pub fn picks(&self) -> &[Pick] {
        &self.picks
    }

    pub fn k(&self) -> usize {
        self.picks.len()
    }

    /// Argmin ties seen so far (broken towards the lowest site index).
    pub fn ties(&self) -> u64 {
        self.ties
    }

    /// Chooses the next excursion.
    pub fn step(&mut self) -> Result<&Pick> {
        let g = self.law.density(self.last_end);
        let mass: f64 = g.iter().sum();
        if (mass - 1.0).abs() > DENSITY_TOL {
            return Err(Error::Numeric { what: "start density is not normalised".into(), residual: (mass - 1.0).abs() });
        }
        let mut best = f64::INFINITY;
        let mut site = usize::MAX;
        for (y, &gy) in g.iter().enumerate() {
            if gy <= 0.0 {
                continue;
            }
            let t = (self.clocks[y].next - self.l[y]) / gy;
            if t < best {
                best = t;
                site = y;
            } else if t == best {
                self.ties += 1;
                log::debug!("soft local time tie at sites {site} and {y}");
            }
        }
        if site == usize::MAX {
            return Err(Error::Numeric { what: "start density has no positive entry".into(), residual: mass });
        }
        for (y, &gy) in g.iter().enumerate() {
            self.l[y] += best * gy;
        }
        let p = self.law.alphabet.get(site);
        let point = self.clocks[site].index;
        self.l[site] = self.l[site].max(self.clocks[site].next);
        self.clocks[site].advance();
        let mut mrng = mark_rng(self.seed, p, point);
        let aux: f64 = mrng.random();
        let fresh = self.law.fresh_probability(self.last_end, site).map(|q| aux < q);
        let (end, path) = match &self.mode {
            MarkMode::Kernel => (self.law.sample_end(site, &mut mrng), None),
            MarkMode::Path(walk) => {
                let (path, z) = walk(p, &mut mrng)?;
                let e = self
                    .law
                    .ends
                    .index_of(z)
                    .ok_or_else(|| Error::Domain(format!("excursion from {p} ended at {z}, off ∂A'")))?;
                (e, Some(path))
            }
        };
        self.last_end = Some(end);
        self.picks.push(Pick { site, point, end, xi: best, fresh, path });
        Ok(self.picks.last().unwrap())
    }

    pub fn run(&mut self, k: usize) -> Result<()> {
        while self.k() < k {
            self.step()?;
        }
        Ok(())
    }

    /// L_k rebuilt from the ξ log and the chosen ends.
    pub fn replay(&self) -> Vec<f64> {
        let mut l = vec![0.0; self.l.len()];
        let mut prev = None;
        for p in &self.picks {
            for (v, g) in l.iter_mut().zip(self.law.density(prev)) {
                *v += p.xi * g;
            }
            prev = Some(p.end);
        }
        l
    }

    /// Pool points (site coordinates, index) of the first `k` excursions.
    pub fn pool_points(&self, k: usize) -> Vec<(Point, u64)> {
        self.picks[..k.min(self.picks.len())].iter().map(|p| (self.law.alphabet.get(p.site), p.point)).collect()
    }

    /// sup_y |L_k(y) − k·hm^{A'}(y)| at the current k.
    pub fn sup_deviation(&self) -> f64 {
        let k = self.k() as f64;
        self.l.iter().zip(&self.law.stationary).map(|(l, h)| (l - k * h).abs()).fold(0.0, f64::max)
    }

    /// Number of excursions before the (t+1)-th fresh start, running the
    /// process as far as needed (interlacement laws only).
    pub fn excursions_of_first(&mut self, t: u64) -> Result<usize> {
        if self.law.fresh.is_none() {
            return Err(Error::Config("excursion counts need an interlacement law".into()));
        }
        if t == 0 {
            return Ok(0);
        }
        let mut seen = 0u64;
        let mut i = 0usize;
        loop {
            if i == self.k() {
                self.step()?;
            }
            if self.picks[i].fresh == Some(true) {
                seen += 1;
                if seen == t + 1 {
                    return Ok(i);
                }
            }
            i += 1;
        }
    }
}

/// Whether every pool point of `a` is also one of `b`.
pub fn included(a: &[(Point, u64)], b: &[(Point, u64)]) -> bool {
    let set: std::collections::HashSet<_> = b.iter().collect();
    a.iter().all(|p| set.contains(p))
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingReport {
    pub k: usize,
    /// For each of the first k excursions of process A, whether process B
    /// used the same pool point among its first k.
    pub matches: Vec<bool>,
    pub shared: usize,
    pub sup_deviation_a: f64,
    pub sup_deviation_b: f64,
    /// First `k_a` of A ⊆ first `k_b` of B.
    pub inclusion: bool,
    pub k_a: usize,
    pub k_b: usize,
}

/// Runs two processes over one pool and compares their first excursions.
pub fn couple(law_a: &ExcursionLaw, law_b: &ExcursionLaw, k_a: usize, k_b: usize, seed: u64) -> Result<CouplingReport> {
    if law_a.alphabet != law_b.alphabet {
        return Err(Error::Config("coupled processes must share the boundary ∂A".into()));
    }
    let k = k_a.max(k_b);
    let mut a = SltProcess::new(law_a, MarkMode::Kernel, seed);
    let mut b = SltProcess::new(law_b, MarkMode::Kernel, seed);
    a.run(k)?;
    b.run(k)?;
    let pa = a.pool_points(k);
    let pb: std::collections::HashSet<_> = b.pool_points(k).into_iter().collect();
    let matches: Vec<bool> = pa.iter().map(|p| pb.contains(p)).collect();
    let shared = matches.iter().filter(|m| **m).count();
    let inclusion = included(&a.pool_points(k_a), &b.pool_points(k_b));
    Ok(CouplingReport {
        k,
        shared,
        matches,
        sup_deviation_a: a.sup_deviation(),
        sup_deviation_b: b.sup_deviation(),
        inclusion,
        k_a,
        k_b,
    })
}

/// Frequency over `reps` seeds of {first k_a of A ⊆ first k_b of B}.
pub fn inclusion_frequency(law_a: &ExcursionLaw, law_b: &ExcursionLaw, k_a: usize, k_b: usize, reps: u64, seed: u64) -> Result<f64> {
    let hits = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<u64> { Ok(couple(law_a, law_b, k_a, k_b, crate::rng::stream_id(&[seed, tag("inclusion"), r]))?.inclusion as u64) })
        .try_reduce(|| 0u64, |x, y| Ok(x + y))?;
    Ok(hits as f64 / reps as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviationRow {
    pub k: usize,
    pub median: f64,
    pub q95: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviationReport {
    pub rows: Vec<DeviationRow>,
    /// Fit of ln(median) on ln(k).
    pub fit: LinearFit,
}

impl DeviationReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=slt_deviation/1")?;
        writeln!(w, "k,median,q95")?;
        for r in &self.rows {
            writeln!(w, "{},{:.10e},{:.10e}", r.k, r.median, r.q95)?;
        }
        Ok(())
    }
}

/// Quantiles of sup_y |L_k(y) − k·hm^{A'}(y)| over `reps` runs.
pub fn deviation_experiment(law: &ExcursionLaw, ks: &[usize], reps: u64, seed: u64) -> Result<DeviationReport> {
    let kmax = ks.iter().copied().max().unwrap_or(0);
    let per_rep: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut p = SltProcess::new(law, MarkMode::Kernel, crate::rng::stream_id(&[seed, tag("deviation"), r]));
            let mut out = Vec::with_capacity(ks.len());
            for step in 1..=kmax {
                p.step()?;
                if ks.contains(&step) {
                    out.push(p.sup_deviation());
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut sorted: Vec<usize> = ks.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let rows: Vec<DeviationRow> = sorted
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let col: Vec<f64> = per_rep.iter().map(|r| r[i]).collect();
            DeviationRow { k, median: median(&col), q95: quantile(&col, 0.95) }
        })
        .collect();
    let fit = linear_fit(
        &rows.iter().map(|r| (r.k as f64).ln()).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.median.ln()).collect::<Vec<_>>(),
    );
    Ok(DeviationReport { rows, fit })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub k: usize,
    pub reps: u64,
    /// Per-site KS p-values on ∂A.
    pub p_values: Vec<f64>,
    /// Bonferroni-corrected global p-value.
    pub global_p: f64,
    pub max_statistic: f64,
}

/// L̂_k on ∂A built alone versus L̂*_k on ∂A read off a joint construction
/// over A ∪ A₁ at the moment its k-th excursion from ∂A is chosen.
pub fn consistency_experiment(alone: &ExcursionLaw, joint: &ExcursionLaw, k: usize, reps: u64, seed: u64) -> Result<ConsistencyReport> {
    let idx: Vec<usize> = alone
        .alphabet
        .iter()
        .map(|p| joint.alphabet.index_of(*p).ok_or_else(|| Error::Config("joint alphabet must contain ∂A".into())))
        .collect::<Result<_>>()?;
    if alone.ends.iter().any(|z| joint.ends.index_of(*z).is_none()) {
        return Err(Error::Config("joint end set must contain ∂A'".into()));
    }
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut a = SltProcess::new(alone, MarkMode::Kernel, crate::rng::stream_id(&[seed, tag("alone"), r]));
            a.run(k)?;
            let mut j = SltProcess::new(joint, MarkMode::Kernel, crate::rng::stream_id(&[seed, tag("joint"), r]));
            let mut count = 0;
            while count < k {
                let s = j.step()?.site;
                if idx.contains(&s) {
                    count += 1;
                }
            }
            let lj = j.soft_local_time();
            Ok((a.soft_local_time().to_vec(), idx.iter().map(|&i| lj[i]).collect()))
        })
        .collect::<Result<_>>()?;
    let m = idx.len();
    let mut p_values = Vec::with_capacity(m);
    let mut max_statistic: f64 = 0.0;
    for y in 0..m {
        let xa: Vec<f64> = samples.iter().map(|s| s.0[y]).collect();
        let xb: Vec<f64> = samples.iter().map(|s| s.1[y]).collect();
        let ks = ks_two_sample(&xa, &xb);
        max_statistic = max_statistic.max(ks.statistic);
        p_values.push(ks.p_value);
    }
    let global_p = (p_values.iter().cloned().fold(1.0, f64::min) * m as f64).min(1.0);
    Ok(ConsistencyReport { k, reps, p_values, global_p, max_statistic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ball;
    use crate::stats::chi_square_gof;

    fn torus_law(start: WalkStart) -> ExcursionLaw {
        let spec = TorusExcursionSpec::balls(20, 0.15, 0.3).unwrap();
        ExcursionLaw::torus_walk(&spec, start).unwrap()
    }

    #[test]
    fn first_pick_follows_density() {
        let law = torus_law(WalkStart::Point(Point::new(1, 1)));
        let g = law.density(None).to_vec();
        let mut counts = vec![0u64; g.len()];
        for r in 0..50_000 {
            let mut p = SltProcess::new(&law, MarkMode::Kernel, r);
            counts[p.step().unwrap().site] += 1;
        }
        let chi = chi_square_gof(&counts, &g, 5.0);
        assert!(chi.p_value > 0.01, "{chi:?}");
    }

    #[test]
    fn first_soft_local_time_is_xi_times_density() {
        let law = torus_law(WalkStart::Point(Point::new(1, 1)));
        let mut p = SltProcess::new(&law, MarkMode::Kernel, 5);
        let xi = p.step().unwrap().xi;
        for (l, g) in p.soft_local_time().iter().zip(law.density(None)) {
            if *g > 0.0 {
                assert!((l / g - xi).abs() < 1e-12 * xi.max(1.0));
            }
        }
    }

    #[test]
    fn soft_local_time_replays_and_grows() {
        let law = torus_law(WalkStart::Stationary);
        let mut p = SltProcess::new(&law, MarkMode::Kernel, 9);
        let mut prev = vec![0.0; law.alphabet().len()];
        for _ in 0..200 {
            p.step().unwrap();
            assert!(p.soft_local_time().iter().zip(&prev).all(|(a, b)| a >= b));
            prev = p.soft_local_time().to_vec();
        }
        let r = p.replay();
        assert!(r.iter().zip(p.soft_local_time()).all(|(a, b)| (a - b).abs() < 1e-9 * b.max(1.0)));
    }

    #[test]
    fn identical_laws_match_everywhere() {
        let law = torus_law(WalkStart::Stationary);
        let rep = couple(&law, &law, 100, 100, 3).unwrap();
        assert!(rep.matches.iter().all(|m| *m));
        assert!(rep.inclusion);
    }

    #[test]
    fn xi_are_unit_exponentials() {
        let law = torus_law(WalkStart::Stationary);
        let mut xs = Vec::new();
        for r in 0..200 {
            let mut p = SltProcess::new(&law, MarkMode::Kernel, 1000 + r);
            p.run(20).unwrap();
            xs.extend(p.picks().iter().map(|q| q.xi));
        }
        let mut rng = crate::rng::stream(77, 0);
        let ys: Vec<f64> = (0..xs.len()).map(|_| exp1(&mut rng)).collect();
        assert!(ks_two_sample(&xs, &ys).p_value > 0.01);
    }

    #[test]
    fn fresh_flags_on_interlacement_law() {
        let t = PotentialTable::shared(128).unwrap();
        let law = ExcursionLaw::interlacements(&t, &ball(Point::new(30, 0), 3.0), &ball(Point::new(30, 0), 6.0)).unwrap();
        let mut p = SltProcess::new(&law, MarkMode::Kernel, 1);
        assert_eq!(p.step().unwrap().fresh, Some(true));
        let n = p.excursions_of_first(3).unwrap();
        assert_eq!(p.picks()[..n].iter().filter(|q| q.fresh == Some(true)).count(), 3);
        assert_eq!(p.picks()[n].fresh, Some(true));
    }
}
