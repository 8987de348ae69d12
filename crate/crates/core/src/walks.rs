//! Trajectory simulation: simple random walk on Z² and on the torus, the
//! conditioned walk Ŝ, and excursions between nested sets.
//!
//! Ŝ is transient, so its runs are confined to a finite guard region. When a
//! run leaves the guard at z, whether it ever comes back to the target set,
//! and where it re-enters, is drawn from the exact Ŝ hitting law of the
//! target from z (see [`HatHitting`]). The part of the path outside the guard
//! is never materialised; everything the walk does on the target is exact in
//! law.

use std::io::{Read, Write};

use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::harmonic::{HatEntrance, HatEquilibrium, HatHitting};
use crate::lattice::{ball, Point, PointSet, Torus};
use crate::potential::PotentialTable;
use crate::rng::StepSource;
use crate::solver::hat_probs;

/// Default per-walk step cap.
pub const STEP_CAP: u64 = 1_000_000_000;

/// Whether the starting state counts when looking for the stopping set:
/// τ₀ = inf{k ≥ 0 : …} or τ₁ = inf{k ≥ 1 : …}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Hitting {
    Tau0,
    Tau1,
}

/// A stopped run. `path` holds every visited state from the start to the
/// stopping state when recording was requested, otherwise just those two.
#[derive(Clone, Debug)]
pub struct Run {
    pub path: Vec<Point>,
    pub steps: u64,
}

impl Run {
    pub fn end(&self) -> Point {
        *self.path.last().unwrap()
    }
}

fn run_until<R: Rng + ?Sized>(
    start: Point,
    mut step: impl FnMut(Point, usize) -> Point,
    mut stop: impl FnMut(Point) -> bool,
    rule: Hitting,
    cap: u64,
    record: bool,
    rng: &mut R,
) -> Result<Run> {
    let mut path = vec![start];
    if rule == Hitting::Tau0 && stop(start) {
        return Ok(Run { path, steps: 0 });
    }
    let mut bits = StepSource::new();
    let mut x = start;
    let mut steps = 0u64;
    loop {
        x = step(x, bits.next(rng));
        steps += 1;
        if record {
            path.push(x);
        }
        if stop(x) {
            break;
        }
        if steps >= cap {
            return Err(Error::Resource(format!("walk from {start} exceeded the step cap {cap}")));
        }
    }
    if !record {
        path.push(x);
    }
    Ok(Run { path, steps })
}

/// Simple random walk on Z² until the stopping predicate holds.
pub fn srw_run_until<R: Rng + ?Sized>(
    start: Point,
    stop: impl FnMut(Point) -> bool,
    rule: Hitting,
    cap: u64,
    record: bool,
    rng: &mut R,
) -> Result<Run> {
    run_until(start, |x, d| x.neighbors()[d], stop, rule, cap, record, rng)
}

/// Simple random walk on the torus until the stopping predicate holds.
pub fn torus_run_until<R: Rng + ?Sized>(
    torus: Torus,
    start: Point,
    stop: impl FnMut(Point) -> bool,
    rule: Hitting,
    cap: u64,
    record: bool,
    rng: &mut R,
) -> Result<Run> {
    run_until(torus.wrap(start), |x, d| torus.neighbors(x)[d], stop, rule, cap, record, rng)
}

#[inline]
fn hat_move<R: Rng + ?Sized>(table: &PotentialTable, x: Point, rng: &mut R) -> Point {
    let nb = x.neighbors();
    let p = hat_probs(table, &nb);
    let u: f64 = rng.random();
    let mut acc = p[0];
    for k in 0..3 {
        if u < acc {
            return nb[k];
        }
        acc += p[k + 1];
    }
    // the origin has weight zero, so falling through never selects it
    if nb[3] == Point::ORIGIN {
        nb[2]
    } else {
        nb[3]
    }
}

/// One Ŝ step: y ∼ x with probability a(y) / Σ_{y'∼x} a(y').
pub fn hat_step<R: Rng + ?Sized>(table: &PotentialTable, x: Point, rng: &mut R) -> Result<Point> {
    if x == Point::ORIGIN {
        return domain("Ŝ is not defined at the origin");
    }
    Ok(hat_move(table, x, rng))
}

/// Ŝ until the stopping predicate holds, with no guard. The caller must
/// make the stopping set surround the start.
pub fn hat_walk_until<R: Rng + ?Sized>(
    table: &PotentialTable,
    start: Point,
    mut stop: impl FnMut(Point) -> bool,
    rule: Hitting,
    cap: u64,
    record: bool,
    rng: &mut R,
) -> Result<Run> {
    if start == Point::ORIGIN {
        return domain("Ŝ is not defined at the origin");
    }
    let mut path = vec![start];
    if rule == Hitting::Tau0 && stop(start) {
        return Ok(Run { path, steps: 0 });
    }
    let mut x = start;
    let mut steps = 0u64;
    loop {
        x = hat_move(table, x, rng);
        steps += 1;
        if record {
            path.push(x);
        }
        if stop(x) {
            break;
        }
        if steps >= cap {
            return Err(Error::Resource(format!("Ŝ walk from {start} exceeded the step cap {cap}")));
        }
    }
    if !record {
        path.push(x);
    }
    Ok(Run { path, steps })
}

/// Guard region for Ŝ runs aimed at a target set, with the exact return law
/// precomputed on the exterior boundary of the region.
pub struct HatGuard<'t> {
    hitting: HatHitting<'t>,
    region: PointSet,
    rho: f64,
    exits: PointSet,
    returns: Vec<HatEntrance>,
    cumulative: Vec<Vec<f64>>,
}

impl<'t> HatGuard<'t> {
    /// Guard ball B(0, rho).
    pub fn new(hitting: HatHitting<'t>, rho: f64) -> Result<Self> {
        if hitting.target().max_norm() >= rho {
            return domain(format!("guard radius {rho} does not contain the target"));
        }
        Self::region(hitting, ball(Point::ORIGIN, rho))
    }

    /// Arbitrary finite guard region containing the target.
    pub fn region(hitting: HatHitting<'t>, region: PointSet) -> Result<Self> {
        if !hitting.target().is_subset(&region) {
            return domain("guard region does not contain the target");
        }
        let exits = region.external_boundary();
        let returns = hitting.entrances(exits.points())?;
        let cumulative = returns
            .iter()
            .map(|e| {
                let mut acc = 0.0;
                e.law.iter().map(|v| {
                    acc += v;
                    acc
                }).collect()
            })
            .collect();
        let rho = region.max_norm();
        Ok(HatGuard { hitting, region, rho, exits, returns, cumulative })
    }

    /// Largest norm in the guard region.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn hitting(&self) -> &HatHitting<'t> {
        &self.hitting
    }

    pub fn exits(&self) -> &PointSet {
        &self.exits
    }

    pub fn target(&self) -> &PointSet {
        self.hitting.target()
    }

    #[inline]
    pub fn inside(&self, p: Point) -> bool {
        self.region.contains(p)
    }

    /// Largest return probability over the exit points.
    pub fn max_return(&self) -> f64 {
        self.returns.iter().map(|e| e.hit).fold(0.0, f64::max)
    }

    /// From an exit point: `Some(y)` if Ŝ re-enters the target, first at y.
    pub fn sample_return<R: Rng + ?Sized>(&self, z: Point, rng: &mut R) -> Option<Point> {
        let i = self.exits.index_of(z).expect("exit point on the guard boundary");
        let u: f64 = rng.random();
        if u >= self.returns[i].hit {
            return None;
        }
        Some(sample_cumulative(&self.cumulative[i], self.hitting.support(), rng))
    }
}

fn sample_cumulative<R: Rng + ?Sized>(cum: &[f64], support: &PointSet, rng: &mut R) -> Point {
    let v: f64 = rng.random::<f64>() * cum.last().copied().unwrap_or(0.0);
    let k = cum.partition_point(|c| *c <= v).min(cum.len() - 1);
    support.get(k)
}

/// Outcome of an Ŝ run aimed at the guard's target.
#[derive(Clone, Debug)]
pub struct HatRun {
    /// Visited states from the start. When the run came back from outside
    /// the guard, the last entry is the re-entry point and is not adjacent
    /// to the one before.
    pub path: Vec<Point>,
    /// The entrance point, or `None` if the walk escaped for good.
    pub end: Option<Point>,
    pub jumped: bool,
    pub steps: u64,
}

/// Ŝ from `start` until it enters the guard's target.
pub fn hat_run_until<R: Rng + ?Sized>(
    table: &PotentialTable,
    start: Point,
    guard: &HatGuard<'_>,
    rule: Hitting,
    cap: u64,
    record: bool,
    rng: &mut R,
) -> Result<HatRun> {
    if start == Point::ORIGIN {
        return domain("Ŝ is not defined at the origin");
    }
    let target = guard.target();
    let mut path = vec![start];
    if rule == Hitting::Tau0 && target.contains(start) {
        return Ok(HatRun { path, end: Some(start), jumped: false, steps: 0 });
    }
    if !guard.inside(start) {
        return domain("Ŝ run must start inside the guard ball");
    }
    let mut x = start;
    let mut steps = 0u64;
    loop {
        x = hat_move(table, x, rng);
        steps += 1;
        if record {
            path.push(x);
        }
        if target.contains(x) {
            if !record {
                path.push(x);
            }
            return Ok(HatRun { path, end: Some(x), jumped: false, steps });
        }
        if !guard.inside(x) {
            let end = guard.sample_return(x, rng);
            if let Some(y) = end {
                path.push(y);
            }
            return Ok(HatRun { path, end, jumped: end.is_some(), steps });
        }
        if steps >= cap {
            return Err(Error::Resource(format!("Ŝ walk from {start} exceeded the step cap {cap}")));
        }
    }
}

/// Full Ŝ trajectory from `start`, reporting every visit to the guard's
/// target (including the start if it lies there). Each return from outside
/// the guard restarts the walk at the exact re-entry point. Returns the
/// number of simulated steps.
pub fn hat_trajectory<R: Rng + ?Sized>(
    table: &PotentialTable,
    start: Point,
    guard: &HatGuard<'_>,
    cap: u64,
    rng: &mut R,
    mut visit: impl FnMut(Point),
) -> Result<u64> {
    if start == Point::ORIGIN || !guard.inside(start) {
        return domain("trajectory must start inside the guard ball, away from the origin");
    }
    let target = guard.target();
    let mut x = start;
    if target.contains(x) {
        visit(x);
    }
    let mut steps = 0u64;
    loop {
        x = hat_move(table, x, rng);
        steps += 1;
        if !guard.inside(x) {
            match guard.sample_return(x, rng) {
                Some(y) => x = y,
                None => return Ok(steps),
            }
        }
        if target.contains(x) {
            visit(x);
        }
        if steps >= cap {
            return Err(Error::Resource(format!("Ŝ trajectory from {start} exceeded the step cap {cap}")));
        }
    }
}

/// Exact sampler of φ̂(x, ·): the Ŝ entrance point into A if A is hit,
/// otherwise a fresh point drawn from ĥm_A.
pub struct HatPhiSampler<'h, 't> {
    hitting: &'h HatHitting<'t>,
    hm_cumulative: Vec<f64>,
}

impl<'h, 't> HatPhiSampler<'h, 't> {
    pub fn new(hitting: &'h HatHitting<'t>, eq: &HatEquilibrium) -> Self {
        let mut acc = 0.0;
        let hm_cumulative = eq
            .hm_hat
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        HatPhiSampler { hitting, hm_cumulative }
    }

    /// Draws from ĥm_A.
    pub fn fresh<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        sample_cumulative(&self.hm_cumulative, self.hitting.support(), rng)
    }

    /// Draws from φ̂(x, ·) by simulating Ŝ from x inside the guard.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        table: &PotentialTable,
        guard: &HatGuard<'_>,
        x: Point,
        rng: &mut R,
    ) -> Result<Point> {
        let run = hat_run_until(table, x, guard, Hitting::Tau0, STEP_CAP, false, rng)?;
        Ok(match run.end {
            Some(y) => y,
            None => self.fresh(rng),
        })
    }
}

/// Where an excursion stream comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StreamSource {
    TorusWalk,
    Interlacements,
    Iid,
}

/// Endpoints of one excursion between ∂A and ∂A'.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ExcursionRecord {
    pub start: Point,
    pub end: Point,
    pub length: u64,
    pub label: u64,
}

/// An ordered excursion stream with a compact binary log: an 8-byte magic,
/// a source byte, the record count, then 32 bytes per record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExcursionStream {
    pub source: StreamSource,
    pub records: Vec<ExcursionRecord>,
}

const STREAM_MAGIC: &[u8; 8] = b"RI2DEXC1";

impl ExcursionStream {
    pub fn new(source: StreamSource) -> Self {
        ExcursionStream { source, records: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(STREAM_MAGIC)?;
        let src = match self.source {
            StreamSource::TorusWalk => 0u8,
            StreamSource::Interlacements => 1,
            StreamSource::Iid => 2,
        };
        w.write_all(&[src])?;
        w.write_all(&(self.records.len() as u64).to_le_bytes())?;
        for r in &self.records {
            for v in [r.start.x as i32, r.start.y as i32, r.end.x as i32, r.end.y as i32] {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&r.length.to_le_bytes())?;
            w.write_all(&r.label.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != STREAM_MAGIC {
            return Err(Error::Corrupt("not an excursion log".into()));
        }
        let mut b1 = [0u8; 1];
        r.read_exact(&mut b1)?;
        let source = match b1[0] {
            0 => StreamSource::TorusWalk,
            1 => StreamSource::Interlacements,
            2 => StreamSource::Iid,
            s => return Err(Error::Corrupt(format!("unknown stream source {s}"))),
        };
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        let mut records = Vec::with_capacity(n.min(1 << 24));
        let mut rec = [0u8; 32];
        for _ in 0..n {
            r.read_exact(&mut rec)?;
            let i = |k: usize| i32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap()) as i64;
            let u = |k: usize| u64::from_le_bytes(rec[k..k + 8].try_into().unwrap());
            records.push(ExcursionRecord {
                start: Point::new(i(0), i(1)),
                end: Point::new(i(2), i(3)),
                length: u(16),
                label: u(24),
            });
        }
        Ok(ExcursionStream { source, records })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=excursions/1 source={:?}", self.source)?;
        writeln!(w, "start_x,start_y,end_x,end_y,length,label")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{},{},{}", r.start.x, r.start.y, r.end.x, r.end.y, r.length, r.label)?;
        }
        Ok(())
    }
}

/// Nested sets A ⊂ A' inside a torus window.
#[derive(Clone, Debug)]
pub struct TorusExcursionSpec {
    pub torus: Torus,
    pub inner: PointSet,
    pub outer: PointSet,
    outer_boundary: PointSet,
}

impl TorusExcursionSpec {
    pub fn new(torus: Torus, inner: PointSet, outer: PointSet) -> Result<Self> {
        if !torus.fits(&outer) || outer.iter().any(|p| torus.wrap(*p) != *p) {
            return Err(Error::Config("outer set must fit in the torus window without wrapping".into()));
        }
        let outer_boundary = outer.internal_boundary();
        if inner.is_empty() || !inner.is_subset(&outer) || inner.iter().any(|p| outer_boundary.contains(*p)) {
            return Err(Error::Config("inner set must be non-empty and inside the interior of the outer set".into()));
        }
        Ok(TorusExcursionSpec { torus, inner, outer, outer_boundary })
    }

    /// A = B(c, γ₁n), A' = B(c, γ₂n) on the torus of side n, c = (n/2, n/2).
    pub fn balls(n: i64, gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(0.0 < gamma1 && gamma1 < gamma2 && gamma2 < 0.5) {
            return Err(Error::Config("need 0 < γ₁ < γ₂ < 1/2".into()));
        }
        let c = Point::new(n / 2, n / 2);
        Self::new(Torus::new(n), ball(c, gamma1 * n as f64), ball(c, gamma2 * n as f64))
    }

    pub fn outer_boundary(&self) -> &PointSet {
        &self.outer_boundary
    }

    /// Asymptotic mean πt / (2n² ln(γ₂/γ₁)) of the excursion count.
    pub fn mean_formula(n: i64, gamma1: f64, gamma2: f64, t: u64) -> f64 {
        std::f64::consts::PI * t as f64 / (2.0 * (n * n) as f64 * (gamma2 / gamma1).ln())
    }
}

/// Stopping rule for [`torus_excursions`].
#[derive(Clone, Copy, Debug, Serialize)]
pub enum Budget {
    /// Run for this many steps.
    Time(u64),
    /// Run until this many excursions have completed.
    Count(u64),
}

#[derive(Clone, Debug)]
pub struct TorusRun {
    /// N*_t: excursions completed by the end of the run.
    pub completed: u64,
    pub steps: u64,
    /// Excursions that started after time 0 (the one in progress at time 0
    /// is counted in `completed` but has no recorded start).
    pub stream: ExcursionStream,
}

/// Torus walk from the uniform stationary start. An excursion is in
/// progress at time 0 when the time-reversed walk, again a simple random
/// walk, reaches A before ∂A'; it then counts once it reaches ∂A'. This
/// makes the expected count exactly the stationary rate times t.
pub fn torus_excursions<R: Rng + ?Sized>(spec: &TorusExcursionSpec, budget: Budget, label: u64, rng: &mut R) -> Result<TorusRun> {
    let torus = spec.torus;
    let n = torus.side;
    let x0 = Point::new(rng.random_range(0..n), rng.random_range(0..n));
    let back = torus_run_until(
        torus,
        x0,
        |p| spec.inner.contains(p) || spec.outer_boundary.contains(p),
        Hitting::Tau0,
        STEP_CAP,
        false,
        rng,
    )?;
    let mut armed = spec.inner.contains(back.end());
    let mut start: Option<(Point, u64)> = None;
    let mut stream = ExcursionStream::new(StreamSource::TorusWalk);
    let mut completed = 0u64;
    let mut bits = StepSource::new();
    let mut x = x0;
    let mut t = 0u64;
    loop {
        match budget {
            Budget::Time(limit) if t >= limit => break,
            Budget::Count(k) if completed >= k => break,
            _ => {}
        }
        if t >= STEP_CAP {
            return Err(Error::Resource("torus walk exceeded the step cap".into()));
        }
        x = torus.neighbors(x)[bits.next(rng)];
        t += 1;
        if !armed && spec.inner.contains(x) {
            armed = true;
            start = Some((x, t));
        } else if armed && spec.outer_boundary.contains(x) {
            armed = false;
            completed += 1;
            if let Some((s, t0)) = start.take() {
                stream.records.push(ExcursionRecord { start: s, end: x, length: t - t0, label });
            }
        }
    }
    Ok(TorusRun { completed, steps: t, stream })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{excursion_exit_kernel, hat_equilibrium, hat_entrance_rows, torus_entrance_kernel};
    use crate::rng::stream;
    use crate::solver::{AbsorbingSystem, BackendChoice, Srw};
    use crate::stats::chi_square_gof;

    #[test]
    fn tau0_and_tau1() {
        let mut rng = stream(1, 0);
        let a = ball(Point::ORIGIN, 2.0);
        let r0 = srw_run_until(Point::ORIGIN, |p| a.contains(p), Hitting::Tau0, 10, true, &mut rng).unwrap();
        assert_eq!(r0.steps, 0);
        let r1 = srw_run_until(Point::ORIGIN, |p| a.contains(p), Hitting::Tau1, 10, true, &mut rng).unwrap();
        assert_eq!(r1.steps, 1);
    }

    #[test]
    fn step_cap_is_an_error() {
        let mut rng = stream(1, 1);
        let r = srw_run_until(Point::ORIGIN, |_| false, Hitting::Tau1, 100, false, &mut rng);
        assert!(matches!(r, Err(Error::Resource(_))));
    }

    #[test]
    fn exit_frequencies_match_poisson_kernel() {
        let dom = ball(Point::ORIGIN, 10.0);
        let sys = AbsorbingSystem::exit_problem(&dom, &Srw, BackendChoice::Direct).unwrap();
        let row = sys.poisson_kernel_row(Point::ORIGIN).unwrap();
        let mut counts = vec![0u64; row.len()];
        let mut rng = stream(7, 0);
        for _ in 0..100_000 {
            let r = srw_run_until(Point::ORIGIN, |p| !dom.contains(p) || sys.absorbing().contains(p), Hitting::Tau0, STEP_CAP, false, &mut rng)
                .unwrap();
            counts[sys.absorbing().index_of(r.end()).unwrap()] += 1;
        }
        let chi = chi_square_gof(&counts, &row, 5.0);
        assert!(chi.p_value > 0.01, "{chi:?}");
    }

    #[test]
    fn hat_step_frequencies() {
        let t = PotentialTable::shared(64).unwrap();
        let x = Point::new(2, 1);
        let nb = x.neighbors();
        let p = hat_probs(&t, &nb);
        let mut counts = [0u64; 4];
        let mut rng = stream(3, 0);
        let draws = 1_000_000u64;
        for _ in 0..draws {
            let y = hat_step(&t, x, &mut rng).unwrap();
            counts[nb.iter().position(|q| *q == y).unwrap()] += 1;
        }
        for k in 0..4 {
            let pr = crate::stats::Proportion::new(counts[k], draws);
            assert!(pr.within_sigma(p[k], 3.0), "{k}: {} vs {}", pr.estimate, p[k]);
            assert!((p[k] - t.a(nb[k]) / (4.0 * t.a(x))).abs() < 1e-10);
        }
        let from_one = hat_probs(&t, &Point::new(1, 0).neighbors());
        assert_eq!(from_one[2], 0.0);
        assert!(hat_step(&t, Point::ORIGIN, &mut rng).is_err());
    }

    #[test]
    fn hat_phi_sampler_matches_exact_row() {
        let t = PotentialTable::shared(64).unwrap();
        let a = ball(Point::new(6, 0), 2.0);
        let hh = HatHitting::new(&t, &a).unwrap();
        let eq = hat_equilibrium(&hh).unwrap();
        let row = &hat_entrance_rows(&hh, &eq, &[Point::new(-3, 4)]).unwrap()[0];
        let guard = HatGuard::new(hh, 16.0).unwrap();
        let hh = guard.hitting();
        let sampler = HatPhiSampler::new(hh, &eq);
        let x = Point::new(-3, 4);
        let mut counts = vec![0u64; row.len()];
        let mut rng = stream(11, 0);
        for _ in 0..40_000 {
            let y = sampler.sample(&t, &guard, x, &mut rng).unwrap();
            counts[hh.support().index_of(y).unwrap()] += 1;
        }
        let chi = chi_square_gof(&counts, row, 5.0);
        assert!(chi.p_value > 0.01, "{chi:?}");
    }

    #[test]
    fn hat_never_visits_origin() {
        let t = PotentialTable::shared(64).unwrap();
        let a = PointSet::new([Point::new(1, 0), Point::new(0, 1)]);
        let hh = HatHitting::new(&t, &a).unwrap();
        let guard = HatGuard::new(hh, 10.0).unwrap();
        let mut rng = stream(5, 0);
        for _ in 0..2000 {
            let run = hat_run_until(&t, Point::new(-1, 0), &guard, Hitting::Tau1, STEP_CAP, true, &mut rng).unwrap();
            assert!(!run.path.contains(&Point::ORIGIN));
        }
    }

    #[test]
    fn torus_excursion_endpoint_kernels() {
        let spec = TorusExcursionSpec::balls(16, 0.13, 0.32).unwrap();
        let mut rng = stream(9, 0);
        let run = torus_excursions(&spec, Budget::Count(20_000), 0, &mut rng).unwrap();
        assert!(run.stream.records.iter().all(|r| spec.inner.internal_boundary().contains(r.start)
            && spec.outer_boundary().contains(r.end)));
        // start of excursion j+1 given the end of excursion j
        let ends: Vec<Point> = run.stream.records.iter().map(|r| r.end).collect();
        let z = *ends.iter().max_by_key(|e| ends.iter().filter(|f| f == e).count()).unwrap();
        let phi = torus_entrance_kernel(spec.torus, &spec.inner, &[z]).unwrap();
        let boundary = spec.inner.internal_boundary();
        let mut counts = vec![0u64; boundary.len()];
        for w in run.stream.records.windows(2) {
            if w[0].end == z {
                counts[boundary.index_of(w[1].start).unwrap()] += 1;
            }
        }
        let chi = chi_square_gof(&counts, phi.row(z).unwrap(), 5.0);
        assert!(chi.p_value > 0.01, "entrance {chi:?}");
        // end given start
        let y = run.stream.records[0].start;
        let exit = excursion_exit_kernel(&spec.inner, &spec.outer, &Srw).unwrap();
        let ob = spec.outer_boundary();
        let mut counts = vec![0u64; ob.len()];
        for r in run.stream.records.iter().filter(|r| r.start == y) {
            counts[ob.index_of(r.end).unwrap()] += 1;
        }
        let chi = chi_square_gof(&counts, exit.row(y).unwrap(), 5.0);
        assert!(chi.p_value > 0.01, "exit {chi:?}");
    }

    #[test]
    fn stream_binary_roundtrip() {
        let mut s = ExcursionStream::new(StreamSource::Iid);
        s.records.push(ExcursionRecord { start: Point::new(-3, 4), end: Point::new(10, -2), length: 77, label: 5 });
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 17 + 32);
        assert_eq!(ExcursionStream::read_binary(&buf[..]).unwrap(), s);
        buf[0] = b'X';
        assert!(ExcursionStream::read_binary(&buf[..]).is_err());
    }

    #[test]
    fn identical_seeds_give_identical_paths() {
        let a = ball(Point::ORIGIN, 5.0);
        let go = || {
            let mut rng = stream(42, 3);
            srw_run_until(Point::new(8, 0), |p| a.contains(p), Hitting::Tau0, STEP_CAP, true, &mut rng).unwrap().path
        };
        assert_eq!(go(), go());
    }
}
