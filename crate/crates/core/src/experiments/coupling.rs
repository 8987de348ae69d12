//! Soft-local-time studies: first-excursion law, coupling of torus walk
//! excursions with i.i.d. Ŝ excursions, and consistency geometries.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{ball, Point, PointSet, Torus};
use crate::potential::PotentialTable;
use crate::rng::{stream_id, tag};
use crate::slt::{inclusion_frequency, ExcursionLaw, MarkMode, SltProcess, WalkStart};
use crate::solver::HatWeights;
use crate::stats::{chi_square_gof, ChiSquare};
use crate::walks::TorusExcursionSpec;

/// Chi-square test of the SLT engine's first pick against the first start
/// density, over `draws` independent pools.
pub fn first_excursion_check(law: &ExcursionLaw, draws: u64, seed: u64) -> Result<ChiSquare> {
    let m = law.alphabet().len();
    let counts = (0..draws)
        .into_par_iter()
        .map(|r| -> Result<Vec<u64>> {
            let mut p = SltProcess::new(law, MarkMode::Kernel, stream_id(&[seed, tag("first-excursion"), r]));
            let mut c = vec![0u64; m];
            c[p.step()?.site] += 1;
            Ok(c)
        })
        .try_reduce(|| vec![0u64; m], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()))?;
    Ok(chi_square_gof(&counts, law.density(None), 5.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingStudyConfig {
    /// Radius of A.
    pub n: i64,
    /// A' = B(γn).
    pub gamma: f64,
    pub side: i64,
    /// Torus walk excursions k.
    pub k: usize,
    /// Margins k − m′ tried by the pilot, in units of √k, increasing.
    pub multipliers: Vec<f64>,
    pub pilot_target: f64,
    pub pilot_reps: u64,
    pub reps: u64,
    pub pilot_seed: u64,
    pub seed: u64,
}

impl CouplingStudyConfig {
    pub fn validate(&self) -> Result<()> {
        let outer = self.gamma * self.n as f64;
        if !(self.gamma > 1.0 && self.n >= 2) {
            return Err(Error::Config("need γ > 1 and n ≥ 2".into()));
        }
        if (self.side as f64) < 2.0 * outer + 3.0 {
            return Err(Error::Config(format!("torus side {} does not exceed diam B(γn) + 2", self.side)));
        }
        if self.multipliers.is_empty() || self.multipliers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("margin multipliers must be non-empty and increasing".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PilotRow {
    pub multiplier: f64,
    pub m_prime: usize,
    pub frequency: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingStudy {
    pub config: CouplingStudyConfig,
    pub pilot: Vec<PilotRow>,
    /// Chosen multiplier (the first reaching the pilot target, else the last).
    pub multiplier: f64,
    pub m_prime: usize,
    /// Frequency of {first m′ i.i.d. ⊆ first k walk} on the main seed.
    pub frequency: f64,
}

/// Torus walk law on the torus of side `side` for A = B(c, n),
/// A' = B(c, γn), c the torus centre, and the i.i.d. Ŝ law of
/// B(y₀, n) ⊂ B(y₀, γn), y₀ = (n², 0), moved onto the same window.
pub fn coupling_laws(table: &PotentialTable, n: i64, gamma: f64, side: i64) -> Result<(ExcursionLaw, ExcursionLaw)> {
    let c = Point::new(side / 2, side / 2);
    let spec = TorusExcursionSpec::new(Torus::new(side), ball(c, n as f64), ball(c, gamma * n as f64))?;
    let walk = ExcursionLaw::torus_walk(&spec, WalkStart::Stationary)?;
    let y0 = Point::new((n * n).max(4 * n), 0);
    let iid = ExcursionLaw::iid(&ball(y0, n as f64), &ball(y0, gamma * n as f64), &HatWeights::new(table))?.translated(c - y0);
    if iid.alphabet() != walk.alphabet() {
        return Err(Error::Config("translated ∂B does not match ∂A".into()));
    }
    Ok((walk, iid))
}

/// Calibrates the margin k − m′ on the pilot seed, then measures the
/// inclusion frequency on the main seed.
pub fn coupling_study(table: &PotentialTable, config: &CouplingStudyConfig) -> Result<CouplingStudy> {
    config.validate()?;
    let (walk, iid) = coupling_laws(table, config.n, config.gamma, config.side)?;
    let sk = (config.k as f64).sqrt();
    let m_of = |mult: f64| config.k.saturating_sub((mult * sk).ceil() as usize).max(1);
    let mut pilot = Vec::new();
    let mut chosen = *config.multipliers.last().unwrap();
    for &mult in &config.multipliers {
        let mp = m_of(mult);
        let f = inclusion_frequency(&iid, &walk, mp, config.k, config.pilot_reps, config.pilot_seed)?;
        pilot.push(PilotRow { multiplier: mult, m_prime: mp, frequency: f });
        if f >= config.pilot_target {
            chosen = mult;
            break;
        }
    }
    let m_prime = m_of(chosen);
    let frequency = inclusion_frequency(&iid, &walk, m_prime, config.k, config.reps, config.seed)?;
    Ok(CouplingStudy { config: config.clone(), pilot, multiplier: chosen, m_prime, frequency })
}

/// Interlacement laws for the consistency check: A = B(y₀, r),
/// A' = B(y₀, γr) alone, and jointly with the mirror pair around −y₀.
pub fn consistency_laws(table: &PotentialTable, y0: Point, r: f64, gamma: f64) -> Result<(ExcursionLaw, ExcursionLaw)> {
    let a = ball(y0, r);
    let a1 = ball(Point::ORIGIN - y0, r);
    let outer = ball(y0, gamma * r);
    let outer1 = ball(Point::ORIGIN - y0, gamma * r);
    if outer.iter().any(|p| outer1.contains(*p)) {
        return Err(Error::Config("A' and A'₁ overlap".into()));
    }
    let alone = ExcursionLaw::interlacements(table, &a, &outer)?;
    let union: PointSet = a.union(&a1);
    let joint = ExcursionLaw::interlacements(table, &union, &outer.union(&outer1))?;
    Ok((alone, joint))
}
