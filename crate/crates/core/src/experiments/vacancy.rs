//! Vacant-set law of RI(α) on a finite window and the monotone coupling of
//! levels.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::harmonic::capacity;
use crate::interlacements::{RiCertificate, RiSampler};
use crate::lattice::{Point, PointSet};
use crate::potential::PotentialTable;
use crate::rng::{stream_for, tag};
use crate::stats::Proportion;

#[derive(Clone, Debug, Serialize)]
pub struct VacancyRow {
    /// The set S (containing 0) whose vacancy is tested.
    pub set: Vec<Point>,
    pub capacity: f64,
    pub frequency: Proportion,
    /// exp(−πα·cap(S)).
    pub target: f64,
    /// |frequency − target| in units of the binomial σ at the target.
    pub sigmas: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VacancyStudy {
    pub alpha: f64,
    pub alpha_high: f64,
    pub samples: u64,
    pub seed: u64,
    pub rows: Vec<VacancyRow>,
    /// Samples where V^{α_high} ⊄ V^α on the window.
    pub monotone_violations: u64,
    pub certificate: RiCertificate,
}

/// Sets containing the origin used alongside {0, x}.
pub fn default_vacancy_sets() -> Vec<PointSet> {
    vec![
        PointSet::new([Point::ORIGIN, Point::new(1, 0), Point::new(-2, 3), Point::new(0, -4)]),
        PointSet::new([Point::ORIGIN, Point::new(6, 0), Point::new(6, 1), Point::new(7, 0), Point::new(7, 1)]),
    ]
}

/// Frequencies of {S ⊂ V^α} for each set (0 is added to each), and the
/// count of samples violating V^{α_high} ⊆ V^α, all from one run of RI(α_high)
/// on the union window.
pub fn vacancy_study(table: &PotentialTable, alpha: f64, alpha_high: f64, sets: &[PointSet], samples: u64, seed: u64) -> Result<VacancyStudy> {
    if !(alpha > 0.0 && alpha_high >= alpha) {
        return domain("need 0 < α ≤ α_high");
    }
    let sets: Vec<PointSet> = sets.iter().map(|s| s.with_point(Point::ORIGIN)).collect();
    if sets.iter().any(|s| s.len() < 2) {
        return domain("each set needs a point besides the origin");
    }
    let window = sets.iter().fold(PointSet::new([Point::ORIGIN]), |w, s| w.union(s));
    let sampler = RiSampler::new(table, &window)?;
    let idx: Vec<Vec<usize>> = sets.iter().map(|s| s.iter().map(|p| sampler.window().index_of(*p).unwrap()).collect()).collect();
    let m = sets.len();
    let (hits, violations) = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<(Vec<u64>, u64)> {
            let mut rng = stream_for(seed, &[tag("vacancy-study"), i]);
            let trace = sampler.sample(alpha_high, &mut rng)?;
            let lo = trace.occupied(alpha);
            let hi = trace.occupied(alpha_high);
            let bad = lo.iter().zip(&hi).any(|(l, h)| *l && !*h) as u64;
            Ok((idx.iter().map(|s| s.iter().all(|&k| !lo[k]) as u64).collect(), bad))
        })
        .try_reduce(
            || (vec![0; m], 0),
            |a, b| Ok((a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect(), a.1 + b.1)),
        )?;
    let mut rows = Vec::with_capacity(m);
    for (s, h) in sets.iter().zip(hits) {
        let cap = capacity(table, s)?.value;
        let target = (-PI * alpha * cap).exp();
        let frequency = Proportion::new(h, samples);
        let sd = (target * (1.0 - target) / samples as f64).sqrt();
        rows.push(VacancyRow { set: s.points().to_vec(), capacity: cap, frequency, target, sigmas: (frequency.estimate - target).abs() / sd });
    }
    Ok(VacancyStudy { alpha, alpha_high, samples, seed, rows, monotone_violations: violations, certificate: sampler.certificate() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_set_matches_capacity() {
        let t = PotentialTable::shared(64).unwrap();
        let s = vacancy_study(&t, 1.0, 1.5, &[PointSet::new([Point::new(1, 0)])], 4000, 7).unwrap();
        assert_eq!(s.monotone_violations, 0);
        let r = &s.rows[0];
        assert!((r.capacity - t.a(Point::new(1, 0)) / 2.0).abs() < 1e-12);
        assert!((r.capacity - 0.5).abs() < 1e-4);
        assert!(r.sigmas < 4.0, "{r:?}");
    }
}
