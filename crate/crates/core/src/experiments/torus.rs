//! Excursion counts of the torus walk between two concentric balls.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::rng::{stream_for, tag};
use crate::stats::{mean, variance};
use crate::walks::{torus_excursions, Budget, TorusExcursionSpec};

/// Half-width factor δ of the tail event |N − mean| > δ·mean.
pub const TAIL_DELTA: f64 = 0.5;

#[derive(Clone, Debug, Serialize)]
pub struct TorusCountRow {
    pub t: u64,
    pub reps: u64,
    pub mean: f64,
    pub std_err: f64,
    /// πt / (2n² ln(γ₂/γ₁)).
    pub formula: f64,
    pub relative_error: f64,
    /// Frequency of |N*_t − formula| > δ·formula.
    pub tail: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TorusExcursionReport {
    pub n: i64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub seed: u64,
    pub rows: Vec<TorusCountRow>,
}

impl TorusExcursionReport {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=torus_excursions/1")?;
        writeln!(w, "n,gamma1,gamma2,t,reps,mean,std_err,formula,relative_error,tail")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                self.n, self.gamma1, self.gamma2, r.t, r.reps, r.mean, r.std_err, r.formula, r.relative_error, r.tail
            )?;
        }
        Ok(())
    }
}

/// N*_t over `reps` stationary torus walks, for each t in `ts`.
pub fn torus_excursion_test(n: i64, gamma1: f64, gamma2: f64, ts: &[u64], reps: u64, seed: u64) -> Result<TorusExcursionReport> {
    let spec = TorusExcursionSpec::balls(n, gamma1, gamma2)?;
    if ts.iter().any(|&t| t < (n * n) as u64) {
        return domain("torus excursion counts need t ≥ n²");
    }
    if reps < 2 {
        return domain("need at least two repetitions");
    }
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let counts: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| -> Result<f64> {
                let mut rng = stream_for(seed, &[tag("torus-excursions"), t, r]);
                Ok(torus_excursions(&spec, Budget::Time(t), r, &mut rng)?.completed as f64)
            })
            .collect::<Result<_>>()?;
        let m = mean(&counts);
        let formula = TorusExcursionSpec::mean_formula(n, gamma1, gamma2, t);
        let tail = counts.iter().filter(|c| (*c - formula).abs() > TAIL_DELTA * formula).count() as f64 / reps as f64;
        rows.push(TorusCountRow {
            t,
            reps,
            mean: m,
            std_err: (variance(&counts) / reps as f64).sqrt(),
            formula,
            relative_error: (m - formula).abs() / formula,
            tail,
        });
    }
    Ok(TorusExcursionReport { n, gamma1, gamma2, seed, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_grows_with_time() {
        let r = torus_excursion_test(30, 0.15, 0.35, &[900, 3600], 200, 1).unwrap();
        assert!(r.rows[1].mean > 2.5 * r.rows[0].mean);
    }
}
