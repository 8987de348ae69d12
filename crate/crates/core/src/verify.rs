//! The acceptance criteria as runnable checks.
//!
//! Each check returns an [`Outcome`] with a one-line verdict and the metrics
//! it was decided on. Checks listed with a declared reason are reported like
//! any other but are known not to be reachable at desk scale; see the README.

use std::f64::consts::PI;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;
use crate::experiments::coupling::{consistency_laws, coupling_study, first_excursion_check, CouplingStudyConfig};
use crate::experiments::critical::{critical_pipeline, CriticalRunConfig, DEFAULT_LADDER};
use crate::experiments::exits::{annulus_check, annulus_points};
use crate::experiments::regularity::{default_x_choices, holder_scan, reversibility_check};
use crate::experiments::torus::torus_excursion_test;
use crate::experiments::vacancy::{default_vacancy_sets, vacancy_study};
use crate::interlacements::conditional_decoupling;
use crate::lattice::{ball, Point, PointSet};
use crate::potential::PotentialTable;
use crate::reference::potential_quadrature;
use crate::slt::{consistency_experiment, deviation_experiment, ExcursionLaw, WalkStart};
use crate::stats::linear_fit;
use crate::walks::TorusExcursionSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Profile {
    Full,
    /// Reduced sizes and sample counts; same tolerances.
    Quick,
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    /// Why the check is expected to fail at desk scale, if it is.
    pub declared: Option<&'static str>,
    pub metrics: Value,
}

impl Outcome {
    /// `PASS AC1 ...` or `FAIL AC8b ... [declared: ...]`.
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        match (self.pass, self.declared) {
            (false, Some(why)) => format!("{verdict} {} {}: {} [declared: {why}]", self.id, self.title, self.detail),
            _ => format!("{verdict} {} {}: {}", self.id, self.title, self.detail),
        }
    }

    /// A failure that is not declared.
    pub fn is_regression(&self) -> bool {
        !self.pass && self.declared.is_none()
    }
}

pub struct Check {
    pub id: &'static str,
    pub title: &'static str,
    pub declared: Option<&'static str>,
    run: fn(Profile) -> Result<(bool, String, Value)>,
}

impl Check {
    pub fn run(&self, profile: Profile) -> Outcome {
        let (pass, detail, metrics) = match (self.run)(profile) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}"), Value::Null),
        };
        Outcome { id: self.id, title: self.title, pass, detail, declared: self.declared, metrics }
    }
}

pub const PHI_DECLARED: &str = "E N_k exceeds the centring 2ln²b/lnγ by about 2πκ ln b/lnγ, \
a bias of order (ln b)^{-1/2} in units of the CLT scale; reaching ±0.1 needs ln b in the hundreds";

pub fn checks() -> Vec<Check> {
    vec![
        Check { id: "AC1", title: "potential kernel", declared: None, run: ac1 },
        Check { id: "AC2", title: "annulus exit probabilities", declared: None, run: ac2 },
        Check { id: "AC3", title: "reversibility identity", declared: None, run: ac3 },
        Check { id: "AC4", title: "vacant-set law", declared: None, run: ac4 },
        Check { id: "AC5", title: "torus excursion counts", declared: None, run: ac5 },
        Check { id: "AC6a", title: "SLT first excursion law", declared: None, run: ac6a },
        Check { id: "AC6b", title: "SLT sup-deviation slope", declared: None, run: ac6b },
        Check { id: "AC6c", title: "SLT consistency at k=1", declared: None, run: ac6c },
        Check { id: "AC6d", title: "SLT coupling inclusion", declared: None, run: ac6d },
        Check { id: "AC7", title: "entrance-measure regularity", declared: None, run: ac7 },
        Check { id: "AC8a", title: "critical pipeline implication", declared: None, run: ac8a },
        Check { id: "AC8b", title: "critical pipeline Φ frequency", declared: Some(PHI_DECLARED), run: ac8b },
        Check { id: "AC8c", title: "conditional decoupling trend", declared: None, run: ac8c },
    ]
}

pub fn check(id: &str) -> Option<Check> {
    checks().into_iter().find(|c| c.id.eq_ignore_ascii_case(id))
}

pub fn run_all(profile: Profile) -> Vec<Outcome> {
    checks().iter().map(|c| c.run(profile)).collect()
}

fn pick<T>(p: Profile, full: T, quick: T) -> T {
    match p {
        Profile::Full => full,
        Profile::Quick => quick,
    }
}

fn table() -> Result<std::sync::Arc<PotentialTable>> {
    PotentialTable::shared(256)
}

/// Tolerance on a((1,0)) − 1, a((1,1)) − 4/π and the quadrature comparison.
pub const AC1_VALUE_TOL: f64 = 1e-5;
pub const AC1_RESIDUAL_TOL: f64 = 1e-10;
/// Relative spread allowed for the fitted ‖x‖⁻² constant across radii.
pub const AC1_FIT_SPREAD: f64 = 0.01;

fn ac1(p: Profile) -> Result<(bool, String, Value)> {
    let r = pick(p, 2048, 512);
    let start = std::time::Instant::now();
    let t = PotentialTable::shared(r)?;
    let secs = start.elapsed().as_secs_f64();
    let e10 = (t.a(Point::new(1, 0)) - 1.0).abs();
    let e11 = (t.a(Point::new(1, 1)) - 4.0 / PI).abs();
    let eq = (t.a(Point::new(3, 2)) - potential_quadrature(3, 2)).abs();
    let res = t.harmonicity_residual();
    let radii = pick(p, [256u32, 512, 1024], [128, 256, 512]);
    let mut cs = Vec::new();
    for rr in radii {
        cs.push(PotentialTable::shared(rr)?.fit_correction(8.0, rr as f64 / 4.0).coefficient);
    }
    let lo = cs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = cs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / lo.abs().max(hi.abs());
    let pass = e10 <= AC1_VALUE_TOL && e11 <= AC1_VALUE_TOL && eq <= AC1_VALUE_TOL && res <= AC1_RESIDUAL_TOL && spread <= AC1_FIT_SPREAD;
    Ok((
        pass,
        format!("R={r}: |a(1,0)−1|={e10:.1e}, |a(1,1)−4/π|={e11:.1e}, quadrature gap {eq:.1e}, residual {res:.1e}, ‖x‖⁻² constants {cs:.5?} spread {spread:.1e}, {secs:.1}s"),
        json!({"radius": r, "err_10": e10, "err_11": e11, "quadrature_gap": eq, "residual": res, "constants": cs, "spread": spread, "seconds": secs}),
    ))
}

fn ac2(_: Profile) -> Result<(bool, String, Value)> {
    let a = annulus_check(20.0, 100.0, &annulus_points(20.0))?;
    let b = annulus_check(40.0, 200.0, &annulus_points(40.0))?;
    let pass = a.max_relative_error <= 0.05 && b.max_relative_error <= 0.025;
    Ok((
        pass,
        format!("max relative error {:.4} at r=20 (≤0.05), {:.4} at r=40 (≤0.025)", a.max_relative_error, b.max_relative_error),
        json!({"r20": a, "r40": b}),
    ))
}

pub const AC3_TOL: f64 = 1e-9;

fn ac3(_: Profile) -> Result<(bool, String, Value)> {
    let a = reversibility_check(20, 3.0)?;
    let b = reversibility_check(40, 3.0)?;
    let pass = a.max_residual <= AC3_TOL && b.max_residual <= AC3_TOL;
    Ok((pass, format!("residual {:.1e} at n=20, {:.1e} at n=40 (≤1e-9)", a.max_residual, b.max_residual), json!({"n20": a, "n40": b})))
}

fn ac4(p: Profile) -> Result<(bool, String, Value)> {
    let t = table()?;
    let samples = pick(p, 100_000, 10_000);
    let mut sets = vec![PointSet::new([Point::new(3, 4)])];
    sets.extend(default_vacancy_sets());
    let s = vacancy_study(&t, 1.0, 1.5, &sets, samples, 0xAC4)?;
    let worst = s.rows.iter().map(|r| r.sigmas).fold(0.0, f64::max);
    let pass = worst <= 3.0 && s.monotone_violations == 0;
    let x = &s.rows[0];
    Ok((
        pass,
        format!(
            "P[(3,4)∈V¹]={:.5} vs {:.5} ({:.2}σ); sets at {:.2}σ, {:.2}σ; {} monotonicity violations in {samples} samples",
            x.frequency.estimate, x.target, x.sigmas, s.rows[1].sigmas, s.rows[2].sigmas, s.monotone_violations
        ),
        serde_json::to_value(&s)?,
    ))
}

fn ac5(p: Profile) -> Result<(bool, String, Value)> {
    let n = 60;
    let t = 3 * (n * n) as u64;
    let reps = pick(p, 1000, 200);
    let r = torus_excursion_test(n, 0.15, 0.35, &[t, 2 * t, 4 * t], reps, 0xAC5)?;
    let first = &r.rows[0];
    let last = &r.rows[2];
    let pass = first.relative_error <= 0.1 && last.tail < first.tail;
    Ok((
        pass,
        format!(
            "mean {:.3} vs {:.3} (rel. error {:.3} ≤ 0.1); tail {:.3} at t → {:.3} at 4t",
            first.mean, first.formula, first.relative_error, first.tail, last.tail
        ),
        serde_json::to_value(&r)?,
    ))
}

fn ac6a(p: Profile) -> Result<(bool, String, Value)> {
    let spec = TorusExcursionSpec::balls(20, 0.15, 0.3)?;
    let law = ExcursionLaw::torus_walk(&spec, WalkStart::Point(Point::new(1, 1)))?;
    let chi = first_excursion_check(&law, pick(p, 50_000, 10_000), 0xAC6A)?;
    Ok((chi.p_value > 0.01, format!("chi-square {:.1} on {} dof, p={:.3}", chi.statistic, chi.dof, chi.p_value), serde_json::to_value(chi)?))
}

fn ac6b(p: Profile) -> Result<(bool, String, Value)> {
    let spec = TorusExcursionSpec::balls(40, 0.1, 0.25)?;
    let law = ExcursionLaw::torus_walk(&spec, WalkStart::Stationary)?;
    let d = deviation_experiment(&law, &[64, 256, 1024], pick(p, 200, 60), 0xAC6B)?;
    let s = d.fit.slope;
    Ok(((0.4..=0.6).contains(&s), format!("slope {s:.3} (R²={:.4}) in [0.4, 0.6]", d.fit.r_squared), serde_json::to_value(&d)?))
}

fn ac6c(p: Profile) -> Result<(bool, String, Value)> {
    let t = table()?;
    let (alone, joint) = consistency_laws(&t, Point::new(100, 0), 3.0, 2.0)?;
    let reps = pick(p, 10_000, 2_000);
    let c = consistency_experiment(&alone, &joint, 1, reps, 0xAC6C)?;
    Ok((
        c.global_p > 0.01,
        format!("Bonferroni KS p={:.3} over {} sites, max statistic {:.4}, {reps} reps", c.global_p, c.p_values.len(), c.max_statistic),
        serde_json::to_value(&c)?,
    ))
}

fn ac6d(p: Profile) -> Result<(bool, String, Value)> {
    let t = table()?;
    let cfg = CouplingStudyConfig {
        n: 10,
        gamma: 2.0,
        side: 48,
        k: 400,
        multipliers: vec![1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0],
        pilot_target: 0.95,
        pilot_reps: pick(p, 200, 100),
        reps: pick(p, 500, 100),
        pilot_seed: 0xAC6D0,
        seed: 0xAC6D1,
    };
    let s = coupling_study(&t, &cfg)?;
    Ok((
        s.frequency >= 0.9,
        format!("margin {}√k (m′={}, k={}) from the pilot; inclusion frequency {:.3} ≥ 0.9", s.multiplier, s.m_prime, cfg.k, s.frequency),
        serde_json::to_value(&s)?,
    ))
}

fn ac7(p: Profile) -> Result<(bool, String, Value)> {
    let t = table()?;
    let ns: Vec<i64> = pick(p, vec![20, 40, 80], vec![20, 40]);
    let r = holder_scan(&t, &ns, 4.0, 0.1, &default_x_choices(4.0, 0.1))?;
    let diagonal_ok = r.scales.iter().all(|s| s.diagonal_max == 0.0 && s.antisymmetry_max == 0.0);
    let per_scale_ok = r.scales.iter().all(|s| s.fit.slope > 0.0 && s.fit.r_squared >= 0.9);
    let pass = per_scale_ok && r.pooled.slope > 0.0 && r.pooled.r_squared >= 0.9 && diagonal_ok;
    let fits: Vec<String> = r.scales.iter().map(|s| format!("n={}: β̂={:.3} R²={:.3}", s.n, s.fit.slope, s.fit.r_squared)).collect();
    Ok((
        pass,
        format!("{}; pooled β̂={:.3} R²={:.3}; Rfar/2 sensitivity ≤ {:.1e}", fits.join(", "), r.pooled.slope, r.pooled.r_squared, r.scales.iter().map(|s| s.far_sensitivity).fold(0.0, f64::max)),
        serde_json::to_value(&r)?,
    ))
}

fn critical_config(p: Profile) -> Result<CriticalRunConfig> {
    let ladder = pick(p, DEFAULT_LADDER.to_vec(), DEFAULT_LADDER[..2].to_vec());
    CriticalRunConfig::new(ladder, 1.1, 0.45, pick(p, 64, 8), pick(p, 20_000, 4_000), 0xAC8)
}

fn ac8a(p: Profile) -> Result<(bool, String, Value)> {
    let t = table()?;
    let r = critical_pipeline(&t, &critical_config(p)?)?;
    let failures: u64 = r.scales.iter().map(|s| s.implication_failures + s.inclusion_failures).sum();
    let conj: u64 = r.scales.iter().map(|s| s.conjunction).sum();
    let runs: u64 = r.config.reps * r.scales.len() as u64;
    let trend: Vec<String> = r.scales.iter().map(|s| format!(
                "b={:.0}: Φ {:.2} J {:.2} M {:.2} (median L̂/L̃ max {:.3}, uncovered {:.0})",
                s.thresholds.b, s.phi.estimate, s.j.estimate, s.m.estimate, s.domination_ratio, s.uncovered_median
            )).collect();
    let vacuous = if conj == 0 { " (vacuous: the conjunction never occurred)" } else { "" };
    Ok((
        failures == 0,
        format!("{failures} implication/inclusion failures; conjunction in {conj} of {runs} runs{vacuous}; {}", trend.join("; ")),
        serde_json::to_value(&r)?,
    ))
}

fn ac8b(p: Profile) -> Result<(bool, String, Value)> {
    let t = table()?;
    let mut cfg = critical_config(p)?;
    cfg.reps = 1;
    cfg.bs = vec![*cfg.bs.last().unwrap()];
    let r = critical_pipeline(&t, &cfg)?;
    let s = &r.scales[0];
    let f = s.phi_counts.estimate;
    Ok((
        (f - cfg.beta).abs() <= 0.1,
        format!(
            "b={:.0}: P[Φ]={:.3}±{:.3} vs β={} (E N_k={:.0}, centring {:.0}, standardised mean {:.2}, sd {:.2})",
            s.thresholds.b, f, s.phi_counts.std_err, cfg.beta, s.nk_mean_exact, s.thresholds.centre, s.nk_standardised_mean, s.nk_standardised_sd
        ),
        serde_json::to_value(s)?,
    ))
}

fn ac8c(p: Profile) -> Result<(bool, String, Value)> {
    let t = table()?;
    let a = ball(Point::ORIGIN, 1.0);
    let d = conditional_decoupling(&t, 0.5, &a, &[8.0, 16.0, 32.0], pick(p, 400_000, 100_000), 0xAC8C)?;
    let limit = d[0].limit;
    let exact_monotone = d.windows(2).all(|w| (w[1].exact - limit).abs() < (w[0].exact - limit).abs());
    let within = d.iter().all(|q| (q.estimate - q.exact).abs() <= 3.0 * q.std_err);
    let fit = linear_fit(&d.iter().map(|q| q.multiple.ln()).collect::<Vec<_>>(), &d.iter().map(|q| (q.estimate - limit).abs()).collect::<Vec<_>>());
    let pass = exact_monotone && within && fit.slope < 0.0;
    let est: Vec<String> = d.iter().map(|q| format!("{:.4}±{:.4} (exact {:.4})", q.estimate, q.std_err, q.exact)).collect();
    Ok((
        pass,
        format!("estimates {} toward {:.4}; distance slope {:.4}", est.join(", "), limit, fit.slope),
        serde_json::to_value(&d)?,
    ))
}
