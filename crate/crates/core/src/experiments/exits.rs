//! Exact annulus exit probabilities against the logarithmic formula.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::harmonic::{annulus_escape_exact, annulus_escape_formula};
use crate::lattice::Point;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AnnulusRow {
    pub x: Point,
    pub exact: f64,
    pub formula: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnnulusReport {
    pub r: f64,
    pub big_r: f64,
    pub rows: Vec<AnnulusRow>,
    pub max_relative_error: f64,
}

/// Radii (in units of r) and angles of the default test points.
pub const ANNULUS_RADII: [f64; 4] = [1.5, 2.25, 3.0, 4.0];
pub const ANNULUS_ANGLES: [f64; 3] = [0.0, 0.3, PI / 4.0];

pub fn annulus_points(r: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for f in ANNULUS_RADII {
        for t in ANNULUS_ANGLES {
            out.push(Point::new((f * r * t.cos()).round() as i64, (f * r * t.sin()).round() as i64));
        }
    }
    out
}

/// P_x[τ(∂B(R)) < τ(B(r))] by exact solve and by
/// (ln‖x‖ − ln r)/(ln R − ln r).
pub fn annulus_check(r: f64, big_r: f64, xs: &[Point]) -> Result<AnnulusReport> {
    if !(r >= 1.0 && big_r > 2.0 * r) {
        return domain("need r ≥ 1 and R > 2r");
    }
    let exact = annulus_escape_exact(r, big_r, xs)?;
    let rows: Vec<AnnulusRow> = xs
        .iter()
        .zip(exact)
        .map(|(x, e)| {
            let f = annulus_escape_formula(*x, r, big_r).value;
            AnnulusRow { x: *x, exact: e, formula: f, relative_error: (e - f).abs() / e }
        })
        .collect();
    let max_relative_error = rows.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    Ok(AnnulusReport { r, big_r, rows, max_relative_error })
}
