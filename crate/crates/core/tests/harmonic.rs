use std::f64::consts::PI;

use ri2d::harmonic::{
    capacity, distant_ball_capacity, escape_to_radius_exact, escape_to_radius_formula, excursion_exit_kernel, harmonic_measure,
    hat_equilibrium, hat_hit_prob_formula, relative_hm, HatHitting, HmMethod, PlaneHitting,
};
use ri2d::lattice::{ball, Point, PointSet};
use ri2d::solver::{AbsorbingSystem, BackendChoice, HatWeights, Srw, Topology};
use ri2d::PotentialTable;

fn table() -> std::sync::Arc<PotentialTable> {
    PotentialTable::shared(256).unwrap()
}

#[test]
fn two_points_share_the_harmonic_measure() {
    let t = table();
    let x = Point::new(10, 0);
    let a = PointSet::new([Point::ORIGIN, x]);
    let hm = harmonic_measure(&t, &a, HmMethod::Limit).unwrap();
    assert!((hm.weight(Point::ORIGIN) - 0.5).abs() < 1e-12);
    assert!((hm.weight(x) - 0.5).abs() < 1e-12);
    let cap = capacity(&t, &a).unwrap();
    assert!((cap.value - t.a(x) / 2.0).abs() < 1e-12);
}

#[test]
fn singleton_origin_has_zero_capacity() {
    let cap = capacity(&table(), &PointSet::new([Point::ORIGIN])).unwrap();
    assert_eq!(cap.value, 0.0);
}

#[test]
fn capacity_is_translation_invariant() {
    let t = table();
    let x = Point::new(7, -3);
    let base = PointSet::new([Point::ORIGIN, x]).union(&ball(Point::new(2, 2), 2.0));
    let c0 = capacity(&t, &base).unwrap();
    for z in [Point::new(5, 9), Point::new(-40, 11)] {
        let c = capacity(&t, &base.translate(z)).unwrap();
        assert!((c.value - c0.value).abs() < 1e-10 + 2.0 * (c.kernel_error + c0.kernel_error));
    }
}

// n·hm over ∂B(n), n = 20, 40.
fn hm_range(n: i64) -> (f64, f64, f64) {
    let t = table();
    let hm = harmonic_measure(&t, &ball(Point::ORIGIN, n as f64), HmMethod::Limit).unwrap();
    let s: f64 = hm.weights.iter().sum();
    let nf = n as f64;
    let lo = hm.weights.iter().cloned().fold(f64::INFINITY, f64::min) * nf;
    let hi = hm.weights.iter().cloned().fold(0.0, f64::max) * nf;
    (s, lo, hi)
}

#[test]
fn ball_harmonic_measure_is_of_order_one_over_n() {
    let (s20, lo20, hi20) = hm_range(20);
    let (s40, lo40, hi40) = hm_range(40);
    assert!((s20 - 1.0).abs() < 1e-12 && (s40 - 1.0).abs() < 1e-12);
    assert!(lo20 > 0.0 && lo40 > 0.0);
    assert!(hi20 < 1.0 && hi40 < 1.0);
    assert!((lo40 / lo20 - 1.0).abs() < 0.25 && (hi40 / hi20 - 1.0).abs() < 0.25, "{lo20} {hi20} {lo40} {hi40}");
}

#[test]
fn far_circle_route_agrees_with_the_limit() {
    let t = table();
    let a = ball(Point::new(3, -1), 4.0);
    let lim = harmonic_measure(&t, &a, HmMethod::Limit).unwrap();
    let far = harmonic_measure(&t, &a, HmMethod::FarCircle { r_far: 128.0 }).unwrap();
    let l1: f64 = lim.weights.iter().zip(&far.weights).map(|(x, y)| (x - y).abs()).sum();
    assert!(l1 <= far.certificate.order_bound, "{l1}");
}

#[test]
fn hat_equilibrium_is_the_biased_harmonic_measure() {
    let t = table();
    let a = PointSet::new([Point::ORIGIN, Point::new(3, 0), Point::new(0, 5), Point::new(-2, -2)]).union(&ball(Point::new(6, 6), 1.0));
    let hh = HatHitting::new(&t, &a).unwrap();
    let eq = hat_equilibrium(&hh).unwrap();
    let hm = harmonic_measure(&t, &a, HmMethod::Limit).unwrap();
    for (i, p) in eq.support.iter().enumerate() {
        assert!((eq.e_hat[i] - t.a(*p) * hm.weight(*p)).abs() < 1e-10, "{p}");
    }
    assert!((eq.hm_hat.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    // the centre of the small ball cannot escape
    assert_eq!(eq.weight(Point::new(6, 6)), 0.0);
}

#[test]
fn relative_hm_is_invariant_for_the_endpoint_chain() {
    let t = table();
    let a = ball(Point::ORIGIN, 8.0);
    let outer = ball(Point::ORIGIN, 20.0);
    let rel = relative_hm(&a, &outer, &Srw).unwrap();
    assert!((rel.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let exit = excursion_exit_kernel(&a, &outer, &Srw).unwrap();
    // law of the exit point under the relative harmonic measure
    let mut nu = vec![0.0; exit.targets.len()];
    for (y, w) in rel.support.iter().zip(&rel.weights) {
        for (v, e) in nu.iter_mut().zip(exit.row(*y).unwrap()) {
            *v += w * e;
        }
    }
    // from each exit point, where the walk next enters A
    let ph = PlaneHitting::new(&t, &a).unwrap();
    let entries = ph.entrance_laws(exit.targets.points()).unwrap();
    let mut back = vec![0.0; rel.support.len()];
    for (w, row) in nu.iter().zip(&entries) {
        for (b, h) in back.iter_mut().zip(row) {
            *b += w * h;
        }
    }
    let residual = back.iter().zip(&rel.weights).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(residual <= 1e-8, "{residual}");
}

#[test]
fn relative_hm_is_close_to_hm() {
    let t = table();
    let y0 = Point::new(30, 0);
    let a = ball(y0, 20.0);
    let rel = relative_hm(&a, &ball(y0, 80.0), &Srw).unwrap();
    let hm = harmonic_measure(&t, &a, HmMethod::Limit).unwrap();
    for (y, w) in rel.support.iter().zip(&rel.weights) {
        let ratio = w / hm.weight(*y);
        assert!((0.5..=2.0).contains(&ratio), "{y}: {ratio}");
    }
}

#[test]
fn distant_ball_capacity_formula() {
    let t = table();
    let y = Point::new(200, 0);
    let f = distant_ball_capacity(&t, y, 10.0).unwrap();
    let exact = capacity(&t, &ball(y, 10.0).with_point(Point::ORIGIN)).unwrap();
    assert!((f.value - exact.value).abs() / exact.value <= f.error_order, "{} {}", f.value, exact.value);
    let caps: Vec<f64> = [5.0, 10.0, 20.0].iter().map(|r| distant_ball_capacity(&t, Point::new(500, 0), *r).unwrap().value).collect();
    assert!(caps[0] < caps[1] && caps[1] < caps[2], "{caps:?}");
    // cap(B(b e₁, √b) ∪ {0}) / ln b approaches 4/(3π)
    let gaps: Vec<f64> = [1e4f64, 1e6, 1e8]
        .iter()
        .map(|b| (distant_ball_capacity(&t, Point::new(*b as i64, 0), b.sqrt()).unwrap().value / b.ln() - 4.0 / (3.0 * PI)).abs())
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn hit_probability_formula_against_exact() {
    let t = table();
    let (y, r) = (Point::new(200, 0), 10.0);
    let hh = HatHitting::new(&t, &ball(y, r)).unwrap();
    for x in [Point::new(50, 0), Point::new(0, 50), Point::new(-30, 40)] {
        let f = hat_hit_prob_formula(&t, x, y, r).unwrap();
        assert!((0.0..=1.0).contains(&f.value));
        let exact = hh.hit_probability(x).unwrap();
        assert!((f.value - exact).abs() <= f.error_order, "{x}: {} vs {exact}", f.value);
    }
}

#[test]
fn hit_probability_from_the_outer_circle_trend() {
    // from ∂B(y, γ r) with r = √b the miss probability tracks 2lnγ/(3 ln b)
    let t = table();
    let gamma = 2.0;
    let errs: Vec<f64> = [1e4f64, 1e6]
        .iter()
        .map(|b| {
            let y = Point::new(*b as i64, 0);
            let r = b.sqrt();
            let x = Point::new(y.x - (gamma * r) as i64, 0);
            let p = hat_hit_prob_formula(&t, x, y, r).unwrap().value;
            ((1.0 - p) / (2.0 * gamma.ln() / (3.0 * b.ln())) - 1.0).abs()
        })
        .collect();
    assert!(errs[1] < errs[0], "{errs:?}");
}

#[test]
fn escape_to_radius_exact_and_formula() {
    let t = table();
    let rel_n: Vec<f64> = [30.0, 60.0]
        .iter()
        .map(|&n| {
            let (starts, exact) = escape_to_radius_exact(n, n).unwrap();
            let hm = harmonic_measure(&t, &ball(Point::ORIGIN, n), HmMethod::Limit).unwrap();
            // the O(1/n) sits in the denominator: compare (2/π)ln 2 with hm/P
            starts
                .iter()
                .zip(&exact)
                .filter(|(_, e)| **e > 0.0)
                .map(|(x, e)| {
                    let f = escape_to_radius_formula(hm.weight(*x), n, n).value;
                    (f / e - 1.0).abs() * n
                })
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(rel_n[0] < 5.0 && rel_n[1] < 5.0, "{rel_n:?}");
    assert!((rel_n[1] / rel_n[0] - 1.0).abs() < 0.5, "{rel_n:?}");
    // the formula has no jump around k = n²/2
    let (n, h) = (30.0, 0.01);
    let k = n * n / 2.0;
    let jump = (escape_to_radius_formula(h, n, k + 1.0).value - escape_to_radius_formula(h, n, k - 1.0).value).abs();
    let f = escape_to_radius_formula(h, n, k);
    assert!(jump <= f.value * f.error_order, "{jump}");
    // the exact value decreases in k
    let x = Point::new(30, 0);
    let vals: Vec<f64> = [5.0, 10.0, 20.0, 40.0]
        .iter()
        .map(|&k| {
            let (s, e) = escape_to_radius_exact(n, k).unwrap();
            e[s.index_of(x).unwrap()]
        })
        .collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
}

#[test]
fn hat_and_srw_exit_laws_agree_on_distant_sets() {
    // Exit law from the centre of A = B(y, r) onto ∂A for S and for Ŝ, with
    // the TV distance scaled by s ln s / r, s = dist(0, A).
    let t = table();
    let hat = HatWeights::new(&t);
    let r = 20.0;
    let scaled: Vec<f64> = [100i64, 200, 400]
        .iter()
        .map(|&s| {
            let y = Point::new(s, 0);
            let a = ball(y, r);
            let b = a.internal_boundary();
            let srw = AbsorbingSystem::within(&a, &b, Topology::Plane, &Srw, BackendChoice::Direct).unwrap();
            let conditioned = AbsorbingSystem::within(&a, &b, Topology::Plane, &hat, BackendChoice::Direct).unwrap();
            let p = srw.poisson_kernel_row(y).unwrap();
            let q = conditioned.poisson_kernel_row(y).unwrap();
            let tv = 0.5 * p.iter().zip(&q).map(|(u, v)| (u - v).abs()).sum::<f64>();
            let d = s as f64 - r;
            tv * d * d.ln() / r
        })
        .collect();
    assert!(scaled.iter().all(|c| *c < 2.0), "{scaled:?}");
    assert!((scaled[2] / scaled[1] - 1.0).abs() < 0.3, "{scaled:?}");
}
