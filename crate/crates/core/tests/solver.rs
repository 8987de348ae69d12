use ri2d::experiments::regularity::annulus_domain;
use ri2d::harmonic::{annulus_escape_exact, annulus_escape_formula};
use ri2d::lattice::{ball, Point, PointSet};
use ri2d::solver::{AbsorbingSystem, BackendChoice, Srw, Topology};

fn annulus_system(n: i64, c: f64, choice: BackendChoice) -> AbsorbingSystem {
    let (a, boundary) = annulus_domain(n, c);
    AbsorbingSystem::within(&a, &boundary, Topology::Plane, &Srw, choice).unwrap()
}

fn inner_ring(n: i64) -> PointSet {
    ball(Point::ORIGIN, n as f64).internal_boundary()
}

#[test]
fn unit_ball_kernel_and_green() {
    let b = ball(Point::ORIGIN, 1.0);
    let sys = AbsorbingSystem::within(&b, &b.internal_boundary(), Topology::Plane, &Srw, BackendChoice::Direct).unwrap();
    let row = sys.poisson_kernel_row(Point::ORIGIN).unwrap();
    assert_eq!(row.len(), 4);
    assert!(row.iter().all(|v| (v - 0.25).abs() < 1e-15));
    assert!((sys.green_row(Point::ORIGIN).unwrap()[0] - 1.0).abs() < 1e-15);
}

#[test]
fn rows_are_distributions_and_backends_agree() {
    let direct = annulus_system(12, 3.0, BackendChoice::Direct);
    let iter = annulus_system(12, 3.0, BackendChoice::Iterative);
    let xs = [Point::new(20, 3), Point::new(-15, 14), Point::new(0, 30)];
    let a = direct.poisson_kernel_rows(&xs).unwrap();
    let b = iter.poisson_kernel_rows(&xs).unwrap();
    for (ra, rb) in a.iter().zip(&b) {
        assert!((ra.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(ra.iter().all(|v| *v >= -1e-15));
        let d = ra.iter().zip(rb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d < 1e-10, "{d}");
    }
}

#[test]
fn srw_green_is_symmetric() {
    let sys = annulus_system(10, 3.0, BackendChoice::Direct);
    let pts = [Point::new(15, 0), Point::new(-11, 7), Point::new(3, -22), Point::new(20, 20)];
    let rows: Vec<Vec<f64>> = pts.iter().map(|x| sys.green_row(*x).unwrap()).collect();
    for (i, x) in pts.iter().enumerate() {
        for (j, y) in pts.iter().enumerate() {
            let gxy = rows[i][sys.interior().index_of(*y).unwrap()];
            let gyx = rows[j][sys.interior().index_of(*x).unwrap()];
            assert!((gxy - gyx).abs() <= 1e-10 * gxy.max(1.0), "{x} {y}");
        }
    }
}

// n·H(x, u) over u ∈ ∂B(n) for x at distance 2.25n.
fn entrance_range(n: i64) -> (f64, f64) {
    let sys = annulus_system(n, 4.0, BackendChoice::Auto);
    let x = Point::new(9 * n / 4, 0);
    let row = sys.poisson_kernel_row(x).unwrap();
    let ring = inner_ring(n);
    let vals: Vec<f64> = sys.absorbing().iter().zip(&row).filter(|(u, _)| ring.contains(**u)).map(|(_, h)| h * n as f64).collect();
    (vals.iter().cloned().fold(f64::INFINITY, f64::min), vals.iter().cloned().fold(0.0, f64::max))
}

#[test]
fn annulus_entrance_is_of_order_one_over_n() {
    let ranges: Vec<(f64, f64)> = [20, 40, 80].iter().map(|&n| entrance_range(n)).collect();
    // The far side is shaded by the outer circle, so c₅ is small (≈ 6e-4
    // here) but it does not move with n.
    for (lo, hi) in &ranges {
        assert!(*lo > 1e-4 && *hi < 1.0, "{lo} {hi}");
    }
    for w in ranges.windows(2) {
        assert!((w[1].1 / w[0].1 - 1.0).abs() < 0.25, "{ranges:?}");
        assert!((w[1].0 / w[0].0 - 1.0).abs() < 0.25, "{ranges:?}");
    }
}

// G_{A_n}(u₁, u₂) over well-separated pairs in the middle of the annulus.
fn green_range(n: i64) -> (f64, f64) {
    let sys = annulus_system(n, 4.0, BackendChoice::Auto);
    let nf = n as f64;
    let at = |r: f64, th: f64| Point::new((r * nf * th.cos()).round() as i64, (r * nf * th.sin()).round() as i64);
    let us: Vec<Point> = [(1.6, 0.0), (2.5, 1.0), (3.4, 2.0), (2.0, 3.5), (3.0, 5.0)].iter().map(|(r, t)| at(*r, *t)).collect();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for u1 in &us {
        let row = sys.green_row(*u1).unwrap();
        for u2 in &us {
            if (*u1 - *u2).norm() >= 0.5 * nf {
                let g = row[sys.interior().index_of(*u2).unwrap()];
                lo = lo.min(g);
                hi = hi.max(g);
            }
        }
    }
    (lo, hi)
}

#[test]
fn annulus_green_is_scale_free() {
    let a = green_range(20);
    let b = green_range(40);
    assert!(a.0 > 0.0 && b.0 > 0.0);
    assert!((b.0 / a.0 - 1.0).abs() < 0.15 && (b.1 / a.1 - 1.0).abs() < 0.15, "{a:?} {b:?}");
}

#[test]
fn annulus_escape_from_45() {
    let x = Point::new(45, 0);
    let exact = annulus_escape_exact(20.0, 100.0, &[x, Point::new(100, 0)]).unwrap();
    let formula = annulus_escape_formula(x, 20.0, 100.0).value;
    assert!((formula - 0.5039).abs() < 1e-4);
    assert!((exact[0] - formula).abs() / formula <= 0.05, "{} {formula}", exact[0]);
    assert_eq!(exact[1], 1.0);
}

// P_v[τ(∂B(cn)) < τ(B(n))] · n / (‖v‖ − n + 1) over the whole annulus.
fn escape_ratio_range(n: i64) -> (f64, f64) {
    let nf = n as f64;
    let vs: Vec<Point> = ball(Point::ORIGIN, 3.0 * nf).difference(&ball(Point::ORIGIN, nf)).iter().copied().collect();
    let p = annulus_escape_exact(nf, 3.0 * nf, &vs).unwrap();
    let rs: Vec<f64> = vs.iter().zip(&p).map(|(v, pv)| pv * nf / (v.norm() - nf + 1.0)).collect();
    (rs.iter().cloned().fold(f64::INFINITY, f64::min), rs.iter().cloned().fold(0.0, f64::max))
}

#[test]
fn annulus_escape_is_linear_near_the_inner_circle() {
    let a = escape_ratio_range(30);
    let b = escape_ratio_range(60);
    assert!(a.0 > 0.1 && a.1 < 10.0, "{a:?}");
    assert!((b.0 / a.0 - 1.0).abs() < 0.25 && (b.1 / a.1 - 1.0).abs() < 0.25, "{a:?} {b:?}");
}
