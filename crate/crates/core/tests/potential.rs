use std::f64::consts::PI;

use ri2d::potential::{a_asymptotic, kappa, Regime, EULER_GAMMA};
use ri2d::{Point, PotentialTable};

fn table() -> std::sync::Arc<PotentialTable> {
    PotentialTable::shared(256).unwrap()
}

// Closed forms on the axes and the diagonal: a((n,n)) = (4/π)Σ_{k≤n} 1/(2k−1),
// a((2,0)) = 4 − 8/π.
fn diagonal_oracle(n: i64) -> f64 {
    4.0 / PI * (1..=n).map(|k| 1.0 / (2 * k - 1) as f64).sum::<f64>()
}

#[test]
fn asymptotic_values() {
    let k = (2.0 * EULER_GAMMA + 8f64.ln()) / PI;
    assert!((a_asymptotic(Point::new(1, 0)) - k).abs() < 1e-15);
    assert!((k - 1.029_373_7).abs() < 1e-7);
    assert!((kappa() - k).abs() < 1e-15);
    assert!((a_asymptotic(Point::new(100, 0)) - 3.961_116_1).abs() < 1e-7);
    let v = a_asymptotic(Point::new(3, 4));
    assert_eq!(v, a_asymptotic(Point::new(4, 3)));
    assert_eq!(v, a_asymptotic(Point::new(-3, 4)));
}

#[test]
fn table_matches_closed_forms() {
    let t = table();
    assert_eq!(t.a(Point::ORIGIN), 0.0);
    assert!((t.a(Point::new(1, 0)) - 1.0).abs() < 1e-8);
    assert!((t.a(Point::new(2, 0)) - (4.0 - 8.0 / PI)).abs() < 1e-8);
    for n in 1..=20 {
        let d = (t.a(Point::new(n, n)) - diagonal_oracle(n)).abs();
        assert!(d < 1e-8, "n={n}: {d}");
    }
}

#[test]
fn table_is_harmonic_and_symmetric() {
    let t = table();
    assert!(t.harmonicity_residual() <= 1e-10);
    for p in [Point::new(3, 1), Point::new(17, 5), Point::new(40, 39)] {
        let v = t.a(p);
        assert!(v > 0.0);
        for k in 0..8 {
            assert_eq!(t.a(p.isometry(k)), v);
        }
    }
}

#[test]
fn far_lookups_use_the_expansion() {
    let t = table();
    let far = t.lookup(Point::new(1_000_000, 0));
    assert_eq!(far.regime, Regime::Asymptotic);
    assert_eq!(far.value, a_asymptotic(Point::new(1_000_000, 0)));
    assert_eq!(t.lookup(Point::new(5, 5)).regime, Regime::Table);
    // the two regimes agree at the switch to O(‖x‖⁻²)
    let edge = Point::new(128, 0);
    let gap = (t.a(edge) - a_asymptotic(edge)).abs();
    assert!(gap < 0.06 / (128.0 * 128.0), "{gap}");
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let t = PotentialTable::build(32, 1e-12).unwrap();
    let path = PotentialTable::cache_file(dir.path(), 32, 1e-12);
    t.save(&path).unwrap();
    let u = PotentialTable::load(&path).unwrap();
    for p in [Point::new(1, 0), Point::new(7, 3), Point::new(16, 0)] {
        assert_eq!(t.a(p), u.a(p));
    }
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    std::fs::write(&path, bytes).unwrap();
    assert!(PotentialTable::load(&path).is_err());
}
