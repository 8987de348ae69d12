use ri2d::harmonic::excursion_exit_kernel;
use ri2d::lattice::{ball, Point};
use ri2d::slt::{
    consistency_experiment, couple, deviation_experiment, ExcursionLaw, MarkMode, SltProcess, WalkStart,
};
use ri2d::solver::Srw;
use ri2d::stats::chi_square_gof;
use ri2d::walks::TorusExcursionSpec;
use ri2d::PotentialTable;

fn torus_spec() -> TorusExcursionSpec {
    TorusExcursionSpec::balls(20, 0.15, 0.3).unwrap()
}

fn iid_law() -> ExcursionLaw {
    ExcursionLaw::iid(&ball(Point::ORIGIN, 3.0), &ball(Point::ORIGIN, 7.0), &Srw).unwrap()
}

#[test]
fn second_start_follows_the_mixed_entrance_law() {
    let spec = torus_spec();
    let law = ExcursionLaw::torus_walk(&spec, WalkStart::Stationary).unwrap();
    let exit = excursion_exit_kernel(&spec.inner, &spec.outer, &Srw).unwrap();
    let first = law.density(None);
    let ends = law.ends();
    // P[second start = y] = Σ_x g₁(x) Σ_z exit(x, z) φ(z, y)
    let mut expected = vec![0.0; first.len()];
    for (x, gx) in law.alphabet().iter().zip(first) {
        for (z, e) in exit.row(*x).unwrap().iter().enumerate() {
            let j = ends.index_of(exit.targets.get(z)).unwrap();
            for (y, d) in law.density(Some(j)).iter().enumerate() {
                expected[y] += gx * e * d;
            }
        }
    }
    assert!((expected.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let mut counts = vec![0u64; first.len()];
    for seed in 0..30_000 {
        let mut p = SltProcess::new(&law, MarkMode::Kernel, 1_000_000 + seed);
        p.run(2).unwrap();
        counts[p.picks()[1].site] += 1;
    }
    let chi = chi_square_gof(&counts, &expected, 5.0);
    assert!(chi.p_value > 0.001, "{chi:?}");
}

#[test]
fn later_iid_starts_follow_the_relative_harmonic_measure() {
    let law = iid_law();
    let mut counts = vec![0u64; law.alphabet().len()];
    for seed in 0..20_000 {
        let mut p = SltProcess::new(&law, MarkMode::Kernel, seed);
        p.run(5).unwrap();
        counts[p.picks()[4].site] += 1;
    }
    let chi = chi_square_gof(&counts, law.stationary(), 5.0);
    assert!(chi.p_value > 0.001, "{chi:?}");
}

#[test]
fn soft_local_time_replays_from_the_xi_log() {
    let law = ExcursionLaw::torus_walk(&torus_spec(), WalkStart::Point(Point::new(1, 1))).unwrap();
    let mut p = SltProcess::new(&law, MarkMode::Kernel, 77);
    p.run(300).unwrap();
    for (a, b) in p.replay().iter().zip(p.soft_local_time()) {
        assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{a} vs {b}");
    }
}

#[test]
fn identical_laws_couple_perfectly() {
    let law = iid_law();
    let r = couple(&law, &law, 200, 200, 5).unwrap();
    assert_eq!(r.shared, 200);
    assert!(r.inclusion);
    assert_eq!(r.sup_deviation_a, r.sup_deviation_b);
}

#[test]
fn coupling_requires_a_shared_boundary() {
    let law = iid_law();
    assert!(couple(&law, &law.translated(Point::new(1, 0)), 10, 10, 1).is_err());
}

#[test]
fn interlacement_excursions_open_with_a_fresh_trajectory() {
    let t = PotentialTable::shared(256).unwrap();
    let c = Point::new(30, 0);
    let law = ExcursionLaw::interlacements(&t, &ball(c, 3.0), &ball(c, 6.0)).unwrap();
    let mut p = SltProcess::new(&law, MarkMode::Kernel, 3);
    assert_eq!(p.step().unwrap().fresh, Some(true));
    assert!(p.excursions_of_first(2).unwrap() >= 2);
    assert!(ExcursionLaw::interlacements(&t, &ball(Point::new(2, 0), 1.0), &ball(Point::new(2, 0), 3.0)).is_err());
}

#[test]
fn relative_deviation_shrinks_with_k() {
    let r = deviation_experiment(&iid_law(), &[16, 256], 200, 9).unwrap();
    let rel: Vec<f64> = r.rows.iter().map(|row| row.median / row.k as f64).collect();
    assert!(rel[1] < 0.5 * rel[0], "{rel:?}");
    // fluctuations grow like √k
    assert!(r.fit.slope > 0.3 && r.fit.slope < 0.7, "{:?}", r.fit);
}

#[test]
fn a_law_is_consistent_with_itself() {
    let law = iid_law();
    let r = consistency_experiment(&law, &law, 20, 400, 11).unwrap();
    assert!(r.global_p > 0.001, "{r:?}");
}
