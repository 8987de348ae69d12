use ri2d::harmonic::HatHitting;
use ri2d::lattice::{ball, Point, PointSet};
use ri2d::rng::stream;
use ri2d::solver::{AbsorbingSystem, BackendChoice, Srw};
use ri2d::stats::{chi_square_gof, Proportion};
use ri2d::walks::{
    hat_run_until, hat_trajectory, srw_run_until, torus_excursions, Budget, HatGuard, Hitting, TorusExcursionSpec, STEP_CAP,
};
use ri2d::PotentialTable;

fn table() -> std::sync::Arc<PotentialTable> {
    PotentialTable::shared(256).unwrap()
}

#[test]
fn srw_exit_points_follow_the_poisson_kernel_off_centre() {
    let dom = ball(Point::ORIGIN, 8.0);
    let sys = AbsorbingSystem::exit_problem(&dom, &Srw, BackendChoice::Direct).unwrap();
    let x = Point::new(3, -2);
    let row = sys.poisson_kernel_row(x).unwrap();
    let exits = sys.absorbing();
    let mut counts = vec![0u64; exits.len()];
    let mut rng = stream(21, 0);
    for _ in 0..30_000 {
        let run = srw_run_until(x, |p| !dom.contains(p), Hitting::Tau0, STEP_CAP, false, &mut rng).unwrap();
        counts[exits.index_of(run.end()).unwrap()] += 1;
    }
    let chi = chi_square_gof(&counts, &row, 5.0);
    assert!(chi.p_value > 0.001, "{chi:?}");
}

#[test]
fn srw_recorded_paths_are_nearest_neighbour() {
    let target = PointSet::new([Point::new(4, 4)]);
    let mut rng = stream(22, 0);
    let run = srw_run_until(Point::ORIGIN, |p| target.contains(p), Hitting::Tau1, STEP_CAP, true, &mut rng).unwrap();
    assert_eq!(run.path.len() as u64, run.steps + 1);
    assert!(run.path.windows(2).all(|w| (w[0] - w[1]).norm2() == 1));
    assert_eq!(run.end(), Point::new(4, 4));
}

fn hit_counts(t: &PotentialTable, guard: &HatGuard<'_>, x: Point, walks: u64, seed: u64) -> (Vec<u64>, u64) {
    let support = guard.hitting().support();
    let mut counts = vec![0u64; support.len()];
    let mut missed = 0u64;
    let mut rng = stream(seed, 0);
    for _ in 0..walks {
        let run = hat_run_until(t, x, guard, Hitting::Tau0, STEP_CAP, false, &mut rng).unwrap();
        match run.end {
            Some(y) => counts[support.index_of(y).unwrap()] += 1,
            None => missed += 1,
        }
    }
    (counts, missed)
}

#[test]
fn hat_hitting_frequency_matches_the_exact_law_for_two_guards() {
    let t = table();
    let a = ball(Point::new(60, 0), 5.0);
    let x = Point::new(20, 0);
    let exact = HatHitting::new(&t, &a).unwrap().entrance(x).unwrap();
    assert!(exact.hit > 0.05 && exact.hit < 0.95, "{}", exact.hit);
    let mut probs: Vec<f64> = exact.law.iter().map(|v| v * exact.hit).collect();
    probs.push(1.0 - exact.hit);
    for (seed, region) in [(31, ball(Point::new(40, 0), 30.0)), (32, ball(Point::new(50, 0), 45.0))] {
        let guard = HatGuard::region(HatHitting::new(&t, &a).unwrap(), region).unwrap();
        let walks = 20_000;
        let (mut counts, missed) = hit_counts(&t, &guard, x, walks, seed);
        let hits = Proportion::new(walks - missed, walks);
        assert!(hits.within_sigma(exact.hit, 3.0), "{} vs {}", hits.estimate, exact.hit);
        counts.push(missed);
        let chi = chi_square_gof(&counts, &probs, 5.0);
        assert!(chi.p_value > 0.001, "{chi:?}");
    }
}

#[test]
fn hat_trajectory_reports_start_and_avoids_the_origin() {
    let t = table();
    let a = PointSet::new([Point::new(1, 0), Point::new(0, 1), Point::new(3, 3)]);
    let guard = HatGuard::new(HatHitting::new(&t, &a).unwrap(), 12.0).unwrap();
    let mut rng = stream(33, 0);
    for _ in 0..500 {
        let mut visits = Vec::new();
        hat_trajectory(&t, Point::new(3, 3), &guard, STEP_CAP, &mut rng, |p| visits.push(p)).unwrap();
        assert_eq!(visits[0], Point::new(3, 3));
        assert!(visits.iter().all(|p| a.contains(*p)));
    }
    assert!(hat_trajectory(&t, Point::ORIGIN, &guard, STEP_CAP, &mut rng, |_| {}).is_err());
}

#[test]
fn torus_excursions_alternate_between_the_boundaries() {
    let spec = TorusExcursionSpec::balls(40, 0.1, 0.3).unwrap();
    let mut rng = stream(34, 0);
    let run = torus_excursions(&spec, Budget::Time(400_000), 7, &mut rng).unwrap();
    assert_eq!(run.steps, 400_000);
    let recorded = run.stream.records.len() as u64;
    assert!(run.completed == recorded || run.completed == recorded + 1);
    let inner = spec.inner.internal_boundary();
    for r in &run.stream.records {
        assert!(inner.contains(r.start) && spec.outer_boundary().contains(r.end));
        assert!(r.length > 0 && r.label == 7);
    }
    assert!(TorusExcursionSpec::balls(40, 0.3, 0.1).is_err());
}
