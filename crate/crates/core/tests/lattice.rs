use ri2d::lattice::{annulus, ball, ball_boundary, ball_count, Point, PointSet, Torus};

// Brute-force oracles, independent of the library's column scans.
fn brute_ball(r: i64) -> Vec<Point> {
    let mut v = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            if x * x + y * y <= r * r {
                v.push(Point::new(x, y));
            }
        }
    }
    v.sort();
    v
}

fn brute_boundary(r: i64) -> Vec<Point> {
    let inside = |p: Point| p.x * p.x + p.y * p.y <= r * r;
    let mut v: Vec<Point> = brute_ball(r)
        .into_iter()
        .filter(|p| [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|(dx, dy)| !inside(Point::new(p.x + dx, p.y + dy))))
        .collect();
    v.sort();
    v
}

#[test]
fn unit_and_degenerate_balls() {
    let b1 = ball(Point::ORIGIN, 1.0);
    assert_eq!(b1.len(), 5);
    for p in [Point::new(0, 0), Point::new(1, 0), Point::new(-1, 0), Point::new(0, 1), Point::new(0, -1)] {
        assert!(b1.contains(p));
    }
    assert_eq!(ball(Point::ORIGIN, 0.0).points(), &[Point::ORIGIN]);
}

#[test]
fn ball_of_radius_fifty_has_7845_points() {
    let oracle = brute_ball(50);
    assert_eq!(oracle.len(), 7845);
    assert_eq!(ball(Point::ORIGIN, 50.0).points(), oracle.as_slice());
    assert_eq!(ball_count(50.0), 7845);
}

#[test]
fn boundaries_match_brute_force() {
    let b1 = ball(Point::ORIGIN, 1.0).internal_boundary();
    assert_eq!(b1.len(), 4);
    assert!(!b1.contains(Point::ORIGIN));
    let single = PointSet::new([Point::ORIGIN]);
    assert_eq!(single.internal_boundary(), single);
    let oracle = brute_boundary(50);
    assert_eq!(oracle.len(), 280);
    assert_eq!(ball(Point::ORIGIN, 50.0).internal_boundary().points(), oracle.as_slice());
    assert_eq!(ball_boundary(Point::ORIGIN, 50.0).points(), oracle.as_slice());
    // linear in the radius
    let ratio = oracle.len() as f64 / 50.0;
    assert!((4.0..=8.0).contains(&ratio), "{ratio}");
}

#[test]
fn annulus_is_the_difference_of_balls() {
    let n = 20.0;
    let a = annulus(Point::ORIGIN, n, 4.0 * n);
    let expected = ball(Point::ORIGIN, 4.0 * n).difference(&ball(Point::ORIGIN, n));
    assert_eq!(a, expected);
    let a_n = a.union(&ball(Point::ORIGIN, n).internal_boundary());
    assert!(a_n.is_subset(&ball(Point::ORIGIN, 4.0 * n)));
    assert!(ball(Point::ORIGIN, n - 1.0).iter().all(|p| !a_n.contains(*p) || p.norm() > n - 2.0));
}

#[test]
fn torus_window_and_neighbours() {
    let t = Torus::new(7);
    let all = t.all_points();
    assert_eq!(all.len(), 49);
    // square of side 7 centred at the origin maps bijectively onto the torus
    let window = PointSet::new((-3..=3).flat_map(|x| (-3..=3).map(move |y| Point::new(x, y))));
    assert_eq!(t.project(&window), all);
    for p in all.iter() {
        let nb = t.neighbors(*p);
        let distinct: PointSet = PointSet::new(nb);
        assert_eq!(distinct.len(), 4);
        assert!(nb.iter().all(|q| t.dist(*p, *q) == 1.0));
    }
}
