use objbounds::{
    build_region, lp_attainable_point, lp_support_oracle, support_profile, trimmed_support, vertices_2d,
    DirectionGrid, EmbeddedDataset, GridScheme, TrimFraction, Unit,
};
use proptest::prelude::*;

fn dataset(rows: &[Vec<f64>], d: usize) -> EmbeddedDataset {
    let mut units: Vec<Unit> = rows.iter().enumerate().map(|(i, y)| Unit::new(format!("t{i}"), true, Some(y.clone()))).collect();
    units.push(Unit::new("c", false, None));
    EmbeddedDataset::new(units, d).unwrap()
}

fn rows(d: usize, max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    // a coarse lattice produces plenty of ties
    prop::collection::vec(prop::collection::vec((-20i32..20).prop_map(|v| v as f64 / 4.0), d), 1..max_n)
}

fn direction(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, d)
        .prop_filter("nonzero", |u| u.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|u| {
            let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            u.into_iter().map(|x| x / n).collect()
        })
}

/// Maximizes the LP over its vertices: at most one weight is fractional, so
/// every vertex is a set of `floor(m)` ones plus one unit carrying the rest.
fn lp_by_vertex_enumeration(z: &[f64], p: f64) -> f64 {
    let n = z.len();
    let mass = n as f64 * p;
    let full = mass.floor() as usize;
    let frac = mass - full as f64;
    let mut best = f64::NEG_INFINITY;
    for set in 0u32..(1 << n) {
        if set.count_ones() as usize != full {
            continue;
        }
        let base: f64 = (0..n).filter(|i| set >> i & 1 == 1).map(|i| z[i]).sum();
        if frac == 0.0 {
            best = best.max(base);
        } else {
            for j in (0..n).filter(|i| set >> i & 1 == 0) {
                best = best.max(base + frac * z[j]);
            }
        }
    }
    best / mass
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lp_optimum_matches_vertex_enumeration(
        data in (1usize..4).prop_flat_map(|d| (rows(d, 11), direction(d))),
        p in prop::sample::select(vec![0.2, 0.3, 0.5, 0.75, 0.9, 1.0]),
    ) {
        let (rows, u) = data;
        let d = u.len();
        let ds = dataset(&rows, d);
        let p = TrimFraction::new(p).unwrap();
        let z: Vec<f64> = rows.iter().map(|y| dot(&u, y)).collect();
        let brute = lp_by_vertex_enumeration(&z, p.p_hat);
        prop_assert!((trimmed_support(&ds, &u, p).unwrap() - brute).abs() < 1e-10);
        prop_assert!((lp_support_oracle(&ds, &u, p).unwrap() - brute).abs() < 1e-10);
    }

    #[test]
    fn support_is_nonincreasing_in_p_and_dominates_the_mean(
        data in (1usize..4).prop_flat_map(|d| (rows(d, 80), direction(d))),
    ) {
        let (rows, u) = data;
        let ds = dataset(&rows, u.len());
        let mean = rows.iter().map(|y| dot(&u, y)).sum::<f64>() / rows.len() as f64;
        let mut prev = f64::INFINITY;
        for k in 2..=10 {
            let p = TrimFraction::new(k as f64 / 10.0).unwrap();
            let s = trimmed_support(&ds, &u, p).unwrap();
            prop_assert!(s <= prev + 1e-12);
            prop_assert!(s >= mean - 1e-12);
            prev = s;
        }
        prop_assert!((prev - mean).abs() < 1e-12 * mean.abs().max(1.0));
    }

    #[test]
    fn region_contains_mean_and_shrinks_under_refinement(
        rows in rows(2, 60),
        p in prop::sample::select(vec![0.3, 0.6, 0.9]),
        probe in prop::collection::vec(-6.0f64..6.0, 2),
    ) {
        let ds = dataset(&rows, 2);
        let p = TrimFraction::new(p).unwrap();
        let coarse = DirectionGrid::new(2, GridScheme::EqualAngle, 8, 0).unwrap();
        // 32 equal angles contain the 8 equal angles
        let fine = DirectionGrid::new(2, GridScheme::EqualAngle, 32, 0).unwrap();
        let rc = build_region(&support_profile(&ds, &coarse, p).unwrap()).unwrap();
        let rf = build_region(&support_profile(&ds, &fine, p).unwrap()).unwrap();
        let n = rows.len() as f64;
        let mean = vec![rows.iter().map(|r| r[0]).sum::<f64>() / n, rows.iter().map(|r| r[1]).sum::<f64>() / n];
        prop_assert!(rc.contains(&mean, 1e-9).unwrap());
        prop_assert!(rf.contains(&mean, 1e-9).unwrap());
        if rf.contains(&probe, 0.0).unwrap() {
            prop_assert!(rc.contains(&probe, 1e-12).unwrap());
        }
    }

    #[test]
    fn projections_agree_with_polygon_vertices(rows in rows(2, 60), p in prop::sample::select(vec![0.4, 0.8, 1.0])) {
        let ds = dataset(&rows, 2);
        let grid = DirectionGrid::new(2, GridScheme::EqualAngle, 36, 0).unwrap();
        let region = build_region(&support_profile(&ds, &grid, TrimFraction::new(p).unwrap()).unwrap()).unwrap();
        let poly = vertices_2d(&region).unwrap();
        for axis in 0..2 {
            let (lo, hi) = region.project_interval(axis).unwrap();
            let (vlo, vhi) = poly.coordinate_range(axis);
            prop_assert!((lo - vlo).abs() < 1e-8 && (hi - vhi).abs() < 1e-8);
        }
    }
}

fn hausdorff_to_hull(vertices: &[[f64; 2]], hull_points: &[Vec<f64>]) -> f64 {
    // distance from each region vertex to the polygon spanned by the attainable points
    let hull = convex_hull(hull_points);
    vertices.iter().map(|v| distance_to_polygon(v, &hull)).fold(0.0, f64::max)
}

fn convex_hull(points: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn distance_to_polygon(p: &[f64; 2], hull: &[[f64; 2]]) -> f64 {
    let seg = |a: [f64; 2], b: [f64; 2]| {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) };
        ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
    };
    let m = hull.len();
    if m == 1 {
        return seg(hull[0], hull[0]);
    }
    let inside = m >= 3
        && (0..m).all(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % m]);
            (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -1e-12
        });
    if inside {
        return 0.0;
    }
    (0..m).map(|i| seg(hull[i], hull[(i + 1) % m])).fold(f64::INFINITY, f64::min)
}

#[test]
fn region_vertices_approach_attainable_hull() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let n = rng.random_range(10..=200);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-1.0..4.0)]).collect();
        let ds = dataset(&rows, 2);
        let p = TrimFraction::new(0.6).unwrap();
        let mut eps = Vec::new();
        for size in [90, 720] {
            let grid = DirectionGrid::new(2, GridScheme::EqualAngle, size, 0).unwrap();
            let region = build_region(&support_profile(&ds, &grid, p).unwrap()).unwrap();
            let poly = vertices_2d(&region).unwrap();
            let attainable: Vec<Vec<f64>> =
                grid.directions().iter().map(|u| lp_attainable_point(&ds, u, p).unwrap()).collect();
            eps.push(hausdorff_to_hull(&poly.vertices, &attainable));
        }
        assert!(eps[1] <= eps[0] + 1e-12, "{eps:?}");
        assert!(eps[1] < 5e-2, "{eps:?}");
    }
}
