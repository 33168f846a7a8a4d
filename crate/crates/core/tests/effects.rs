use objbounds::effects::{embedded_effect_region, geodesic, quantile_band, ControlMean};
use objbounds::{
    build_region, profile_from_rows, quantile_embed, DirectionGrid, GridScheme, HalfspaceRegion, ObjectSpace,
    ProbabilityGrid, QuantileSpace, SphereSpace, TrimRule,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn polygon(offsets: &[f64]) -> HalfspaceRegion {
    let m = offsets.len();
    let dirs = (0..m)
        .map(|i| {
            let (s, c) = (std::f64::consts::TAU * i as f64 / m as f64).sin_cos();
            vec![c, s]
        })
        .collect();
    HalfspaceRegion::new(dirs, offsets.to_vec()).unwrap()
}

proptest! {
    #[test]
    fn effect_region_is_a_translation(
        offsets in prop::collection::vec(0.5f64..3.0, 8),
        v in prop::collection::vec(-2.0f64..2.0, 2),
        w in prop::collection::vec(-4.0f64..4.0, 2),
    ) {
        let region = polygon(&offsets);
        let effect = embedded_effect_region(&region, ControlMean::Point(&v)).unwrap();
        let shifted: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a + b).collect();
        prop_assert_eq!(effect.contains(&w, 0.0).unwrap(), region.contains(&shifted, 1e-12).unwrap());
    }
}

#[test]
fn geodesic_grids_agree_at_shared_times() {
    let space = SphereSpace::barycentric(3);
    let a = space.embed(&objbounds::CompositionPoint::new(vec![0.2, 0.3, 0.5]).unwrap()).unwrap();
    let b = space.embed(&objbounds::CompositionPoint::new(vec![0.0, 0.6, 0.4]).unwrap()).unwrap();
    let coarse = geodesic(&space, &a, &b, &[0.0, 0.5, 1.0]).unwrap();
    let fine_t: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let fine = geodesic(&space, &a, &b, &fine_t).unwrap();
    assert_eq!(coarse.points[0], fine.points[0]);
    assert_eq!(coarse.points[1], fine.points[5]);
    assert_eq!(coarse.points[2], fine.points[10]);
    for (p, q) in coarse.points[2].parts().iter().zip([0.0, 0.6, 0.4]) {
        assert!((p - q).abs() < 1e-10);
    }
}

#[test]
fn bands_nest_as_trimming_fraction_grows() {
    let grid = ProbabilityGrid::regular(0.10, 0.90, 0.05).unwrap();
    let space = QuantileSpace { grid: grid.clone() };
    let dirs = DirectionGrid::new(grid.len(), GridScheme::Gaussian, 200, 3).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let rows: Vec<Vec<f64>> = (0..120)
            .map(|_| {
                let loc: f64 = rng.random_range(4.0..8.0);
                let draws: Vec<f64> = (0..20).map(|_| loc + rng.random_range(-1.5..1.5)).collect();
                space.embed(&quantile_embed(&draws, &grid).unwrap()).unwrap().into_inner()
            })
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let band = |p: f64| {
            let profile = profile_from_rows(&refs, &dirs, p, TrimRule::Fractional).unwrap();
            quantile_band(&build_region(&profile).unwrap(), &grid).unwrap()
        };
        let (loose, tight) = (band(0.7), band(0.95));
        assert!(loose.is_monotone() && tight.is_monotone());
        for j in 0..grid.len() {
            assert!(loose.lower[j] <= tight.lower[j] + 1e-12);
            assert!(tight.upper[j] <= loose.upper[j] + 1e-12);
            assert!(tight.lower[j] <= tight.upper[j]);
        }
    }
}
