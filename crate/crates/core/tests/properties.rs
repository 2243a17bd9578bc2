use nalgebra::Matrix2;
use proptest::prelude::*;

use edgevo::geometry::{Pose, Vec2, Vec6};
use edgevo::image::build_nnf;
use edgevo::uncertainty::{eigen_decompose, search_radius, search_sigma, sigma_perp, EdgeGeometry};

fn twist() -> impl Strategy<Value = Vec6> {
    (prop::array::uniform3(-5.0..5.0f64), prop::array::uniform3(-1.7..1.7f64))
        .prop_map(|(t, w)| Vec6::new(t[0], t[1], t[2], w[0], w[1], w[2]))
}

fn direction() -> impl Strategy<Value = Vec2> {
    (0.0..std::f64::consts::TAU).prop_map(|a| Vec2::new(a.cos(), a.sin()))
}

fn brute_force(mask: &[bool], w: usize, h: usize) -> Vec<f64> {
    let edges: Vec<(usize, usize)> = (0..w * h).filter(|&i| mask[i]).map(|i| (i % w, i / w)).collect();
    (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            edges
                .iter()
                .map(|&(ex, ey)| ((ex as f64 - x).powi(2) + (ey as f64 - y).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

proptest! {
    // integration tests have no lib.rs beside them to anchor a regressions file
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn exp_log_round_trip(xi in twist()) {
        let back = Pose::exp(&xi).log().unwrap();
        prop_assert!((back - xi).norm() < 1e-9, "{back:?} vs {xi:?}");
    }

    #[test]
    fn compose_with_inverse_is_identity(a in twist(), b in twist()) {
        let (p, q) = (Pose::exp(&a), Pose::exp(&b));
        let e = p.compose(&q).compose(&q.inverse()).compose(&p.inverse()).log().unwrap();
        prop_assert!(e.norm() < 1e-9);
        prop_assert!(p.compose(&q).orthonormality_error() < 1e-12);
    }

    #[test]
    fn exact_spread_is_bounded_by_the_radius(
        s_perp in 0.0..50.0f64, s_mu in 0.0..50.0f64, g in direction(), l in direction(),
    ) {
        let geom = EdgeGeometry::new(Vec2::zeros(), g, l).unwrap();
        let exact = search_sigma(&geom, s_perp, s_mu);
        prop_assert!(exact <= search_radius(&geom, s_perp, s_mu, 1.0, 1.0) * (1.0 + 1e-12));
    }

    #[test]
    fn radius_grows_with_every_input(
        s_perp in 0.0..10.0f64, s_mu in 0.0..10.0f64, k in 0.5..3.0f64,
        dp in 0.0..1.0f64, dm in 0.0..1.0f64, g in direction(), l in direction(),
    ) {
        let geom = EdgeGeometry::new(Vec2::zeros(), g, l).unwrap();
        let r = search_radius(&geom, s_perp, s_mu, k, k);
        prop_assert!(search_radius(&geom, s_perp + dp, s_mu, k, k) >= r);
        prop_assert!(search_radius(&geom, s_perp, s_mu + dm, k, k) >= r);
        prop_assert!(search_radius(&geom, s_perp, s_mu, k + dp, k + dm) >= r);
    }

    #[test]
    fn eigen_decomposition_reconstructs(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, d in -3.0..3.0f64) {
        let m = Matrix2::new(a, b, c, d);
        let cov = m * m.transpose();
        let e = eigen_decompose(&cov).unwrap();
        prop_assert!((e.reconstruct() - cov).norm() <= 1e-9 * cov.norm().max(1.0));
        prop_assert!(e.sigma1 >= e.sigma2);
        prop_assert!(e.v1.dot(&e.v2).abs() < 1e-12);
        // the along-edge spread never exceeds the largest principal spread
        prop_assert!(sigma_perp(&e, &e.v2) <= e.sigma1 * (1.0 + 1e-12));
    }

    #[test]
    fn distance_transform_matches_brute_force(
        w in 1usize..24, h in 1usize..24, bits in prop::collection::vec(prop::bool::weighted(0.1), 24 * 24), seed in 0usize..576,
    ) {
        let mut mask: Vec<bool> = bits[..w * h].to_vec();
        mask[seed % (w * h)] = true;
        let (labels, dist) = build_nnf(&mask, w, h).unwrap();
        let oracle = brute_force(&mask, w, h);
        for i in 0..w * h {
            prop_assert_eq!(dist[i], oracle[i]);
            prop_assert!(mask[labels[i] as usize]);
        }
    }
}
