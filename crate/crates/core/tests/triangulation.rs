mod common;

use edgevo::ba::triangulate_depth;
use edgevo::error::Error;
use edgevo::uncertainty::{depth_observability, DepthObservability, EdgeGeometry};

#[test]
fn exact_match_recovers_inverse_depth() {
    let tv = common::two_view();
    let start = tv.point.with_inv_depth(0.25);
    for theta in [0.0, 0.5, 1.2] {
        let r = common::two_view_record(&tv, theta, 0.5, tv.pixel);
        let (d, sigma) = triangulate_depth(&r, &start, &tv.host, &tv.target, &tv.k).unwrap();
        assert!((d - tv.point.inv_depth).abs() < 1e-6, "theta {theta}: {d}");
        assert!(sigma > 0.0 && sigma.is_finite());
    }
}

#[test]
fn predicted_spread_matches_monte_carlo() {
    for (i, deg) in [0.0f64, 30.0, 60.0].into_iter().enumerate() {
        let ratio = common::triangulation_std_ratio(20 + i as u64, deg.to_radians(), 0.5, 1000);
        assert!((0.5..=2.0).contains(&ratio), "{deg} deg: {ratio}");
    }
}

#[test]
fn near_parallel_edge_is_poorly_observable() {
    let tv = common::two_view();
    let theta = 85f64.to_radians();
    let r = common::two_view_record(&tv, theta, 0.5, tv.pixel);
    let geom = EdgeGeometry::new(tv.pixel, r.target_gradient, tv.l).unwrap();
    assert_eq!(depth_observability(&geom, 0.5, 0.5), DepthObservability::PoorlyObservable);
    let perpendicular = EdgeGeometry::new(tv.pixel, tv.l, tv.l).unwrap();
    assert_eq!(depth_observability(&perpendicular, 0.5, 0.5), DepthObservability::Observable);
}

#[test]
fn zero_baseline_is_an_error() {
    let tv = common::two_view();
    let r = common::two_view_record(&tv, 0.0, 0.5, tv.point.pixel);
    let res = triangulate_depth(&r, &tv.point, &tv.host, &tv.host, &tv.k);
    assert!(matches!(res, Err(Error::NoEpipolarDirection)), "{res:?}");
}
