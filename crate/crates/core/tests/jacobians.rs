mod common;

const TOL: f64 = 1e-4;

#[test]
fn projection_matches_finite_differences() {
    let e = common::projection_jacobian_error(1, 100);
    assert!(e < TOL, "{e}");
}

#[test]
fn alignment_matches_finite_differences() {
    let e = common::alignment_jacobian_error(2, 100);
    assert!(e < TOL, "{e}");
}

#[test]
fn bundle_adjustment_matches_finite_differences() {
    let e = common::ba_jacobian_error(3, 100);
    assert!(e < TOL, "{e}");
}
