//! Exhaustive confusion-matrix identities.

mod common;

use cirauth::metrics::{f1, f_beta, p_ca, p_noa, ConfusionMatrix};

#[test]
fn identities_hold_on_the_full_grid() {
    assert_eq!(common::check_metrics_grid(20), Ok(21usize.pow(4)));
}

#[test]
fn worked_examples() {
    let cm = ConfusionMatrix::new(90, 10, 10, 0);
    assert_eq!(p_ca(&cm), Some(0.9));
    assert_eq!(p_noa(&cm), Some(0.9));
    let cm = ConfusionMatrix::new(1, 1, 0, 5);
    assert!((f1(&cm).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(f1(&ConfusionMatrix::new(0, 0, 0, 3)), None);
    assert_eq!(f_beta(&ConfusionMatrix::new(3, 0, 0, 0), 0.0), None);
    assert_eq!(f1(&ConfusionMatrix::new(0, 4, 4, 0)), None);
}
