//! Analytic gradients against central finite differences.

mod common;

use cirauth::hvae::{HvaeConfig, HvaeModel};
use cirauth::kl::DoublePeakKl;

#[test]
fn dense_layer_gradients_for_every_activation() {
    common::grad::dense_layers().unwrap();
}

#[test]
fn stack_gradients() {
    common::grad::stack().unwrap();
}

#[test]
fn hvae_gradients_match_finite_differences() {
    let mut c = HvaeConfig::new(6, 4, 2);
    c.train.seed = 21;
    c.kl2_weight = 0.7;
    c.kl3_weight = 1.3;
    c.double_peak_m = 1.5;
    c.double_peak_s = 0.8;
    let n = common::grad::hvae(c.clone(), 1).unwrap();
    let model = HvaeModel::new(c).unwrap();
    assert_eq!(n, model.parameter_count());
}

#[test]
fn hvae_gradients_with_exact_double_peak_kl() {
    let mut c = HvaeConfig::new(6, 4, 2);
    c.train.seed = 4;
    c.kl_mode = DoublePeakKl::Exact;
    common::grad::hvae(c, 2).unwrap();
}

#[test]
fn hvae_gradients_with_unequal_prior_weight() {
    let mut c = HvaeConfig::new(6, 4, 2);
    c.train.seed = 8;
    c.prior_weight = 0.3;
    common::grad::hvae(c, 3).unwrap();
}
