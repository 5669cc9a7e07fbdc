//! Re-expanding an S^∞ (cosine-power) model as a polynomial series on a
//! finite-dimensional sphere: the lifted model reproduces the source closed
//! form.
//!
//! Run with `cargo run --example lift_to_sphere`.

use nalgebra::DMatrix;
use std::f64::consts::PI;
use stfields::covariance::{example3_series, lift_s_infinity_to_sd, SpaceTimeCovariance};
use stfields::temporal::{constant_model, TimeDomain};

fn main() {
    let base = constant_model(DMatrix::from_element(1, 1, 0.6), TimeDomain::Continuous).unwrap();
    let source = example3_series(base, 120, 1.0).unwrap();
    println!(
        "source: exponential-in-geodesic family on S^inf, truncation N = {}",
        source.coefficients().truncation()
    );

    for d in [2usize, 3, 5] {
        let lifted = SpaceTimeCovariance::from_coefficients(
            lift_s_infinity_to_sd(source.coefficients(), d, f64::INFINITY).unwrap(),
        );
        let mut worst = 0.0f64;
        for k in 1..8 {
            let theta = k as f64 * PI / 8.0;
            let closed = source.eval_closed_form(theta, 0.0).unwrap()[(0, 0)];
            let series = lifted.eval(theta, 0.0).unwrap()[(0, 0)];
            worst = worst.max((series - closed).abs());
        }
        println!("lift to S^{d}: max residual vs source closed form = {worst:.2e}");
    }
}
