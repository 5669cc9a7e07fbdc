//! The five shipped covariance families: closed form next to the truncated
//! series, on a small (ϑ, t) grid.
//!
//! Run with `cargo run --example closed_form_families`.

use nalgebra::DMatrix;
use std::f64::consts::PI;
use stfields::covariance::{
    example1_series, example2_series, example3_series, example4_series, example5_series,
    SpaceTimeCovariance,
};
use stfields::temporal::{constant_model, linear_combination, TemporalCovariance, TimeDomain};

fn scalar(b: f64) -> TemporalCovariance {
    linear_combination(vec![(
        b,
        constant_model(DMatrix::from_element(1, 1, 1.0), TimeDomain::Continuous).unwrap(),
    )])
    .unwrap()
}

fn show(name: &str, model: &SpaceTimeCovariance, thetas: &[f64]) {
    println!("\n{name}  (dim = {}, truncation N = {})", model.dim(), model.coefficients().truncation());
    println!("{:>8} {:>14} {:>14} {:>10}", "ϑ", "closed form", "series", "residual");
    for &theta in thetas {
        let closed = model.eval_closed_form(theta, 0.0).unwrap()[(0, 0)];
        let series = model.eval(theta, 0.0).unwrap()[(0, 0)];
        println!("{theta:>8.4} {closed:>14.8} {series:>14.8} {:>10.2e}", series - closed);
    }
}

fn main() {
    let inner = [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];
    let full = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI];

    // Logarithmic family on S^2.
    let log = example1_series(scalar(0.6), 80, 1e-3).unwrap();
    show("logarithmic family, b = 0.6", &log, &full);

    // Quadratic-in-angle family on S^inf from a valid (S0, S1, S2) triple.
    let (s0, s1, s2) = (1.0, 0.3, 0.1);
    let quadratic = example2_series(
        scalar(s0 + (PI / 2.0) * s1 + (PI * PI / 4.0) * s2),
        scalar(-s1 - PI * s2),
        scalar(s2),
        120,
        1.0,
    )
    .unwrap();
    show("quadratic family", &quadratic, &inner);

    // Exponential-in-geodesic family on S^inf.
    let exp_geo = example3_series(scalar(0.7), 120, 1.0).unwrap();
    show("exponential-in-geodesic family, b = 0.7", &exp_geo, &inner);

    // Generating-function family on S^3.
    let power = example4_series(scalar(0.5), 3, 80, 1e-3).unwrap();
    show("generating-function family, b = 0.5, d = 3", &power, &full);

    // Exponential-cosine family on the circle.
    let cosine = example5_series(scalar(0.8), 30, 1e-6).unwrap();
    show("exponential-cosine family, b = 0.8", &cosine, &full);
}
