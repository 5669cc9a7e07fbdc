//! Coefficient extraction: simulating on quadrature nodes lets the drawn
//! level processes V_n(t) be recovered by numerical projection, and levels
//! above the truncation project to zero.
//!
//! Run with `cargo run --example extract_coefficients`.

use nalgebra::DMatrix;
use stfields::simulate::{extract_level_coefficients, replicate_rng, simulate_sphere_series};
use stfields::sphere::product_quadrature_s2;
use stfields::temporal::{
    separable_model, CoefficientSequence, CorrelationFamily, Dimension, TemporalCovariance,
};

fn main() {
    // A custom 5-level bivariate model on S^2.
    let truncation = 4usize;
    let coupling = DMatrix::from_row_slice(2, 2, &[0.5, 0.3, 0.3, 0.4]);
    let levels: Vec<TemporalCovariance> = (0..=truncation)
        .map(|n| {
            separable_model(
                CorrelationFamily::Exponential,
                1.0,
                coupling.clone() / (n as f64 + 1.0),
            )
            .unwrap()
        })
        .collect();
    let coeffs = CoefficientSequence::new(Dimension::Sphere(2), levels, 1.0).unwrap();

    // Exactness 11 covers every projection degree n + N <= 9.
    let quad = product_quadrature_s2(6, 12).unwrap();
    let times = [0.0, 0.6];
    let mut rng = replicate_rng(31, 0);
    let field = simulate_sphere_series(&coeffs, quad.nodes(), &times, &mut rng).unwrap();

    println!("recovered level draws vs the simulator's own draws:");
    for n in 0..=truncation {
        let recovered = extract_level_coefficients(&field, truncation, n, &quad).unwrap();
        let worst: f64 = recovered
            .iter()
            .zip(&field.level_draws[n])
            .map(|(got, want)| (got - want).amax())
            .fold(0.0, f64::max);
        println!("  level {n}: max residual {worst:.2e}");
    }

    let above = extract_level_coefficients(&field, truncation, truncation + 1, &quad).unwrap();
    let leak: f64 = above.iter().map(|v| v.amax()).fold(0.0, f64::max);
    println!("  level {} (above truncation): magnitude {leak:.2e}", truncation + 1);
}
