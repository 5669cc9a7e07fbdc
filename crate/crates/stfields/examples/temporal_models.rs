//! Matrix-valued temporal covariances: the building blocks B_n(t) of every
//! series model, with their stationarity checks.
//!
//! Run with `cargo run --example temporal_models`.

use nalgebra::DMatrix;
use stfields::temporal::{
    check_stationary_covariance, default_check_grid, ma1_model, separable_model,
    CorrelationFamily,
};

fn main() {
    // A separable bivariate model: B(t) = ρ(t/τ) A with an exponential ρ.
    let coupling = DMatrix::from_row_slice(2, 2, &[0.5, 0.3, 0.3, 0.4]);
    let separable =
        separable_model(CorrelationFamily::Exponential, 1.5, coupling.clone()).unwrap();
    println!("separable exponential model, m = {}:", separable.m());
    for t in [0.0, 0.5, 1.0, 2.0] {
        let b = separable.eval(t).unwrap();
        println!(
            "  B({t:.1}) = [[{:.4}, {:.4}], [{:.4}, {:.4}]]",
            b[(0, 0)],
            b[(0, 1)],
            b[(1, 0)],
            b[(1, 1)]
        );
    }

    // A first-order moving average on integer time: nonzero only at lags
    // -1, 0, 1, and generally asymmetric (B(-t) = B(t)').
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.8]);
    let phi = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, -0.2, 0.3]);
    let ma1 = ma1_model(sigma, phi).unwrap();
    println!("\nMA(1) model on T = Z:");
    for t in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        let b = ma1.eval(t).unwrap();
        println!(
            "  B({t:+.0}) = [[{:+.4}, {:+.4}], [{:+.4}, {:+.4}]]",
            b[(0, 0)],
            b[(0, 1)],
            b[(1, 0)],
            b[(1, 1)]
        );
    }

    // Both satisfy the stationarity requirements on the default lag grid.
    for (name, model) in [("separable", &separable), ("ma1", &ma1)] {
        let report = check_stationary_covariance(model, &default_check_grid(), 1e-9).unwrap();
        println!("\n{name}: {}", if report.pass { "stationary ✓" } else { "NOT stationary" });
    }
}
