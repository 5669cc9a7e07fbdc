//! Trigonometric-series simulation on the circle with the
//! exponential-cosine covariance, plus a Monte Carlo sanity check.
//!
//! Run with `cargo run --release --example simulate_circle`.

use nalgebra::DMatrix;
use stfields::covariance::example5_series;
use stfields::simulate::run_replicates_circle;
use stfields::temporal::{constant_model, TimeDomain};
use stfields::verify::empirical_covariance_circle;

fn main() {
    let base = constant_model(DMatrix::from_element(1, 1, 0.8), TimeDomain::Continuous).unwrap();
    let model = example5_series(base, 30, 1e-6).unwrap();

    let angles = [0.0, 1.2, 2.9];
    let times = [0.0, 1.0];
    let replicates = 10_000;
    let fields =
        run_replicates_circle(model.coefficients(), &angles, &times, 7, replicates).unwrap();
    println!(
        "{replicates} replicates at angles {angles:?}, times {times:?}\n"
    );

    println!("{:>10} {:>12} {:>12} {:>12}", "ϑ", "empirical", "stderr", "analytic");
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 2), (0, 0)] {
        let theta = {
            let raw = (angles[a] - angles[b]).abs() % (2.0 * std::f64::consts::PI);
            raw.min(2.0 * std::f64::consts::PI - raw)
        };
        let empirical = empirical_covariance_circle(&fields, a, 0, b, 0).unwrap();
        let analytic = model.eval(theta, 0.0).unwrap()[(0, 0)];
        println!(
            "{theta:>10.4} {:>12.5} {:>12.5} {:>12.5}",
            empirical.mean[(0, 0)],
            empirical.stderr[(0, 0)],
            analytic
        );
    }
}
