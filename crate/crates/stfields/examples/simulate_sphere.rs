//! Series simulation of a bivariate field on S^2 and a Monte Carlo check of
//! its covariance at a few (angle, lag) points.
//!
//! Run with `cargo run --release --example simulate_sphere`.

use nalgebra::DMatrix;
use stfields::covariance::example4_series;
use stfields::simulate::{replicate_rng, run_replicates_sphere};
use stfields::sphere::{geodesic_distance, sample_uniform};
use stfields::temporal::{separable_model, CorrelationFamily};
use stfields::verify::{empirical_covariance_sphere, pairwise_angles};

fn main() {
    let coupling = DMatrix::from_row_slice(2, 2, &[0.5, 0.3, 0.3, 0.4]);
    let base = separable_model(CorrelationFamily::Exponential, 1.0, coupling).unwrap();
    let model = example4_series(base, 2, 48, 1e-3).unwrap();

    let mut rng = replicate_rng(42, 0);
    let sites = [
        sample_uniform(2, &mut rng).unwrap(),
        sample_uniform(2, &mut rng).unwrap(),
    ];
    let theta = geodesic_distance(&sites[0], &sites[1]).unwrap();
    println!("angles between sites:\n{:.4}", pairwise_angles(&sites).unwrap());

    let replicates = 10_000;
    let times = [0.0, 1.0];
    let fields = run_replicates_sphere(model.coefficients(), &sites, &times, 42, replicates).unwrap();
    println!("{replicates} replicates on {} sites x {} times", sites.len(), times.len());

    for (label, sa, ta, sb, tb, ang, lag) in [
        ("C(ϑ; 0)", 0usize, 0usize, 1usize, 0usize, theta, 0.0),
        ("C(ϑ; 1)", 0, 1, 1, 0, theta, 1.0),
        ("C(0; 0)", 0, 0, 0, 0, 0.0, 0.0),
        ("C(0; 1)", 0, 1, 0, 0, 0.0, 1.0),
    ] {
        let empirical = empirical_covariance_sphere(&fields, sa, ta, sb, tb).unwrap();
        let analytic = model.eval(ang, lag).unwrap();
        println!("\n{label}:");
        for i in 0..2 {
            for j in 0..2 {
                println!(
                    "  [{i},{j}] empirical {:+.5} ± {:.5}   analytic {:+.5}",
                    empirical.mean[(i, j)],
                    empirical.stderr[(i, j)],
                    analytic[(i, j)]
                );
            }
        }
    }
}
