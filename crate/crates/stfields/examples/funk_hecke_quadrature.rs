//! Spherical quadrature and the orthogonality integral on S^2: the surface
//! integral of P_i(x1'z) P_j(x2'z) dz collapses to a diagonal multiple of
//! P_i(x1'x2).
//!
//! Run with `cargo run --example funk_hecke_quadrature`.

use std::f64::consts::PI;
use stfields::gegenbauer::{alpha, eval_gegenbauer};
use stfields::simulate::replicate_rng;
use stfields::sphere::{integrate_s2, product_quadrature_s2, sample_uniform};

fn main() {
    // Exact for polynomial integrands up to degree min(2·16-1, 32-1) = 31.
    let quad = product_quadrature_s2(16, 32).unwrap();
    println!(
        "product rule: {} nodes, exactness degree {}",
        quad.len(),
        quad.exactness_degree()
    );

    let mut rng = replicate_rng(7, 0);
    let x1 = sample_uniform(2, &mut rng).unwrap();
    let x2 = sample_uniform(2, &mut rng).unwrap();
    let cos_angle = x1.dot(&x2).unwrap();
    let omega = 4.0 * PI;

    println!("\n∫ P_i(x1'z) P_j(x2'z) dz  vs  δ_ij (ω/α_i²) P_i(x1'x2):");
    println!("{:>3} {:>3} {:>14} {:>14} {:>10}", "i", "j", "integral", "predicted", "residual");
    for i in 0..=4usize {
        for j in 0..=4usize {
            let integral = integrate_s2(
                |z| {
                    eval_gegenbauer(0.5, i, x1.dot(z).unwrap()).unwrap()
                        * eval_gegenbauer(0.5, j, x2.dot(z).unwrap()).unwrap()
                },
                &quad,
            )
            .unwrap();
            let predicted = if i == j {
                let a = alpha(2, i).unwrap();
                omega / (a * a) * eval_gegenbauer(0.5, i, cos_angle).unwrap()
            } else {
                0.0
            };
            if i == j || (integral - predicted).abs() > 1e-12 {
                println!(
                    "{i:>3} {j:>3} {integral:>14.8} {predicted:>14.8} {:>10.2e}",
                    integral - predicted
                );
            }
        }
    }
    println!("(off-diagonal rows are suppressed when the residual is < 1e-12)");
}
