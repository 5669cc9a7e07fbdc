//! Basis toolbox: Gegenbauer polynomial evaluation, normalization constants,
//! harmonic-space dimensions, and the cosine-power expansion.
//!
//! Run with `cargo run --example gegenbauer_basis`.

use stfields::gegenbauer::{
    eval_all_degrees, monomial_expansion_coeffs, SphereConstants,
};

fn main() {
    // Values of P_n^{(λ)}(cos ϑ) at a few angles on S^2 (λ = 1/2, Legendre).
    let lambda = 0.5;
    println!("P_n^(1/2)(cos ϑ) for n = 0..5");
    println!("{:>8}  {}", "ϑ", "values");
    for &theta in &[0.0f64, 0.5, 1.0, 2.0, std::f64::consts::PI] {
        let values = eval_all_degrees(lambda, 5, theta.cos()).unwrap();
        let rendered: Vec<String> = values.iter().map(|v| format!("{v:+.4}")).collect();
        println!("{theta:>8.4}  {}", rendered.join("  "));
    }

    // Per-sphere constants: α_n weights, surface area, harmonic dimensions.
    for d in [2usize, 3, 4] {
        let constants = SphereConstants::new(d).unwrap();
        println!("\nS^{d}: surface area ω_{d} = {:.6}", constants.surface_area());
        for n in 0..=4 {
            println!(
                "  n = {n}: α_n = {:.6}, dim of degree-{n} harmonics = {}",
                constants.alpha(n).unwrap(),
                constants.harmonic_dimension(n).unwrap()
            );
        }
    }

    // cos^n ϑ re-expanded in the polynomial basis: x^n = Σ_k β_{k,n} P_{n-2k}.
    println!("\ncosine powers on S^2 as basis combinations:");
    for n in 0..=4 {
        let betas = monomial_expansion_coeffs(2, n).unwrap();
        let terms: Vec<String> = betas
            .iter()
            .enumerate()
            .map(|(k, b)| format!("{b:.6}·P_{}", n - 2 * k))
            .collect();
        println!("  x^{n} = {}", terms.join(" + "));
    }
}
