//! Points on the unit sphere S^d, geodesic/chordal distances, uniform
//! sampling, and a product quadrature on S^2 for integral identities.

use crate::error::{Error, Result};
use crate::gauss::gauss_legendre;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// A unit vector in R^{d+1}; the spatial index of the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Normalizes `coords` onto the sphere. Rejects the zero vector and
    /// non-finite entries.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidParameter(
                "a sphere point needs at least 2 coordinates (d >= 1)".into(),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero vector has no direction".into()));
        }
        Ok(Self {
            coords: coords.into_iter().map(|c| c / norm).collect(),
        })
    }

    /// Point on the unit circle S^1 at angular coordinate θ.
    pub fn from_circle_angle(theta: f64) -> Self {
        Self {
            coords: vec![theta.cos(), theta.sin()],
        }
    }

    /// Point on S^2 at polar angle θ (from the north pole) and azimuth φ.
    pub fn from_polar(theta: f64, phi: f64) -> Self {
        Self {
            coords: vec![
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ],
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Sphere dimension d (ambient dimension minus one).
    pub fn sphere_dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.coords.len() != other.coords.len() {
            return Err(Error::DimensionMismatch(format!(
                "points live on S^{} and S^{}",
                self.sphere_dim(),
                other.sphere_dim()
            )));
        }
        Ok(self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn antipode(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }
}

/// Geodesic (great-circle) distance ϑ(x1, x2) = arccos(x1'x2) ∈ [0, π].
/// The dot product is clamped so rounding past ±1 never produces NaN.
pub fn geodesic_distance(x1: &SpherePoint, x2: &SpherePoint) -> Result<f64> {
    let dot = x1.dot(x2)?;
    Ok(dot.clamp(-1.0, 1.0).acos())
}

/// Chordal (Euclidean) distance ‖x1 - x2‖ = 2 sin(ϑ/2).
pub fn chordal_distance(x1: &SpherePoint, x2: &SpherePoint) -> Result<f64> {
    if x1.coords.len() != x2.coords.len() {
        return Err(Error::DimensionMismatch(format!(
            "points live on S^{} and S^{}",
            x1.sphere_dim(),
            x2.sphere_dim()
        )));
    }
    Ok(x1
        .coords
        .iter()
        .zip(&x2.coords)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Draws a point uniformly on S^d by normalizing a standard Gaussian vector.
pub fn sample_uniform<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<SpherePoint> {
    if d < 1 {
        return Err(Error::InvalidParameter(format!(
            "sphere dimension must be >= 1, got {d}"
        )));
    }
    loop {
        let coords: Vec<f64> = (0..=d).map(|_| rng.sample(StandardNormal)).collect();
        if coords.iter().map(|c| c * c).sum::<f64>() > 0.0 {
            return SpherePoint::new(coords);
        }
        // Measure-zero zero draw: redraw.
    }
}

/// A fixed quadrature rule on S^2: nodes with positive weights summing to
/// the surface area 4π.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    nodes: Vec<SpherePoint>,
    weights: Vec<f64>,
    exactness_degree: usize,
}

impl SphereQuadrature {
    pub fn nodes(&self) -> &[SpherePoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest spherical-polynomial degree the rule integrates exactly.
    pub fn exactness_degree(&self) -> usize {
        self.exactness_degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss–Legendre in the polar cosine crossed with a uniform trapezoid rule
/// in azimuth; exact for spherical polynomials up to combined degree
/// min(2·polar_order - 1, azimuth_order - 1).
pub fn product_quadrature_s2(polar_order: usize, azimuth_order: usize) -> Result<SphereQuadrature> {
    if polar_order < 2 || azimuth_order < 2 {
        return Err(Error::InvalidParameter(format!(
            "quadrature orders must be >= 2, got ({polar_order}, {azimuth_order})"
        )));
    }
    let (cos_nodes, cos_weights) = gauss_legendre(polar_order)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let azimuth_weight = two_pi / azimuth_order as f64;
    let mut nodes = Vec::with_capacity(polar_order * azimuth_order);
    let mut weights = Vec::with_capacity(polar_order * azimuth_order);
    for (&c, &w) in cos_nodes.iter().zip(&cos_weights) {
        let s = (1.0 - c * c).sqrt();
        for k in 0..azimuth_order {
            let phi = two_pi * k as f64 / azimuth_order as f64;
            nodes.push(SpherePoint {
                coords: vec![s * phi.cos(), s * phi.sin(), c],
            });
            weights.push(w * azimuth_weight);
        }
    }
    Ok(SphereQuadrature {
        nodes,
        weights,
        exactness_degree: (2 * polar_order - 1).min(azimuth_order - 1),
    })
}

/// Weighted sum of `integrand` over the quadrature nodes. A non-finite
/// integrand value is reported with its node index.
pub fn integrate_s2<F: FnMut(&SpherePoint) -> f64>(
    mut integrand: F,
    quad: &SphereQuadrature,
) -> Result<f64> {
    let mut acc = 0.0;
    for (idx, (node, w)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
        let v = integrand(node);
        if !v.is_finite() {
            return Err(Error::Numeric(format!(
                "integrand returned {v} at quadrature node {idx}"
            )));
        }
        acc += w * v;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gegenbauer::{alpha, eval_gegenbauer};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::PI;

    #[test]
    fn geodesic_basics() {
        let x = SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap();
        let y = SpherePoint::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(geodesic_distance(&x, &x).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            geodesic_distance(&x, &x.antipode()).unwrap(),
            PI,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(geodesic_distance(&x, &y).unwrap(), PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn chordal_basics() {
        let x = SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap();
        let y = SpherePoint::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(
            chordal_distance(&x, &x.antipode()).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(chordal_distance(&x, &x).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            chordal_distance(&x, &y).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn chordal_geodesic_consistency() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x = sample_uniform(3, &mut rng).unwrap();
            let y = sample_uniform(3, &mut rng).unwrap();
            let geo = geodesic_distance(&x, &y).unwrap();
            let chord = chordal_distance(&x, &y).unwrap();
            assert_abs_diff_eq!(chord, 2.0 * (geo / 2.0).sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn clamping_never_produces_nan() {
        // Two copies of the same direction whose dot product drifts past 1.
        let x = SpherePoint::new(vec![1.0, 1.0, 1.0]).unwrap();
        let y = x.clone();
        let g = geodesic_distance(&x, &y).unwrap();
        assert!(g.is_finite());
        assert!(g >= 0.0);
    }

    #[test]
    fn uniform_samples_have_unit_norm_and_zero_mean() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let n = 100_000usize;
        let mut mean = [0.0f64; 3];
        for _ in 0..n {
            let p = sample_uniform(2, &mut rng).unwrap();
            let norm: f64 = p.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            for (m, c) in mean.iter_mut().zip(p.coords()) {
                *m += c;
            }
        }
        let band = 4.0 / (n as f64).sqrt();
        for m in mean {
            assert!((m / n as f64).abs() < band);
        }
    }

    #[test]
    fn uniform_samples_kill_degree_one_zonal_mean() {
        // Zonal means vanish above degree 0: E P_1^{(1/2)}(x'U) = 0 for U uniform.
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let x = SpherePoint::new(vec![0.0, 0.0, 1.0]).unwrap();
        let n = 100_000usize;
        let mut acc = 0.0;
        for _ in 0..n {
            let u = sample_uniform(2, &mut rng).unwrap();
            acc += eval_gegenbauer(0.5, 1, x.dot(&u).unwrap()).unwrap();
        }
        // Var P_1(x'U) = 1/3 on S^2.
        let band = 4.0 * (1.0 / 3.0 / n as f64).sqrt();
        assert!((acc / n as f64).abs() < band);
    }

    #[test]
    fn quadrature_integrates_constant() {
        let quad = product_quadrature_s2(64, 128).unwrap();
        let total = integrate_s2(|_| 1.0, &quad).unwrap();
        assert_abs_diff_eq!(total, 4.0 * PI, epsilon = 1e-12);
        let wsum: f64 = quad.weights().iter().sum();
        assert_abs_diff_eq!(wsum, 4.0 * PI, epsilon = 1e-10);
        assert!(quad.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn quadrature_kills_odd_zonal_polynomial() {
        let quad = product_quadrature_s2(64, 128).unwrap();
        let u = SpherePoint::new(vec![0.3, -0.4, 0.8]).unwrap();
        let integral = integrate_s2(
            |x| eval_gegenbauer(0.5, 3, x.dot(&u).unwrap()).unwrap(),
            &quad,
        )
        .unwrap();
        assert!(integral.abs() < 1e-10);
    }

    #[test]
    fn funk_hecke_diagonal() {
        // ∫ P_2(x1'z) P_2(x2'z) dz = (ω_2/α_2^2) P_2(x1'x2)
        let quad = product_quadrature_s2(64, 128).unwrap();
        let x1 = SpherePoint::new(vec![1.0, 2.0, -0.5]).unwrap();
        let x2 = SpherePoint::new(vec![-0.2, 0.7, 1.1]).unwrap();
        let integral = integrate_s2(
            |z| {
                eval_gegenbauer(0.5, 2, x1.dot(z).unwrap()).unwrap()
                    * eval_gegenbauer(0.5, 2, x2.dot(z).unwrap()).unwrap()
            },
            &quad,
        )
        .unwrap();
        let expected = 4.0 * PI / alpha(2, 2).unwrap().powi(2)
            * eval_gegenbauer(0.5, 2, x1.dot(&x2).unwrap()).unwrap();
        assert!((integral - expected).abs() < 1e-8);
    }

    #[test]
    fn funk_hecke_off_diagonal() {
        let quad = product_quadrature_s2(16, 32).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let omega = 4.0 * PI;
        for _ in 0..20 {
            let x1 = sample_uniform(2, &mut rng).unwrap();
            let x2 = sample_uniform(2, &mut rng).unwrap();
            for i in 0..=6usize {
                for j in 0..=6usize {
                    if i == j {
                        continue;
                    }
                    let integral = integrate_s2(
                        |z| {
                            eval_gegenbauer(0.5, i, x1.dot(z).unwrap()).unwrap()
                                * eval_gegenbauer(0.5, j, x2.dot(z).unwrap()).unwrap()
                        },
                        &quad,
                    )
                    .unwrap();
                    assert!(
                        integral.abs() <= 1e-8 * omega,
                        "i={i} j={j}: {integral}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_construction() {
        assert!(SpherePoint::new(vec![0.0, 0.0, 0.0]).is_err());
        assert!(SpherePoint::new(vec![1.0]).is_err());
        assert!(product_quadrature_s2(1, 8).is_err());
        let x = SpherePoint::new(vec![1.0, 0.0]).unwrap();
        let y = SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(geodesic_distance(&x, &y).is_err());
        assert!(chordal_distance(&x, &y).is_err());
    }
}
