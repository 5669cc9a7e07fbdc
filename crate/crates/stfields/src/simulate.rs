//! Constructive series simulators for isotropic vector Gaussian fields on
//! spheres, stationary in time.
//!
//! On S^d (d >= 2) the field is Z(x; t) = Σ_n V_n(t) P_n^{((d-1)/2)}(x'U)
//! with U uniform on S^d and cov(V_n(s+t), V_n(s)) = α_n² B_n(t); on the
//! circle it is the random Fourier series Σ_n (V_{n1}(t) cos nϑ +
//! V_{n2}(t) sin nϑ) with per-level covariance B_n(t). Both reproduce the
//! assembled series covariance exactly in distribution.

use crate::error::{Error, Result};
use crate::gegenbauer::{
    alpha, eval_all_degrees, gegenbauer_at_one, monomial_expansion_coeffs, sphere_surface_area,
};
use crate::sphere::{sample_uniform, SpherePoint, SphereQuadrature};
use crate::temporal::{CoefficientSequence, Dimension, TemporalCovariance};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Gram matrices whose minimum eigenvalue dips below -PSD_FAIL_REL · trace
/// are rejected as invalid rather than repaired.
pub const PSD_FAIL_REL: f64 = 1e-6;

/// Jitter added to the diagonal when the plain Cholesky factorization fails.
pub const CHOLESKY_JITTER_REL: f64 = 1e-10;

/// Square-root factor L with L L' ≈ (C + C')/2. Plain Cholesky first, then
/// jittered Cholesky, then an eigendecomposition with negative eigenvalues
/// clipped to zero; eigenvalues below -PSD_FAIL_REL · trace are an error.
pub fn covariance_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !cov.is_square() {
        return Err(Error::DimensionMismatch(
            "covariance factor needs a square matrix".into(),
        ));
    }
    let sym = (cov + cov.transpose()) * 0.5;
    let trace = sym.trace().abs().max(f64::MIN_POSITIVE);
    if let Some(chol) = sym.clone().cholesky() {
        return Ok(chol.unpack());
    }
    let n = sym.nrows();
    let jittered = &sym + DMatrix::identity(n, n) * (CHOLESKY_JITTER_REL * trace);
    if let Some(chol) = jittered.cholesky() {
        return Ok(chol.unpack());
    }
    let eig = sym.symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_FAIL_REL * trace {
        return Err(Error::InvalidModel(format!(
            "covariance is not PSD: min eigenvalue {min_eig:e} vs trace {trace:e}"
        )));
    }
    let mut u = eig.eigenvectors;
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        u.column_mut(j).scale_mut(s);
    }
    Ok(u)
}

/// One draw from N(0, C).
pub fn sample_gaussian<R: Rng + ?Sized>(cov: &DMatrix<f64>, rng: &mut R) -> Result<DVector<f64>> {
    let factor = covariance_factor(cov)?;
    let z = DVector::from_fn(cov.nrows(), |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(&factor * z)
}

/// One path of the stationary m-vector process with covariance function
/// B(t), sampled on `times`: returns one m-vector per time point.
pub fn sample_stationary_vector_process<R: Rng + ?Sized>(
    model: &TemporalCovariance,
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("time grid must be nonempty".into()));
    }
    let gram = model.block_gram(times)?;
    let flat = sample_gaussian(&gram, rng)?;
    let m = model.m();
    Ok((0..times.len())
        .map(|i| flat.rows(i * m, m).into_owned())
        .collect())
}

/// A simulated field on S^d: values, the drawn pole U, and the per-level
/// coefficient processes V_n (kept so the Funk-Hecke extraction can be
/// checked against what was actually drawn).
#[derive(Debug, Clone)]
pub struct FieldRealization {
    pub sites: Vec<SpherePoint>,
    pub times: Vec<f64>,
    /// values[s][i] = Z(x_s; t_i), an m-vector.
    pub values: Vec<Vec<DVector<f64>>>,
    pub pole: SpherePoint,
    /// level_draws[n][i] = V_n(t_i).
    pub level_draws: Vec<Vec<DVector<f64>>>,
}

impl FieldRealization {
    pub fn m(&self) -> usize {
        self.values[0][0].len()
    }

    pub fn value(&self, site: usize, time: usize) -> &DVector<f64> {
        &self.values[site][time]
    }
}

fn check_sites(sites: &[SpherePoint], d: usize) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::InvalidParameter("site list must be nonempty".into()));
    }
    for (i, site) in sites.iter().enumerate() {
        if site.sphere_dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "site {i} lives on S^{} but the model is on S^{d}",
                site.sphere_dim()
            )));
        }
    }
    Ok(())
}

/// Simulates the series field on S^d, d >= 2: draws U uniform on S^d, then
/// per level an m-vector path with covariance α_n² B_n, and superposes
/// V_n(t) P_n(x'U).
pub fn simulate_sphere_series<R: Rng + ?Sized>(
    coeffs: &CoefficientSequence,
    sites: &[SpherePoint],
    times: &[f64],
    rng: &mut R,
) -> Result<FieldRealization> {
    let Dimension::Sphere(d) = coeffs.dim() else {
        return Err(Error::InvalidModel(format!(
            "sphere simulator needs an S^d (d >= 2) model, got d = {}",
            coeffs.dim()
        )));
    };
    check_sites(sites, d)?;
    if times.is_empty() {
        return Err(Error::InvalidParameter("time grid must be nonempty".into()));
    }
    let pole = sample_uniform(d, rng)?;
    let n_max = coeffs.truncation();
    let lambda = (d as f64 - 1.0) / 2.0;

    let mut level_draws = Vec::with_capacity(n_max + 1);
    for (n, level) in coeffs.levels().iter().enumerate() {
        let a = alpha(d, n)?;
        let path = sample_stationary_vector_process(level, times, rng)?;
        level_draws.push(path.into_iter().map(|v| v * a).collect::<Vec<_>>());
    }

    let m = coeffs.m();
    let mut values = Vec::with_capacity(sites.len());
    for site in sites {
        let basis = eval_all_degrees(lambda, n_max, site.dot(&pole)?)?;
        let mut per_time = vec![DVector::zeros(m); times.len()];
        for n in 0..=n_max {
            if basis[n] == 0.0 {
                continue;
            }
            for (i, v) in level_draws[n].iter().enumerate() {
                per_time[i] += v * basis[n];
            }
        }
        values.push(per_time);
    }
    Ok(FieldRealization {
        sites: sites.to_vec(),
        times: times.to_vec(),
        values,
        pole,
        level_draws,
    })
}

/// A simulated field on the circle: the random Fourier series draws.
#[derive(Debug, Clone)]
pub struct CircleFieldRealization {
    pub angles: Vec<f64>,
    pub times: Vec<f64>,
    /// values[s][i] = Z(ϑ_s; t_i).
    pub values: Vec<Vec<DVector<f64>>>,
    /// cos_draws[n][i], sin_draws[n][i] = V_{n1}(t_i), V_{n2}(t_i).
    pub cos_draws: Vec<Vec<DVector<f64>>>,
    pub sin_draws: Vec<Vec<DVector<f64>>>,
}

/// Simulates the random Fourier series on S^1:
/// Z(ϑ; t) = Σ_n (V_{n1}(t) cos nϑ + V_{n2}(t) sin nϑ) with independent
/// per-level paths of covariance B_n (no α scaling on the circle).
pub fn simulate_circle_series<R: Rng + ?Sized>(
    coeffs: &CoefficientSequence,
    angles: &[f64],
    times: &[f64],
    rng: &mut R,
) -> Result<CircleFieldRealization> {
    if coeffs.dim() != Dimension::Circle {
        return Err(Error::InvalidModel(format!(
            "circle simulator needs an S^1 model, got d = {}",
            coeffs.dim()
        )));
    }
    if angles.is_empty() || times.is_empty() {
        return Err(Error::InvalidParameter(
            "angle and time grids must be nonempty".into(),
        ));
    }
    let n_max = coeffs.truncation();
    let m = coeffs.m();
    let mut cos_draws = Vec::with_capacity(n_max + 1);
    let mut sin_draws = Vec::with_capacity(n_max + 1);
    for level in coeffs.levels() {
        cos_draws.push(sample_stationary_vector_process(level, times, rng)?);
        sin_draws.push(sample_stationary_vector_process(level, times, rng)?);
    }
    let mut values = Vec::with_capacity(angles.len());
    for &theta in angles {
        let mut per_time = vec![DVector::zeros(m); times.len()];
        for n in 0..=n_max {
            let (c, s) = ((n as f64 * theta).cos(), (n as f64 * theta).sin());
            for i in 0..times.len() {
                per_time[i] += &cos_draws[n][i] * c + &sin_draws[n][i] * s;
            }
        }
        values.push(per_time);
    }
    Ok(CircleFieldRealization {
        angles: angles.to_vec(),
        times: times.to_vec(),
        values,
        cos_draws,
        sin_draws,
    })
}

/// The elementary field of a single level n on S^d:
/// Z(x; t) = α_n V(t) P_n(x'U), cov(V) = B, so that
/// cov(Z(x1; s+t), Z(x2; s)) = B(t) P_n^{((d-1)/2)}(cos ϑ).
pub fn elementary_field<R: Rng + ?Sized>(
    base: &TemporalCovariance,
    d: usize,
    n: usize,
    sites: &[SpherePoint],
    times: &[f64],
    rng: &mut R,
) -> Result<FieldRealization> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "elementary field needs d >= 2, got {d}"
        )));
    }
    check_sites(sites, d)?;
    let pole = sample_uniform(d, rng)?;
    let a = alpha(d, n)?;
    let lambda = (d as f64 - 1.0) / 2.0;
    let path: Vec<DVector<f64>> = sample_stationary_vector_process(base, times, rng)?
        .into_iter()
        .map(|v| v * a)
        .collect();
    let m = base.m();
    let mut values = Vec::with_capacity(sites.len());
    for site in sites {
        let p = crate::gegenbauer::eval_gegenbauer(lambda, n, site.dot(&pole)?)?;
        values.push(path.iter().map(|v| v * p).collect());
    }
    let mut level_draws = vec![vec![DVector::zeros(m); times.len()]; n + 1];
    level_draws[n] = path;
    Ok(FieldRealization {
        sites: sites.to_vec(),
        times: times.to_vec(),
        values,
        pole,
        level_draws,
    })
}

/// A field with covariance B(t) cosⁿ ϑ on S^d via the monomial expansion:
/// Z(x; t) = Σ_k β_{k,n}^{1/2} α_{n-2k} V_k(t) P_{n-2k}(x'U) with
/// independent V_k of covariance B.
pub fn cosine_power_field<R: Rng + ?Sized>(
    base: &TemporalCovariance,
    d: usize,
    n: usize,
    sites: &[SpherePoint],
    times: &[f64],
    rng: &mut R,
) -> Result<FieldRealization> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "cosine-power field needs d >= 2, got {d}"
        )));
    }
    check_sites(sites, d)?;
    let pole = sample_uniform(d, rng)?;
    let betas = monomial_expansion_coeffs(d, n)?;
    let lambda = (d as f64 - 1.0) / 2.0;
    let m = base.m();
    let mut level_draws = vec![vec![DVector::zeros(m); times.len()]; n + 1];
    for (k, &beta) in betas.iter().enumerate() {
        let degree = n - 2 * k;
        let weight = beta.sqrt() * alpha(d, degree)?;
        let path = sample_stationary_vector_process(base, times, rng)?;
        level_draws[degree] = path.into_iter().map(|v| v * weight).collect();
    }
    let mut values = Vec::with_capacity(sites.len());
    for site in sites {
        let basis = eval_all_degrees(lambda, n, site.dot(&pole)?)?;
        let mut per_time = vec![DVector::zeros(m); times.len()];
        for degree in 0..=n {
            if level_draws[degree].is_empty() {
                continue;
            }
            for (i, v) in level_draws[degree].iter().enumerate() {
                per_time[i] += v * basis[degree];
            }
        }
        values.push(per_time);
    }
    Ok(FieldRealization {
        sites: sites.to_vec(),
        times: times.to_vec(),
        values,
        pole,
        level_draws,
    })
}

/// Recovers V_n(t_i) from a realization sampled on quadrature nodes, by the
/// Funk-Hecke projection
/// V_n = α_n² / (ω_d P_n(1)) ∫ Z(x; t) P_n(x'U) dx.
/// The sites must be exactly the quadrature nodes, and the rule must be
/// exact to degree n + N (series degree N).
pub fn extract_level_coefficients(
    realization: &FieldRealization,
    series_degree: usize,
    n: usize,
    quad: &SphereQuadrature,
) -> Result<Vec<DVector<f64>>> {
    let d = realization.pole.sphere_dim();
    if realization.sites.len() != quad.len() {
        return Err(Error::DimensionMismatch(format!(
            "realization has {} sites but the quadrature rule has {} nodes",
            realization.sites.len(),
            quad.len()
        )));
    }
    for (site, node) in realization.sites.iter().zip(quad.nodes()) {
        let mismatch: f64 = site
            .coords()
            .iter()
            .zip(node.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if mismatch > 1e-12 {
            return Err(Error::InvalidParameter(
                "extraction requires the realization to be sampled on the quadrature nodes".into(),
            ));
        }
    }
    if quad.exactness_degree() < n + series_degree {
        return Err(Error::InvalidParameter(format!(
            "quadrature exact to degree {} cannot project degree {} against a degree-{} series",
            quad.exactness_degree(),
            n,
            series_degree
        )));
    }
    let lambda = (d as f64 - 1.0) / 2.0;
    let scale = alpha(d, n)?.powi(2) / (sphere_surface_area(d)? * gegenbauer_at_one(lambda, n)?);
    let m = realization.m();
    let mut out = vec![DVector::zeros(m); realization.times.len()];
    for (s, site) in realization.sites.iter().enumerate() {
        let p = crate::gegenbauer::eval_gegenbauer(lambda, n, site.dot(&realization.pole)?)?;
        let w = quad.weights()[s] * p;
        for (i, acc) in out.iter_mut().enumerate() {
            *acc += &realization.values[s][i] * w;
        }
    }
    for acc in &mut out {
        *acc *= scale;
    }
    Ok(out)
}

/// Seeded replicate RNG: stream r of the base seed, so replicates are
/// independent and the ensemble is reproducible for any thread count.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Runs `replicates` independent sphere simulations in parallel.
pub fn run_replicates_sphere(
    coeffs: &CoefficientSequence,
    sites: &[SpherePoint],
    times: &[f64],
    seed: u64,
    replicates: usize,
) -> Result<Vec<FieldRealization>> {
    if replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be >= 1".into()));
    }
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            simulate_sphere_series(coeffs, sites, times, &mut rng)
        })
        .collect()
}

/// Runs `replicates` independent circle simulations in parallel.
pub fn run_replicates_circle(
    coeffs: &CoefficientSequence,
    angles: &[f64],
    times: &[f64],
    seed: u64,
    replicates: usize,
) -> Result<Vec<CircleFieldRealization>> {
    if replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be >= 1".into()));
    }
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            simulate_circle_series(coeffs, angles, times, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::product_quadrature_s2;
    use crate::temporal::{
        constant_model, separable_model, zero_model, CorrelationFamily, TimeDomain,
    };
    use approx::assert_abs_diff_eq;

    fn scalar_exp(b: f64) -> TemporalCovariance {
        separable_model(
            CorrelationFamily::Exponential,
            1.0,
            DMatrix::from_element(1, 1, b),
        )
        .unwrap()
    }

    #[test]
    fn factor_reproduces_covariance() {
        let c = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let l = covariance_factor(&c).unwrap();
        assert_abs_diff_eq!(&l * l.transpose(), c, epsilon = 1e-12);
        // Rank-deficient PSD goes through the eigen-clip path.
        let ones = DMatrix::from_element(3, 3, 1.0);
        let l = covariance_factor(&ones).unwrap();
        assert_abs_diff_eq!(&l * l.transpose(), ones, epsilon = 1e-8);
        // Zero covariance yields the zero factor.
        let z = DMatrix::zeros(2, 2);
        assert_abs_diff_eq!(covariance_factor(&z).unwrap().amax(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn factor_rejects_indefinite() {
        let mut c = DMatrix::identity(3, 3);
        c[(2, 2)] = -1.0;
        assert!(covariance_factor(&c).is_err());
    }

    #[test]
    fn gaussian_sample_covariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.8, 0.8, 1.0]);
        let mut rng = replicate_rng(11, 0);
        let reps = 40_000;
        let mut acc = DMatrix::zeros(2, 2);
        for _ in 0..reps {
            let z = sample_gaussian(&cov, &mut rng).unwrap();
            acc += &z * z.transpose();
        }
        acc /= reps as f64;
        // Monte Carlo tolerance ~ 5 / sqrt(reps) on unit-scale entries.
        assert_abs_diff_eq!(acc, cov, epsilon = 0.06);
    }

    #[test]
    fn stationary_process_matches_gram() {
        let model = scalar_exp(1.0);
        let times = [0.0, 1.0, 2.5];
        let mut rng = replicate_rng(7, 0);
        let reps = 40_000;
        let mut acc = DMatrix::zeros(3, 3);
        for _ in 0..reps {
            let path = sample_stationary_vector_process(&model, &times, &mut rng).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    acc[(i, j)] += path[i][0] * path[j][0];
                }
            }
        }
        acc /= reps as f64;
        let gram = model.block_gram(&times).unwrap();
        assert_abs_diff_eq!(acc, gram, epsilon = 0.05);
    }

    #[test]
    fn replicates_are_deterministic_and_distinct() {
        let levels = vec![zero_model(1, TimeDomain::Continuous).unwrap(), scalar_exp(0.5)];
        let coeffs = CoefficientSequence::new(Dimension::Sphere(2), levels, 1.0).unwrap();
        let sites = vec![SpherePoint::from_polar(0.3, 1.0), SpherePoint::from_polar(2.0, -0.4)];
        let times = [0.0, 1.0];
        let a = run_replicates_sphere(&coeffs, &sites, &times, 42, 3).unwrap();
        let b = run_replicates_sphere(&coeffs, &sites, &times, 42, 3).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            for (va, vb) in ra.values.iter().flatten().zip(rb.values.iter().flatten()) {
                assert_eq!(va, vb);
            }
        }
        assert_ne!(a[0].values[0][0], a[1].values[0][0]);
        let c = run_replicates_sphere(&coeffs, &sites, &times, 43, 1).unwrap();
        assert_ne!(a[0].values[0][0], c[0].values[0][0]);
    }

    #[test]
    fn elementary_field_covariance_mc() {
        // Level n=1 on S^2, B = e^{-|t|}: cov(Z(x1;t), Z(x2;t)) = cos ϑ.
        let base = scalar_exp(1.0);
        let x1 = SpherePoint::from_polar(0.0, 0.0);
        let x2 = SpherePoint::from_polar(std::f64::consts::PI / 3.0, 0.0);
        let sites = vec![x1, x2];
        let times = [0.0];
        let mut rng = replicate_rng(3, 0);
        let reps = 60_000;
        let mut acc = 0.0;
        for _ in 0..reps {
            let f = elementary_field(&base, 2, 1, &sites, &times, &mut rng).unwrap();
            acc += f.values[0][0][0] * f.values[1][0][0];
        }
        acc /= reps as f64;
        assert_abs_diff_eq!(acc, 0.5, epsilon = 0.05);
    }

    #[test]
    fn cosine_power_field_covariance_mc() {
        // n=2, d=2, B ≡ 1: cov(Z(x1;t), Z(x2;t)) = cos² ϑ = 0.25 at ϑ = π/3.
        let base = constant_model(DMatrix::from_element(1, 1, 1.0), TimeDomain::Continuous)
            .unwrap();
        let x1 = SpherePoint::from_polar(0.0, 0.0);
        let x2 = SpherePoint::from_polar(std::f64::consts::PI / 3.0, 0.0);
        let sites = vec![x1, x2];
        let times = [0.0];
        let mut rng = replicate_rng(9, 0);
        let reps = 60_000;
        let (mut cross, mut var) = (0.0, 0.0);
        for _ in 0..reps {
            let f = cosine_power_field(&base, 2, 2, &sites, &times, &mut rng).unwrap();
            cross += f.values[0][0][0] * f.values[1][0][0];
            var += f.values[0][0][0] * f.values[0][0][0];
        }
        cross /= reps as f64;
        var /= reps as f64;
        assert_abs_diff_eq!(cross, 0.25, epsilon = 0.05);
        assert_abs_diff_eq!(var, 1.0, epsilon = 0.05);
    }

    #[test]
    fn circle_field_covariance_mc() {
        // Single level n=1, B = e^{-|t|}: cov(Z(ϑ1;t), Z(ϑ2;t)) = cos(ϑ1-ϑ2).
        let levels = vec![zero_model(1, TimeDomain::Continuous).unwrap(), scalar_exp(1.0)];
        let coeffs = CoefficientSequence::new(Dimension::Circle, levels, 1.0).unwrap();
        let angles = [0.2, 1.3];
        let times = [0.0];
        let mut rng = replicate_rng(13, 0);
        let reps = 60_000;
        let mut acc = 0.0;
        for _ in 0..reps {
            let f = simulate_circle_series(&coeffs, &angles, &times, &mut rng).unwrap();
            acc += f.values[0][0][0] * f.values[1][0][0];
        }
        acc /= reps as f64;
        assert_abs_diff_eq!(acc, (1.3f64 - 0.2).cos(), epsilon = 0.05);
    }

    #[test]
    fn sphere_series_covariance_mc() {
        // Two levels with distinct temporal decay; check the lag-1 cross
        // covariance at ϑ = π/3 against the assembled series.
        use crate::covariance::SpaceTimeCovariance;
        let levels = vec![scalar_exp(0.4), scalar_exp(0.6)];
        let coeffs = CoefficientSequence::new(Dimension::Sphere(2), levels, 1.0).unwrap();
        let cov = SpaceTimeCovariance::from_coefficients(coeffs.clone());
        let theta = std::f64::consts::PI / 3.0;
        let x1 = SpherePoint::from_polar(0.0, 0.0);
        let x2 = SpherePoint::from_polar(theta, 0.0);
        let sites = vec![x1, x2];
        let times = [0.0, 1.0];
        let reps = 60_000;
        let fields = run_replicates_sphere(&coeffs, &sites, &times, 21, reps).unwrap();
        let mut acc = 0.0;
        for f in &fields {
            acc += f.values[0][1][0] * f.values[1][0][0];
        }
        acc /= reps as f64;
        let expected = cov.eval(theta, 1.0).unwrap()[(0, 0)];
        assert_abs_diff_eq!(acc, expected, epsilon = 0.05);
    }

    #[test]
    fn extraction_roundtrip() {
        // Simulate on quadrature nodes and recover every V_n exactly (up to
        // quadrature exactness) from the field values.
        let levels = vec![scalar_exp(0.5), scalar_exp(0.3), scalar_exp(0.2)];
        let coeffs = CoefficientSequence::new(Dimension::Sphere(2), levels, 1.0).unwrap();
        let quad = product_quadrature_s2(12, 24).unwrap();
        let times = [0.0, 0.7, 1.9];
        let mut rng = replicate_rng(31, 0);
        let field = simulate_sphere_series(&coeffs, quad.nodes(), &times, &mut rng).unwrap();
        for n in 0..=coeffs.truncation() {
            let recovered = extract_level_coefficients(&field, coeffs.truncation(), n, &quad)
                .unwrap();
            for (rec, truth) in recovered.iter().zip(&field.level_draws[n]) {
                assert_abs_diff_eq!(rec, truth, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn extraction_rejects_mismatched_sites() {
        let levels = vec![scalar_exp(0.5)];
        let coeffs = CoefficientSequence::new(Dimension::Sphere(2), levels, 1.0).unwrap();
        let quad = product_quadrature_s2(6, 12).unwrap();
        let sites = vec![SpherePoint::from_polar(0.1, 0.1), SpherePoint::from_polar(1.0, 2.0)];
        let mut rng = replicate_rng(1, 0);
        let field = simulate_sphere_series(&coeffs, &sites, &[0.0], &mut rng).unwrap();
        assert!(extract_level_coefficients(&field, 0, 0, &quad).is_err());
    }

    #[test]
    fn simulators_reject_wrong_dimension() {
        let levels = vec![scalar_exp(0.5)];
        let circle = CoefficientSequence::new(Dimension::Circle, levels.clone(), 1.0).unwrap();
        let sphere = CoefficientSequence::new(Dimension::Sphere(2), levels, 1.0).unwrap();
        let mut rng = replicate_rng(1, 0);
        let site = SpherePoint::from_polar(0.3, 0.3);
        assert!(simulate_sphere_series(&circle, &[site.clone()], &[0.0], &mut rng).is_err());
        assert!(simulate_circle_series(&sphere, &[0.1], &[0.0], &mut rng).is_err());
        // Sites on the wrong sphere are rejected too.
        let s3 = CoefficientSequence::new(
            Dimension::Sphere(3),
            vec![scalar_exp(0.5)],
            1.0,
        )
        .unwrap();
        assert!(simulate_sphere_series(&s3, &[site], &[0.0], &mut rng).is_err());
    }
}
