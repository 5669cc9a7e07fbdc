//! Ultraspherical (Gegenbauer) polynomials and the sphere constants built
//! from them.
//!
//! The polynomials P_n^{(λ)} are defined as the coefficients of u^n in the
//! power series of (1 - 2ux + u^2)^{-λ}, evaluated here through the
//! three-term recurrence. The generating-function expansion is also exposed
//! as an independent route so the two can be checked against each other.
//! λ = 1/2 recovers the Legendre polynomials.

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;

/// Default cap on polynomial degree; series truncation at desk scale never
/// needs more, and coefficient magnitudes stay representable.
pub const DEFAULT_MAX_DEGREE: usize = 512;

/// Tolerance band past ±1 inside which arguments are clamped rather than
/// rejected. Dot products of normalized vectors drift past 1 by rounding.
const CLAMP_BAND: f64 = 1e-12;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Gegenbauer index lambda must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

/// Clamps `x` to [-1, 1] if it lies within the rounding band, rejecting
/// anything farther out.
fn clamp_argument(x: f64) -> Result<f64> {
    if x.abs() <= 1.0 {
        Ok(x)
    } else if x.abs() <= 1.0 + CLAMP_BAND {
        Ok(x.signum())
    } else {
        Err(Error::Domain(format!(
            "argument {x} outside [-1-{CLAMP_BAND:e}, 1+{CLAMP_BAND:e}]"
        )))
    }
}

/// Evaluates P_n^{(λ)}(x) by the three-term recurrence
/// P_n = (2(λ+n-1) x P_{n-1} - (2λ+n-2) P_{n-2}) / n.
pub fn eval_gegenbauer(lambda: f64, n: usize, x: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let x = clamp_argument(x)?;
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = 2.0 * lambda * x;
    for k in 2..=n {
        let kf = k as f64;
        let next = (2.0 * (lambda + kf - 1.0) * x * cur - (2.0 * lambda + kf - 2.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Evaluates P_n^{(λ)}(x) for all n = 0..=n_max in a single recurrence sweep.
pub fn eval_all_degrees(lambda: f64, n_max: usize, x: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let x = clamp_argument(x)?;
    let mut values = Vec::with_capacity(n_max + 1);
    values.push(1.0);
    if n_max == 0 {
        return Ok(values);
    }
    values.push(2.0 * lambda * x);
    for k in 2..=n_max {
        let kf = k as f64;
        let next =
            (2.0 * (lambda + kf - 1.0) * x * values[k - 1] - (2.0 * lambda + kf - 2.0) * values[k - 2]) / kf;
        values.push(next);
    }
    Ok(values)
}

/// P_n^{(λ)}(1) = binomial(2λ+n-1, n), computed through log-Gamma so
/// non-integer 2λ and large n stay in range.
pub fn gegenbauer_at_one(lambda: f64, n: usize) -> Result<f64> {
    check_lambda(lambda)?;
    if n == 0 {
        return Ok(1.0);
    }
    let nf = n as f64;
    let log_val = ln_gamma(2.0 * lambda + nf) - ln_gamma(nf + 1.0) - ln_gamma(2.0 * lambda);
    let value = log_val.exp();
    if !value.is_finite() {
        return Err(Error::Range(format!(
            "P_n(1) overflows f64 at degree n={n}, lambda={lambda}"
        )));
    }
    Ok(value)
}

/// The normalizing constant α_n = ((2n+d-1)/(d-1))^{1/2}; defined for d >= 2.
pub fn alpha(d: usize, n: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "alpha_n requires sphere dimension d >= 2, got {d}"
        )));
    }
    Ok((((2 * n + d - 1) as f64) / ((d - 1) as f64)).sqrt())
}

/// Surface area ω_d = 2 π^{(d+1)/2} / Γ((d+1)/2) of the unit sphere S^d.
pub fn sphere_surface_area(d: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::InvalidParameter(format!(
            "sphere dimension must be >= 1, got {d}"
        )));
    }
    let half = (d as f64 + 1.0) / 2.0;
    Ok(2.0 * std::f64::consts::PI.powf(half) / ln_gamma(half).exp())
}

/// Dimension h(n) = (2n+d-1) (n+d-2)! / ((d-1)! n!) of the space of degree-n
/// spherical harmonics on S^d.
pub fn harmonic_dimension(d: usize, n: usize) -> Result<u128> {
    if d < 1 {
        return Err(Error::InvalidParameter(format!(
            "sphere dimension must be >= 1, got {d}"
        )));
    }
    if n == 0 {
        return Ok(1);
    }
    if d == 1 {
        return Ok(2);
    }
    // h(n) = (2n+d-1) * C(n+d-2, d-2) / (d-1), an exact integer.
    let overflow = || Error::Range(format!("harmonic dimension overflows at d={d}, n={n}"));
    let mut binom: u128 = 1;
    for i in 1..=(d - 2) {
        binom = binom
            .checked_mul((n + i) as u128)
            .ok_or_else(overflow)?
            / i as u128;
    }
    let num = binom
        .checked_mul((2 * n + d - 1) as u128)
        .ok_or_else(overflow)?;
    Ok(num / (d as u128 - 1))
}

/// Coefficients β_{k,n} of the monomial expansion
/// x^n = Σ_{k=0}^{⌊n/2⌋} β_{k,n} P_{n-2k}^{((d-1)/2)}(x),
/// via the closed Gamma-ratio formula. All entries are strictly positive.
pub fn monomial_expansion_coeffs(d: usize, n: usize) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "monomial expansion requires d >= 2, got {d}"
        )));
    }
    let lambda = (d as f64 - 1.0) / 2.0;
    let nf = n as f64;
    let mut coeffs = Vec::with_capacity(n / 2 + 1);
    for k in 0..=(n / 2) {
        let kf = k as f64;
        let log_beta = ln_gamma(nf + 1.0) + (nf - 2.0 * kf + lambda).ln() + ln_gamma(lambda)
            - nf * std::f64::consts::LN_2
            - ln_gamma(kf + 1.0)
            - ln_gamma(nf - kf + lambda + 1.0);
        let beta = log_beta.exp();
        if !beta.is_finite() {
            return Err(Error::Range(format!(
                "beta_{{{k},{n}}} overflows f64 at d={d}"
            )));
        }
        coeffs.push(beta);
    }
    Ok(coeffs)
}

/// Taylor coefficients in u of the generating function (1 - 2ux + u^2)^{-λ},
/// up to degree `n_max`.
///
/// Computed by binomial-series composition, deliberately not by the
/// three-term recurrence: this is the independent route against which
/// [`eval_gegenbauer`] is tested.
pub fn generating_function_coeffs(lambda: f64, x: f64, n_max: usize) -> Result<Vec<f64>> {
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    check_lambda(lambda)?;
    let x = clamp_argument(x)?;
    // (1 - w)^{-λ} = Σ_k r_k w^k with r_k = (λ)_k / k!, and w = u(2x - u),
    // so w^k = Σ_{j<=k} C(k,j) (2x)^{k-j} (-1)^j u^{k+j}. The u^n coefficient
    // collects k in [⌈n/2⌉, n] with j = n-k. The alternating sum cancels
    // catastrophically in f64 (terms up to ~(2|x|)^n · r_n against an O(1)
    // result), so everything is carried exactly: λ and x, being f64s, are
    // rationals, and only the final coefficients are rounded.
    let lambda_q = BigRational::from_float(lambda)
        .ok_or_else(|| Error::Numeric("non-finite lambda".into()))?;
    let two_x = BigRational::from_float(2.0 * x)
        .ok_or_else(|| Error::Numeric("non-finite argument".into()))?;
    let mut rising = vec![BigRational::one(); n_max + 1];
    for k in 1..=n_max {
        let kq = BigRational::from_integer((k as i64).into());
        rising[k] = &rising[k - 1] * (&lambda_q + &kq - BigRational::one()) / kq;
    }
    let mut two_x_pow = vec![BigRational::one(); n_max + 1];
    for p in 1..=n_max {
        two_x_pow[p] = &two_x_pow[p - 1] * &two_x;
    }
    let mut coeffs = vec![0.0; n_max + 1];
    for n in 0..=n_max {
        let mut acc = BigRational::zero();
        for k in n.div_ceil(2)..=n {
            let j = n - k;
            let term = &rising[k] * binomial_q(k, j) * &two_x_pow[k - j];
            if j % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        coeffs[n] = acc
            .to_f64()
            .ok_or_else(|| Error::Numeric("coefficient exceeds f64 range".into()))?;
    }
    Ok(coeffs)
}

fn binomial_q(n: usize, k: usize) -> num_rational::BigRational {
    use num_rational::BigRational;
    let k = k.min(n - k);
    let mut acc = BigRational::from_integer(1.into());
    for i in 0..k {
        acc = acc * BigRational::from_integer(((n - i) as i64).into())
            / BigRational::from_integer(((i + 1) as i64).into());
    }
    acc
}

/// A Gegenbauer family at fixed index λ with a configurable degree cap.
#[derive(Debug, Clone, Copy)]
pub struct GegenbauerBasis {
    lambda: f64,
    max_degree: usize,
}

impl GegenbauerBasis {
    /// Basis for sphere work: λ = (d-1)/2, default degree cap.
    pub fn for_sphere(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!(
                "Gegenbauer sphere basis requires d >= 2, got {d}"
            )));
        }
        Self::new((d as f64 - 1.0) / 2.0, DEFAULT_MAX_DEGREE)
    }

    pub fn new(lambda: f64, max_degree: usize) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self { lambda, max_degree })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn eval(&self, n: usize, x: f64) -> Result<f64> {
        self.check_degree(n)?;
        eval_gegenbauer(self.lambda, n, x)
    }

    pub fn eval_all(&self, n_max: usize, x: f64) -> Result<Vec<f64>> {
        self.check_degree(n_max)?;
        eval_all_degrees(self.lambda, n_max, x)
    }

    pub fn at_one(&self, n: usize) -> Result<f64> {
        self.check_degree(n)?;
        gegenbauer_at_one(self.lambda, n)
    }

    fn check_degree(&self, n: usize) -> Result<()> {
        if n > self.max_degree {
            return Err(Error::Range(format!(
                "degree {n} exceeds basis cap {}",
                self.max_degree
            )));
        }
        Ok(())
    }
}

/// Constants of S^d that recur throughout: α_n, ω_d, h(n).
#[derive(Debug, Clone, Copy)]
pub struct SphereConstants {
    d: usize,
}

impl SphereConstants {
    pub fn new(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidParameter(format!(
                "sphere dimension must be >= 1, got {d}"
            )));
        }
        Ok(Self { d })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn alpha(&self, n: usize) -> Result<f64> {
        alpha(self.d, n)
    }

    pub fn surface_area(&self) -> f64 {
        sphere_surface_area(self.d).expect("d validated at construction")
    }

    pub fn harmonic_dimension(&self, n: usize) -> Result<u128> {
        harmonic_dimension(self.d, n)
    }
}
