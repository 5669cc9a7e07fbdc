//! Space-time covariance models C(ϑ; t) on S^d × T, assembled from a
//! truncated coefficient sequence {B_n(t)} in the basis matching the sphere
//! dimension:
//!
//! - d = 1:   C(ϑ; t) = Σ B_n(t) cos(n ϑ)
//! - d >= 2:  C(ϑ; t) = Σ B_n(t) P_n^{((d-1)/2)}(cos ϑ)
//! - d = ∞:   C(ϑ; t) = Σ B_n(t) cos^n ϑ
//!
//! plus five closed-form model families with matching series builders, and
//! the re-expansion lifting an S^∞ model to S^d.

use crate::error::{Error, Result};
use crate::gegenbauer::{eval_all_degrees, monomial_expansion_coeffs};
use crate::temporal::{
    all_ones_model, exp_arcsin_coefficient, exp_arcsin_level_model,
    hadamard_power_model, linear_combination, zero_model, CoefficientSequence, Dimension,
    TemporalCovariance, TimeDomain,
};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Geodesic angles live on [0, π]; arguments within this band of the
/// endpoints are clamped, anything further out is rejected.
const ANGLE_BAND: f64 = 1e-12;

fn check_angle(theta: f64) -> Result<f64> {
    if !theta.is_finite() || theta < -ANGLE_BAND || theta > PI + ANGLE_BAND {
        return Err(Error::Domain(format!(
            "geodesic angle must lie in [0, pi], got {theta}"
        )));
    }
    Ok(theta.clamp(0.0, PI))
}

/// Basis values w_0..w_N at angle ϑ for the given sphere dimension.
pub fn basis_values(dim: Dimension, n_max: usize, theta: f64) -> Result<Vec<f64>> {
    let theta = check_angle(theta)?;
    match dim {
        Dimension::Circle => Ok((0..=n_max).map(|n| (n as f64 * theta).cos()).collect()),
        Dimension::Sphere(d) => eval_all_degrees((d as f64 - 1.0) / 2.0, n_max, theta.cos()),
        Dimension::Infinite => {
            let y = theta.cos();
            let mut v = Vec::with_capacity(n_max + 1);
            let mut p = 1.0;
            for _ in 0..=n_max {
                v.push(p);
                p *= y;
            }
            Ok(v)
        }
    }
}

/// The closed-form families with known series expansions.
#[derive(Debug, Clone)]
pub enum ClosedForm {
    /// d = 2: -ln{ (1/2)[1 - b cos ϑ + (1 - 2 b cos ϑ + b²)^{1/2}] },
    /// entrywise in b = b_ij(t); needs max |b| < 1.
    LogGenerating { base: TemporalCovariance },
    /// d = ∞: B_0(t) + B_1(t) ϑ + B_2(t) ϑ².
    ArcsinPolynomial {
        b0: TemporalCovariance,
        b1: TemporalCovariance,
        b2: TemporalCovariance,
    },
    /// d = ∞: exp(-π/2 · b - b ϑ) entrywise.
    ExpGeodesic { base: TemporalCovariance },
    /// d >= 2: (1 - 2 b cos ϑ + b²)^{-(d-1)/2} entrywise; needs max |b| < 1.
    PowerGenerating { base: TemporalCovariance, d: usize },
    /// d = 1: exp(b cos ϑ) cos(b sin ϑ) entrywise.
    ExpCosine { base: TemporalCovariance },
}

impl ClosedForm {
    pub fn name(&self) -> &'static str {
        match self {
            ClosedForm::LogGenerating { .. } => "log_generating",
            ClosedForm::ArcsinPolynomial { .. } => "arcsin_polynomial",
            ClosedForm::ExpGeodesic { .. } => "exp_geodesic",
            ClosedForm::PowerGenerating { .. } => "power_generating",
            ClosedForm::ExpCosine { .. } => "exp_cosine",
        }
    }

    pub fn eval(&self, theta: f64, t: f64) -> Result<DMatrix<f64>> {
        match self {
            ClosedForm::LogGenerating { base } => example1_log_model(base, theta, t),
            ClosedForm::ArcsinPolynomial { b0, b1, b2 } => {
                example2_polynomial_model(b0, b1, b2, theta, t)
            }
            ClosedForm::ExpGeodesic { base } => example3_exp_model(base, theta, t),
            ClosedForm::PowerGenerating { base, d } => example4_power_model(base, *d, theta, t),
            ClosedForm::ExpCosine { base } => example5_cosine_model(base, theta, t),
        }
    }
}

fn require_entries_below_one(b: &DMatrix<f64>, what: &str) -> Result<()> {
    if b.amax() >= 1.0 {
        return Err(Error::Domain(format!(
            "{what} requires max |b_ij(t)| < 1, got {}",
            b.amax()
        )));
    }
    Ok(())
}

/// Entrywise -ln{ (1/2)[1 - b y + (1 - 2 b y + b²)^{1/2}] } with y = cos ϑ.
pub fn example1_log_model(
    base: &TemporalCovariance,
    theta: f64,
    t: f64,
) -> Result<DMatrix<f64>> {
    let theta = check_angle(theta)?;
    let b = base.eval(t)?;
    require_entries_below_one(&b, "the logarithmic family")?;
    let y = theta.cos();
    Ok(b.map(|b| {
        let root = (1.0 - 2.0 * b * y + b * b).sqrt();
        -(0.5 * (1.0 - b * y + root)).ln()
    }))
}

/// B_0(t) + B_1(t) ϑ + B_2(t) ϑ² on S^∞.
pub fn example2_polynomial_model(
    b0: &TemporalCovariance,
    b1: &TemporalCovariance,
    b2: &TemporalCovariance,
    theta: f64,
    t: f64,
) -> Result<DMatrix<f64>> {
    let theta = check_angle(theta)?;
    let m = b0.m();
    if b1.m() != m || b2.m() != m {
        return Err(Error::DimensionMismatch(
            "polynomial family coefficients must share m".into(),
        ));
    }
    Ok(b0.eval(t)? + b1.eval(t)? * theta + b2.eval(t)? * (theta * theta))
}

/// The three combinations that must each be a valid stationary covariance
/// for the quadratic-in-ϑ family on S^∞:
/// B_2,  -B_1 - πB_2,  B_0 + (π/2)B_1 + (π²/4)B_2.
pub fn example2_validity_combinations(
    b0: &TemporalCovariance,
    b1: &TemporalCovariance,
    b2: &TemporalCovariance,
) -> Result<[TemporalCovariance; 3]> {
    Ok([
        linear_combination(vec![(1.0, b2.clone())])?,
        linear_combination(vec![(-1.0, b1.clone()), (-PI, b2.clone())])?,
        linear_combination(vec![
            (1.0, b0.clone()),
            (PI / 2.0, b1.clone()),
            (PI * PI / 4.0, b2.clone()),
        ])?,
    ])
}

/// Entrywise exp(-π/2 · b - b ϑ) on S^∞.
pub fn example3_exp_model(
    base: &TemporalCovariance,
    theta: f64,
    t: f64,
) -> Result<DMatrix<f64>> {
    let theta = check_angle(theta)?;
    Ok(base.eval(t)?.map(|b| (-b * (PI / 2.0 + theta)).exp()))
}

/// Entrywise (1 - 2 b cos ϑ + b²)^{-(d-1)/2} on S^d, d >= 2.
pub fn example4_power_model(
    base: &TemporalCovariance,
    d: usize,
    theta: f64,
    t: f64,
) -> Result<DMatrix<f64>> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "the generating-function family needs d >= 2, got {d}"
        )));
    }
    let theta = check_angle(theta)?;
    let b = base.eval(t)?;
    require_entries_below_one(&b, "the generating-function family")?;
    let y = theta.cos();
    let exponent = -(d as f64 - 1.0) / 2.0;
    Ok(b.map(|b| (1.0 - 2.0 * b * y + b * b).powf(exponent)))
}

/// Entrywise exp(b cos ϑ) cos(b sin ϑ) on the circle.
pub fn example5_cosine_model(
    base: &TemporalCovariance,
    theta: f64,
    t: f64,
) -> Result<DMatrix<f64>> {
    let theta = check_angle(theta)?;
    Ok(base
        .eval(t)?
        .map(|b| (b * theta.cos()).exp() * (b * theta.sin()).cos()))
}

/// A space-time covariance: a coefficient sequence plus, when the model came
/// from one of the closed-form families, the closed form itself.
#[derive(Debug, Clone)]
pub struct SpaceTimeCovariance {
    coeffs: CoefficientSequence,
    closed_form: Option<ClosedForm>,
}

impl SpaceTimeCovariance {
    pub fn from_coefficients(coeffs: CoefficientSequence) -> Self {
        Self {
            coeffs,
            closed_form: None,
        }
    }

    pub fn with_closed_form(coeffs: CoefficientSequence, closed_form: ClosedForm) -> Self {
        Self {
            coeffs,
            closed_form: Some(closed_form),
        }
    }

    pub fn coefficients(&self) -> &CoefficientSequence {
        &self.coeffs
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        self.closed_form.as_ref()
    }

    pub fn dim(&self) -> Dimension {
        self.coeffs.dim()
    }

    pub fn m(&self) -> usize {
        self.coeffs.m()
    }

    pub fn domain(&self) -> TimeDomain {
        self.coeffs.domain()
    }

    /// Series evaluation C(ϑ; t) = Σ_n B_n(t) w_n(ϑ).
    pub fn eval(&self, theta: f64, t: f64) -> Result<DMatrix<f64>> {
        let w = basis_values(self.dim(), self.coeffs.truncation(), theta)?;
        let m = self.m();
        let mut acc = DMatrix::zeros(m, m);
        for (n, level) in self.coeffs.levels().iter().enumerate() {
            if w[n] != 0.0 {
                acc += level.eval(t)? * w[n];
            }
        }
        Ok(acc)
    }

    /// Closed-form evaluation; errors when the model has no closed form.
    pub fn eval_closed_form(&self, theta: f64, t: f64) -> Result<DMatrix<f64>> {
        let Some(cf) = &self.closed_form else {
            return Err(Error::InvalidModel(
                "model has no closed form attached".into(),
            ));
        };
        cf.eval(theta, t)
    }

    /// (C(ϑ; t) + C(ϑ; -t)) / 2 — the symmetrized covariance, which is a
    /// symmetric matrix whenever C(ϑ; -t) = C(ϑ; t)'.
    pub fn symmetrized(&self, theta: f64, t: f64) -> Result<DMatrix<f64>> {
        Ok((self.eval(theta, t)? + self.eval(theta, -t)?) * 0.5)
    }
}

fn require_levels(n_max: usize, what: &str) -> Result<()> {
    if n_max < 1 {
        return Err(Error::InvalidParameter(format!(
            "{what} needs n_max >= 1"
        )));
    }
    Ok(())
}

/// Series form of the logarithmic family on S^2:
/// B_0 = 0, B_n = (1/n) B^{∘n}.
pub fn example1_series(
    base: TemporalCovariance,
    n_max: usize,
    tail_tol: f64,
) -> Result<SpaceTimeCovariance> {
    require_levels(n_max, "the logarithmic series")?;
    let (m, domain) = (base.m(), base.domain());
    let mut levels = vec![zero_model(m, domain)?];
    for n in 1..=n_max {
        levels.push(hadamard_power_model(base.clone(), n as u32, 1.0 / n as f64)?);
    }
    let coeffs = CoefficientSequence::new(Dimension::Sphere(2), levels, tail_tol)?;
    Ok(SpaceTimeCovariance::with_closed_form(
        coeffs,
        ClosedForm::LogGenerating { base },
    ))
}

/// Series form of the quadratic-in-ϑ family on S^∞, via
/// ϑ = π/2 - arcsin(cos ϑ) and the arcsin / arcsin² Taylor series:
/// B_n^{series} collects B_0, B_1, B_2 with the appropriate weights.
pub fn example2_series(
    b0: TemporalCovariance,
    b1: TemporalCovariance,
    b2: TemporalCovariance,
    n_max: usize,
    tail_tol: f64,
) -> Result<SpaceTimeCovariance> {
    require_levels(n_max, "the quadratic series")?;
    let mut levels = Vec::with_capacity(n_max + 1);
    levels.push(linear_combination(vec![
        (1.0, b0.clone()),
        (PI / 2.0, b1.clone()),
        (PI * PI / 4.0, b2.clone()),
    ])?);
    // arcsin y = Σ a_k y^{2k+1}, a_0 = 1, a_{k+1} = a_k (2k+1)² / ((2k+2)(2k+3));
    // arcsin² y = Σ_{k>=1} w_k y^{2k}, w_1 = 1, w_{k+1} = w_k 4k² / ((2k+1)(2k+2)).
    let mut a = 1.0;
    let mut w = 1.0;
    for n in 1..=n_max {
        if n % 2 == 1 {
            let k = (n - 1) / 2;
            levels.push(linear_combination(vec![
                (-a, b1.clone()),
                (-PI * a, b2.clone()),
            ])?);
            let kf = k as f64;
            a *= (2.0 * kf + 1.0) * (2.0 * kf + 1.0) / ((2.0 * kf + 2.0) * (2.0 * kf + 3.0));
        } else {
            let k = n / 2;
            levels.push(linear_combination(vec![(w, b2.clone())])?);
            let kf = k as f64;
            w *= 4.0 * kf * kf / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0));
        }
    }
    let coeffs = CoefficientSequence::new(Dimension::Infinite, levels, tail_tol)?;
    Ok(SpaceTimeCovariance::with_closed_form(
        coeffs,
        ClosedForm::ArcsinPolynomial { b0, b1, b2 },
    ))
}

/// Series form of the exponential-in-geodesic family on S^∞:
/// B_n = c_n(B) ∘ exp(-πB) entrywise, with c_n the Taylor coefficients of
/// exp(b arcsin x).
pub fn example3_series(
    base: TemporalCovariance,
    n_max: usize,
    tail_tol: f64,
) -> Result<SpaceTimeCovariance> {
    require_levels(n_max, "the exponential-in-geodesic series")?;
    let levels = (0..=n_max)
        .map(|n| exp_arcsin_level_model(base.clone(), n))
        .collect();
    let coeffs = CoefficientSequence::new(Dimension::Infinite, levels, tail_tol)?;
    Ok(SpaceTimeCovariance::with_closed_form(
        coeffs,
        ClosedForm::ExpGeodesic { base },
    ))
}

/// Series form of the generating-function family on S^d, d >= 2:
/// B_0 = all-ones, B_n = B^{∘n}.
pub fn example4_series(
    base: TemporalCovariance,
    d: usize,
    n_max: usize,
    tail_tol: f64,
) -> Result<SpaceTimeCovariance> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "the generating-function series needs d >= 2, got {d}"
        )));
    }
    require_levels(n_max, "the generating-function series")?;
    let (m, domain) = (base.m(), base.domain());
    let mut levels = vec![all_ones_model(m, domain)?];
    for n in 1..=n_max {
        levels.push(hadamard_power_model(base.clone(), n as u32, 1.0)?);
    }
    let coeffs = CoefficientSequence::new(Dimension::Sphere(d), levels, tail_tol)?;
    Ok(SpaceTimeCovariance::with_closed_form(
        coeffs,
        ClosedForm::PowerGenerating { base, d },
    ))
}

/// Series form of the exponential-cosine family on the circle:
/// B_0 = all-ones, B_n = (1/n!) B^{∘n}.
pub fn example5_series(
    base: TemporalCovariance,
    n_max: usize,
    tail_tol: f64,
) -> Result<SpaceTimeCovariance> {
    require_levels(n_max, "the exponential-cosine series")?;
    let (m, domain) = (base.m(), base.domain());
    let mut levels = vec![all_ones_model(m, domain)?];
    let mut inv_factorial = 1.0f64;
    for n in 1..=n_max {
        inv_factorial /= n as f64;
        if inv_factorial == 0.0 {
            return Err(Error::Range(format!("1/{n}! underflows f64")));
        }
        levels.push(hadamard_power_model(base.clone(), n as u32, inv_factorial)?);
    }
    let coeffs = CoefficientSequence::new(Dimension::Circle, levels, tail_tol)?;
    Ok(SpaceTimeCovariance::with_closed_form(
        coeffs,
        ClosedForm::ExpCosine { base },
    ))
}

/// Re-expands an S^∞ coefficient sequence on S^d (d >= 2):
/// A_n(t) = Σ_k β_{k, 2k+n} B_{2k+n}(t), truncated at the source truncation,
/// so the Gegenbauer series on S^d reproduces the cos-power series exactly
/// up to the source tail.
pub fn lift_s_infinity_to_sd(
    seq: &CoefficientSequence,
    d: usize,
    tail_tol: f64,
) -> Result<CoefficientSequence> {
    if seq.dim() != Dimension::Infinite {
        return Err(Error::InvalidModel(
            "only S^inf coefficient sequences can be lifted to S^d".into(),
        ));
    }
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "lift target dimension must be >= 2, got {d}"
        )));
    }
    let n_in = seq.truncation();
    // beta[s][k] multiplies P_{s-2k} in the expansion of x^s.
    let betas: Vec<Vec<f64>> = (0..=n_in)
        .map(|s| monomial_expansion_coeffs(d, s))
        .collect::<Result<_>>()?;
    let mut levels = Vec::with_capacity(n_in + 1);
    for n in 0..=n_in {
        let mut terms = Vec::new();
        let mut s = n;
        while s <= n_in {
            let k = (s - n) / 2;
            terms.push((betas[s][k], seq.level(s).expect("s <= n_in").clone()));
            s += 2;
        }
        levels.push(linear_combination(terms)?);
    }
    CoefficientSequence::new(Dimension::Sphere(d), levels, tail_tol)
}

/// Smallest truncation N <= cap with tail bound term(N+1)/(1 - q) <= tol,
/// where q = ratio(N+1) must bound all subsequent term ratios and be < 1.
pub fn adaptive_truncation(
    tol: f64,
    cap: usize,
    term: impl Fn(usize) -> f64,
    ratio: impl Fn(usize) -> f64,
) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tail tolerance must be > 0, got {tol}"
        )));
    }
    let mut achieved = f64::INFINITY;
    for n in 1..=cap {
        let q = ratio(n + 1);
        if q < 1.0 {
            achieved = term(n + 1) / (1.0 - q);
            if achieved <= tol {
                return Ok(n);
            }
        }
    }
    Err(Error::Truncation {
        requested: tol,
        achieved,
    })
}

/// Truncation for the logarithmic series: terms b^n/n (basis-bounded by 1).
pub fn example1_truncation(b_max: f64, tol: f64, cap: usize) -> Result<usize> {
    adaptive_truncation(
        tol,
        cap,
        |n| b_max.powi(n as i32) / n as f64,
        |_| b_max,
    )
}

/// Truncation for the quadratic series at |cos ϑ| <= y_max: arcsin-series
/// terms with the coefficient scales of B_1 and B_2 at lag 0.
pub fn example2_truncation(
    b1_scale: f64,
    b2_scale: f64,
    y_max: f64,
    tol: f64,
    cap: usize,
) -> Result<usize> {
    if y_max >= 1.0 {
        return Err(Error::Truncation {
            requested: tol,
            achieved: f64::INFINITY,
        });
    }
    // a_k ~ arcsin coefficients at y^{2k+1}, w_k ~ arcsin² at y^{2k}; both
    // coefficient sequences are <= 1 and decreasing, so a crude per-degree
    // bound (b1 + π b2 + b2) y^n suffices.
    let scale = b1_scale + PI * b2_scale + b2_scale;
    adaptive_truncation(tol, cap, |n| scale * y_max.powi(n as i32), |_| y_max)
}

/// Truncation for the exponential-in-geodesic series at |cos ϑ| <= y_max.
pub fn example3_truncation(b_max: f64, y_max: f64, tol: f64, cap: usize) -> Result<usize> {
    if y_max >= 1.0 {
        return Err(Error::Truncation {
            requested: tol,
            achieved: f64::INFINITY,
        });
    }
    // c_{n+2} <= c_n once n >= b, so past that point consecutive even/odd
    // pairs dominate their successors and the tail is geometric in y².
    adaptive_truncation(
        tol,
        cap,
        |n| {
            if (n as f64) < b_max {
                return f64::INFINITY;
            }
            let pair = exp_arcsin_coefficient(b_max, n) + exp_arcsin_coefficient(b_max, n + 1);
            pair * y_max.powi(n as i32) / (1.0 - y_max)
        },
        |_| y_max * y_max,
    )
}

/// Truncation for the generating-function series on S^d: terms
/// b^n P_n^{((d-1)/2)}(1), ratio b (n + d - 1) / (n + 1).
pub fn example4_truncation(b_max: f64, d: usize, tol: f64, cap: usize) -> Result<usize> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "the generating-function series needs d >= 2, got {d}"
        )));
    }
    let two_lambda = d as f64 - 1.0;
    adaptive_truncation(
        tol,
        cap,
        |n| {
            crate::gegenbauer::gegenbauer_at_one(two_lambda / 2.0, n)
                .map(|p| b_max.powi(n as i32) * p)
                .unwrap_or(f64::INFINITY)
        },
        |n| b_max * (n as f64 + two_lambda) / (n as f64 + 1.0),
    )
}

/// Truncation for the exponential-cosine series: terms b^n/n!.
pub fn example5_truncation(b_max: f64, tol: f64, cap: usize) -> Result<usize> {
    let mut inv_fact = vec![1.0f64; cap + 2];
    for n in 1..=cap + 1 {
        inv_fact[n] = inv_fact[n - 1] / n as f64;
    }
    adaptive_truncation(
        tol,
        cap,
        |n| b_max.powi(n as i32) * inv_fact[n],
        |n| b_max / (n as f64 + 1.0),
    )
}
