//! Stationary m×m matrix-valued temporal covariance models B(t) — the
//! per-level coefficients of every series — and their algebra.
//!
//! A valid model satisfies B(-t) = B(t)' for all t (it need not be
//! symmetric: see the moving-average family) and has positive semidefinite
//! block Gram matrices [B(t_i - t_j)] over every finite time grid.

use crate::error::{Error, Result};
use crate::gegenbauer::gegenbauer_at_one;
use crate::report::VerificationReport;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Relative PSD tolerance: a block Gram matrix passes when its minimum
/// eigenvalue is >= -PSD_TOL_REL * trace. Absolute thresholds fail across
/// scales.
pub const PSD_TOL_REL: f64 = 1e-8;

/// Time domain of a temporal model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDomain {
    /// T = Z; evaluation rejects non-integer lags rather than rounding.
    Discrete,
    /// T = R.
    Continuous,
}

/// Named scalar stationary correlation families for separable models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationFamily {
    /// exp(-|t|/τ)
    Exponential,
    /// exp(-(t/τ)^2)
    Gaussian,
    /// exp(-|t|/τ) cos(t/τ)
    CosineDamped,
}

impl CorrelationFamily {
    pub fn eval(&self, t: f64, tau: f64) -> f64 {
        match self {
            CorrelationFamily::Exponential => (-t.abs() / tau).exp(),
            CorrelationFamily::Gaussian => (-(t / tau) * (t / tau)).exp(),
            CorrelationFamily::CosineDamped => (-t.abs() / tau).exp() * (t / tau).cos(),
        }
    }
}

#[derive(Debug, Clone)]
enum Kernel {
    /// B(t) = ρ(t) · A with A symmetric PSD.
    Separable {
        family: CorrelationFamily,
        tau: f64,
        coupling: DMatrix<f64>,
    },
    /// First-order moving average on T = Z.
    Ma1 {
        at_zero: DMatrix<f64>,
        at_plus_one: DMatrix<f64>,
        at_minus_one: DMatrix<f64>,
    },
    /// Entrywise p-th power of the base, scaled by a t-independent factor.
    HadamardPower {
        base: Box<TemporalCovariance>,
        power: u32,
        scale: f64,
    },
    /// B(t) ≡ M for a constant symmetric PSD matrix M.
    Constant { matrix: DMatrix<f64> },
    /// Finite linear combination Σ c_k B_k(t).
    LinearCombination { terms: Vec<(f64, TemporalCovariance)> },
    /// Entrywise e^{-π b} c_level(b) with c_n the Taylor coefficients of
    /// exp(b arcsin x); the cos-power coefficient of the
    /// exponential-in-geodesic family.
    ExpArcsinLevel {
        base: Box<TemporalCovariance>,
        level: usize,
    },
}

/// Taylor coefficient c_n of exp(b arcsin x) = Σ c_n(b) x^n:
/// c_0 = 1, c_1 = b, c_{n+2} = (b² + n²) c_n / ((n+1)(n+2)).
pub fn exp_arcsin_coefficient(b: f64, n: usize) -> f64 {
    let mut even = 1.0; // c_0
    let mut odd = b; // c_1
    if n == 0 {
        return even;
    }
    for k in 0..(n - 1) {
        let kf = k as f64;
        let next = (b * b + kf * kf) * if k % 2 == 0 { even } else { odd }
            / ((kf + 1.0) * (kf + 2.0));
        if k % 2 == 0 {
            even = next;
        } else {
            odd = next;
        }
    }
    if n % 2 == 0 {
        even
    } else {
        odd
    }
}

/// A stationary m×m matrix-valued covariance function on T.
#[derive(Debug, Clone)]
pub struct TemporalCovariance {
    m: usize,
    domain: TimeDomain,
    kernel: Kernel,
    descriptor: String,
}

fn min_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    let s = (sym + sym.transpose()) * 0.5;
    s.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

fn check_symmetric_psd(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidModel(format!("{what} must be square")));
    }
    let asym = (a - a.transpose()).amax();
    if asym > 1e-10 * (1.0 + a.amax()) {
        return Err(Error::InvalidModel(format!(
            "{what} is not symmetric (residual {asym:e})"
        )));
    }
    let min_eig = min_eigenvalue(a);
    if min_eig < -1e-10 * a.trace().abs().max(1.0) {
        return Err(Error::InvalidModel(format!(
            "{what} is not PSD (min eigenvalue {min_eig:e})"
        )));
    }
    Ok(())
}

/// B(t) = ρ(t) · A: a scalar stationary correlation times a symmetric PSD
/// coupling matrix. The standard product construction for valid inputs.
pub fn separable_model(
    family: CorrelationFamily,
    tau: f64,
    coupling: DMatrix<f64>,
) -> Result<TemporalCovariance> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be > 0, got {tau}")));
    }
    check_symmetric_psd(&coupling, "separable coupling matrix")?;
    let m = coupling.nrows();
    let descriptor = format!("separable({family:?}, tau={tau}, m={m})");
    Ok(TemporalCovariance {
        m,
        domain: TimeDomain::Continuous,
        kernel: Kernel::Separable { family, tau, coupling },
        descriptor,
    })
}

/// The covariance matrix function of an m-variate first-order moving
/// average time series Z(t) = ε(t) + Φ ε(t-1):
/// B(0) = Σ + ΦΣΦ', B(1) = ΣΦ', B(-1) = ΦΣ, B(t) = 0 for |t| >= 2.
pub fn ma1_model(sigma: DMatrix<f64>, phi: DMatrix<f64>) -> Result<TemporalCovariance> {
    check_symmetric_psd(&sigma, "MA(1) innovation variance")?;
    if phi.nrows() != sigma.nrows() || phi.ncols() != sigma.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "Sigma is {}x{} but Phi is {}x{}",
            sigma.nrows(),
            sigma.ncols(),
            phi.nrows(),
            phi.ncols()
        )));
    }
    let m = sigma.nrows();
    let at_zero = &sigma + &phi * &sigma * phi.transpose();
    let at_plus_one = &sigma * phi.transpose();
    let at_minus_one = &phi * &sigma;
    Ok(TemporalCovariance {
        m,
        domain: TimeDomain::Discrete,
        kernel: Kernel::Ma1 {
            at_zero,
            at_plus_one,
            at_minus_one,
        },
        descriptor: format!("ma1(m={m})"),
    })
}

/// Entrywise p-th power scaled by a t-independent positive factor:
/// entries b_ij(t)^p · scale. Schur's product theorem keeps it valid.
pub fn hadamard_power_model(
    base: TemporalCovariance,
    power: u32,
    scale: f64,
) -> Result<TemporalCovariance> {
    if power < 1 {
        return Err(Error::InvalidParameter("Hadamard power must be >= 1".into()));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Hadamard scale must be positive and finite, got {scale}"
        )));
    }
    let m = base.m;
    let domain = base.domain;
    let descriptor = format!("hadamard(p={power}, scale={scale}, base={})", base.descriptor);
    Ok(TemporalCovariance {
        m,
        domain,
        kernel: Kernel::HadamardPower {
            base: Box::new(base),
            power,
            scale,
        },
        descriptor,
    })
}

/// B(t) ≡ M for a constant symmetric PSD matrix; covers the all-ones level-0
/// coefficient of the closed-form model families.
pub fn constant_model(matrix: DMatrix<f64>, domain: TimeDomain) -> Result<TemporalCovariance> {
    check_symmetric_psd(&matrix, "constant model matrix")?;
    let m = matrix.nrows();
    Ok(TemporalCovariance {
        m,
        domain,
        kernel: Kernel::Constant { matrix },
        descriptor: format!("constant(m={m})"),
    })
}

/// The m×m all-ones constant model (rank-1 PSD).
pub fn all_ones_model(m: usize, domain: TimeDomain) -> Result<TemporalCovariance> {
    constant_model(DMatrix::from_element(m, m, 1.0), domain)
}

/// The m×m zero model.
pub fn zero_model(m: usize, domain: TimeDomain) -> Result<TemporalCovariance> {
    constant_model(DMatrix::zeros(m, m), domain)
}

/// Σ c_k B_k(t) over matching dimensions and domains. Used by the
/// infinite-dimensional coefficient algebra; validity of the combination is
/// the caller's obligation and is checked numerically downstream.
pub fn linear_combination(terms: Vec<(f64, TemporalCovariance)>) -> Result<TemporalCovariance> {
    let Some((_, first)) = terms.first() else {
        return Err(Error::InvalidParameter(
            "linear combination needs at least one term".into(),
        ));
    };
    let m = first.m;
    let domain = first.domain;
    for (_, model) in &terms {
        if model.m != m {
            return Err(Error::DimensionMismatch(
                "linear combination mixes matrix dimensions".into(),
            ));
        }
        if model.domain != domain {
            return Err(Error::InvalidModel(
                "linear combination mixes discrete and continuous domains".into(),
            ));
        }
    }
    Ok(TemporalCovariance {
        m,
        domain,
        descriptor: format!("linear_combination({} terms, m={m})", terms.len()),
        kernel: Kernel::LinearCombination { terms },
    })
}

/// Level-n coefficient of the exponential-in-geodesic family: entrywise
/// e^{-π b(t)} c_n(b(t)) with c_n from [`exp_arcsin_coefficient`].
pub fn exp_arcsin_level_model(base: TemporalCovariance, level: usize) -> TemporalCovariance {
    let m = base.m;
    let domain = base.domain;
    let descriptor = format!("exp_arcsin(level={level}, base={})", base.descriptor);
    TemporalCovariance {
        m,
        domain,
        kernel: Kernel::ExpArcsinLevel {
            base: Box::new(base),
            level,
        },
        descriptor,
    }
}

impl TemporalCovariance {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// Evaluates B(t). Discrete-domain models reject non-integer t.
    pub fn eval(&self, t: f64) -> Result<DMatrix<f64>> {
        if self.domain == TimeDomain::Discrete && t.fract() != 0.0 {
            return Err(Error::Domain(format!(
                "discrete-domain model evaluated at non-integer lag {t}"
            )));
        }
        Ok(match &self.kernel {
            Kernel::Separable { family, tau, coupling } => coupling * family.eval(t, *tau),
            Kernel::Ma1 {
                at_zero,
                at_plus_one,
                at_minus_one,
            } => {
                if t == 0.0 {
                    at_zero.clone()
                } else if t == 1.0 {
                    at_plus_one.clone()
                } else if t == -1.0 {
                    at_minus_one.clone()
                } else {
                    DMatrix::zeros(self.m, self.m)
                }
            }
            Kernel::HadamardPower { base, power, scale } => {
                base.eval(t)?.map(|b| b.powi(*power as i32) * scale)
            }
            Kernel::Constant { matrix } => matrix.clone(),
            Kernel::LinearCombination { terms } => {
                let mut acc = DMatrix::zeros(self.m, self.m);
                for (c, model) in terms {
                    acc += model.eval(t)? * *c;
                }
                acc
            }
            Kernel::ExpArcsinLevel { base, level } => base
                .eval(t)?
                .map(|b| (-std::f64::consts::PI * b).exp() * exp_arcsin_coefficient(b, *level)),
        })
    }

    /// True when max |b_ij(t)| over the grid stays strictly below 1.
    pub fn entries_bounded_below_one(&self, grid: &[f64]) -> Result<bool> {
        let mut max_abs = 0.0f64;
        for &t in grid {
            max_abs = max_abs.max(self.eval(t)?.amax());
        }
        Ok(max_abs < 1.0 - 1e-9)
    }

    /// Block Gram matrix [B(t_i - t_j)]_{i,j} over the grid.
    pub fn block_gram(&self, grid: &[f64]) -> Result<DMatrix<f64>> {
        let n = grid.len();
        let mut gram = DMatrix::zeros(n * self.m, n * self.m);
        for (i, &ti) in grid.iter().enumerate() {
            for (j, &tj) in grid.iter().enumerate() {
                let block = self.eval(ti - tj)?;
                gram.view_mut((i * self.m, j * self.m), (self.m, self.m))
                    .copy_from(&block);
            }
        }
        Ok(gram)
    }
}

/// Audits a model on a finite grid: minimum eigenvalue of the block Gram
/// matrix (relative to its trace) and the maximum symmetry residual
/// ‖B(-t) - B(t)'‖.
pub fn check_stationary_covariance(
    model: &TemporalCovariance,
    grid: &[f64],
    tol_rel: f64,
) -> Result<VerificationReport> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("time grid must be nonempty".into()));
    }
    let mut report = VerificationReport::new(format!("stationary_covariance[{}]", model.descriptor));
    let gram = model.block_gram(grid)?;
    let trace = gram.trace().abs().max(1.0);
    let min_eig = min_eigenvalue(&gram);
    report.push(
        "gram_min_eigenvalue_deficit",
        (-min_eig).max(0.0),
        tol_rel * trace,
    );
    report.set_metadata("gram_min_eigenvalue", min_eig);

    let mut sym_residual = 0.0f64;
    let scale = model.eval(0.0)?.amax().max(1.0);
    for &t in grid {
        let fwd = model.eval(t)?;
        let bwd = model.eval(-t)?;
        sym_residual = sym_residual.max((bwd - fwd.transpose()).amax());
    }
    report.push("symmetry_residual", sym_residual, 1e-12 * scale);
    Ok(report)
}

/// The default audit grid: lags 0..=8 (and their negatives via the Gram
/// structure).
pub fn default_check_grid() -> Vec<f64> {
    (0..=8).map(|k| k as f64).collect()
}

/// Sphere dimension selector for coefficient sequences and covariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// The unit circle S^1: cos(nϑ) basis.
    Circle,
    /// S^d with d >= 2: Gegenbauer basis with λ = (d-1)/2.
    Sphere(usize),
    /// S^∞: cos^n(ϑ) basis.
    Infinite,
}

impl Dimension {
    pub fn sphere(d: usize) -> Result<Self> {
        match d {
            0 => Err(Error::InvalidParameter("sphere dimension must be >= 1".into())),
            1 => Ok(Dimension::Circle),
            d => Ok(Dimension::Sphere(d)),
        }
    }

    /// Basis weight w_n at x = 1: P_n^{((d-1)/2)}(1) for d >= 2, else 1.
    pub fn basis_weight_at_one(&self, n: usize) -> Result<f64> {
        match self {
            Dimension::Circle | Dimension::Infinite => Ok(1.0),
            Dimension::Sphere(d) => gegenbauer_at_one((*d as f64 - 1.0) / 2.0, n),
        }
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dimension::Circle => write!(f, "1"),
            Dimension::Sphere(d) => write!(f, "{d}"),
            Dimension::Infinite => write!(f, "inf"),
        }
    }
}

/// A truncated coefficient sequence {B_n}_{n=0..=N} for one sphere
/// dimension. All levels share m and time domain; the last retained term
/// ‖B_N(0)‖ · w_N must fall below the configured tail tolerance (the
/// truncation proxy for the series convergence condition).
#[derive(Debug, Clone)]
pub struct CoefficientSequence {
    dim: Dimension,
    models: Vec<TemporalCovariance>,
    tail_bound: f64,
}

impl CoefficientSequence {
    pub fn new(dim: Dimension, models: Vec<TemporalCovariance>, tail_tol: f64) -> Result<Self> {
        let Some(first) = models.first() else {
            return Err(Error::InvalidParameter(
                "coefficient sequence needs at least one level".into(),
            ));
        };
        let (m, domain) = (first.m(), first.domain());
        for model in &models {
            if model.m() != m || model.domain() != domain {
                return Err(Error::InvalidModel(
                    "all coefficient levels must share m and time domain".into(),
                ));
            }
        }
        let top = models.len() - 1;
        let tail_bound = if top == 0 {
            0.0
        } else {
            models[top].eval(0.0)?.norm() * dim.basis_weight_at_one(top)?
        };
        if tail_bound > tail_tol {
            return Err(Error::Truncation {
                requested: tail_tol,
                achieved: tail_bound,
            });
        }
        Ok(Self {
            dim,
            models,
            tail_bound,
        })
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn m(&self) -> usize {
        self.models[0].m()
    }

    pub fn domain(&self) -> TimeDomain {
        self.models[0].domain()
    }

    /// Truncation level N (the sequence holds levels 0..=N).
    pub fn truncation(&self) -> usize {
        self.models.len() - 1
    }

    pub fn levels(&self) -> &[TemporalCovariance] {
        &self.models
    }

    pub fn level(&self, n: usize) -> Option<&TemporalCovariance> {
        self.models.get(n)
    }

    /// Magnitude of the last retained term: ‖B_N(0)‖ · w_N.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }
}
