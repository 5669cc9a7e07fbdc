//! Verification: Monte Carlo covariance estimation with calibrated
//! tolerances, positive-definiteness audits of assembled space-time models,
//! quadrature checks of the addition-formula orthogonality, and
//! series-vs-closed-form comparisons.

use crate::covariance::SpaceTimeCovariance;
use crate::error::{Error, Result};
use crate::gegenbauer::{alpha, eval_gegenbauer, sphere_surface_area};
use crate::report::VerificationReport;
use crate::simulate::{
    extract_level_coefficients, CircleFieldRealization, FieldRealization,
};
use crate::sphere::{geodesic_distance, integrate_s2, SpherePoint, SphereQuadrature};
use crate::temporal::CoefficientSequence;
use nalgebra::{DMatrix, DVector};

/// Monte Carlo comparisons pass within K_SIGMA standard errors.
pub const K_SIGMA: f64 = 4.0;

/// Absolute floor under the Monte Carlo tolerance, so near-zero targets with
/// tiny standard errors do not produce vacuously strict thresholds.
pub const MC_FLOOR: f64 = 1e-6;

/// An entrywise Monte Carlo estimate of E[a b'] with its standard errors.
#[derive(Debug, Clone)]
pub struct EmpiricalCovariance {
    pub mean: DMatrix<f64>,
    pub stderr: DMatrix<f64>,
    pub replicates: usize,
}

/// Estimates E[a b'] from paired replicate draws; stderr is the per-entry
/// standard deviation of the product divided by sqrt(replicates).
pub fn empirical_pair(a: &[DVector<f64>], b: &[DVector<f64>]) -> Result<EmpiricalCovariance> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let reps = a.len();
    if reps < 2 {
        return Err(Error::InvalidParameter(
            "empirical covariance needs at least 2 replicates".into(),
        ));
    }
    let m = a[0].len();
    let mut sum = DMatrix::zeros(m, m);
    let mut sum_sq = DMatrix::zeros(m, m);
    for (za, zb) in a.iter().zip(b) {
        if za.len() != m || zb.len() != m {
            return Err(Error::DimensionMismatch(
                "replicates differ in vector dimension".into(),
            ));
        }
        let prod = za * zb.transpose();
        sum_sq += prod.map(|p| p * p);
        sum += prod;
    }
    let mean = sum / reps as f64;
    let var = sum_sq / reps as f64 - mean.map(|x| x * x);
    let stderr = var.map(|v| (v.max(0.0) / reps as f64).sqrt());
    Ok(EmpiricalCovariance {
        mean,
        stderr,
        replicates: reps,
    })
}

/// Cross-covariance estimate cov(Z(x_a; t_i), Z(x_b; t_j)) from a sphere
/// replicate ensemble.
pub fn empirical_covariance_sphere(
    fields: &[FieldRealization],
    site_a: usize,
    time_a: usize,
    site_b: usize,
    time_b: usize,
) -> Result<EmpiricalCovariance> {
    let a: Vec<DVector<f64>> = fields
        .iter()
        .map(|f| f.values[site_a][time_a].clone())
        .collect();
    let b: Vec<DVector<f64>> = fields
        .iter()
        .map(|f| f.values[site_b][time_b].clone())
        .collect();
    empirical_pair(&a, &b)
}

/// Cross-covariance estimate from a circle replicate ensemble.
pub fn empirical_covariance_circle(
    fields: &[CircleFieldRealization],
    site_a: usize,
    time_a: usize,
    site_b: usize,
    time_b: usize,
) -> Result<EmpiricalCovariance> {
    let a: Vec<DVector<f64>> = fields
        .iter()
        .map(|f| f.values[site_a][time_a].clone())
        .collect();
    let b: Vec<DVector<f64>> = fields
        .iter()
        .map(|f| f.values[site_b][time_b].clone())
        .collect();
    empirical_pair(&a, &b)
}

/// Adds per-entry items comparing an empirical estimate against its analytic
/// target, with threshold max(K_SIGMA · stderr, MC_FLOOR).
pub fn compare_empirical(
    report: &mut VerificationReport,
    label: &str,
    empirical: &EmpiricalCovariance,
    analytic: &DMatrix<f64>,
) {
    for i in 0..analytic.nrows() {
        for j in 0..analytic.ncols() {
            let residual = empirical.mean[(i, j)] - analytic[(i, j)];
            let threshold = (K_SIGMA * empirical.stderr[(i, j)]).max(MC_FLOOR);
            report.push_with_stderr(
                format!("{label}[{i},{j}]"),
                residual,
                threshold,
                Some(empirical.stderr[(i, j)]),
            );
        }
    }
}

/// Pairwise geodesic angles ϑ(x_a, x_b) for a site list.
pub fn pairwise_angles(sites: &[SpherePoint]) -> Result<DMatrix<f64>> {
    let n = sites.len();
    let mut angles = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in (a + 1)..n {
            let theta = geodesic_distance(&sites[a], &sites[b])?;
            angles[(a, b)] = theta;
            angles[(b, a)] = theta;
        }
    }
    Ok(angles)
}

/// Pairwise circular angles |ϑ_a - ϑ_b| wrapped into [0, π].
pub fn pairwise_circle_angles(angles: &[f64]) -> DMatrix<f64> {
    let n = angles.len();
    DMatrix::from_fn(n, n, |a, b| {
        let mut diff = (angles[a] - angles[b]).abs() % (2.0 * std::f64::consts::PI);
        if diff > std::f64::consts::PI {
            diff = 2.0 * std::f64::consts::PI - diff;
        }
        diff
    })
}

/// Audits the full space-time Gram matrix G[(a,i),(b,j)] = C(ϑ_ab; t_i - t_j)
/// over the given pairwise-angle matrix and time grid: minimum eigenvalue
/// (relative to trace) and the Gram symmetry residual, which together sample
/// the positive definiteness and the C(ϑ; -t) = C(ϑ; t)' identity.
pub fn gram_psd_check(
    model: &SpaceTimeCovariance,
    angles: &DMatrix<f64>,
    times: &[f64],
    tol_rel: f64,
) -> Result<VerificationReport> {
    if !angles.is_square() {
        return Err(Error::DimensionMismatch(
            "pairwise angle matrix must be square".into(),
        ));
    }
    if times.is_empty() {
        return Err(Error::InvalidParameter("time grid must be nonempty".into()));
    }
    let asym = (angles - angles.transpose()).amax();
    if asym > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "pairwise angle matrix must be symmetric (residual {asym:e})"
        )));
    }
    let n_sites = angles.nrows();
    let m = model.m();
    let dim_total = n_sites * times.len() * m;
    let mut gram = DMatrix::zeros(dim_total, dim_total);
    for a in 0..n_sites {
        for b in 0..n_sites {
            for (i, &ti) in times.iter().enumerate() {
                for (j, &tj) in times.iter().enumerate() {
                    let block = model.eval(angles[(a, b)], ti - tj)?;
                    gram.view_mut(
                        ((a * times.len() + i) * m, (b * times.len() + j) * m),
                        (m, m),
                    )
                    .copy_from(&block);
                }
            }
        }
    }
    let mut report = VerificationReport::new("space_time_gram");
    let sym_residual = (&gram - gram.transpose()).amax();
    report.push(
        "gram_symmetry_residual",
        sym_residual,
        1e-10 * gram.amax().max(1.0),
    );
    let sym = (&gram + gram.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let trace = gram.trace().abs().max(1.0);
    report.push(
        "gram_min_eigenvalue_deficit",
        (-min_eig).max(0.0),
        tol_rel * trace,
    );
    report.set_metadata("gram_min_eigenvalue", min_eig);
    report.set_metadata("gram_dimension", dim_total);
    Ok(report)
}

/// A site/time index pair whose empirical cross-covariance is compared
/// against the analytic model.
#[derive(Debug, Clone, Copy)]
pub struct McDesignPoint {
    pub site_a: usize,
    pub time_a: usize,
    pub site_b: usize,
    pub time_b: usize,
    /// Geodesic angle between the two sites.
    pub theta: f64,
    /// Time lag t_a - t_b.
    pub lag: f64,
}

/// Field ensembles the Monte Carlo comparison can read values from.
pub trait FieldValues {
    fn field_value(&self, site: usize, time: usize) -> &DVector<f64>;
}

impl FieldValues for FieldRealization {
    fn field_value(&self, site: usize, time: usize) -> &DVector<f64> {
        &self.values[site][time]
    }
}

impl FieldValues for CircleFieldRealization {
    fn field_value(&self, site: usize, time: usize) -> &DVector<f64> {
        &self.values[site][time]
    }
}

/// Monte Carlo covariance check over a design: per matrix entry, counts the
/// design points whose empirical estimate strays beyond K_SIGMA standard
/// errors of the analytic value, and allows at most `allowed_misses` (a
/// multiple-comparison allowance: at 4σ a rare marginal miss is expected).
/// Per-point diagnostics land in the report metadata.
pub fn mc_covariance_check<F: FieldValues>(
    model: &SpaceTimeCovariance,
    fields: &[F],
    design: &[McDesignPoint],
    allowed_misses: usize,
) -> Result<VerificationReport> {
    if design.is_empty() {
        return Err(Error::InvalidParameter("empty Monte Carlo design".into()));
    }
    let m = model.m();
    let mut report = VerificationReport::new("mc_covariance");
    let mut misses = vec![0usize; m * m];
    let mut details = Vec::new();
    for point in design {
        let a: Vec<DVector<f64>> = fields
            .iter()
            .map(|f| f.field_value(point.site_a, point.time_a).clone())
            .collect();
        let b: Vec<DVector<f64>> = fields
            .iter()
            .map(|f| f.field_value(point.site_b, point.time_b).clone())
            .collect();
        let emp = empirical_pair(&a, &b)?;
        let analytic = model.eval(point.theta, point.lag)?;
        for i in 0..m {
            for j in 0..m {
                let residual = emp.mean[(i, j)] - analytic[(i, j)];
                let threshold = (K_SIGMA * emp.stderr[(i, j)]).max(MC_FLOOR);
                let ok = residual.abs() <= threshold;
                if !ok {
                    misses[i * m + j] += 1;
                }
                details.push(serde_json::json!({
                    "theta": point.theta,
                    "lag": point.lag,
                    "entry": [i, j],
                    "residual": residual,
                    "threshold": threshold,
                    "stderr": emp.stderr[(i, j)],
                    "pass": ok,
                }));
            }
        }
    }
    for i in 0..m {
        for j in 0..m {
            report.push(
                format!("entry[{i},{j}]_points_outside_{K_SIGMA}sigma"),
                misses[i * m + j] as f64,
                allowed_misses as f64,
            );
        }
    }
    report.set_metadata("design_points", design.len());
    report.set_metadata("replicates", fields.len());
    report.set_metadata("points", details);
    Ok(report)
}

/// Cross-level orthogonality and mean-zero check: the level draws V_n of a
/// sphere ensemble have mean 0 and cov(V_i(t), V_j(s)) = 0 for i != j,
/// within K_SIGMA standard errors.
pub fn level_orthogonality_check(fields: &[FieldRealization]) -> Result<VerificationReport> {
    if fields.len() < 2 {
        return Err(Error::InvalidParameter(
            "orthogonality check needs replicates".into(),
        ));
    }
    let n_levels = fields[0].level_draws.len();
    let n_times = fields[0].times.len();
    let reps = fields.len();
    let m = fields[0].m();
    let mut report = VerificationReport::new("level_orthogonality");
    // Means.
    for n in 0..n_levels {
        let mut mean = DVector::zeros(m);
        let mut sq = DVector::zeros(m);
        for f in fields {
            mean += &f.level_draws[n][0];
            sq += f.level_draws[n][0].map(|v| v * v);
        }
        mean /= reps as f64;
        sq /= reps as f64;
        let stderr = (&sq - mean.map(|v| v * v)).map(|v| (v.max(0.0) / reps as f64).sqrt());
        for c in 0..m {
            report.push_with_stderr(
                format!("mean_level{n}[{c}]"),
                mean[c],
                (K_SIGMA * stderr[c]).max(MC_FLOOR),
                Some(stderr[c]),
            );
        }
    }
    // Cross-level covariances at the first two time indices (or (0,0)).
    let tj = if n_times > 1 { 1 } else { 0 };
    for i in 0..n_levels {
        for j in (i + 1)..n_levels {
            let a: Vec<DVector<f64>> = fields.iter().map(|f| f.level_draws[i][0].clone()).collect();
            let b: Vec<DVector<f64>> = fields.iter().map(|f| f.level_draws[j][tj].clone()).collect();
            let emp = empirical_pair(&a, &b)?;
            let zero = DMatrix::zeros(m, m);
            compare_empirical(&mut report, &format!("cross_level({i},{j})"), &emp, &zero);
        }
    }
    Ok(report)
}

/// Checks the addition-formula orthogonality on S^2 by quadrature:
/// ∫ P_i(x1'z) P_j(x2'z) dz = δ_ij (ω_2 / α_i²) P_i(x1'x2)
/// for all i, j <= degree_max, with separate diagonal and off-diagonal
/// tolerances.
pub fn funk_hecke_check(
    x1: &SpherePoint,
    x2: &SpherePoint,
    degree_max: usize,
    quad: &SphereQuadrature,
    diag_tol: f64,
    offdiag_tol: f64,
) -> Result<VerificationReport> {
    if x1.sphere_dim() != 2 || x2.sphere_dim() != 2 {
        return Err(Error::InvalidParameter(
            "the quadrature orthogonality check runs on S^2".into(),
        ));
    }
    if quad.exactness_degree() < 2 * degree_max {
        return Err(Error::InvalidParameter(format!(
            "quadrature exact to degree {} cannot integrate degree {}",
            quad.exactness_degree(),
            2 * degree_max
        )));
    }
    let lambda = 0.5;
    let omega = sphere_surface_area(2)?;
    let mut report = VerificationReport::new("funk_hecke_orthogonality");
    for i in 0..=degree_max {
        for j in 0..=degree_max {
            let value = integrate_s2(
                |z| {
                    let pi = eval_gegenbauer(lambda, i, x1.dot(z).expect("matched dims"))
                        .expect("valid basis argument");
                    let pj = eval_gegenbauer(lambda, j, x2.dot(z).expect("matched dims"))
                        .expect("valid basis argument");
                    pi * pj
                },
                quad,
            )?;
            let (expected, tol) = if i == j {
                (
                    omega / alpha(2, i)?.powi(2) * eval_gegenbauer(lambda, i, x1.dot(x2)?)?,
                    diag_tol,
                )
            } else {
                (0.0, offdiag_tol)
            };
            report.push(format!("pair({i},{j})"), value - expected, tol);
        }
    }
    Ok(report)
}

/// Compares series and closed-form evaluations over a (ϑ, t) grid,
/// entrywise in Frobenius norm per grid point.
pub fn series_vs_closed_form(
    model: &SpaceTimeCovariance,
    thetas: &[f64],
    times: &[f64],
    tol: f64,
) -> Result<VerificationReport> {
    if model.closed_form().is_none() {
        return Err(Error::InvalidModel(
            "model has no closed form to compare against".into(),
        ));
    }
    let mut report = VerificationReport::new("series_vs_closed_form");
    for &theta in thetas {
        for &t in times {
            let series = model.eval(theta, t)?;
            let closed = model.eval_closed_form(theta, t)?;
            report.push(
                format!("theta={theta:.6},t={t:.6}"),
                (series - closed).amax(),
                tol,
            );
        }
    }
    Ok(report)
}

/// Checks the Funk-Hecke coefficient extraction against the level draws the
/// simulator actually used: the realization must have been sampled on the
/// quadrature nodes.
pub fn extraction_roundtrip_check(
    field: &FieldRealization,
    coeffs: &CoefficientSequence,
    quad: &SphereQuadrature,
    tol: f64,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("extraction_roundtrip");
    for n in 0..=coeffs.truncation() {
        let recovered = extract_level_coefficients(field, coeffs.truncation(), n, quad)?;
        let mut residual = 0.0f64;
        for (rec, truth) in recovered.iter().zip(&field.level_draws[n]) {
            residual = residual.max((rec - truth).amax());
        }
        report.push(format!("level_{n}"), residual, tol);
    }
    Ok(report)
}
