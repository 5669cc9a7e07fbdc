//! Driving the verification machinery from code: build a model, pick
//! checks, and get a structured report with per-item residuals and
//! thresholds.
//!
//! Run with `cargo run --release --example verification_report`.

use stfields::cli::{
    run_verify, CheckKind, ExtractionParams, McParams, ModelSpec, PsdParams, SeriesParams,
    TemporalSpec, VerifyConfig, CONFIG_SCHEMA_VERSION,
};

fn main() {
    let config = VerifyConfig {
        schema_version: CONFIG_SCHEMA_VERSION,
        model: ModelSpec::Example4 {
            base: TemporalSpec::Separable {
                family: stfields::temporal::CorrelationFamily::Exponential,
                tau: 1.0,
                coupling: vec![vec![0.5, 0.3], vec![0.3, 0.4]],
            },
            d: 2,
            n_max: 24,
            tail_tol: 1e-3,
        },
        seed: 99,
        checks: Some(vec![CheckKind::Psd, CheckKind::Series, CheckKind::Mc]),
        psd: PsdParams::default(),
        series: SeriesParams::default(),
        mc: McParams {
            replicates: 5_000,
            allowed_misses: 1,
        },
        extraction: ExtractionParams::default(),
    };

    let report = run_verify(&config).unwrap();
    println!("{report}");
    println!(
        "\n{} items, overall: {}",
        report.items.len(),
        if report.pass { "PASS" } else { "FAIL" }
    );
}
