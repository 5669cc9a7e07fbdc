//! Structured pass/fail diagnostics shared by the validity checkers and the
//! verification suite.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// One checked quantity: a residual against its threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportItem {
    pub label: String,
    pub residual: f64,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub pass: bool,
}

/// A named bundle of checks. `pass` holds iff every item is within its
/// threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    pub items: Vec<ReportItem>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl VerificationReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            items: Vec::new(),
            pass: true,
            metadata: BTreeMap::new(),
        }
    }

    /// Records a residual check; the item passes iff |residual| <= threshold.
    pub fn push(&mut self, label: impl Into<String>, residual: f64, threshold: f64) {
        self.push_with_stderr(label, residual, threshold, None);
    }

    pub fn push_with_stderr(
        &mut self,
        label: impl Into<String>,
        residual: f64,
        threshold: f64,
        stderr: Option<f64>,
    ) {
        let pass = residual.is_finite() && residual.abs() <= threshold;
        self.pass &= pass;
        self.items.push(ReportItem {
            label: label.into(),
            residual,
            threshold,
            stderr,
            pass,
        });
    }

    pub fn set_metadata(&mut self, key: impl Into<String>, value: impl Serialize) {
        if let Ok(v) = serde_json::to_value(value) {
            self.metadata.insert(key.into(), v);
        }
    }

    /// Folds another report in as a sub-section.
    pub fn absorb(&mut self, other: VerificationReport) {
        for item in other.items {
            self.pass &= item.pass;
            self.items.push(ReportItem {
                label: format!("{}/{}", other.name, item.label),
                ..item
            });
        }
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "[{}] {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name
        )?;
        for item in &self.items {
            let stderr = item
                .stderr
                .map(|s| format!(" stderr={s:.3e}"))
                .unwrap_or_default();
            writeln!(
                f,
                "  [{}] {:<48} residual={:.3e} threshold={:.3e}{}",
                if item.pass { "ok" } else { "FAIL" },
                item.label,
                item.residual,
                item.threshold,
                stderr
            )?;
        }
        Ok(())
    }
}
