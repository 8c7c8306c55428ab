//! Computational accuracy and issue density.
//!
//! Two-decimal reports are rounded half away from zero on the exact ratio,
//! using integer arithmetic, so `1/800` prints as `0.13`.

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsError {
    EmptyDataset,
    ZeroNloc,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricsError::EmptyDataset => "dataset has no tasks",
            MetricsError::ZeroNloc => "NLOC must be at least 1",
        })
    }
}

impl core::error::Error for MetricsError {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CAResult {
    pub passed: u64,
    pub total: u64,
    /// Percentage, `100 * passed / total`.
    pub ca: f64,
}

impl CAResult {
    pub fn formatted(&self) -> String {
        hundredths(10_000 * u128::from(self.passed), u128::from(self.total))
    }
}

impl fmt::Display for CAResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.formatted())
    }
}

pub fn computational_accuracy(passed: u64, total: u64) -> Result<CAResult, MetricsError> {
    if total == 0 {
        return Err(MetricsError::EmptyDataset);
    }
    let passed = passed.min(total);
    Ok(CAResult { passed, total, ca: 100.0 * passed as f64 / total as f64 })
}

/// CA over per-task verdicts.
pub fn computational_accuracy_of(verdicts: impl IntoIterator<Item = bool>) -> Result<CAResult, MetricsError> {
    let (mut passed, mut total) = (0u64, 0u64);
    for v in verdicts {
        total += 1;
        passed += u64::from(v);
    }
    computational_accuracy(passed, total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IssueDensity {
    pub issues: u64,
    pub nloc: u64,
    pub per_kloc: f64,
}

impl IssueDensity {
    pub fn formatted(&self) -> String {
        hundredths(100_000 * u128::from(self.issues), u128::from(self.nloc))
    }
}

impl fmt::Display for IssueDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.formatted())
    }
}

pub fn issue_density(issues: u64, nloc: u64) -> Result<IssueDensity, MetricsError> {
    if nloc == 0 {
        return Err(MetricsError::ZeroNloc);
    }
    Ok(IssueDensity { issues, nloc, per_kloc: 1000.0 * issues as f64 / nloc as f64 })
}

/// Formats `num / den` hundredths, rounded half up, as `<int>.<2 digits>`.
fn hundredths(num: u128, den: u128) -> String {
    let scaled = (2 * num + den) / (2 * den);
    alloc::format!("{}.{:02}", scaled / 100, scaled % 100)
}

/// Two-decimal rendering of a real, half away from zero.
pub fn format2(value: f64) -> String {
    if !value.is_finite() {
        return alloc::format!("{value}");
    }
    let scaled = libm::round(value * 100.0);
    let negative = scaled < 0.0;
    let abs = if negative { -scaled } else { scaled } as u128;
    let sign = if negative && abs != 0 { "-" } else { "" };
    alloc::format!("{sign}{}.{:02}", abs / 100, abs % 100)
}
