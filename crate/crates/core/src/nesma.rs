//! NESMA-style enhancement sizing: impact factor and maintenance points (PM).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ef::RequestOperation;
use crate::fpa::AttributeCounts;

/// Impact factor in percent: a multiple of 25 between 25 and 150.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct ImpactPercent(u32);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NesmaError {
    #[error("impact percent {0} is not one of 25, 50, 75, 100, 125, 150")]
    InvalidPercent(u32),
    #[error("original function has no attributes to compare the change against")]
    NoOriginalAttributes,
}

impl ImpactPercent {
    pub const MIN: ImpactPercent = ImpactPercent(25);
    pub const MAX: ImpactPercent = ImpactPercent(150);
    pub const FULL: ImpactPercent = ImpactPercent(100);

    pub fn new(pct: u32) -> Result<Self, NesmaError> {
        if pct.is_multiple_of(25) && (25..=150).contains(&pct) {
            Ok(ImpactPercent(pct))
        } else {
            Err(NesmaError::InvalidPercent(pct))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn factor(self) -> f64 {
        f64::from(self.0) / 100.0
    }
}

impl TryFrom<u32> for ImpactPercent {
    type Error = NesmaError;

    fn try_from(v: u32) -> Result<Self, Self::Error> {
        ImpactPercent::new(v)
    }
}

impl From<ImpactPercent> for u32 {
    fn from(p: ImpactPercent) -> u32 {
        p.0
    }
}

/// Number of 25% steps needed to cover `changed / original`, rounded up.
fn quarter_steps(changed: u32, original: u32) -> u64 {
    (4 * u64::from(changed)).div_ceil(u64::from(original))
}

/// Impact of a change relative to the original function.
///
/// The larger of the per-category ratios (files, fields) is rounded up to a
/// multiple of 25% and clamped to [25%, 150%].
pub fn impact_percent(original: AttributeCounts, changed: AttributeCounts) -> Result<ImpactPercent, NesmaError> {
    if original.files == 0 && original.det == 0 {
        return Err(NesmaError::NoOriginalAttributes);
    }
    let mut steps = 0;
    if original.det > 0 {
        steps = steps.max(quarter_steps(changed.det, original.det));
    }
    if original.files > 0 {
        steps = steps.max(quarter_steps(changed.files, original.files));
    }
    let steps = steps.clamp(1, 6) as u32;
    Ok(ImpactPercent(25 * steps))
}

/// Maintenance points of one request.
///
/// `fp` is the final size for inclusions and the original size otherwise.
/// Alterations need the original and changed attribute counts.
pub fn pm_of_request(
    op: RequestOperation,
    fp: u32,
    original: Option<AttributeCounts>,
    changed: Option<AttributeCounts>,
) -> Result<f64, NesmaError> {
    let pct = match op {
        RequestOperation::Include => ImpactPercent::FULL,
        RequestOperation::Exclude => ImpactPercent::MIN,
        RequestOperation::Alter => impact_percent(
            original.ok_or(NesmaError::NoOriginalAttributes)?,
            changed.unwrap_or_default(),
        )?,
    };
    Ok(pm_with_impact(fp, pct))
}

pub fn pm_with_impact(fp: u32, pct: ImpactPercent) -> f64 {
    f64::from(fp) * f64::from(pct.get()) / 100.0
}
