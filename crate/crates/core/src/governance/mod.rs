//! EF-based governance indicators per system and period.
//!
//! A system's function inventory is replayed from its request log: an
//! inclusion adds a function, an alteration replaces its final attributes and
//! an exclusion removes it. Indicators whose denominator is zero are left
//! undefined rather than reported as 0.

pub mod chart;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ef::{ef_of_function, ef_of_request, CoefficientSet, EfError, RequestOperation};
use crate::fpa::{AttributeCounts, FunctionType};

pub use chart::{render_chart, ChartError, ChartLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndicatorKind {
    FunctionalSize,
    Production,
    ReworkProduction,
    Productivity,
    ErrorDensity,
    DeliverySpeed,
    BenefitDensity,
}

impl IndicatorKind {
    pub const ALL: [IndicatorKind; 7] = [
        IndicatorKind::FunctionalSize,
        IndicatorKind::Production,
        IndicatorKind::ReworkProduction,
        IndicatorKind::Productivity,
        IndicatorKind::ErrorDensity,
        IndicatorKind::DeliverySpeed,
        IndicatorKind::BenefitDensity,
    ];

    pub fn unit(self) -> &'static str {
        match self {
            IndicatorKind::FunctionalSize | IndicatorKind::Production | IndicatorKind::ReworkProduction => "EF",
            IndicatorKind::Productivity => "EF/man-hour",
            IndicatorKind::ErrorDensity => "failures/EF",
            IndicatorKind::DeliverySpeed => "EF/hour",
            IndicatorKind::BenefitDensity => "$/EF",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            IndicatorKind::FunctionalSize => "Functional size",
            IndicatorKind::Production => "Production",
            IndicatorKind::ReworkProduction => "Rework",
            IndicatorKind::Productivity => "Productivity",
            IndicatorKind::ErrorDensity => "Error density",
            IndicatorKind::DeliverySpeed => "Delivery speed",
            IndicatorKind::BenefitDensity => "Benefit density",
        }
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorValue {
    pub kind: IndicatorKind,
    /// `None` when the indicator's denominator is zero.
    pub value: Option<f64>,
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prev_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perspective: Option<String>,
}

impl IndicatorValue {
    pub fn new(kind: IndicatorKind, value: Option<f64>) -> Self {
        IndicatorValue {
            kind,
            value,
            unit: kind.unit().to_string(),
            prev_value: None,
            target: None,
            benchmark: None,
            perspective: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRequest {
    pub function_id: String,
    pub ftype: FunctionType,
    pub op: RequestOperation,
    /// Attributes of the function after the request (for an exclusion, of
    /// the function being removed).
    #[serde(rename = "final")]
    pub final_attrs: AttributeCounts,
    /// Attributes touched by an alteration.
    #[serde(default, rename = "operation", skip_serializing_if = "Option::is_none")]
    pub op_attrs: Option<AttributeCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodLog {
    pub period: String,
    #[serde(default)]
    pub requests: Vec<PeriodRequest>,
    pub effort_mh: f64,
    pub elapsed_hours: f64,
    #[serde(default)]
    pub failures: u32,
    #[serde(default)]
    pub expected_benefit: f64,
    #[serde(default)]
    pub targets: BTreeMap<IndicatorKind, f64>,
    #[serde(default)]
    pub benchmarks: BTreeMap<IndicatorKind, f64>,
    #[serde(default)]
    pub perspectives: BTreeMap<IndicatorKind, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionState {
    pub function_id: String,
    pub ftype: FunctionType,
    #[serde(flatten)]
    pub attrs: AttributeCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemHistory {
    pub system: String,
    /// Functions existing before the first logged period.
    #[serde(default)]
    pub baseline: Vec<FunctionState>,
    pub periods: Vec<PeriodLog>,
}

/// Top-level period-log document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GovernanceLog {
    pub systems: Vec<SystemHistory>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GovernanceError {
    #[error("system {system}: {op} of unknown function `{function_id}`")]
    UnknownFunction {
        system: String,
        function_id: String,
        op: RequestOperation,
    },
    #[error("system {system}: function `{function_id}` is included twice")]
    DuplicateFunction { system: String, function_id: String },
    #[error("invalid period log: {0}")]
    InvalidLog(String),
    #[error(transparent)]
    Ef(#[from] EfError),
    #[error("period log JSON: {0}")]
    Json(String),
}

impl GovernanceLog {
    pub fn from_json(text: &str) -> Result<Self, GovernanceError> {
        serde_json::from_str(text).map_err(|e| GovernanceError::Json(e.to_string()))
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn check_period(p: &PeriodLog) -> Result<(), GovernanceError> {
    let bad = |what: &str, v: f64| {
        GovernanceError::InvalidLog(format!(
            "period {}: {what} must be a nonnegative number, got {v}",
            p.period
        ))
    };
    for (what, v) in [
        ("effort_mh", p.effort_mh),
        ("elapsed_hours", p.elapsed_hours),
        ("expected_benefit", p.expected_benefit),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(bad(what, v));
        }
    }
    Ok(())
}

/// The seven indicators for one period, given the EF size of the inventory
/// at the period's end.
pub fn compute_indicators(
    log: &PeriodLog,
    inventory_size_ef: f64,
    c: &CoefficientSet,
) -> Result<Vec<IndicatorValue>, GovernanceError> {
    check_period(log)?;
    let mut production = 0.0;
    let mut rework = 0.0;
    for r in &log.requests {
        let ef = ef_of_request(r.ftype, r.op, r.final_attrs, r.op_attrs, c)?.ef;
        production += ef;
        if r.op != RequestOperation::Include {
            rework += ef;
        }
    }
    let values = [
        (IndicatorKind::FunctionalSize, Some(inventory_size_ef)),
        (IndicatorKind::Production, Some(production)),
        (IndicatorKind::ReworkProduction, Some(rework)),
        (IndicatorKind::Productivity, ratio(production, log.effort_mh)),
        (
            IndicatorKind::ErrorDensity,
            ratio(f64::from(log.failures), inventory_size_ef),
        ),
        (IndicatorKind::DeliverySpeed, ratio(production, log.elapsed_hours)),
        (
            IndicatorKind::BenefitDensity,
            ratio(log.expected_benefit, inventory_size_ef),
        ),
    ];
    Ok(values
        .into_iter()
        .map(|(kind, value)| IndicatorValue {
            target: log.targets.get(&kind).copied(),
            benchmark: log.benchmarks.get(&kind).copied(),
            perspective: log.perspectives.get(&kind).cloned(),
            ..IndicatorValue::new(kind, value)
        })
        .collect())
}

/// Functions of a system, keyed by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Inventory {
    functions: BTreeMap<String, (FunctionType, AttributeCounts)>,
}

impl Inventory {
    pub fn from_baseline(system: &str, baseline: &[FunctionState]) -> Result<Self, GovernanceError> {
        let mut inv = Inventory::default();
        for f in baseline {
            if inv
                .functions
                .insert(f.function_id.clone(), (f.ftype, f.attrs))
                .is_some()
            {
                return Err(GovernanceError::DuplicateFunction {
                    system: system.into(),
                    function_id: f.function_id.clone(),
                });
            }
        }
        Ok(inv)
    }

    pub fn apply(&mut self, system: &str, r: &PeriodRequest) -> Result<(), GovernanceError> {
        let unknown = || GovernanceError::UnknownFunction {
            system: system.into(),
            function_id: r.function_id.clone(),
            op: r.op,
        };
        match r.op {
            RequestOperation::Include => {
                if self.functions.contains_key(&r.function_id) {
                    return Err(GovernanceError::DuplicateFunction {
                        system: system.into(),
                        function_id: r.function_id.clone(),
                    });
                }
                self.functions.insert(r.function_id.clone(), (r.ftype, r.final_attrs));
            }
            RequestOperation::Alter => {
                let entry = self.functions.get_mut(&r.function_id).ok_or_else(unknown)?;
                *entry = (r.ftype, r.final_attrs);
            }
            RequestOperation::Exclude => {
                self.functions.remove(&r.function_id).ok_or_else(unknown)?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn size_ef(&self, c: &CoefficientSet) -> f64 {
        self.functions.values().map(|(ft, a)| ef_of_function(*ft, *a, c)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodIndicators {
    pub system: String,
    pub period: String,
    pub functions: usize,
    pub indicators: Vec<IndicatorValue>,
}

/// Indicators for every period of one system, with each value's previous
/// period filled in.
pub fn replay_system(h: &SystemHistory, c: &CoefficientSet) -> Result<Vec<PeriodIndicators>, GovernanceError> {
    let mut inventory = Inventory::from_baseline(&h.system, &h.baseline)?;
    let mut out: Vec<PeriodIndicators> = Vec::with_capacity(h.periods.len());
    for p in &h.periods {
        for r in &p.requests {
            inventory.apply(&h.system, r)?;
        }
        let mut indicators = compute_indicators(p, inventory.size_ef(c), c)?;
        if let Some(prev) = out.last() {
            for (cur, old) in indicators.iter_mut().zip(&prev.indicators) {
                cur.prev_value = old.value;
            }
        }
        out.push(PeriodIndicators {
            system: h.system.clone(),
            period: p.period.clone(),
            functions: inventory.len(),
            indicators,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GovernanceReport {
    pub periods: Vec<PeriodIndicators>,
}

impl GovernanceReport {
    /// The last period of each system, in log order.
    pub fn latest(&self) -> Vec<&PeriodIndicators> {
        let mut out: Vec<&PeriodIndicators> = Vec::new();
        for p in &self.periods {
            match out.iter_mut().find(|q| q.system == p.system) {
                Some(slot) => *slot = p,
                None => out.push(p),
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.periods {
            let _ = writeln!(s, "{} / {} ({} functions)", p.system, p.period, p.functions);
            for i in &p.indicators {
                let v = i.value.map_or("undefined".to_string(), |v| format!("{v:.4}"));
                let _ = write!(s, "  {:<18}{:>14} {}", i.kind.label(), v, i.unit);
                if let Some(prev) = i.prev_value {
                    let _ = write!(s, "  prev {prev:.4}");
                }
                if let Some(t) = i.target {
                    let _ = write!(s, "  target {t:.4}");
                }
                if let Some(b) = i.benchmark {
                    let _ = write!(s, "  benchmark {b:.4}");
                }
                s.push('\n');
            }
        }
        s
    }
}

pub fn compute_log(log: &GovernanceLog, c: &CoefficientSet) -> Result<GovernanceReport, GovernanceError> {
    let mut periods = Vec::new();
    for h in &log.systems {
        periods.extend(replay_system(h, c)?);
    }
    Ok(GovernanceReport { periods })
}
