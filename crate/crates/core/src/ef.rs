//! Functional Elements (EF) sizing.
//!
//! EF replaces the ordinal FPA lookup with a linear form per function type:
//! `constant + coef_files * files + coef_det * det`. Transactions contribute
//! to EFt, data files to EFd, and `EF = EFt + EFd`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fpa::{AttributeCounts, FunctionType};

/// Kind of work a request performs on a function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RequestOperation {
    #[serde(rename = "I")]
    Include,
    #[serde(rename = "A")]
    Alter,
    #[serde(rename = "E")]
    Exclude,
}

impl RequestOperation {
    pub fn code(self) -> &'static str {
        match self {
            RequestOperation::Include => "I",
            RequestOperation::Alter => "A",
            RequestOperation::Exclude => "E",
        }
    }
}

impl fmt::Display for RequestOperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown operation `{0}` (expected I, A or E)")]
pub struct UnknownOperation(pub String);

impl FromStr for RequestOperation {
    type Err = UnknownOperation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "I" => Ok(RequestOperation::Include),
            "A" => Ok(RequestOperation::Alter),
            "E" => Ok(RequestOperation::Exclude),
            other => Err(UnknownOperation(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeCoefficients {
    pub constant: f64,
    pub coef_files: f64,
    pub coef_det: f64,
}

impl TypeCoefficients {
    pub const fn new(constant: f64, coef_files: f64, coef_det: f64) -> Self {
        TypeCoefficients {
            constant,
            coef_files,
            coef_det,
        }
    }

    pub fn evaluate(&self, a: AttributeCounts) -> f64 {
        self.constant + self.coef_files * f64::from(a.files) + self.coef_det * f64::from(a.det)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        TypeCoefficients {
            constant: self.constant * factor,
            coef_files: self.coef_files * factor,
            coef_det: self.coef_det * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EfError {
    #[error("alteration of {0} requires operation attribute counts")]
    MissingOperationAttributes(FunctionType),
    #[error("coefficient set has no entry for {0}")]
    MissingType(FunctionType),
    #[error("invalid coefficients for {ft}: {reason}")]
    InvalidCoefficients { ft: FunctionType, reason: String },
    #[error("coefficient JSON: {0}")]
    Json(String),
}

/// Per-type EF coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefficientSet {
    by_type: BTreeMap<FunctionType, TypeCoefficients>,
}

impl Default for CoefficientSet {
    fn default() -> Self {
        Self::published()
    }
}

impl CoefficientSet {
    /// The published two-decimal coefficients.
    pub fn published() -> Self {
        use FunctionType::*;
        let by_type = [
            (ILF, TypeCoefficients::new(1.75, 0.96, 0.12)),
            (EIF, TypeCoefficients::new(1.25, 0.65, 0.08)),
            (EO, TypeCoefficients::new(1.00, 0.81, 0.13)),
            (EI, TypeCoefficients::new(0.75, 0.91, 0.13)),
            (EQ, TypeCoefficients::new(0.75, 0.76, 0.10)),
        ]
        .into_iter()
        .collect();
        CoefficientSet { by_type }
    }

    pub fn new(by_type: BTreeMap<FunctionType, TypeCoefficients>) -> Result<Self, EfError> {
        let set = CoefficientSet { by_type };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), EfError> {
        for ft in FunctionType::ALL {
            let c = self.by_type.get(&ft).ok_or(EfError::MissingType(ft))?;
            let bad = |reason: &str| EfError::InvalidCoefficients {
                ft,
                reason: reason.into(),
            };
            if !(c.constant.is_finite() && c.coef_files.is_finite() && c.coef_det.is_finite()) {
                return Err(bad("non-finite value"));
            }
            if c.constant < 0.0 {
                return Err(bad("constant must be nonnegative"));
            }
            if c.coef_files <= 0.0 || c.coef_det <= 0.0 {
                return Err(bad("attribute coefficients must be positive"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, EfError> {
        let set: CoefficientSet = serde_json::from_str(text).map_err(|e| EfError::Json(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }

    pub fn get(&self, ft: FunctionType) -> &TypeCoefficients {
        &self.by_type[&ft]
    }

    pub fn iter(&self) -> impl Iterator<Item = (FunctionType, &TypeCoefficients)> {
        self.by_type.iter().map(|(ft, c)| (*ft, c))
    }

    pub fn with_type(mut self, ft: FunctionType, c: TypeCoefficients) -> Self {
        self.by_type.insert(ft, c);
        self
    }
}

/// EF split into its transaction and data parts.
///
/// `ef` is always formed as `eft + efd`, so the identity is exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EfBreakdown {
    pub ef: f64,
    pub eft: f64,
    pub efd: f64,
}

impl EfBreakdown {
    pub fn booked(ft: FunctionType, value: f64) -> Self {
        if ft.is_transaction() {
            EfBreakdown::from_parts(value, 0.0)
        } else {
            EfBreakdown::from_parts(0.0, value)
        }
    }

    pub fn from_parts(eft: f64, efd: f64) -> Self {
        EfBreakdown {
            ef: eft + efd,
            eft,
            efd,
        }
    }
}

/// EF of a whole function with the given attributes.
pub fn ef_of_function(ft: FunctionType, a: AttributeCounts, c: &CoefficientSet) -> f64 {
    c.get(ft).evaluate(a)
}

/// EF contributed by one request.
///
/// Inclusions are sized on the final attributes, alterations only on the
/// attributes the change touched, exclusions at the type constant.
pub fn ef_of_request(
    ft: FunctionType,
    op: RequestOperation,
    final_attrs: AttributeCounts,
    op_attrs: Option<AttributeCounts>,
    c: &CoefficientSet,
) -> Result<EfBreakdown, EfError> {
    let value = match op {
        RequestOperation::Include => ef_of_function(ft, final_attrs, c),
        RequestOperation::Alter => {
            let touched = op_attrs.ok_or(EfError::MissingOperationAttributes(ft))?;
            ef_of_function(ft, touched, c)
        }
        RequestOperation::Exclude => c.get(ft).constant,
    };
    Ok(EfBreakdown::booked(ft, value))
}

pub fn aggregate<I>(parts: I) -> EfBreakdown
where
    I: IntoIterator<Item = EfBreakdown>,
{
    let (eft, efd) = parts.into_iter().fold((0.0, 0.0), |(t, d), b| (t + b.eft, d + b.efd));
    EfBreakdown::from_parts(eft, efd)
}
