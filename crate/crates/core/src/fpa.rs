//! IFPUG complexity tables and function point sizing.
//!
//! Each of the five function kinds has a 3×3 table: the row is picked by the
//! number of referenced files (FTR for transactions, RET for data files), the
//! column by the number of data element types (DET). The cell gives a
//! complexity level, and the level maps to a size in function points.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The five IFPUG function kinds.
///
/// Variant order (EI, EO, EQ, ILF, EIF) is the canonical reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FunctionType {
    EI,
    EO,
    EQ,
    ILF,
    EIF,
}

/// Transactions move data across the boundary; data files hold it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    Transaction,
    DataFile,
}

impl FunctionType {
    pub const ALL: [FunctionType; 5] = [
        FunctionType::EI,
        FunctionType::EO,
        FunctionType::EQ,
        FunctionType::ILF,
        FunctionType::EIF,
    ];

    pub fn category(self) -> Category {
        match self {
            FunctionType::EI | FunctionType::EO | FunctionType::EQ => Category::Transaction,
            FunctionType::ILF | FunctionType::EIF => Category::DataFile,
        }
    }

    pub fn is_transaction(self) -> bool {
        self.category() == Category::Transaction
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FunctionType::EI => "EI",
            FunctionType::EO => "EO",
            FunctionType::EQ => "EQ",
            FunctionType::ILF => "ILF",
            FunctionType::EIF => "EIF",
        }
    }
}

impl fmt::Display for FunctionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown function type `{0}` (expected EI, EO, EQ, ILF or EIF)")]
pub struct UnknownFunctionType(pub String);

impl FromStr for FunctionType {
    type Err = UnknownFunctionType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "EI" => Ok(FunctionType::EI),
            "EO" => Ok(FunctionType::EO),
            "EQ" => Ok(FunctionType::EQ),
            "ILF" => Ok(FunctionType::ILF),
            "EIF" => Ok(FunctionType::EIF),
            other => Err(UnknownFunctionType(other.to_string())),
        }
    }
}

/// The attribute pair that drives complexity.
///
/// `files` is FTR for transactions and RET for data files.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeCounts {
    pub files: u32,
    pub det: u32,
}

impl AttributeCounts {
    pub const ZERO: AttributeCounts = AttributeCounts { files: 0, det: 0 };

    pub fn new(files: u32, det: u32) -> Self {
        AttributeCounts { files, det }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComplexityLevel {
    Low,
    Medium,
    High,
}

/// Closed integer interval; `hi == None` means unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: u32,
    pub hi: Option<u32>,
}

impl Interval {
    pub const fn closed(lo: u32, hi: u32) -> Self {
        Interval { lo, hi: Some(hi) }
    }

    pub const fn at_least(lo: u32) -> Self {
        Interval { lo, hi: None }
    }

    pub fn contains(&self, v: u32) -> bool {
        v >= self.lo && self.hi.is_none_or(|hi| v <= hi)
    }

    /// Number of integers in the interval, `None` when unbounded.
    pub fn width(&self) -> Option<u32> {
        self.hi.map(|hi| hi - self.lo + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpByLevel {
    pub low: u32,
    pub medium: u32,
    pub high: u32,
}

impl FpByLevel {
    pub fn get(&self, level: ComplexityLevel) -> u32 {
        match level {
            ComplexityLevel::Low => self.low,
            ComplexityLevel::Medium => self.medium,
            ComplexityLevel::High => self.high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityTable {
    pub file_ranges: [Interval; 3],
    pub det_ranges: [Interval; 3],
    pub level_matrix: [[ComplexityLevel; 3]; 3],
    pub fp_by_level: FpByLevel,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FpaError {
    #[error("{ft} attributes (files={files}, det={det}) are outside the complexity table")]
    OutOfDomain { ft: FunctionType, files: u32, det: u32 },
    #[error("invalid complexity table for {ft}: {reason}")]
    InvalidTable { ft: FunctionType, reason: String },
    #[error("rule set has no table for {0}")]
    MissingTable(FunctionType),
    #[error("rule set JSON: {0}")]
    Json(String),
}

/// Row/column lookup into one axis of a table.
fn locate(ranges: &[Interval; 3], v: u32) -> Option<usize> {
    ranges.iter().position(|r| r.contains(v))
}

impl ComplexityTable {
    pub fn in_domain(&self, a: AttributeCounts) -> bool {
        locate(&self.file_ranges, a.files).is_some() && locate(&self.det_ranges, a.det).is_some()
    }

    /// Returns the (row, column) cell for `a`, or `None` outside the table.
    pub fn cell(&self, a: AttributeCounts) -> Option<(usize, usize)> {
        Some((locate(&self.file_ranges, a.files)?, locate(&self.det_ranges, a.det)?))
    }

    pub fn level_at(&self, row: usize, col: usize) -> ComplexityLevel {
        self.level_matrix[row][col]
    }

    fn validate_axis(axis: &[Interval; 3], name: &str) -> Result<(), String> {
        for (i, r) in axis.iter().enumerate() {
            match (i, r.hi) {
                (2, Some(_)) => return Err(format!("{name} third interval must be unbounded")),
                (0 | 1, None) => return Err(format!("{name} interval {} must be bounded", i + 1)),
                (_, Some(hi)) if hi < r.lo => return Err(format!("{name} interval {} is empty", i + 1)),
                _ => {}
            }
        }
        for w in axis.windows(2) {
            // first two intervals are bounded (checked above)
            let prev_hi = w[0].hi.unwrap_or(u32::MAX);
            if prev_hi.checked_add(1) != Some(w[1].lo) {
                return Err(format!("{name} intervals are not contiguous"));
            }
        }
        Ok(())
    }

    /// Checks the structural invariants of a table: contiguous ascending
    /// intervals with an open third interval, a monotone level matrix and
    /// positive sizes.
    pub fn validate(&self, ft: FunctionType) -> Result<(), FpaError> {
        let err = |reason: String| FpaError::InvalidTable { ft, reason };
        Self::validate_axis(&self.file_ranges, "file").map_err(err)?;
        Self::validate_axis(&self.det_ranges, "det").map_err(err)?;
        let m = &self.level_matrix;
        for r in 0..3 {
            for c in 0..3 {
                if (r > 0 && m[r][c] < m[r - 1][c]) || (c > 0 && m[r][c] < m[r][c - 1]) {
                    return Err(err(format!("level matrix decreases at cell ({r}, {c})")));
                }
            }
        }
        let fp = self.fp_by_level;
        if fp.low == 0 || fp.medium < fp.low || fp.high < fp.medium {
            return Err(err("fp sizes must be positive and nondecreasing".into()));
        }
        Ok(())
    }
}

const STANDARD_MATRIX: [[ComplexityLevel; 3]; 3] = {
    use ComplexityLevel::*;
    [[Low, Low, Medium], [Low, Medium, High], [Medium, High, High]]
};

fn standard_table(ft: FunctionType) -> ComplexityTable {
    use Interval as I;
    let (file_ranges, det_ranges, fp) = match ft {
        FunctionType::EQ => (
            [I::closed(1, 1), I::closed(2, 3), I::at_least(4)],
            [I::closed(1, 5), I::closed(6, 19), I::at_least(20)],
            (3, 4, 6),
        ),
        FunctionType::EO => (
            [I::closed(0, 1), I::closed(2, 3), I::at_least(4)],
            [I::closed(1, 5), I::closed(6, 19), I::at_least(20)],
            (4, 5, 7),
        ),
        FunctionType::EI => (
            [I::closed(0, 1), I::closed(2, 2), I::at_least(3)],
            [I::closed(1, 4), I::closed(5, 15), I::at_least(16)],
            (3, 4, 6),
        ),
        FunctionType::ILF => (
            [I::closed(1, 1), I::closed(2, 5), I::at_least(6)],
            [I::closed(1, 19), I::closed(20, 50), I::at_least(51)],
            (7, 10, 15),
        ),
        FunctionType::EIF => (
            [I::closed(1, 1), I::closed(2, 5), I::at_least(6)],
            [I::closed(1, 19), I::closed(20, 50), I::at_least(51)],
            (5, 7, 10),
        ),
    };
    ComplexityTable {
        file_ranges,
        det_ranges,
        level_matrix: STANDARD_MATRIX,
        fp_by_level: FpByLevel {
            low: fp.0,
            medium: fp.1,
            high: fp.2,
        },
    }
}

/// A complete rule set: one complexity table per function type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FpaRules {
    tables: BTreeMap<FunctionType, ComplexityTable>,
}

static STANDARD: LazyLock<FpaRules> = LazyLock::new(|| FpaRules {
    tables: FunctionType::ALL.iter().map(|&ft| (ft, standard_table(ft))).collect(),
});

impl FpaRules {
    /// The IFPUG CPM 4.3.1 tables.
    pub fn standard() -> &'static FpaRules {
        &STANDARD
    }

    pub fn new(tables: BTreeMap<FunctionType, ComplexityTable>) -> Result<Self, FpaError> {
        let rules = FpaRules { tables };
        rules.validate()?;
        Ok(rules)
    }

    pub fn validate(&self) -> Result<(), FpaError> {
        for ft in FunctionType::ALL {
            self.tables.get(&ft).ok_or(FpaError::MissingTable(ft))?.validate(ft)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, FpaError> {
        let rules: FpaRules = serde_json::from_str(text).map_err(|e| FpaError::Json(e.to_string()))?;
        rules.validate()?;
        Ok(rules)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tables serialize")
    }

    pub fn table(&self, ft: FunctionType) -> &ComplexityTable {
        // validated on construction
        &self.tables[&ft]
    }

    pub fn tables(&self) -> &BTreeMap<FunctionType, ComplexityTable> {
        &self.tables
    }

    pub fn complexity(&self, ft: FunctionType, a: AttributeCounts) -> Result<ComplexityLevel, FpaError> {
        let table = self.table(ft);
        let (row, col) = table.cell(a).ok_or(FpaError::OutOfDomain {
            ft,
            files: a.files,
            det: a.det,
        })?;
        Ok(table.level_at(row, col))
    }

    pub fn fp_size(&self, ft: FunctionType, a: AttributeCounts) -> Result<u32, FpaError> {
        let level = self.complexity(ft, a)?;
        Ok(self.table(ft).fp_by_level.get(level))
    }
}

pub fn standard_tables() -> &'static BTreeMap<FunctionType, ComplexityTable> {
    FpaRules::standard().tables()
}

/// Complexity of a function under the standard tables.
pub fn complexity(ft: FunctionType, a: AttributeCounts) -> Result<ComplexityLevel, FpaError> {
    FpaRules::standard().complexity(ft, a)
}

/// Size in function points under the standard tables.
pub fn fp_size(ft: FunctionType, a: AttributeCounts) -> Result<u32, FpaError> {
    FpaRules::standard().fp_size(ft, a)
}

/// Software size is the sum of the sizes of its functions.
pub fn total_fp<I>(functions: I) -> Result<u32, FpaError>
where
    I: IntoIterator<Item = (FunctionType, AttributeCounts)>,
{
    functions.into_iter().map(|(ft, a)| fp_size(ft, a)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ComplexityLevel::*;
    use FunctionType::*;

    fn a(files: u32, det: u32) -> AttributeCounts {
        AttributeCounts::new(files, det)
    }

    #[test]
    fn categories() {
        for ft in [EI, EO, EQ] {
            assert_eq!(ft.category(), Category::Transaction);
        }
        for ft in [ILF, EIF] {
            assert_eq!(ft.category(), Category::DataFile);
        }
    }

    #[test]
    fn eq_examples() {
        assert_eq!(complexity(EQ, a(1, 4)).unwrap(), Low);
        assert_eq!(complexity(EQ, a(4, 20)).unwrap(), High);
        assert_eq!(complexity(EQ, a(2, 6)).unwrap(), Medium);
        assert_eq!(fp_size(EQ, a(1, 4)).unwrap(), 3);
    }

    #[test]
    fn other_types() {
        assert_eq!(fp_size(ILF, a(1, 1)).unwrap(), 7);
        assert_eq!(fp_size(EO, a(5, 33)).unwrap(), 7);
        let ilf = &standard_tables()[&ILF].fp_by_level;
        assert_eq!((ilf.low, ilf.medium, ilf.high), (7, 10, 15));
        assert_eq!(standard_tables()[&EI].fp_by_level.low, 3);
        // B/C example: 19 vs 20 fields jumps from low to medium
        assert_eq!(fp_size(ILF, a(2, 19)).unwrap(), 7);
        assert_eq!(fp_size(ILF, a(2, 20)).unwrap(), 10);
    }

    #[test]
    fn lower_bounds_per_type() {
        assert!(fp_size(EO, a(0, 1)).is_ok());
        assert!(fp_size(EI, a(0, 1)).is_ok());
        for ft in [EQ, ILF, EIF] {
            assert!(matches!(fp_size(ft, a(0, 1)), Err(FpaError::OutOfDomain { .. })));
        }
        for ft in FunctionType::ALL {
            assert!(matches!(complexity(ft, a(1, 0)), Err(FpaError::OutOfDomain { .. })));
        }
    }

    #[test]
    fn standard_tables_validate() {
        FpaRules::standard().validate().unwrap();
    }

    #[test]
    fn monotone_exhaustive() {
        for ft in FunctionType::ALL {
            for files in 0..=10u32 {
                for det in 1..=100u32 {
                    let Ok(here) = fp_size(ft, a(files, det)) else { continue };
                    if let Ok(right) = fp_size(ft, a(files, det + 1)) {
                        assert!(right >= here, "{ft} det step at ({files},{det})");
                    }
                    if let Ok(down) = fp_size(ft, a(files + 1, det)) {
                        assert!(down >= here, "{ft} file step at ({files},{det})");
                    }
                }
            }
        }
    }

    #[test]
    fn partition_is_unique() {
        for ft in FunctionType::ALL {
            let t = &standard_tables()[&ft];
            for v in 0..200u32 {
                assert!(t.file_ranges.iter().filter(|r| r.contains(v)).count() <= 1);
                assert!(t.det_ranges.iter().filter(|r| r.contains(v)).count() <= 1);
            }
        }
    }

    #[test]
    fn sum_rule() {
        let total = total_fp([(EQ, a(1, 4)), (ILF, a(1, 1)), (EO, a(5, 33))]).unwrap();
        assert_eq!(total, 17);
    }

    #[test]
    fn json_round_trip_and_rejects_bad_tables() {
        let json = FpaRules::standard().to_json();
        let back = FpaRules::from_json(&json).unwrap();
        assert_eq!(&back, FpaRules::standard());

        let mut tables = standard_tables().clone();
        tables.get_mut(&EQ).unwrap().level_matrix[2][2] = Low;
        assert!(matches!(
            FpaRules::new(tables),
            Err(FpaError::InvalidTable { ft: EQ, .. })
        ));

        let mut tables = standard_tables().clone();
        tables.get_mut(&EI).unwrap().det_ranges[1] = Interval::closed(6, 15);
        assert!(FpaRules::new(tables).is_err());

        let mut tables = standard_tables().clone();
        tables.remove(&EIF);
        assert_eq!(FpaRules::new(tables), Err(FpaError::MissingTable(EIF)));
    }
}
