//! Service-order datasets: CSV ingestion, validation and grouping.
//!
//! One CSV row is one request against one function. Rows sharing an `OS` id
//! form a service order, which carries the effort (hours × team). A row with
//! an undefined type, operation or attribute count rejects its whole order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::ef::RequestOperation;
use crate::fpa::{AttributeCounts, FpaRules, FunctionType};
use crate::nesma::{impact_percent, pm_with_impact, ImpactPercent};

pub const HEADER: [&str; 16] = [
    "OS",
    "Function",
    "Type",
    "Operation",
    "Final_FTR_RET",
    "Operation_FTR_RET",
    "Original_FTR_RET",
    "Final_DET",
    "Operation_DET",
    "Original_DET",
    "FP",
    "PctImpact",
    "PM",
    "System",
    "Hours",
    "Team",
];

/// Allowed gap between a recorded PM value and the recomputed one.
pub const PM_SLACK: f64 = 0.5;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: expected `{}`, found `{found}`", HEADER.join(","))]
    MalformedHeader { found: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestRecord {
    pub os_id: String,
    pub function_id: String,
    pub ftype: FunctionType,
    pub op: RequestOperation,
    pub final_attrs: AttributeCounts,
    pub op_attrs: Option<AttributeCounts>,
    pub orig_attrs: Option<AttributeCounts>,
    /// FP recorded in the source; recomputed from `final_attrs` when absent.
    pub fp: Option<u32>,
    pub pct_impact: Option<ImpactPercent>,
    pub pm: Option<f64>,
    pub system: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceOrder {
    pub os_id: String,
    pub system: String,
    pub hours: f64,
    pub team: u32,
    pub requests: Vec<RequestRecord>,
}

impl ServiceOrder {
    /// Effort in man-hours.
    pub fn effort_mh(&self) -> f64 {
        self.hours * f64::from(self.team)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub os_id: String,
    /// 1-based line in the source file.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Warning {
    pub os_id: String,
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub total_orders: usize,
    pub accepted_orders: usize,
    pub rejected_orders: usize,
    pub accepted_requests: usize,
    pub reject_reasons: Vec<Rejection>,
    pub warnings: Vec<Warning>,
}

/// Numeric ids compare numerically, everything else lexically.
pub fn compare_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

struct ParsedRow {
    record: RequestRecord,
    hours: f64,
    team: u32,
    warnings: Vec<String>,
}

fn cell(row: &csv::StringRecord, idx: usize) -> Option<&str> {
    row.get(idx).map(str::trim).filter(|s| !s.is_empty())
}

fn required(row: &csv::StringRecord, idx: usize) -> Result<&str, String> {
    cell(row, idx).ok_or_else(|| format!("{} is undefined", HEADER[idx]))
}

fn parse_num<T: std::str::FromStr>(row: &csv::StringRecord, idx: usize) -> Result<Option<T>, String> {
    cell(row, idx)
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| format!("{} `{s}` is not a valid number", HEADER[idx]))
        })
        .transpose()
}

fn parse_required_num<T: std::str::FromStr>(row: &csv::StringRecord, idx: usize) -> Result<T, String> {
    parse_num(row, idx)?.ok_or_else(|| format!("{} is undefined", HEADER[idx]))
}

fn attrs(row: &csv::StringRecord, files: usize, det: usize) -> Result<Option<AttributeCounts>, String> {
    match (parse_num::<u32>(row, files)?, parse_num::<u32>(row, det)?) {
        (Some(f), Some(d)) => Ok(Some(AttributeCounts::new(f, d))),
        (None, None) => Ok(None),
        _ => Err(format!("{} and {} must be given together", HEADER[files], HEADER[det])),
    }
}

fn parse_row(row: &csv::StringRecord, rules: &FpaRules) -> Result<ParsedRow, String> {
    let os_id = required(row, 0)?.to_string();
    let function_id = required(row, 1)?.to_string();
    let ftype: FunctionType = required(row, 2)?.parse().map_err(|e| format!("{e}"))?;
    let op: RequestOperation = required(row, 3)?.parse().map_err(|e| format!("{e}"))?;
    let final_attrs = AttributeCounts::new(parse_required_num(row, 4)?, parse_required_num(row, 7)?);
    let op_attrs = attrs(row, 5, 8)?;
    let orig_attrs = attrs(row, 6, 9)?;
    let fp = parse_num::<u32>(row, 10)?;
    let pct_impact = parse_num::<u32>(row, 11)?
        .map(|p| ImpactPercent::new(p).map_err(|e| e.to_string()))
        .transpose()?;
    let pm = parse_num::<f64>(row, 12)?;
    let system = required(row, 13)?.to_string();
    let hours: f64 = parse_required_num(row, 14)?;
    let team: u32 = parse_required_num(row, 15)?;

    if !(hours.is_finite() && hours >= 0.0) {
        return Err(format!("Hours `{hours}` must be a nonnegative number"));
    }
    if team == 0 {
        return Err("Team must be at least 1".into());
    }
    if pm.is_some_and(|v| !(v.is_finite() && v >= 0.0)) {
        return Err("PM must be a nonnegative number".into());
    }
    if fp == Some(0) {
        return Err("FP must be positive".into());
    }
    let final_fp = rules
        .fp_size(ftype, final_attrs)
        .map_err(|e| format!("final attributes: {e}"))?;

    let mut warnings = Vec::new();
    match op {
        RequestOperation::Alter => {
            let (Some(changed), Some(orig)) = (op_attrs, orig_attrs) else {
                return Err("alteration requires Operation_* and Original_* counts".into());
            };
            rules
                .fp_size(ftype, orig)
                .map_err(|e| format!("original attributes: {e}"))?;
            if changed.files > final_attrs.files + orig.files || changed.det > final_attrs.det + orig.det {
                warnings.push(format!(
                    "operation counts ({}, {}) exceed final + original counts",
                    changed.files, changed.det
                ));
            }
        }
        RequestOperation::Include => {
            if op_attrs.is_some_and(|a| a != final_attrs) {
                return Err("inclusion with operation counts different from final counts".into());
            }
        }
        RequestOperation::Exclude => {}
    }

    if let Some(recorded) = fp {
        if recorded != final_fp {
            warnings.push(format!("FP column {recorded} differs from recomputed {final_fp}"));
        }
    }
    if op == RequestOperation::Alter {
        // both present, checked above
        let (orig, changed) = (orig_attrs.unwrap_or_default(), op_attrs.unwrap_or_default());
        if let Ok(pct) = impact_percent(orig, changed) {
            if let Some(recorded) = pct_impact.filter(|p| *p != pct) {
                warnings.push(format!(
                    "PctImpact {} differs from recomputed {}",
                    recorded.get(),
                    pct.get()
                ));
            }
            if let (Some(recorded), Ok(orig_fp)) = (pm, rules.fp_size(ftype, orig)) {
                let expected = pm_with_impact(orig_fp, pct_impact.unwrap_or(pct));
                if (recorded - expected).abs() > PM_SLACK {
                    warnings.push(format!("PM {recorded} differs from recomputed {expected}"));
                }
            }
        }
    }

    Ok(ParsedRow {
        record: RequestRecord {
            os_id,
            function_id,
            ftype,
            op,
            final_attrs,
            op_attrs,
            orig_attrs,
            fp,
            pct_impact,
            pm,
            system,
        },
        hours,
        team,
        warnings,
    })
}

struct PendingOrder {
    os_id: String,
    first_line: u64,
    rows: Vec<(u64, ParsedRow)>,
    rejections: Vec<Rejection>,
}

/// Parses a dataset from any reader.
pub fn parse_reader<R: Read>(reader: R, rules: &FpaRules) -> Result<(Vec<ServiceOrder>, IngestReport), DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Ok((Vec::new(), IngestReport::default())),
        Some(h) => h?,
    };
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    let found_clean: Vec<&str> = found.iter().map(|s| s.trim_start_matches('\u{feff}')).collect();
    if found_clean != HEADER {
        return Err(DatasetError::MalformedHeader { found: found.join(",") });
    }

    let mut order_index: HashMap<String, usize> = HashMap::new();
    let mut pending: Vec<PendingOrder> = Vec::new();
    for result in records {
        let row = result?;
        let line = row.position().map_or(0, |p| p.line());
        if row.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let os_id = cell(&row, 0).unwrap_or("").to_string();
        let idx = *order_index.entry(os_id.clone()).or_insert_with(|| {
            pending.push(PendingOrder {
                os_id: os_id.clone(),
                first_line: line,
                rows: Vec::new(),
                rejections: Vec::new(),
            });
            pending.len() - 1
        });
        let order = &mut pending[idx];
        if row.len() != HEADER.len() {
            order.rejections.push(Rejection {
                os_id,
                line,
                reason: format!("row has {} fields, expected {}", row.len(), HEADER.len()),
            });
            continue;
        }
        match parse_row(&row, rules) {
            Ok(parsed) => order.rows.push((line, parsed)),
            Err(reason) => order.rejections.push(Rejection { os_id, line, reason }),
        }
    }

    let mut report = IngestReport {
        total_orders: pending.len(),
        ..Default::default()
    };
    let mut orders = Vec::new();
    for mut p in pending {
        if p.os_id.is_empty() {
            p.rejections.push(Rejection {
                os_id: String::new(),
                line: p.first_line,
                reason: "OS is undefined".into(),
            });
        }
        if let Some((_, first)) = p.rows.first() {
            let (sys, hours, team) = (first.record.system.clone(), first.hours, first.team);
            for (line, r) in &p.rows {
                if r.record.system != sys {
                    p.rejections.push(Rejection {
                        os_id: p.os_id.clone(),
                        line: *line,
                        reason: format!("System `{}` conflicts with `{sys}`", r.record.system),
                    });
                }
                if r.hours != hours || r.team != team {
                    p.rejections.push(Rejection {
                        os_id: p.os_id.clone(),
                        line: *line,
                        reason: "Hours/Team differ between rows of the order".into(),
                    });
                }
            }
        }
        if !p.rejections.is_empty() {
            report.rejected_orders += 1;
            report.reject_reasons.append(&mut p.rejections);
            continue;
        }
        let first = &p.rows[0].1;
        let (system, hours, team) = (first.record.system.clone(), first.hours, first.team);
        let mut requests = Vec::with_capacity(p.rows.len());
        for (line, parsed) in p.rows {
            report
                .warnings
                .extend(parsed.warnings.into_iter().map(|message| Warning {
                    os_id: p.os_id.clone(),
                    line,
                    message,
                }));
            requests.push(parsed.record);
        }
        report.accepted_orders += 1;
        report.accepted_requests += requests.len();
        orders.push(ServiceOrder {
            os_id: p.os_id,
            system,
            hours,
            team,
            requests,
        });
    }
    Ok((orders, report))
}

/// Parses a dataset file under the standard FPA tables.
pub fn parse_csv(path: impl AsRef<Path>) -> Result<(Vec<ServiceOrder>, IngestReport), DatasetError> {
    parse_reader(File::open(path)?, FpaRules::standard())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes orders back out in the interchange format.
pub fn write_csv<W: Write>(orders: &[ServiceOrder], writer: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for o in orders {
        for r in &o.requests {
            w.write_record([
                r.os_id.clone(),
                r.function_id.clone(),
                r.ftype.to_string(),
                r.op.code().to_string(),
                r.final_attrs.files.to_string(),
                opt(r.op_attrs.map(|a| a.files)),
                opt(r.orig_attrs.map(|a| a.files)),
                r.final_attrs.det.to_string(),
                opt(r.op_attrs.map(|a| a.det)),
                opt(r.orig_attrs.map(|a| a.det)),
                opt(r.fp),
                opt(r.pct_impact.map(ImpactPercent::get)),
                opt(r.pm),
                o.system.clone(),
                o.hours.to_string(),
                o.team.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Keeps systems with at least `min_os` orders; orders sorted by id.
pub fn filter_systems(orders: &[ServiceOrder], min_os: usize) -> BTreeMap<String, Vec<ServiceOrder>> {
    let mut by_system: BTreeMap<String, Vec<ServiceOrder>> = BTreeMap::new();
    for o in orders {
        by_system.entry(o.system.clone()).or_default().push(o.clone());
    }
    by_system.retain(|_, v| v.len() >= min_os);
    for v in by_system.values_mut() {
        v.sort_by(|a, b| compare_ids(&a.os_id, &b.os_id));
    }
    by_system
}
