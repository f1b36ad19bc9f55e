//! Effort-versus-size study: one zero-intercept regression of order effort on
//! order size per system and metric, plus the pairwise superiority rule.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{filter_systems, RequestRecord, ServiceOrder};
use crate::ef::{aggregate, ef_of_request, CoefficientSet, EfBreakdown, EfError, RequestOperation};
use crate::exec::{map_ordered, Execution};
use crate::fpa::{FpaError, FpaRules};
use crate::nesma::{impact_percent, pm_with_impact, ImpactPercent, NesmaError};
use crate::stats::{ols_zero_intercept, DesignData, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    FP,
    EF,
    EFt,
    PM,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [MetricKind::FP, MetricKind::EF, MetricKind::EFt, MetricKind::PM];
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MetricKind::FP => "FP",
            MetricKind::EF => "EF",
            MetricKind::EFt => "EFt",
            MetricKind::PM => "PM",
        };
        f.write_str(s)
    }
}

/// Where FP (and recorded PM / impact) values come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FpSource {
    /// Trust the dataset's FP, PctImpact and PM columns when present.
    #[default]
    Column,
    /// Recompute everything from attribute counts.
    Recompute,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Fpa(#[from] FpaError),
    #[error(transparent)]
    Ef(#[from] EfError),
    #[error(transparent)]
    Nesma(#[from] NesmaError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("need at least 3 orders to correlate, got {0}")]
    TooFewOrders(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct SizingContext<'a> {
    pub rules: &'a FpaRules,
    pub coefficients: &'a CoefficientSet,
    pub fp_source: FpSource,
}

impl<'a> SizingContext<'a> {
    pub fn new(rules: &'a FpaRules, coefficients: &'a CoefficientSet, fp_source: FpSource) -> Self {
        SizingContext {
            rules,
            coefficients,
            fp_source,
        }
    }
}

/// Sizes of one request under every metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RequestSizes {
    pub fp: f64,
    pub ef: f64,
    pub eft: f64,
    pub efd: f64,
    pub pm: f64,
}

impl RequestSizes {
    pub fn get(&self, m: MetricKind) -> f64 {
        match m {
            MetricKind::FP => self.fp,
            MetricKind::EF => self.ef,
            MetricKind::EFt => self.eft,
            MetricKind::PM => self.pm,
        }
    }

    fn add(self, other: RequestSizes) -> RequestSizes {
        let ef = aggregate([
            EfBreakdown::from_parts(self.eft, self.efd),
            EfBreakdown::from_parts(other.eft, other.efd),
        ]);
        RequestSizes {
            fp: self.fp + other.fp,
            ef: ef.ef,
            eft: ef.eft,
            efd: ef.efd,
            pm: self.pm + other.pm,
        }
    }
}

/// Sizes a request.
///
/// FPA cannot size a deletion, so exclusions count 0 FP; EF books the type
/// constant and PM a quarter of the function's FP. Alterations count the
/// function's full final FP.
pub fn size_request(r: &RequestRecord, ctx: &SizingContext<'_>) -> Result<RequestSizes, EvalError> {
    let use_columns = ctx.fp_source == FpSource::Column;
    let final_fp = match r.fp.filter(|_| use_columns) {
        Some(fp) => fp,
        None => ctx.rules.fp_size(r.ftype, r.final_attrs)?,
    };
    let fp = match r.op {
        RequestOperation::Exclude => 0.0,
        _ => f64::from(final_fp),
    };
    let ef = ef_of_request(r.ftype, r.op, r.final_attrs, r.op_attrs, ctx.coefficients)?;
    let pm = match (r.pm.filter(|_| use_columns), r.op) {
        (Some(pm), _) => pm,
        (None, RequestOperation::Include) => pm_with_impact(final_fp, ImpactPercent::FULL),
        (None, RequestOperation::Exclude) => pm_with_impact(final_fp, ImpactPercent::MIN),
        (None, RequestOperation::Alter) => {
            let orig = r.orig_attrs.ok_or(NesmaError::NoOriginalAttributes)?;
            let orig_fp = ctx.rules.fp_size(r.ftype, orig)?;
            let pct = match r.pct_impact.filter(|_| use_columns) {
                Some(p) => p,
                None => impact_percent(orig, r.op_attrs.unwrap_or_default())?,
            };
            pm_with_impact(orig_fp, pct)
        }
    };
    Ok(RequestSizes {
        fp,
        ef: ef.ef,
        eft: ef.eft,
        efd: ef.efd,
        pm,
    })
}

/// Summed sizes of all requests in an order.
pub fn order_sizes(o: &ServiceOrder, ctx: &SizingContext<'_>) -> Result<RequestSizes, EvalError> {
    o.requests
        .iter()
        .try_fold(RequestSizes::default(), |acc, r| Ok(acc.add(size_request(r, ctx)?)))
}

pub fn os_size(o: &ServiceOrder, m: MetricKind, ctx: &SizingContext<'_>) -> Result<f64, EvalError> {
    Ok(order_sizes(o, ctx)?.get(m))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub system: String,
    pub metric: MetricKind,
    pub n_os: usize,
    pub n_requests: usize,
    pub r2: f64,
    pub f_stat: f64,
    pub p_f: f64,
    pub log10_p_f: f64,
    /// Man-hours per size unit.
    pub slope: f64,
    /// r2 / r2(FP) − 1; absent for FP itself.
    pub prop_to_fp: Option<f64>,
}

/// Regresses effort on size for one system's orders.
pub fn correlate(
    system_orders: &[ServiceOrder],
    m: MetricKind,
    ctx: &SizingContext<'_>,
) -> Result<StudyRow, EvalError> {
    let n = system_orders.len();
    if n < 3 {
        return Err(EvalError::TooFewOrders(n));
    }
    let x = system_orders
        .iter()
        .map(|o| os_size(o, m, ctx))
        .collect::<Result<Vec<_>, _>>()?;
    let y = system_orders.iter().map(ServiceOrder::effort_mh).collect();
    let fit = ols_zero_intercept(&DesignData::simple(x, y)?)?;
    Ok(StudyRow {
        system: system_orders[0].system.clone(),
        metric: m,
        n_os: n,
        n_requests: system_orders.iter().map(|o| o.requests.len()).sum(),
        r2: fit.r2_uncentered,
        f_stat: fit.f_stat,
        p_f: fit.p_f,
        log10_p_f: fit.log10_p_f,
        slope: fit.coeffs[0],
        prop_to_fp: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Superior,
    Inferior,
    Tie,
    /// Neither correlation is significant.
    NoVerdict,
}

/// A correlation beats another if it is significant and the other is not,
/// or both are significant and it has the larger R².
pub fn superiority(c1: &StudyRow, c2: &StudyRow, alpha: f64) -> Verdict {
    let sig1 = c1.p_f < alpha;
    let sig2 = c2.p_f < alpha;
    match (sig1, sig2) {
        (true, false) => Verdict::Superior,
        (false, true) => Verdict::Inferior,
        (false, false) => Verdict::NoVerdict,
        (true, true) => match c1.r2.partial_cmp(&c2.r2) {
            Some(std::cmp::Ordering::Greater) => Verdict::Superior,
            Some(std::cmp::Ordering::Less) => Verdict::Inferior,
            _ => Verdict::Tie,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairVerdict {
    pub first: MetricKind,
    pub second: MetricKind,
    pub verdict: Verdict,
}

/// Pairwise verdicts for every unordered pair of rows (same system).
pub fn compare(rows: &[StudyRow], alpha: f64) -> Vec<PairVerdict> {
    let mut out = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            out.push(PairVerdict {
                first: a.metric,
                second: b.metric,
                verdict: superiority(a, b, alpha),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyConfig {
    pub alpha: f64,
    pub min_os: usize,
    pub fp_source: FpSource,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            alpha: 0.05,
            min_os: 15,
            fp_source: FpSource::Column,
            exec: Execution::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemStudy {
    pub system: String,
    pub n_os: usize,
    pub n_requests: usize,
    pub rows: Vec<StudyRow>,
    pub verdicts: Vec<PairVerdict>,
    /// Metrics whose regression could not be computed, with the reason.
    pub failures: Vec<(MetricKind, String)>,
}

impl SystemStudy {
    pub fn row(&self, m: MetricKind) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.metric == m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Study {
    pub config: StudyConfig,
    pub systems: Vec<SystemStudy>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

const SIZING_NOTE: &str =
    "exclusions size 0 FP, the type constant in EF/EFt, and 25% of FP in PM; alterations size the full final FP";

/// Runs the study over every system with at least `config.min_os` orders.
pub fn run_study(
    orders: &[ServiceOrder],
    coefficients: &CoefficientSet,
    rules: &FpaRules,
    config: StudyConfig,
) -> Study {
    let ctx = SizingContext::new(rules, coefficients, config.fp_source);
    let systems = filter_systems(orders, config.min_os);
    let mut warnings = Vec::new();
    if systems.is_empty() {
        warnings.push(format!(
            "no system has at least {} service orders; study is empty",
            config.min_os
        ));
    }

    let jobs: Vec<(&str, &[ServiceOrder], MetricKind)> = systems
        .iter()
        .flat_map(|(name, os)| MetricKind::ALL.iter().map(move |&m| (name.as_str(), os.as_slice(), m)))
        .collect();
    let results = map_ordered(jobs, config.exec, |(name, os, m)| (name, m, correlate(os, m, &ctx)));

    let mut out = Vec::with_capacity(systems.len());
    for (name, os) in &systems {
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for (sys, m, res) in results.iter().filter(|(sys, _, _)| sys == name) {
            match res {
                Ok(row) => rows.push(row.clone()),
                Err(e) => {
                    warnings.push(format!("system {sys}, metric {m}: {e}"));
                    failures.push((*m, e.to_string()));
                }
            }
        }
        let fp_r2 = rows.iter().find(|r| r.metric == MetricKind::FP).map(|r| r.r2);
        for r in rows.iter_mut().filter(|r| r.metric != MetricKind::FP) {
            r.prop_to_fp = fp_r2.filter(|v| *v > 0.0).map(|fp| r.r2 / fp - 1.0);
        }
        let verdicts = compare(&rows, config.alpha);
        out.push(SystemStudy {
            system: name.clone(),
            n_os: os.len(),
            n_requests: os.iter().map(|o| o.requests.len()).sum(),
            rows,
            verdicts,
            failures,
        });
    }
    Study {
        config,
        systems: out,
        warnings,
        notes: vec![SIZING_NOTE.to_string()],
    }
}

fn pct(v: f64) -> String {
    format!("{:.1}%", v * 100.0)
}

impl Study {
    /// Text table with systems as columns and metrics as row groups.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let col = 12;
        let _ = write!(s, "{:<30}", "System");
        for sys in &self.systems {
            let _ = write!(s, "{:>col$}", sys.system);
        }
        s.push('\n');
        let mut line = |label: &str, f: &dyn Fn(&SystemStudy) -> String| {
            let _ = write!(s, "{label:<30}");
            for sys in &self.systems {
                let _ = write!(s, "{:>col$}", f(sys));
            }
            s.push('\n');
        };
        line("Quantity of OS", &|sys| sys.n_os.to_string());
        line("Quantity of Requests", &|sys| sys.n_requests.to_string());
        for m in MetricKind::ALL {
            let cell = |f: fn(&StudyRow) -> String| move |sys: &SystemStudy| sys.row(m).map_or("-".into(), f);
            line(&format!("{m:<5} R^2"), &cell(|r| pct(r.r2)));
            line("      p-value (F test)", &cell(|r| format!("{:.1E}", r.p_f)));
            line("      slope (mh/unit)", &cell(|r| format!("{:.3}", r.slope)));
            if m != MetricKind::FP {
                line(
                    "      Proportion to FP's R^2",
                    &cell(|r| r.prop_to_fp.map_or("-".into(), |p| format!("{:+.0}%", p * 100.0))),
                );
            }
        }
        if !self.systems.is_empty() {
            let _ = writeln!(s, "\nSuperiority (alpha = {}):", self.config.alpha);
            for sys in &self.systems {
                for v in &sys.verdicts {
                    let _ = writeln!(s, "  {}: {} vs {}: {:?}", sys.system, v.first, v.second, v.verdict);
                }
            }
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpa::{AttributeCounts, FunctionType};

    fn request(os: &str, ft: FunctionType, op: RequestOperation, f: u32, d: u32) -> RequestRecord {
        RequestRecord {
            os_id: os.into(),
            function_id: "1".into(),
            ftype: ft,
            op,
            final_attrs: AttributeCounts::new(f, d),
            op_attrs: None,
            orig_attrs: None,
            fp: None,
            pct_impact: None,
            pm: None,
            system: "A".into(),
        }
    }

    fn order(id: &str, hours: f64, requests: Vec<RequestRecord>) -> ServiceOrder {
        ServiceOrder {
            os_id: id.into(),
            system: "A".into(),
            hours,
            team: 1,
            requests,
        }
    }

    fn ctx() -> (FpaRules, CoefficientSet) {
        (FpaRules::standard().clone(), CoefficientSet::published())
    }

    #[test]
    fn os_size_examples() {
        let (rules, c) = ctx();
        let ctx = SizingContext::new(&rules, &c, FpSource::Column);
        let o = order(
            "1",
            1.0,
            vec![request("1", FunctionType::EQ, RequestOperation::Include, 1, 5)],
        );
        assert!((os_size(&o, MetricKind::EF, &ctx).unwrap() - 2.01).abs() < 1e-12);
        assert!((os_size(&o, MetricKind::EFt, &ctx).unwrap() - 2.01).abs() < 1e-12);
        assert_eq!(os_size(&o, MetricKind::FP, &ctx).unwrap(), 3.0);
        assert_eq!(os_size(&o, MetricKind::PM, &ctx).unwrap(), 3.0);

        let ilf = order(
            "2",
            1.0,
            vec![request("2", FunctionType::ILF, RequestOperation::Include, 2, 30)],
        );
        assert_eq!(os_size(&ilf, MetricKind::EFt, &ctx).unwrap(), 0.0);
        assert!(os_size(&ilf, MetricKind::EF, &ctx).unwrap() > 0.0);

        let empty = order("3", 1.0, vec![]);
        for m in MetricKind::ALL {
            assert_eq!(os_size(&empty, m, &ctx).unwrap(), 0.0);
        }
    }

    #[test]
    fn exclusion_and_alteration_sizes() {
        let (rules, c) = ctx();
        let ctx = SizingContext::new(&rules, &c, FpSource::Recompute);
        let ex = request("1", FunctionType::ILF, RequestOperation::Exclude, 2, 30);
        let s = size_request(&ex, &ctx).unwrap();
        assert_eq!((s.fp, s.ef, s.efd, s.pm), (0.0, 1.75, 1.75, 2.5));

        let mut alt = request("1", FunctionType::EQ, RequestOperation::Alter, 3, 20);
        alt.op_attrs = Some(AttributeCounts::new(0, 5));
        alt.orig_attrs = Some(AttributeCounts::new(3, 20));
        let s = size_request(&alt, &ctx).unwrap();
        assert_eq!(s.fp, 6.0);
        assert!((s.ef - 1.25).abs() < 1e-12);
        assert_eq!(s.pm, 6.0 * 0.25);

        // recorded columns win in column mode
        alt.pm = Some(9.0);
        alt.fp = Some(4);
        let col = SizingContext::new(&rules, &c, FpSource::Column);
        let s = size_request(&alt, &col).unwrap();
        assert_eq!((s.fp, s.pm), (4.0, 9.0));
    }

    #[test]
    fn exact_proportional_effort() {
        let (rules, c) = ctx();
        let ctx = SizingContext::new(&rules, &c, FpSource::Column);
        let orders: Vec<ServiceOrder> = (1..=6u32)
            .map(|i| {
                let r = request(
                    &i.to_string(),
                    FunctionType::EI,
                    RequestOperation::Include,
                    i % 4,
                    3 + 2 * i,
                );
                let ef = ef_of_request(r.ftype, r.op, r.final_attrs, None, &c).unwrap().ef;
                order(&i.to_string(), 10.0 * ef, vec![r])
            })
            .collect();
        let row = correlate(&orders, MetricKind::EF, &ctx).unwrap();
        assert!((row.r2 - 1.0).abs() < 1e-12);
        assert!((row.slope - 10.0).abs() < 1e-12);
        assert_eq!(
            correlate(&orders[..2], MetricKind::EF, &ctx),
            Err(EvalError::TooFewOrders(2))
        );
    }

    fn row(m: MetricKind, r2: f64, p: f64) -> StudyRow {
        StudyRow {
            system: "B".into(),
            metric: m,
            n_os: 25,
            n_requests: 44,
            r2,
            f_stat: 0.0,
            p_f: p,
            log10_p_f: p.log10(),
            slope: 1.0,
            prop_to_fp: None,
        }
    }

    #[test]
    fn superiority_rule() {
        let c1 = row(MetricKind::EF, 0.60, 1e-6);
        let c2 = row(MetricKind::FP, 0.11, 0.088);
        assert_eq!(superiority(&c1, &c2, 0.05), Verdict::Superior);
        assert_eq!(superiority(&c2, &c1, 0.05), Verdict::Inferior);
        assert_eq!(
            superiority(&row(MetricKind::EF, 0.9, 0.2), &row(MetricKind::FP, 0.5, 0.3), 0.05),
            Verdict::NoVerdict
        );
        assert_eq!(
            superiority(&row(MetricKind::EF, 0.5, 0.01), &row(MetricKind::FP, 0.5, 0.02), 0.05),
            Verdict::Tie
        );
        assert_eq!(
            superiority(&row(MetricKind::EF, 0.4, 0.01), &row(MetricKind::FP, 0.5, 0.02), 0.05),
            Verdict::Inferior
        );
        assert_eq!(compare(&[c1, c2, row(MetricKind::PM, 0.3, 0.01)], 0.05).len(), 3);
    }
}
