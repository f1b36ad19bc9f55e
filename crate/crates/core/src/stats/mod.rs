//! Zero-intercept least squares and its significance statistics.

pub mod special;

use serde::Serialize;
use thiserror::Error;

pub use special::{f_log10_p_value, f_p_value, ln_reg_inc_beta, reg_inc_beta, t_log10_p_value, t_p_value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("need more rows than regressors (n = {n}, k = {k})")]
    TooFewRows { n: usize, k: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Regressors (row-major, `n × k`) and response.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignData {
    x: Vec<f64>,
    y: Vec<f64>,
    k: usize,
}

impl DesignData {
    pub fn new(x_rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self, StatsError> {
        let k = x_rows.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(StatsError::Dimension("at least one regressor is required".into()));
        }
        if x_rows.len() != y.len() {
            return Err(StatsError::Dimension(format!(
                "{} regressor rows but {} responses",
                x_rows.len(),
                y.len()
            )));
        }
        if x_rows.iter().any(|r| r.len() != k) {
            return Err(StatsError::Dimension("ragged regressor rows".into()));
        }
        let x: Vec<f64> = x_rows.iter().flatten().copied().collect();
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(StatsError::Domain("non-finite observation".into()));
        }
        Ok(DesignData { x, y, k })
    }

    /// Single-regressor design.
    pub fn simple(x: Vec<f64>, y: Vec<f64>) -> Result<Self, StatsError> {
        let rows: Vec<Vec<f64>> = x.into_iter().map(|v| vec![v]).collect();
        Self::new(&rows, y)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.k..(i + 1) * self.k]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub n: usize,
    pub k: usize,
    pub coeffs: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    /// Two-tailed coefficient p-values.
    pub p_coeffs: Vec<f64>,
    pub log10_p_coeffs: Vec<f64>,
    pub sse: f64,
    /// Σy², the total sum of squares about zero.
    pub sst_uncentered: f64,
    pub r2_uncentered: f64,
    /// `None` when the response is constant.
    pub r2_centered: Option<f64>,
    pub f_stat: f64,
    pub p_f: f64,
    pub log10_p_f: f64,
}

impl RegressionResult {
    pub fn df_resid(&self) -> usize {
        self.n - self.k
    }
}

/// Solves `a · z = rhs` for every column of `rhs` by Gaussian elimination with
/// partial pivoting. `a` is `k × k`, `rhs` is `k × m`, both row-major.
fn solve_pivoted(mut a: Vec<f64>, mut rhs: Vec<f64>, k: usize, m: usize) -> Result<Vec<f64>, StatsError> {
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return Err(StatsError::RankDeficient);
    }
    let tol = scale * 1e-13;
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i * k + col].abs().total_cmp(&a[j * k + col].abs()))
            .expect("nonempty");
        if a[pivot * k + col].abs() <= tol {
            return Err(StatsError::RankDeficient);
        }
        if pivot != col {
            for c in 0..k {
                a.swap(pivot * k + c, col * k + c);
            }
            for c in 0..m {
                rhs.swap(pivot * m + c, col * m + c);
            }
        }
        let p = a[col * k + col];
        for r in col + 1..k {
            let f = a[r * k + col] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..k {
                a[r * k + c] -= f * a[col * k + c];
            }
            for c in 0..m {
                rhs[r * m + c] -= f * rhs[col * m + c];
            }
        }
    }
    for col in (0..k).rev() {
        for c in 0..m {
            let mut v = rhs[col * m + c];
            for j in col + 1..k {
                v -= a[col * k + j] * rhs[j * m + c];
            }
            rhs[col * m + c] = v / a[col * k + col];
        }
    }
    Ok(rhs)
}

/// Ordinary least squares with the intercept fixed at zero.
///
/// Degrees of freedom are `n − k`; R² and F use the uncentered total sum of
/// squares Σy², which is the convention for regressions through the origin.
pub fn ols_zero_intercept(d: &DesignData) -> Result<RegressionResult, StatsError> {
    let (n, k) = (d.n(), d.k());
    if n <= k {
        return Err(StatsError::TooFewRows { n, k });
    }

    // XᵀX augmented with [Xᵀy | I] so one elimination yields β and (XᵀX)⁻¹.
    let m = k + 1;
    let mut xtx = vec![0.0; k * k];
    let mut rhs = vec![0.0; k * m];
    for i in 0..n {
        let row = d.row(i);
        let yi = d.y[i];
        for a in 0..k {
            rhs[a * m] += row[a] * yi;
            for b in 0..k {
                xtx[a * k + b] += row[a] * row[b];
            }
        }
    }
    for a in 0..k {
        rhs[a * m + 1 + a] = 1.0;
    }
    let sol = solve_pivoted(xtx, rhs, k, m)?;
    let coeffs: Vec<f64> = (0..k).map(|a| sol[a * m]).collect();

    let sse: f64 = (0..n)
        .map(|i| {
            let fit: f64 = d.row(i).iter().zip(&coeffs).map(|(x, b)| x * b).sum();
            let r = d.y[i] - fit;
            r * r
        })
        .sum();
    let sst_uncentered: f64 = d.y.iter().map(|v| v * v).sum();
    let mean = d.y.iter().sum::<f64>() / n as f64;
    let sst_centered: f64 = d.y.iter().map(|v| (v - mean).powi(2)).sum();

    let df = (n - k) as f64;
    let sigma2 = sse / df;
    let std_errors: Vec<f64> = (0..k).map(|a| (sigma2 * sol[a * m + 1 + a]).sqrt()).collect();
    let t_stats: Vec<f64> = coeffs.iter().zip(&std_errors).map(|(b, se)| b / se).collect();
    let log10_p_coeffs: Vec<f64> = t_stats.iter().map(|&t| t_log10_p_value(t, df)).collect();
    let p_coeffs = log10_p_coeffs.iter().map(|lp| 10f64.powf(*lp)).collect();

    let r2_uncentered = if sst_uncentered > 0.0 {
        1.0 - sse / sst_uncentered
    } else {
        1.0
    };
    let r2_centered = (sst_centered > 0.0).then(|| 1.0 - sse / sst_centered);
    let f_stat = ((sst_uncentered - sse) / k as f64) / sigma2;
    let log10_p_f = f_log10_p_value(f_stat, k as f64, df);

    Ok(RegressionResult {
        n,
        k,
        coeffs,
        std_errors,
        t_stats,
        p_coeffs,
        log10_p_coeffs,
        sse,
        sst_uncentered,
        r2_uncentered,
        r2_centered,
        f_stat,
        p_f: 10f64.powf(log10_p_f),
        log10_p_f,
    })
}
