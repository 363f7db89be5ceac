//! Ordinary least squares with classical inference, plus the simple
//! year-on-value trend fit.
//!
//! The default fatality model is
//! `fatalities = b0 + b1 * density + b2 * admin_score + e`. A temperature
//! (or temporal) term can be added as another named column; the bundled
//! tables carry no such column, so it is not part of the default model.

mod linalg;
mod special;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use linalg::PIVOT_TOLERANCE;
pub use special::{ln_gamma, reg_inc_beta};

use crate::round6;
use linalg::ScaledCholesky;

pub const INTERCEPT: &str = "intercept";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("design matrix is rank deficient at column '{column}'")]
    RankDeficient { column: String },
    #[error("no residual degrees of freedom; inference unavailable")]
    Underdetermined,
    #[error("degrees of freedom must be at least 1, got {0}")]
    InvalidDof(u64),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("non-finite value in input")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, RegressionError>;

/// Row-major design matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    data: Vec<f64>,
    n_rows: usize,
    intercept: bool,
}

impl DesignMatrix {
    /// Builds from named predictor columns, prepending a column of ones
    /// named [`INTERCEPT`] when `intercept` is set.
    pub fn from_columns<S: Into<String>>(
        columns: Vec<(S, Vec<f64>)>,
        intercept: bool,
    ) -> Result<Self> {
        let n_rows = columns.first().map_or(0, |(_, c)| c.len());
        let mut names = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        if intercept {
            names.push(INTERCEPT.to_string());
            cols.push(vec![1.0; n_rows]);
        }
        for (name, col) in columns {
            if col.len() != n_rows {
                return Err(RegressionError::DimensionMismatch {
                    expected: n_rows,
                    got: col.len(),
                });
            }
            names.push(name.into());
            cols.push(col);
        }
        let n_cols = cols.len();
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            data.extend(cols.iter().map(|c| c[i]));
        }
        Self::checked(names, data, n_rows, intercept)
    }

    /// Rows are used as given; `intercept` only records whether one of the
    /// columns is a constant term (it affects how R² is computed).
    pub fn from_rows<S: Into<String>>(
        names: Vec<S>,
        rows: &[Vec<f64>],
        intercept: bool,
    ) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut data = Vec::with_capacity(rows.len() * names.len());
        for r in rows {
            if r.len() != names.len() {
                return Err(RegressionError::DimensionMismatch {
                    expected: names.len(),
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::checked(names, data, rows.len(), intercept)
    }

    fn checked(names: Vec<String>, data: Vec<f64>, n_rows: usize, intercept: bool) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(RegressionError::NonFinite);
        }
        Ok(Self {
            names,
            data,
            n_rows,
            intercept,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.data[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// `Xᵀv` for a vector of length `n_rows`.
    pub fn t_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols()];
        for (row, &vi) in self.rows().zip(v) {
            for (o, &x) in out.iter_mut().zip(row) {
                *o += x * vi;
            }
        }
        out
    }

    /// `Xb` for a coefficient vector of length `n_cols`.
    pub fn mul(&self, b: &[f64]) -> Vec<f64> {
        self.rows().map(|r| dot(r, b)).collect()
    }

    fn gram(&self) -> Vec<f64> {
        let p = self.n_cols();
        let mut g = vec![0.0; p * p];
        for row in self.rows() {
            for i in 0..p {
                for j in 0..=i {
                    g[i * p + j] += row[i] * row[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                g[j * p + i] = g[i * p + j];
            }
        }
        g
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Standard errors, t statistics and two-sided p-values. Absent when the
/// fit has no residual degrees of freedom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inference {
    /// `σ̂² = εᵀε / dof`
    pub sigma2: f64,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    /// Centered R² when the design has an intercept, uncentered otherwise.
    pub r_squared: f64,
    pub dof: usize,
    pub inference: Option<Inference>,
}

impl RegressionFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coefficients[i])
    }

    pub fn inference(&self) -> Result<&Inference> {
        self.inference
            .as_ref()
            .ok_or(RegressionError::Underdetermined)
    }

    /// `{coefficients: {name: value}, r_squared, p_values: {name: value}, dof}`
    /// with values rounded to six decimals. `p_values` is empty when
    /// inference is unavailable.
    pub fn to_json(&self) -> serde_json::Value {
        let coefficients: BTreeMap<&str, f64> = self
            .names
            .iter()
            .map(String::as_str)
            .zip(self.coefficients.iter().map(|&b| round6(b)))
            .collect();
        let p_values: BTreeMap<&str, f64> = match &self.inference {
            Some(inf) => self
                .names
                .iter()
                .map(String::as_str)
                .zip(inf.p_values.iter().map(|&p| round6(p)))
                .collect(),
            None => BTreeMap::new(),
        };
        serde_json::json!({
            "coefficients": coefficients,
            "r_squared": round6(self.r_squared),
            "p_values": p_values,
            "dof": self.dof,
        })
    }
}

fn r_squared(y: &[f64], ssr: f64, centered: bool) -> f64 {
    let total = if centered {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(1.0);
    if total <= f64::EPSILON * scale {
        // Constant response: a perfect fit explains all of it.
        return if ssr <= f64::EPSILON * scale {
            1.0
        } else {
            0.0
        };
    }
    (1.0 - ssr / total).clamp(0.0, 1.0)
}

/// Least squares via the normal equations `XᵀXβ = Xᵀy`, solved by a
/// diagonally scaled Cholesky factorization with one round of iterative
/// refinement.
pub fn fit_ols(x: &DesignMatrix, y: &[f64]) -> Result<RegressionFit> {
    let n = x.n_rows();
    let p = x.n_cols();
    if y.len() != n {
        return Err(RegressionError::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(RegressionError::NonFinite);
    }
    if p == 0 {
        return Err(RegressionError::DegenerateInput(
            "design has no columns".into(),
        ));
    }
    let chol = ScaledCholesky::factor(&x.gram(), p).map_err(|linalg::Singular(j)| {
        RegressionError::RankDeficient {
            column: x.names()[j].clone(),
        }
    })?;

    let mut beta = chol.solve(&x.t_mul(y));
    let resid =
        |b: &[f64]| -> Vec<f64> { y.iter().zip(x.mul(b)).map(|(yi, fi)| yi - fi).collect() };
    let correction = chol.solve(&x.t_mul(&resid(&beta)));
    for (b, d) in beta.iter_mut().zip(&correction) {
        *b += d;
    }

    let fitted = x.mul(&beta);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let dof = n - p;
    let inference = (dof > 0).then(|| {
        let sigma2 = ssr / dof as f64;
        let std_errors: Vec<f64> = chol
            .inverse_diagonal()
            .iter()
            .map(|v| (sigma2 * v).max(0.0).sqrt())
            .collect();
        let t_stats: Vec<f64> = beta
            .iter()
            .zip(&std_errors)
            .map(|(b, se)| if *b == 0.0 { 0.0 } else { b / se })
            .collect();
        let p_values = t_stats
            .iter()
            .map(|t| (2.0 * special::t_sf(t.abs(), dof as f64)).min(1.0))
            .collect();
        Inference {
            sigma2,
            std_errors,
            t_stats,
            p_values,
        }
    });

    Ok(RegressionFit {
        names: x.names().to_vec(),
        coefficients: beta,
        r_squared: r_squared(y, ssr, x.has_intercept()),
        residuals,
        fitted,
        dof,
        inference,
    })
}

pub fn predict(fit: &RegressionFit, row: &[f64]) -> Result<f64> {
    if row.len() != fit.coefficients.len() {
        return Err(RegressionError::DimensionMismatch {
            expected: fit.coefficients.len(),
            got: row.len(),
        });
    }
    Ok(dot(&fit.coefficients, row))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendFit {
    /// Response units per year.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl TrendFit {
    pub fn at(&self, year: f64) -> f64 {
        self.intercept + self.slope * year
    }
}

/// Simple least-squares line of `values` on `years`, via centered sums.
pub fn fit_trend(years: &[i32], values: &[f64]) -> Result<TrendFit> {
    if years.len() != values.len() {
        return Err(RegressionError::DimensionMismatch {
            expected: years.len(),
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(RegressionError::NonFinite);
    }
    if years.len() < 2 || years.iter().all(|&y| y == years[0]) {
        return Err(RegressionError::DegenerateInput(
            "need at least two distinct years".into(),
        ));
    }
    let n = years.len() as f64;
    // Integer sums keep the year mean exact.
    let year_sum: i64 = years.iter().map(|&y| y as i64).sum();
    let mean_year = year_sum as f64 / n;
    let mean_value = values.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&yr, &v) in years.iter().zip(values) {
        let dx = (yr as i64 * years.len() as i64 - year_sum) as f64 / n;
        let dy = v - mean_value;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = mean_value - slope * mean_year;
    let ssr = (syy - slope * sxy).max(0.0);
    Ok(TrendFit {
        slope,
        intercept,
        r_squared: r_squared(values, ssr, true),
    })
}

/// One-sided survival probability `P(T > t)` of Student's t distribution.
pub fn student_t_sf(t: f64, dof: u64) -> Result<f64> {
    if dof == 0 {
        return Err(RegressionError::InvalidDof(dof));
    }
    Ok(special::t_sf(t, dof as f64))
}
