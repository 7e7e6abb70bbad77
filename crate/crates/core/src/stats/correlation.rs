use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::features::{ClientFeatureRow, COLUMNS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stars {
    None,
    /// p < .05
    One,
    /// p < .01
    Two,
}

impl Stars {
    pub fn from_p(p: f64) -> Self {
        if p < 0.01 {
            Stars::Two
        } else if p < 0.05 {
            Stars::One
        } else {
            Stars::None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
        }
    }
}

/// Pairwise Pearson correlations. Entries are `None` where a column is
/// constant and the correlation is undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub columns: Vec<String>,
    pub n: usize,
    pub matrix: Vec<Vec<Option<f64>>>,
    pub p_values: Vec<Vec<Option<f64>>>,
}

impl CorrelationReport {
    pub fn stars(&self, i: usize, j: usize) -> Option<Stars> {
        self.p_values[i][j].map(Stars::from_p)
    }
}

/// Centered two-pass Pearson coefficient, clamped to [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.is_empty() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value of `r` from the t distribution with `n - 2` degrees of freedom.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Correlation matrix over equally long columns.
pub fn pearson_matrix(names: &[String], columns: &[Vec<f64>]) -> Result<CorrelationReport> {
    assert_eq!(names.len(), columns.len());
    let n = columns.first().map_or(0, Vec::len);
    if n < 3 {
        return Err(Error::InsufficientData(format!("correlation needs at least 3 rows, got {n}")));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::InsufficientData("columns differ in length".into()));
    }
    let k = columns.len();
    let mut matrix = vec![vec![None; k]; k];
    let mut p_values = vec![vec![None; k]; k];
    for i in 0..k {
        for j in 0..=i {
            let r = if i == j {
                pearson(&columns[i], &columns[i]).map(|_| 1.0)
            } else {
                pearson(&columns[i], &columns[j])
            };
            let p = r.map(|r| correlation_p_value(r, n));
            matrix[i][j] = r;
            matrix[j][i] = r;
            p_values[i][j] = p;
            p_values[j][i] = p;
        }
    }
    Ok(CorrelationReport {
        columns: names.to_vec(),
        n,
        matrix,
        p_values,
    })
}

/// The twenty feature columns, correlated over the labeled rows.
pub fn correlation_report(rows: &[ClientFeatureRow]) -> Result<CorrelationReport> {
    let labeled: Vec<_> = rows.iter().filter(|r| r.is_fit_eligible()).collect();
    let columns: Vec<Vec<f64>> = (0..COLUMNS.len())
        .map(|c| labeled.iter().map(|r| r.values()[c].unwrap_or(f64::NAN)).collect())
        .collect();
    let names: Vec<String> = COLUMNS.iter().map(|s| s.to_string()).collect();
    pearson_matrix(&names, &columns)
}
