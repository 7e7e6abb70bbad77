//! Maximum-likelihood logistic regression by damped Newton-Raphson (IRLS).

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::features::ClientFeatureRow;
use crate::ledger::PartyId;

pub const PAPER_MODELS_JSON: &str = include_str!("../../data/paper_models.json");

pub const SCORE_TOLERANCE: f64 = 1e-8;
pub const STEP_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 100;

/// Relative tolerance under which a predictor column is treated as a linear
/// combination of the columns before it.
const COLLINEARITY_TOLERANCE: f64 = 1e-9;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Bernoulli log-likelihood of a design matrix (intercept column included)
/// and 0/1 responses.
#[derive(Debug, Clone)]
pub struct LogitProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct NewtonFit {
    pub beta: DVector<f64>,
    pub log_likelihood: f64,
    pub covariance: Option<DMatrix<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub diagnostic: Option<String>,
}

impl LogitProblem {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Self {
        assert_eq!(x.nrows(), y.len());
        LogitProblem { x, y }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn log_likelihood(&self, beta: &DVector<f64>) -> f64 {
        let eta = &self.x * beta;
        eta.iter().zip(self.y.iter()).map(|(&e, &y)| y * e - softplus(e)).sum()
    }

    /// Score vector `X'(y - p)`.
    pub fn gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        let eta = &self.x * beta;
        let resid = DVector::from_iterator(self.n(), eta.iter().zip(self.y.iter()).map(|(&e, &y)| y - sigmoid(e)));
        self.x.transpose() * resid
    }

    /// Fisher information `X' W X` with `W = diag(p (1 - p))`.
    pub fn information(&self, beta: &DVector<f64>) -> DMatrix<f64> {
        let eta = &self.x * beta;
        let mut xw = self.x.clone();
        for (i, &e) in eta.iter().enumerate() {
            let p = sigmoid(e);
            let w = p * (1.0 - p);
            xw.row_mut(i).scale_mut(w);
        }
        self.x.transpose() * xw
    }

    fn solve(info: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
        if let Some(ch) = info.clone().cholesky() {
            return Some(ch.solve(g));
        }
        info.clone().lu().solve(g)
    }

    /// Damped Newton iterations from zero. Converges when the largest score
    /// component drops below 1e-8 or the applied step below 1e-10 (infinity
    /// norm). Steps that keep their length while the linear predictor
    /// saturates signal separation; the fit is then reported unconverged.
    pub fn fit(&self, max_iter: usize) -> NewtonFit {
        let mut beta = DVector::zeros(self.k());
        let mut ll = self.log_likelihood(&beta);
        let mut converged = false;
        let mut diagnostic = None;
        let mut iterations = 0;
        let mut prev_step = f64::INFINITY;
        let mut stalled = 0;

        for iter in 1..=max_iter {
            iterations = iter;
            let g = self.gradient(&beta);
            let info = self.information(&beta);
            let Some(step) = Self::solve(&info, &g) else {
                diagnostic = Some(format!(
                    "information matrix singular at iteration {iter}; fitted probabilities saturated (separation)"
                ));
                break;
            };
            let step_norm = step.amax();
            if g.amax() < SCORE_TOLERANCE {
                if step_norm > 1e-3 {
                    diagnostic = Some(format!(
                        "score vanished but Newton step is still {step_norm:.3e}: coefficients diverging (separation)"
                    ));
                } else {
                    converged = true;
                }
                break;
            }

            let mut t = 1.0;
            let mut candidate = &beta + &step;
            let mut cand_ll = self.log_likelihood(&candidate);
            let mut halvings = 0;
            // A NaN candidate counts as a decrease.
            let floor = ll - 1e-12 * ll.abs().max(1.0);
            while cand_ll.partial_cmp(&floor).is_none_or(|o| o.is_lt()) && halvings < 40 {
                t *= 0.5;
                halvings += 1;
                candidate = &beta + &step * t;
                cand_ll = self.log_likelihood(&candidate);
            }
            let applied = step_norm * t;
            beta = candidate;
            ll = cand_ll;
            if applied < STEP_TOLERANCE {
                converged = true;
                break;
            }

            let max_eta = (&self.x * &beta).amax();
            if step_norm > 0.5 * prev_step && max_eta > 15.0 {
                stalled += 1;
            } else {
                stalled = 0;
            }
            if stalled >= 8 {
                diagnostic = Some(format!(
                    "Newton steps not contracting after {iter} iterations with |eta| up to {max_eta:.1}: \
                     coefficients diverging (separation)"
                ));
                break;
            }
            prev_step = step_norm;
        }
        if !converged && diagnostic.is_none() {
            diagnostic = Some(format!("no convergence within {max_iter} iterations"));
        }
        let covariance = converged
            .then(|| self.information(&beta).try_inverse())
            .flatten();
        NewtonFit {
            beta,
            log_likelihood: ll,
            covariance,
            converged,
            iterations,
            diagnostic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Fit on z-scored predictors; coefficients are reported on both scales.
    pub standardize: bool,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            standardize: false,
            max_iter: MAX_ITERATIONS,
        }
    }
}

/// A fitted or published logit model. `coefficients[0]` is the intercept
/// and the rest follow `predictors`, always on the raw predictor scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitModel {
    pub name: String,
    pub predictors: Vec<String>,
    pub coefficients: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardized_coefficients: Option<Vec<f64>>,
    /// Published significance markers, for models without standard errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient_stars: Option<Vec<String>>,
    pub n: usize,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub mcfadden_r2: f64,
    pub aic: f64,
    pub bic: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_number: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// AIC, BIC and McFadden's R² from the two log-likelihoods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitStatistics {
    pub aic: f64,
    pub bic: f64,
    pub mcfadden_r2: f64,
}

impl FitStatistics {
    /// `k` counts every coefficient including the intercept.
    pub fn new(log_likelihood: f64, null_log_likelihood: f64, k: usize, n: usize) -> Self {
        let k = k as f64;
        FitStatistics {
            aic: 2.0 * k - 2.0 * log_likelihood,
            bic: k * (n as f64).ln() - 2.0 * log_likelihood,
            mcfadden_r2: 1.0 - log_likelihood / null_log_likelihood,
        }
    }

    /// The BIC implied by a reported AIC: recover the log-likelihood from
    /// `AIC = 2k - 2 logL` and apply `BIC = k ln n - 2 logL`.
    pub fn bic_from_aic(aic: f64, k: usize, n: usize) -> f64 {
        let log_likelihood = k as f64 - aic / 2.0;
        k as f64 * (n as f64).ln() - 2.0 * log_likelihood
    }
}

impl LogitModel {
    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    /// Two-sided Wald p-values, when standard errors are known.
    pub fn p_values(&self) -> Option<Vec<f64>> {
        let se = self.std_errors.as_ref()?;
        let normal = Normal::standard();
        Some(
            self.coefficients
                .iter()
                .zip(se)
                .map(|(b, s)| 2.0 * normal.sf((b / s).abs()))
                .collect(),
        )
    }

    /// `***` p<.001, `**` p<.01, `*` p<.05 per coefficient.
    pub fn stars(&self) -> Vec<String> {
        if let Some(p) = self.p_values() {
            return p
                .into_iter()
                .map(|p| {
                    if p < 0.001 {
                        "***"
                    } else if p < 0.01 {
                        "**"
                    } else if p < 0.05 {
                        "*"
                    } else {
                        ""
                    }
                    .to_string()
                })
                .collect();
        }
        self.coefficient_stars
            .clone()
            .unwrap_or_else(|| vec![String::new(); self.k()])
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Parse and check a model file's contents.
    pub fn from_json(text: &str) -> Result<Self> {
        let model: LogitModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn validate(&self) -> Result<()> {
        if self.coefficients.len() != self.predictors.len() + 1 {
            return Err(Error::Model(format!(
                "`{}` has {} predictors but {} coefficients (expected intercept + one per predictor)",
                self.name,
                self.predictors.len(),
                self.coefficients.len()
            )));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Model(format!("`{}` has non-finite coefficients", self.name)));
        }
        Ok(())
    }
}

/// Models 1-4 with their published coefficients (three decimals).
pub fn paper_models() -> Vec<LogitModel> {
    serde_json::from_str(PAPER_MODELS_JSON).expect("bundled paper_models.json")
}

pub fn paper_model(name: &str) -> Option<LogitModel> {
    paper_models().into_iter().find(|m| m.name == name)
}

/// Columns of `x` (after the first) that are numerically a linear
/// combination of the columns before them.
fn collinear_columns(x: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut bad = Vec::new();
    for (j, col) in x.column_iter().enumerate() {
        let mut v: DVector<f64> = col.into_owned();
        let norm0 = v.norm();
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        // Second pass for numerical stability.
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let norm = v.norm();
        if norm0 == 0.0 || norm <= COLLINEARITY_TOLERANCE * norm0 {
            bad.push(names[j].clone());
        } else {
            basis.push(v / norm);
        }
    }
    bad
}

/// Condition number of the design matrix with unit-length columns.
pub fn condition_number(x: &DMatrix<f64>) -> f64 {
    let mut scaled = x.clone();
    for mut col in scaled.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    let sv = scaled.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn design(rows: &[&ClientFeatureRow], predictors: &[String]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = rows.len();
    let k = predictors.len() + 1;
    let mut x = DMatrix::zeros(n, k);
    let mut y = DVector::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        x[(i, 0)] = 1.0;
        for (j, name) in predictors.iter().enumerate() {
            x[(i, j + 1)] = row.get(name).ok_or_else(|| Error::MissingPredictor(name.clone()))?;
        }
        y[i] = row.high_risk.as_f64().expect("fit rows are labeled");
    }
    Ok((x, y))
}

/// Fit a logit model on the labeled rows. Unlabeled rows are ignored.
pub fn fit_logit(
    name: &str,
    rows: &[ClientFeatureRow],
    predictors: &[String],
    options: FitOptions,
) -> Result<LogitModel> {
    let fit_rows: Vec<&ClientFeatureRow> = rows.iter().filter(|r| r.is_fit_eligible()).collect();
    let n = fit_rows.len();
    if n < 3 || n <= predictors.len() + 1 {
        return Err(Error::InsufficientData(format!(
            "{n} labeled rows cannot fit {} coefficients",
            predictors.len() + 1
        )));
    }
    if predictors.iter().any(|p| p == "high_risk") {
        return Err(Error::Model("the label cannot be a predictor".into()));
    }
    let (x_raw, y) = design(&fit_rows, predictors)?;
    let positives = y.iter().filter(|&&v| v == 1.0).count();
    if positives == 0 || positives == n {
        return Err(Error::InsufficientData(format!(
            "all {n} labeled rows share one outcome; the model is not identifiable"
        )));
    }

    let mut names = vec!["(intercept)".to_string()];
    names.extend(predictors.iter().cloned());
    let collinear = collinear_columns(&x_raw, &names);
    if !collinear.is_empty() {
        return Err(Error::RankDeficient(collinear));
    }
    let cond = condition_number(&x_raw);

    // Optional z-scoring: raw = transform * standardized coefficients.
    let k = names.len();
    let mut x = x_raw.clone();
    let mut transform = DMatrix::<f64>::identity(k, k);
    if options.standardize {
        for j in 1..k {
            let col = x_raw.column(j);
            let mean = col.mean();
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
            for i in 0..n {
                x[(i, j)] = (x_raw[(i, j)] - mean) / sd;
            }
            transform[(j, j)] = 1.0 / sd;
            transform[(0, j)] = -mean / sd;
        }
    }

    let fit = LogitProblem::new(x, y.clone()).fit(options.max_iter);
    let null = LogitProblem::new(DMatrix::from_element(n, 1, 1.0), y).fit(options.max_iter);
    if !null.converged {
        return Err(Error::Numerical("intercept-only model did not converge".into()));
    }
    let raw_beta = &transform * &fit.beta;
    let std_errors = fit.covariance.as_ref().map(|cov| {
        let raw_cov = &transform * cov * transform.transpose();
        raw_cov.diagonal().iter().map(|v| v.sqrt()).collect()
    });
    let stats = FitStatistics::new(fit.log_likelihood, null.log_likelihood, k, n);

    Ok(LogitModel {
        name: name.to_string(),
        predictors: predictors.to_vec(),
        coefficients: raw_beta.iter().copied().collect(),
        std_errors,
        standardized_coefficients: options.standardize.then(|| fit.beta.iter().copied().collect()),
        coefficient_stars: None,
        n,
        log_likelihood: fit.log_likelihood,
        null_log_likelihood: null.log_likelihood,
        mcfadden_r2: stats.mcfadden_r2,
        aic: stats.aic,
        bic: stats.bic,
        converged: fit.converged,
        iterations: Some(fit.iterations),
        condition_number: Some(cond),
        diagnostic: fit.diagnostic,
    })
}

/// Fitted probability `sigmoid(b0 + sum b_j x_j)` for one row.
pub fn predict(model: &LogitModel, row: &ClientFeatureRow) -> Result<f64> {
    let mut z = model.intercept();
    for (name, b) in model.predictors.iter().zip(&model.coefficients[1..]) {
        let v = row.get(name).ok_or_else(|| Error::MissingPredictor(name.clone()))?;
        z += b * v;
    }
    Ok(sigmoid(z))
}

/// Rows by descending probability, ties broken by party id; at most `top_k`.
pub fn rank_clients(model: &LogitModel, rows: &[ClientFeatureRow], top_k: usize) -> Result<Vec<(PartyId, f64)>> {
    let mut scored = rows
        .iter()
        .map(|r| Ok((r.party_id.clone(), predict(model, r)?)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| match b.1.partial_cmp(&a.1) {
        Some(Ordering::Equal) | None => a.0.cmp(&b.0),
        Some(o) => o,
    });
    scored.truncate(top_k);
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::HighRisk;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn row(id: &str, label: HighRisk, missing: u32, txn_all: f64) -> ClientFeatureRow {
        let mut r = ClientFeatureRow::zeros(id.into());
        r.high_risk = label;
        r.missing_id = missing;
        r.transactions.all_degree = txn_all;
        r
    }

    fn simulated(n: usize, beta: &[f64], seed: u64) -> LogitProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = beta.len();
        let mut x = DMatrix::zeros(n, k);
        let mut y = DVector::zeros(n);
        for i in 0..n {
            x[(i, 0)] = 1.0;
            for j in 1..k {
                x[(i, j)] = rng.random::<f64>() * 2.0 - 1.0;
            }
            let z: f64 = (0..k).map(|j| x[(i, j)] * beta[j]).sum();
            y[i] = if rng.random::<f64>() < sigmoid(z) { 1.0 } else { 0.0 };
        }
        LogitProblem::new(x, y)
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(-2.063) - 0.112_745_379_667_900_8).abs() < 1e-15);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        for z in [-30.0, -3.0, 0.7, 12.0] {
            assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let prob = simulated(200, &[-0.3, 0.8, -1.2], 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let beta = DVector::from_fn(3, |_, _| rng.random::<f64>() * 4.0 - 2.0);
            let g = prob.gradient(&beta);
            for j in 0..3 {
                let h = 1e-5;
                let mut up = beta.clone();
                up[j] += h;
                let mut dn = beta.clone();
                dn[j] -= h;
                let fd = (prob.log_likelihood(&up) - prob.log_likelihood(&dn)) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn fit_statistics_identities() {
        let s = FitStatistics::new(-78.0855, -116.026, 6, 288);
        assert!((s.aic - 168.171).abs() < 1e-9);
        assert!((FitStatistics::bic_from_aic(206.802, 2, 288) - 214.128).abs() < 0.01);
        assert!((FitStatistics::bic_from_aic(168.171, 6, 288) - 190.150).abs() < 0.01);
    }

    #[test]
    fn null_model_closed_form() {
        let prob = simulated(300, &[0.4], 5);
        let fit = prob.fit(100);
        assert!(fit.converged);
        let n = 300.0;
        let pbar = prob.y.sum() / n;
        let closed = n * (pbar * pbar.ln() + (1.0 - pbar) * (1.0 - pbar).ln());
        assert!((fit.log_likelihood - closed).abs() < 1e-9);
    }

    #[test]
    fn separation_is_reported() {
        let rows: Vec<_> = (0..20)
            .map(|i| {
                let label = if i < 10 { HighRisk::No } else { HighRisk::Yes };
                row(&format!("p{i:02}"), label, 0, i as f64)
            })
            .collect();
        let m = fit_logit("sep", &rows, &["transactions_all_degree".into()], FitOptions::default()).unwrap();
        assert!(!m.converged);
        assert!(m.diagnostic.unwrap().contains("separation"));
    }

    #[test]
    fn rank_deficiency_names_columns() {
        let rows: Vec<_> = (0..20)
            .map(|i| {
                let label = if i % 3 == 0 { HighRisk::Yes } else { HighRisk::No };
                let mut r = row(&format!("p{i:02}"), label, (i % 5) as u32, (i % 7) as f64);
                r.transactions.in_degree = r.transactions.all_degree * 2.0;
                r
            })
            .collect();
        let err = fit_logit(
            "rd",
            &rows,
            &["transactions_all_degree".into(), "transactions_in_degree".into(), "geo_in_degree".into()],
            FitOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::RankDeficient(cols) => {
                assert_eq!(cols, vec!["transactions_in_degree".to_string(), "geo_in_degree".to_string()])
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn standardized_fit_agrees_with_raw() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<_> = (0..400)
            .map(|i| {
                let m = rng.random_range(0..6u32);
                let t = rng.random::<f64>() * 30.0;
                let z = -2.0 + 0.3 * f64::from(m) + 0.05 * t;
                let label = if rng.random::<f64>() < sigmoid(z) { HighRisk::Yes } else { HighRisk::No };
                row(&format!("p{i:03}"), label, m, t)
            })
            .collect();
        let preds = vec!["missing_id".to_string(), "transactions_all_degree".to_string()];
        let raw = fit_logit("raw", &rows, &preds, FitOptions::default()).unwrap();
        let std = fit_logit("std", &rows, &preds, FitOptions { standardize: true, ..Default::default() }).unwrap();
        assert!(raw.converged && std.converged);
        for (a, b) in raw.coefficients.iter().zip(&std.coefficients) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        for (a, b) in raw.std_errors.unwrap().iter().zip(std.std_errors.unwrap()) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!((raw.log_likelihood - std.log_likelihood).abs() < 1e-9);
        assert!(std.standardized_coefficients.is_some());
    }

    #[test]
    fn predict_and_rank() {
        let m4 = paper_model("model4").unwrap();
        let zero = ClientFeatureRow::zeros("z".into());
        assert!((predict(&m4, &zero).unwrap() - 0.1127).abs() < 1e-4);

        let mut flat = m4.clone();
        flat.coefficients = vec![0.0; flat.k()];
        let mut busy = zero.clone();
        busy.transactions.all_degree = 40.0;
        assert_eq!(predict(&flat, &busy).unwrap(), 0.5);
        assert!(predict(&m4, &busy).unwrap() > predict(&m4, &zero).unwrap());

        let mut missing = m4.clone();
        missing.predictors[0] = "nope".into();
        assert!(matches!(predict(&missing, &zero), Err(Error::MissingPredictor(_))));

        let rows = vec![row("b", HighRisk::Unknown, 0, 0.0), busy.clone(), row("a", HighRisk::No, 0, 0.0)];
        let ranked = rank_clients(&m4, &rows, 10).unwrap();
        assert_eq!(ranked.len(), 3);
        assert_eq!(ranked[0].0, "z".into());
        assert_eq!(ranked[1].0, "a".into());
        assert_eq!(ranked[2].0, "b".into());
        assert_eq!(rank_clients(&m4, &rows, 1).unwrap().len(), 1);
    }

    #[test]
    fn paper_models_are_consistent() {
        let models = paper_models();
        assert_eq!(models.len(), 4);
        for m in &models {
            m.validate().unwrap();
            let s = FitStatistics::new(m.log_likelihood, m.null_log_likelihood, m.k(), m.n);
            assert!((s.aic - m.aic).abs() < 1e-9, "{}", m.name);
            assert!((s.bic - m.bic).abs() < 0.01, "{}", m.name);
            assert!((s.mcfadden_r2 - m.mcfadden_r2).abs() < 5e-4, "{}", m.name);
        }
    }
}
