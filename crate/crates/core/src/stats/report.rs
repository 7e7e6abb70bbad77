//! Plain-text and CSV renderings of the correlation table and the model
//! comparison table.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::features::{column_label, ClientFeatureRow};
use crate::ledger::{HighRisk, PartyId};
use crate::stats::correlation::CorrelationReport;
use crate::stats::logit::LogitModel;

/// `.166`, `-.305`, `1`: coefficients printed without a leading zero.
pub fn format_coefficient(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    let s = if let Some(rest) = s.strip_prefix("-0.") {
        format!("-.{rest}")
    } else if let Some(rest) = s.strip_prefix("0.") {
        format!(".{rest}")
    } else {
        s
    };
    if s.trim_start_matches('-').trim_start_matches('.').chars().all(|c| c == '0') {
        // Avoid "-.000".
        return format!(".{}", "0".repeat(decimals));
    }
    s
}

fn correlation_cell(report: &CorrelationReport, i: usize, j: usize) -> String {
    if i == j {
        return "1".into();
    }
    match (report.matrix[i][j], report.stars(i, j)) {
        (Some(r), Some(stars)) => format!("{}{}", format_coefficient(r, 3), stars.as_str()),
        _ => "NA".into(),
    }
}

/// Lower triangle, one row per column, with significance stars.
pub fn write_correlation_csv<W: Write>(writer: W, report: &CorrelationReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["variable".to_string()];
    header.extend((1..=report.columns.len()).map(|i| i.to_string()));
    w.write_record(&header)?;
    for i in 0..report.columns.len() {
        let mut rec = vec![format!("{}. {}", i + 1, report.columns[i])];
        for j in 0..report.columns.len() {
            rec.push(if j <= i { correlation_cell(report, i, j) } else { String::new() });
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<correlations>", e))?;
    Ok(())
}

pub fn render_correlation_text(report: &CorrelationReport) -> String {
    let k = report.columns.len();
    let labels: Vec<String> = (0..k)
        .map(|i| format!("{:>2}. {}", i + 1, column_label(&report.columns[i])))
        .collect();
    let label_width = labels.iter().map(String::len).max().unwrap_or(0);
    let cells: Vec<Vec<String>> = (0..k)
        .map(|i| (0..=i).map(|j| correlation_cell(report, i, j)).collect())
        .collect();
    let cell_width = cells.iter().flatten().map(String::len).max().unwrap_or(1).max(2);

    let mut out = String::new();
    let _ = writeln!(out, "Pearson correlations (n = {}; * p < .05, ** p < .01)", report.n);
    let _ = write!(out, "{:label_width$}", "");
    for j in 0..k {
        let _ = write!(out, " {:>cell_width$}", j + 1);
    }
    out.push('\n');
    for (label, row) in labels.iter().zip(&cells) {
        let _ = write!(out, "{label:label_width$}");
        for cell in row {
            let _ = write!(out, " {cell:>cell_width$}");
        }
        out.push('\n');
    }
    out
}

fn model_rows(models: &[LogitModel]) -> Vec<String> {
    let mut rows: Vec<String> = vec!["(intercept)".into()];
    for m in models {
        for p in &m.predictors {
            if !rows.contains(p) {
                rows.push(p.clone());
            }
        }
    }
    rows
}

fn coefficient_cell(model: &LogitModel, row: &str) -> String {
    let idx = if row == "(intercept)" {
        Some(0)
    } else {
        model.predictors.iter().position(|p| p == row).map(|i| i + 1)
    };
    match idx {
        Some(i) => format!("{}{}", format_coefficient(model.coefficients[i], 3), model.stars()[i]),
        None => String::new(),
    }
}

fn summary_rows(model: &LogitModel) -> [(&'static str, String); 5] {
    [
        ("Observations", model.n.to_string()),
        ("Log likelihood", format!("{:.3}", model.log_likelihood)),
        ("McFadden R2", format_coefficient(model.mcfadden_r2, 3)),
        ("AIC", format!("{:.3}", model.aic)),
        ("BIC", format!("{:.3}", model.bic)),
    ]
}

/// Coefficients side by side, then fit statistics.
pub fn write_model_table_csv<W: Write>(writer: W, models: &[LogitModel]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["term".to_string()];
    header.extend(models.iter().map(|m| m.name.clone()));
    w.write_record(&header)?;
    for row in model_rows(models) {
        let mut rec = vec![row.clone()];
        rec.extend(models.iter().map(|m| coefficient_cell(m, &row)));
        w.write_record(&rec)?;
    }
    for s in 0..5 {
        let mut rec = vec![summary_rows(&models[0])[s].0.to_string()];
        rec.extend(models.iter().map(|m| summary_rows(m)[s].1.clone()));
        w.write_record(&rec)?;
    }
    let mut rec = vec!["Converged".to_string()];
    rec.extend(models.iter().map(|m| m.converged.to_string()));
    w.write_record(&rec)?;
    w.flush().map_err(|e| Error::io("<models>", e))?;
    Ok(())
}

pub fn render_model_table_text(models: &[LogitModel]) -> String {
    let mut lines: Vec<Vec<String>> = Vec::new();
    let mut header = vec![String::new()];
    header.extend(models.iter().map(|m| m.name.clone()));
    lines.push(header);
    for row in model_rows(models) {
        let mut line = vec![if row == "(intercept)" { "Intercept".into() } else { column_label(&row).to_string() }];
        line.extend(models.iter().map(|m| coefficient_cell(m, &row)));
        lines.push(line);
    }
    if let Some(first) = models.first() {
        for s in 0..5 {
            let mut line = vec![summary_rows(first)[s].0.to_string()];
            line.extend(models.iter().map(|m| summary_rows(m)[s].1.clone()));
            lines.push(line);
        }
    }
    let cols = models.len() + 1;
    let widths: Vec<usize> = (0..cols)
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::from("Logistic regression on High Risk (*** p < .001, ** p < .01, * p < .05)\n");
    for line in &lines {
        let _ = write!(out, "{:<w$}", line[0], w = widths[0]);
        for c in 1..cols {
            let _ = write!(out, "  {:>w$}", line[c], w = widths[c]);
        }
        out.push('\n');
    }
    for m in models.iter().filter(|m| !m.converged) {
        let _ = writeln!(
            out,
            "note: {} did not converge: {}",
            m.name,
            m.diagnostic.as_deref().unwrap_or("no diagnostic")
        );
    }
    out
}

/// `rank,party_id,probability,high_risk` for a ranking from
/// [`rank_clients`](crate::stats::rank_clients).
pub fn write_ranking<W: Write>(writer: W, ranked: &[(PartyId, f64)], rows: &[ClientFeatureRow]) -> Result<()> {
    let labels: HashMap<&PartyId, HighRisk> = rows.iter().map(|r| (&r.party_id, r.high_risk)).collect();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["rank", "party_id", "probability", "high_risk"])?;
    for (i, (id, p)) in ranked.iter().enumerate() {
        let label = match labels.get(id) {
            Some(HighRisk::Yes) => "1",
            Some(HighRisk::No) => "0",
            _ => "",
        };
        w.write_record([(i + 1).to_string(), id.to_string(), p.to_string(), label.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<ranking>", e))?;
    Ok(())
}
