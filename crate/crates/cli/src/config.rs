//! Run configuration: a TOML file whose keys mirror the command-line flags.
//! Flags win over the file.

use std::fs;
use std::path::{Path, PathBuf};

use amlnet_core::network::Collapse;
use amlnet_core::pipeline::{AnalysisOptions, Thresholds};
use amlnet_core::scoring::ArcCombine;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    /// Risk tables TOML, relative to the config file.
    pub tables: Option<PathBuf>,
    /// Synthetic scenario TOML, relative to the config file.
    pub scenario: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Smurfing aggregation window in days.
    pub window: Option<u32>,
    /// High-risk arc threshold applied to every network.
    pub threshold: Option<f64>,
    /// Per-network overrides of `threshold`.
    pub thresholds: Option<ThresholdOverrides>,
    pub collapse: Option<Collapse>,
    pub arc_combine: Option<ArcCombine>,
    pub standardize: Option<bool>,
    pub max_iter: Option<usize>,
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdOverrides {
    pub transactions: Option<f64>,
    pub sector: Option<f64>,
    pub geo: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.tables = cfg.tables.map(|p| base.join(p));
        cfg.scenario = cfg.scenario.map(|p| base.join(p));
        Ok(cfg)
    }

    /// Analysis options after applying command-line overrides.
    pub fn analysis(
        &self,
        threshold: Option<f64>,
        collapse: Option<Collapse>,
        arc_combine: Option<ArcCombine>,
    ) -> Result<AnalysisOptions, CliError> {
        let mut thresholds = Thresholds::uniform(threshold.or(self.threshold).unwrap_or(Thresholds::default().geo));
        if threshold.is_none() {
            if let Some(o) = &self.thresholds {
                thresholds.transactions = o.transactions.unwrap_or(thresholds.transactions);
                thresholds.sector = o.sector.unwrap_or(thresholds.sector);
                thresholds.geo = o.geo.unwrap_or(thresholds.geo);
            }
        }
        for t in [thresholds.transactions, thresholds.sector, thresholds.geo] {
            if !t.is_finite() {
                return Err(CliError::Validation(format!("threshold must be a finite number, got {t}")));
            }
        }
        Ok(AnalysisOptions {
            thresholds,
            collapse: collapse.or(self.collapse).unwrap_or_default(),
            arc_combine: arc_combine.or(self.arc_combine).unwrap_or_default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let cfg: FileConfig = toml::from_str(
            "threshold = 2.0\ncollapse = \"max\"\n[thresholds]\nsector = 3.0\n",
        )
        .unwrap();
        let a = cfg.analysis(None, None, None).unwrap();
        assert_eq!(a.thresholds.transactions, 2.0);
        assert_eq!(a.thresholds.sector, 3.0);
        assert_eq!(a.collapse, Collapse::Max);
        let b = cfg.analysis(Some(1.0), Some(Collapse::Sum), Some(ArcCombine::Max)).unwrap();
        assert_eq!(b.thresholds, Thresholds::uniform(1.0));
        assert_eq!(b.collapse, Collapse::Sum);
        assert_eq!(b.arc_combine, ArcCombine::Max);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("thresold = 1.0\n").is_err());
    }
}
