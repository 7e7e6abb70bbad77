//! Ledger to feature rows: build the four networks, filter, compute metrics.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::{assemble_features, ClientFeatureRow};
use crate::ledger::Ledger;
use crate::metrics::missing_id;
use crate::network::{
    build_attribute_network, build_tacit_network, build_transactions_network, Collapse, NetworkKind, RiskNetwork,
};
use crate::scoring::ArcCombine;
use crate::tables::RiskTables;

pub const DEFAULT_HIGH_RISK_THRESHOLD: f64 = 2.5;

/// Per-network high-risk cut: arcs weighted below it are dropped before
/// metrics are computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub transactions: f64,
    pub sector: f64,
    pub geo: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds::uniform(DEFAULT_HIGH_RISK_THRESHOLD)
    }
}

impl Thresholds {
    pub fn uniform(t: f64) -> Self {
        Thresholds {
            transactions: t,
            sector: t,
            geo: t,
        }
    }

    pub fn get(&self, kind: NetworkKind) -> f64 {
        match kind {
            NetworkKind::Transactions => self.transactions,
            NetworkKind::Sector => self.sector,
            NetworkKind::Geo => self.geo,
            NetworkKind::Tacit => f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    pub thresholds: Thresholds,
    pub collapse: Collapse,
    pub arc_combine: ArcCombine,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    /// Finalized networks before filtering: transactions, sector, geo.
    pub networks: Vec<RiskNetwork>,
    /// The same networks after the high-risk filter.
    pub filtered: Vec<RiskNetwork>,
    pub tacit: RiskNetwork,
    pub features: Vec<ClientFeatureRow>,
}

impl Analysis {
    pub fn network(&self, kind: NetworkKind) -> Option<&RiskNetwork> {
        if kind == NetworkKind::Tacit {
            return Some(&self.tacit);
        }
        self.networks.iter().find(|n| n.kind() == kind)
    }

    pub fn filtered_network(&self, kind: NetworkKind) -> Option<&RiskNetwork> {
        self.filtered.iter().find(|n| n.kind() == kind)
    }
}

/// Run the network and metric stages on a ledger that has already passed
/// the recording threshold. Every party of the transactions network gets a
/// feature row; metrics come from the filtered networks.
pub fn analyze(ledger: &Ledger, tables: &RiskTables, options: &AnalysisOptions) -> Result<Analysis> {
    let transactions = build_transactions_network(&ledger.records, tables);
    let sector = build_attribute_network(ledger, tables, NetworkKind::Sector, options.arc_combine, options.collapse)?;
    let geo = build_attribute_network(ledger, tables, NetworkKind::Geo, options.arc_combine, options.collapse)?;
    let tacit = build_tacit_network(&ledger.records);
    let networks = vec![transactions, sector, geo];
    let filtered: Vec<RiskNetwork> = networks
        .iter()
        .map(|n| n.filtered(options.thresholds.get(n.kind())))
        .collect();
    let missing = missing_id(&ledger.records);
    let refs: Vec<&RiskNetwork> = filtered.iter().collect();
    let features = assemble_features(networks[0].nodes(), &refs, &missing, &ledger.parties);
    Ok(Analysis {
        networks,
        filtered,
        tacit,
        features,
    })
}
