//! Per-client feature rows: six metrics on each analytic network, the
//! Missing Id control and the High Risk label.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{HighRisk, Party, PartyId};
use crate::metrics::{betweenness, closeness, network_constraint, weighted_degrees};
use crate::network::{NetworkKind, RiskNetwork};

/// Feature columns in reporting order. Column 1 is the label.
pub const COLUMNS: [&str; 20] = [
    "high_risk",
    "missing_id",
    "geo_in_degree",
    "geo_out_degree",
    "geo_all_degree",
    "geo_closeness",
    "geo_betweenness",
    "geo_constraint",
    "transactions_in_degree",
    "transactions_out_degree",
    "transactions_all_degree",
    "transactions_closeness",
    "transactions_betweenness",
    "transactions_constraint",
    "sector_in_degree",
    "sector_out_degree",
    "sector_all_degree",
    "sector_closeness",
    "sector_betweenness",
    "sector_constraint",
];

/// Human-readable labels for [`COLUMNS`], used by the text reports.
pub const COLUMN_LABELS: [&str; 20] = [
    "High Risk",
    "Missing Id",
    "In-degree Geographical Area",
    "Out-degree Geographical Area",
    "All-degree Geographical Area",
    "Closeness Geographical Area",
    "Betweenness Geographical Area",
    "Network Constraint Geographical Area",
    "Weighted In-degree Transactions",
    "Weighted Out-degree Transactions",
    "Weighted All-degree Transactions",
    "Closeness Transactions",
    "Betweenness Transactions",
    "Network Constraint Transactions",
    "In-degree Economic Sector",
    "Out-degree Economic Sector",
    "All-degree Economic Sector",
    "Closeness Economic Sector",
    "Betweenness Economic Sector",
    "Network Constraint Economic Sector",
];

pub fn column_label(name: &str) -> &str {
    COLUMNS
        .iter()
        .position(|c| *c == name)
        .map_or(name, |i| COLUMN_LABELS[i])
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkFeatures {
    pub in_degree: f64,
    pub out_degree: f64,
    pub all_degree: f64,
    pub closeness: f64,
    pub betweenness: f64,
    pub constraint: f64,
}

impl NetworkFeatures {
    fn values(&self) -> [f64; 6] {
        [
            self.in_degree,
            self.out_degree,
            self.all_degree,
            self.closeness,
            self.betweenness,
            self.constraint,
        ]
    }

    fn from_values(v: &[f64]) -> Self {
        NetworkFeatures {
            in_degree: v[0],
            out_degree: v[1],
            all_degree: v[2],
            closeness: v[3],
            betweenness: v[4],
            constraint: v[5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientFeatureRow {
    pub party_id: PartyId,
    pub high_risk: HighRisk,
    pub missing_id: u32,
    pub geo: NetworkFeatures,
    pub transactions: NetworkFeatures,
    pub sector: NetworkFeatures,
}

impl ClientFeatureRow {
    pub fn zeros(party_id: PartyId) -> Self {
        ClientFeatureRow {
            party_id,
            high_risk: HighRisk::Unknown,
            missing_id: 0,
            geo: NetworkFeatures::default(),
            transactions: NetworkFeatures::default(),
            sector: NetworkFeatures::default(),
        }
    }

    /// Rows with a known label take part in fitting and correlation.
    pub fn is_fit_eligible(&self) -> bool {
        self.high_risk.is_known()
    }

    /// Value of a feature column; `high_risk` is `None` when unlabeled.
    pub fn get(&self, column: &str) -> Option<f64> {
        let i = COLUMNS.iter().position(|c| *c == column)?;
        self.values()[i]
    }

    pub fn values(&self) -> [Option<f64>; 20] {
        let mut out = [None; 20];
        out[0] = self.high_risk.as_f64();
        out[1] = Some(f64::from(self.missing_id));
        for (block, feats) in [&self.geo, &self.transactions, &self.sector].into_iter().enumerate() {
            for (k, v) in feats.values().into_iter().enumerate() {
                out[2 + block * 6 + k] = Some(v);
            }
        }
        out
    }

    pub fn network(&self, kind: NetworkKind) -> Option<&NetworkFeatures> {
        match kind {
            NetworkKind::Geo => Some(&self.geo),
            NetworkKind::Transactions => Some(&self.transactions),
            NetworkKind::Sector => Some(&self.sector),
            NetworkKind::Tacit => None,
        }
    }
}

/// Metrics of one network, indexed like its nodes.
pub fn network_features(net: &RiskNetwork) -> Vec<NetworkFeatures> {
    let degrees = weighted_degrees(net);
    let close = closeness(net);
    let between = betweenness(net);
    let constraint = network_constraint(net);
    (0..net.node_count())
        .map(|i| NetworkFeatures {
            in_degree: degrees[i].in_degree,
            out_degree: degrees[i].out_degree,
            all_degree: degrees[i].all_degree,
            closeness: close[i],
            betweenness: between[i],
            constraint: constraint[i],
        })
        .collect()
}

/// One row per party of `population` (the unfiltered transactions network),
/// with metrics taken from the supplied (filtered) networks. A party absent
/// from a network keeps zeros for it.
pub fn assemble_features(
    population: &[PartyId],
    networks: &[&RiskNetwork],
    missing: &BTreeMap<PartyId, u32>,
    parties: &[Party],
) -> Vec<ClientFeatureRow> {
    let labels: BTreeMap<&PartyId, HighRisk> = parties.iter().map(|p| (&p.id, p.high_risk)).collect();
    let mut rows: Vec<ClientFeatureRow> = population
        .iter()
        .map(|id| {
            let mut row = ClientFeatureRow::zeros(id.clone());
            row.missing_id = missing.get(id).copied().unwrap_or(0);
            row.high_risk = labels.get(id).copied().unwrap_or_default();
            row
        })
        .collect();
    let index: BTreeMap<&PartyId, usize> = population.iter().enumerate().map(|(i, p)| (p, i)).collect();
    for net in networks {
        let feats = network_features(net);
        for (node, f) in net.nodes().iter().zip(feats) {
            let Some(&ri) = index.get(node) else { continue };
            let row = &mut rows[ri];
            match net.kind() {
                NetworkKind::Geo => row.geo = f,
                NetworkKind::Transactions => row.transactions = f,
                NetworkKind::Sector => row.sector = f,
                NetworkKind::Tacit => {}
            }
        }
    }
    rows
}

fn format_value(v: f64) -> String {
    // Shortest representation that parses back to the same f64.
    let s = format!("{v}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// CSV with `party_id` followed by the twenty feature columns. An unknown
/// label is an empty cell.
pub fn write_features<W: Write>(writer: W, rows: &[ClientFeatureRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["party_id"];
    header.extend(COLUMNS);
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.party_id.0.clone()];
        rec.extend(row.values().iter().map(|v| v.map(format_value).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<features>", e))?;
    Ok(())
}

pub fn read_features<R: Read>(reader: R, source_name: &str) -> Result<Vec<ClientFeatureRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected: Vec<&str> = std::iter::once("party_id").chain(COLUMNS).collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::row(source_name, 0, format!("expected header `{}`", expected.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row_no = i + 1;
        let rec = rec.map_err(|e| Error::row(source_name, row_no, e.to_string()))?;
        let high_risk = match &rec[1] {
            "" => HighRisk::Unknown,
            "0" => HighRisk::No,
            "1" => HighRisk::Yes,
            other => return Err(Error::row(source_name, row_no, format!("high_risk must be 0, 1 or empty, got `{other}`"))),
        };
        let mut nums = Vec::with_capacity(19);
        for (k, cell) in rec.iter().enumerate().skip(2) {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::row(source_name, row_no, format!("column `{}`: not a number: `{cell}`", expected[k])))?;
            nums.push(v);
        }
        let missing = nums[0];
        if missing < 0.0 || missing.fract() != 0.0 {
            return Err(Error::row(source_name, row_no, format!("missing_id must be a count, got {missing}")));
        }
        rows.push(ClientFeatureRow {
            party_id: PartyId(rec[0].to_string()),
            high_risk,
            missing_id: missing as u32,
            geo: NetworkFeatures::from_values(&nums[1..7]),
            transactions: NetworkFeatures::from_values(&nums[7..13]),
            sector: NetworkFeatures::from_values(&nums[13..19]),
        });
    }
    Ok(rows)
}
