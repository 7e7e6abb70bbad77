//! Construction of the four risk networks.
//!
//! Directed networks orient every arc debtor -> seller (the payment
//! direction). Nodes are always kept in lexicographic party-id order so that
//! indices, metrics and exports are reproducible.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ledger::{Ledger, PartyId, TransactionRecord};
use crate::scoring::{bin_amount, ArcCombine, NodeScorer, RiskScore};
use crate::tables::RiskTables;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkKind {
    Transactions,
    Sector,
    Geo,
    Tacit,
}

impl NetworkKind {
    pub const ANALYTIC: [NetworkKind; 3] = [NetworkKind::Geo, NetworkKind::Transactions, NetworkKind::Sector];

    pub fn as_str(self) -> &'static str {
        match self {
            NetworkKind::Transactions => "transactions",
            NetworkKind::Sector => "sector",
            NetworkKind::Geo => "geo",
            NetworkKind::Tacit => "tacit",
        }
    }
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NetworkKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "transactions" => Ok(NetworkKind::Transactions),
            "sector" => Ok(NetworkKind::Sector),
            "geo" => Ok(NetworkKind::Geo),
            "tacit" => Ok(NetworkKind::Tacit),
            _ => Err(format!("expected transactions|sector|geo|tacit, got `{s}`")),
        }
    }
}

/// How parallel arcs between the same ordered pair are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Collapse {
    #[default]
    Mean,
    Sum,
    Max,
}

impl FromStr for Collapse {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mean" => Ok(Collapse::Mean),
            "sum" => Ok(Collapse::Sum),
            "max" => Ok(Collapse::Max),
            _ => Err(format!("expected mean|sum|max, got `{s}`")),
        }
    }
}

impl fmt::Display for Collapse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Collapse::Mean => "mean",
            Collapse::Sum => "sum",
            Collapse::Max => "max",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub weight: f64,
}

/// A network as first assembled from the ledger, self-loops included.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDraft {
    pub kind: NetworkKind,
    pub nodes: Vec<PartyId>,
    pub arcs: Vec<Arc>,
    pub directed: bool,
}

impl NetworkDraft {
    pub fn loop_count(&self) -> usize {
        self.arcs.iter().filter(|a| a.tail == a.head).count()
    }

    /// Remove self-loops.
    pub fn finalize(self) -> RiskNetwork {
        let before = self.arcs.len();
        let arcs: Vec<Arc> = self.arcs.into_iter().filter(|a| a.tail != a.head).collect();
        let loops_removed = before - arcs.len();
        let multigraph = has_parallel(&arcs, self.directed);
        RiskNetwork {
            kind: self.kind,
            nodes: self.nodes,
            arcs,
            directed: self.directed,
            multigraph,
            loops_removed,
        }
    }
}

fn has_parallel(arcs: &[Arc], directed: bool) -> bool {
    let mut seen = std::collections::HashSet::with_capacity(arcs.len());
    arcs.iter().any(|a| {
        let key = if directed || a.tail < a.head { (a.tail, a.head) } else { (a.head, a.tail) };
        !seen.insert(key)
    })
}

/// A finalized, loop-free network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskNetwork {
    kind: NetworkKind,
    nodes: Vec<PartyId>,
    arcs: Vec<Arc>,
    directed: bool,
    multigraph: bool,
    loops_removed: usize,
}

impl RiskNetwork {
    /// Build a finalized network from named arcs. Node ids are sorted;
    /// self-loops are dropped. For undirected kinds each edge is stored once
    /// with `tail < head`.
    pub fn from_named(
        kind: NetworkKind,
        ids: impl IntoIterator<Item = PartyId>,
        arcs: impl IntoIterator<Item = (PartyId, PartyId, f64)>,
    ) -> Self {
        let arcs: Vec<_> = arcs.into_iter().collect();
        let mut nodes: BTreeSet<PartyId> = ids.into_iter().collect();
        for (t, h, _) in &arcs {
            nodes.insert(t.clone());
            nodes.insert(h.clone());
        }
        let nodes: Vec<PartyId> = nodes.into_iter().collect();
        let index: HashMap<&PartyId, usize> = nodes.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let directed = kind != NetworkKind::Tacit;
        let arcs = arcs
            .iter()
            .map(|(t, h, w)| {
                let (tail, head) = (index[t], index[h]);
                let (tail, head) = if directed { (tail, head) } else { (tail.min(head), tail.max(head)) };
                Arc { tail, head, weight: *w }
            })
            .collect();
        NetworkDraft {
            kind,
            nodes,
            arcs,
            directed,
        }
        .finalize()
    }

    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    pub fn nodes(&self) -> &[PartyId] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_multigraph(&self) -> bool {
        self.multigraph
    }

    pub fn loops_removed(&self) -> usize {
        self.loops_removed
    }

    pub fn node_index(&self, id: &PartyId) -> Option<usize> {
        self.nodes.binary_search(id).ok()
    }

    pub fn total_weight(&self) -> f64 {
        self.arcs.iter().map(|a| a.weight).sum()
    }

    /// Merge parallel arcs per ordered pair. Arcs come out sorted by (tail, head).
    pub fn collapsed(&self, how: Collapse) -> RiskNetwork {
        let mut groups: BTreeMap<(usize, usize), (f64, usize, f64)> = BTreeMap::new();
        for a in &self.arcs {
            let g = groups.entry((a.tail, a.head)).or_insert((0.0, 0, f64::NEG_INFINITY));
            g.0 += a.weight;
            g.1 += 1;
            g.2 = g.2.max(a.weight);
        }
        let arcs = groups
            .into_iter()
            .map(|((tail, head), (sum, count, max))| Arc {
                tail,
                head,
                weight: match how {
                    Collapse::Mean => sum / count as f64,
                    Collapse::Sum => sum,
                    Collapse::Max => max,
                },
            })
            .collect();
        RiskNetwork {
            arcs,
            multigraph: false,
            ..self.clone()
        }
    }

    /// Same node set, arcs with weight at or above `threshold`.
    pub fn filtered(&self, threshold: f64) -> RiskNetwork {
        let arcs: Vec<Arc> = self.arcs.iter().filter(|a| a.weight >= threshold).copied().collect();
        RiskNetwork {
            multigraph: has_parallel(&arcs, self.directed),
            arcs,
            ..self.clone()
        }
    }

    /// Indices of nodes touched by at least one arc.
    pub fn non_isolates(&self) -> BTreeSet<usize> {
        self.arcs.iter().flat_map(|a| [a.tail, a.head]).collect()
    }

    /// Drop nodes with no incident arc, reindexing the rest.
    pub fn without_isolates(&self) -> RiskNetwork {
        let keep = self.non_isolates();
        let remap: HashMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        RiskNetwork {
            nodes: keep.iter().map(|&i| self.nodes[i].clone()).collect(),
            arcs: self
                .arcs
                .iter()
                .map(|a| Arc {
                    tail: remap[&a.tail],
                    head: remap[&a.head],
                    weight: a.weight,
                })
                .collect(),
            ..self.clone()
        }
    }
}

fn ledger_nodes(records: &[TransactionRecord]) -> Vec<PartyId> {
    let mut ids = BTreeSet::new();
    for r in records {
        ids.insert(r.seller_id.clone());
        if let Some(d) = &r.debtor_id {
            ids.insert(d.clone());
        }
    }
    ids.into_iter().collect()
}

fn index_of(nodes: &[PartyId]) -> HashMap<&PartyId, usize> {
    nodes.iter().enumerate().map(|(i, p)| (p, i)).collect()
}

/// One arc per record, weighted by the binned amount. A record without a
/// debtor becomes a self-loop on its seller.
pub fn transactions_draft(records: &[TransactionRecord], tables: &RiskTables) -> NetworkDraft {
    let nodes = ledger_nodes(records);
    let index = index_of(&nodes);
    let arcs = records
        .iter()
        .map(|r| {
            let head = index[&r.seller_id];
            let tail = r.debtor_id.as_ref().map_or(head, |d| index[d]);
            Arc {
                tail,
                head,
                weight: bin_amount(r.amount, tables).value(),
            }
        })
        .collect();
    NetworkDraft {
        kind: NetworkKind::Transactions,
        nodes,
        arcs,
        directed: true,
    }
}

pub fn build_transactions_network(records: &[TransactionRecord], tables: &RiskTables) -> RiskNetwork {
    transactions_draft(records, tables).finalize()
}

/// Same topology as the transactions draft, each arc weighted by combining
/// the sector or geographical scores of its two endpoints.
pub fn attribute_draft(
    ledger: &Ledger,
    tables: &RiskTables,
    kind: NetworkKind,
    combine: ArcCombine,
) -> Result<NetworkDraft> {
    assert!(
        matches!(kind, NetworkKind::Sector | NetworkKind::Geo),
        "attribute networks are sector or geo, got {kind}"
    );
    let scorer = NodeScorer::new(tables)?;
    let nodes = ledger_nodes(&ledger.records);
    let parties = ledger.party_map();
    let mut node_scores: Vec<Option<RiskScore>> = Vec::with_capacity(nodes.len());
    for id in &nodes {
        let score = match parties.get(id) {
            Some(p) if kind == NetworkKind::Sector => Some(scorer.sector(p)?),
            Some(p) => Some(scorer.geo(p)?),
            None => None,
        };
        node_scores.push(score);
    }
    let index = index_of(&nodes);
    let mut arcs = Vec::with_capacity(ledger.records.len());
    for r in &ledger.records {
        let head = index[&r.seller_id];
        let tail = r.debtor_id.as_ref().map_or(head, |d| index[d]);
        let score = |i: usize| {
            node_scores[i].ok_or_else(|| crate::Error::InsufficientData(format!("no attributes for party `{}`", nodes[i])))
        };
        let weight = if tail == head {
            score(head)?
        } else {
            combine.combine(score(head)?, score(tail)?)
        };
        arcs.push(Arc {
            tail,
            head,
            weight: weight.value(),
        });
    }
    Ok(NetworkDraft {
        kind,
        nodes,
        arcs,
        directed: true,
    })
}

pub fn build_attribute_network(
    ledger: &Ledger,
    tables: &RiskTables,
    kind: NetworkKind,
    combine: ArcCombine,
    collapse: Collapse,
) -> Result<RiskNetwork> {
    Ok(attribute_draft(ledger, tables, kind, combine)?.finalize().collapsed(collapse))
}

pub fn filter_high_risk(net: &RiskNetwork, threshold: f64) -> RiskNetwork {
    net.filtered(threshold)
}

/// Undirected simple graph linking sellers that share an owner id or a
/// representative id on any of their records. Person ids are attached to
/// the seller of the record. Every ledger party is a node.
pub fn build_tacit_network(records: &[TransactionRecord]) -> RiskNetwork {
    let nodes = ledger_nodes(records);
    let index = index_of(&nodes);
    let mut by_owner: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    let mut by_rep: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for r in records {
        let s = index[&r.seller_id];
        if let Some(o) = &r.owner_id {
            by_owner.entry(o).or_default().insert(s);
        }
        if let Some(p) = &r.representative_id {
            by_rep.entry(p).or_default().insert(s);
        }
    }
    let mut edges = BTreeSet::new();
    for group in by_owner.values().chain(by_rep.values()) {
        let members: Vec<usize> = group.iter().copied().collect();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                edges.insert((a, b));
            }
        }
    }
    RiskNetwork {
        kind: NetworkKind::Tacit,
        nodes,
        arcs: edges
            .into_iter()
            .map(|(tail, head)| Arc { tail, head, weight: 1.0 })
            .collect(),
        directed: false,
        multigraph: false,
        loops_removed: 0,
    }
}
