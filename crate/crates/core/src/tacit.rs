//! Connected components of the tacit-link network and cluster alerts.
//!
//! When any member of a component is flagged, every other member gets a
//! WATCH alert naming the flagged co-members. Sharing an owner does not imply
//! involvement, so alerts never change a party's risk score.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ledger::{HighRisk, Party, PartyId};
use crate::network::RiskNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AlertLevel {
    None,
    Watch,
}

impl AlertLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            AlertLevel::None => "NONE",
            AlertLevel::Watch => "WATCH",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TacitComponent {
    pub component_id: usize,
    pub members: BTreeSet<PartyId>,
    pub flagged_members: BTreeSet<PartyId>,
    pub alert_level: AlertLevel,
}

impl TacitComponent {
    fn new(component_id: usize, members: BTreeSet<PartyId>) -> Self {
        TacitComponent {
            component_id,
            members,
            flagged_members: BTreeSet::new(),
            alert_level: AlertLevel::None,
        }
    }

    fn set_flags(&mut self, flags: &BTreeSet<PartyId>) {
        self.flagged_members = self.members.intersection(flags).cloned().collect();
        self.alert_level = if !self.flagged_members.is_empty() && self.members.len() > self.flagged_members.len() {
            AlertLevel::Watch
        } else {
            AlertLevel::None
        };
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alert {
    pub party_id: PartyId,
    pub component_id: usize,
    pub reason: Vec<PartyId>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // Keep the smaller index as root so roots are order independent.
        if ra < rb {
            self.parent[rb] = ra;
        } else if rb < ra {
            self.parent[ra] = rb;
        }
    }
}

/// Components with at least one edge, numbered from 1 in order of their
/// smallest member id. Flags start empty; see [`apply_flags`].
pub fn components(net: &RiskNetwork) -> Vec<TacitComponent> {
    let n = net.node_count();
    let mut uf = UnionFind::new(n);
    let mut touched = vec![false; n];
    for arc in net.arcs() {
        if arc.tail == arc.head {
            continue;
        }
        uf.union(arc.tail, arc.head);
        touched[arc.tail] = true;
        touched[arc.head] = true;
    }
    // Nodes are sorted by id, so the root (smallest index) is the smallest
    // member and roots come out in id order.
    let mut groups: Vec<(usize, BTreeSet<PartyId>)> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for v in (0..n).filter(|&v| touched[v]) {
        let r = uf.find(v);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push((r, BTreeSet::new()));
        }
        groups[slot[r]].1.insert(net.nodes()[v].clone());
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, (_, members))| TacitComponent::new(i + 1, members))
        .collect()
}

pub fn apply_flags(components: &mut [TacitComponent], flags: &BTreeSet<PartyId>) {
    for c in components {
        c.set_flags(flags);
    }
}

/// Every unflagged member of a component with a flagged member, in
/// component then party order.
pub fn propagate_alerts(components: &[TacitComponent], flags: &BTreeSet<PartyId>) -> Vec<Alert> {
    let mut alerts = Vec::new();
    for c in components {
        let flagged: Vec<PartyId> = c.members.intersection(flags).cloned().collect();
        if flagged.is_empty() {
            continue;
        }
        for m in c.members.difference(flags) {
            alerts.push(Alert {
                party_id: m.clone(),
                component_id: c.component_id,
                reason: flagged.clone(),
            });
        }
    }
    alerts
}

/// Parties labeled high risk.
pub fn label_flags(parties: &[Party]) -> BTreeSet<PartyId> {
    parties
        .iter()
        .filter(|p| p.high_risk == HighRisk::Yes)
        .map(|p| p.id.clone())
        .collect()
}

/// One party id per line. Blank lines, `#` comments and a `party_id`
/// header line are ignored.
pub fn parse_flags(text: &str) -> BTreeSet<PartyId> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty() && *l != "party_id")
        .map(|l| PartyId(l.to_string()))
        .collect()
}

pub fn load_flags(path: impl AsRef<Path>) -> Result<BTreeSet<PartyId>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_flags(&text))
}

/// `party_id,component_id,reason_members` with reasons joined by `;`.
pub fn write_alerts<W: Write>(writer: W, alerts: &[Alert]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["party_id", "component_id", "reason_members"])?;
    for a in alerts {
        let reason: Vec<&str> = a.reason.iter().map(PartyId::as_str).collect();
        w.write_record([a.party_id.as_str(), &a.component_id.to_string(), &reason.join(";")])?;
    }
    w.flush().map_err(|e| Error::io("<alerts>", e))?;
    Ok(())
}

/// `component_id,size,flagged,alert_level,members`.
pub fn write_components<W: Write>(writer: W, components: &[TacitComponent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["component_id", "size", "flagged", "alert_level", "members"])?;
    for c in components {
        let members: Vec<&str> = c.members.iter().map(PartyId::as_str).collect();
        w.write_record([
            c.component_id.to_string(),
            c.members.len().to_string(),
            c.flagged_members.len().to_string(),
            c.alert_level.as_str().to_string(),
            members.join(";"),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<components>", e))?;
    Ok(())
}
