//! Per-node social-network metrics.
//!
//! Degrees and constraint use arc weights. Closeness and betweenness use
//! hop counts on the symmetrized simple graph (parallel and reciprocal arcs
//! merged), standardized within each node's connected component. Isolates
//! score 0 on closeness, betweenness and constraint.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ledger::{PartyId, TransactionRecord};
use crate::network::RiskNetwork;

/// Sources per parallel work unit. Partial sums are reduced in chunk order,
/// so results do not depend on the thread count.
const SOURCE_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Degrees {
    pub in_degree: f64,
    pub out_degree: f64,
    pub all_degree: f64,
}

/// Weighted in/out/all degree per node, indexed like `net.nodes()`.
pub fn weighted_degrees(net: &RiskNetwork) -> Vec<Degrees> {
    let mut inn = vec![0.0; net.node_count()];
    let mut out = vec![0.0; net.node_count()];
    for a in net.arcs() {
        out[a.tail] += a.weight;
        inn[a.head] += a.weight;
    }
    inn.into_iter()
        .zip(out)
        .map(|(i, o)| Degrees {
            in_degree: i,
            out_degree: o,
            all_degree: i + o,
        })
        .collect()
}

/// Sorted, deduplicated neighbor lists of the symmetrized graph.
#[derive(Debug, Clone)]
pub struct Adjacency {
    neighbors: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn symmetrized(net: &RiskNetwork) -> Self {
        let mut neighbors = vec![Vec::new(); net.node_count()];
        for a in net.arcs() {
            if a.tail != a.head {
                neighbors[a.tail].push(a.head);
                neighbors[a.head].push(a.tail);
            }
        }
        for n in &mut neighbors {
            n.sort_unstable();
            n.dedup();
        }
        Adjacency { neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Size of the connected component containing each node.
    pub fn component_sizes(&self) -> Vec<usize> {
        let n = self.len();
        let mut comp = vec![usize::MAX; n];
        let mut sizes = Vec::new();
        let mut queue = VecDeque::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            comp[s] = id;
            queue.push_back(s);
            let mut size = 0;
            while let Some(v) = queue.pop_front() {
                size += 1;
                for &w in &self.neighbors[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        queue.push_back(w);
                    }
                }
            }
            sizes.push(size);
        }
        comp.into_iter().map(|c| sizes[c]).collect()
    }

    fn bfs_distances(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or(0);
            for &w in &self.neighbors[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// `(n_c - 1) / sum of hop distances` to the other members of the node's
/// component of size `n_c`; 0 for isolates.
pub fn closeness(net: &RiskNetwork) -> Vec<f64> {
    let adj = Adjacency::symmetrized(net);
    (0..adj.len())
        .into_par_iter()
        .map(|s| {
            let (reached, total) = adj
                .bfs_distances(s)
                .into_iter()
                .flatten()
                .fold((0u64, 0u64), |(n, t), d| (n + 1, t + u64::from(d)));
            if total == 0 {
                0.0
            } else {
                (reached - 1) as f64 / total as f64
            }
        })
        .collect()
}

/// Brandes dependency accumulation from one source, added into `acc`.
fn accumulate_dependencies(adj: &Adjacency, s: usize, acc: &mut [f64]) {
    let n = adj.len();
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    sigma[s] = 1.0;
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        stack.push(v);
        for &w in adj.neighbors(v) {
            if dist[w] < 0 {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
            if dist[w] == dist[v] + 1 {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }
    let mut delta = vec![0.0f64; n];
    while let Some(w) = stack.pop() {
        for &v in &preds[w] {
            delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
        }
        if w != s {
            acc[w] += delta[w];
        }
    }
}

/// Share of shortest paths between other pairs that pass through each node,
/// divided by `(n_c - 1)(n_c - 2) / 2` for its component size `n_c`. Nodes in
/// components smaller than three score 0.
pub fn betweenness(net: &RiskNetwork) -> Vec<f64> {
    let adj = Adjacency::symmetrized(net);
    let n = adj.len();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            for &s in chunk {
                accumulate_dependencies(&adj, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut raw = vec![0.0; n];
    for p in &partials {
        for (r, v) in raw.iter_mut().zip(p) {
            *r += v;
        }
    }
    let sizes = adj.component_sizes();
    raw.iter()
        .zip(&sizes)
        .map(|(&r, &nc)| {
            if nc < 3 {
                0.0
            } else {
                // Each unordered pair was counted from both endpoints.
                let pairs = ((nc - 1) * (nc - 2)) as f64 / 2.0;
                (r / 2.0) / pairs
            }
        })
        .collect()
}

/// Burt's constraint on symmetrized tie strengths `a_ij = x_ij + x_ji`,
/// where `x_ij` sums the weights of all arcs i -> j:
/// `C_i = sum_j (p_ij + sum_q p_iq p_qj)^2` with `p_ij = a_ij / sum_k a_ik`,
/// `j` over i's neighbors and `q` over neighbors shared by i and j.
pub fn network_constraint(net: &RiskNetwork) -> Vec<f64> {
    let n = net.node_count();
    let mut ties: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for a in net.arcs() {
        if a.tail == a.head {
            continue;
        }
        *ties[a.tail].entry(a.head).or_insert(0.0) += a.weight;
        *ties[a.head].entry(a.tail).or_insert(0.0) += a.weight;
    }
    let props: Vec<BTreeMap<usize, f64>> = ties
        .iter()
        .map(|t| {
            let total: f64 = t.values().sum();
            t.iter()
                .filter(|(_, &w)| w > 0.0)
                .map(|(&j, &w)| (j, w / total))
                .collect()
        })
        .collect();
    (0..n)
        .map(|i| {
            props[i]
                .iter()
                .map(|(&j, &p_ij)| {
                    let indirect: f64 = props[i]
                        .iter()
                        .filter(|(&q, _)| q != j)
                        .filter_map(|(&q, &p_iq)| props[q].get(&j).map(|&p_qj| p_iq * p_qj))
                        .sum();
                    (p_ij + indirect).powi(2)
                })
                .sum()
        })
        .collect()
}

/// Per seller, the number of records missing the owner, the representative
/// or the debtor. A record counts once however many fields are missing.
pub fn missing_id(records: &[TransactionRecord]) -> BTreeMap<PartyId, u32> {
    let mut out = BTreeMap::new();
    for r in records {
        let c = out.entry(r.seller_id.clone()).or_insert(0);
        if r.has_missing_id() {
            *c += 1;
        }
    }
    out
}
