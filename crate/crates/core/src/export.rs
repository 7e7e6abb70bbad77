//! GraphML and DOT exports. Nodes come out in party-id order and arcs in
//! network order, so identical networks give identical bytes.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::ledger::{HighRisk, Party, PartyId};
use crate::network::RiskNetwork;

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn label_str(h: HighRisk) -> &'static str {
    match h {
        HighRisk::Unknown => "",
        HighRisk::No => "0",
        HighRisk::Yes => "1",
    }
}

/// GraphML with node attributes `sector`, `region`, `label` (and `flagged`
/// when `flags` is given) and edge attributes `weight`, `kind`.
pub fn to_graphml(net: &RiskNetwork, parties: &[Party], flags: Option<&BTreeSet<PartyId>>) -> String {
    let by_id: HashMap<&PartyId, &Party> = parties.iter().map(|p| (&p.id, p)).collect();
    let kind = net.kind().as_str();
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"sector\" for=\"node\" attr.name=\"sector\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"region\" for=\"node\" attr.name=\"region\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n");
    if flags.is_some() {
        out.push_str("  <key id=\"flagged\" for=\"node\" attr.name=\"flagged\" attr.type=\"boolean\"/>\n");
    }
    out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    out.push_str("  <key id=\"kind\" for=\"edge\" attr.name=\"kind\" attr.type=\"string\"/>\n");
    let _ = writeln!(
        out,
        "  <graph id=\"{kind}\" edgedefault=\"{}\">",
        if net.is_directed() { "directed" } else { "undirected" }
    );
    for id in net.nodes() {
        let _ = writeln!(out, "    <node id=\"{}\">", xml_escape(id.as_str()));
        if let Some(p) = by_id.get(id) {
            let _ = writeln!(out, "      <data key=\"sector\">{}</data>", xml_escape(&p.sector_code));
            let _ = writeln!(out, "      <data key=\"region\">{}</data>", xml_escape(&p.region));
            let _ = writeln!(out, "      <data key=\"label\">{}</data>", label_str(p.high_risk));
        }
        if let Some(flags) = flags {
            let _ = writeln!(out, "      <data key=\"flagged\">{}</data>", flags.contains(id));
        }
        out.push_str("    </node>\n");
    }
    for (i, arc) in net.arcs().iter().enumerate() {
        let _ = writeln!(
            out,
            "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\">",
            xml_escape(net.nodes()[arc.tail].as_str()),
            xml_escape(net.nodes()[arc.head].as_str())
        );
        let _ = writeln!(out, "      <data key=\"weight\">{}</data>", arc.weight);
        let _ = writeln!(out, "      <data key=\"kind\">{kind}</data>");
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

/// DOT with arc weights as edge labels.
pub fn to_dot(net: &RiskNetwork) -> String {
    let (keyword, op) = if net.is_directed() { ("digraph", "->") } else { ("graph", "--") };
    let mut out = String::new();
    let _ = writeln!(out, "{keyword} \"{}\" {{", net.kind().as_str());
    for id in net.nodes() {
        let _ = writeln!(out, "  \"{}\";", dot_escape(id.as_str()));
    }
    for arc in net.arcs() {
        let _ = writeln!(
            out,
            "  \"{}\" {op} \"{}\" [label=\"{}\", weight={}];",
            dot_escape(net.nodes()[arc.tail].as_str()),
            dot_escape(net.nodes()[arc.head].as_str()),
            arc.weight,
            arc.weight
        );
    }
    out.push_str("}\n");
    out
}
