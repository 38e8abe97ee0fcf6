//! Feeder description: nodes, switchable branches, DER units and calamity
//! scenarios, plus the line-oriented text formats they are stored in.
//!
//! Feeder file lines:
//!
//! ```text
//! source_rating <kVA>
//! node <id> <source|load|junction> <demand_kVA> [critical]
//! branch <id> <from> <to> [switch <idx|fixed> <nc|no>]
//! der <node> <rating_kVA> <pmin> <pmax> <qmin> <qmax>
//! ```
//!
//! A `switch fixed` device is physically present but not agent-actuated;
//! it stays in its normal state.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::topology::Subgraph;

/// Number of remotely controllable switch devices.
pub const NUM_SWITCHES: usize = 10;

const BUNDLED_FEEDER: &str = include_str!("../data/ieee123_simplified.feeder");
const BUNDLED_SCENARIOS: [&str; 4] = [
    include_str!("../data/scenarios/flood.scenario"),
    include_str!("../data/scenarios/wildfire.scenario"),
    include_str!("../data/scenarios/hurricane.scenario"),
    include_str!("../data/scenarios/short_circuit.scenario"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Source,
    Load,
    Junction,
}

impl NodeKind {
    fn as_str(self) -> &'static str {
        match self {
            NodeKind::Source => "source",
            NodeKind::Load => "load",
            NodeKind::Junction => "junction",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: u32,
    pub kind: NodeKind,
    /// Apparent power demand in kVA.
    pub demand: f64,
    pub is_critical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchControl {
    /// Agent-actuated, bit `i` of the switch vector.
    Controllable(usize),
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwitchDevice {
    pub control: SwitchControl,
    pub normally_closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    pub switch: Option<SwitchDevice>,
}

impl BranchRecord {
    pub fn has_switch(&self) -> bool {
        self.switch.is_some()
    }

    pub fn switch_index(&self) -> Option<usize> {
        match self.switch {
            Some(SwitchDevice {
                control: SwitchControl::Controllable(i),
                ..
            }) => Some(i),
            _ => None,
        }
    }

    pub fn normally_closed(&self) -> bool {
        self.switch.is_none_or(|s| s.normally_closed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerRecord {
    pub node: u32,
    pub rating: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridNetwork {
    pub nodes: Vec<NodeRecord>,
    pub branches: Vec<BranchRecord>,
    /// Listed in activation priority order.
    pub ders: Vec<DerRecord>,
    pub source_rating: f64,
}

/// State of the controllable switches; `true` means closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SwitchVector(pub [bool; NUM_SWITCHES]);

impl SwitchVector {
    pub fn all(closed: bool) -> Self {
        SwitchVector([closed; NUM_SWITCHES])
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() != NUM_SWITCHES {
            return Err(Error::domain(format!(
                "switch vector needs {NUM_SWITCHES} entries, got {}",
                bits.len()
            )));
        }
        let mut out = [false; NUM_SWITCHES];
        for (slot, &b) in out.iter_mut().zip(bits) {
            *slot = match b {
                0 => false,
                1 => true,
                other => return Err(Error::domain(format!("switch entry {other} is not 0/1"))),
            };
        }
        Ok(SwitchVector(out))
    }

    pub fn closed_count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn toggles_from(&self, other: &SwitchVector) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn as_f64(&self) -> [f64; NUM_SWITCHES] {
        self.0.map(|b| if b { 1.0 } else { 0.0 })
    }

    pub fn bits(&self) -> u16 {
        self.0
            .iter()
            .enumerate()
            .fold(0u16, |acc, (i, &b)| acc | ((b as u16) << i))
    }
}

impl fmt::Display for SwitchVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, &b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str("]")
    }
}

impl GridNetwork {
    pub fn bundled() -> Self {
        parse_feeder(BUNDLED_FEEDER).expect("bundled feeder is valid")
    }

    pub fn source(&self) -> &NodeRecord {
        self.nodes
            .iter()
            .find(|n| n.kind == NodeKind::Source)
            .expect("validated network has a source")
    }

    pub fn node(&self, id: u32) -> Option<&NodeRecord> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn load_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Load)
            .count()
    }

    pub fn total_demand(&self) -> f64 {
        self.nodes.iter().map(|n| n.demand).sum()
    }

    pub fn critical_loads(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.iter().filter(|n| n.is_critical)
    }

    pub fn total_critical_demand(&self) -> f64 {
        self.critical_loads().map(|n| n.demand).sum()
    }

    pub fn total_der_rating(&self) -> f64 {
        self.ders.iter().map(|d| d.rating).sum()
    }

    pub fn controllable_switch_count(&self) -> usize {
        self.branches
            .iter()
            .filter(|b| b.switch_index().is_some())
            .count()
    }

    /// Controllable switches at their normal positions; unused indices open.
    pub fn normal_switches(&self) -> SwitchVector {
        let mut sw = SwitchVector::all(false);
        for b in &self.branches {
            if let Some(i) = b.switch_index() {
                sw.0[i] = b.normally_closed();
            }
        }
        sw
    }

    pub fn branch(&self, id: u32) -> Option<&BranchRecord> {
        self.branches.iter().find(|b| b.id == id)
    }

    /// Serializes to the feeder file format; `parse_feeder` inverts it.
    pub fn to_feeder_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("source_rating {:?}\n", self.source_rating));
        for n in &self.nodes {
            out.push_str(&format!("node {} {} {:?}", n.id, n.kind.as_str(), n.demand));
            if n.is_critical {
                out.push_str(" critical");
            }
            out.push('\n');
        }
        for b in &self.branches {
            out.push_str(&format!("branch {} {} {}", b.id, b.from, b.to));
            if let Some(sw) = b.switch {
                let idx = match sw.control {
                    SwitchControl::Controllable(i) => i.to_string(),
                    SwitchControl::Fixed => "fixed".to_string(),
                };
                let state = if sw.normally_closed { "nc" } else { "no" };
                out.push_str(&format!(" switch {idx} {state}"));
            }
            out.push('\n');
        }
        for d in &self.ders {
            out.push_str(&format!(
                "der {} {:?} {:?} {:?} {:?} {:?}\n",
                d.node, d.rating, d.p_min, d.p_max, d.q_min, d.q_max
            ));
        }
        out
    }
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{tok}`")))
}

pub fn parse_feeder(text: &str) -> Result<GridNetwork> {
    let mut nodes: Vec<NodeRecord> = Vec::new();
    let mut node_lines: HashMap<u32, usize> = HashMap::new();
    let mut branches: Vec<(usize, BranchRecord)> = Vec::new();
    let mut ders: Vec<(usize, DerRecord)> = Vec::new();
    let mut source_rating: Option<f64> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let keyword = toks.next().unwrap_or_default();
        match keyword {
            "source_rating" => {
                let r: f64 = num(toks.next(), line, "source rating")?;
                if !(r > 0.0) {
                    return Err(Error::parse(line, "source rating must be positive"));
                }
                source_rating = Some(r);
            }
            "node" => {
                let id: u32 = num(toks.next(), line, "node id")?;
                let kind = match toks.next() {
                    Some("source") => NodeKind::Source,
                    Some("load") => NodeKind::Load,
                    Some("junction") => NodeKind::Junction,
                    Some(other) => {
                        return Err(Error::parse(line, format!("unknown node kind `{other}`")))
                    }
                    None => return Err(Error::parse(line, "missing node kind")),
                };
                let demand: f64 = num(toks.next(), line, "demand")?;
                if !(demand >= 0.0) {
                    return Err(Error::parse(line, "demand must be non-negative"));
                }
                let is_critical = match toks.next() {
                    None => false,
                    Some("critical") => true,
                    Some(other) => {
                        return Err(Error::parse(line, format!("unexpected token `{other}`")))
                    }
                };
                if let Some(prev) = node_lines.insert(id, line) {
                    return Err(Error::parse(
                        line,
                        format!("duplicate node id {id} (first defined on line {prev})"),
                    ));
                }
                nodes.push(NodeRecord {
                    id,
                    kind,
                    demand,
                    is_critical,
                });
            }
            "branch" => {
                let id: u32 = num(toks.next(), line, "branch id")?;
                let from: u32 = num(toks.next(), line, "from node")?;
                let to: u32 = num(toks.next(), line, "to node")?;
                if from == to {
                    return Err(Error::parse(line, format!("branch {id} is a self-loop")));
                }
                let switch = match toks.next() {
                    None => None,
                    Some("switch") => {
                        let control = match toks.next() {
                            Some("fixed") => SwitchControl::Fixed,
                            tok => {
                                let i: usize = num(tok, line, "switch index")?;
                                if i >= NUM_SWITCHES {
                                    return Err(Error::parse(
                                        line,
                                        format!("switch index {i} outside 0..{NUM_SWITCHES}"),
                                    ));
                                }
                                SwitchControl::Controllable(i)
                            }
                        };
                        let normally_closed = match toks.next() {
                            Some("nc") => true,
                            Some("no") => false,
                            _ => {
                                return Err(Error::parse(line, "switch state must be `nc` or `no`"))
                            }
                        };
                        Some(SwitchDevice {
                            control,
                            normally_closed,
                        })
                    }
                    Some(other) => {
                        return Err(Error::parse(line, format!("unexpected token `{other}`")))
                    }
                };
                if let Some(extra) = toks.next() {
                    return Err(Error::parse(line, format!("unexpected token `{extra}`")));
                }
                branches.push((
                    line,
                    BranchRecord {
                        id,
                        from,
                        to,
                        switch,
                    },
                ));
            }
            "der" => {
                let node: u32 = num(toks.next(), line, "DER node")?;
                let rating: f64 = num(toks.next(), line, "DER rating")?;
                let p_min: f64 = num(toks.next(), line, "p_min")?;
                let p_max: f64 = num(toks.next(), line, "p_max")?;
                let q_min: f64 = num(toks.next(), line, "q_min")?;
                let q_max: f64 = num(toks.next(), line, "q_max")?;
                if !(rating > 0.0) {
                    return Err(Error::parse(line, "DER rating must be positive"));
                }
                if p_min > p_max || q_min > q_max {
                    return Err(Error::parse(line, "DER limits must satisfy min <= max"));
                }
                ders.push((
                    line,
                    DerRecord {
                        node,
                        rating,
                        p_min,
                        p_max,
                        q_min,
                        q_max,
                    },
                ));
            }
            other => return Err(Error::parse(line, format!("unknown keyword `{other}`"))),
        }
    }

    let sources: Vec<_> = nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Source)
        .collect();
    match sources.len() {
        0 => return Err(Error::Validation("missing source node".into())),
        1 => {}
        _ => {
            let line = node_lines[&sources[1].id];
            return Err(Error::parse(line, "more than one source node"));
        }
    }
    let source_rating =
        source_rating.ok_or_else(|| Error::Validation("missing `source_rating` line".into()))?;

    let mut branch_ids = HashMap::new();
    let mut switch_slots: HashMap<usize, u32> = HashMap::new();
    for (line, b) in &branches {
        for end in [b.from, b.to] {
            if !node_lines.contains_key(&end) {
                return Err(Error::parse(
                    *line,
                    format!("branch {} references unknown node {end}", b.id),
                ));
            }
        }
        if branch_ids.insert(b.id, *line).is_some() {
            return Err(Error::parse(*line, format!("duplicate branch id {}", b.id)));
        }
        if let Some(i) = b.switch_index() {
            if let Some(other) = switch_slots.insert(i, b.id) {
                return Err(Error::parse(
                    *line,
                    format!("switch index {i} already used by branch {other}"),
                ));
            }
        }
    }
    let mut der_nodes = BTreeSet::new();
    for (line, d) in &ders {
        if !node_lines.contains_key(&d.node) {
            return Err(Error::parse(
                *line,
                format!("DER at unknown node {}", d.node),
            ));
        }
        if !der_nodes.insert(d.node) {
            return Err(Error::parse(
                *line,
                format!("second DER at node {}", d.node),
            ));
        }
    }

    let net = GridNetwork {
        nodes,
        branches: branches.into_iter().map(|(_, b)| b).collect(),
        ders: ders.into_iter().map(|(_, d)| d).collect(),
        source_rating,
    };
    if net.total_critical_demand() > net.source_rating {
        return Err(Error::Validation(format!(
            "critical demand {} kVA exceeds source rating {} kVA",
            net.total_critical_demand(),
            net.source_rating
        )));
    }
    let normal = effective_topology(&net, &net.normal_switches(), &Scenario::none());
    if !normal.is_connected() {
        return Err(Error::Validation(
            "network is not connected with switches in their normal positions".into(),
        ));
    }
    Ok(net)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    Flood,
    Wildfire,
    Hurricane,
    ShortCircuit,
    Custom,
}

impl ScenarioKind {
    fn from_name(name: &str) -> Self {
        match name.to_ascii_lowercase().as_str() {
            "flood" => ScenarioKind::Flood,
            "wildfire" => ScenarioKind::Wildfire,
            "hurricane" => ScenarioKind::Hurricane,
            "short_circuit" | "shortcircuit" => ScenarioKind::ShortCircuit,
            _ => ScenarioKind::Custom,
        }
    }

    /// Weather label as printed in contingency reports.
    pub fn weather_label(self) -> &'static str {
        match self {
            ScenarioKind::Flood => "Flood",
            ScenarioKind::Wildfire => "Wildfire",
            ScenarioKind::Hurricane => "Hurricane",
            ScenarioKind::ShortCircuit => "Shortcircuit",
            ScenarioKind::Custom => "Custom",
        }
    }
}

/// Elements taken out of service by a calamity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub disabled_nodes: BTreeSet<u32>,
    pub disabled_branches: BTreeSet<u32>,
    pub description: String,
}

impl Scenario {
    pub fn none() -> Self {
        Scenario {
            name: "none".into(),
            kind: ScenarioKind::Custom,
            disabled_nodes: BTreeSet::new(),
            disabled_branches: BTreeSet::new(),
            description: String::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.disabled_nodes.is_empty() && self.disabled_branches.is_empty()
    }

    pub fn bundled() -> Vec<Scenario> {
        BUNDLED_SCENARIOS
            .iter()
            .map(|t| parse_scenario(t).expect("bundled scenario is valid"))
            .collect()
    }

    /// Checks that every disabled element exists in `net`.
    pub fn validate(&self, net: &GridNetwork) -> Result<()> {
        for id in &self.disabled_nodes {
            if net.node(*id).is_none() {
                return Err(Error::Validation(format!(
                    "scenario `{}` disables unknown node {id}",
                    self.name
                )));
            }
        }
        for id in &self.disabled_branches {
            if net.branch(*id).is_none() {
                return Err(Error::Validation(format!(
                    "scenario `{}` disables unknown branch {id}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn to_scenario_text(&self) -> String {
        let mut out = format!("name {}\n", self.name);
        if !self.description.is_empty() {
            out.push_str(&format!("description {}\n", self.description));
        }
        for n in &self.disabled_nodes {
            out.push_str(&format!("disable_node {n}\n"));
        }
        for b in &self.disabled_branches {
            out.push_str(&format!("disable_branch {b}\n"));
        }
        out
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut sc = Scenario::none();
    let mut named = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (keyword, rest) = content
            .split_once(char::is_whitespace)
            .map(|(k, r)| (k, r.trim()))
            .unwrap_or((content, ""));
        match keyword {
            "name" => {
                if rest.is_empty() {
                    return Err(Error::parse(line, "empty scenario name"));
                }
                sc.name = rest.to_string();
                sc.kind = ScenarioKind::from_name(rest);
                named = true;
            }
            "description" => sc.description = rest.to_string(),
            "disable_node" => {
                sc.disabled_nodes.insert(num(Some(rest), line, "node id")?);
            }
            "disable_branch" => {
                sc.disabled_branches
                    .insert(num(Some(rest), line, "branch id")?);
            }
            other => return Err(Error::parse(line, format!("unknown keyword `{other}`"))),
        }
    }
    if !named {
        return Err(Error::parse(1, "scenario file lacks a `name` line"));
    }
    Ok(sc)
}

/// Energized graph for a switch state and scenario: unswitched or closed
/// branches whose endpoints survive the scenario.
pub fn effective_topology(
    net: &GridNetwork,
    switches: &SwitchVector,
    scenario: &Scenario,
) -> Subgraph {
    effective_topology_with(net, switches, false, scenario)
}

/// As [`effective_topology`]; `close_fixed_ties` additionally closes the
/// fixed normally-open tie devices.
pub fn effective_topology_with(
    net: &GridNetwork,
    switches: &SwitchVector,
    close_fixed_ties: bool,
    scenario: &Scenario,
) -> Subgraph {
    let mut index = HashMap::with_capacity(net.nodes.len());
    let mut labels = Vec::with_capacity(net.nodes.len());
    for n in &net.nodes {
        if !scenario.disabled_nodes.contains(&n.id) {
            index.insert(n.id, labels.len());
            labels.push(n.id);
        }
    }
    let edges = net
        .branches
        .iter()
        .filter(|b| !scenario.disabled_branches.contains(&b.id))
        .filter(|b| match b.switch {
            None => true,
            Some(SwitchDevice {
                control: SwitchControl::Controllable(i),
                ..
            }) => switches.0[i],
            Some(SwitchDevice {
                control: SwitchControl::Fixed,
                normally_closed,
            }) => normally_closed || close_fixed_ties,
        })
        .filter_map(|b| match (index.get(&b.from), index.get(&b.to)) {
            (Some(&u), Some(&v)) => Some((u, v, Some(b.id))),
            _ => None,
        })
        .collect();
    Subgraph::build(labels, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "source_rating 100\nnode 1 source 0\nnode 2 load 10\nbranch 1 1 2\n";

    #[test]
    fn bundled_feeder_matches_published_aggregates() {
        let net = GridNetwork::bundled();
        assert_eq!(net.load_count(), 85);
        assert!((net.total_demand() - 3855.26).abs() < 1e-6);
        assert_eq!(net.ders.len(), 4);
        assert!((net.total_der_rating() - 1401.4).abs() < 1e-9);
        assert_eq!(net.source().id, 150);
        assert_eq!(net.source_rating, 5000.0);
        let crit: Vec<_> = net.critical_loads().map(|n| (n.id, n.demand)).collect();
        assert_eq!(crit, vec![(48, 258.20), (76, 303.69)]);
        assert!((net.total_critical_demand() - 561.89).abs() < 1e-9);
        let der_nodes: Vec<_> = net.ders.iter().map(|d| d.node).collect();
        assert_eq!(der_nodes, vec![49, 21, 105, 56]);
        let devices = net.branches.iter().filter(|b| b.has_switch()).count();
        assert_eq!(devices, 12);
        assert_eq!(net.controllable_switch_count(), 10);
        assert_eq!(net.normal_switches().to_string(), "[1 0 1 0 0 0 1 1 0 1]");
    }

    #[test]
    fn minimal_feeder() {
        let net = parse_feeder(MINIMAL).unwrap();
        assert_eq!(net.nodes.len(), 2);
        assert_eq!(net.controllable_switch_count(), 0);
        assert!(net.ders.is_empty());
    }

    #[test]
    fn parse_errors_carry_context() {
        let err = parse_feeder("source_rating 100\nnode 1 source 0\nnode 2 lod 10\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");

        let dup = "source_rating 100\nnode 1 source 0\nnode 1 load 10\n";
        assert!(matches!(
            parse_feeder(dup),
            Err(Error::Parse { line: 3, .. })
        ));

        let dangling = "source_rating 100\nnode 1 source 0\nnode 2 load 1\nbranch 1 1 3\n";
        assert!(matches!(
            parse_feeder(dangling),
            Err(Error::Parse { line: 4, .. })
        ));

        let collide = "source_rating 100\nnode 1 source 0\nnode 2 load 1\nnode 3 load 1\n\
                       branch 1 1 2 switch 4 nc\nbranch 2 2 3 switch 4 nc\n";
        let err = parse_feeder(collide).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 6, .. }));
        assert!(err.to_string().contains("switch index 4"));

        let sourceless = "source_rating 100\nnode 1 load 1\n";
        assert!(matches!(
            parse_feeder(sourceless),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn feeder_text_round_trip() {
        let net = GridNetwork::bundled();
        let again = parse_feeder(&net.to_feeder_text()).unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn topology_with_everything_closed_spans_all_nodes() {
        let net = GridNetwork::bundled();
        let sub = effective_topology(&net, &SwitchVector::all(true), &Scenario::none());
        assert_eq!(sub.node_count(), net.nodes.len());
        assert!(sub.is_connected());
    }

    #[test]
    fn all_switched_feeder_opens_to_no_edges() {
        let text = "source_rating 100\nnode 1 source 0\nnode 2 load 1\nnode 3 load 1\n\
                    branch 1 1 2 switch 0 nc\nbranch 2 2 3 switch 1 nc\n";
        let net = parse_feeder(text).unwrap();
        let sub = effective_topology(&net, &SwitchVector::all(false), &Scenario::none());
        assert_eq!(sub.edge_count(), 0);
        assert_eq!(sub.node_count(), 3);
    }

    #[test]
    fn scenario_removes_exactly_its_branches() {
        let net = GridNetwork::bundled();
        let mut flood = Scenario::none();
        flood.disabled_branches = [40, 56, 77].into_iter().collect();
        let sw = SwitchVector::all(true);
        let base: BTreeSet<u32> = effective_topology(&net, &sw, &Scenario::none())
            .branch_ids()
            .collect();
        let hit: BTreeSet<u32> = effective_topology(&net, &sw, &flood).branch_ids().collect();
        let expected: BTreeSet<u32> = base.difference(&flood.disabled_branches).copied().collect();
        assert_eq!(hit, expected);
    }

    #[test]
    fn bundled_scenarios_validate() {
        let net = GridNetwork::bundled();
        let scenarios = Scenario::bundled();
        assert_eq!(scenarios.len(), 4);
        for sc in &scenarios {
            sc.validate(&net).unwrap();
            let again = parse_scenario(&sc.to_scenario_text()).unwrap();
            assert_eq!(&again, sc);
        }
        let mut bogus = Scenario::none();
        bogus.disabled_nodes.insert(9999);
        assert!(bogus.validate(&net).is_err());
    }

    #[test]
    fn switch_vector_parsing() {
        assert!(SwitchVector::from_bits(&[1, 0, 1]).is_err());
        assert!(SwitchVector::from_bits(&[2; 10]).is_err());
        let sw = SwitchVector::from_bits(&[1, 0, 1, 0, 0, 0, 1, 1, 0, 1]).unwrap();
        assert_eq!(sw.closed_count(), 5);
        assert_eq!(sw.toggles_from(&SwitchVector::all(true)), 5);
    }
}
