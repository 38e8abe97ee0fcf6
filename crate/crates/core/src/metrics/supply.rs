//! Electrical service parameters: supply-path classification, critical-load
//! service ratio, rating of service and the DG/capacity feasibility check.

use crate::error::{Error, Result};
use crate::feeder::GridNetwork;
use crate::topology::Subgraph;

/// Supply-route counts to the critical loads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PathCounts {
    /// Critical loads fed by a single source without alternative.
    pub n_ip: u32,
    /// All critical loads fed through separate, non-interconnected sections.
    pub n_ic: u32,
    /// All critical loads fed from one interconnected section with >= 2 sources.
    pub n_cc: u32,
}

impl std::ops::Add for PathCounts {
    type Output = PathCounts;
    fn add(self, o: PathCounts) -> PathCounts {
        PathCounts {
            n_ip: self.n_ip + o.n_ip,
            n_ic: self.n_ic + o.n_ic,
            n_cc: self.n_cc + o.n_cc,
        }
    }
}

/// `0.1·N_IP + 0.4·N_IC + 0.5·N_CC`.
pub fn path_variability(pc: PathCounts) -> f64 {
    0.1 * pc.n_ip as f64 + 0.4 * pc.n_ic as f64 + 0.5 * pc.n_cc as f64
}

/// Served over total critical kVA, clamped to [0, 1].
pub fn cls_ratio(served_kva: f64, total_kva: f64) -> Result<f64> {
    if !(total_kva > 0.0) {
        return Err(Error::domain(format!(
            "total critical demand must be positive, got {total_kva}"
        )));
    }
    Ok((served_kva / total_kva).clamp(0.0, 1.0))
}

/// `Σ (R_source − R_CL) / R_source` over `(source_rating, critical_rating)` paths.
pub fn rating_of_service(paths: &[(f64, f64)]) -> Result<f64> {
    paths.iter().try_fold(0.0, |acc, &(source, cl)| {
        if !(source > 0.0) {
            return Err(Error::domain(format!(
                "source rating must be positive, got {source}"
            )));
        }
        Ok(acc + (source - cl) / source)
    })
}

/// `(N_CL / N_TCL) · (RoS / N_PC)`.
pub fn average_ros(n_served: usize, n_total: usize, ros: f64, n_paths: usize) -> Result<f64> {
    if n_total == 0 {
        return Err(Error::domain("no critical loads"));
    }
    if n_paths == 0 {
        return Err(Error::domain("no supply paths"));
    }
    Ok((n_served as f64 / n_total as f64) * (ros / n_paths as f64))
}

/// Real and reactive set-point of one DER, in the order of `GridNetwork::ders`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerDispatch {
    pub p: f64,
    pub q: f64,
    pub active: bool,
}

/// DG operating limits plus a capacity proxy: served load may not exceed
/// the substation rating plus the ratings of active DERs.
pub fn dg_feasible(net: &GridNetwork, dispatch: &[DerDispatch], served_load: f64) -> bool {
    if dispatch.len() != net.ders.len() {
        return false;
    }
    let mut capacity = net.source_rating;
    for (der, d) in net.ders.iter().zip(dispatch) {
        if !d.active {
            continue;
        }
        if d.p < der.p_min || d.p > der.p_max || d.q < der.q_min || d.q > der.q_max {
            return false;
        }
        capacity += der.rating;
    }
    served_load <= capacity
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupplySource {
    pub node: u32,
    pub rating: f64,
    pub is_substation: bool,
    /// Position in `GridNetwork::ders` for DER units.
    pub der_slot: Option<usize>,
}

/// Energized supply points offered to the path analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplySet {
    pub sources: Vec<SupplySource>,
    /// When set, DERs that share a section with the substation run behind
    /// it and are not counted as independent supply routes.
    pub prefer_substation: bool,
}

impl SupplySet {
    /// Substation plus every DER, all counted independently.
    pub fn all(net: &GridNetwork) -> Self {
        Self::active(net, net.ders.len(), false)
    }

    /// Substation plus the first `n_der` DERs in priority order.
    pub fn active(net: &GridNetwork, n_der: usize, prefer_substation: bool) -> Self {
        let mut sources = vec![SupplySource {
            node: net.source().id,
            rating: net.source_rating,
            is_substation: true,
            der_slot: None,
        }];
        sources.extend(
            net.ders
                .iter()
                .take(n_der)
                .enumerate()
                .map(|(i, d)| SupplySource {
                    node: d.node,
                    rating: d.rating,
                    is_substation: false,
                    der_slot: Some(i),
                }),
        );
        SupplySet {
            sources,
            prefer_substation,
        }
    }
}

/// Result of tracing supply to the critical loads through a subgraph.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyAnalysis {
    pub counts: PathCounts,
    /// Served critical loads as `(node, kVA)`.
    pub served: Vec<(u32, f64)>,
    pub critical_total: usize,
    pub critical_kva: f64,
    /// `(source_rating, critical_rating)` per supply path.
    pub paths: Vec<(f64, f64)>,
    pub dispatch: Vec<DerDispatch>,
}

impl SupplyAnalysis {
    pub fn served_kva(&self) -> f64 {
        self.served.iter().fold(0.0, |acc, (_, kva)| acc + kva)
    }
}

struct Section {
    capacity: f64,
    has_substation: bool,
    independent: Vec<SupplySource>,
    der_slots: Vec<usize>,
    critical_served_kva: f64,
    critical_served: usize,
}

/// Traces supply from `supply` to every critical load of `net` inside `sub`.
///
/// A critical load is served when its section holds at least one source and
/// the section's served critical demand stays within the section's source
/// capacity (loads admitted in file order). Path counts follow the served
/// set: if every critical load is served from one section with two or more
/// independent sources that is a connected combination; if they are served
/// from two or more separate sections, an isolated combination; otherwise
/// each served load counts as an isolated path.
pub fn analyze_supply(net: &GridNetwork, sub: &Subgraph, supply: &SupplySet) -> SupplyAnalysis {
    let comp = sub.components();
    let n_comp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut sections: Vec<Section> = (0..n_comp)
        .map(|_| Section {
            capacity: 0.0,
            has_substation: false,
            independent: Vec::new(),
            der_slots: Vec::new(),
            critical_served_kva: 0.0,
            critical_served: 0,
        })
        .collect();

    for src in &supply.sources {
        if let Some(idx) = sub.index_of(src.node) {
            let sec = &mut sections[comp[idx]];
            sec.capacity += src.rating;
            sec.has_substation |= src.is_substation;
            sec.independent.push(*src);
            if let Some(slot) = src.der_slot {
                sec.der_slots.push(slot);
            }
        }
    }
    if supply.prefer_substation {
        for sec in sections.iter_mut().filter(|s| s.has_substation) {
            sec.independent.retain(|s| s.is_substation);
        }
    }

    let critical: Vec<_> = net.critical_loads().collect();
    let critical_kva: f64 = critical.iter().map(|n| n.demand).sum();
    let mut served = Vec::new();
    let mut served_sections = Vec::new();
    for load in &critical {
        let Some(idx) = sub.index_of(load.id) else {
            continue;
        };
        let c = comp[idx];
        let sec = &mut sections[c];
        if sec.independent.is_empty() {
            continue;
        }
        if sec.critical_served_kva + load.demand <= sec.capacity {
            sec.critical_served_kva += load.demand;
            sec.critical_served += 1;
            served.push((load.id, load.demand));
            served_sections.push(c);
        }
    }

    // DER set-points: islanded sections share their served critical demand
    // in proportion to rating; sections with the substation leave DERs idle.
    let mut dispatch: Vec<DerDispatch> = net
        .ders
        .iter()
        .map(|_| DerDispatch {
            p: 0.0,
            q: 0.0,
            active: false,
        })
        .collect();
    for src in &supply.sources {
        if let Some(slot) = src.der_slot {
            dispatch[slot].active = sub.index_of(src.node).is_some();
        }
    }
    for sec in &sections {
        if sec.has_substation || sec.der_slots.is_empty() {
            continue;
        }
        for &slot in &sec.der_slots {
            let share = net.ders[slot].rating / sec.capacity;
            dispatch[slot].p = share * sec.critical_served_kva;
        }
    }

    let served_kva = served.iter().fold(0.0, |acc, (_, k)| acc + k);
    if !dg_feasible(net, &dispatch, served_kva) {
        served.clear();
        served_sections.clear();
    }

    let mut distinct = served_sections.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let all_served = !critical.is_empty() && served.len() == critical.len();
    let counts =
        if all_served && distinct.len() == 1 && sections[distinct[0]].independent.len() >= 2 {
            PathCounts {
                n_cc: 1,
                ..Default::default()
            }
        } else if all_served && distinct.len() >= 2 {
            PathCounts {
                n_ic: 1,
                ..Default::default()
            }
        } else {
            PathCounts {
                n_ip: served.len() as u32,
                ..Default::default()
            }
        };

    let mut paths = Vec::new();
    for &c in &distinct {
        let sec = &sections[c];
        for src in &sec.independent {
            paths.push((src.rating, sec.critical_served_kva));
        }
    }

    SupplyAnalysis {
        counts,
        served,
        critical_total: critical.len(),
        critical_kva,
        paths,
        dispatch,
    }
}

/// Path classification with every source of `net` counted independently.
pub fn classify_paths(sub: &Subgraph, net: &GridNetwork) -> PathCounts {
    analyze_supply(net, sub, &SupplySet::all(net)).counts
}
