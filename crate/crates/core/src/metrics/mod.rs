//! Resilience parameters of an energized topology and their AHP-weighted
//! aggregation.

pub mod ahp;
pub mod centrality;
pub mod percolation;
pub mod score;
pub mod supply;

pub use ahp::{ahp_weights, parse_pairwise, AhpWeights, DEFAULT_WEIGHTS};
pub use centrality::{
    all_centralities, high_centrality_count, information_centrality, network_efficiency,
    HighCentralityRule,
};
pub use percolation::{
    percolation_curve, percolation_strength, percolation_threshold, susceptibility,
    PercolationConfig, PercolationPoint,
};
pub use score::{composite_score, composite_score_weighted, normalize_metrics, resilience_score};
pub use supply::{
    analyze_supply, average_ros, classify_paths, cls_ratio, dg_feasible, path_variability,
    rating_of_service, DerDispatch, PathCounts, SupplyAnalysis, SupplySet,
};

use crate::feeder::GridNetwork;
use crate::topology::Subgraph;

/// The five resilience parameters on their raw scales.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricVector {
    pub pv_cl: f64,
    pub n_cls: f64,
    pub a_ros: f64,
    pub p_m: f64,
    pub n_hc: f64,
}

impl MetricVector {
    pub fn to_array(&self) -> [f64; 5] {
        [self.pv_cl, self.n_cls, self.a_ros, self.p_m, self.n_hc]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsConfig {
    pub percolation: PercolationConfig,
    pub high_centrality: HighCentralityRule,
    pub weights: AhpWeights,
}

/// Topology-only parameters; these depend on the graph, not on which
/// sources are energized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyMetrics {
    pub p_m: f64,
    pub n_hc: f64,
}

pub fn topology_metrics(sub: &Subgraph, cfg: &MetricsConfig) -> TopologyMetrics {
    let p_m = if sub.node_count() == 0 {
        0.0
    } else {
        let pc = &cfg.percolation;
        percolation_threshold(sub, &pc.grid, pc.trials, pc.seed)
            .expect("validated percolation grid")
    };
    TopologyMetrics {
        p_m,
        n_hc: high_centrality_count(sub, cfg.high_centrality) as f64,
    }
}

/// Supply-dependent parameters `(PV_CL, N_CLS, A_RoS)` and the trace
/// they were computed from.
pub fn supply_metrics(
    net: &GridNetwork,
    sub: &Subgraph,
    supply: &SupplySet,
) -> (f64, f64, f64, SupplyAnalysis) {
    let analysis = analyze_supply(net, sub, supply);
    let pv = path_variability(analysis.counts);
    let n_cls = if analysis.critical_kva > 0.0 {
        cls_ratio(analysis.served_kva(), analysis.critical_kva).expect("positive critical demand")
    } else {
        0.0
    };
    let a_ros = if analysis.paths.is_empty() || analysis.critical_total == 0 {
        0.0
    } else {
        let ros = rating_of_service(&analysis.paths).expect("positive source ratings");
        average_ros(
            analysis.served.len(),
            analysis.critical_total,
            ros,
            analysis.paths.len(),
        )
        .expect("non-zero denominators")
    };
    (pv, n_cls, a_ros, analysis)
}

pub fn raw_metrics(
    net: &GridNetwork,
    sub: &Subgraph,
    supply: &SupplySet,
    cfg: &MetricsConfig,
) -> MetricVector {
    let (pv_cl, n_cls, a_ros, _) = supply_metrics(net, sub, supply);
    let topo = topology_metrics(sub, cfg);
    MetricVector {
        pv_cl,
        n_cls,
        a_ros,
        p_m: topo.p_m,
        n_hc: topo.n_hc,
    }
}
