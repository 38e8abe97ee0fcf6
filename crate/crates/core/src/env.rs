//! Episodic switching environment: two-state weather chain, budget
//! accounting, configuration/switch actions and the resilience reward.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::economics::{EconomicParameters, Weather, NUM_CONFIGS};
use crate::error::{Error, Result};
use crate::feeder::{
    effective_topology_with, parse_scenario, GridNetwork, Scenario, SwitchVector, NUM_SWITCHES,
};
use crate::kv::KvFile;
use crate::metrics::{
    ahp_weights, parse_pairwise, percolation::uniform_grid, resilience_score, supply_metrics,
    topology_metrics, AhpWeights, MetricVector, MetricsConfig, PercolationConfig, SupplySet,
    TopologyMetrics,
};
use crate::topology::Subgraph;

pub const OBS_DIM: usize = 20;
pub type Observation = [f64; OBS_DIM];

/// Floor on the reward standard deviation during normalization.
pub const REWARD_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct RewardConstants {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    pub beta_efficiency: f64,
    /// Efficiency bonus applies when the step cost is at most this share of the budget.
    pub efficiency_fraction: f64,
    pub beta_adaptation: f64,
    /// Calamity steps (counted from onset) during which a change earns the adaptation bonus.
    pub adaptation_window: u32,
}

impl Default for RewardConstants {
    fn default() -> Self {
        RewardConstants {
            alpha1: 100.0,
            alpha2: 1.0,
            alpha3: 200.0,
            alpha4: 0.5,
            beta_efficiency: 10.0,
            efficiency_fraction: 0.01,
            beta_adaptation: 20.0,
            adaptation_window: 2,
        }
    }
}

/// Tiered calamity resilience bonus.
pub fn resilience_bonus(rho: f64) -> f64 {
    if rho > 0.8 {
        150.0
    } else if rho > 0.7 {
        100.0
    } else if rho > 0.6 {
        50.0
    } else {
        -100.0
    }
}

/// `α₁ρ − α₂·cost + β_efficiency·[efficient]`.
pub fn reward_normal(rho: f64, cost: f64, efficient: bool, k: &RewardConstants) -> f64 {
    k.alpha1 * rho - k.alpha2 * cost + if efficient { k.beta_efficiency } else { 0.0 }
}

/// `α₃ρ − α₄·cost + β_res(ρ) + β_adaptation·[adapted]`.
pub fn reward_calamity(rho: f64, cost: f64, adapted: bool, k: &RewardConstants) -> f64 {
    k.alpha3 * rho - k.alpha4 * cost
        + resilience_bonus(rho)
        + if adapted { k.beta_adaptation } else { 0.0 }
}

/// `C_config(c) + C_maint·toggles·μ_maint(c)`.
pub fn step_cost(config: usize, toggles: usize, p: &EconomicParameters) -> Result<f64> {
    if config >= NUM_CONFIGS {
        return Err(Error::domain(format!(
            "configuration {config} not in 0..{NUM_CONFIGS}"
        )));
    }
    Ok(p.config_cost[config] + p.c_maint * toggles as f64 * p.mu_maint[config])
}

/// Welford running mean and population variance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `(x − μ)/max(σ, ε)` against the current statistics.
    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.mean) / self.std().max(REWARD_EPS)
    }
}

/// Folds `raw` into the statistics, then normalizes it.
pub fn normalize_reward(raw: f64, stats: &mut RunningStats) -> f64 {
    stats.push(raw);
    stats.normalize(raw)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherState {
    pub weather: Weather,
    /// Index into the scenario library while in calamity.
    pub scenario: Option<usize>,
    /// Consecutive calamity steps, counting the current one.
    pub fault_duration: u32,
}

impl WeatherState {
    pub fn normal() -> Self {
        WeatherState {
            weather: Weather::Normal,
            scenario: None,
            fault_duration: 0,
        }
    }
}

/// Two-state Markov chain; entering calamity draws a scenario uniformly.
pub fn weather_transition<R: Rng>(
    current: &WeatherState,
    p_enter: f64,
    p_exit: f64,
    n_scenarios: usize,
    rng: &mut R,
) -> WeatherState {
    let u: f64 = rng.gen();
    match current.weather {
        Weather::Normal if u < p_enter => WeatherState {
            weather: Weather::Calamity,
            scenario: (n_scenarios > 0).then(|| rng.gen_range(0..n_scenarios)),
            fault_duration: 1,
        },
        Weather::Normal => WeatherState::normal(),
        Weather::Calamity if u < p_exit => WeatherState::normal(),
        Weather::Calamity => WeatherState {
            fault_duration: current.fault_duration + 1,
            ..current.clone()
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub episode_length: usize,
    pub budget: f64,
    pub p_enter: f64,
    pub p_exit: f64,
    pub rewards: RewardConstants,
    /// Monte-Carlo trials per grid point for the percolation threshold.
    pub percolation_trials: usize,
    pub percolation_step: f64,
    pub scenario_dir: Option<PathBuf>,
    pub weights_file: Option<PathBuf>,
    pub economics_file: Option<PathBuf>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            episode_length: 100,
            budget: 5000.0,
            p_enter: 0.10,
            p_exit: 0.30,
            rewards: RewardConstants::default(),
            percolation_trials: 50,
            percolation_step: 0.02,
            scenario_dir: None,
            weights_file: None,
            economics_file: None,
        }
    }
}

impl EnvConfig {
    /// Parses a `key = value` file; relative paths resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let kv = KvFile::parse(text)?;
        let mut c = EnvConfig::default();
        macro_rules! read {
            ($($key:literal => $dst:expr),* $(,)?) => {
                $(if let Some(v) = kv.get($key)? { $dst = v; })*
            };
        }
        read! {
            "episode_length" => c.episode_length,
            "budget" => c.budget,
            "p_enter" => c.p_enter,
            "p_exit" => c.p_exit,
            "alpha1" => c.rewards.alpha1,
            "alpha2" => c.rewards.alpha2,
            "alpha3" => c.rewards.alpha3,
            "alpha4" => c.rewards.alpha4,
            "beta_efficiency" => c.rewards.beta_efficiency,
            "efficiency_fraction" => c.rewards.efficiency_fraction,
            "beta_adaptation" => c.rewards.beta_adaptation,
            "adaptation_window" => c.rewards.adaptation_window,
            "percolation_trials" => c.percolation_trials,
            "percolation_step" => c.percolation_step,
        }
        let path = |key: &str| {
            kv.get_str(key).map(|v| match base {
                Some(b) if Path::new(v).is_relative() => b.join(v),
                _ => PathBuf::from(v),
            })
        };
        c.scenario_dir = path("scenario_dir");
        c.weights_file = path("weights_file");
        c.economics_file = path("economics_file");
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        if self.episode_length == 0 {
            return Err(Error::domain("episode_length must be at least 1"));
        }
        if !(self.budget > 0.0) {
            return Err(Error::domain("budget must be positive"));
        }
        for (name, p) in [("p_enter", self.p_enter), ("p_exit", self.p_exit)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::domain(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.percolation_trials == 0
            || !(self.percolation_step > 0.0 && self.percolation_step <= 0.5)
        {
            return Err(Error::domain(
                "percolation needs trials ≥ 1 and a step in (0, 0.5]",
            ));
        }
        Ok(())
    }
}

/// Loads every `*.scenario` file in `dir`, sorted by file name.
pub fn load_scenarios(dir: &Path) -> Result<Vec<Scenario>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "scenario"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|f| {
            let text = std::fs::read_to_string(f).map_err(|e| Error::io(f, e))?;
            parse_scenario(&text)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Action {
    pub config: usize,
    pub switches: SwitchVector,
    /// 0 prefers substation supply, 1 prefers DER islands.
    pub grid: u8,
}

impl Action {
    pub fn new(config: usize, switch_bits: &[u8], grid: u8) -> Result<Self> {
        if config >= NUM_CONFIGS {
            return Err(Error::domain(format!(
                "configuration {config} not in 0..{NUM_CONFIGS}"
            )));
        }
        if grid > 1 {
            return Err(Error::domain(format!(
                "grid action must be 0 or 1, got {grid}"
            )));
        }
        Ok(Action {
            config,
            switches: SwitchVector::from_bits(switch_bits)?,
            grid,
        })
    }
}

/// Resilience of a state: the score plus the normalized parameters that
/// enter the observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResilienceEval {
    pub rho: f64,
    pub raw: MetricVector,
    pub normalized: [f64; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub rho: f64,
    pub step_cost: f64,
    pub weather: Weather,
    pub scenario: Option<String>,
    pub config: usize,
    pub closed_switches: usize,
    pub toggles: usize,
    pub efficiency_bonus: bool,
    pub adapted: bool,
    pub resilience_bonus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub normalized_reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

type TopoKey = (u16, bool, Option<usize>);

struct CachedTopology {
    sub: Subgraph,
    metrics: TopologyMetrics,
}

pub struct GridEnv {
    net: Rc<GridNetwork>,
    scenarios: Vec<Scenario>,
    cfg: EnvConfig,
    econ: EconomicParameters,
    metrics_cfg: MetricsConfig,
    lo: [f64; 5],
    hi: [f64; 5],
    cache: HashMap<TopoKey, Rc<CachedTopology>>,
    no_scenario: Scenario,
    rng: ChaCha8Rng,
    stats: RunningStats,
    step: usize,
    budget: f64,
    weather: WeatherState,
    switches: SwitchVector,
    config: usize,
    grid: u8,
    cum_rho: f64,
    cum_cost: f64,
    last_cost: f64,
    observation: Observation,
}

impl GridEnv {
    /// Environment over `net` with the given scenario library.
    pub fn new(
        net: Rc<GridNetwork>,
        scenarios: Vec<Scenario>,
        cfg: EnvConfig,
        econ: EconomicParameters,
    ) -> Result<Self> {
        Self::with_weights(net, scenarios, cfg, econ, AhpWeights::default())
    }

    pub fn with_weights(
        net: Rc<GridNetwork>,
        scenarios: Vec<Scenario>,
        cfg: EnvConfig,
        econ: EconomicParameters,
        weights: AhpWeights,
    ) -> Result<Self> {
        cfg.validate()?;
        econ.validate()?;
        if weights.weights.len() != 5 {
            return Err(Error::domain(
                "resilience weighting needs exactly 5 weights",
            ));
        }
        for sc in &scenarios {
            sc.validate(&net)?;
        }
        let metrics_cfg = MetricsConfig {
            percolation: PercolationConfig {
                grid: uniform_grid(cfg.percolation_step),
                trials: cfg.percolation_trials,
                seed: 0,
            },
            weights,
            ..Default::default()
        };
        let mut env = GridEnv {
            switches: net.normal_switches(),
            net,
            scenarios,
            cfg,
            econ,
            metrics_cfg,
            lo: [0.0; 5],
            hi: [1.0; 5],
            cache: HashMap::new(),
            no_scenario: Scenario::none(),
            rng: ChaCha8Rng::seed_from_u64(0),
            stats: RunningStats::default(),
            step: 0,
            budget: 0.0,
            weather: WeatherState::normal(),
            config: 0,
            grid: 0,
            cum_rho: 0.0,
            cum_cost: 0.0,
            last_cost: 0.0,
            observation: [0.0; OBS_DIM],
        };
        env.calibrate();
        env.reset(0);
        Ok(env)
    }

    /// Bundled feeder and scenarios with the default configuration.
    pub fn bundled(cfg: EnvConfig) -> Result<Self> {
        Self::new(
            Rc::new(GridNetwork::bundled()),
            Scenario::bundled(),
            cfg,
            EconomicParameters::default(),
        )
    }

    /// Builds an environment from a config, honouring its scenario,
    /// weight and economics file references.
    pub fn from_config(net: Rc<GridNetwork>, cfg: EnvConfig) -> Result<Self> {
        Self::from_config_with(net, cfg, Vec::new())
    }

    /// As [`GridEnv::from_config`], with `extra` scenarios appended to the library.
    pub fn from_config_with(
        net: Rc<GridNetwork>,
        cfg: EnvConfig,
        extra: Vec<Scenario>,
    ) -> Result<Self> {
        let mut scenarios = match &cfg.scenario_dir {
            Some(dir) => load_scenarios(dir)?,
            None => Scenario::bundled(),
        };
        scenarios.extend(extra);
        let weights = match &cfg.weights_file {
            Some(f) => {
                let text = std::fs::read_to_string(f).map_err(|e| Error::io(f, e))?;
                ahp_weights(&parse_pairwise(&text)?)?
            }
            None => AhpWeights::default(),
        };
        let econ = match &cfg.economics_file {
            Some(f) => EconomicParameters::load(f)?,
            None => EconomicParameters::default(),
        };
        Self::with_weights(net, scenarios, cfg, econ, weights)
    }

    /// Min–max bounds of the raw parameters over reference states: every
    /// scenario (and none) with normal, all-closed and all-open switches,
    /// fixed ties open and closed, no DERs and all DERs under both grid
    /// preferences.
    fn calibrate(&mut self) {
        let n_der_max = self.econ.n_der.iter().copied().max().unwrap_or(0);
        let switch_sets = [
            self.net.normal_switches(),
            SwitchVector::all(true),
            SwitchVector::all(false),
        ];
        let mut raws = Vec::new();
        let scenarios: Vec<Option<usize>> = std::iter::once(None)
            .chain((0..self.scenarios.len()).map(Some))
            .collect();
        for sc in scenarios {
            for sw in &switch_sets {
                for ties in [false, true] {
                    for (n_der, prefer) in [(0, true), (n_der_max, true), (n_der_max, false)] {
                        raws.push(self.raw_metrics(sw, ties, sc, n_der, prefer));
                    }
                }
            }
        }
        for k in 0..5 {
            self.lo[k] = raws
                .iter()
                .map(|r| r.to_array()[k])
                .fold(f64::INFINITY, f64::min);
            self.hi[k] = raws
                .iter()
                .map(|r| r.to_array()[k])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }

    fn topology(
        &mut self,
        switches: &SwitchVector,
        close_ties: bool,
        scenario: Option<usize>,
    ) -> Rc<CachedTopology> {
        let key = (switches.bits(), close_ties, scenario);
        if let Some(hit) = self.cache.get(&key) {
            return Rc::clone(hit);
        }
        let sc = scenario.map_or(&self.no_scenario, |i| &self.scenarios[i]);
        let sub = effective_topology_with(&self.net, switches, close_ties, sc);
        let metrics = topology_metrics(&sub, &self.metrics_cfg);
        let entry = Rc::new(CachedTopology { sub, metrics });
        self.cache.insert(key, Rc::clone(&entry));
        entry
    }

    fn raw_metrics(
        &mut self,
        switches: &SwitchVector,
        close_ties: bool,
        scenario: Option<usize>,
        n_der: usize,
        prefer_substation: bool,
    ) -> MetricVector {
        let topo = self.topology(switches, close_ties, scenario);
        let supply = SupplySet::active(&self.net, n_der, prefer_substation);
        let (pv_cl, n_cls, a_ros, _) = supply_metrics(&self.net, &topo.sub, &supply);
        MetricVector {
            pv_cl,
            n_cls,
            a_ros,
            p_m: topo.metrics.p_m,
            n_hc: topo.metrics.n_hc,
        }
    }

    /// Calibrated min–max scaling, clamped to [0, 1]; constant components map to 0.5.
    pub fn normalize(&self, raw: &MetricVector) -> [f64; 5] {
        let a = raw.to_array();
        std::array::from_fn(|k| {
            if self.hi[k] > self.lo[k] {
                ((a[k] - self.lo[k]) / (self.hi[k] - self.lo[k])).clamp(0.0, 1.0)
            } else {
                0.5
            }
        })
    }

    /// Resilience of a configuration/switch/grid choice under a scenario.
    pub fn evaluate(
        &mut self,
        config: usize,
        switches: &SwitchVector,
        grid: u8,
        scenario: Option<usize>,
    ) -> ResilienceEval {
        let raw = self.raw_metrics(
            switches,
            config == 5,
            scenario,
            self.econ.n_der[config],
            grid == 0,
        );
        let normalized = self.normalize(&raw);
        ResilienceEval {
            rho: resilience_score(&normalized, &self.metrics_cfg.weights),
            raw,
            normalized,
        }
    }

    /// Starts an episode: normal weather, full budget, normal switch
    /// positions, configuration 0. Reward statistics persist across episodes.
    pub fn reset(&mut self, seed: u64) -> Observation {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.step = 0;
        self.budget = self.cfg.budget;
        self.weather = WeatherState::normal();
        self.switches = self.net.normal_switches();
        self.config = 0;
        self.grid = 0;
        self.cum_rho = 0.0;
        self.cum_cost = 0.0;
        self.last_cost = 0.0;
        self.observation = self.observe();
        self.observation
    }

    fn observe(&mut self) -> Observation {
        let switches = self.switches;
        let eval = self.evaluate(self.config, &switches, self.grid, self.weather.scenario);
        let mut obs = [0.0; OBS_DIM];
        obs[0] = f64::from(u8::from(self.weather.weather.is_calamity()));
        obs[1..=NUM_SWITCHES].copy_from_slice(&switches.as_f64());
        obs[11] = (self.budget / self.cfg.budget).clamp(0.0, 1.0);
        obs[12] = (self.step as f64 / self.cfg.episode_length as f64).clamp(0.0, 1.0);
        obs[13] = eval.rho;
        obs[14] = eval.normalized[0];
        obs[15] = eval.normalized[1];
        obs[16] = eval.normalized[2];
        let efficiency = self.cum_rho / self.cum_cost.max(1.0);
        obs[17] = efficiency / (1.0 + efficiency);
        obs[18] = f64::from(self.weather.fault_duration) / self.cfg.episode_length as f64;
        obs[19] = self.last_cost / self.cfg.budget;
        obs
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.cfg.episode_length || self.budget <= 0.0
    }

    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        if action.config >= NUM_CONFIGS || action.grid > 1 {
            return Err(Error::domain(format!(
                "malformed action: configuration {} / grid {}",
                action.config, action.grid
            )));
        }
        if self.is_done() {
            return Ok(StepOutcome {
                observation: self.observation,
                reward: 0.0,
                normalized_reward: 0.0,
                done: true,
                info: StepInfo {
                    rho: 0.0,
                    step_cost: 0.0,
                    weather: self.weather.weather,
                    scenario: self.scenario_name(),
                    config: self.config,
                    closed_switches: self.switches.closed_count(),
                    toggles: 0,
                    efficiency_bonus: false,
                    adapted: false,
                    resilience_bonus: 0.0,
                },
            });
        }
        let toggles = action.switches.toggles_from(&self.switches);
        let cost = step_cost(action.config, toggles, &self.econ)?;
        let adapted = self.weather.weather.is_calamity()
            && self.weather.fault_duration <= self.cfg.rewards.adaptation_window
            && action.config != self.config;
        self.switches = action.switches;
        self.config = action.config;
        self.grid = action.grid;

        let eval = self.evaluate(
            action.config,
            &action.switches,
            action.grid,
            self.weather.scenario,
        );
        let k = &self.cfg.rewards;
        let efficient = cost <= k.efficiency_fraction * self.cfg.budget;
        let (reward, bonus) = match self.weather.weather {
            Weather::Normal => (reward_normal(eval.rho, cost, efficient, k), 0.0),
            Weather::Calamity => (
                reward_calamity(eval.rho, cost, adapted, k),
                resilience_bonus(eval.rho),
            ),
        };
        if !reward.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite reward at step {}",
                self.step
            )));
        }
        let normalized_reward = normalize_reward(reward, &mut self.stats);
        let info = StepInfo {
            rho: eval.rho,
            step_cost: cost,
            weather: self.weather.weather,
            scenario: self.scenario_name(),
            config: action.config,
            closed_switches: action.switches.closed_count(),
            toggles,
            efficiency_bonus: efficient && !self.weather.weather.is_calamity(),
            adapted,
            resilience_bonus: bonus,
        };

        self.budget = (self.budget - cost).max(0.0);
        self.cum_rho += eval.rho;
        self.cum_cost += cost;
        self.last_cost = cost;
        self.step += 1;
        self.weather = weather_transition(
            &self.weather,
            self.cfg.p_enter,
            self.cfg.p_exit,
            self.scenarios.len(),
            &mut self.rng,
        );
        self.observation = self.observe();
        Ok(StepOutcome {
            observation: self.observation,
            reward,
            normalized_reward,
            done: self.is_done(),
            info,
        })
    }

    fn scenario_name(&self) -> Option<String> {
        self.weather
            .scenario
            .map(|i| self.scenarios[i].name.clone())
    }

    pub fn observation(&self) -> Observation {
        self.observation
    }

    pub fn weather(&self) -> &WeatherState {
        &self.weather
    }

    /// Forces the weather, e.g. to pin a calamity for reporting. The
    /// observation is refreshed.
    pub fn set_weather(&mut self, weather: WeatherState) -> Result<()> {
        if let Some(i) = weather.scenario {
            if i >= self.scenarios.len() {
                return Err(Error::domain(format!("scenario index {i} out of range")));
            }
        }
        self.weather = weather;
        self.observation = self.observe();
        Ok(())
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn switches(&self) -> SwitchVector {
        self.switches
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn config_mut(&mut self) -> &mut EnvConfig {
        &mut self.cfg
    }

    pub fn economics(&self) -> &EconomicParameters {
        &self.econ
    }

    pub fn network(&self) -> &GridNetwork {
        &self.net
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn reward_stats(&self) -> RunningStats {
        self.stats
    }

    pub fn set_reward_stats(&mut self, stats: RunningStats) {
        self.stats = stats;
    }

    pub fn cached_topologies(&self) -> usize {
        self.cache.len()
    }
}
