//! Greedy policy evaluation, contingency recommendations and plot-ready
//! training curves.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::economics::{
    cash_flow, cost_effectiveness, npv, total_cost, total_resilience_value, EconomicParameters,
    EpisodeTrace, TraceStep, Weather, NUM_CONFIGS,
};
use crate::env::{GridEnv, WeatherState};
use crate::error::{Error, Result};
use crate::feeder::SwitchVector;
use crate::kv::KvWriter;
use crate::train::metrics::{rewards_csv, EpisodeRecord, UpdateRecord};
use crate::train::{episode_seed, Agents};

/// Weather held fixed for every step of a reporting episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeatherPin {
    Normal,
    /// Calamity with the scenario at this library index, starting at onset.
    Calamity(usize),
}

impl WeatherPin {
    fn state(self, step: usize) -> WeatherState {
        match self {
            WeatherPin::Normal => WeatherState::normal(),
            WeatherPin::Calamity(i) => WeatherState {
                weather: Weather::Calamity,
                scenario: Some(i),
                fault_duration: step as u32 + 1,
            },
        }
    }
}

/// A greedy episode: its trace and the switch vector chosen at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyEpisode {
    pub trace: EpisodeTrace,
    pub switches: Vec<SwitchVector>,
    pub total_reward: f64,
}

/// Runs the deterministic policy for one episode. With a pin, the weather
/// is forced before every step instead of following the Markov chain.
pub fn run_greedy_episode(
    env: &mut GridEnv,
    agents: &Agents,
    seed: u64,
    pin: Option<WeatherPin>,
) -> Result<GreedyEpisode> {
    let mut obs = env.reset(seed);
    let mut out = GreedyEpisode {
        trace: EpisodeTrace { steps: Vec::new() },
        switches: Vec::new(),
        total_reward: 0.0,
    };
    loop {
        let t = env.step_index();
        if let Some(p) = pin {
            env.set_weather(p.state(t))?;
            obs = env.observation();
        }
        let d = agents.greedy(&obs)?;
        let step = env.step(&d.action)?;
        out.trace.steps.push(TraceStep {
            t,
            weather: step.info.weather,
            config: step.info.config,
            closed_switches: step.info.closed_switches,
            resilience: step.info.rho,
            reward: step.reward,
            step_cost: step.info.step_cost,
        });
        out.switches.push(d.action.switches);
        out.total_reward += step.reward;
        obs = step.observation;
        if step.done {
            return Ok(out);
        }
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (
        mean,
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSummary {
    pub episodes: usize,
    pub steps: usize,
    /// Mean and population std of the per-episode average resilience.
    pub resilience_mean: f64,
    pub resilience_std: f64,
    pub reward_mean: f64,
    pub reward_std: f64,
    pub calamity_steps: usize,
    pub calamity_configs: [usize; NUM_CONFIGS],
    /// Share of calamity steps whose configuration has at least four DERs.
    pub calamity_high_der_share: f64,
    pub total_cost: f64,
    pub total_benefit: f64,
    pub resilience_value: f64,
    pub bcr: f64,
    pub cpub: f64,
    pub net_benefit: f64,
    /// All evaluation cash flows booked to year 0.
    pub npv: f64,
}

impl EvaluationSummary {
    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        w.num("episodes", self.episodes)
            .num("steps", self.steps)
            .num("resilience_mean", self.resilience_mean)
            .num("resilience_std", self.resilience_std)
            .num("reward_mean", self.reward_mean)
            .num("reward_std", self.reward_std)
            .num("calamity_steps", self.calamity_steps);
        for (c, n) in self.calamity_configs.iter().enumerate() {
            w.num(&format!("calamity_config_{c}"), n);
        }
        w.num("calamity_high_der_share", self.calamity_high_der_share)
            .num("total_cost", self.total_cost)
            .num("total_benefit", self.total_benefit)
            .num("resilience_value", self.resilience_value)
            .num("bcr", self.bcr)
            .num("cpub", self.cpub)
            .num("net_benefit", self.net_benefit)
            .num("npv", self.npv);
        w.finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub episodes: Vec<GreedyEpisode>,
    pub summary: EvaluationSummary,
}

/// All traces concatenated, renumbered consecutively.
pub fn concatenate(traces: &[&EpisodeTrace]) -> EpisodeTrace {
    let steps = traces
        .iter()
        .flat_map(|t| t.steps.iter())
        .enumerate()
        .map(|(t, s)| TraceStep { t, ..*s })
        .collect();
    EpisodeTrace { steps }
}

/// `episodes` greedy episodes with seeds derived from `seed`, plus the
/// resilience, reward, calamity-configuration and economic summary.
pub fn evaluate(
    env: &mut GridEnv,
    agents: &Agents,
    episodes: usize,
    seed: u64,
) -> Result<Evaluation> {
    if episodes == 0 {
        return Err(Error::domain("evaluation needs at least one episode"));
    }
    let runs = (1..=episodes)
        .map(|i| run_greedy_episode(env, agents, episode_seed(seed, i), None))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&runs, env.economics())?;
    Ok(Evaluation {
        episodes: runs,
        summary,
    })
}

pub fn summarize(runs: &[GreedyEpisode], econ: &EconomicParameters) -> Result<EvaluationSummary> {
    let per_episode_rho: Vec<f64> = runs
        .iter()
        .map(|r| {
            r.trace.steps.iter().map(|s| s.resilience).sum::<f64>() / r.trace.len().max(1) as f64
        })
        .collect();
    let rewards: Vec<f64> = runs.iter().map(|r| r.total_reward).collect();
    let (resilience_mean, resilience_std) = mean_std(&per_episode_rho);
    let (reward_mean, reward_std) = mean_std(&rewards);

    let mut calamity_configs = [0usize; NUM_CONFIGS];
    for s in runs.iter().flat_map(|r| &r.trace.steps) {
        if s.weather.is_calamity() {
            calamity_configs[s.config] += 1;
        }
    }
    let calamity_steps: usize = calamity_configs.iter().sum();
    let high: usize = (0..NUM_CONFIGS)
        .filter(|&c| econ.n_der[c] >= 4)
        .map(|c| calamity_configs[c])
        .sum();

    let all = concatenate(&runs.iter().map(|r| &r.trace).collect::<Vec<_>>());
    let ce = cost_effectiveness(&all, econ)?;
    Ok(EvaluationSummary {
        episodes: runs.len(),
        steps: all.len(),
        resilience_mean,
        resilience_std,
        reward_mean,
        reward_std,
        calamity_steps,
        calamity_configs,
        calamity_high_der_share: if calamity_steps == 0 {
            0.0
        } else {
            high as f64 / calamity_steps as f64
        },
        total_cost: ce.total_cost,
        total_benefit: ce.benefits,
        resilience_value: total_resilience_value(&all, econ)?,
        bcr: ce.bcr,
        cpub: ce.cpub,
        net_benefit: ce.net_benefit,
        npv: npv(&[cash_flow(&all, econ)?], econ)?,
    })
}

/// Table-style label: DER count, with "+ Additional Switch" for the
/// configuration that also closes the fixed ties.
pub fn config_label(config: usize, econ: &EconomicParameters) -> String {
    let base = format!("{} DER", econ.n_der[config.min(NUM_CONFIGS - 1)]);
    if config == NUM_CONFIGS - 1 {
        format!("{base} + Additional Switch")
    } else {
        base
    }
}

pub const BASE_CASE_LABEL: &str = "Base Case";
pub const REPORT_HEADER: &str = "contingency,weather,recommendation,switches,total_cost";

#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyReportRow {
    pub contingency: String,
    pub weather: String,
    pub recommendation: String,
    pub switches: SwitchVector,
    pub total_cost: f64,
}

impl ContingencyReportRow {
    pub fn new(
        contingency: &str,
        weather: &str,
        recommendation: &str,
        switches: SwitchVector,
        total_cost: f64,
    ) -> Result<Self> {
        if !(total_cost >= 0.0) || !total_cost.is_finite() {
            return Err(Error::domain(format!(
                "report total cost {total_cost} must be finite and non-negative"
            )));
        }
        for (name, v) in [
            ("contingency", contingency),
            ("weather", weather),
            ("recommendation", recommendation),
        ] {
            if v.is_empty() || v.contains([',', '\n']) {
                return Err(Error::domain(format!(
                    "report {name} `{v}` must be non-empty without commas or newlines"
                )));
            }
        }
        Ok(ContingencyReportRow {
            contingency: contingency.into(),
            weather: weather.into(),
            recommendation: recommendation.into(),
            switches,
            total_cost,
        })
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:.2}",
            self.contingency, self.weather, self.recommendation, self.switches, self.total_cost
        )
    }

    /// `Base Case [1 0 1 0 0 0 1 1 0 1]`-style recommendation text.
    pub fn recommendation_text(&self) -> String {
        format!("{} {}", self.recommendation, self.switches)
    }
}

pub fn report_csv(rows: &[ContingencyReportRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// The most frequent (configuration, switches) decision; ties go to the
/// earliest.
fn modal_decision(run: &GreedyEpisode) -> (usize, SwitchVector) {
    let mut counts: BTreeMap<(usize, u16), (usize, usize)> = BTreeMap::new();
    for (i, (s, sw)) in run.trace.steps.iter().zip(&run.switches).enumerate() {
        let e = counts.entry((s.config, sw.bits())).or_insert((0, i));
        e.0 += 1;
    }
    let (_, &(_, first)) = counts
        .iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .expect("non-empty episode");
    (run.trace.steps[first].config, run.switches[first])
}

/// One contingency: a normal-weather base-case row and a forced-calamity
/// row for the scenario, each with the trace its cost was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyResult {
    pub normal: ContingencyReportRow,
    pub normal_trace: EpisodeTrace,
    pub scenario: ContingencyReportRow,
    pub scenario_trace: EpisodeTrace,
}

impl ContingencyResult {
    pub fn rows(&self) -> [&ContingencyReportRow; 2] {
        [&self.normal, &self.scenario]
    }
}

pub fn recommend(
    env: &mut GridEnv,
    agents: &Agents,
    contingency: &str,
    scenario: &str,
    seed: u64,
) -> Result<ContingencyResult> {
    let idx = env
        .scenarios()
        .iter()
        .position(|s| s.name == scenario)
        .ok_or_else(|| {
            let known: Vec<&str> = env.scenarios().iter().map(|s| s.name.as_str()).collect();
            Error::domain(format!(
                "unknown scenario `{scenario}` (known: {})",
                known.join(", ")
            ))
        })?;
    let weather_label = env.scenarios()[idx].kind.weather_label();
    let econ = env.economics().clone();

    let normal = run_greedy_episode(env, agents, seed, Some(WeatherPin::Normal))?;
    let (_, normal_switches) = modal_decision(&normal);
    let normal_row = ContingencyReportRow::new(
        contingency,
        "Normal",
        BASE_CASE_LABEL,
        normal_switches,
        total_cost(&normal.trace, &econ)?,
    )?;

    let calamity = run_greedy_episode(env, agents, seed, Some(WeatherPin::Calamity(idx)))?;
    let (config, switches) = modal_decision(&calamity);
    let scenario_row = ContingencyReportRow::new(
        contingency,
        weather_label,
        &config_label(config, &econ),
        switches,
        total_cost(&calamity.trace, &econ)?,
    )?;
    Ok(ContingencyResult {
        normal: normal_row,
        normal_trace: normal.trace,
        scenario: scenario_row,
        scenario_trace: calamity.trace,
    })
}

/// Plot data for the reward curve: every episode with its 50-episode
/// moving average recomputed from the rewards.
pub fn reward_plot(episodes: &[EpisodeRecord]) -> String {
    rewards_csv(episodes)
}

pub const KL_ENTROPY_HEADER: &str = "update,approx_kl,entropy";

/// One `update,approx_kl,entropy` series per agent, in order of first
/// appearance.
pub fn kl_entropy_plots(updates: &[UpdateRecord]) -> Vec<(String, String)> {
    let mut order: Vec<&str> = Vec::new();
    for u in updates {
        if !order.contains(&u.agent.as_str()) {
            order.push(&u.agent);
        }
    }
    order
        .into_iter()
        .map(|agent| {
            let mut out = format!("{KL_ENTROPY_HEADER}\n");
            for u in updates.iter().filter(|u| u.agent == agent) {
                let _ = writeln!(out, "{},{},{}", u.update, u.approx_kl, u.entropy);
            }
            (agent.to_string(), out)
        })
        .collect()
}
