//! Techno-economic evaluation of switching traces: capital, operating,
//! failure and development costs against subscription, performance and
//! calamity revenue.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kv::{KvFile, KvWriter};

pub const NUM_CONFIGS: usize = 6;

/// Hours in a year; the development cost is spread over it.
const HOURS_PER_YEAR: f64 = 8760.0;
/// Days per subscription month.
const DAYS_PER_MONTH: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EconomicParameters {
    pub c_ctrl: f64,
    pub c_der: f64,
    pub c_sw: f64,
    pub c_comm: f64,
    pub c_prot: f64,
    pub c_maint: f64,
    pub c_fuel: f64,
    pub c_comm_op: f64,
    pub c_operator: f64,
    pub c_monitor: f64,
    pub c_outage: f64,
    pub c_restore: f64,
    pub c_emerg: f64,
    /// Loaded for extensions; not part of any computed total.
    pub c_damage: f64,
    /// Loaded for extensions; not part of any computed total.
    pub c_rep: f64,
    pub mu_cap: [f64; NUM_CONFIGS],
    pub mu_op: [f64; NUM_CONFIGS],
    pub mu_maint: [f64; NUM_CONFIGS],
    /// Discount rate δ.
    pub discount_rate: f64,
    /// Project lifetime L in years.
    pub lifetime: u32,
    /// Inflation η; loaded for extensions only.
    pub inflation: f64,
    pub n_customers: f64,
    pub value_per_outage: f64,
    pub subscription_fee: f64,
    pub n_subscribers: f64,
    pub p_contract: f64,
    pub incentive_rate: f64,
    pub c_dev: f64,
    pub c_init: f64,
    pub penalty_cost: f64,
    pub r_base: f64,
    pub config_cost: [f64; NUM_CONFIGS],
    pub n_der: [usize; NUM_CONFIGS],
    /// Billing horizon T in steps, used by the subscription term.
    pub horizon: f64,
    /// Operating multiplier γ during calamity.
    pub calamity_op_factor: f64,
    /// Failure multiplier φ during calamity.
    pub calamity_failure_factor: f64,
}

impl Default for EconomicParameters {
    fn default() -> Self {
        EconomicParameters {
            c_ctrl: 50_000.0,
            c_der: 3_000.0,
            c_sw: 1_500.0,
            c_comm: 2_500.0,
            c_prot: 2_000.0,
            c_maint: 2.0,
            c_fuel: 10.0,
            c_comm_op: 0.5,
            c_operator: 30.0,
            c_monitor: 5.0,
            c_outage: 5.0,
            c_restore: 50.0,
            c_emerg: 200.0,
            c_damage: 1_000.0,
            c_rep: 5_000.0,
            mu_cap: [1.0, 1.5, 2.0, 2.5, 3.0, 3.5],
            mu_op: [1.0, 1.2, 1.4, 1.6, 1.8, 2.0],
            mu_maint: [1.0, 1.1, 1.2, 1.3, 1.4, 1.5],
            discount_rate: 0.03,
            lifetime: 5,
            inflation: 0.03,
            n_customers: 50.0,
            value_per_outage: 100.0,
            subscription_fee: 2_000.0,
            n_subscribers: 1.0,
            p_contract: 1_000.0,
            incentive_rate: 2_000.0,
            c_dev: 30_000.0,
            c_init: 150_000.0,
            penalty_cost: 1_000.0,
            r_base: 0.5,
            config_cost: [0.0, 15.0, 28.0, 40.0, 50.0, 75.0],
            n_der: [0, 1, 2, 3, 4, 4],
            horizon: 50.0,
            calamity_op_factor: 1.5,
            calamity_failure_factor: 3.0,
        }
    }
}

macro_rules! scalar_keys {
    ($m:ident) => {
        $m! {
            c_ctrl, c_der, c_sw, c_comm, c_prot, c_maint, c_fuel, c_comm_op, c_operator, c_monitor,
            c_outage, c_restore, c_emerg, c_damage, c_rep, discount_rate, inflation, n_customers,
            value_per_outage, subscription_fee, n_subscribers, p_contract, incentive_rate, c_dev,
            c_init, penalty_cost, r_base, horizon, calamity_op_factor, calamity_failure_factor
        }
    };
}

impl EconomicParameters {
    /// Reads a `key = value` file; missing keys keep their defaults.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let mut p = EconomicParameters::default();
        macro_rules! read {
            ($($k:ident),*) => {
                $(if let Some(v) = kv.get::<f64>(stringify!($k))? { p.$k = v; })*
            };
        }
        scalar_keys!(read);
        if let Some(v) = kv.get::<u32>("lifetime")? {
            p.lifetime = v;
        }
        for (key, dst) in [
            ("mu_cap", &mut p.mu_cap),
            ("mu_op", &mut p.mu_op),
            ("mu_maint", &mut p.mu_maint),
            ("config_cost", &mut p.config_cost),
        ] {
            if let Some(list) = kv.get_list(key)? {
                *dst = six(&list)
                    .map_err(|m| Error::parse(kv.line_of(key), format!("`{key}`: {m}")))?;
            }
        }
        if let Some(list) = kv.get_list("n_der")? {
            let v = six(&list)
                .map_err(|m| Error::parse(kv.line_of("n_der"), format!("`n_der`: {m}")))?;
            if v.iter().any(|x| x.fract() != 0.0 || *x < 0.0) {
                return Err(Error::parse(
                    kv.line_of("n_der"),
                    "`n_der` entries must be non-negative integers",
                ));
            }
            p.n_der = v.map(|x| x as usize);
        }
        p.validate()?;
        Ok(p)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&KvFile::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_kv_text(&self) -> String {
        let mut w = KvWriter::new();
        macro_rules! write {
            ($($k:ident),*) => { $(w.num(stringify!($k), self.$k);)* };
        }
        scalar_keys!(write);
        w.num("lifetime", self.lifetime);
        let list = |xs: &[f64]| {
            xs.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        w.str("mu_cap", &list(&self.mu_cap));
        w.str("mu_op", &list(&self.mu_op));
        w.str("mu_maint", &list(&self.mu_maint));
        w.str("config_cost", &list(&self.config_cost));
        w.str("n_der", &self.n_der.map(|n| n.to_string()).join(", "));
        w.finish()
    }

    pub fn validate(&self) -> Result<()> {
        let mut money = vec![
            self.c_ctrl,
            self.c_der,
            self.c_sw,
            self.c_comm,
            self.c_prot,
            self.c_maint,
            self.c_fuel,
            self.c_comm_op,
            self.c_operator,
            self.c_monitor,
            self.c_outage,
            self.c_restore,
            self.c_emerg,
            self.c_damage,
            self.c_rep,
            self.value_per_outage,
            self.subscription_fee,
            self.p_contract,
            self.incentive_rate,
            self.c_dev,
            self.c_init,
            self.penalty_cost,
            self.n_customers,
            self.n_subscribers,
            self.horizon,
        ];
        money.extend(self.config_cost);
        if money.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::domain(
                "monetary values and counts must be finite and non-negative",
            ));
        }
        for (name, rate) in [
            ("discount_rate", self.discount_rate),
            ("inflation", self.inflation),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::domain(format!(
                    "{name} must lie in [0, 1), got {rate}"
                )));
            }
        }
        if self.lifetime < 1 {
            return Err(Error::domain("lifetime must be at least 1 year"));
        }
        if !(0.0..=1.0).contains(&self.r_base) {
            return Err(Error::domain("r_base must lie in [0, 1]"));
        }
        let mults = self.mu_cap.iter().chain(&self.mu_op).chain(&self.mu_maint);
        if mults
            .chain([&self.calamity_op_factor, &self.calamity_failure_factor])
            .any(|&m| !(m > 0.0) || !m.is_finite())
        {
            return Err(Error::domain("multipliers must be finite and positive"));
        }
        Ok(())
    }

    fn config(&self, c: usize) -> Result<usize> {
        if c < NUM_CONFIGS {
            Ok(c)
        } else {
            Err(Error::domain(format!(
                "configuration {c} not in 0..{NUM_CONFIGS}"
            )))
        }
    }
}

fn six(list: &[f64]) -> std::result::Result<[f64; NUM_CONFIGS], String> {
    list.try_into()
        .map_err(|_| format!("expected {NUM_CONFIGS} entries, got {}", list.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weather {
    Normal,
    Calamity,
}

impl Weather {
    pub fn is_calamity(self) -> bool {
        self == Weather::Calamity
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Weather::Normal => "normal",
            Weather::Calamity => "calamity",
        }
    }
}

impl std::str::FromStr for Weather {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" | "0" => Ok(Weather::Normal),
            "calamity" | "1" => Ok(Weather::Calamity),
            other => Err(Error::domain(format!("unknown weather `{other}`"))),
        }
    }
}

fn check_unit(r: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&r) {
        Ok(r)
    } else {
        Err(Error::domain(format!("resilience {r} outside [0, 1]")))
    }
}

/// Annualized capital cost.
pub fn capital_cost(c: usize, closed: usize, p: &EconomicParameters) -> Result<f64> {
    let c = p.config(c)?;
    let hardware =
        p.c_ctrl + p.n_der[c] as f64 * p.c_der + closed as f64 * (p.c_sw + p.c_comm + p.c_prot);
    Ok(hardware * p.mu_cap[c] / p.lifetime as f64)
}

pub fn operational_cost(
    c: usize,
    closed: usize,
    w: Weather,
    p: &EconomicParameters,
) -> Result<f64> {
    let c = p.config(c)?;
    let s = closed as f64;
    let base =
        p.c_operator + p.c_monitor + p.c_maint * s + p.n_der[c] as f64 * p.c_fuel + p.c_comm_op * s;
    let gamma = if w.is_calamity() {
        p.calamity_op_factor
    } else {
        1.0
    };
    Ok(base * p.mu_op[c] * gamma)
}

pub fn failure_cost(r: f64, w: Weather, p: &EconomicParameters) -> Result<f64> {
    let r = check_unit(r)?;
    let phi = if w.is_calamity() {
        p.calamity_failure_factor
    } else {
        1.0
    };
    Ok((1.0 - r) * (p.n_customers * p.c_outage + 2.0 * p.c_restore + 10.0 * p.c_emerg) * phi)
}

pub fn resilience_value(r: f64, p: &EconomicParameters) -> Result<f64> {
    Ok(check_unit(r)? * p.value_per_outage * p.n_customers)
}

pub fn revenue_potential(r: f64, w: Weather, p: &EconomicParameters) -> Result<f64> {
    let r = check_unit(r)?;
    let subscription = p.subscription_fee * p.n_subscribers * p.horizon / DAYS_PER_MONTH;
    let incentive = if w.is_calamity() {
        p.incentive_rate * r
    } else {
        0.0
    };
    Ok(subscription + p.p_contract * r + incentive)
}

/// Penalty-avoidance benefit; non-zero only in calamity below the baseline.
pub fn risk_reduction_benefit(r: f64, w: Weather, p: &EconomicParameters) -> Result<f64> {
    let r = check_unit(r)?;
    Ok(if w.is_calamity() && r < p.r_base {
        p.penalty_cost * (p.r_base - r)
    } else {
        0.0
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub t: usize,
    pub weather: Weather,
    pub config: usize,
    pub closed_switches: usize,
    pub resilience: f64,
    pub reward: f64,
    pub step_cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeTrace {
    pub steps: Vec<TraceStep>,
}

pub const TRACE_HEADER: &str = "t,weather,config,closed_switches,resilience,reward,step_cost";

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{},{},{},{},{:?},{:?},{:?}",
                s.t,
                s.weather.as_str(),
                s.config,
                s.closed_switches,
                s.resilience,
                s.reward,
                s.step_cost
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            Some((i, h)) => {
                return Err(Error::parse(
                    i + 1,
                    format!("expected header `{TRACE_HEADER}`, got `{h}`"),
                ))
            }
            None => return Err(Error::parse(1, "empty trace file")),
        }
        let mut steps = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 7 {
                return Err(Error::parse(
                    line_no,
                    format!("expected 7 fields, got {}", f.len()),
                ));
            }
            let bad = |name: &str| Error::parse(line_no, format!("bad {name} `{line}`"));
            let step = TraceStep {
                t: f[0].parse().map_err(|_| bad("t"))?,
                weather: f[1].parse().map_err(|_| bad("weather"))?,
                config: f[2].parse().map_err(|_| bad("config"))?,
                closed_switches: f[3].parse().map_err(|_| bad("closed_switches"))?,
                resilience: f[4].parse().map_err(|_| bad("resilience"))?,
                reward: f[5].parse().map_err(|_| bad("reward"))?,
                step_cost: f[6].parse().map_err(|_| bad("step_cost"))?,
            };
            if step.config >= NUM_CONFIGS {
                return Err(Error::parse(
                    line_no,
                    format!("configuration {} out of range", step.config),
                ));
            }
            if !(0.0..=1.0).contains(&step.resilience) {
                return Err(Error::parse(
                    line_no,
                    format!("resilience {} outside [0, 1]", step.resilience),
                ));
            }
            steps.push(step);
        }
        Ok(EpisodeTrace { steps })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// Configuration, capital, operating and failure cost of a single step.
pub fn step_total_cost(s: &TraceStep, p: &EconomicParameters) -> Result<f64> {
    let c = p.config(s.config)?;
    Ok(p.config_cost[c]
        + capital_cost(c, s.closed_switches, p)?
        + operational_cost(c, s.closed_switches, s.weather, p)?
        + failure_cost(s.resilience, s.weather, p)?)
}

/// Development cost prorated over `steps` hours.
pub fn development_cost(steps: usize, p: &EconomicParameters) -> f64 {
    p.c_dev * steps as f64 / HOURS_PER_YEAR
}

/// Step costs summed over the trace plus the development share for its length.
pub fn total_cost(trace: &EpisodeTrace, p: &EconomicParameters) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::domain("total cost of an empty trace"));
    }
    let mut total = 0.0;
    for s in &trace.steps {
        total += step_total_cost(s, p)?;
    }
    Ok(total + development_cost(trace.len(), p))
}

pub fn total_revenue(trace: &EpisodeTrace, p: &EconomicParameters) -> Result<f64> {
    trace.steps.iter().try_fold(0.0, |acc, s| {
        Ok(acc + revenue_potential(s.resilience, s.weather, p)?)
    })
}

pub fn total_risk_benefit(trace: &EpisodeTrace, p: &EconomicParameters) -> Result<f64> {
    trace.steps.iter().try_fold(0.0, |acc, s| {
        Ok(acc + risk_reduction_benefit(s.resilience, s.weather, p)?)
    })
}

pub fn total_resilience_value(trace: &EpisodeTrace, p: &EconomicParameters) -> Result<f64> {
    trace
        .steps
        .iter()
        .try_fold(0.0, |acc, s| Ok(acc + resilience_value(s.resilience, p)?))
}

/// `Σ_t (R_rev − (C_config + C_cap + C_op + C_fail))` over the trace.
pub fn cash_flow(trace: &EpisodeTrace, p: &EconomicParameters) -> Result<f64> {
    trace.steps.iter().try_fold(0.0, |acc, s| {
        Ok(acc + revenue_potential(s.resilience, s.weather, p)? - step_total_cost(s, p)?)
    })
}

/// `−C_init + Σ_y CF_y/(1+δ)^y`; index `y` of `cash_flows` is year `y`,
/// and year 0 is undiscounted.
pub fn npv(cash_flows: &[f64], p: &EconomicParameters) -> Result<f64> {
    if cash_flows.len() > p.lifetime as usize {
        return Err(Error::domain(format!(
            "{} yearly cash flows exceed the {}-year lifetime",
            cash_flows.len(),
            p.lifetime
        )));
    }
    let discounted: f64 = cash_flows
        .iter()
        .enumerate()
        .map(|(y, cf)| cf / (1.0 + p.discount_rate).powi(y as i32))
        .sum();
    Ok(discounted - p.c_init)
}

/// NPV of traces grouped by year.
pub fn npv_of_traces(years: &[Vec<EpisodeTrace>], p: &EconomicParameters) -> Result<f64> {
    let flows = years
        .iter()
        .map(|traces| {
            traces
                .iter()
                .try_fold(0.0, |acc, t| Ok::<_, Error>(acc + cash_flow(t, p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    npv(&flows, p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEffectiveness {
    pub bcr: f64,
    /// `f64::INFINITY` when there is no benefit.
    pub cpub: f64,
    pub net_benefit: f64,
    pub total_cost: f64,
    pub benefits: f64,
}

pub fn cost_effectiveness_of(benefits: f64, cost: f64) -> Result<CostEffectiveness> {
    if !(cost > 0.0) {
        return Err(Error::domain(
            "cost effectiveness needs a positive total cost",
        ));
    }
    Ok(CostEffectiveness {
        bcr: benefits / cost,
        cpub: if benefits > 0.0 {
            cost / benefits
        } else {
            f64::INFINITY
        },
        net_benefit: benefits - cost,
        total_cost: cost,
        benefits,
    })
}

/// BCR, CPUB and NB with benefits = revenue + risk-reduction benefit.
pub fn cost_effectiveness(
    trace: &EpisodeTrace,
    p: &EconomicParameters,
) -> Result<CostEffectiveness> {
    let benefits = total_revenue(trace, p)? + total_risk_benefit(trace, p)?;
    cost_effectiveness_of(benefits, total_cost(trace, p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-6
    }

    fn step(config: usize, closed: usize, weather: Weather, r: f64) -> TraceStep {
        TraceStep {
            t: 0,
            weather,
            config,
            closed_switches: closed,
            resilience: r,
            reward: 0.0,
            step_cost: 0.0,
        }
    }

    #[test]
    fn cost_components() {
        let p = EconomicParameters::default();
        assert!(close(capital_cost(0, 0, &p).unwrap(), 10_000.0));
        assert!(close(capital_cost(1, 2, &p).unwrap(), 19_500.0));
        assert!(close(
            operational_cost(0, 0, Weather::Normal, &p).unwrap(),
            35.0
        ));
        assert!(close(
            operational_cost(2, 3, Weather::Calamity, &p).unwrap(),
            131.25
        ));
        assert_eq!(failure_cost(1.0, Weather::Calamity, &p).unwrap(), 0.0);
        assert!(close(
            failure_cost(0.5, Weather::Calamity, &p).unwrap(),
            3525.0
        ));
        assert!(close(
            failure_cost(0.0, Weather::Normal, &p).unwrap(),
            2350.0
        ));
        assert!(capital_cost(6, 0, &p).is_err());
        assert!(failure_cost(1.2, Weather::Normal, &p).is_err());
    }

    #[test]
    fn benefit_components() {
        let p = EconomicParameters::default();
        assert_eq!(resilience_value(0.0, &p).unwrap(), 0.0);
        assert!(close(resilience_value(0.85, &p).unwrap(), 4250.0));
        assert!(close(resilience_value(1.0, &p).unwrap(), 5000.0));
        assert!(close(
            revenue_potential(0.0, Weather::Normal, &p).unwrap(),
            10_000.0 / 3.0
        ));
        assert!(close(
            revenue_potential(0.8, Weather::Calamity, &p).unwrap(),
            10_000.0 / 3.0 + 2400.0
        ));
        assert_eq!(
            risk_reduction_benefit(0.1, Weather::Normal, &p).unwrap(),
            0.0
        );
        assert!(close(
            risk_reduction_benefit(0.3, Weather::Calamity, &p).unwrap(),
            200.0
        ));
        assert_eq!(
            risk_reduction_benefit(0.5, Weather::Calamity, &p).unwrap(),
            0.0
        );
    }

    #[test]
    fn totals_and_npv() {
        let p = EconomicParameters::default();
        let one = EpisodeTrace {
            steps: vec![step(0, 0, Weather::Normal, 1.0)],
        };
        assert!(close(
            total_cost(&one, &p).unwrap(),
            10_035.0 + 30_000.0 / 8760.0
        ));
        assert!(total_cost(&EpisodeTrace::default(), &p).is_err());
        assert_eq!(development_cost(0, &p), 0.0);
        assert_eq!(npv(&[0.0; 5], &p).unwrap(), -150_000.0);
        assert!(close(npv(&[103.0], &p).unwrap(), -149_897.0));
        assert!(close(npv(&[0.0, 103.0], &p).unwrap(), -149_900.0));
        assert!(npv(&[0.0; 6], &p).is_err());
    }

    #[test]
    fn effectiveness_edge_cases() {
        let ce = cost_effectiveness_of(500.0, 500.0).unwrap();
        assert_eq!((ce.bcr, ce.cpub, ce.net_benefit), (1.0, 1.0, 0.0));
        assert_eq!(
            cost_effectiveness_of(0.0, 10.0).unwrap().cpub,
            f64::INFINITY
        );
        assert!(cost_effectiveness_of(1.0, 0.0).is_err());
    }

    #[test]
    fn parameters_round_trip_and_override() {
        let p = EconomicParameters::default();
        assert_eq!(EconomicParameters::parse(&p.to_kv_text()).unwrap(), p);
        let q =
            EconomicParameters::parse("c_ctrl = 1000\nmu_cap = 1, 1, 1, 1, 1, 2\nlifetime = 10\n")
                .unwrap();
        assert_eq!(q.c_ctrl, 1000.0);
        assert_eq!(q.mu_cap[5], 2.0);
        assert_eq!(q.lifetime, 10);
        assert!(EconomicParameters::parse("mu_op = 1, 2\n").is_err());
        assert!(EconomicParameters::parse("discount_rate = 1.5\n").is_err());
        assert!(EconomicParameters::parse("c_fuel = -1\n").is_err());
    }

    #[test]
    fn trace_csv_round_trip() {
        let trace = EpisodeTrace {
            steps: vec![
                TraceStep {
                    t: 0,
                    weather: Weather::Calamity,
                    config: 5,
                    closed_switches: 7,
                    resilience: 0.1 + 0.2,
                    reward: -3.25,
                    step_cost: 75.0,
                },
                step(1, 3, Weather::Normal, 1.0),
            ],
        };
        assert_eq!(EpisodeTrace::from_csv(&trace.to_csv()).unwrap(), trace);
        assert!(EpisodeTrace::from_csv("t,a\n").is_err());
        let bad = format!("{TRACE_HEADER}\n0,normal,9,0,0.5,0,0\n");
        assert!(matches!(
            EpisodeTrace::from_csv(&bad),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    fn arb_step() -> impl Strategy<Value = TraceStep> {
        (0usize..6, 0usize..11, any::<bool>(), 0.0f64..=1.0).prop_map(|(c, s, cal, r)| {
            step(
                c,
                s,
                if cal {
                    Weather::Calamity
                } else {
                    Weather::Normal
                },
                r,
            )
        })
    }

    proptest! {
        #[test]
        fn weather_multipliers_are_exact(c in 0usize..6, s in 0usize..11, r in 0.0f64..1.0) {
            let p = EconomicParameters::default();
            let op = operational_cost(c, s, Weather::Calamity, &p).unwrap() / operational_cost(c, s, Weather::Normal, &p).unwrap();
            prop_assert!((op - 1.5).abs() < 1e-12);
            let fail = failure_cost(r, Weather::Calamity, &p).unwrap() / failure_cost(r, Weather::Normal, &p).unwrap();
            prop_assert!((fail - 3.0).abs() < 1e-12);
            let extra = revenue_potential(r, Weather::Calamity, &p).unwrap() - revenue_potential(r, Weather::Normal, &p).unwrap();
            prop_assert!((extra - 2000.0 * r).abs() < 1e-9);
        }

        #[test]
        fn costs_are_monotone(c in 0usize..5, s in 0usize..10, r in 0.0f64..0.99) {
            let p = EconomicParameters::default();
            prop_assert!(capital_cost(c, s + 1, &p).unwrap() >= capital_cost(c, s, &p).unwrap());
            prop_assert!(capital_cost(c + 1, s, &p).unwrap() >= capital_cost(c, s, &p).unwrap());
            prop_assert!(operational_cost(c + 1, s + 1, Weather::Normal, &p).unwrap() >= operational_cost(c, s, Weather::Normal, &p).unwrap());
            prop_assert!(failure_cost(r + 0.01, Weather::Normal, &p).unwrap() <= failure_cost(r, Weather::Normal, &p).unwrap());
        }

        #[test]
        fn effectiveness_identities(steps in proptest::collection::vec(arb_step(), 1..60)) {
            let p = EconomicParameters::default();
            let trace = EpisodeTrace { steps };
            let ce = cost_effectiveness(&trace, &p).unwrap();
            prop_assert!((ce.bcr * ce.cpub - 1.0).abs() < 1e-9);
            prop_assert!((ce.net_benefit - (ce.bcr - 1.0) * ce.total_cost).abs() < 1e-6);
            prop_assert!(ce.total_cost >= development_cost(trace.len(), &p));
        }

        #[test]
        fn undiscounted_npv_is_plain_sum(flows in proptest::collection::vec(-1e5f64..1e5, 0..6)) {
            let p = EconomicParameters { discount_rate: 0.0, ..Default::default() };
            let sum: f64 = flows.iter().sum();
            prop_assert_eq!(npv(&flows, &p).unwrap(), sum - p.c_init);
        }
    }
}
