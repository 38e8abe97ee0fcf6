//! Per-episode rewards and per-update diagnostics, with their CSV forms.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const MOVING_WINDOW: usize = 50;
pub const REWARDS_HEADER: &str = "episode,reward,moving_avg50";
pub const UPDATES_HEADER: &str = "update,agent,approx_kl,entropy";

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRecord {
    pub update: usize,
    pub agent: String,
    pub approx_kl: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingMetrics {
    pub episodes: Vec<EpisodeRecord>,
    pub updates: Vec<UpdateRecord>,
}

impl TrainingMetrics {
    pub fn record_episode(&mut self, episode: usize, reward: f64) {
        self.episodes.push(EpisodeRecord { episode, reward });
    }

    pub fn record_update(&mut self, update: usize, agent: &str, approx_kl: f64, entropy: f64) {
        self.updates.push(UpdateRecord {
            update,
            agent: agent.to_string(),
            approx_kl,
            entropy,
        });
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.reward).collect()
    }

    /// Mean of the 50 rewards ending at row `i` (0-based); `None` before
    /// the window fills.
    pub fn moving_average(&self, i: usize) -> Option<f64> {
        moving_average(&self.rewards(), i)
    }

    /// Mean over the trailing window, or over all rows while it is still
    /// filling; `None` with no episodes.
    pub fn trailing_average(&self) -> Option<f64> {
        let n = self.episodes.len();
        if n == 0 {
            return None;
        }
        let tail = &self.episodes[n.saturating_sub(MOVING_WINDOW)..];
        Some(tail.iter().map(|e| e.reward).sum::<f64>() / tail.len() as f64)
    }

    pub fn update_rounds(&self) -> usize {
        self.updates.iter().map(|u| u.update).max().unwrap_or(0)
    }

    /// `(approx_kl, entropy)` series of one agent in update order.
    pub fn agent_updates(&self, agent: &str) -> Vec<&UpdateRecord> {
        self.updates.iter().filter(|u| u.agent == agent).collect()
    }

    pub fn rewards_csv(&self) -> String {
        rewards_csv(&self.episodes)
    }

    pub fn updates_csv(&self) -> String {
        let mut out = format!("{UPDATES_HEADER}\n");
        for u in &self.updates {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                u.update, u.agent, u.approx_kl, u.entropy
            );
        }
        out
    }

    /// Writes `rewards.csv` and `updates.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [
            ("rewards.csv", self.rewards_csv()),
            ("updates.csv", self.updates_csv()),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

pub fn moving_average(rewards: &[f64], i: usize) -> Option<f64> {
    if i + 1 < MOVING_WINDOW || i >= rewards.len() {
        return None;
    }
    let window = &rewards[i + 1 - MOVING_WINDOW..=i];
    Some(window.iter().sum::<f64>() / MOVING_WINDOW as f64)
}

/// Reward rows with the moving average recomputed from the rewards.
pub fn rewards_csv(episodes: &[EpisodeRecord]) -> String {
    let rewards: Vec<f64> = episodes.iter().map(|e| e.reward).collect();
    let mut out = format!("{REWARDS_HEADER}\n");
    for (i, e) in episodes.iter().enumerate() {
        let ma = moving_average(&rewards, i)
            .map(|m| m.to_string())
            .unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", e.episode, e.reward, ma);
    }
    out
}

fn data_lines<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, h)) if h == header => {}
        Some((n, h)) => {
            return Err(Error::parse(
                n,
                format!("expected header `{header}`, got `{h}`"),
            ))
        }
    }
    let width = header.split(',').count();
    lines
        .map(|(n, l)| {
            let fields: Vec<&str> = l.split(',').map(str::trim).collect();
            if fields.len() != width {
                return Err(Error::parse(
                    n,
                    format!("expected {width} fields, got {}", fields.len()),
                ));
            }
            Ok((n, fields))
        })
        .collect()
}

fn field<T: std::str::FromStr>(line: usize, name: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("bad {name} `{s}`")))
}

/// Parses a rewards file; the moving-average column is validated but
/// not stored. Empty input yields no rows.
pub fn parse_rewards_csv(text: &str) -> Result<Vec<EpisodeRecord>> {
    data_lines(text, REWARDS_HEADER)?
        .into_iter()
        .map(|(n, f)| {
            let episode = field(n, "episode", f[0])?;
            let reward: f64 = field(n, "reward", f[1])?;
            if !reward.is_finite() {
                return Err(Error::parse(n, "non-finite reward"));
            }
            if !f[2].is_empty() {
                field::<f64>(n, "moving average", f[2])?;
            }
            Ok(EpisodeRecord { episode, reward })
        })
        .collect()
}

pub fn parse_updates_csv(text: &str) -> Result<Vec<UpdateRecord>> {
    data_lines(text, UPDATES_HEADER)?
        .into_iter()
        .map(|(n, f)| {
            if f[1].is_empty() {
                return Err(Error::parse(n, "empty agent name"));
            }
            Ok(UpdateRecord {
                update: field(n, "update", f[0])?,
                agent: f[1].to_string(),
                approx_kl: field(n, "approx_kl", f[2])?,
                entropy: field(n, "entropy", f[3])?,
            })
        })
        .collect()
}
