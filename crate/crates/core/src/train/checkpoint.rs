//! Checkpoint directories: four binary parameter files plus a key-value
//! metadata file, written to a temporary directory and renamed into place.
//!
//! Parameter file layout (little endian):
//! `magic[8] version:u32 generation:u64 n_layers:u32 sizes:u32×n
//! count:u64 params:f64×count checksum:u64`, where the checksum is
//! FNV-1a over every preceding byte. All files of one checkpoint share a
//! generation tag derived from their contents, so files from different
//! saves are never combined.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::metrics::TrainingMetrics;
use super::Agents;
use crate::env::RunningStats;
use crate::error::{Error, Result};
use crate::kv::{KvFile, KvWriter};
use crate::ppo::Mlp;

pub const MAGIC: [u8; 8] = *b"RGPARAMS";
pub const FORMAT_VERSION: u32 = 1;
pub const PARAM_FILES: [&str; 4] = [
    "strategic_actor.bin",
    "strategic_critic.bin",
    "tactical_actor.bin",
    "tactical_critic.bin",
];
pub const META_FILE: &str = "meta.txt";
pub const CHECKPOINT_PREFIX: &str = "ckpt_";

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(seed, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Restorable training state beyond the network parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CheckpointMeta {
    pub episode: usize,
    pub avg_reward: f64,
    pub strategic_stats: RunningStats,
    pub tactical_stats: RunningStats,
    pub strategic_value_norm: RunningStats,
    pub tactical_value_norm: RunningStats,
    /// Environment reward-normalization statistics.
    pub reward_stats: RunningStats,
}

impl CheckpointMeta {
    fn to_text(self, generation: u64) -> String {
        let mut w = KvWriter::new();
        w.num("format_version", FORMAT_VERSION)
            .num("generation", generation)
            .num("episode", self.episode)
            .num("avg_reward", self.avg_reward);
        for (prefix, s) in [
            ("strategic_stats", self.strategic_stats),
            ("tactical_stats", self.tactical_stats),
            ("strategic_value_norm", self.strategic_value_norm),
            ("tactical_value_norm", self.tactical_value_norm),
            ("reward_norm", self.reward_stats),
        ] {
            w.num(&format!("{prefix}_count"), s.count)
                .num(&format!("{prefix}_mean"), s.mean)
                .num(&format!("{prefix}_m2"), s.m2);
        }
        w.finish()
    }

    fn parse(text: &str) -> Result<(CheckpointMeta, u64)> {
        let kv = KvFile::parse(text)?;
        let req = |key: &str| Error::parse(0, format!("metadata is missing `{key}`"));
        let version: u32 = kv
            .get("format_version")?
            .ok_or_else(|| req("format_version"))?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported metadata version {version}"
            )));
        }
        let stats = |prefix: &str| -> Result<RunningStats> {
            let key = |s: &str| format!("{prefix}_{s}");
            Ok(RunningStats {
                count: kv.get(&key("count"))?.ok_or_else(|| req(&key("count")))?,
                mean: kv.get(&key("mean"))?.ok_or_else(|| req(&key("mean")))?,
                m2: kv.get(&key("m2"))?.ok_or_else(|| req(&key("m2")))?,
            })
        };
        let meta = CheckpointMeta {
            episode: kv.get("episode")?.ok_or_else(|| req("episode"))?,
            avg_reward: kv.get("avg_reward")?.ok_or_else(|| req("avg_reward"))?,
            strategic_stats: stats("strategic_stats")?,
            tactical_stats: stats("tactical_stats")?,
            strategic_value_norm: stats("strategic_value_norm")?,
            tactical_value_norm: stats("tactical_value_norm")?,
            reward_stats: stats("reward_norm")?,
        };
        Ok((
            meta,
            kv.get("generation")?.ok_or_else(|| req("generation"))?,
        ))
    }
}

fn nets(agents: &Agents) -> [&Mlp; 4] {
    [
        &agents.strategic.actor,
        &agents.strategic.critic,
        &agents.tactical.actor,
        &agents.tactical.critic,
    ]
}

/// Content-derived tag shared by every file of one checkpoint.
pub fn generation_tag(agents: &Agents, meta: &CheckpointMeta) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &(meta.episode as u64).to_le_bytes());
    for net in nets(agents) {
        for p in &net.params {
            h = fnv1a(h, &p.to_le_bytes());
        }
    }
    h
}

pub fn encode_params(net: &Mlp, generation: u64) -> Vec<u8> {
    let sizes = net.sizes();
    let mut out = Vec::with_capacity(40 + 4 * sizes.len() + 8 * net.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&generation.to_le_bytes());
    out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for &s in sizes {
        out.extend_from_slice(&(s as u32).to_le_bytes());
    }
    out.extend_from_slice(&(net.len() as u64).to_le_bytes());
    for p in &net.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    let sum = fnv1a(FNV_OFFSET, &out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("parameter file is truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

/// Decodes a parameter file into its generation tag and network.
pub fn decode_params(bytes: &[u8]) -> Result<(u64, Mlp)> {
    if bytes.len() < 8 {
        return Err(Error::Checkpoint("parameter file is truncated".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
    if fnv1a(FNV_OFFSET, body) != stored {
        return Err(Error::Checkpoint("parameter file checksum mismatch".into()));
    }
    let mut r = Reader {
        bytes: body,
        pos: 0,
    };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("not a parameter file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported parameter format version {version}"
        )));
    }
    let generation = r.u64()?;
    let n_layers = r.u32()? as usize;
    if !(2..=64).contains(&n_layers) {
        return Err(Error::Checkpoint(format!(
            "implausible layer count {n_layers}"
        )));
    }
    let sizes = (0..n_layers)
        .map(|_| r.u32().map(|s| s as usize))
        .collect::<Result<Vec<_>>>()?;
    let count = r.u64()? as usize;
    let start = r.pos;
    r.take(
        count
            .checked_mul(8)
            .ok_or_else(|| Error::Checkpoint("parameter count overflows".into()))?,
    )?;
    let data = &body[start..r.pos];
    if r.pos != body.len() {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }
    let params = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let net = Mlp::from_params(&sizes, params).ok_or_else(|| {
        Error::Checkpoint(format!("{count} parameters do not fit shape {sizes:?}"))
    })?;
    Ok((generation, net))
}

/// Points at which a save can be interrupted in tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrashPoint {
    /// After this many parameter files were written to the staging directory.
    AfterParamFiles(usize),
    /// Staging complete, before the existing checkpoint is moved aside.
    BeforeSwap,
    /// Existing checkpoint moved aside, new one not yet renamed into place.
    AfterBackup,
    /// New checkpoint in place, backup not yet removed.
    BeforeBackupRemoval,
}

fn crash_if(fault: Option<CrashPoint>, at: CrashPoint) -> Result<()> {
    if fault == Some(at) {
        return Err(Error::Checkpoint(format!("injected crash at {at:?}")));
    }
    Ok(())
}

fn write_synced(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))?;
    f.sync_all().map_err(|e| Error::io(path, e))
}

fn sibling(dir: &Path, suffix: &str) -> Result<PathBuf> {
    let name = dir.file_name().ok_or_else(|| {
        Error::Checkpoint(format!("checkpoint path {} has no name", dir.display()))
    })?;
    Ok(dir.with_file_name(format!(".{}.{suffix}", name.to_string_lossy())))
}

fn remove_dir_if_exists(path: &Path) -> Result<()> {
    match fs::remove_dir_all(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(Error::io(path, e)),
        _ => Ok(()),
    }
}

pub fn write_checkpoint(dir: &Path, agents: &Agents, meta: &CheckpointMeta) -> Result<()> {
    write_checkpoint_with_fault(dir, agents, meta, None)
}

/// Stages the checkpoint next to `dir`, then swaps it into place. An
/// interrupted save leaves either the previous checkpoint or no
/// checkpoint at `dir`, never a mixture.
pub fn write_checkpoint_with_fault(
    dir: &Path,
    agents: &Agents,
    meta: &CheckpointMeta,
    fault: Option<CrashPoint>,
) -> Result<()> {
    if let Some(parent) = dir.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let staging = sibling(dir, "tmp")?;
    let backup = sibling(dir, "old")?;
    remove_dir_if_exists(&staging)?;
    fs::create_dir(&staging).map_err(|e| Error::io(&staging, e))?;

    let generation = generation_tag(agents, meta);
    for (i, (name, net)) in PARAM_FILES.iter().zip(nets(agents)).enumerate() {
        crash_if(fault, CrashPoint::AfterParamFiles(i))?;
        write_synced(&staging.join(name), &encode_params(net, generation))?;
    }
    crash_if(fault, CrashPoint::AfterParamFiles(PARAM_FILES.len()))?;
    write_synced(
        &staging.join(META_FILE),
        meta.to_text(generation).as_bytes(),
    )?;

    crash_if(fault, CrashPoint::BeforeSwap)?;
    remove_dir_if_exists(&backup)?;
    let had_previous = dir.exists();
    if had_previous {
        fs::rename(dir, &backup).map_err(|e| Error::io(dir, e))?;
    }
    crash_if(fault, CrashPoint::AfterBackup)?;
    fs::rename(&staging, dir).map_err(|e| Error::io(dir, e))?;
    crash_if(fault, CrashPoint::BeforeBackupRemoval)?;
    if had_previous {
        remove_dir_if_exists(&backup)?;
    }
    Ok(())
}

/// Networks and metadata read from disk, not yet applied to any agent.
#[derive(Debug, Clone, PartialEq)]
pub struct StagedCheckpoint {
    pub nets: [Mlp; 4],
    pub meta: Option<CheckpointMeta>,
}

/// Reads and validates a checkpoint against the shapes of `agents`.
pub fn read_checkpoint(dir: &Path, agents: &Agents) -> Result<StagedCheckpoint> {
    if !dir.is_dir() {
        return Err(Error::Checkpoint(format!(
            "{} is not a checkpoint directory",
            dir.display()
        )));
    }
    let mut generation = None;
    let mut loaded = Vec::with_capacity(4);
    for (name, current) in PARAM_FILES.iter().zip(nets(agents)) {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let (gen, net) = decode_params(&bytes)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if net.sizes() != current.sizes() {
            return Err(Error::Checkpoint(format!(
                "{}: shape {:?} does not match the agent's {:?}",
                path.display(),
                net.sizes(),
                current.sizes()
            )));
        }
        if *generation.get_or_insert(gen) != gen {
            return Err(Error::Checkpoint(format!(
                "{}: belongs to a different save",
                path.display()
            )));
        }
        loaded.push(net);
    }
    let meta_path = dir.join(META_FILE);
    let meta = if meta_path.exists() {
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let (meta, gen) = CheckpointMeta::parse(&text)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", meta_path.display())))?;
        if Some(gen) != generation {
            return Err(Error::Checkpoint(format!(
                "{}: belongs to a different save",
                meta_path.display()
            )));
        }
        Some(meta)
    } else {
        None
    };
    let nets: [Mlp; 4] = loaded.try_into().expect("four networks");
    Ok(StagedCheckpoint { nets, meta })
}

impl StagedCheckpoint {
    pub fn apply(self, agents: &mut Agents) {
        let [sa, sc, ta, tc] = self.nets;
        agents.strategic.actor = sa;
        agents.strategic.critic = sc;
        agents.tactical.actor = ta;
        agents.tactical.critic = tc;
        if let Some(m) = self.meta {
            agents.strategic.stats = m.strategic_stats;
            agents.tactical.stats = m.tactical_stats;
            agents.strategic.value_norm = m.strategic_value_norm;
            agents.tactical.value_norm = m.tactical_value_norm;
        }
    }
}

/// Restores all four networks and the agent statistics. Returns the
/// success flag and metadata; on failure nothing is modified.
pub fn load_checkpoint(agents: &mut Agents, dir: &Path) -> (bool, Option<CheckpointMeta>) {
    match read_checkpoint(dir, agents) {
        Ok(staged) => {
            let meta = staged.meta;
            staged.apply(agents);
            match &meta {
                Some(m) => log::info!(
                    "loaded checkpoint {} (episode {}, average reward {:.2})",
                    dir.display(),
                    m.episode,
                    m.avg_reward
                ),
                None => log::info!("loaded checkpoint {} without metadata", dir.display()),
            }
            (true, meta)
        }
        Err(e) => {
            log::error!("failed to load checkpoint: {e}");
            (false, None)
        }
    }
}

pub fn checkpoint_path(root: &Path, episode: usize) -> PathBuf {
    root.join(format!("{CHECKPOINT_PREFIX}{episode}"))
}

/// Checkpoint directories under `root`, oldest episode first.
pub fn list_checkpoints(root: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let entries = match fs::read_dir(root) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(root, e)),
    };
    let mut found = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let name = entry.file_name();
        let episode = name
            .to_str()
            .and_then(|n| n.strip_prefix(CHECKPOINT_PREFIX))
            .and_then(|n| n.parse::<usize>().ok());
        if let Some(ep) = episode.filter(|_| entry.path().is_dir()) {
            found.push((ep, entry.path()));
        }
    }
    found.sort();
    Ok(found)
}

/// Keeps the `keep` most recent checkpoints; returns the removed paths.
pub fn cleanup_checkpoints(root: &Path, keep: usize) -> Result<Vec<PathBuf>> {
    let all = list_checkpoints(root)?;
    let excess = all.len().saturating_sub(keep);
    let mut removed = Vec::with_capacity(excess);
    for (_, path) in all.into_iter().take(excess) {
        fs::remove_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        removed.push(path);
    }
    Ok(removed)
}

/// Best trailing average seen by save-best-only checkpointing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BestTracker {
    pub best: Option<f64>,
}

/// Writes `ckpt_<episode>` under `root`. With `save_best`, the save is
/// skipped (returning `None`) unless the trailing 50-episode average
/// reward beats the best so far.
#[allow(clippy::too_many_arguments)]
pub fn save_checkpoint(
    agents: &Agents,
    episode: usize,
    metrics: &TrainingMetrics,
    reward_stats: RunningStats,
    root: &Path,
    save_best: bool,
    tracker: &mut BestTracker,
) -> Result<Option<PathBuf>> {
    let avg = metrics.trailing_average().unwrap_or(0.0);
    if save_best {
        if tracker.best.is_some_and(|b| avg <= b) {
            return Ok(None);
        }
        tracker.best = Some(avg);
    }
    let meta = CheckpointMeta {
        episode,
        avg_reward: avg,
        strategic_stats: agents.strategic.stats,
        tactical_stats: agents.tactical.stats,
        strategic_value_norm: agents.strategic.value_norm,
        tactical_value_norm: agents.tactical.value_norm,
        reward_stats,
    };
    let path = checkpoint_path(root, episode);
    write_checkpoint(&path, agents, &meta)?;
    Ok(Some(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::OBS_DIM;
    use crate::ppo::policy::TACTICAL_DIM;
    use crate::ppo::PpoHyperparams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Fresh agents carrying the statistics stored by `meta`, so that
    /// restored policies and values are comparable.
    fn agents(seed: u64) -> Agents {
        let mut a = Agents::new(&PpoHyperparams::default(), seed);
        let m = meta(0);
        a.strategic.value_norm = m.strategic_value_norm;
        a.tactical.value_norm = m.tactical_value_norm;
        a
    }

    fn meta(episode: usize) -> CheckpointMeta {
        let mut s = RunningStats::default();
        [0.3, -1.7, 2.2].iter().for_each(|&x| s.push(x));
        CheckpointMeta {
            episode,
            avg_reward: 12.375,
            strategic_stats: s,
            tactical_stats: RunningStats {
                count: 3,
                mean: 0.1,
                m2: 2.0 / 3.0,
            },
            strategic_value_norm: RunningStats {
                count: 2500,
                mean: 1.25,
                m2: 812.5,
            },
            tactical_value_norm: RunningStats {
                count: 2500,
                mean: -0.5,
                m2: 0.1,
            },
            reward_stats: RunningStats {
                count: 99,
                mean: -4.2,
                m2: 1e7 / 3.0,
            },
        }
    }

    fn max_distribution_diff(a: &Agents, b: &Agents, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let obs: Vec<f64> = (0..OBS_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w = f64::from(rng.gen_range(0..2u8));
            let c = rng.gen_range(0..6);
            let x = crate::ppo::tactical_input(&obs, c);
            assert_eq!(x.len(), TACTICAL_DIM);
            let pairs = [
                (
                    a.strategic.forward(&obs, w).unwrap(),
                    b.strategic.forward(&obs, w).unwrap(),
                ),
                (
                    a.tactical.forward(&x, w).unwrap(),
                    b.tactical.forward(&x, w).unwrap(),
                ),
            ];
            for ((da, va), (db, vb)) in pairs {
                worst = worst.max((va - vb).abs());
                let (pa, pb) = match (da, db) {
                    (
                        crate::ppo::Distribution::Categorical(p),
                        crate::ppo::Distribution::Categorical(q),
                    ) => (p, q),
                    (
                        crate::ppo::Distribution::Bernoulli {
                            switches: mut p,
                            grid: g,
                        },
                        crate::ppo::Distribution::Bernoulli {
                            switches: mut q,
                            grid: h,
                        },
                    ) => {
                        p.push(g);
                        q.push(h);
                        (p, q)
                    }
                    _ => panic!("distribution kinds differ"),
                };
                for (x, y) in pa.iter().zip(&pb) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        worst
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("ckpt_500");
        let src = agents(1);
        write_checkpoint(&dir, &src, &meta(500)).unwrap();
        let mut dst = agents(2);
        assert!(max_distribution_diff(&src, &dst, 9) > 1e-6);
        let (ok, m) = load_checkpoint(&mut dst, &dir);
        assert!(ok);
        assert_eq!(m, Some(meta(500)));
        assert_eq!(max_distribution_diff(&src, &dst, 9), 0.0);
        assert_eq!(dst.strategic.actor.params, src.strategic.actor.params);
        assert_eq!(dst.strategic.stats, meta(500).strategic_stats);
    }

    #[test]
    fn missing_path_and_missing_metadata() {
        let tmp = tempfile::tempdir().unwrap();
        let mut a = agents(1);
        let before = a.clone();
        assert_eq!(
            load_checkpoint(&mut a, &tmp.path().join("nope")),
            (false, None)
        );
        assert_eq!(a, before);

        let dir = tmp.path().join("ckpt_3");
        write_checkpoint(&dir, &agents(5), &meta(3)).unwrap();
        fs::remove_file(dir.join(META_FILE)).unwrap();
        let (ok, m) = load_checkpoint(&mut a, &dir);
        assert!(ok && m.is_none());
        assert_eq!(a.tactical.critic.params, agents(5).tactical.critic.params);
        assert_eq!(a.strategic.stats, before.strategic.stats);
    }

    #[test]
    fn corrupt_files_fail_without_mutation() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("ckpt_7");
        write_checkpoint(&dir, &agents(3), &meta(7)).unwrap();
        let mut a = agents(1);
        let before = a.clone();

        let victim = dir.join(PARAM_FILES[3]);
        let good = fs::read(&victim).unwrap();
        let mut flipped = good.clone();
        flipped[60] ^= 0x01;
        fs::write(&victim, &flipped).unwrap();
        assert_eq!(load_checkpoint(&mut a, &dir), (false, None));
        fs::write(&victim, &good[..good.len() - 3]).unwrap();
        assert_eq!(load_checkpoint(&mut a, &dir), (false, None));
        fs::remove_file(&victim).unwrap();
        assert_eq!(load_checkpoint(&mut a, &dir), (false, None));
        fs::write(&victim, &good).unwrap();

        fs::write(dir.join(META_FILE), "episode = seven\n").unwrap();
        assert_eq!(load_checkpoint(&mut a, &dir), (false, None));
        assert_eq!(a, before);
    }

    #[test]
    fn decode_rejects_bad_headers() {
        let net = agents(1).strategic.critic;
        let bytes = encode_params(&net, 42);
        let (gen, back) = decode_params(&bytes).unwrap();
        assert_eq!((gen, &back), (42, &net));
        for corrupt in [0usize, 8, 12, 20] {
            let mut b = bytes.clone();
            b[corrupt] ^= 0xff;
            assert!(decode_params(&b).is_err());
        }
        assert!(decode_params(&bytes[..5]).is_err());
    }

    #[test]
    fn mixed_generations_are_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let (a_dir, b_dir) = (tmp.path().join("ckpt_1"), tmp.path().join("ckpt_2"));
        write_checkpoint(&a_dir, &agents(1), &meta(1)).unwrap();
        write_checkpoint(&b_dir, &agents(2), &meta(2)).unwrap();
        fs::copy(b_dir.join(PARAM_FILES[2]), a_dir.join(PARAM_FILES[2])).unwrap();
        let mut a = agents(9);
        assert_eq!(load_checkpoint(&mut a, &a_dir), (false, None));
        fs::copy(b_dir.join(META_FILE), b_dir.join("meta.bak")).unwrap();
        fs::copy(a_dir.join(META_FILE), b_dir.join(META_FILE)).unwrap();
        assert_eq!(load_checkpoint(&mut a, &b_dir), (false, None));
        assert_eq!(a, agents(9));
    }

    #[test]
    fn injected_crashes_never_mix_generations() {
        let points = (0..=PARAM_FILES.len())
            .map(CrashPoint::AfterParamFiles)
            .chain([
                CrashPoint::BeforeSwap,
                CrashPoint::AfterBackup,
                CrashPoint::BeforeBackupRemoval,
            ]);
        for point in points {
            let tmp = tempfile::tempdir().unwrap();
            let dir = tmp.path().join("ckpt_10");
            let (old, new) = (agents(1), agents(2));
            write_checkpoint(&dir, &old, &meta(10)).unwrap();
            assert!(write_checkpoint_with_fault(&dir, &new, &meta(10), Some(point)).is_err());

            let mut probe = agents(3);
            let (ok, _) = load_checkpoint(&mut probe, &dir);
            if ok {
                let matches_old = max_distribution_diff(&probe, &old, 4) == 0.0;
                let matches_new = max_distribution_diff(&probe, &new, 4) == 0.0;
                assert!(
                    matches_old || matches_new,
                    "{point:?} produced a mixed policy"
                );
                if point != CrashPoint::BeforeBackupRemoval {
                    assert!(matches_old, "{point:?}");
                }
            } else {
                assert_eq!(point, CrashPoint::AfterBackup);
                assert_eq!(probe, agents(3));
            }
            // A later save recovers from any interruption.
            write_checkpoint(&dir, &new, &meta(10)).unwrap();
            let mut probe = agents(3);
            assert!(load_checkpoint(&mut probe, &dir).0);
            assert_eq!(max_distribution_diff(&probe, &new, 4), 0.0);
        }
    }

    #[test]
    fn save_best_and_cleanup() {
        let tmp = tempfile::tempdir().unwrap();
        let a = agents(1);
        let mut tracker = BestTracker::default();
        let mut metrics = TrainingMetrics::default();
        metrics.record_episode(1, 10.0);
        let stats = RunningStats::default();
        let first =
            save_checkpoint(&a, 1, &metrics, stats, tmp.path(), true, &mut tracker).unwrap();
        assert!(first.is_some());
        metrics.record_episode(2, 0.0);
        assert_eq!(
            save_checkpoint(&a, 2, &metrics, stats, tmp.path(), true, &mut tracker).unwrap(),
            None
        );
        assert!(!checkpoint_path(tmp.path(), 2).exists());
        metrics.record_episode(3, 50.0);
        assert!(
            save_checkpoint(&a, 3, &metrics, stats, tmp.path(), true, &mut tracker)
                .unwrap()
                .is_some()
        );
        assert_eq!(tracker.best, Some(20.0));
        assert!(
            save_checkpoint(&a, 4, &metrics, stats, tmp.path(), false, &mut tracker)
                .unwrap()
                .is_some()
        );

        let names: Vec<usize> = list_checkpoints(tmp.path())
            .unwrap()
            .into_iter()
            .map(|(e, _)| e)
            .collect();
        assert_eq!(names, vec![1, 3, 4]);
        let removed = cleanup_checkpoints(tmp.path(), 1).unwrap();
        assert_eq!(removed.len(), 2);
        let left = list_checkpoints(tmp.path()).unwrap();
        assert_eq!(left, vec![(4, checkpoint_path(tmp.path(), 4))]);
        let (ok, m) = load_checkpoint(&mut agents(2), &left[0].1);
        assert!(ok && m.unwrap().episode == 4);
    }
}
