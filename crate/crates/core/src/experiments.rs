//! Experimental conditions, the seed grid, batch orchestration and the
//! probe assay.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{encode_raw, film_gate, AgentParams, G_DIM, OPEN_ALPHA, RIGID_ALPHA, Z_DIM};
use crate::analysis::per_dim_diff;
use crate::checkpoint;
use crate::env::{zone_of, AgentPos, GridWorld, NoiseGradient, Observation, HEIGHT, N_ZONES, WIDTH};
use crate::error::{Error, Result};
use crate::rng;
use crate::runlog::RunLog;
use crate::training::{stage2_run, Stage2Arm, Stage2Config, Stage2Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Baseline,
    Mixed,
    Persistent,
    AblationRigid,
    AblationOpen,
    AdaptiveNoPerturb,
    AdaptivePerturb,
}

impl Condition {
    pub const ALL: [Condition; 7] = [
        Condition::Baseline,
        Condition::Mixed,
        Condition::Persistent,
        Condition::AblationRigid,
        Condition::AblationOpen,
        Condition::AdaptiveNoPerturb,
        Condition::AdaptivePerturb,
    ];

    /// Mixed-history comparison.
    pub const HISTORY: [Condition; 3] = [Condition::Baseline, Condition::Mixed, Condition::Persistent];

    /// Plasticity ablation.
    pub const ABLATION: [Condition; 4] = [
        Condition::AdaptivePerturb,
        Condition::AdaptiveNoPerturb,
        Condition::AblationRigid,
        Condition::AblationOpen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::Mixed => "mixed",
            Condition::Persistent => "persistent",
            Condition::AblationRigid => "ablation-rigid",
            Condition::AblationOpen => "ablation-open",
            Condition::AdaptiveNoPerturb => "adaptive-no-perturb",
            Condition::AdaptivePerturb => "adaptive-perturb",
        }
    }

    pub fn block_np(self) -> [usize; 3] {
        match self {
            Condition::Baseline | Condition::AdaptiveNoPerturb => [0, 0, 0],
            Condition::Mixed => [0, 4, 0],
            Condition::Persistent
            | Condition::AblationRigid
            | Condition::AblationOpen
            | Condition::AdaptivePerturb => [4, 4, 4],
        }
    }

    /// Constant perspective rate, or `None` for the adaptive law.
    pub fn fixed_alpha(self) -> Option<f64> {
        match self {
            Condition::AblationRigid => Some(RIGID_ALPHA),
            Condition::AblationOpen => Some(OPEN_ALPHA),
            _ => None,
        }
    }

    pub fn arm(self) -> Stage2Arm {
        Stage2Arm {
            schedule: self.block_np(),
            alpha_override: self.fixed_alpha(),
        }
    }

    pub fn valid_names() -> String {
        Condition::ALL.map(Condition::name).join(", ")
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Condition::ALL
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or_else(|| {
                Error::InvalidConfig(format!("unknown condition {s:?}; valid names: {}", Condition::valid_names()))
            })
    }
}

/// Stage-1 seeds `0..stage1` crossed with stage-2 seeds `0..stage2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SeedGrid {
    pub stage1: u64,
    pub stage2: u64,
}

impl SeedGrid {
    pub const fn new(stage1: u64, stage2: u64) -> Self {
        SeedGrid { stage1, stage2 }
    }

    pub fn stage1_seeds(&self) -> impl Iterator<Item = u64> {
        0..self.stage1
    }

    pub fn pairs(&self) -> Vec<(u64, u64)> {
        let s2 = self.stage2;
        (0..self.stage1).flat_map(|a| (0..s2).map(move |b| (a, b))).collect()
    }

    pub fn len(&self) -> usize {
        (self.stage1 * self.stage2) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for SeedGrid {
    fn default() -> Self {
        SeedGrid::new(5, 6)
    }
}

impl fmt::Display for SeedGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.stage1, self.stage2)
    }
}

impl FromStr for SeedGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("seed grid must look like 5x6, got {s:?}"));
        let (a, b) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let grid = SeedGrid::new(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        if grid.is_empty() {
            return Err(bad());
        }
        Ok(grid)
    }
}

impl TryFrom<String> for SeedGrid {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SeedGrid> for String {
    fn from(g: SeedGrid) -> String {
        g.to_string()
    }
}

pub fn run_seed(condition: Condition, s1: u64, s2: u64) -> u64 {
    rng::derive_seed(condition.name(), &[s1, s2])
}

/// Shared by every condition so that perturbation windows match across arms.
pub fn schedule_seed(s1: u64, s2: u64) -> u64 {
    rng::derive_seed("schedule", &[s1, s2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunId {
    pub condition: Condition,
    pub s1: u64,
    pub s2: u64,
}

impl RunId {
    pub fn stem(&self) -> String {
        format!("s{}-{}", self.s1, self.s2)
    }
}

impl fmt::Display for RunId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.condition, self.stem())
    }
}

impl FromStr for RunId {
    type Err = Error;

    /// Parses `condition/s{S1}-{S2}`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("run id must look like mixed/s0-3, got {s:?}"));
        let (cond, stem) = s.split_once('/').ok_or_else(bad)?;
        let condition = cond.parse()?;
        let (a, b) = stem.strip_prefix('s').and_then(|r| r.split_once('-')).ok_or_else(bad)?;
        Ok(RunId {
            condition,
            s1: a.parse().map_err(|_| bad())?,
            s2: b.parse().map_err(|_| bad())?,
        })
    }
}

/// One stage-2 run of a batch; failures do not stop the batch.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub id: RunId,
    pub outcome: std::result::Result<Stage2Outcome, String>,
}

pub fn stage2_world(cfg: &Stage2Config, world_seed: u64) -> Result<GridWorld> {
    GridWorld::new(
        NoiseGradient {
            sigma_left: cfg.sigma_left,
            sigma_right: cfg.sigma_right,
        },
        world_seed,
    )
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Runs `condition` over the seed grid. `checkpoints` maps each stage-1
/// seed to its backbone, or to the reason it is unavailable.
pub fn run_condition(
    condition: Condition,
    grid: SeedGrid,
    cfg: &Stage2Config,
    world_seed: u64,
    checkpoints: &BTreeMap<u64, std::result::Result<AgentParams, String>>,
    jobs: usize,
) -> Vec<RunRecord> {
    let pairs = grid.pairs();
    in_pool(jobs, || {
        pairs
            .par_iter()
            .map(|&(s1, s2)| {
                let id = RunId { condition, s1, s2 };
                let outcome = match checkpoints.get(&s1) {
                    None => Err(format!("no stage-1 checkpoint for seed {s1}")),
                    Some(Err(e)) => Err(e.clone()),
                    Some(Ok(params)) => stage2_run(
                        cfg,
                        condition.arm(),
                        params,
                        world_seed,
                        run_seed(condition, s1, s2),
                        schedule_seed(s1, s2),
                    )
                    .map_err(|e| e.to_string()),
                };
                RunRecord { id, outcome }
            })
            .collect()
    })
}

/// The four ablation arms on one grid with matched schedules.
pub fn ablation_suite(
    grid: SeedGrid,
    cfg: &Stage2Config,
    world_seed: u64,
    checkpoints: &BTreeMap<u64, std::result::Result<AgentParams, String>>,
    jobs: usize,
) -> BTreeMap<Condition, Vec<RunRecord>> {
    Condition::ABLATION
        .into_iter()
        .map(|c| (c, run_condition(c, grid, cfg, world_seed, checkpoints, jobs)))
        .collect()
}

pub fn stage1_checkpoint_path(out: &Path, seed: u64) -> PathBuf {
    out.join("checkpoints").join(format!("stage1_seed{seed}.ckpt"))
}

pub fn condition_dir(out: &Path, condition: Condition) -> PathBuf {
    out.join("runs").join(condition.name())
}

pub fn run_log_path(out: &Path, id: RunId) -> PathBuf {
    condition_dir(out, id.condition).join(format!("{}.csv", id.stem()))
}

pub fn run_checkpoint_path(out: &Path, id: RunId) -> PathBuf {
    condition_dir(out, id.condition).join(format!("{}.ckpt", id.stem()))
}

pub fn manifest_path(out: &Path, condition: Condition) -> PathBuf {
    condition_dir(out, condition).join("manifest.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub stage1_seed: u64,
    pub stage2_seed: u64,
    pub run_seed: u64,
    pub schedule_seed: u64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub log: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub condition: Condition,
    pub block_np: [usize; 3],
    pub fixed_alpha: Option<f64>,
    pub world_seed: u64,
    pub seed_grid: SeedGrid,
    pub runs: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.status != "ok").count()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Loads the stage-1 backbones under `out`; unreadable ones are recorded as
/// failures rather than aborting.
pub fn load_stage1_checkpoints(
    out: &Path,
    grid: SeedGrid,
) -> BTreeMap<u64, std::result::Result<AgentParams, String>> {
    grid.stage1_seeds()
        .map(|s| (s, checkpoint::load(&stage1_checkpoint_path(out, s)).map_err(|e| e.to_string())))
        .collect()
}

/// Runs a condition from the checkpoints under `out` and persists logs,
/// final parameters and the manifest. Paths in the manifest are relative
/// to `out`.
pub fn run_condition_to_dir(
    condition: Condition,
    grid: SeedGrid,
    cfg: &Stage2Config,
    world_seed: u64,
    out: &Path,
    jobs: usize,
) -> Result<Manifest> {
    let checkpoints = load_stage1_checkpoints(out, grid);
    let dir = condition_dir(out, condition);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let records = run_condition(condition, grid, cfg, world_seed, &checkpoints, jobs);
    let mut runs = Vec::with_capacity(records.len());
    for rec in records {
        let RunId { s1, s2, .. } = rec.id;
        let mut entry = ManifestEntry {
            id: rec.id.to_string(),
            stage1_seed: s1,
            stage2_seed: s2,
            run_seed: run_seed(condition, s1, s2),
            schedule_seed: schedule_seed(s1, s2),
            status: "ok".into(),
            error: None,
            log: None,
            checkpoint: None,
        };
        match rec.outcome {
            Ok(outcome) => {
                let log_path = run_log_path(out, rec.id);
                let ckpt_path = run_checkpoint_path(out, rec.id);
                outcome.log.write(&log_path)?;
                checkpoint::save(&ckpt_path, &outcome.params)?;
                entry.log = log_path.strip_prefix(out).ok().map(Path::to_path_buf);
                entry.checkpoint = ckpt_path.strip_prefix(out).ok().map(Path::to_path_buf);
            }
            Err(e) => {
                entry.status = "failed".into();
                entry.error = Some(e);
            }
        }
        runs.push(entry);
    }
    let manifest = Manifest {
        condition,
        block_np: condition.block_np(),
        fixed_alpha: condition.fixed_alpha(),
        world_seed,
        seed_grid: grid,
        runs,
    };
    let path = manifest_path(out, condition);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Episode range `[start, end)` of `block`.
pub fn block_range(block: usize, block_len: usize) -> Result<std::ops::Range<usize>> {
    if block > 2 {
        return Err(Error::Bounds {
            what: "block",
            value: block,
            limit: 3,
        });
    }
    Ok(block * block_len..(block + 1) * block_len)
}

/// Unweighted mean of the per-episode mean α over a block.
pub fn block_mean_alpha(log: &RunLog, block: usize, block_len: usize) -> Result<f64> {
    let range = block_range(block, block_len)?;
    if log.len() < range.end || block_len == 0 {
        return Err(Error::Analysis(format!(
            "log has {} episodes, block {block} needs {}",
            log.len(),
            range.end
        )));
    }
    let sum: f64 = log.records[range].iter().map(|r| r.mean_alpha).sum();
    Ok(sum / block_len as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub zone: usize,
    pub pos: AgentPos,
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    pub probe_seed: u64,
    pub probes: Vec<Probe>,
}

pub const PROBES_PER_ZONE: usize = 5;

/// Five distinct positions per zone, each observed once without
/// perturbation.
pub fn build_probe_set(world: &GridWorld, probe_seed: u64) -> Result<ProbeSet> {
    let mut pick = rng::stream(rng::derive_seed("probe-positions", &[probe_seed]));
    let mut noise = rng::stream(rng::derive_seed("probe-noise", &[probe_seed]));
    let mut probes = Vec::with_capacity(N_ZONES * PROBES_PER_ZONE);
    for zone in 0..N_ZONES {
        let mut cells = Vec::new();
        for col in 0..WIDTH {
            if zone_of(col)?.0 == zone {
                cells.extend((0..HEIGHT).map(|row| AgentPos { col, row }));
            }
        }
        for i in index::sample(&mut pick, cells.len(), PROBES_PER_ZONE) {
            let pos = cells[i];
            probes.push(Probe {
                zone,
                pos,
                observation: world.observe(pos, false, &mut noise),
            });
        }
    }
    Ok(ProbeSet { probe_seed, probes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerspectiveSnapshot {
    pub g0: Vec<f64>,
    pub g2: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub gamma2: Vec<f64>,
}

pub const SNAPSHOT_EPISODES: usize = 10;

/// Means of the episode-end `g` and episode-mean γ over the last ten
/// episodes of blocks 0 and 2.
pub fn extract_snapshot(log: &RunLog, block_len: usize) -> Result<PerspectiveSnapshot> {
    if block_len == 0 || log.len() < 3 * block_len {
        return Err(Error::Analysis(format!(
            "snapshot needs {} episodes, log has {}",
            3 * block_len,
            log.len()
        )));
    }
    let w = SNAPSHOT_EPISODES.min(block_len);
    let mean = |end: usize, pick: fn(&crate::runlog::EpisodeRecord) -> &[f64], dim: usize| {
        let mut acc = vec![0.0; dim];
        for r in &log.records[end - w..end] {
            acc.iter_mut().zip(pick(r)).for_each(|(a, v)| *a += v);
        }
        acc.iter_mut().for_each(|a| *a /= w as f64);
        acc
    };
    let (e0, e2) = (block_len, 3 * block_len);
    Ok(PerspectiveSnapshot {
        g0: mean(e0, |r| &r.g, G_DIM),
        g2: mean(e2, |r| &r.g, G_DIM),
        gamma0: mean(e0, |r| &r.gamma_mean, Z_DIM),
        gamma2: mean(e2, |r| &r.gamma_mean, Z_DIM),
    })
}

/// Frozen encoding of a probe followed by the gate under `g`.
pub fn probe_encode(params: &AgentParams, observation: &[f64], g: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let z_raw = encode_raw(params, observation)?;
    let z = film_gate(params, &z_raw, g)?.z;
    Ok((z_raw, z))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEncoding {
    pub zone: usize,
    pub pos: AgentPos,
    pub z_raw: Vec<f64>,
    pub z_g0: Vec<f64>,
    pub z_g2: Vec<f64>,
    pub z_null: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeAssay {
    pub run: String,
    pub snapshot: PerspectiveSnapshot,
    pub probes: Vec<ProbeEncoding>,
    /// `z_raw` bit-identical under `g0`, `g2` and `g = 0` for every probe.
    pub z_raw_identical: bool,
    /// Mean over probes of `z(g2) - z(0)`.
    pub diff_g2_null: Vec<f64>,
    /// Mean over probes of `‖z(g2) - z(0)‖`.
    pub mean_diff_norm: f64,
    /// The same difference through the untrained (identity) gate.
    pub control_diff: Vec<f64>,
    pub control_is_zero: bool,
}

/// Probe assay of one trained run. `control` supplies the untrained gate,
/// normally the stage-1 backbone the run started from.
pub fn probe_assay(
    run: &str,
    trained: &AgentParams,
    control: &AgentParams,
    log: &RunLog,
    block_len: usize,
    probes: &ProbeSet,
) -> Result<ProbeAssay> {
    let snapshot = extract_snapshot(log, block_len)?;
    let zero = vec![0.0; G_DIM];
    let mut encodings = Vec::with_capacity(probes.probes.len());
    let mut identical = true;
    let (mut control_g2, mut control_null) = (Vec::new(), Vec::new());
    for p in &probes.probes {
        let (raw0, z_g0) = probe_encode(trained, &p.observation, &snapshot.g0)?;
        let (raw2, z_g2) = probe_encode(trained, &p.observation, &snapshot.g2)?;
        let (raw_n, z_null) = probe_encode(trained, &p.observation, &zero)?;
        identical &= raw0 == raw2 && raw2 == raw_n;
        control_g2.push(probe_encode(control, &p.observation, &snapshot.g2)?.1);
        control_null.push(probe_encode(control, &p.observation, &zero)?.1);
        encodings.push(ProbeEncoding {
            zone: p.zone,
            pos: p.pos,
            z_raw: raw0,
            z_g0,
            z_g2,
            z_null,
        });
    }
    let z_g2: Vec<Vec<f64>> = encodings.iter().map(|e| e.z_g2.clone()).collect();
    let z_null: Vec<Vec<f64>> = encodings.iter().map(|e| e.z_null.clone()).collect();
    let diff_g2_null = per_dim_diff(&z_g2, &z_null)?;
    let mean_diff_norm = z_g2
        .iter()
        .zip(&z_null)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
        .sum::<f64>()
        / encodings.len().max(1) as f64;
    let control_diff = per_dim_diff(&control_g2, &control_null)?;
    let control_is_zero = control_diff.iter().all(|&d| d == 0.0);
    Ok(ProbeAssay {
        run: run.to_string(),
        snapshot,
        probes: encodings,
        z_raw_identical: identical,
        diff_g2_null,
        mean_diff_norm,
        control_diff,
        control_is_zero,
    })
}

pub fn probe_set_path(out: &Path) -> PathBuf {
    out.join("probes").join("probe_set.json")
}

pub fn probe_assay_path(out: &Path, id: RunId) -> PathBuf {
    out.join("probes").join(format!("{}_{}.json", id.condition, id.stem()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runlog::EpisodeRecord;

    fn record(episode: usize, alpha: f64, g: Vec<f64>) -> EpisodeRecord {
        EpisodeRecord {
            episode,
            block: episode / 50,
            n_p: 0,
            perturbed_steps: 0,
            mean_alpha: alpha,
            mean_pred_error: 0.0,
            g_norm: crate::agent::norm(&g),
            gamma_mean: vec![episode as f64; Z_DIM],
            g,
            zone_counts: [48; 5],
        }
    }

    #[test]
    fn condition_table() {
        let table = [
            (Condition::Baseline, [0, 0, 0], None),
            (Condition::Mixed, [0, 4, 0], None),
            (Condition::Persistent, [4, 4, 4], None),
            (Condition::AblationRigid, [4, 4, 4], Some(0.05)),
            (Condition::AblationOpen, [4, 4, 4], Some(0.80)),
            (Condition::AdaptiveNoPerturb, [0, 0, 0], None),
            (Condition::AdaptivePerturb, [4, 4, 4], None),
        ];
        for (c, np, alpha) in table {
            assert_eq!(c.block_np(), np, "{c}");
            assert_eq!(c.fixed_alpha(), alpha, "{c}");
            assert_eq!(c.name().parse::<Condition>().unwrap(), c);
        }
        assert_eq!("Adaptive_Perturb".parse::<Condition>().unwrap(), Condition::AdaptivePerturb);
        let err = "mixd".parse::<Condition>().unwrap_err().to_string();
        assert!(err.contains("ablation-open"), "{err}");
    }

    #[test]
    fn seed_grid_and_ids() {
        assert_eq!("5x6".parse::<SeedGrid>().unwrap(), SeedGrid::default());
        assert_eq!(SeedGrid::default().pairs().len(), 30);
        assert!("5by6".parse::<SeedGrid>().is_err());
        assert!("0x6".parse::<SeedGrid>().is_err());
        let id = RunId {
            condition: Condition::Mixed,
            s1: 2,
            s2: 5,
        };
        assert_eq!(id.to_string(), "mixed/s2-5");
        assert_eq!(id.to_string().parse::<RunId>().unwrap(), id);
        assert_ne!(run_seed(Condition::Mixed, 0, 0), run_seed(Condition::Baseline, 0, 0));
        assert_ne!(run_seed(Condition::Mixed, 0, 1), run_seed(Condition::Mixed, 1, 0));
    }

    #[test]
    fn block_means() {
        let log = RunLog {
            records: (0..150).map(|e| record(e, e as f64, vec![0.0; G_DIM])).collect(),
        };
        assert_eq!(block_mean_alpha(&log, 0, 50).unwrap(), 24.5);
        assert_eq!(block_mean_alpha(&log, 2, 50).unwrap(), 124.5);
        assert!(block_mean_alpha(&log, 3, 50).is_err());
        let flat = RunLog {
            records: (0..150).map(|e| record(e, 0.05, vec![0.0; G_DIM])).collect(),
        };
        for b in 0..3 {
            assert!((block_mean_alpha(&flat, b, 50).unwrap() - 0.05).abs() < 1e-15);
        }
    }

    #[test]
    fn snapshots() {
        let mut u = vec![0.0; G_DIM];
        u[3] = 1.0;
        let log = RunLog {
            records: (0..150).map(|e| record(e, 0.1, u.iter().map(|v| v * e as f64).collect())).collect(),
        };
        let snap = extract_snapshot(&log, 50).unwrap();
        assert!((snap.g0[3] - 44.5).abs() < 1e-12);
        assert!((snap.g2[3] - 144.5).abs() < 1e-12);
        assert!((snap.gamma0[0] - 44.5).abs() < 1e-12);
        assert!((snap.gamma2[15] - 144.5).abs() < 1e-12);
        let short = RunLog {
            records: log.records[..149].to_vec(),
        };
        assert!(extract_snapshot(&short, 50).is_err());
    }

    #[test]
    fn probe_sets() {
        let world = stage2_world(&Stage2Config::default(), 0).unwrap();
        let a = build_probe_set(&world, 9).unwrap();
        assert_eq!(a, build_probe_set(&world, 9).unwrap());
        assert_eq!(a.probes.len(), 25);
        for zone in 0..N_ZONES {
            let mut cells: Vec<_> = a.probes.iter().filter(|p| p.zone == zone).map(|p| p.pos).collect();
            assert_eq!(cells.len(), 5);
            cells.sort();
            cells.dedup();
            assert_eq!(cells.len(), 5);
            assert!(cells.iter().all(|p| zone_of(p.col).unwrap().0 == zone));
        }
        assert_ne!(a, build_probe_set(&world, 10).unwrap());
    }

    #[test]
    fn probe_encode_null_is_identity_without_bias() {
        let mut p = AgentParams::init(3);
        p.film.weight.values.iter_mut().enumerate().for_each(|(i, w)| *w = (i as f64 * 0.37).sin());
        let x = [0.3; 8];
        let (raw, z) = probe_encode(&p, &x, &[0.0; G_DIM]).unwrap();
        assert_eq!(raw, z);
        let (raw2, z2) = probe_encode(&p, &x, &[0.5; G_DIM]).unwrap();
        assert_eq!(raw, raw2);
        assert_ne!(z, z2);
    }
}
