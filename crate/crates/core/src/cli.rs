//! Command-line driver.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::agent::AgentParams;
use crate::analysis::{analyze, load_experiment_data, write_analysis};
use crate::checkpoint;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiments::{
    build_probe_set, manifest_path, probe_assay, probe_assay_path, probe_set_path, run_checkpoint_path,
    run_condition_to_dir, run_log_path, stage1_checkpoint_path, stage2_world, Condition, Manifest, RunId, SeedGrid,
};
use crate::runlog::RunLog;
use crate::training::{stage1_train, Stage1Outcome};

#[derive(Debug, Parser)]
#[command(name = "pagc", version, about = "Perspectival gridworld agent: training, experiments and analysis")]
pub struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; the PAGC_OUT environment variable takes precedence.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    pub force: bool,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed grid as S1xS2, e.g. 5x6.
    #[arg(long, global = true)]
    pub seed_grid: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one backbone checkpoint per stage-1 seed.
    TrainStage1,
    /// Run stage 2 for a condition (or `all`) over the seed grid.
    Run {
        #[arg(long)]
        condition: String,
    },
    /// Probe assay for a mixed run (`mixed/s0-0`), or every mixed run.
    Probe {
        #[arg(long)]
        run: Option<String>,
    },
    /// Emit the summary tables and acceptance verdicts.
    Analyze,
    /// Run the invariant suite.
    Check,
}

/// Exit status: 0 success, 1 runtime failure, 2 invalid input.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) => 2,
        _ => 1,
    }
}

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub force: bool,
}

impl Context {
    pub fn resolve(cli: &Cli) -> Result<Self> {
        let mut config = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(g) = &cli.seed_grid {
            config.seed_grid = g.parse()?;
        }
        if let Some(j) = cli.jobs {
            config.jobs = j;
        }
        if let Some(o) = &cli.out {
            config.out_dir = o.clone();
        }
        if let Some(o) = std::env::var_os("PAGC_OUT").filter(|v| !v.is_empty()) {
            config.out_dir = PathBuf::from(o);
        }
        config.validate()?;
        Ok(Context {
            out: config.out_dir.clone(),
            config,
            force: cli.force,
        })
    }

    fn grid(&self) -> SeedGrid {
        self.config.seed_grid
    }
}

fn refuse_overwrite(paths: &[PathBuf], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    if let Some(p) = paths.iter().find(|p| p.exists()) {
        return Err(Error::Io {
            path: p.clone(),
            source: std::io::Error::new(
                std::io::ErrorKind::AlreadyExists,
                "output exists; pass --force to overwrite",
            ),
        });
    }
    Ok(())
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_config(ctx: &Context) -> Result<()> {
    create_dir(&ctx.out)?;
    let path = ctx.out.join("config.toml");
    std::fs::write(&path, ctx.config.to_toml()).map_err(|e| Error::io(&path, e))
}

pub fn stage1_metrics_path(out: &Path) -> PathBuf {
    out.join("checkpoints").join("stage1_metrics.csv")
}

fn stage1_metrics_csv(outcomes: &[(u64, Stage1Outcome)]) -> String {
    let mut s = String::from(
        "seed,episode,mean_pred_error,mean_loss,mean_actor_loss,g_norm,zone_0,zone_1,zone_2,zone_3,zone_4\n",
    );
    for (seed, o) in outcomes {
        for r in &o.episodes {
            let z = r.zone_counts;
            s.push_str(&format!(
                "{seed},{},{},{},{},{},{},{},{},{},{}\n",
                r.episode, r.mean_pred_error, r.mean_loss, r.mean_actor_loss, r.g_norm, z[0], z[1], z[2], z[3], z[4]
            ));
        }
    }
    s
}

pub fn train_stage1(ctx: &Context) -> Result<()> {
    let seeds: Vec<u64> = ctx.grid().stage1_seeds().collect();
    let dir = ctx.out.join("checkpoints");
    let mut targets: Vec<PathBuf> = seeds.iter().map(|&s| stage1_checkpoint_path(&ctx.out, s)).collect();
    targets.push(stage1_metrics_path(&ctx.out));
    refuse_overwrite(&targets, ctx.force)?;
    let cfg = &ctx.config.stage1;
    let world_seed = ctx.config.world_seed;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.config.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("jobs: {e}")))?;
    let outcomes: Vec<(u64, Stage1Outcome)> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| stage1_train(cfg, world_seed, s).map(|o| (s, o)))
            .collect::<Result<_>>()
    })?;
    create_dir(&dir)?;
    write_config(ctx)?;
    for (seed, o) in &outcomes {
        let path = stage1_checkpoint_path(&ctx.out, *seed);
        checkpoint::save(&path, &o.params)?;
        let last = o.episodes.last().map_or(f64::NAN, |r| r.mean_pred_error);
        eprintln!("stage-1 seed {seed}: final episode prediction error {last:.4} -> {}", path.display());
    }
    let path = stage1_metrics_path(&ctx.out);
    std::fs::write(&path, stage1_metrics_csv(&outcomes)).map_err(|e| Error::io(&path, e))
}

/// Returns the number of failed runs.
pub fn run(ctx: &Context, condition: &str) -> Result<usize> {
    let conditions: Vec<Condition> = if condition.eq_ignore_ascii_case("all") {
        ctx.config.conditions.clone()
    } else {
        vec![condition.parse()?]
    };
    let targets: Vec<PathBuf> = conditions.iter().map(|&c| manifest_path(&ctx.out, c)).collect();
    refuse_overwrite(&targets, ctx.force)?;
    write_config(ctx)?;
    let mut failed = 0;
    for c in conditions {
        let m = run_condition_to_dir(c, ctx.grid(), &ctx.config.stage2, ctx.config.world_seed, &ctx.out, ctx.config.jobs)?;
        for r in m.runs.iter().filter(|r| r.status != "ok") {
            eprintln!("{}: failed: {}", r.id, r.error.as_deref().unwrap_or("unknown error"));
        }
        eprintln!("{c}: {} runs, {} failed", m.runs.len(), m.failures());
        failed += m.failures();
    }
    Ok(failed)
}

fn load_probe_set(ctx: &Context) -> Result<crate::experiments::ProbeSet> {
    let world = stage2_world(&ctx.config.stage2, ctx.config.world_seed)?;
    let probes = build_probe_set(&world, ctx.config.probe_seed)?;
    let path = probe_set_path(&ctx.out);
    create_dir(path.parent().expect("probe dir"))?;
    std::fs::write(&path, serde_json::to_string_pretty(&probes)?).map_err(|e| Error::io(&path, e))?;
    Ok(probes)
}

pub fn probe_run(ctx: &Context, id: RunId, probes: &crate::experiments::ProbeSet) -> Result<PathBuf> {
    if id.condition != Condition::Mixed {
        return Err(Error::InvalidConfig(format!(
            "the probe assay is defined for mixed-history runs, got {id}"
        )));
    }
    let target = probe_assay_path(&ctx.out, id);
    refuse_overwrite(std::slice::from_ref(&target), ctx.force)?;
    let trained = checkpoint::load(&run_checkpoint_path(&ctx.out, id))?;
    let control: AgentParams = checkpoint::load(&stage1_checkpoint_path(&ctx.out, id.s1))?;
    let log = RunLog::read(&run_log_path(&ctx.out, id))?;
    let assay = probe_assay(&id.to_string(), &trained, &control, &log, ctx.config.stage2.block_len, probes)?;
    std::fs::write(&target, serde_json::to_string_pretty(&assay)?).map_err(|e| Error::io(&target, e))?;
    Ok(target)
}

pub fn probe(ctx: &Context, run: Option<&str>) -> Result<()> {
    let ids: Vec<RunId> = match run {
        Some(r) if !r.eq_ignore_ascii_case("all") => vec![r.parse()?],
        _ => {
            let m = Manifest::read(&manifest_path(&ctx.out, Condition::Mixed))?;
            m.runs
                .iter()
                .filter(|r| r.status == "ok")
                .map(|r| RunId {
                    condition: Condition::Mixed,
                    s1: r.stage1_seed,
                    s2: r.stage2_seed,
                })
                .collect()
        }
    };
    if let Some(bad) = ids.iter().find(|id| id.condition != Condition::Mixed) {
        return Err(Error::InvalidConfig(format!(
            "the probe assay is defined for mixed-history runs, got {bad}"
        )));
    }
    let probes = load_probe_set(ctx)?;
    for id in ids {
        let path = probe_run(ctx, id, &probes)?;
        eprintln!("{id}: {}", path.display());
    }
    Ok(())
}

/// Returns the verdict.
pub fn analyze_out(ctx: &Context) -> Result<String> {
    let data = load_experiment_data(&ctx.out, ctx.grid(), ctx.config.stage2.block_len, &ctx.config.conditions);
    let analysis = analyze(&data)?;
    write_analysis(&ctx.out, &analysis)?;
    for c in &analysis.report.criteria {
        eprintln!("criterion {}: {} ({})", c.id, c.status, c.name);
    }
    if !data.missing.is_empty() {
        eprintln!("{} runs missing", data.missing.len());
    }
    Ok(analysis.report.verdict)
}

/// Returns whether every check passed.
pub fn check(ctx: &Context) -> Result<bool> {
    let backbone = match checkpoint::load(&stage1_checkpoint_path(&ctx.out, 0)) {
        Ok(p) => p,
        Err(_) => {
            eprintln!("no stage-1 checkpoint found; checking against an untrained backbone");
            AgentParams::init(0)
        }
    };
    let results = crate::checks::run_suite(&backbone, &ctx.config.stage2)?;
    for r in &results {
        println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    Ok(results.iter().all(|r| r.pass))
}

/// Parses arguments, executes, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    let ctx = Context::resolve(cli)?;
    match &cli.command {
        Command::TrainStage1 => train_stage1(&ctx).map(|_| 0),
        Command::Run { condition } => run(&ctx, condition).map(|failed| i32::from(failed > 0)),
        Command::Probe { run } => probe(&ctx, run.as_deref()).map(|_| 0),
        Command::Analyze => {
            let verdict = analyze_out(&ctx)?;
            println!("verdict: {verdict}");
            Ok(0)
        }
        Command::Check => check(&ctx).map(|ok| i32::from(!ok)),
    }
}
