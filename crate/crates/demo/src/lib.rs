//! WebAssembly bindings for a static browser page: render the world's
//! noise map, sample a local observation, and run a short stage-2 session.
//! Every export returns JSON; errors come back as `{"error": "..."}`.

use pagc::env::{zone_of, AgentPos, HEIGHT, WIDTH};
use pagc::experiments::{run_seed, schedule_seed, stage2_world, Condition};
use pagc::rng;
use pagc::training::{stage1_train, stage2_run, Stage1Config, Stage2Config};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Stage-1 steps used to pretrain the demo backbone.
pub const DEMO_STAGE1_STEPS: usize = 2400;
/// Upper bound on demo episodes, to keep the page responsive.
pub const MAX_EPISODES: usize = 60;

fn respond(result: pagc::error::Result<Value>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Mean field (row-major) and per-column noise std of the stage-2 world.
#[wasm_bindgen]
pub fn world(world_seed: u32, perturbed: bool) -> String {
    respond((|| {
        let w = stage2_world(&Stage2Config::default(), u64::from(world_seed))?;
        let sigma = (0..WIDTH).map(|c| w.column_sigma(c, perturbed)).collect::<pagc::error::Result<Vec<_>>>()?;
        let zones = (0..WIDTH).map(|c| zone_of(c).map(|z| z.0)).collect::<pagc::error::Result<Vec<_>>>()?;
        Ok(json!({
            "width": WIDTH,
            "height": HEIGHT,
            "mean_field": w.mean_field(),
            "sigma": sigma,
            "zone": zones,
        }))
    })())
}

/// One noisy 8-neighbour observation at (col, row).
#[wasm_bindgen]
pub fn observe(world_seed: u32, col: u32, row: u32, perturbed: bool, seed: u32) -> String {
    respond((|| {
        let (col, row) = (col as usize, row as usize);
        if col >= WIDTH || row >= HEIGHT {
            return Err(pagc::error::Error::InvalidConfig(format!(
                "cell ({col}, {row}) is outside the {WIDTH}x{HEIGHT} grid"
            )));
        }
        let w = stage2_world(&Stage2Config::default(), u64::from(world_seed))?;
        let mut s = rng::stream(rng::derive_seed("demo-observe", &[u64::from(seed)]));
        let patch = w.observe(AgentPos { col, row }, perturbed, &mut s);
        Ok(json!({ "patch": patch.to_vec() }))
    })())
}

/// Pretrains a small backbone, then runs about `episodes` stage-2 episodes (rounded up to three equal blocks) of
/// `condition`. Returns per-episode α, ‖g‖ and prediction error.
#[wasm_bindgen]
pub fn simulate(condition: &str, seed: u32, episodes: u32) -> String {
    respond((|| {
        let cond: Condition = condition.parse()?;
        let block_len = (episodes as usize).clamp(3, MAX_EPISODES).div_ceil(3);
        let s = u64::from(seed);
        let stage1 = Stage1Config {
            total_steps: DEMO_STAGE1_STEPS,
            ..Stage1Config::default()
        };
        let backbone = stage1_train(&stage1, 0, s)?.params;
        let cfg = Stage2Config {
            episodes: 3 * block_len,
            block_len,
            ..Stage2Config::default()
        };
        let out = stage2_run(&cfg, cond.arm(), &backbone, 0, run_seed(cond, s, 0), schedule_seed(s, 0))?;
        let r = &out.log.records;
        Ok(json!({
            "condition": cond.name(),
            "block_len": cfg.block_len,
            "alpha": r.iter().map(|e| e.mean_alpha).collect::<Vec<_>>(),
            "g_norm": r.iter().map(|e| e.g_norm).collect::<Vec<_>>(),
            "error": r.iter().map(|e| e.mean_pred_error).collect::<Vec<_>>(),
            "perturbed_steps": r.iter().map(|e| e.perturbed_steps).collect::<Vec<_>>(),
        }))
    })())
}

/// Condition names accepted by `simulate`.
#[wasm_bindgen]
pub fn conditions() -> String {
    json!(Condition::ALL.map(Condition::name)).to_string()
}
