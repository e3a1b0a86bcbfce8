//! Definitions of the bundled traces. `examples/gen_assets.rs` writes them to
//! `assets/`; the asset regression test checks the files still match.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use phoenix_sim::traces::{
    synth_batch, synth_bursty_ws, write_swf, write_ws_csv, BurstWindow, JobTrace, SynthBatchParams,
    WsDemandTrace,
};

pub const HOUR: u64 = 3_600;
pub const DAY: u64 = 24 * HOUR;
pub const DURATION_S: u64 = 14 * DAY;
pub const PRC_PBJ: u32 = 128;
pub const PRC_WS: u32 = 64;
pub const WS_BASE: u32 = 13;

const WS_SEED: u64 = 7;
const LIGHT_SEED: u64 = 11;
const HEAVY_SEED: u64 = 23;

pub const LIGHT_SWF: &str = "light_batch.swf";
pub const HEAVY_SWF: &str = "heavy_batch.swf";
pub const BURSTY_WS_CSV: &str = "bursty_ws.csv";

pub fn asset_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

/// Daytime web-service bursts on four days of the fortnight.
pub fn ws_bursts() -> Vec<BurstWindow> {
    [1, 4, 8, 11]
        .into_iter()
        .map(|d| BurstWindow::new(d * DAY + 8 * HOUR, d * DAY + 20 * HOUR))
        .collect()
}

/// Batch busy periods placed between the web-service bursts.
pub fn batch_busy_windows() -> Vec<BurstWindow> {
    [2, 6, 9, 12]
        .into_iter()
        .map(|d| BurstWindow::new(d * DAY, d * DAY + 18 * HOUR))
        .collect()
}

pub fn bursty_ws() -> WsDemandTrace {
    synth_bursty_ws(DURATION_S, WS_BASE, PRC_WS, &ws_bursts(), WS_SEED).expect("valid ws params")
}

pub fn light_params() -> SynthBatchParams {
    SynthBatchParams {
        duration_s: DURATION_S,
        capacity: PRC_PBJ,
        peak_nodes: PRC_PBJ,
        target_utilization: 0.485,
        min_runtime_s: 30,
        max_runtime_s: 2 * HOUR,
        busy_windows: Vec::new(),
        busy_weight: 1.0,
        no_contention: true,
    }
}

pub fn heavy_params() -> SynthBatchParams {
    SynthBatchParams {
        duration_s: DURATION_S,
        capacity: PRC_PBJ,
        peak_nodes: PRC_PBJ,
        target_utilization: 0.762,
        min_runtime_s: 30,
        max_runtime_s: 4 * HOUR,
        busy_windows: batch_busy_windows(),
        busy_weight: 3.0,
        no_contention: false,
    }
}

pub fn light_batch() -> JobTrace {
    synth_batch(&light_params(), LIGHT_SEED).expect("valid light params")
}

pub fn heavy_batch() -> JobTrace {
    synth_batch(&heavy_params(), HEAVY_SEED).expect("valid heavy params")
}

/// Writes all trace assets into `dir`.
pub fn write_all(dir: &Path) {
    let header = |util: &str| {
        vec![
            format!("synthetic batch workload, {util} utilization of {PRC_PBJ} nodes"),
            format!("duration {DURATION_S} s"),
        ]
    };
    let light = header("light");
    let heavy = header("heavy");
    write_swf(
        &light_batch(),
        &dir.join(LIGHT_SWF),
        &light.iter().map(String::as_str).collect::<Vec<_>>(),
    )
    .expect("write light trace");
    write_swf(
        &heavy_batch(),
        &dir.join(HEAVY_SWF),
        &heavy.iter().map(String::as_str).collect::<Vec<_>>(),
    )
    .expect("write heavy trace");
    write_ws_csv(&bursty_ws(), &dir.join(BURSTY_WS_CSV)).expect("write ws trace");
}
