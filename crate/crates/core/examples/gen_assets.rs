//! Regenerates the bundled traces: `cargo run --example gen_assets`.

#[path = "../tests/common/assets.rs"]
mod assets;

fn main() {
    let dir = assets::asset_dir();
    std::fs::create_dir_all(&dir).expect("create assets dir");
    assets::write_all(&dir);
    for (name, t) in [
        ("light", assets::light_batch()),
        ("heavy", assets::heavy_batch()),
    ] {
        println!(
            "{name}: {} jobs, peak {}, utilization {:.3}",
            t.len(),
            t.peak_demand(),
            t.utilization(assets::PRC_PBJ)
        );
    }
    let ws = assets::bursty_ws();
    println!(
        "ws: {} samples, peak {}",
        ws.samples().len(),
        ws.peak_demand()
    );
}
