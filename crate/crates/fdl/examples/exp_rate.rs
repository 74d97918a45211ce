//! Exponential growth/decay rate regression.
//!
//! Curves y = exp(omega x) with omega uniform on [-1, 1] are encoded as
//! 28x28 signed-distance images; the reference CNN regresses omega. Run for
//! each noise level:
//!
//! ```bash
//! cargo run --release -p fdl --example exp_rate
//! cargo run --release -p fdl --example exp_rate -- 1.0
//! ```

use std::time::Instant;

use fdl::models::{run_task, TaskId, TaskPreset};
use fdl::NoiseSpec;

fn main() -> fdl::Result<()> {
    let sigma: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("sigma must be a number"))
        .unwrap_or(0.0);
    let master_seed = 7;

    let preset = TaskPreset::standard(TaskId::ExpRate);
    let cfg = preset.train_config();
    println!(
        "exponential-rate regression: {} train / {} val / {} test, sigma = {sigma}",
        preset.train_size, preset.val_size, preset.test_size
    );

    let start = Instant::now();
    let artifacts = run_task(&preset, &cfg, NoiseSpec::new(sigma)?, master_seed)?;
    let reg = artifacts.report.regression.as_ref().unwrap();
    println!(
        "r = {:.4}  intercept = {:.4} (p = {:.3})  slope = {:.4} (p = {:.3})",
        reg.r, reg.intercept, reg.intercept_p, reg.slope, reg.slope_p
    );
    println!(
        "final train loss {:.3e}, val loss {:.3e}, wall time {:.1} s",
        artifacts.model.history.last().unwrap().train_loss,
        artifacts.model.history.last().unwrap().val_loss.unwrap(),
        start.elapsed().as_secs_f64()
    );
    let out = std::path::Path::new("target/examples-out/exp_rate");
    artifacts.model.save(&out.join("model"))?;
    std::fs::write(out.join("report.json"), artifacts.report.to_json()?)?;
    artifacts
        .report
        .write_scatter_csv(&out.join("scatter.csv"))?;
    println!("model and report written to {}", out.display());
    Ok(())
}
