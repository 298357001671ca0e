//! Full direct-vs-transfer benchmark for one nozzle height on the synthetic
//! fixture, run on all cores.
//!
//! ```text
//! RUST_LOG=info cargo run --release --example benchmark -- [h] [seed] [reps] [eval_reps]
//! ```

use std::time::Instant;

use multifidelity::protocol::{run_benchmark, with_jobs, BenchmarkConfig};
use multifidelity::sourcegen::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let h: f64 = arg(0, "0.7").parse()?;
    let seed: u64 = arg(1, "0").parse()?;
    let mut cfg = BenchmarkConfig { reps: arg(2, "100").parse()?, ..Default::default() };
    cfg.sweep.eval_reps = arg(3, "30").parse()?;

    let src = SourceModelConfig::new(h);
    let pool = generate_source_grid(&GridSpec::source_pool(), &src)?;
    let syn = SyntheticTargetConfig { seed, ..SyntheticTargetConfig::for_height(h) };
    let target = generate_synthetic_target(&GridSpec::default(), &src, &syn)?;

    let start = Instant::now();
    let out = with_jobs(None, || run_benchmark(&pool, &target, &cfg, seed))?;
    println!("curve points evaluated: {}, sweep cells evaluated: {}", out.curve.points.len(), out.sweep.cells.len());
    println!("{}", serde_json::to_string_pretty(&out.report)?);
    eprintln!("{:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
