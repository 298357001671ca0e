//! Prints the direct-vs-transfer comparison table, either for built-in
//! reference numbers or from `report.json` files written by `benchmark`.
//!
//! ```text
//! cargo run --example comparison_table -- [report.json ...]
//! ```

use multifidelity::protocol::{rmse_reduction_pct, sample_reduction_pct, BenchmarkReport};

fn row(h: f64, n_direct: usize, n_t: String, total: usize, rmse_d: f64, rmse_t: f64) {
    println!(
        "{h:>5} | {n_direct:>8} | {:>10} | {:>6.3} | {:>6.3} | {:>6.0}% | {:>6.0}%",
        format!("{n_t} = {total}"),
        rmse_d,
        rmse_t,
        sample_reduction_pct(n_direct, total),
        rmse_reduction_pct(rmse_d, rmse_t)
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>5} | {:>8} | {:>10} | {:>6} | {:>6} | {:>7} | {:>7}", "h", "n_direct", "n_t", "RMSE_d", "RMSE_t", "samples", "RMSE");
    let paths: Vec<String> = std::env::args().skip(1).collect();
    if paths.is_empty() {
        for (h, n_s, n_f, rd, rt) in [(0.7, 6, 7, 0.104, 0.081), (0.85, 11, 6, 0.056, 0.047), (1.2, 6, 6, 0.059, 0.045)] {
            row(h, 150, format!("{n_s}x{n_f}"), n_s * n_f, rd, rt);
        }
        return Ok(());
    }
    for path in paths {
        let text = std::fs::read_to_string(&path)?;
        let reports: Vec<BenchmarkReport> = match serde_json::from_str(&text) {
            Ok(list) => list,
            Err(_) => vec![serde_json::from_str(&text)?],
        };
        for r in reports {
            let mark = if r.achieved { "" } else { " *" };
            row(r.h_mm, r.n_direct, format!("{}x{}{mark}", r.n_t.n_s, r.n_t.n_f), r.n_t.total, r.rmse_direct.mean, r.rmse_t.mean);
        }
    }
    Ok(())
}
