//! Evaluates the analytical line-width model and writes a source grid.
//!
//! ```text
//! cargo run --example source_model -- [out.csv]
//! ```

use multifidelity::dataset::save_csv;
use multifidelity::sourcegen::{generate_source_grid, source_width, GridSpec, SourceModelConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for h in [0.7, 0.85, 1.2] {
        let cfg = SourceModelConfig::new(h);
        let slow = source_width(729.0, 350.0, &cfg)?;
        let fast = source_width(153.0, 725.0, &cfg)?;
        println!("h = {h:<4} mm: W ranges {fast:.4} .. {slow:.4} mm, W(F = S) = {:.4} mm", cfg.area() / h);
    }

    let grid = GridSpec::source_pool();
    let data = generate_source_grid(&grid, &SourceModelConfig::new(0.7))?;
    println!("{} samples on {} F x {} S levels", data.len(), grid.n_f, grid.n_s);

    if let Some(path) = std::env::args().nth(1) {
        save_csv(&path, &data)?;
        println!("wrote {path}");
    }
    Ok(())
}
