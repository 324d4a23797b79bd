//! Runs synth, detect, analyze and evaluate from a config file, the same
//! path the `dinehub run-all` command takes.
//!
//! ```text
//! cargo run --example pipeline
//! cargo run --example pipeline -- crates/core/examples/configs/outward.json
//! ```

use std::path::PathBuf;

use dinehub::pipeline::{run_all, PipelineConfig};

fn main() -> dinehub::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/quick.json"));
    let cfg = PipelineConfig::load(&path)?;
    cfg.validate()?;
    for line in run_all(&cfg)? {
        println!("{line}");
    }
    let mut files: Vec<_> = std::fs::read_dir(&cfg.out_dir)
        .map_err(|e| dinehub::Error::io(&cfg.out_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    files.sort();
    println!("{} files in {}: {}", files.len(), cfg.out_dir.display(), files.join(", "));
    Ok(())
}
