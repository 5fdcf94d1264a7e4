//! Drive the command layer from a config file, as the binary does.
//!
//! `cargo run --example run_config -- examples/configs/lattice.toml diffract`

use std::path::PathBuf;

use diffraction_lab::cli::{run, Command, ExperimentConfig};

fn main() -> diffraction_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/lattice.toml").to_string()
    }));
    let which = args.next().unwrap_or_else(|| "diffract".into());
    let cmd = Command::ALL
        .into_iter()
        .find(|c| c.name() == which)
        .ok_or_else(|| diffraction_lab::Error::Config(format!("unknown command {which}")))?;
    let cfg = ExperimentConfig::load(&path)?;
    let out = std::env::temp_dir().join("diffraction-lab").join(&cfg.name);
    println!("config hash {}", cfg.hash());
    for file in run(cmd, &cfg, &out)? {
        println!("wrote {}", file.display());
    }
    Ok(())
}
