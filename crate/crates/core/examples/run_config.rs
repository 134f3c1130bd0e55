//! Run the bundled toy configuration and write its trace and summary.
//!
//! cargo run --release --example run_config [config] [output-dir]

use netdual::harness::{run_experiment, ExperimentConfig};

fn main() -> netdual::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg_path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/toy.cfg").to_string());
    let out = args.next().unwrap_or_else(|| {
        std::env::temp_dir().join("netdual-toy").display().to_string()
    });
    let cfg = ExperimentConfig::load(&cfg_path)?;
    let outcome = run_experiment(&cfg)?;
    outcome.write(&out)?;
    print!("{}", outcome.summary.to_text());
    println!("trace and summary written to {out}");
    Ok(())
}
