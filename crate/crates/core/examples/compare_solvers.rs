//! STM, ACRCD and the subgradient baseline with the same budget on the
//! p = 1 toy configuration.
//!
//! cargo run --release --example compare_solvers

use netdual::harness::{compare, ExperimentConfig};

fn main() -> netdual::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/toy.cfg");
    let text = std::fs::read_to_string(path)?;
    let cfg = ExperimentConfig::parse(&text.replace("p = 2", "p = 1").replace("max_iter = 500", "max_iter = 3000"))?;
    let report = compare(&cfg, 1e-3)?;
    print!("{}", report.to_table());
    Ok(())
}
