//! Generate an instance, write it to disk, read it back and evaluate the
//! primal objective.
//!
//! cargo run --example instance_io

use nalgebra::DVector;
use netdual::problem::{PrimalState, ProblemInstance};

fn main() -> netdual::Result<()> {
    let inst = ProblemInstance::generate(7, 4, 3, 5, 1.0, 0.5, 1.0)?;
    let dir = std::env::temp_dir().join("netdual-instance-io");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("toy.txt");
    inst.save(&path)?;
    let back = ProblemInstance::load(&path)?;
    assert_eq!(back, inst);
    println!("wrote and reloaded {}", path.display());

    let c = inst.data_constants()?;
    println!("sigma_max(A) = {:.4}, sigma_min+(A) = {:.4}", c.sigma_max, c.sigma_min_plus);

    let uniform = DVector::from_element(inst.d(), 1.0 / inst.d() as f64);
    let f = inst.primal_objective(&uniform)?;
    let dist = inst.distributed_objective(&PrimalState::consensual(&inst, &uniform))?;
    // With p = 1 the block norms add up, so the distributed form is m times larger.
    println!("primal objective at uniform x      = {f:.6}");
    println!("distributed objective / m          = {:.6}", dist / inst.m() as f64);
    Ok(())
}
