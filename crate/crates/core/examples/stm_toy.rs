//! STM on the quadratic-loss toy instance, printing the objective and the
//! duality gap along the way.
//!
//! cargo run --release --example stm_toy

use netdual::dual::{DualProblem, SRegularizer};
use netdual::network::{GossipMatrix, Topology};
use netdual::problem::ProblemInstance;
use netdual::stm::{run_stm, StmConfig};

fn main() -> netdual::Result<()> {
    let inst = ProblemInstance::generate(7, 4, 3, 5, 2.0, 0.5, 1.0)?;
    let w = GossipMatrix::laplacian(&Topology::ring(4)?)?;
    let dp = DualProblem::new(&inst, &w)?;
    let mut cfg = StmConfig::new(2000, SRegularizer::constrained(5e-5, inst.q()));
    cfg.record_every = 250;
    let run = run_stm(&dp, &cfg)?;
    println!("{:>6} {:>14} {:>12} {:>12}", "iter", "dual obj", "gap", "consensus");
    for r in run.trace.rows() {
        println!("{:>6} {:>14.9} {:>12.3e} {:>12.3e}", r.iter, r.dual_obj, r.gap, r.consensus_residual);
    }
    println!("stop: {:?}, L = {:.3}", run.stop, run.lipschitz);
    Ok(())
}
