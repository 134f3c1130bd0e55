//! ACRCD on the p = 1 toy instance: communication rounds versus local
//! computations, for a few seeds.
//!
//! cargo run --release --example acrcd_split

use netdual::acrcd::{run_acrcd, AcrcdConfig};
use netdual::dual::{lipschitz_constants, DualProblem};
use netdual::network::{GossipMatrix, Topology};
use netdual::problem::ProblemInstance;

fn main() -> netdual::Result<()> {
    let inst = ProblemInstance::generate(7, 4, 3, 5, 1.0, 0.5, 1.0)?;
    let w = GossipMatrix::laplacian(&Topology::ring(4)?)?;
    let dp = DualProblem::new(&inst, &w)?;
    let c = lipschitz_constants(&inst, &w)?;
    println!("eta = {:.4}, expected comm/comp = {:.4}", c.eta, c.eta / (1.0 - c.eta));
    for seed in 0..4 {
        let mut cfg = AcrcdConfig::from_constants(&c, 10_000, seed)?;
        cfg.record_every = 100;
        let run = run_acrcd(&dp, &cfg)?;
        let st = &run.final_state;
        let gap = run.trace.last().map_or(f64::NAN, |r| r.gap);
        println!(
            "seed {seed}: n_comm {:>5}  n_comp {:>5}  ratio {:.4}  best F {:.9}  final gap {gap:.2e}",
            st.n_comm,
            st.n_comp,
            st.n_comm as f64 / st.n_comp as f64,
            run.best_objective
        );
    }
    Ok(())
}
