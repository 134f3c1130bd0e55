//! Recover primal points from STM dual iterates and watch the gap close.
//!
//! cargo run --release --example recovery_gap

use netdual::dual::{DualProblem, SRegularizer};
use netdual::network::{GossipMatrix, Topology};
use netdual::problem::ProblemInstance;
use netdual::recovery::{consensual_point, duality_gap, primal_from_dual};
use netdual::stm::{run_stm, StmConfig};

fn main() -> netdual::Result<()> {
    let inst = ProblemInstance::generate(7, 4, 3, 5, 2.0, 0.5, 1.0)?;
    let w = GossipMatrix::laplacian(&Topology::ring(4)?)?;
    let dp = DualProblem::new(&inst, &w)?;
    for iters in [10, 100, 1000, 10_000] {
        let mut cfg = StmConfig::new(iters, SRegularizer::constrained(5e-5, inst.q()));
        cfg.record_every = iters;
        let run = run_stm(&dp, &cfg)?;
        let rep = duality_gap(&run.q, &dp)?;
        let x = consensual_point(&primal_from_dual(&run.q, &dp));
        println!(
            "{iters:>6} iters: primal {:.8}  dual {:.8}  gap {:.2e}  consensus {:.2e}",
            rep.primal_value,
            rep.dual_value.unwrap_or(f64::NEG_INFINITY),
            rep.gap.as_f64(),
            rep.consensus_residual
        );
        if iters == 10_000 {
            println!("x = {:?}", x.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());
            if let Some(erg) = &run.ergodic {
                let xe = consensual_point(erg);
                println!("ergodic x = {:?}", xe.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());
            }
        }
    }
    Ok(())
}
