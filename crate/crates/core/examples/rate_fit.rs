//! Fit the log-log slope of STM's dual suboptimality against a long
//! reference solve.
//!
//! cargo run --release --example rate_fit

use netdual::dual::{lipschitz_constants, DualProblem};
use netdual::harness::{fit_rate, iterations_to, reference_optimum, regularizer_for};
use netdual::network::{GossipMatrix, Topology};
use netdual::problem::ProblemInstance;
use netdual::stm::{run_stm, StmConfig};

fn main() -> netdual::Result<()> {
    let inst = ProblemInstance::generate(7, 4, 3, 5, 2.0, 0.5, 1.0)?;
    let w = GossipMatrix::laplacian(&Topology::ring(4)?)?;
    let dp = DualProblem::new(&inst, &w)?;
    let reg = regularizer_for(&inst, None, true, 1e-4);
    let budget = 2000;
    let reference = reference_optimum(&dp, reg, 50 * budget)?;
    let run = run_stm(&dp, &StmConfig::new(budget, reg))?;
    let rep = fit_rate(&run.trace, "dual_obj", reference.f_star, (10, 500))?;
    println!("F* ~ {:.12}", reference.f_star);
    println!("slope {:.4}, r^2 {:.4}, window {:?}", rep.slope, rep.r_squared, rep.window);

    let l_h = lipschitz_constants(&inst, &w)?.l_h;
    let q2 = reference.q.norm_squared();
    for eps in [1e-2, 1e-3, 1e-4] {
        let k = iterations_to(&run.trace, "dual_obj", reference.f_star, eps)?;
        let scale = (l_h * q2 / (inst.m() as f64 * eps)).sqrt();
        println!("eps {eps:e}: reached at {k:?}, sqrt(L |q*|^2 / (m eps)) = {scale:.1}");
    }
    Ok(())
}
