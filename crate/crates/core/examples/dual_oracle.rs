//! Conjugates, the dual objective with its gradient, and the constants
//! that drive both solvers.
//!
//! cargo run --example dual_oracle

use netdual::dual::{conj_g, lipschitz_constants, softmax_map, DualProblem, DualState, SRegularizer};
use netdual::network::{GossipMatrix, Topology};
use netdual::problem::ProblemInstance;

fn main() -> netdual::Result<()> {
    let theta = 0.5;
    let t = [theta * 3f64.ln(), 0.0];
    println!("g*(t) = {:.6}, softmax = {:?}", conj_g(&t, theta), softmax_map(&t, theta).as_slice());

    let inst = ProblemInstance::generate(7, 4, 3, 5, 2.0, theta, 1.0)?;
    let w = GossipMatrix::laplacian(&Topology::ring(4)?)?;
    let dp = DualProblem::new(&inst, &w)?;
    let q = DualState::zeros(&inst);
    let reg = SRegularizer::constrained(5e-5, inst.q());
    let eval = dp.evaluate(&q);
    println!("F(0) = {:.6} (m theta log d = {:.6})", dp.objective(&q, &reg)?.as_f64(), 4.0 * theta * 5f64.ln());
    println!("|grad_z| = {:.3e}, |grad_s| = {:.4}", eval.grad.z.norm(), eval.grad.s.norm());

    let c = lipschitz_constants(&inst, &w)?;
    println!("L_H = {:.3}, L_z = {:.3}, L_s = {:.3}, eta = {:.4}", c.l_h, c.l_z, c.l_s, c.eta);
    Ok(())
}
