//! Spectral constants of the Laplacian gossip matrix for a few topologies.
//!
//! cargo run --example gossip_spectrum

use nalgebra::DVector;
use netdual::network::{GossipMatrix, Topology};

fn main() -> netdual::Result<()> {
    for spec in ["path 6", "ring 6", "star 6", "complete 6", "erdos-renyi 6 0.5 3"] {
        let topo = Topology::from_spec(spec)?;
        let w = GossipMatrix::laplacian(&topo)?;
        println!(
            "{spec:<22} edges {:>2}  lambda_max {:>6.3}  lambda_min+ {:>6.3}  chi {:>6.3}",
            topo.num_edges(),
            w.lambda_max(),
            w.lambda_min_plus(),
            w.chi()
        );
    }

    // One lifted product is one communication round; consensual vectors
    // sit in the kernel.
    let w = GossipMatrix::laplacian(&Topology::ring(4)?)?;
    let lifted = w.lift(2);
    let consensual = DVector::from_vec(vec![0.3, 0.7, 0.3, 0.7, 0.3, 0.7, 0.3, 0.7]);
    let spread = DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
    println!("|W x| consensual = {:.2e}", lifted.apply(&consensual).norm());
    println!("|W x| spread     = {:.3}", lifted.apply(&spread).norm());
    println!("rounds used      = {}", lifted.rounds());
    Ok(())
}
