//! Scalar prox of nu |s|^q for several exponents, and the box projection
//! used by ACRCD.
//!
//! cargo run --example prox_maps

use nalgebra::DVector;
use netdual::prox::{project_box, prox_lq_scalar, ProxParams};

fn main() -> netdual::Result<()> {
    let (gamma, nu) = (0.5, 1.0);
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "t", "q=1", "q=1.5", "q=2", "q=3");
    for t in [-3.0, -0.4, 0.2, 1.0, 4.0] {
        let row: Vec<String> = [1.0, 1.5, 2.0, 3.0]
            .iter()
            .map(|&q| prox_lq_scalar(t, &ProxParams::new(gamma, nu, q)).map(|s| format!("{s:>10.6}")))
            .collect::<netdual::Result<_>>()?;
        println!("{t:>6.2} {}", row.join(" "));
    }
    let s = DVector::from_vec(vec![3.0, -2.0, 0.25]);
    println!("box projection of {:?} = {:?}", s.as_slice(), project_box(&s).as_slice());
    Ok(())
}
