//! Connection constants β, C1/C2 and A, and the universal ratio R(λ).

use cle_fourpoint::connection::{connect_basis, percolation_amplitude_formula};
use cle_fourpoint::frobenius::DEFAULT_ORDER;
use cle_fourpoint::ode::KappaParams;

fn main() -> Result<(), cle_fourpoint::Error> {
    println!("{:>8} {:>14} {:>14} {:>14} {:>10}", "kappa", "beta", "C1/C2", "A", "R(1/2)");
    for kappa in [4.5, 4.8, 5.0, 16.0 / 3.0, 6.0, 7.0, 7.5] {
        let c = connect_basis(&KappaParams::new(kappa)?, DEFAULT_ORDER)?;
        println!(
            "{kappa:>8.4} {:>14.10} {:>14.10} {:>14.10} {:>10.6}",
            c.beta,
            c.c1_over_c2,
            c.a,
            c.ratio(0.5)?
        );
    }
    println!("closed-form A at kappa 6: {:.15}", percolation_amplitude_formula());
    Ok(())
}
