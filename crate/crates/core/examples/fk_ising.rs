//! FK-Ising (κ = 16/3) closed forms: A_FK, R_FK and its singular tail.

use cle_fourpoint::closed_forms::{a_fk, fk_one_minus_r, fk_tail_fit, r_fk};
use cle_fourpoint::connection::connect_basis;
use cle_fourpoint::frobenius::DEFAULT_ORDER;
use cle_fourpoint::ode::KappaParams;

fn main() -> Result<(), cle_fourpoint::Error> {
    println!("A_FK = {:.10}", a_fk()?);
    let conn = connect_basis(&KappaParams::new(16.0 / 3.0)?, DEFAULT_ORDER)?;
    for l in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let closed = r_fk(l)?;
        println!("lambda {l}: R_FK = {closed:.12}, series pipeline differs by {:.1e}", (conn.ratio(l)? - closed).abs());
    }
    for eps in [1e-2, 1e-3, 1e-4] {
        println!("1 - R_FK(1 - {eps:e}) = {:.6e}", fk_one_minus_r(eps)?);
    }
    let eps: Vec<f64> = (0..=12).map(|i| 10f64.powf(-4.0 + i as f64 / 6.0)).collect();
    println!("tail fit: {:?}", fk_tail_fit(&eps)?);
    Ok(())
}
