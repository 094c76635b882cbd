//! Finite-difference check that the ODE solutions lift to solutions of the
//! fused third-order PDE in the marked points.

use cle_fourpoint::connection::connect_basis;
use cle_fourpoint::frobenius::DEFAULT_ORDER;
use cle_fourpoint::ode::{cross_ratio, fusion_pde_residual, KappaParams};

fn main() -> Result<(), cle_fourpoint::Error> {
    let p = KappaParams::new(6.0)?;
    let conn = connect_basis(&p, DEFAULT_ORDER)?;
    for [u, x1, x2, x3] in [[-1.0, 0.0, 1.0, 3.0], [0.0, 0.5, 2.0, 3.0], [-2.0, 0.0, 0.5, 4.0]] {
        let lambda = cross_ratio(u, x1, x2, x3)?;
        for (i, name) in [(0, "V0"), (1, "Vh"), (2, "V3h1")] {
            let r = fusion_pde_residual(|l| conn.solution_jet(i, l), &p, u, x1, x2, x3)?;
            println!("points ({u}, {x1}, {x2}, {x3}), cross-ratio {lambda:.4}, {name}: residual {r:.2e}");
        }
    }
    Ok(())
}
