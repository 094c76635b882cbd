//! Closed-form solutions at special κ and their ODE residuals.

use cle_fourpoint::closed_forms::{v_exact_jet, SpecialKappa, FS_MAX_LAMBDA};
use cle_fourpoint::ode::{make_boundary_ode, normalized_residual};

fn main() -> Result<(), cle_fourpoint::Error> {
    for sk in SpecialKappa::ALL {
        let ode = make_boundary_ode(&sk.params());
        for &which in sk.solutions() {
            let lambda = if sk == SpecialKappa::K6 { FS_MAX_LAMBDA } else { 0.3 };
            let jet = v_exact_jet(sk, which, lambda)?;
            let tag = if sk.conjectural() { " (conjectural regime)" } else { "" };
            println!(
                "kappa {:.4} {which:?} at {lambda}: value {:+.10}, residual {:.1e}{tag}",
                sk.kappa(),
                jet.u,
                normalized_residual(&ode, &jet, lambda)
            );
        }
    }
    Ok(())
}
