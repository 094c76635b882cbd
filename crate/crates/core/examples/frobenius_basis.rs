//! Frobenius basis of the boundary ODE at λ = 0: indicial roots, leading
//! coefficients, log terms and residuals.

use cle_fourpoint::frobenius::{boundary_basis, eval_jet, indicial_roots, ExpansionPoint, DEFAULT_ORDER};
use cle_fourpoint::ode::{make_boundary_ode, normalized_residual, KappaParams};

fn main() -> Result<(), cle_fourpoint::Error> {
    let kappa: f64 = std::env::args().nth(1).map_or(Ok(6.0), |s| s.parse()).expect("kappa must be a number");
    let p = KappaParams::new(kappa)?;
    let ode = make_boundary_ode(&p);
    println!("kappa = {kappa}, h = {:.6}", p.h);
    println!("indicial roots at 0: {:?}", indicial_roots(&ode, ExpansionPoint::Zero)?);
    let basis = boundary_basis(&p, DEFAULT_ORDER)?;
    for sol in &basis {
        let logs: Vec<String> = sol.l.iter().take(4).map(|c| format!("{c:.6}")).collect();
        println!(
            "rho = {:.6}: a1 = {:+.10}, a2 = {:+.10}, log coefficients {:?}",
            sol.rho, sol.a[1], sol.a[2], logs
        );
    }
    for l in [0.1, 0.3, 0.5] {
        let worst = basis
            .iter()
            .map(|s| eval_jet(s, l).map(|j| normalized_residual(&ode, &j, l)))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!("lambda = {l}: worst normalized residual {worst:.2e}");
    }
    Ok(())
}
