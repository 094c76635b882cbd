//! Bulk-boundary-boundary Green function: factorization and Möbius covariance.

use cle_fourpoint::bulk::{bulk_green, bulk_residual, covariance_defect, factorization_defect, BulkPoint, Mobius};
use cle_fourpoint::ode::KappaParams;

fn main() -> Result<(), cle_fourpoint::Error> {
    let pt = BulkPoint::new(-1.0, 2.0, 0.4, 1.3)?;
    for kappa in [5.0, 6.0, 7.0] {
        let p = KappaParams::new(kappa)?;
        println!(
            "kappa {kappa}: alpha {:.6}, G = {:.12}, factorization defect {:.1e}, inversion defect {:.1e}",
            p.alpha,
            bulk_green(&pt, &p)?,
            factorization_defect(&pt, &p)?,
            covariance_defect(&pt, Mobius::Inversion, &p)?
        );
        println!(
            "  power solution residual at lambda 0.8: {:.1e}, with alpha + 1e-3: {:.1e}",
            bulk_residual(0.8, [1.0, 0.0, 0.0], &p, p.alpha)?,
            bulk_residual(0.8, [1.0, 0.0, 0.0], &p, p.alpha + 1e-3)?
        );
    }
    println!("cross-ratio of the point set: {}", pt.cross_ratio()?);
    Ok(())
}
