//! Gamma, Gauss and generalized hypergeometric functions, quadrature and
//! Jacobi elliptic functions.

use cle_fourpoint::special::{ellip_k, gamma_fn, hyp2f1, hyp3f2, integrate, jacobi_sn};

fn main() -> Result<(), cle_fourpoint::Error> {
    println!("Gamma(1/4)           = {:.15}", gamma_fn(0.25)?);
    println!("2F1(1/3,2/3;3/2;0.8) = {:.15}", hyp2f1(1.0 / 3.0, 2.0 / 3.0, 1.5, 0.8)?);
    println!("2F1 at x = -3        = {:.15}", hyp2f1(0.3, 0.4, 1.9, -3.0)?);
    println!("3F2 at x = 0.5       = {:.15}", hyp3f2(4.0 / 3.0, 1.5, 7.0 / 3.0, 8.0 / 3.0, 3.0, 0.5)?);
    let q = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10)?;
    println!("int_0^1 x^-1/2 dx    = {:.12} (error estimate {:.1e})", q.value, q.abs_error_estimate);
    let k = ellip_k(0.5)?;
    println!("K(1/2) = {k:.15}, sn(K/2 | 1/2) = {:.15}", jacobi_sn(k / 2.0, 0.5)?);
    Ok(())
}
