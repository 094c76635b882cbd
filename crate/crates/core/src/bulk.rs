//! One bulk point and two boundary points: the factorized Green's function,
//! the third-order ODE for its cross-ratio dependence, and the three-term
//! general solution of that ODE.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::ode::{make_bulk_ode, normalized_residual, Jet3, KappaParams};
use crate::special::{hyp2f1_derivs, hyp2f1_series_derivs};

/// Two boundary points x₁ ≠ x₂ and a bulk point z = z_re + i·z_im, z_im > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkPoint {
    pub x1: f64,
    pub x2: f64,
    pub z_re: f64,
    pub z_im: f64,
}

impl BulkPoint {
    pub fn new(x1: f64, x2: f64, z_re: f64, z_im: f64) -> Result<Self> {
        let pt = Self { x1, x2, z_re, z_im };
        pt.validate()?;
        Ok(pt)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.x1, self.x2, self.z_re, self.z_im].iter().all(|v| v.is_finite()) {
            return Err(Error::DegenerateGeometry("non-finite coordinate".into()));
        }
        if self.z_im <= 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "bulk point has Im z = {} <= 0",
                self.z_im
            )));
        }
        if self.x1 == self.x2 {
            return Err(Error::DegenerateGeometry("boundary points coincide".into()));
        }
        Ok(())
    }

    pub fn z(&self) -> Complex<f64> {
        Complex::new(self.z_re, self.z_im)
    }

    /// (x₂−x₁)(z̄−z)/((z−x₁)(z̄−x₂)), which lies on the circle |λ−1| = 1.
    pub fn cross_ratio(&self) -> Result<Complex<f64>> {
        self.validate()?;
        let z = self.z();
        let zb = z.conj();
        Ok((self.x2 - self.x1) * (zb - z) / ((z - self.x1) * (zb - self.x2)))
    }
}

/// A conformal automorphism of the upper half-plane used for covariance
/// checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mobius {
    /// w ↦ a·w + b with a > 0.
    Affine { a: f64, b: f64 },
    /// w ↦ −1/w.
    Inversion,
}

impl Mobius {
    pub fn apply(&self, pt: &BulkPoint) -> Result<BulkPoint> {
        match *self {
            Mobius::Affine { a, b } => {
                if !(a > 0.0) {
                    return Err(Error::Domain(format!("affine map needs a > 0, got {a}")));
                }
                BulkPoint::new(a * pt.x1 + b, a * pt.x2 + b, a * pt.z_re + b, a * pt.z_im)
            }
            Mobius::Inversion => {
                if pt.x1 == 0.0 || pt.x2 == 0.0 {
                    return Err(Error::DegenerateGeometry("boundary point at the pole of -1/w".into()));
                }
                let w = -pt.z().inv();
                BulkPoint::new(-1.0 / pt.x1, -1.0 / pt.x2, w.re, w.im)
            }
        }
    }

    /// |φ′| at the three points, in the order (x₁, x₂, z).
    pub fn derivative_moduli(&self, pt: &BulkPoint) -> [f64; 3] {
        match *self {
            Mobius::Affine { a, .. } => [a, a, a],
            Mobius::Inversion => [
                1.0 / (pt.x1 * pt.x1),
                1.0 / (pt.x2 * pt.x2),
                1.0 / pt.z().norm_sqr(),
            ],
        }
    }
}

/// G = |x₂−x₁|^{−h}·Im(z)^{h−α}·|z−x₁|^{−h}·|z−x₂|^{−h}, normalized so the
/// multiplicative constant is 1.
pub fn bulk_green(pt: &BulkPoint, p: &KappaParams) -> Result<f64> {
    pt.validate()?;
    let h = p.h;
    let z = pt.z();
    Ok((pt.x2 - pt.x1).abs().powf(-h)
        * pt.z_im.powf(h - p.alpha)
        * (z - pt.x1).norm().powf(-h)
        * (z - pt.x2).norm().powf(-h))
}

/// Bulk-boundary two-point function Im(z)^{h−α}|z−x|^{−2h}.
pub fn bulk_boundary_two_point(x: f64, z: Complex<f64>, p: &KappaParams) -> Result<f64> {
    if !(z.im > 0.0) {
        return Err(Error::DegenerateGeometry(format!("bulk point has Im z = {}", z.im)));
    }
    Ok(z.im.powf(p.h - p.alpha) * (z - x).norm().powf(-2.0 * p.h))
}

/// Boundary two-point function |x₂−x₁|^{−2h}.
pub fn boundary_two_point(x1: f64, x2: f64, p: &KappaParams) -> Result<f64> {
    if x1 == x2 {
        return Err(Error::DegenerateGeometry("boundary points coincide".into()));
    }
    Ok((x2 - x1).abs().powf(-2.0 * p.h))
}

/// Relative defect of G² = G_bb(x₁, z)·G_bb(x₂, z)·G_∂(x₁, x₂).
pub fn factorization_defect(pt: &BulkPoint, p: &KappaParams) -> Result<f64> {
    let g = bulk_green(pt, p)?;
    let z = pt.z();
    let product = bulk_boundary_two_point(pt.x1, z, p)?
        * bulk_boundary_two_point(pt.x2, z, p)?
        * boundary_two_point(pt.x1, pt.x2, p)?;
    Ok((g * g - product).abs() / product)
}

/// Relative defect of G(pt) = |φ′(x₁)|^h|φ′(x₂)|^h|φ′(z)|^α·G(φ·pt).
pub fn covariance_defect(pt: &BulkPoint, map: Mobius, p: &KappaParams) -> Result<f64> {
    let g = bulk_green(pt, p)?;
    let [d1, d2, dz] = map.derivative_moduli(pt);
    let mapped = d1.powf(p.h) * d2.powf(p.h) * dz.powf(p.alpha) * bulk_green(&map.apply(pt)?, p)?;
    Ok((g - mapped).abs() / g)
}

fn hyp_jet(a: f64, b: f64, c: f64, y: Jet3) -> Result<Jet3> {
    let derivs = match hyp2f1_derivs(a, b, c, y.u) {
        Err(Error::Unsupported(_)) => hyp2f1_series_derivs(a, b, c, y.u)?,
        other => other?,
    };
    Ok(y.compose(derivs))
}

/// Jet of c₁Δ₁ + c₂Δ₂ + c₃Δ₃ at real λ, where
///
/// * Δ₁ = λ^{−e}|1−λ|^{e/2},
/// * Δ₂ = |1−λ|^{e}·₂F₁(2e, 3e/2; (3κ−8)/(2κ); 1−λ),
/// * Δ₃ = |1−λ|^{e/2}·₂F₁(e, 3e/2; (κ+8)/(2κ); 1−λ),
///
/// with e = (κ−8)/κ. For λ > 1 the powers of 1−λ are taken of |1−λ|, which
/// changes each term by a constant phase only.
pub fn bulk_solution_jet(lambda: f64, c: [f64; 3], p: &KappaParams) -> Result<Jet3> {
    if !(lambda > 0.0 && lambda < 2.0) {
        return Err(Error::Domain(format!("lambda = {lambda} outside (0, 2)")));
    }
    if lambda == 1.0 {
        return Err(Error::DegenerateGeometry("lambda = 1 is a singular point".into()));
    }
    let k = p.kappa;
    let e = (k - 8.0) / k;
    let l = Jet3::var(lambda);
    let y = 1.0 - l;
    let s = if lambda < 1.0 { y } else { -y };
    let mut acc = Jet3::ZERO;
    if c[0] != 0.0 {
        acc = acc + l.powf(-e) * s.powf(e / 2.0) * c[0];
    }
    if c[1] != 0.0 {
        let f = hyp_jet(2.0 * e, 1.5 * e, (3.0 * k - 8.0) / (2.0 * k), y)?;
        acc = acc + s.powf(e) * f * c[1];
    }
    if c[2] != 0.0 {
        let f = hyp_jet(e, 1.5 * e, (k + 8.0) / (2.0 * k), y)?;
        acc = acc + s.powf(e / 2.0) * f * c[2];
    }
    Ok(acc)
}

/// Value of [`bulk_solution_jet`].
pub fn bulk_solution(lambda: f64, c: [f64; 3], p: &KappaParams) -> Result<f64> {
    Ok(bulk_solution_jet(lambda, c, p)?.u)
}

/// Normalized residual of the solution with coefficients `c` in the bulk ODE
/// with weight `alpha`.
pub fn bulk_residual(lambda: f64, c: [f64; 3], p: &KappaParams, alpha: f64) -> Result<f64> {
    let jet = bulk_solution_jet(lambda, c, p)?;
    Ok(normalized_residual(&make_bulk_ode(p, alpha), &jet, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn percolation_value() {
        let p = KappaParams::new(6.0).unwrap();
        let pt = BulkPoint::new(-1.0, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(bulk_green(&pt, &p).unwrap(), 2f64.powf(-2.0 / 3.0), max_relative = 1e-15);
    }

    #[test]
    fn lambda_one_is_degenerate() {
        let p = KappaParams::new(6.0).unwrap();
        assert!(matches!(
            bulk_solution(1.0, [1.0, 0.0, 0.0], &p),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(BulkPoint::new(0.0, 1.0, 0.5, -0.1).is_err());
    }
}
