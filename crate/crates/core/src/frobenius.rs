//! Frobenius series at a regular singular point of a third-order [`OdeSpec`],
//! including the single-logarithm solutions that appear when two indicial
//! roots differ by an integer.
//!
//! A solution is stored as
//!
//! ```text
//! tᵖ Σ aₙ tⁿ + |log t| · tᵖ Σ lₙ tⁿ,     t = λ or t = 1 − λ,
//! ```
//!
//! so for t ∈ (0, 1) the log coefficients carry the sign they have in front of
//! |log t| = −log t.

use nalgebra::{Complex, Matrix3};

use crate::error::{Error, Result};
use crate::ode::{make_boundary_ode, Jet3, KappaParams, OdeSpec};

/// Default number of series terms.
pub const DEFAULT_ORDER: usize = 200;
/// Largest |λ − expansion point| at which a series is evaluated.
pub const TRUST_RADIUS: f64 = 0.6;
const RESONANCE_TOL: f64 = 1e-9;

/// Where a series is centred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpansionPoint {
    Zero,
    One,
}

/// One series solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusSolution {
    pub expansion_point: ExpansionPoint,
    pub rho: f64,
    /// Power coefficients, `a[0] == 1`.
    pub a: Vec<f64>,
    /// Coefficients of |log t|·t^{ρ+n}; all zero away from resonance.
    pub l: Vec<f64>,
    /// Index at which the log branch starts, if the root is resonant.
    pub resonance: Option<usize>,
    /// κ of the boundary ODE this came from, when known.
    pub kappa: Option<f64>,
}

impl FrobeniusSolution {
    /// Highest retained power index N.
    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    pub fn has_log(&self) -> bool {
        self.l.iter().any(|&c| c != 0.0)
    }
}

/// Lowest-order behaviour of the ODE at a point.
struct LocalStructure {
    smin: i64,
    smax: i64,
}

fn local_structure(spec: &OdeSpec) -> Result<LocalStructure> {
    let lead = spec.coeffs[3]
        .order()
        .ok_or_else(|| Error::IrregularPoint("leading coefficient vanishes identically".into()))?;
    let lead_shift = lead as i64 - 3;
    let mut smin = lead_shift;
    let mut smax = i64::MIN;
    for (j, p) in spec.coeffs.iter().enumerate() {
        if let Some(o) = p.order() {
            smin = smin.min(o as i64 - j as i64);
            smax = smax.max(p.0.len() as i64 - 1 - j as i64);
        }
    }
    if smin < lead_shift {
        return Err(Error::IrregularPoint(format!(
            "lower-order coefficients dominate the leading one (shift {smin} < {lead_shift})"
        )));
    }
    Ok(LocalStructure { smin, smax })
}

/// Falling factorials (σ)ₖ for k = 0..=3.
fn falling(sigma: f64) -> [f64; 4] {
    [1.0, sigma, sigma * (sigma - 1.0), sigma * (sigma - 1.0) * (sigma - 2.0)]
}

/// d/dσ of the falling factorials.
fn falling_deriv(sigma: f64) -> [f64; 4] {
    [0.0, 1.0, 2.0 * sigma - 1.0, 3.0 * sigma * sigma - 6.0 * sigma + 2.0]
}

/// Q_s(σ) = Σⱼ p_{j, j+s} (σ)ⱼ, the coefficient of t^{σ+s} in L[t^σ].
fn q_shift(spec: &OdeSpec, s: i64, sigma: f64) -> f64 {
    let ff = falling(sigma);
    (0..4)
        .filter_map(|j| {
            let m = j as i64 + s;
            (m >= 0).then(|| spec.coeffs[j].coeff(m as usize) * ff[j])
        })
        .sum()
}

fn q_shift_deriv(spec: &OdeSpec, s: i64, sigma: f64) -> f64 {
    let ff = falling_deriv(sigma);
    (0..4)
        .filter_map(|j| {
            let m = j as i64 + s;
            (m >= 0).then(|| spec.coeffs[j].coeff(m as usize) * ff[j])
        })
        .sum()
}

/// The three indicial roots at `at`, sorted ascending.
///
/// They are read off from the local leading coefficients of the equation, so
/// any third-order ODE with a regular singular point works.
pub fn indicial_roots(spec: &OdeSpec, at: ExpansionPoint) -> Result<[f64; 3]> {
    let local = match at {
        ExpansionPoint::Zero => spec.clone(),
        ExpansionPoint::One => spec.reflect(),
    };
    let ls = local_structure(&local)?;
    // Q(σ) = c3 σ³ + c2 σ² + c1 σ + c0 from the falling-factorial form.
    let p = |j: usize| {
        let m = j as i64 + ls.smin;
        if m >= 0 {
            local.coeffs[j].coeff(m as usize)
        } else {
            0.0
        }
    };
    let (p0, p1, p2, p3) = (p(0), p(1), p(2), p(3));
    let c3 = p3;
    let c2 = p2 - 3.0 * p3;
    let c1 = p1 - p2 + 2.0 * p3;
    let c0 = p0;
    if c3 == 0.0 {
        return Err(Error::IrregularPoint("indicial polynomial is not cubic".into()));
    }
    let companion = Matrix3::new(
        0.0, 0.0, -c0 / c3, //
        1.0, 0.0, -c1 / c3, //
        0.0, 1.0, -c2 / c3,
    );
    let eig: Vec<Complex<f64>> = companion.complex_eigenvalues().iter().copied().collect();
    let mut roots = [0.0; 3];
    for (r, z) in roots.iter_mut().zip(&eig) {
        if z.im.abs() > 1e-9 * (1.0 + z.re.abs()) {
            return Err(Error::Unsupported(format!("complex indicial root {z}")));
        }
        // Newton polish on the cubic.
        let mut x = z.re;
        for _ in 0..4 {
            let f = ((c3 * x + c2) * x + c1) * x + c0;
            let df = (3.0 * c3 * x + 2.0 * c2) * x + c1;
            if df == 0.0 {
                break;
            }
            let dx = f / df;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        *r = if x.abs() < 1e-14 { 0.0 } else { x };
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    Ok(roots)
}

/// Series solution with exponent `rho` at λ = 0, N = `order` terms.
///
/// At a resonance the free power coefficient at the resonant index is set to
/// zero; use [`expand_with_free`] to choose it.
pub fn expand(spec: &OdeSpec, rho: f64, order: usize) -> Result<FrobeniusSolution> {
    expand_with_free(spec, rho, order, 0.0)
}

/// Like [`expand`] but with the free coefficient a[m] at the resonant index m
/// set to `free`. Ignored away from resonance.
pub fn expand_with_free(
    spec: &OdeSpec,
    rho: f64,
    order: usize,
    free: f64,
) -> Result<FrobeniusSolution> {
    if order < 20 {
        return Err(Error::Domain(format!("series order {order} below 20")));
    }
    let ls = local_structure(spec)?;
    let roots = indicial_roots(spec, ExpansionPoint::Zero)?;
    let scale: f64 = (0..4)
        .map(|j| {
            let m = j as i64 + ls.smin;
            let c = if m >= 0 { spec.coeffs[j].coeff(m as usize) } else { 0.0 };
            c.abs() * rho.abs().max(1.0).powi(j as i32)
        })
        .sum();
    if q_shift(spec, ls.smin, rho).abs() > 1e-8 * scale {
        return Err(Error::Domain(format!("{rho} is not an indicial root")));
    }

    // Other roots at a nonnegative integer distance above rho.
    let mut resonances = Vec::new();
    let mut seen_self = false;
    for &r in &roots {
        let d = r - rho;
        if d.abs() < RESONANCE_TOL {
            if seen_self {
                return Err(Error::Unsupported("repeated indicial root".into()));
            }
            seen_self = true;
            continue;
        }
        if d > 0.0 && (d - d.round()).abs() < RESONANCE_TOL {
            resonances.push(d.round() as usize);
        }
    }
    if resonances.len() > 1 {
        return Err(Error::Unsupported(format!(
            "more than one resonance above root {rho}: {resonances:?}"
        )));
    }
    let resonance = resonances.first().copied().filter(|&m| m <= order);

    let n_terms = order + 1;
    let mut a = vec![0.0; n_terms];
    let mut big_l = vec![0.0; n_terms];
    a[0] = 1.0;
    for n in 1..n_terms {
        // Contributions of earlier coefficients to the power t^{ρ+n+smin}.
        let mut power_part = 0.0;
        let mut log_part = 0.0;
        for s in (ls.smin + 1)..=ls.smax {
            let k = n as i64 + ls.smin - s;
            if k < 0 {
                continue;
            }
            let k = k as usize;
            let q = q_shift(spec, s, rho + k as f64);
            power_part += q * a[k];
            log_part += q * big_l[k];
            if big_l[k] != 0.0 {
                power_part += q_shift_deriv(spec, s, rho + k as f64) * big_l[k];
            }
        }
        let sigma = rho + n as f64;
        match resonance {
            Some(m) if n == m => {
                let dq = q_shift_deriv(spec, ls.smin, sigma);
                big_l[n] = -power_part / dq;
                a[n] = free;
            }
            _ => {
                let q0 = q_shift(spec, ls.smin, sigma);
                if resonance.is_some_and(|m| n > m) {
                    big_l[n] = -log_part / q0;
                }
                let own_log = q_shift_deriv(spec, ls.smin, sigma) * big_l[n];
                a[n] = -(power_part + own_log) / q0;
            }
        }
        if !a[n].is_finite() || !big_l[n].is_finite() {
            return Err(Error::SeriesConvergence { terms: n });
        }
    }
    Ok(FrobeniusSolution {
        expansion_point: ExpansionPoint::Zero,
        rho,
        a,
        l: big_l.iter().map(|c| -c).collect(),
        resonance,
        kappa: None,
    })
}

/// The same function re-centred at the other endpoint: V(λ) ↦ V(1 − λ).
pub fn reflect(sol: &FrobeniusSolution) -> FrobeniusSolution {
    let mut out = sol.clone();
    out.expansion_point = match sol.expansion_point {
        ExpansionPoint::Zero => ExpansionPoint::One,
        ExpansionPoint::One => ExpansionPoint::Zero,
    };
    out
}

/// Value and three λ-derivatives of a series solution.
pub fn eval_jet(sol: &FrobeniusSolution, lambda: f64) -> Result<Jet3> {
    let t = match sol.expansion_point {
        ExpansionPoint::Zero => lambda,
        ExpansionPoint::One => 1.0 - lambda,
    };
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "lambda = {lambda} on or beyond the expansion point"
        )));
    }
    if t > TRUST_RADIUS + 1e-12 {
        return Err(Error::TrustRegion { lambda, distance: t, limit: TRUST_RADIUS });
    }
    let log_t = t.ln();
    let mut sums = [0.0f64; 4];
    let mut tn = 1.0;
    for (n, (&an, &ln)) in sol.a.iter().zip(&sol.l).enumerate() {
        let sigma = sol.rho + n as f64;
        let ff = falling(sigma);
        if an != 0.0 {
            for k in 0..4 {
                sums[k] += an * ff[k] * tn;
            }
        }
        if ln != 0.0 {
            // |log t| = −log t on (0, 1).
            let big_l = -ln;
            let dff = falling_deriv(sigma);
            for k in 0..4 {
                sums[k] += big_l * (ff[k] * log_t + dff[k]) * tn;
            }
        }
        tn *= t;
    }
    let t_rho = t.powf(sol.rho);
    let mut d = [0.0; 4];
    let mut sign = 1.0;
    for k in 0..4 {
        d[k] = sign * t_rho * t.powi(-(k as i32)) * sums[k];
        if sol.expansion_point == ExpansionPoint::One {
            sign = -sign;
        }
    }
    Ok(Jet3::from_array(d))
}

/// The basis (V₀, V_h, V_{3h+1}) at λ = 0 of the boundary ODE at κ.
///
/// When V₀ is resonant its free coefficient is chosen so that
/// V₀(λ) = V₀(1 − λ), which amounts to V₀'(1/2) = 0. The other solutions use
/// the zero convention of [`expand`].
pub fn boundary_basis(p: &KappaParams, order: usize) -> Result<[FrobeniusSolution; 3]> {
    let spec = make_boundary_ode(p);
    let roots = indicial_roots(&spec, ExpansionPoint::Zero)?;
    let mut out = Vec::with_capacity(3);
    for &rho in &roots {
        let mut sol = expand(&spec, rho, order)?;
        sol.kappa = Some(p.kappa);
        out.push(sol);
    }
    if let Some(m) = out[0].resonance {
        // V₀ + c·V_{ρ+m} only changes a[m] by c; pick c to kill V₀'(1/2).
        let partner = out
            .iter()
            .position(|s| (s.rho - (roots[0] + m as f64)).abs() < RESONANCE_TOL)
            .ok_or_else(|| Error::Unsupported("resonant partner missing".into()))?;
        let d0 = eval_jet(&out[0], 0.5)?.du;
        let d1 = eval_jet(&out[partner], 0.5)?.du;
        let c = -d0 / d1;
        let free = out[0].a[m] + c;
        let mut sol = expand_with_free(&spec, roots[0], order, free)?;
        sol.kappa = Some(p.kappa);
        out[0] = sol;
    }
    Ok(out.try_into().expect("three roots"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(kappa: f64) -> OdeSpec {
        make_boundary_ode(&KappaParams::new(kappa).unwrap())
    }

    #[test]
    fn roots_at_special_kappas() {
        let r = indicial_roots(&spec(6.0), ExpansionPoint::Zero).unwrap();
        assert_relative_eq!(r[0], 0.0, epsilon = 1e-13);
        assert_relative_eq!(r[1], 1.0 / 3.0, epsilon = 1e-13);
        assert_relative_eq!(r[2], 2.0, epsilon = 1e-13);
        let r = indicial_roots(&spec(16.0 / 3.0), ExpansionPoint::One).unwrap();
        assert_relative_eq!(r[1], 0.5, epsilon = 1e-13);
        assert_relative_eq!(r[2], 2.5, epsilon = 1e-13);
    }

    #[test]
    fn sixteen_thirds_v0_is_a_quadratic() {
        let s = expand(&spec(16.0 / 3.0), 0.0, 40).unwrap();
        assert_relative_eq!(s.a[1], -1.0, epsilon = 1e-14);
        assert_relative_eq!(s.a[2], 1.0, epsilon = 1e-14);
        assert!(s.a[3..].iter().all(|c| c.abs() < 1e-14));
        assert!(!s.has_log());
    }

    #[test]
    fn non_root_is_rejected() {
        assert!(matches!(expand(&spec(5.0), 0.1, 40), Err(Error::Domain(_))));
        assert!(expand(&spec(5.0), 0.0, 10).is_err());
    }

    #[test]
    fn trust_region_is_enforced() {
        let s = expand(&spec(5.0), 0.0, 40).unwrap();
        assert!(matches!(eval_jet(&s, 0.7), Err(Error::TrustRegion { .. })));
        assert!(eval_jet(&reflect(&s), 0.7).is_ok());
    }

    #[test]
    fn reflection_identity() {
        let s = expand(&spec(5.5), 0.0, 200).unwrap();
        let a = eval_jet(&s, 0.3).unwrap();
        let b = eval_jet(&reflect(&s), 0.7).unwrap();
        assert_relative_eq!(a.u, b.u, max_relative = 1e-15);
        assert_relative_eq!(a.du, -b.du, max_relative = 1e-15);
        assert_eq!(reflect(&reflect(&s)), s);
    }
}
