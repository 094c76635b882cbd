//! Exact solutions of the boundary ODE at special κ, the FK-Ising ratio
//! R_FK, the κ = 8/3 Brownian non-intersection formula, and the two-arc
//! partition function f with its τ² subleading decay.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::connection::{connect_basis, ConnectionResult};
use crate::error::{Error, Result};
use crate::frobenius::DEFAULT_ORDER;
use crate::ode::{Jet3, KappaParams};
use crate::special::{hyp2f1, hyp2f1_series_derivs, hyp3f2_derivs, integrate};

/// κ values with printed closed-form solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpecialKappa {
    K6,
    K16_3,
    K24_5,
    K8,
    K4,
    K8_3,
    K2,
}

/// Which solution of a special-κ family.
///
/// In (4, 8) the labels follow the Frobenius exponents 0, h, 3h + 1; at κ = 8
/// and κ ≤ 4 they index the printed basis U₀, U₁, U₂.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solution {
    V0,
    Vh,
    V3h1,
    U0,
    U1,
    U2,
}

impl SpecialKappa {
    pub const ALL: [SpecialKappa; 7] = [
        SpecialKappa::K6,
        SpecialKappa::K16_3,
        SpecialKappa::K24_5,
        SpecialKappa::K8,
        SpecialKappa::K4,
        SpecialKappa::K8_3,
        SpecialKappa::K2,
    ];

    pub fn kappa(self) -> f64 {
        match self {
            SpecialKappa::K6 => 6.0,
            SpecialKappa::K16_3 => 16.0 / 3.0,
            SpecialKappa::K24_5 => 24.0 / 5.0,
            SpecialKappa::K8 => 8.0,
            SpecialKappa::K4 => 4.0,
            SpecialKappa::K8_3 => 8.0 / 3.0,
            SpecialKappa::K2 => 2.0,
        }
    }

    pub fn params(self) -> KappaParams {
        KappaParams::new(self.kappa()).expect("special kappa in range")
    }

    /// Outside (4, 8) the ODE is only expected, not proven, to describe the
    /// model.
    pub fn conjectural(self) -> bool {
        matches!(self, SpecialKappa::K8 | SpecialKappa::K4 | SpecialKappa::K8_3 | SpecialKappa::K2)
    }

    /// Solutions with a printed formula.
    pub fn solutions(self) -> &'static [Solution] {
        use Solution::*;
        match self {
            SpecialKappa::K6 => &[V3h1],
            SpecialKappa::K16_3 => &[V0, V3h1],
            SpecialKappa::K24_5 => &[V0, Vh, V3h1],
            _ => &[U0, U1, U2],
        }
    }
}

fn unsupported(sk: SpecialKappa, which: Solution) -> Error {
    Error::Unsupported(format!("no printed formula for {which:?} at {sk:?}"))
}

/// Largest λ at which the κ = 6 small-λ representation F_S is served.
pub const FS_MAX_LAMBDA: f64 = 0.45;

/// F_S(λ) = (1−λ)²λ² ₃F₂(4/3, 3/2, 7/3; 8/3, 3; 4λ(1−λ)) with derivatives.
pub fn f_s_jet(lambda: f64) -> Result<Jet3> {
    if !(lambda > 0.0 && lambda <= FS_MAX_LAMBDA) {
        return Err(Error::Domain(format!("F_S served on (0, {FS_MAX_LAMBDA}], got {lambda}")));
    }
    let l = Jet3::var(lambda);
    let z = 4.0 * l * (1.0 - l);
    let f = z.compose(hyp3f2_derivs(4.0 / 3.0, 1.5, 7.0 / 3.0, 8.0 / 3.0, 3.0, z.u)?);
    let om = 1.0 - l;
    Ok(om * om * l * l * f)
}

fn poly_jet(coeffs: &[f64], l: Jet3) -> Jet3 {
    coeffs.iter().rev().fold(Jet3::ZERO, |acc, &c| acc * l + c)
}

fn k24_5_v0(l: Jet3) -> Jet3 {
    poly_jet(&[1.0, -4.0 / 3.0, 4.0 / 3.0], l)
}

fn k24_5_vh(l: Jet3) -> Jet3 {
    l.powf(2.0 / 3.0) * poly_jet(&[1.0, -1.0, 0.75], l)
}

fn k8_3_bracket(l: Jet3) -> Jet3 {
    let lm1 = l - 1.0;
    let quad = poly_jet(&[1.0, -1.0, 1.0], l);
    5.0 * l * l - 5.0 * l - 5.0 * (lm1 * lm1).recip() - 5.0 * lm1.recip()
        - 24.0 * (1.0 - l).ln()
        + 7.0 * (-l - 1.0) / quad
        + 7.0
}

fn k8_3_u0(l: Jet3) -> Jet3 {
    let om = 1.0 - l;
    l * l * om * om * (1.0 + l * l + om * om)
}

fn k8_3_u1(l: Jet3) -> Jet3 {
    k8_3_bracket(l) * k8_3_u0(l)
}

fn k2_u1(l: Jet3) -> Jet3 {
    l.powf(10.0) * poly_jet(&[6.0, -6.0, 1.0], l)
}

/// Value and derivatives of a printed special-κ solution at λ ∈ (0, 1).
pub fn v_exact_jet(sk: SpecialKappa, which: Solution, lambda: f64) -> Result<Jet3> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda = {lambda} outside (0, 1)")));
    }
    let l = Jet3::var(lambda);
    let r = Jet3::var(1.0 - lambda);
    use Solution::*;
    let jet = match (sk, which) {
        (SpecialKappa::K6, V3h1) => f_s_jet(lambda)?,
        (SpecialKappa::K16_3, V0) => poly_jet(&[1.0, -1.0, 1.0], l),
        (SpecialKappa::K16_3, V3h1) => fk_v52_jet(lambda)?,
        (SpecialKappa::K24_5, V0) => k24_5_v0(l),
        (SpecialKappa::K24_5, Vh) => k24_5_vh(l),
        (SpecialKappa::K24_5, V3h1) => k24_5_v0(l) - k24_5_vh(r).reflected() * (4.0 / 3.0),
        (SpecialKappa::K8, U0) => Jet3::constant(1.0),
        (SpecialKappa::K8, U1) => -(1.0 - l).ln(),
        (SpecialKappa::K8, U2) => -l.ln(),
        (SpecialKappa::K4, U0) => Jet3::constant(1.0),
        (SpecialKappa::K4, U1) => poly_jet(&[0.0, 1.0, -1.5, 1.0], l),
        (SpecialKappa::K4, U2) => l.powf(4.0),
        (SpecialKappa::K8_3, U0) => k8_3_u0(l),
        (SpecialKappa::K8_3, U1) => k8_3_u1(l),
        (SpecialKappa::K8_3, U2) => k8_3_u1(r).reflected(),
        (SpecialKappa::K2, U0) => poly_jet(&[1.0, -6.0, 6.0], l),
        (SpecialKappa::K2, U1) => k2_u1(l),
        (SpecialKappa::K2, U2) => k2_u1(r).reflected(),
        _ => return Err(unsupported(sk, which)),
    };
    Ok(jet)
}

/// Value of a printed special-κ solution.
pub fn v_exact(sk: SpecialKappa, which: Solution, lambda: f64) -> Result<f64> {
    Ok(v_exact_jet(sk, which, lambda)?.u)
}

/// The κ = 8/3 conjectural non-intersection probability of two pairs of
/// Brownian excursions.
pub fn brownian_p(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda = {lambda} outside (0, 1)")));
    }
    let l = lambda;
    let bracket = k8_3_bracket(Jet3::constant(l)).u;
    Ok(-(1.0 - l).powi(2) / (5.0 * l * l) * (l * l - l + 1.0) * bracket)
}

// ---------------------------------------------------------------------------
// FK-Ising (κ = 16/3)

fn fk_connection() -> &'static ConnectionResult {
    static CONN: OnceLock<ConnectionResult> = OnceLock::new();
    CONN.get_or_init(|| {
        let p = KappaParams::new(16.0 / 3.0).expect("valid kappa");
        connect_basis(&p, DEFAULT_ORDER).expect("kappa = 16/3 connection is well conditioned")
    })
}

/// Where [`g_fk`] switches from the hypergeometric form to the series route.
pub const G_FK_SPLIT: f64 = 0.5;

/// The density g of R_FK from its hypergeometric representation,
/// x^{3/2}(1−x)^{3/2}[(2−4x)F(3/2, 7/2; 3; x) + 3x(1−x)F(5/2, 9/2; 4; x)]
/// / (2(1−x+x²)²), with derivatives.
///
/// Uses raw Gauss series, so it is meant for x up to a little past 1/2.
pub fn g_fk_hypergeometric_jet(x: f64) -> Result<Jet3> {
    if !(x > 0.0 && x < 0.75) {
        return Err(Error::Domain(format!("hypergeometric g used at x = {x}")));
    }
    let l = Jet3::var(x);
    let om = 1.0 - l;
    let f1 = l.compose(hyp2f1_series_derivs(1.5, 3.5, 3.0, x)?);
    let f2 = l.compose(hyp2f1_series_derivs(2.5, 4.5, 4.0, x)?);
    let bracket = (2.0 - 4.0 * l) * f1 + 3.0 * l * om * f2;
    let denom = poly_jet(&[1.0, -1.0, 1.0], l);
    Ok(l.powf(1.5) * om.powf(1.5) * bracket / (2.0 * denom * denom))
}

/// g and its first two derivatives at x = 1 − t from the κ = 16/3 series
/// basis: g = (2/5)·(V_{5/2}/V₀)'.
pub fn g_fk_series(t: f64) -> Result<[f64; 3]> {
    let conn = fk_connection();
    let v3 = conn.solution_jet_near_one(2, t)?;
    let v0 = conn.solution_jet_near_one(0, t)?;
    let q = v3 / v0;
    Ok([0.4 * q.du, 0.4 * q.d2u, 0.4 * q.d3u])
}

/// g(x) on (0, 1), with g(x) = x^{3/2}(1 + O(x)) at 0 and ∫₀¹ g = 1/A_FK.
pub fn g_fk(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("x = {x} outside (0, 1)")));
    }
    if x <= G_FK_SPLIT {
        Ok(g_fk_hypergeometric_jet(x)?.u)
    } else {
        Ok(g_fk_series(1.0 - x)?[0])
    }
}

/// g, g', g'' on (0, 1).
pub fn g_fk_derivs(x: f64) -> Result<[f64; 3]> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("x = {x} outside (0, 1)")));
    }
    if x <= G_FK_SPLIT {
        let j = g_fk_hypergeometric_jet(x)?;
        Ok([j.u, j.du, j.d2u])
    } else {
        g_fk_series(1.0 - x)
    }
}

const FK_TOL: f64 = 1e-10;

/// Integrates a fallible integrand, surfacing the first evaluation error.
fn integrate_fallible(
    f: impl Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    let mut first_err: Option<Error> = None;
    let r = integrate(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                first_err.get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        tol,
    );
    if let Some(e) = first_err {
        return Err(e);
    }
    Ok(r?.value)
}

/// ∫_{1−ε}^{1} g, computed with x = 1 − s² to remove the (1−x)^{−1/2}
/// endpoint behaviour.
pub fn fk_tail_integral(eps: f64, tol: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0 - G_FK_SPLIT) {
        return Err(Error::Domain(format!("tail length {eps} outside (0, 1/2]")));
    }
    integrate_fallible(|s| Ok(2.0 * s * g_fk_series(s * s)?[0]), 0.0, eps.sqrt(), tol)
}

fn fk_head_integral() -> Result<f64> {
    static HEAD: OnceLock<Result<f64>> = OnceLock::new();
    HEAD.get_or_init(|| integrate_fallible(g_fk, 0.0, G_FK_SPLIT, FK_TOL * 0.1))
        .clone()
}

/// ∫₀¹ g.
pub fn fk_total_integral() -> Result<f64> {
    static TOTAL: OnceLock<Result<f64>> = OnceLock::new();
    TOTAL
        .get_or_init(|| Ok(fk_head_integral()? + fk_tail_integral(1.0 - G_FK_SPLIT, FK_TOL * 0.1)?))
        .clone()
}

/// A_FK = (∫₀¹ g)⁻¹.
pub fn a_fk() -> Result<f64> {
    Ok(1.0 / fk_total_integral()?)
}

/// R_FK(λ) = A_FK ∫₀^λ g.
pub fn r_fk(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda = {lambda} outside (0, 1)")));
    }
    let integral = if lambda <= G_FK_SPLIT {
        integrate_fallible(g_fk, 0.0, lambda, FK_TOL)?
    } else {
        // ∫_{1/2}^{λ} with x = 1 − s².
        let mid = integrate_fallible(
            |s| Ok(2.0 * s * g_fk_series(s * s)?[0]),
            (1.0 - lambda).sqrt(),
            (1.0 - G_FK_SPLIT).sqrt(),
            FK_TOL,
        )?;
        fk_head_integral()? + mid
    };
    Ok(a_fk()? * integral)
}

/// V_{5/2} = V₀(λ)∫₀^λ g with V₀ = 1 − λ + λ², with derivatives.
fn fk_v52_jet(lambda: f64) -> Result<Jet3> {
    let l = Jet3::var(lambda);
    let v0 = poly_jet(&[1.0, -1.0, 1.0], l);
    let integral = r_fk(lambda)? / a_fk()?;
    let [g, g1, g2] = g_fk_derivs(lambda)?;
    let i = Jet3::new(integral, g, g1, g2);
    Ok(v0 * i)
}

// ---------------------------------------------------------------------------
// Two-arc partition function

/// f(x) = x^{2/κ}(1−x)^{1−6/κ} F(4/κ, 1−4/κ; 8/κ; x) / F(4/κ, 1−4/κ; 8/κ; 1).
pub fn f_partition(p: &KappaParams, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("x = {x} outside (0, 1)")));
    }
    let k = p.kappa;
    let (a, b, c) = (4.0 / k, 1.0 - 4.0 / k, 8.0 / k);
    let norm = hyp2f1(a, b, c, 1.0)?;
    Ok(x.powf(2.0 / k) * (1.0 - x).powf(1.0 - 6.0 / k) * hyp2f1(a, b, c, x)? / norm)
}

/// Z(τ) = f(1−τ) + f(τ)/(−2cos(4π/κ)).
pub fn z_tau(p: &KappaParams, tau: f64) -> Result<f64> {
    if !(p.kappa > 4.0 && p.kappa < 8.0) {
        return Err(Error::Domain(format!("kappa = {} outside (4, 8)", p.kappa)));
    }
    let weight = 1.0 / (-2.0 * (4.0 * PI / p.kappa).cos());
    Ok(f_partition(p, 1.0 - tau)? + weight * f_partition(p, tau)?)
}

/// Deviations |τ^{2b}Z(τ) − 1| below this are treated as exact zeros.
pub const Z_EXACT_TOL: f64 = 1e-12;

/// How τ^{2b}Z(τ) approaches 1 on a τ grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZDecay {
    /// Least-squares slope of log|τ^{2b}Z − 1| against log τ; `None` when
    /// the deviation vanishes identically on the grid (κ = 6, where
    /// f(τ) + f(1 − τ) = 1).
    pub slope: Option<f64>,
    pub max_deviation: f64,
}

/// Fits the decay exponent of τ^{2b}Z(τ) − 1.
pub fn z_check(p: &KappaParams, taus: &[f64]) -> Result<ZDecay> {
    if taus.len() < 2 {
        return Err(Error::Domain("need at least two tau values".into()));
    }
    let mut devs = Vec::with_capacity(taus.len());
    for &t in taus {
        devs.push((t.powf(2.0 * p.b) * z_tau(p, t)? - 1.0).abs());
    }
    let max_deviation = devs.iter().fold(0.0f64, |m, &d| m.max(d));
    if max_deviation <= Z_EXACT_TOL {
        return Ok(ZDecay { slope: None, max_deviation });
    }
    let xs: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = devs.iter().map(|d| d.ln()).collect();
    Ok(ZDecay { slope: Some(fit_slope(&xs, &ys)), max_deviation })
}

/// 1 − R_FK(1 − ε), computed from the tail integral without cancellation.
pub fn fk_one_minus_r(eps: f64) -> Result<f64> {
    Ok(a_fk()? * fk_tail_integral(eps, FK_TOL * 0.1)?)
}

/// Coefficients of 1 − R_FK(1 − ε) = A_FK√ε(c₀ + c₁ε + ε²(c_L|log ε| + c_c)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkTailFit {
    pub c0: f64,
    pub c1: f64,
    pub c_log: f64,
    pub c_const: f64,
}

/// Least-squares fit of the ε → 0 expansion of 1 − R_FK(1 − ε).
pub fn fk_tail_fit(eps: &[f64]) -> Result<FkTailFit> {
    if eps.len() < 4 {
        return Err(Error::Domain("need at least four epsilon values".into()));
    }
    let a = a_fk()?;
    let n = eps.len();
    let mut design = DMatrix::zeros(n, 4);
    let mut rhs = DVector::zeros(n);
    for (i, &e) in eps.iter().enumerate() {
        rhs[i] = fk_one_minus_r(e)? / (a * e.sqrt());
        design[(i, 0)] = 1.0;
        design[(i, 1)] = e;
        design[(i, 2)] = e * e * e.ln().abs();
        design[(i, 3)] = e * e;
    }
    let c = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Domain(e.to_string()))?;
    Ok(FkTailFit { c0: c[0], c1: c[1], c_log: c[2], c_const: c[3] })
}

/// Ordinary least-squares slope.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
