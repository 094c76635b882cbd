//! Parameters, the two third-order ODEs as polynomial data, truncated Taylor
//! jets, residuals, and the finite-difference check of the fused PDE.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// κ values whose Frobenius recurrences are resonant in (4, 8). A κ supplied
/// within `SNAP_TOL` of one of them is replaced by the exact value.
pub const RESONANT_KAPPAS: [f64; 3] = [6.0, 16.0 / 3.0, 24.0 / 5.0];
const SNAP_TOL: f64 = 1e-12;

/// The parameter bundle derived from κ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaParams {
    pub kappa: f64,
    /// Boundary exponent 8/κ − 1.
    pub h: f64,
    /// (6 − κ)/(2κ).
    pub b: f64,
    /// Bulk exponent (3κ − 8)(8 − κ)/(32κ).
    pub alpha: f64,
}

impl KappaParams {
    /// Builds the bundle for κ ∈ (0, 8], snapping near-resonant κ.
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 8.0) {
            return Err(Error::Domain(format!("kappa = {kappa} outside (0, 8]")));
        }
        let kappa = RESONANT_KAPPAS
            .iter()
            .copied()
            .find(|k| (k - kappa).abs() <= SNAP_TOL)
            .unwrap_or(kappa);
        Ok(Self {
            kappa,
            h: 8.0 / kappa - 1.0,
            b: (6.0 - kappa) / (2.0 * kappa),
            alpha: (3.0 * kappa - 8.0) * (8.0 - kappa) / (32.0 * kappa),
        })
    }

    /// κ ≤ 4, where the boundary ODE has no proven probabilistic meaning.
    pub fn conjectural(&self) -> bool {
        self.kappa <= 4.0
    }
}

/// Dense real polynomial, coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// λ
    pub fn x() -> Self {
        Poly(vec![0.0, 1.0])
    }

    /// a + bλ
    pub fn linear(a: f64, b: f64) -> Self {
        Poly(vec![a, b])
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    /// Lowest power with a nonzero coefficient.
    pub fn order(&self) -> Option<usize> {
        self.0.iter().position(|&c| c != 0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    /// p(1 − λ)
    pub fn reflect(&self) -> Self {
        let one_minus = Poly::linear(1.0, -1.0);
        let mut out = Poly::constant(0.0);
        for &c in self.0.iter().rev() {
            out = &(&out * &one_minus) + &Poly::constant(c);
        }
        out
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        Poly((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.0.is_empty() || rhs.0.is_empty() {
            return Poly::default();
        }
        let mut out = vec![0.0; self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }
}

fn product(factors: &[Poly]) -> Poly {
    factors.iter().fold(Poly::constant(1.0), |acc, f| &acc * f)
}

/// A linear third-order ODE Σₖ pₖ(λ) U⁽ᵏ⁾ = 0 with polynomial coefficients.
///
/// `coeffs[k]` multiplies the k-th derivative, so `coeffs[3]` is the leading
/// coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSpec {
    pub coeffs: [Poly; 4],
}

impl OdeSpec {
    pub fn degree(&self) -> usize {
        3
    }

    /// The equation satisfied by U(1 − λ) when U solves `self`.
    pub fn reflect(&self) -> OdeSpec {
        let mut coeffs = self.coeffs.clone();
        for (k, c) in coeffs.iter_mut().enumerate() {
            let r = c.reflect();
            *c = if k % 2 == 1 { r.scale(-1.0) } else { r };
        }
        OdeSpec { coeffs }
    }

    /// Individual terms pₖ(λ)·U⁽ᵏ⁾(λ), lowest order first.
    pub fn terms(&self, jet: &Jet3, lambda: f64) -> [f64; 4] {
        let d = jet.as_array();
        std::array::from_fn(|k| self.coeffs[k].eval(lambda) * d[k])
    }
}

/// The boundary four-point ODE.
pub fn make_boundary_ode(p: &KappaParams) -> OdeSpec {
    let k = p.kappa;
    let lam = Poly::x();
    let one_minus = Poly::linear(1.0, -1.0);
    let p3 = product(&[lam.clone(), lam.clone(), one_minus.clone(), one_minus.clone()])
        .scale(0.5 * k * k * k);
    let p2 = product(&[lam.clone(), one_minus.clone(), Poly::linear(1.0, -2.0)])
        .scale(k * k * (3.0 * k - 16.0));
    let quad = &lam * &Poly::linear(-1.0, 1.0);
    let p1 = (&Poly::constant(3.0 * (k - 4.0) * (k - 8.0))
        + &quad.scale(18.0 * k * k - 212.0 * k + 608.0))
        .scale(k);
    let p0 = Poly::linear(-1.0, 2.0).scale(6.0 * (k - 4.0) * (k - 8.0) * (k - 8.0));
    OdeSpec { coeffs: [p0, p1, p2, p3] }
}

/// The ODE for the one-bulk/two-boundary function in the real reading of the
/// cross-ratio, with bulk weight `alpha` (use `p.alpha` for the physical one).
pub fn make_bulk_ode(p: &KappaParams, alpha: f64) -> OdeSpec {
    let k = p.kappa;
    let lam = Poly::x();
    let om = Poly::linear(1.0, -1.0);
    let p3 = product(&[lam.clone(), lam.clone(), om.clone(), om.clone(), om.clone()]).scale(k * k);
    let p2 = product(&[
        lam.clone(),
        om.clone(),
        om.clone(),
        Poly::linear(-(3.0 * k - 16.0), 3.0 * k - 8.0),
    ])
    .scale(-2.0 * k);
    let inner = Poly(vec![
        6.0 * (k - 4.0) * (k - 8.0),
        -4.0 * (k - 6.0) * (3.0 * k - 8.0),
        -8.0 * alpha * k + 6.0 * k * k - 40.0 * k + 64.0,
    ]);
    let p1 = &om * &inner;
    let p0 = (&lam * &Poly::linear(2.0, -1.0)).scale(8.0 * alpha * (8.0 - k));
    OdeSpec { coeffs: [p0, p1, p2, p3] }
}

/// Value and first three derivatives of a function at one point.
///
/// The arithmetic operators propagate all four entries exactly (truncated
/// Taylor arithmetic), so closed-form expressions built from jets yield exact
/// derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet3 {
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
    pub d3u: f64,
}

impl Jet3 {
    pub const ZERO: Jet3 = Jet3 { u: 0.0, du: 0.0, d2u: 0.0, d3u: 0.0 };

    pub fn new(u: f64, du: f64, d2u: f64, d3u: f64) -> Self {
        Self { u, du, d2u, d3u }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(c, 0.0, 0.0, 0.0)
    }

    /// The identity function at x.
    pub fn var(x: f64) -> Self {
        Self::new(x, 1.0, 0.0, 0.0)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.u, self.du, self.d2u, self.d3u]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    /// φ∘self, given φ and its first three derivatives at `self.u`.
    pub fn compose(&self, phi: [f64; 4]) -> Self {
        let (f1, f2, f3) = (self.du, self.d2u, self.d3u);
        Self::new(
            phi[0],
            phi[1] * f1,
            phi[2] * f1 * f1 + phi[1] * f2,
            phi[3] * f1 * f1 * f1 + 3.0 * phi[2] * f1 * f2 + phi[1] * f3,
        )
    }

    pub fn powf(&self, p: f64) -> Self {
        let x = self.u;
        self.compose([
            x.powf(p),
            p * x.powf(p - 1.0),
            p * (p - 1.0) * x.powf(p - 2.0),
            p * (p - 1.0) * (p - 2.0) * x.powf(p - 3.0),
        ])
    }

    pub fn ln(&self) -> Self {
        let x = self.u;
        self.compose([x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)])
    }

    pub fn exp(&self) -> Self {
        let e = self.u.exp();
        self.compose([e, e, e, e])
    }

    pub fn recip(&self) -> Self {
        let x = self.u;
        let r = 1.0 / x;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    /// The jet of λ ↦ f(1 − λ), given the jet of f at 1 − λ.
    pub fn reflected(&self) -> Self {
        Self::new(self.u, -self.du, self.d2u, -self.d3u)
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(self, r: Jet3) -> Jet3 {
        Jet3::new(self.u + r.u, self.du + r.du, self.d2u + r.d2u, self.d3u + r.d3u)
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, r: Jet3) -> Jet3 {
        Jet3::new(self.u - r.u, self.du - r.du, self.d2u - r.d2u, self.d3u - r.d3u)
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        Jet3::new(-self.u, -self.du, -self.d2u, -self.d3u)
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, g: Jet3) -> Jet3 {
        let f = self;
        Jet3::new(
            f.u * g.u,
            f.du * g.u + f.u * g.du,
            f.d2u * g.u + 2.0 * f.du * g.du + f.u * g.d2u,
            f.d3u * g.u + 3.0 * f.d2u * g.du + 3.0 * f.du * g.d2u + f.u * g.d3u,
        )
    }
}

impl Div for Jet3 {
    type Output = Jet3;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, g: Jet3) -> Jet3 {
        self * g.recip()
    }
}

impl Add<f64> for Jet3 {
    type Output = Jet3;
    fn add(self, c: f64) -> Jet3 {
        Jet3 { u: self.u + c, ..self }
    }
}

impl Sub<f64> for Jet3 {
    type Output = Jet3;
    fn sub(self, c: f64) -> Jet3 {
        Jet3 { u: self.u - c, ..self }
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(self, c: f64) -> Jet3 {
        Jet3::new(self.u * c, self.du * c, self.d2u * c, self.d3u * c)
    }
}

impl Mul<Jet3> for f64 {
    type Output = Jet3;
    fn mul(self, j: Jet3) -> Jet3 {
        j * self
    }
}

impl Add<Jet3> for f64 {
    type Output = Jet3;
    fn add(self, j: Jet3) -> Jet3 {
        j + self
    }
}

impl Sub<Jet3> for f64 {
    type Output = Jet3;
    fn sub(self, j: Jet3) -> Jet3 {
        -j + self
    }
}

/// p₃·U''' + p₂·U'' + p₁·U' + p₀·U at λ.
pub fn residual(spec: &OdeSpec, jet: &Jet3, lambda: f64) -> f64 {
    spec.terms(jet, lambda).iter().sum()
}

/// Terms smaller than this multiple of the natural scale are roundoff.
const ROUNDOFF_TERMS: f64 = 64.0 * f64::EPSILON;

/// |residual| divided by the largest of the four terms; 0 for the zero jet.
///
/// Where every term vanishes analytically (λ = 1/2 for a symmetric solution
/// of the boundary equation) the largest term is itself roundoff. There the
/// divisor is the natural scale max_k|p_k(λ)|·max_j|U⁽ʲ⁾(λ)| instead.
pub fn normalized_residual(spec: &OdeSpec, jet: &Jet3, lambda: f64) -> f64 {
    let terms = spec.terms(jet, lambda);
    let sum = terms.iter().sum::<f64>().abs();
    let largest = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let coeff = spec.coeffs.iter().fold(0.0f64, |m, c| m.max(c.eval(lambda).abs()));
    let derivs = jet.as_array().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let natural = coeff * derivs;
    let scale = if largest <= ROUNDOFF_TERMS * natural { natural } else { largest };
    if scale == 0.0 {
        0.0
    } else {
        sum / scale
    }
}

/// Cross-ratio (x₂−x₁)(x₄−x₃)/((x₄−x₂)(x₃−x₁)) of four increasing real
/// points. `x4` may be `+∞`, giving (x₂−x₁)/(x₃−x₁).
pub fn cross_ratio(x1: f64, x2: f64, x3: f64, x4: f64) -> Result<f64> {
    check_increasing(&[x1, x2, x3, x4])?;
    if x4 == f64::INFINITY {
        return Ok((x2 - x1) / (x3 - x1));
    }
    Ok((x2 - x1) * (x4 - x3) / ((x4 - x2) * (x3 - x1)))
}

/// The covariance factor ((x₄−x₂)(x₃−x₁)/((x₂−x₁)(x₄−x₃)(x₃−x₂)(x₄−x₁)))^{2h}
/// multiplying U(λ) in the four-point Green's function.
pub fn green_prefactor(x1: f64, x2: f64, x3: f64, x4: f64, h: f64) -> Result<f64> {
    check_increasing(&[x1, x2, x3, x4])?;
    if !x4.is_finite() {
        return Err(Error::Domain("prefactor needs finite points".into()));
    }
    let q = (x4 - x2) * (x3 - x1) / ((x2 - x1) * (x4 - x3) * (x3 - x2) * (x4 - x1));
    Ok(q.powf(2.0 * h))
}

fn check_increasing(xs: &[f64]) -> Result<()> {
    if xs.iter().any(|x| x.is_nan()) || xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::OrderViolation(format!("{xs:?} is not strictly increasing")));
    }
    if !xs[..xs.len() - 1].iter().all(|x| x.is_finite()) {
        return Err(Error::OrderViolation("only the last point may be infinite".into()));
    }
    Ok(())
}

/// Finite-difference step as a fraction of the smallest gap between marked
/// points. Third derivatives by 5-point stencils lose about ε/s³ to rounding,
/// so the step cannot be much smaller than this at double precision.
pub const FUSION_STEP_FRACTION: f64 = 1e-3;

/// Residual of the fused third-order PDE for
/// g₀(u, x₁, x₂, x₃) = (1−λ)^{−2h} U(λ) / ((x₁−u)(x₃−x₂))^{2h},
/// λ = (x₁−u)(x₃−x₂)/((x₃−x₁)(x₂−u)), normalized by the largest term.
///
/// Every partial derivative is taken by central differences.
pub fn fusion_pde_residual(
    u_fn: impl Fn(f64) -> Result<Jet3>,
    p: &KappaParams,
    u: f64,
    x1: f64,
    x2: f64,
    x3: f64,
) -> Result<f64> {
    fusion_pde_residual_with_step(u_fn, p, u, x1, x2, x3, FUSION_STEP_FRACTION)
}

/// [`fusion_pde_residual`] with an explicit step fraction.
pub fn fusion_pde_residual_with_step(
    u_fn: impl Fn(f64) -> Result<Jet3>,
    p: &KappaParams,
    u: f64,
    x1: f64,
    x2: f64,
    x3: f64,
    step_fraction: f64,
) -> Result<f64> {
    check_increasing(&[u, x1, x2, x3])?;
    if !x3.is_finite() {
        return Err(Error::OrderViolation("points must be finite".into()));
    }
    let lambda = (x1 - u) * (x3 - x2) / ((x3 - x1) * (x2 - u));
    if !(lambda > 0.05 && lambda < 0.95) {
        return Err(Error::Domain(format!("cross-ratio {lambda} outside (0.05, 0.95)")));
    }
    let min_gap = [x1 - u, x2 - x1, x3 - x2].into_iter().fold(f64::INFINITY, f64::min);
    let scale = [u, x1, x2, x3].iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let resolution = 1e-6 * scale;
    let s = (step_fraction * min_gap).max(resolution);
    if min_gap < 100.0 * s {
        return Err(Error::StepDegeneracy(format!(
            "gap {min_gap:e} below 100 steps of {s:e}"
        )));
    }
    let h = p.h;
    let g = |v: [f64; 4]| -> Result<f64> {
        let [u, x1, x2, x3] = v;
        let lam = (x1 - u) * (x3 - x2) / ((x3 - x1) * (x2 - u));
        let val = u_fn(lam)?.u;
        Ok((1.0 - lam).powf(-2.0 * h) * val / ((x1 - u) * (x3 - x2)).powf(2.0 * h))
    };
    let base = [u, x1, x2, x3];
    let shifted = |i: usize, di: f64, j: usize, dj: f64| {
        let mut v = base;
        v[i] += di;
        v[j] += dj;
        v
    };
    let g0 = g(base)?;
    // First derivative, 5-point.
    let d1 = |i: usize| -> Result<f64> {
        Ok((-g(shifted(i, 2.0 * s, i, 0.0))? + 8.0 * g(shifted(i, s, i, 0.0))?
            - 8.0 * g(shifted(i, -s, i, 0.0))?
            + g(shifted(i, -2.0 * s, i, 0.0))?)
            / (12.0 * s))
    };
    // Third derivative, 5-point.
    let g_uuu = (g(shifted(0, 2.0 * s, 0, 0.0))? - 2.0 * g(shifted(0, s, 0, 0.0))?
        + 2.0 * g(shifted(0, -s, 0, 0.0))?
        - g(shifted(0, -2.0 * s, 0, 0.0))?)
        / (2.0 * s * s * s);
    // Mixed derivative ∂u∂xᵢ from the 4-point cross stencil.
    let mixed = |i: usize| -> Result<f64> {
        Ok((g(shifted(0, s, i, s))? - g(shifted(0, s, i, -s))? - g(shifted(0, -s, i, s))?
            + g(shifted(0, -s, i, -s))?)
            / (4.0 * s * s))
    };
    let g_u = d1(0)?;
    let coef = 0.5 * (1.0 - 8.0 / p.kappa);
    let mut terms = vec![0.25 * p.kappa * g_uuu];
    for i in 1..4 {
        let d = base[i] - u;
        terms.push(coef * 4.0 * d1(i)? / (d * d));
        terms.push(-coef * 8.0 * h * g0 / (d * d * d));
        terms.push(4.0 * mixed(i)? / d);
        terms.push(-4.0 * h * g_u / (d * d));
    }
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(terms.iter().sum::<f64>().abs() / scale)
}
