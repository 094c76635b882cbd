//! Connection between the Frobenius bases at λ = 0 and λ = 1, and the
//! constants it determines: β, C₁/C₂, A(κ) and the universal ratio R(λ).

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::frobenius::{
    boundary_basis, eval_jet, expand, reflect, FrobeniusSolution, DEFAULT_ORDER,
};
use crate::ode::{make_boundary_ode, Jet3, KappaParams};

/// Primary matching point.
pub const MATCH_POINT: f64 = 0.5;
/// Secondary matching point used as a consistency check.
pub const CHECK_POINT: f64 = 0.4;
const MAX_CONDITION: f64 = 1e10;
const MATCH_TOL: f64 = 1e-7;
const BETA_CONSISTENCY_TOL: f64 = 1e-8;

/// Basis change between the expansions at 0 and 1.
///
/// Column j of `matrix` holds the coordinates of V_j(1 − ·) in the basis
/// (V₀, V_h, V_{3h+1}) at 0.
#[derive(Debug, Clone)]
pub struct ConnectionResult {
    pub kappa: f64,
    pub matrix: Matrix3<f64>,
    pub beta: f64,
    pub c1_over_c2: f64,
    /// lim R(λ)/λ^{3h+1} as λ → 0, fixed by R(1) = 1.
    pub a: f64,
    /// 2-norm condition number of the matching system at λ = 1/2.
    pub condition_estimate: f64,
    /// Solutions at 0, ordered by exponent.
    pub basis: [FrobeniusSolution; 3],
}

fn wronskian_rows(sols: &[FrobeniusSolution; 3], lambda: f64) -> Result<Matrix3<f64>> {
    let mut w = Matrix3::zeros();
    for (j, s) in sols.iter().enumerate() {
        let jet = eval_jet(s, lambda)?;
        w[(0, j)] = jet.u;
        w[(1, j)] = jet.du;
        w[(2, j)] = jet.d2u;
    }
    Ok(w)
}

fn match_at(
    basis: &[FrobeniusSolution; 3],
    reflected: &[FrobeniusSolution; 3],
    lambda: f64,
) -> Result<(Matrix3<f64>, f64)> {
    let w = wronskian_rows(basis, lambda)?;
    let wr = wronskian_rows(reflected, lambda)?;
    let sv = w.singular_values();
    let smin = sv.min();
    let cond = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    let inv = w.try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))?;
    Ok((inv * wr, cond))
}

/// Matches the basis at 0 against its reflection at λ = 1/2 and derives the
/// identification constants. The match is repeated at λ = 0.4 and the two
/// matrices must agree.
pub fn connect_basis(p: &KappaParams, order: usize) -> Result<ConnectionResult> {
    connect_basis_at(p, order, MATCH_POINT, CHECK_POINT)
}

/// [`connect_basis`] with explicit primary and check points.
pub fn connect_basis_at(
    p: &KappaParams,
    order: usize,
    point: f64,
    check_point: f64,
) -> Result<ConnectionResult> {
    let basis = boundary_basis(p, order)?;
    connect_solutions(p.kappa, basis, point, check_point)
}

/// Connection for an arbitrary basis at 0 (e.g. one with a perturbed
/// coefficient).
pub fn connect_solutions(
    kappa: f64,
    basis: [FrobeniusSolution; 3],
    point: f64,
    check_point: f64,
) -> Result<ConnectionResult> {
    let reflected = [reflect(&basis[0]), reflect(&basis[1]), reflect(&basis[2])];
    let (m, cond) = match_at(&basis, &reflected, point)?;
    let (m2, _) = match_at(&basis, &reflected, check_point)?;
    let disagreement = (m - m2).abs().max() / m.abs().max().max(1.0);
    if disagreement > MATCH_TOL {
        return Err(Error::MatchingInconsistency(disagreement));
    }
    let beta = -m[(1, 0)] / m[(1, 2)];
    let value_at_zero = m[(0, 0)] + beta * m[(0, 2)];
    if (value_at_zero - 1.0).abs() > BETA_CONSISTENCY_TOL {
        return Err(Error::MatchingInconsistency((value_at_zero - 1.0).abs()));
    }
    let c1_over_c2 = 1.0 / m[(0, 2)];
    Ok(ConnectionResult {
        kappa,
        matrix: m,
        beta,
        c1_over_c2,
        a: value_at_zero / m[(0, 2)],
        condition_estimate: cond,
        basis,
    })
}

impl ConnectionResult {
    /// Jet of basis solution `i` (0: V₀, 1: V_h, 2: V_{3h+1}) anywhere in
    /// (0, 1), using whichever expansion point is nearer.
    pub fn solution_jet(&self, i: usize, lambda: f64) -> Result<Jet3> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Domain(format!("lambda = {lambda} outside (0, 1)")));
        }
        if lambda <= 0.5 {
            return eval_jet(&self.basis[i], lambda);
        }
        self.solution_jet_near_one(i, 1.0 - lambda)
    }

    /// Jet (in λ) of basis solution `i` at λ = 1 − t, taking t itself so
    /// that points very close to 1 keep full relative precision.
    pub fn solution_jet_near_one(&self, i: usize, t: f64) -> Result<Jet3> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!("1 - lambda = {t} outside (0, 1)")));
        }
        // V_i(λ) = Σ_j M[j, i] V_j(1 − λ) because M is an involution.
        let mut acc = Jet3::ZERO;
        for j in 0..3 {
            let refl = eval_jet(&self.basis[j], t)?.reflected();
            acc = acc + refl * self.matrix[(j, i)];
        }
        Ok(acc)
    }

    /// Jet of V₀ + βV_{3h+1}, the total four-point function up to a constant.
    pub fn total_jet(&self, lambda: f64) -> Result<Jet3> {
        Ok(self.solution_jet(0, lambda)? + self.solution_jet(2, lambda)? * self.beta)
    }

    /// The universal ratio C₁/C₂·V_{3h+1}/(V₀ + βV_{3h+1}).
    pub fn ratio(&self, lambda: f64) -> Result<f64> {
        let v3 = self.solution_jet(2, lambda)?.u;
        let total = self.total_jet(lambda)?.u;
        Ok(self.c1_over_c2 * v3 / total)
    }

    /// ‖M² − I‖_max
    pub fn involution_defect(&self) -> f64 {
        (self.matrix * self.matrix - Matrix3::identity()).abs().max()
    }
}

/// R(λ) = P^(14)(23)/P^total at κ.
pub fn universal_ratio(p: &KappaParams, lambda: f64) -> Result<f64> {
    connect_basis(p, DEFAULT_ORDER)?.ratio(lambda)
}

/// Coefficient of λ²|log λ| in the κ = 6 solution V₀.
pub fn c2h_constant() -> f64 {
    let p = KappaParams::new(6.0).expect("valid kappa");
    let sol = expand(&make_boundary_ode(&p), 0.0, 20).expect("regular expansion");
    sol.l[2]
}

/// 8√3π sin(2π/9) / (135 cos(5π/18)).
pub fn percolation_amplitude_formula() -> f64 {
    use std::f64::consts::PI;
    8.0 * 3f64.sqrt() * PI * (2.0 * PI / 9.0).sin() / (135.0 * (5.0 * PI / 18.0).cos())
}
