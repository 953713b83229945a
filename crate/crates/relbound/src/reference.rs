//! Independent reference results: the Dirac-Coulomb closed form, the
//! one-constituent (infinitely heavy partner) limit of the coupled
//! equations, and free kinetic-energy expansions.

use std::sync::Arc;

use ndarray::Array2;

use crate::angular::channel_weights;
use crate::kernel::{build_kernel, lande_subtraction, MomentumGrid};
use crate::solver::{
    bound_eigenvalues, normalize, select_state, solve_bound_states, DiscretizedOperator, NormConvention,
    QuantumState, RadialSolution,
};
use crate::{Error, Result};

/// Closed-form Dirac-Coulomb binding energy (rest energy subtracted)
/// for principal quantum number `n` and total angular momentum
/// `j = twice_j / 2`, in the units of `mass`.
pub fn dirac_coulomb_energy(n: u32, twice_j: i32, mass: f64, alpha: f64) -> Result<f64> {
    if twice_j <= 0 || twice_j % 2 == 0 {
        return Err(Error::Domain(format!("twice_j = {twice_j} must be odd and positive")));
    }
    let jph = (twice_j as f64 + 1.0) / 2.0; // j + 1/2
    if (jph as u32) > n {
        return Err(Error::Domain(format!("j + 1/2 = {jph} exceeds n = {n}")));
    }
    if alpha >= jph {
        return Err(Error::Domain(format!("supercritical coupling: alpha = {alpha} >= j + 1/2 = {jph}")));
    }
    if mass <= 0.0 {
        return Err(Error::Domain(format!("mass must be positive: {mass}")));
    }
    let gamma = (jph * jph - alpha * alpha).sqrt();
    let denom = n as f64 - jph + gamma;
    let x = alpha / denom;
    Ok(mass * ((1.0 + x * x).powf(-0.5) - 1.0))
}

/// The coupled equations in the limit of an infinitely heavy second
/// constituent: a momentum-space Dirac-Coulomb operator for a particle
/// of the given `mass` (any unit; eigenvalues come out in the same
/// unit). Channel content is still labelled by `(F, L, S)`.
pub fn dirac_limit_operator(
    mass: f64,
    state: &QuantumState,
    alpha: f64,
    grid: &Arc<MomentumGrid>,
) -> Result<DiscretizedOperator> {
    if mass <= 0.0 {
        return Err(Error::Domain(format!("mass must be positive: {mass}")));
    }
    let n = grid.len();
    let p = grid.nodes();
    let weights = channel_weights(state.f, state.m_f, state.l, state.s)?;
    let c_int = alpha / std::f64::consts::PI.powi(3);
    let measure = |pp: f64| pp * pp;

    let k_g = lande_subtraction(&build_kernel(state.l, grid)?, grid, measure)?;
    let mut a = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        a[(i, n + i)] = -p[i];
        a[(n + i, i)] = -p[i];
        a[(n + i, n + i)] = -2.0 * mass;
        for j in 0..n {
            a[(i, j)] += c_int * k_g.off_diag[(i, j)];
        }
        a[(i, i)] += c_int * k_g.diag[i];
    }
    for (lp, w) in &weights.h_big {
        let k = lande_subtraction(&build_kernel(*lp, grid)?, grid, measure)?;
        for i in 0..n {
            for j in 0..n {
                a[(n + i, n + j)] += c_int * w * k.off_diag[(i, j)];
            }
            a[(n + i, n + i)] += c_int * w * k.diag[i];
        }
    }
    Ok(DiscretizedOperator { matrix: a, state: *state, xi: mass, alpha, grid: grid.clone() })
}

/// Energy window for the Dirac-limit operator in the units of `mass`.
pub fn dirac_window(mass: f64) -> (f64, f64) {
    (-0.5 * mass, 0.0)
}

/// Bound eigenvalue `n` (by node index) of the Dirac-limit operator.
pub fn dirac_limit_energy(mass: f64, state: &QuantumState, alpha: f64, grid: &Arc<MomentumGrid>) -> Result<f64> {
    let op = dirac_limit_operator(mass, state, alpha, grid)?;
    let eigenvalues = bound_eigenvalues(&op, dirac_window(mass))?;
    eigenvalues
        .get(state.radial_nodes())
        .copied()
        .ok_or_else(|| Error::NotFound(format!("only {} Dirac-limit bound levels resolved", eigenvalues.len())))
}

/// Solved and L2-normalized Dirac-limit radial wave function, for
/// shape comparisons against the two-body solution.
pub fn dirac_reference_wavefunction(
    mass: f64,
    state: &QuantumState,
    alpha: f64,
    grid: &Arc<MomentumGrid>,
) -> Result<RadialSolution> {
    let op = dirac_limit_operator(mass, state, alpha, grid)?;
    let sols = solve_bound_states(&op, dirac_window(mass))?;
    let sol = select_state(&sols, state.n, state.l)?;
    normalize(&sol, NormConvention::DiscreteL2)
}

/// Exact free two-body kinetic energy at relative momentum `p`.
pub fn kinetic_eigenvalue_exact(p: f64, m1: f64, m2: f64) -> f64 {
    let e1 = (p * p + m1 * m1).sqrt();
    let e2 = (p * p + m2 * m2).sqrt();
    // written as p^2 / (E + m) to avoid cancellation at small p
    p * p / (e1 + m1) + p * p / (e2 + m2)
}

/// Single relativistic particle of the reduced mass.
pub fn kinetic_eigenvalue_reduced(p: f64, mu: f64) -> f64 {
    let e = (p * p + mu * mu).sqrt();
    p * p / (e + mu)
}

/// Coefficient of `p^4` in the small-`p` expansion of the exact
/// two-body kinetic energy.
pub fn kinetic_p4_coefficient_exact(m1: f64, m2: f64) -> f64 {
    -(m1.powi(3) + m2.powi(3)) / (8.0 * m1.powi(3) * m2.powi(3))
}

/// Coefficient of `p^4` for the reduced-mass single particle.
pub fn kinetic_p4_coefficient_reduced(mu: f64) -> f64 {
    -1.0 / (8.0 * mu.powi(3))
}
