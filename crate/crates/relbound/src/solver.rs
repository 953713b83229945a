//! Assembly of the coupled radial integral equations into a dense
//! `2N x 2N` eigenproblem, bound-state selection, normalization, and
//! the convergence/symmetry diagnostics.
//!
//! Everything internal is dimensionless in units of `m1`; energies are
//! converted to eV only at the reporting boundary.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigVals, Solve};
use num_complex::Complex64;

use crate::angular::{channel_weights, sigma_dot_unit, spin_angle_value};
use crate::kernel::{build_grid, build_kernel, lande_subtraction, Mapping, MomentumGrid, SubtractedKernel};
use crate::quad;
use crate::{Error, Result};

/// Two constituents bound by a Coulomb coupling `alpha`. Masses in MeV.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TwoBodySystem {
    m1: f64,
    m2: f64,
    alpha: f64,
    pub label: String,
}

impl TwoBodySystem {
    pub fn new(m1: f64, m2: f64, alpha: f64, label: impl Into<String>) -> Result<Self> {
        if !(m1 > 0.0) || !(m2 > 0.0) {
            return Err(Error::Config(format!("masses must be positive: m1={m1}, m2={m2}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("coupling must satisfy 0 < alpha < 1: {alpha}")));
        }
        Ok(Self { m1, m2, alpha, label: label.into() })
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Mass ratio `xi = m2 / m1`.
    pub fn xi(&self) -> f64 {
        self.m2 / self.m1
    }

    /// Reduced mass in MeV.
    pub fn reduced_mass(&self) -> f64 {
        self.m1 * self.m2 / (self.m1 + self.m2)
    }

    /// Conversion factor from `m1` units to eV.
    pub fn ev_per_m1(&self) -> f64 {
        self.m1 * 1e6
    }

    /// The same system with the constituents interchanged.
    pub fn swapped(&self) -> Self {
        Self {
            m1: self.m2,
            m2: self.m1,
            alpha: self.alpha,
            label: format!("{} (masses interchanged)", self.label),
        }
    }

    /// Default grid mapping scale: the Bohr momentum `alpha * mu` in
    /// `m1` units, where the bound-state wave functions live.
    pub fn bohr_momentum(&self) -> f64 {
        self.alpha * self.reduced_mass() / self.m1
    }
}

/// Quantum numbers in the `n L_S^F` scheme: orbital `L` couples to the
/// combined constituent spin `S` to give the exact total `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct QuantumState {
    pub n: u32,
    pub f: i32,
    pub l: i32,
    pub s: i32,
    pub m_f: i32,
}

impl QuantumState {
    pub fn new(n: u32, f: i32, l: i32, s: i32, m_f: i32) -> Result<Self> {
        if !(s == 0 || s == 1) {
            return Err(Error::Domain(format!("S = {s} not in {{0, 1}}")));
        }
        if l < 0 || f < (l - s).abs() || f > l + s {
            return Err(Error::Domain(format!("triangle rule violated for (F={f}, L={l}, S={s})")));
        }
        if m_f.abs() > f {
            return Err(Error::Domain(format!("|mF| = {} > F = {f}", m_f.abs())));
        }
        if n < l as u32 + 1 {
            return Err(Error::Domain(format!("n = {n} must be at least L + 1 = {}", l + 1)));
        }
        Ok(Self { n, f, l, s, m_f })
    }

    /// Number of radial nodes of the upper component.
    pub fn radial_nodes(&self) -> usize {
        (self.n as i32 - self.l - 1) as usize
    }
}

/// The discretized `2N x 2N` radial operator: `[gg, gh; hg, hh]` with
/// diagonal coupling blocks.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub matrix: Array2<f64>,
    pub state: QuantumState,
    pub xi: f64,
    pub alpha: f64,
    pub grid: Arc<MomentumGrid>,
}

/// A solved and selected bound state on the grid.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    /// Binding energy in units of `m1`, negative.
    pub epsilon: f64,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub grid: Arc<MomentumGrid>,
    pub state: QuantumState,
    pub xi: f64,
    pub node_count: usize,
    /// `||(A - eps I) v|| / ||v||` of the accepted eigenpair.
    pub residual: f64,
    pub norm_convention: NormConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormConvention {
    /// `sum_i w_i p_i^2 (g_i^2 + h_i^2) = 1`, `g` positive at the
    /// smallest node.
    DiscreteL2,
    /// Covariant functional scaled to `2 m_b` (delta-function
    /// regularized to one in the rest frame).
    Covariant,
    /// As solved; no scaling applied yet.
    Raw,
}

/// `E^(2)_p - m2` without cancellation for `p << m2`.
fn e2_minus_xi(p: f64, xi: f64) -> f64 {
    p * p / ((p * p + xi * xi).sqrt() + xi)
}

/// Assemble the coupled radial equations for one channel. The
/// `include_small_terms` switch controls the `S(p')`-weighted potential
/// terms (on for the physical operator).
pub fn assemble_with(
    system: &TwoBodySystem,
    state: &QuantumState,
    grid: &Arc<MomentumGrid>,
    include_small_terms: bool,
) -> Result<DiscretizedOperator> {
    let n = grid.len();
    let xi = system.xi();
    let alpha = system.alpha();
    let p = grid.nodes().to_vec();
    let energy: Vec<f64> = p.iter().map(|&pi| (pi * pi + xi * xi).sqrt()).collect();

    let weights = channel_weights(state.f, state.m_f, state.l, state.s)?;

    // The integral term carries e^2/(2 pi)^3 * (2/pi) = alpha / pi^3
    // relative to the raw partial-wave projection V_L.
    let c_int = alpha / std::f64::consts::PI.powi(3);

    let measure_e = {
        let xi = xi;
        move |pp: f64| {
            let e = (pp * pp + xi * xi).sqrt();
            pp * pp / (2.0 * e)
        }
    };
    let measure_s = {
        let xi = xi;
        move |pp: f64| {
            let e = (pp * pp + xi * xi).sqrt();
            pp * pp / (2.0 * e) * pp / (e + xi)
        }
    };

    let mut need_e: Vec<i32> = vec![state.l];
    need_e.extend(weights.h_big.keys().copied());
    need_e.sort_unstable();
    need_e.dedup();
    let mut need_s: Vec<i32> = weights.g_small.keys().copied().collect();
    need_s.extend(weights.h_small.keys().copied());
    need_s.sort_unstable();
    need_s.dedup();
    if !include_small_terms {
        need_s.clear();
    }

    let mut sub_e: std::collections::BTreeMap<i32, SubtractedKernel> = Default::default();
    for &l in &need_e {
        let k = build_kernel(l, grid)?;
        sub_e.insert(l, lande_subtraction(&k, grid, measure_e)?);
    }
    let mut sub_s: std::collections::BTreeMap<i32, SubtractedKernel> = Default::default();
    for &l in &need_s {
        let k = build_kernel(l, grid)?;
        sub_s.insert(l, lande_subtraction(&k, grid, measure_s)?);
    }

    let mut a = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        let row_e = energy[i] + xi;
        // kinetic diagonal and coupling blocks
        a[(i, i)] += e2_minus_xi(p[i], xi);
        a[(i, n + i)] = -p[i];
        a[(n + i, i)] = -p[i];
        a[(n + i, n + i)] += e2_minus_xi(p[i], xi) - 2.0;

        // gg: (E + m2) V_L + S(p') p sum (C^T)^2 V_L'
        let k = &sub_e[&state.l];
        for j in 0..n {
            a[(i, j)] += c_int * row_e * k.off_diag[(i, j)];
        }
        a[(i, i)] += c_int * row_e * k.diag[i];
        if include_small_terms {
            for (lp, u) in &weights.g_small {
                let k = &sub_s[lp];
                for j in 0..n {
                    a[(i, j)] += c_int * p[i] * u * k.off_diag[(i, j)];
                }
                a[(i, i)] += c_int * p[i] * u * k.diag[i];
            }
        }

        // hh: (E + m2) sum C^2 V_L' + S(p') p (quadruple contraction) V_L''
        for (lp, wbig) in &weights.h_big {
            let k = &sub_e[lp];
            for j in 0..n {
                a[(n + i, n + j)] += c_int * row_e * wbig * k.off_diag[(i, j)];
            }
            a[(n + i, n + i)] += c_int * row_e * wbig * k.diag[i];
        }
        if include_small_terms {
            for (lpp, q) in &weights.h_small {
                let k = &sub_s[lpp];
                for j in 0..n {
                    a[(n + i, n + j)] += c_int * p[i] * q * k.off_diag[(i, j)];
                }
                a[(n + i, n + i)] += c_int * p[i] * q * k.diag[i];
            }
        }
    }

    Ok(DiscretizedOperator { matrix: a, state: *state, xi, alpha, grid: grid.clone() })
}

pub fn assemble(system: &TwoBodySystem, state: &QuantumState, grid: &Arc<MomentumGrid>) -> Result<DiscretizedOperator> {
    assemble_with(system, state, grid, true)
}

/// Build the default grid for a system: rational map with the Bohr
/// momentum as scale.
pub fn default_grid(system: &TwoBodySystem, n: usize) -> Result<Arc<MomentumGrid>> {
    Ok(Arc::new(build_grid(n, Mapping::Rational { scale: system.bohr_momentum() })?))
}

/// Measure-based similarity transform `D A D^{-1}` with
/// `d_i = sqrt(w_i p_i^2 / (2 E_i))`, which symmetrizes the dominant
/// potential part and improves eigenvalue conditioning.
fn balance_diagonal(op: &DiscretizedOperator) -> Vec<f64> {
    let n = op.grid.len();
    let mut d = Vec::with_capacity(2 * n);
    for i in 0..n {
        let p = op.grid.nodes()[i];
        let w = op.grid.weights()[i];
        let e = (p * p + op.xi * op.xi).sqrt();
        d.push((w * p * p / (2.0 * e)).sqrt());
    }
    let head = d.clone();
    d.extend(head);
    d
}

fn transformed_matrix(op: &DiscretizedOperator) -> Array2<f64> {
    let d = balance_diagonal(op);
    let m = &op.matrix;
    let n2 = m.nrows();
    Array2::from_shape_fn((n2, n2), |(i, j)| d[i] * m[(i, j)] / d[j])
}

/// Real eigenvalues of the operator inside `(eps_min, eps_max)`,
/// ascending. Eigenvalues only; no eigenvectors are formed.
pub fn bound_eigenvalues(op: &DiscretizedOperator, window: (f64, f64)) -> Result<Vec<f64>> {
    let at = transformed_matrix(op);
    let vals = at.eigvals().map_err(|e| Error::Solver(format!("dense eigensolve failed: {e}")))?;
    let mut out: Vec<f64> = vals
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * z.re.abs().max(1.0))
        .map(|z| z.re)
        .filter(|&x| x > window.0 && x < window.1)
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Inverse iteration for the eigenvector of `a` at (approximately)
/// eigenvalue `sigma`; returns the vector and the improved eigenvalue
/// from one Rayleigh-quotient step.
fn inverse_iteration(a: &Array2<f64>, sigma: f64) -> Result<(Array1<f64>, f64, f64)> {
    let n = a.nrows();
    // Small relative offset keeps the shifted matrix factorizable.
    let shift = sigma * (1.0 + 1e-11) + f64::EPSILON;
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let mut v = Array1::from_elem(n, 1.0);
    for i in 0..n {
        v[i] = 1.0 + 0.3 * ((i * 23 % 17) as f64 / 17.0);
    }
    let mut norm = (v.dot(&v)).sqrt();
    v /= norm;
    for _ in 0..4 {
        let next = shifted
            .solve(&v)
            .map_err(|e| Error::Solver(format!("inverse-iteration solve failed: {e}")))?;
        norm = (next.dot(&next)).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Solver("inverse iteration diverged".into()));
        }
        v = next / norm;
    }
    let av = a.dot(&v);
    let lambda = v.dot(&av);
    let mut res = &av - &(lambda * &v);
    let residual = (res.dot(&res)).sqrt();
    res.fill(0.0);
    Ok((v, lambda, residual))
}

const MAX_BOUND_STATES: usize = 8;

/// Full dense eigensolve of the discretized operator, returning the
/// lowest bound states in the window (up to a small internal cap),
/// ascending in energy, back-transformed, sign-fixed and node-counted.
pub fn solve_bound_states(op: &DiscretizedOperator, window: (f64, f64)) -> Result<Vec<RadialSolution>> {
    let eigenvalues = bound_eigenvalues(op, window)?;
    if eigenvalues.is_empty() {
        return Ok(Vec::new());
    }
    let at = transformed_matrix(op);
    let d = balance_diagonal(op);
    let n = op.grid.len();
    let mut out = Vec::new();
    for &eps in eigenvalues.iter().take(MAX_BOUND_STATES) {
        let (u, lambda, residual) = inverse_iteration(&at, eps)?;
        // back-transform and split
        let mut g: Vec<f64> = (0..n).map(|i| u[i] / d[i]).collect();
        let mut h: Vec<f64> = (0..n).map(|i| u[n + i] / d[n + i]).collect();
        if g[0] < 0.0 {
            g.iter_mut().for_each(|x| *x = -*x);
            h.iter_mut().for_each(|x| *x = -*x);
        }
        let node_count = count_nodes(&g);
        out.push(RadialSolution {
            epsilon: lambda,
            g,
            h,
            grid: op.grid.clone(),
            state: op.state,
            xi: op.xi,
            node_count,
            residual,
            norm_convention: NormConvention::Raw,
        });
    }
    out.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    Ok(out)
}

/// Sign changes of the radial function, ignoring the noisy tail below
/// a relative threshold.
fn count_nodes(g: &[f64]) -> usize {
    let max = g.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let thresh = 1e-6 * max;
    let mut nodes = 0;
    let mut last = 0.0f64;
    for &x in g {
        if x.abs() < thresh {
            continue;
        }
        if last != 0.0 && x.signum() != last.signum() {
            nodes += 1;
        }
        last = x;
    }
    nodes
}

/// Pick the solution with `n - L - 1` radial nodes; falls back to the
/// energy-ordering index when node counting is ambiguous.
pub fn select_state(solutions: &[RadialSolution], n: u32, l: i32) -> Result<RadialSolution> {
    if solutions.is_empty() {
        return Err(Error::NotFound("no bound states in window".into()));
    }
    let want = (n as i32 - l - 1) as usize;
    let by_nodes: Vec<&RadialSolution> = solutions.iter().filter(|s| s.node_count == want).collect();
    if by_nodes.len() == 1 {
        return Ok(by_nodes[0].clone());
    }
    // ambiguous or missing: energy ordering
    solutions
        .get(want)
        .cloned()
        .ok_or_else(|| Error::NotFound(format!("state n={n}, L={l} not present among {} solutions", solutions.len())))
}

/// Normalize in place according to the convention; returns the scaled
/// solution.
pub fn normalize(sol: &RadialSolution, convention: NormConvention) -> Result<RadialSolution> {
    let mut out = sol.clone();
    let w = sol.grid.weights();
    let p = sol.grid.nodes();
    match convention {
        NormConvention::Raw => {}
        NormConvention::DiscreteL2 => {
            let norm2: f64 = (0..p.len())
                .map(|i| w[i] * p[i] * p[i] * (sol.g[i] * sol.g[i] + sol.h[i] * sol.h[i]))
                .sum();
            if norm2 <= 0.0 || !norm2.is_finite() {
                return Err(Error::Solver("degenerate input: zero-norm radial vector".into()));
            }
            let scale = 1.0 / norm2.sqrt();
            out.g.iter_mut().for_each(|x| *x *= scale);
            out.h.iter_mut().for_each(|x| *x *= scale);
            if out.g[0] < 0.0 {
                out.g.iter_mut().for_each(|x| *x = -*x);
                out.h.iter_mut().for_each(|x| *x = -*x);
            }
        }
        NormConvention::Covariant => {
            let m_b = 1.0 + sol.xi + sol.epsilon;
            let functional = covariant_functional(sol, sol)?;
            if functional.abs() < 1e-300 {
                return Err(Error::Solver("degenerate input: zero covariant norm".into()));
            }
            let scale = (2.0 * m_b / functional).abs().sqrt();
            out.g.iter_mut().for_each(|x| *x *= scale);
            out.h.iter_mut().for_each(|x| *x *= scale);
            if out.g[0] < 0.0 {
                out.g.iter_mut().for_each(|x| *x = -*x);
                out.h.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    out.norm_convention = convention;
    Ok(out)
}

/// The number-conservation functional
/// `int (m2 d^3p / E_p) Tr[fbar_a gamma^0 f_b]` on the grid, with the
/// angular integral done by a product sphere rule.
pub fn covariant_functional(a: &RadialSolution, b: &RadialSolution) -> Result<f64> {
    if a.grid.len() != b.grid.len() {
        return Err(Error::Config("solutions live on different grids".into()));
    }
    let sphere = quad::sphere_rule(2 * (a.state.l.max(b.state.l) + 2) as usize);
    let p = a.grid.nodes();
    let w = a.grid.weights();
    let gamma0 = gamma0();
    let mut total = 0.0;
    for i in 0..p.len() {
        let e = (p[i] * p[i] + a.xi * a.xi).sqrt();
        let mut ang = 0.0;
        for &(th, ph, ws) in &sphere {
            let fa = reconstruct_wavefunction(a, i, th, ph)?;
            let fb = if std::ptr::eq(a, b) { fa.clone() } else { reconstruct_wavefunction(b, i, th, ph)? };
            // Tr[fbar_a gamma^0 f_b] = Tr[gamma^0 fa^dag fb]
            let fd = fa.mapv(|z| z.conj()).reversed_axes();
            let m = gamma0.dot(&fd).dot(&fb);
            ang += ws * (m[(0, 0)] + m[(1, 1)] + m[(2, 2)] + m[(3, 3)]).re;
        }
        total += w[i] * p[i] * p[i] * a.xi / e * ang;
    }
    Ok(total)
}

fn gamma0() -> Array2<Complex64> {
    let mut g = Array2::zeros((4, 4));
    g[(0, 0)] = Complex64::new(1.0, 0.0);
    g[(1, 1)] = Complex64::new(1.0, 0.0);
    g[(2, 2)] = Complex64::new(-1.0, 0.0);
    g[(3, 3)] = Complex64::new(-1.0, 0.0);
    g
}

/// `gamma^i` in the Dirac representation.
fn gamma_i(k: usize) -> Array2<Complex64> {
    let mut g = Array2::zeros((4, 4));
    let s = pauli(k);
    for r in 0..2 {
        for c in 0..2 {
            g[(r, 2 + c)] = s[(r, c)];
            g[(2 + r, c)] = -s[(r, c)];
        }
    }
    g
}

fn pauli(k: usize) -> Array2<Complex64> {
    let mut s = Array2::zeros((2, 2));
    match k {
        0 => {
            s[(0, 1)] = Complex64::new(1.0, 0.0);
            s[(1, 0)] = Complex64::new(1.0, 0.0);
        }
        1 => {
            s[(0, 1)] = Complex64::new(0.0, -1.0);
            s[(1, 0)] = Complex64::new(0.0, 1.0);
        }
        _ => {
            s[(0, 0)] = Complex64::new(1.0, 0.0);
            s[(1, 1)] = Complex64::new(-1.0, 0.0);
        }
    }
    s
}

/// `pslash - m2` (in `m1` units) for the on-shell second constituent at
/// momentum `p` in direction `(theta, phi)`.
pub fn pslash_minus_m2(p: f64, theta: f64, phi: f64, xi: f64) -> Array2<Complex64> {
    let e = (p * p + xi * xi).sqrt();
    let dir = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    let mut m = gamma0().mapv(|z| z * Complex64::new(e, 0.0));
    for k in 0..3 {
        let gk = gamma_i(k);
        m = m - gk.mapv(|z| z * Complex64::new(p * dir[k], 0.0));
    }
    for i in 0..4 {
        m[(i, i)] -= Complex64::new(xi, 0.0);
    }
    m
}

/// The 4x4 matrix wave function at grid node `i` and direction
/// `(theta, phi)`: spin-angle blocks times the radial functions, with
/// the kinematic factor `S(p) = p / (E^(2)_p + m2)` on the right half.
pub fn reconstruct_wavefunction(sol: &RadialSolution, node: usize, theta: f64, phi: f64) -> Result<Array2<Complex64>> {
    let p = sol.grid.nodes()[node];
    let e = (p * p + sol.xi * sol.xi).sqrt();
    let s_p = p / (e + sol.xi);
    let st = &sol.state;
    let y = spin_angle_value(st.f, st.m_f, st.l, st.s, theta, phi)?;
    let sig = sigma_dot_unit(theta, phi);
    let sig_t = sig.t().to_owned();
    let y_sig_t = y.dot(&sig_t);
    let sig_y = sig.dot(&y);
    let sig_y_sig_t = sig_y.dot(&sig_t);
    let g = Complex64::new(sol.g[node], 0.0);
    let h = Complex64::new(sol.h[node], 0.0);
    let s = Complex64::new(s_p, 0.0);
    let mut f = Array2::zeros((4, 4));
    for r in 0..2 {
        for c in 0..2 {
            f[(r, c)] = y[(r, c)] * g;
            f[(r, 2 + c)] = s * y_sig_t[(r, c)] * g;
            f[(2 + r, c)] = sig_y[(r, c)] * h;
            f[(2 + r, 2 + c)] = s * sig_y_sig_t[(r, c)] * h;
        }
    }
    Ok(f)
}

/// Grid-refinement estimate: energy from the largest grid plus the
/// maximum pairwise spread across sizes as a conservative sigma. Both
/// in `m1` units.
pub fn refine_uncertainty(system: &TwoBodySystem, state: &QuantumState, grid_sizes: &[usize]) -> Result<(f64, f64)> {
    if grid_sizes.len() < 2 {
        return Err(Error::Config("need at least two grid sizes".into()));
    }
    let mut sizes = grid_sizes.to_vec();
    sizes.sort_unstable();
    let mut energies = Vec::new();
    for &n in &sizes {
        energies.push(solve_energy(system, state, n)?);
    }
    let mut sigma = 0.0f64;
    for i in 0..energies.len() {
        for j in (i + 1)..energies.len() {
            sigma = sigma.max((energies[i] - energies[j]).abs());
        }
    }
    Ok((*energies.last().unwrap(), sigma))
}

/// Energy of one state at one grid size (eigenvalues only), `m1` units.
pub fn solve_energy(system: &TwoBodySystem, state: &QuantumState, n: usize) -> Result<f64> {
    let grid = default_grid(system, n)?;
    let op = assemble(system, state, &grid)?;
    let eigenvalues = bound_eigenvalues(&op, default_window())?;
    let idx = state.radial_nodes();
    eigenvalues
        .get(idx)
        .copied()
        .ok_or_else(|| Error::NotFound(format!("only {} bound eigenvalues in window", eigenvalues.len())))
}

/// Default spectral window in `m1` units: excludes the negative
/// continuum (below `-2 + ...`) while containing all hydrogenic levels.
pub fn default_window() -> (f64, f64) {
    (-0.5, 0.0)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct MassInterchangeReport {
    pub epsilon_ev: f64,
    pub epsilon_swapped_ev: f64,
    pub delta_ev: f64,
    pub sigma_ev: f64,
    /// `|delta| / sigma`
    pub sigmas: f64,
}

/// Solve with `(m1, m2)` and `(m2, m1)` and compare absolute energies;
/// the spread is expressed in units of the grid-refinement sigma.
pub fn mass_interchange_check(
    system: &TwoBodySystem,
    state: &QuantumState,
    grid_sizes: &[usize],
) -> Result<MassInterchangeReport> {
    let (eps, sigma) = refine_uncertainty(system, state, grid_sizes)?;
    let swapped = system.swapped();
    let n_max = *grid_sizes.iter().max().unwrap();
    let eps_swapped = solve_energy(&swapped, state, n_max)?;
    let epsilon_ev = eps * system.ev_per_m1();
    let epsilon_swapped_ev = eps_swapped * swapped.ev_per_m1();
    let delta_ev = (epsilon_ev - epsilon_swapped_ev).abs();
    let sigma_ev = sigma * system.ev_per_m1();
    Ok(MassInterchangeReport {
        epsilon_ev,
        epsilon_swapped_ev,
        delta_ev,
        sigma_ev,
        sigmas: if sigma_ev > 0.0 { delta_ev / sigma_ev } else { f64::INFINITY },
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DropSmallTermsReport {
    pub epsilon_full_ev: f64,
    pub epsilon_dropped_ev: f64,
    pub delta_ev: f64,
    /// Expected magnitude `alpha^2 (m1/m2)^2 |epsilon|`.
    pub expected_bound_ev: f64,
}

/// Solve with and without the `S(p')`-weighted integral terms.
pub fn drop_small_terms_check(system: &TwoBodySystem, state: &QuantumState, n: usize) -> Result<DropSmallTermsReport> {
    let grid = default_grid(system, n)?;
    let idx = state.radial_nodes();
    let full = assemble_with(system, state, &grid, true)?;
    let dropped = assemble_with(system, state, &grid, false)?;
    let e_full = bound_eigenvalues(&full, default_window())?
        .get(idx)
        .copied()
        .ok_or_else(|| Error::NotFound("state not found (full operator)".into()))?;
    let e_drop = bound_eigenvalues(&dropped, default_window())?
        .get(idx)
        .copied()
        .ok_or_else(|| Error::NotFound("state not found (dropped operator)".into()))?;
    let to_ev = system.ev_per_m1();
    let ratio = system.m1() / system.m2();
    Ok(DropSmallTermsReport {
        epsilon_full_ev: e_full * to_ev,
        epsilon_dropped_ev: e_drop * to_ev,
        delta_ev: (e_full - e_drop).abs() * to_ev,
        expected_bound_ev: system.alpha().powi(2) * ratio * ratio * e_full.abs() * to_ev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ALPHA;

    fn positronium() -> TwoBodySystem {
        TwoBodySystem::new(crate::M_ELECTRON, crate::M_ELECTRON, ALPHA, "positronium").unwrap()
    }

    fn ground() -> QuantumState {
        QuantumState::new(1, 0, 0, 0, 0).unwrap()
    }

    fn solve_ground(system: &TwoBodySystem, n: usize) -> RadialSolution {
        let grid = default_grid(system, n).unwrap();
        let op = assemble(system, &ground(), &grid).unwrap();
        let sols = solve_bound_states(&op, default_window()).unwrap();
        select_state(&sols, 1, 0).unwrap()
    }

    #[test]
    fn state_validation() {
        assert!(QuantumState::new(1, 0, 0, 0, 0).is_ok());
        assert!(QuantumState::new(2, 1, 1, 0, -1).is_ok());
        assert!(QuantumState::new(1, 1, 0, 0, 0).is_err()); // triangle
        assert!(QuantumState::new(1, 0, 0, 2, 0).is_err()); // S > 1
        assert!(QuantumState::new(1, 1, 0, 1, 2).is_err()); // |mF| > F
        assert!(QuantumState::new(1, 1, 1, 0, 0).is_err()); // n <= L
        assert!(TwoBodySystem::new(-1.0, 1.0, ALPHA, "x").is_err());
        assert!(TwoBodySystem::new(1.0, 1.0, 1.5, "x").is_err());
    }

    #[test]
    fn vanishing_coupling_leaves_the_kinetic_operator() {
        let system = TwoBodySystem::new(1.0, 2.0, 1e-13, "feeble").unwrap();
        let grid = Arc::new(crate::kernel::build_grid(24, Mapping::Rational { scale: 1.0 }).unwrap());
        let op = assemble(&system, &ground(), &grid).unwrap();
        let n = grid.len();
        let xi = 2.0;
        for i in 0..n {
            let p = grid.nodes()[i];
            let e = (p * p + xi * xi).sqrt();
            for j in 0..n {
                let gg = op.matrix[(i, j)];
                let hh = op.matrix[(n + i, n + j)];
                let gh = op.matrix[(i, n + j)];
                let hg = op.matrix[(n + i, j)];
                if i == j {
                    assert!((gg - (e - xi)).abs() < 1e-8, "gg diag at {i}");
                    assert!((hh - (e - xi - 2.0)).abs() < 1e-8, "hh diag at {i}");
                    assert!((gh + p).abs() < 1e-14 && (hg + p).abs() < 1e-14);
                } else {
                    assert!(gg.abs() < 1e-8 && hh.abs() < 1e-8, "off-diagonal potential should vanish");
                    assert!(gh == 0.0 && hg == 0.0, "coupling blocks must be diagonal");
                }
            }
        }
        // the g-dominant branch of the free spectrum is nonnegative
        let eigenvalues = bound_eigenvalues(&op, (-1e-6, f64::INFINITY)).unwrap();
        assert!(eigenvalues.iter().all(|&e| e > -1e-6));
    }

    #[test]
    fn positronium_ground_state_near_bohr() {
        let system = positronium();
        let sol = solve_ground(&system, 200);
        let bohr = -ALPHA * ALPHA / 4.0; // mu = m1/2
        let rel = ((sol.epsilon - bohr) / bohr).abs();
        assert!(rel < 10.0 * ALPHA * ALPHA, "epsilon {} vs Bohr {bohr}, rel {rel}", sol.epsilon);
        assert!(sol.epsilon < 0.0);
        assert_eq!(sol.node_count, 0);
        assert!(sol.residual < 1e-8, "residual {}", sol.residual);
        assert!(sol.g[0] > 0.0);
    }

    #[test]
    fn node_counts_follow_energy_ordering() {
        let system = positronium();
        let grid = default_grid(&system, 240).unwrap();
        let op = assemble(&system, &ground(), &grid).unwrap();
        let sols = solve_bound_states(&op, default_window()).unwrap();
        assert!(sols.len() >= 3);
        for (k, sol) in sols.iter().take(3).enumerate() {
            assert_eq!(sol.node_count, k, "level {k}");
        }
        let s3 = select_state(&sols, 3, 0).unwrap();
        assert_eq!(s3.node_count, 2);
        assert!(select_state(&sols, 30, 0).is_err());
    }

    #[test]
    fn empty_window_yields_no_states() {
        let system = positronium();
        let grid = default_grid(&system, 64).unwrap();
        let op = assemble(&system, &ground(), &grid).unwrap();
        let sols = solve_bound_states(&op, (-0.4, -0.3)).unwrap();
        assert!(sols.is_empty());
    }

    #[test]
    fn discrete_l2_normalization() {
        let system = positronium();
        let sol = solve_ground(&system, 150);
        let normed = normalize(&sol, NormConvention::DiscreteL2).unwrap();
        let w = normed.grid.weights();
        let p = normed.grid.nodes();
        let total: f64 = (0..p.len())
            .map(|i| w[i] * p[i] * p[i] * (normed.g[i].powi(2) + normed.h[i].powi(2)))
            .sum();
        assert!((total - 1.0).abs() < 1e-12, "norm {total}");
        assert!(normed.g[0] > 0.0);

        // projective invariance: scaling the input changes nothing
        let mut scaled = sol.clone();
        scaled.g.iter_mut().for_each(|x| *x *= 7.0);
        scaled.h.iter_mut().for_each(|x| *x *= 7.0);
        let renormed = normalize(&scaled, NormConvention::DiscreteL2).unwrap();
        let gmax = normed.g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..p.len() {
            assert!((renormed.g[i] - normed.g[i]).abs() < 1e-13 * gmax);
            assert!((renormed.h[i] - normed.h[i]).abs() < 1e-13 * gmax);
        }
    }

    #[test]
    fn covariant_normalization_and_orthogonality() {
        let system = positronium();
        let grid = default_grid(&system, 150).unwrap();
        let op = assemble(&system, &ground(), &grid).unwrap();
        let sols = solve_bound_states(&op, default_window()).unwrap();
        let s1 = select_state(&sols, 1, 0).unwrap();
        let s2 = select_state(&sols, 2, 0).unwrap();

        let n1 = normalize(&s1, NormConvention::Covariant).unwrap();
        let m_b = 1.0 + n1.xi + n1.epsilon;
        let functional = covariant_functional(&n1, &n1).unwrap();
        assert!((functional - 2.0 * m_b).abs() < 1e-10 * m_b, "functional {functional} vs {}", 2.0 * m_b);

        // cross-term orthogonality between distinct S states
        let n2 = normalize(&s2, NormConvention::Covariant).unwrap();
        let cross = covariant_functional(&n1, &n2).unwrap();
        assert!(cross.abs() / (2.0 * m_b) < 1e-6, "cross term {cross}");

        // scaling input by 7 leaves the covariant-normalized output identical
        let mut scaled = s1.clone();
        scaled.g.iter_mut().for_each(|x| *x *= 7.0);
        scaled.h.iter_mut().for_each(|x| *x *= 7.0);
        let renormed = normalize(&scaled, NormConvention::Covariant).unwrap();
        for i in 0..n1.g.len() {
            assert!((renormed.g[i] - n1.g[i]).abs() < 1e-12 * n1.g[0].abs());
        }
    }

    #[test]
    fn reconstruction_satisfies_auxiliary_condition_and_parity() {
        let system = positronium();
        let sol = normalize(&solve_ground(&system, 150), NormConvention::DiscreteL2).unwrap();
        let pi = std::f64::consts::PI;
        for &(node, theta, phi) in &[(10usize, 0.7, 1.3), (60, 2.1, 4.0), (100, 1.0, 0.2)] {
            let f = reconstruct_wavefunction(&sol, node, theta, phi).unwrap();
            let p = sol.grid.nodes()[node];
            let aux = f.dot(&pslash_minus_m2(p, theta, phi, sol.xi).reversed_axes());
            let f_max = f.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            let aux_max = aux.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            let scale = (p * p + sol.xi * sol.xi).sqrt() + sol.xi;
            assert!(aux_max < 1e-12 * f_max * scale, "auxiliary condition violated at node {node}");

            let f_neg = reconstruct_wavefunction(&sol, node, pi - theta, phi + pi).unwrap();
            let g0 = gamma0();
            let parity = g0.dot(&f_neg).dot(&g0.t());
            // L = 0: even parity
            let dev = (&parity - &f).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            assert!(dev < 1e-12 * f_max, "parity violated at node {node}");
        }
        // upper-left block is the spin-angle function times g
        let y = crate::angular::spin_angle_value(0, 0, 0, 0, 0.7, 1.3).unwrap();
        let f = reconstruct_wavefunction(&sol, 10, 0.7, 1.3).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                let want = y[(r, c)] * Complex64::new(sol.g[10], 0.0);
                assert!((f[(r, c)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn refinement_and_interchange_on_symmetric_system() {
        let system = positronium();
        let (eps, sigma) = refine_uncertainty(&system, &ground(), &[120, 120]).unwrap();
        assert_eq!(sigma, 0.0);
        assert!(eps < 0.0);
        assert!(refine_uncertainty(&system, &ground(), &[120]).is_err());

        let report = mass_interchange_check(&system, &ground(), &[100, 140]).unwrap();
        // identical masses: interchange is exact up to solver noise
        assert!(report.delta_ev.abs() < 1e-10 * report.epsilon_ev.abs(), "{report:?}");
    }

    #[test]
    fn grid_convergence_is_monotone() {
        let system = positronium();
        let e: Vec<f64> = [100, 200, 400]
            .iter()
            .map(|&n| solve_energy(&system, &ground(), n).unwrap())
            .collect();
        let d1 = (e[1] - e[0]).abs();
        let d2 = (e[2] - e[1]).abs();
        assert!(d2 < d1, "refinement steps {d1:.3e} -> {d2:.3e} should shrink");
    }

    #[test]
    fn dropping_small_terms_barely_moves_the_energy() {
        let system = positronium();
        let report = drop_small_terms_check(&system, &ground(), 150).unwrap();
        // positronium has the largest relative effect; still far below
        // the binding energy itself
        assert!(report.delta_ev < 1e-2 * report.epsilon_full_ev.abs(), "{report:?}");
        assert!(report.expected_bound_ev > 0.0);
    }
}
