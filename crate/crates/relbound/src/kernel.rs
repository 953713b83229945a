//! Momentum grids and the partial-wave Coulomb kernel, including the
//! Lande subtraction of the logarithmic `p = p'` singularity.

use ndarray::Array2;
use rayon::prelude::*;

use crate::quad;
use crate::{Error, Result};

/// Legendre function of the second kind `Q_L(y)` for `y > 1`.
///
/// Upward recursion is used near the singular point; for larger `y`,
/// where the recursion is contaminated by the growing `P_L` solution,
/// the hypergeometric large-`y` series takes over.
pub fn legendre_q(l: i32, y: f64) -> Result<f64> {
    if y <= 1.0 {
        return Err(Error::Domain(format!("Q_L requires y > 1, got y = {y}")));
    }
    legendre_q_from_excess(l, y, y - 1.0)
}

/// `Q_L(1 + e)` with the excess `e = y - 1` supplied directly, so the
/// logarithm stays accurate arbitrarily close to the singular point
/// (where `y` itself rounds to 1).
fn legendre_q_from_excess(l: i32, y: f64, e: f64) -> Result<f64> {
    if l < 0 {
        return Err(Error::Domain(format!("negative order L = {l}")));
    }
    if e <= 0.0 {
        return Err(Error::Domain(format!("Q_L requires y > 1, got excess {e}")));
    }
    if y <= 2.0 || l == 0 {
        let q0 = 0.5 * ((y + 1.0) / e).ln();
        if l == 0 {
            return Ok(q0);
        }
        let mut qm = q0;
        let mut q = y * q0 - 1.0;
        for k in 2..=l {
            let next = (((2 * k - 1) as f64) * y * q - ((k - 1) as f64) * qm) / k as f64;
            qm = q;
            q = next;
        }
        Ok(q)
    } else {
        // Q_L(y) = sqrt(pi) L! / (Gamma(L+3/2) (2y)^{L+1})
        //          * 2F1((L+2)/2, (L+1)/2; L+3/2; 1/y^2)
        let mut pre = std::f64::consts::PI.sqrt();
        // Gamma(L+3/2) = sqrt(pi)/2^{L+1} * (2L+1)!!
        let mut dfact = 1.0;
        for k in 0..=l {
            dfact *= (2 * k + 1) as f64;
        }
        let gamma_l32 = std::f64::consts::PI.sqrt() * dfact / 2f64.powi(l + 1);
        let mut lfact = 1.0;
        for k in 2..=l {
            lfact *= k as f64;
        }
        pre *= lfact / (gamma_l32 * (2.0 * y).powi(l + 1));
        let a = (l as f64 + 2.0) / 2.0;
        let b = (l as f64 + 1.0) / 2.0;
        let c = l as f64 + 1.5;
        let z = 1.0 / (y * y);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..200 {
            let kf = k as f64;
            term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        Ok(pre * sum)
    }
}

/// Partial-wave projection of the attractive momentum-space Coulomb
/// potential `-1/|p - p'|^2`:
/// `V_L(p, p') = -(pi^2 / (p p')) Q_L((p^2 + p'^2) / (2 p p'))`.
pub fn coulomb_partial_wave(l: i32, p: f64, pp: f64) -> Result<f64> {
    if p <= 0.0 || pp <= 0.0 {
        return Err(Error::Domain(format!("momenta must be positive, got ({p}, {pp})")));
    }
    if p == pp {
        return Err(Error::Singular(p));
    }
    // excess over 1 computed cancellation-free: y - 1 = (p - p')^2 / (2 p p')
    let e = (p - pp) * (p - pp) / (2.0 * p * pp);
    if e == 0.0 {
        return Err(Error::Singular(p));
    }
    Ok(-std::f64::consts::PI.powi(2) / (p * pp) * legendre_q_from_excess(l, 1.0 + e, e)?)
}

/// How the unit interval of Gauss-Legendre nodes is pushed onto the
/// momentum half line. Both maps send `t = 1` to infinity, and `t = 1`
/// is never a node, so infinite momenta are excluded by construction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Mapping {
    /// `p = scale * t / (1 - t)`
    Rational { scale: f64 },
    /// `p = scale * tan(pi t / 2)`
    Tangent { scale: f64 },
}

impl Mapping {
    pub fn scale(&self) -> f64 {
        match *self {
            Mapping::Rational { scale } | Mapping::Tangent { scale } => scale,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mapping::Rational { .. } => "rational",
            Mapping::Tangent { .. } => "tangent",
        }
    }
}

/// Quadrature nodes and weights on `(0, inf)`, in units of `m1`.
#[derive(Debug, Clone)]
pub struct MomentumGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    mapping: Mapping,
}

impl MomentumGrid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mapping(&self) -> Mapping {
        self.mapping
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Discrete approximation of `int_0^inf f(p) dp`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }
}

/// Gauss-Legendre nodes on `(0, 1)` pushed through the chosen mapping,
/// weights transformed by the Jacobian.
pub fn build_grid(n: usize, mapping: Mapping) -> Result<MomentumGrid> {
    if n < 8 {
        return Err(Error::Config(format!("grid size {n} < 8")));
    }
    let scale = mapping.scale();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Config(format!("mapping scale must be positive, got {scale}")));
    }
    let (xs, ws) = quad::gauss_legendre(n);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (x, w) in xs.iter().zip(&ws) {
        let t = 0.5 * (x + 1.0);
        let wt = 0.5 * w;
        let (p, jac) = match mapping {
            Mapping::Rational { scale } => {
                let omt = 1.0 - t;
                (scale * t / omt, scale / (omt * omt))
            }
            Mapping::Tangent { scale } => {
                let arg = std::f64::consts::FRAC_PI_2 * t;
                (scale * arg.tan(), scale * std::f64::consts::FRAC_PI_2 / arg.cos().powi(2))
            }
        };
        nodes.push(p);
        weights.push(wt * jac);
    }
    Ok(MomentumGrid { nodes, weights, mapping })
}

/// Off-diagonal values of `V_L` on a grid; the diagonal (the singular
/// point) is left at zero and handled by the subtraction scheme.
#[derive(Debug, Clone)]
pub struct PartialWaveKernel {
    pub l: i32,
    pub values: Array2<f64>,
}

pub fn build_kernel(l: i32, grid: &MomentumGrid) -> Result<PartialWaveKernel> {
    let n = grid.len();
    let p = grid.nodes();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            for j in 0..n {
                if j != i {
                    row[j] = coulomb_partial_wave(l, p[i], p[j]).expect("distinct positive nodes");
                }
            }
            row
        })
        .collect();
    let mut values = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    Ok(PartialWaveKernel { l, values })
}

/// Discretization of `int_0^inf dp' m(p') V_L(p_i, p') f(p')` with the
/// singular point removed by a Lande subtraction.
///
/// The operator applies
/// `sum_j w_j m_j V_L(p_i, p_j) [f_j - f_i r_i(p_j)] + f_i s_i`
/// with the subtraction profile `r_i(p') = 2 p_i^2 / (p_i^2 + p'^2)`
/// (unity at the singular point, decaying at infinity) and the
/// reference integral `s_i = int m(p') V_L(p_i, p') r_i(p') dp'`
/// evaluated adaptively with a split at `p' = p_i`.
#[derive(Debug, Clone)]
pub struct SubtractedKernel {
    pub l: i32,
    /// `w_j m(p_j) V_L(p_i, p_j)`, zero diagonal.
    pub off_diag: Array2<f64>,
    /// Per-row diagonal correction `s_i - sum_{j != i} w_j m_j V_ij r_i(p_j)`.
    pub diag: Vec<f64>,
    /// Rows whose reference integral missed the internal tolerance.
    pub flagged_rows: Vec<usize>,
}

const SUBTRACTION_TOL: f64 = 1e-10;

pub fn lande_subtraction<M>(kernel: &PartialWaveKernel, grid: &MomentumGrid, measure: M) -> Result<SubtractedKernel>
where
    M: Fn(f64) -> f64 + Sync,
{
    let n = grid.len();
    let p = grid.nodes();
    let w = grid.weights();
    let l = kernel.l;

    let mut off_diag = Array2::zeros((n, n));
    let mut lattice = vec![0.0; n];
    let mut scales = vec![0.0; n];
    for i in 0..n {
        let pi = p[i];
        for j in 0..n {
            if j == i {
                continue;
            }
            let v = w[j] * measure(p[j]) * kernel.values[(i, j)];
            off_diag[(i, j)] = v;
            let term = v * 2.0 * pi * pi / (pi * pi + p[j] * p[j]);
            lattice[i] += term;
            scales[i] += term.abs();
        }
    }

    let rows: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = p[i];
            let profile = |pp: f64| 2.0 * pi * pi / (pi * pi + pp * pp);
            let integrand = |pp: f64| {
                if pp <= 0.0 || pp == pi {
                    return 0.0;
                }
                measure(pp) * coulomb_partial_wave(l, pi, pp).expect("off-singularity") * profile(pp)
            };
            // The quadrature tolerance is absolute; anchor it to the
            // magnitude of the discretized row so that measures of very
            // different scales are integrated to the same relative
            // quality (the diagonal is later rescaled by kinematic
            // factors that would amplify any fixed absolute error).
            let scale = scales[i].max(f64::MIN_POSITIVE);
            // Split at the singular point; the tail is mapped to a
            // finite interval.
            let near = quad::integrate(&integrand, 0.0, pi, SUBTRACTION_TOL * 0.25 * scale);
            let mid = quad::integrate(&integrand, pi, 8.0 * pi, SUBTRACTION_TOL * 0.25 * scale);
            let tail = quad::integrate_to_infinity(&integrand, 8.0 * pi, SUBTRACTION_TOL * 0.5 * scale);
            match (near, mid, tail) {
                (Ok(a), Ok(b), Ok(c)) => (a + b + c, false),
                // Keep the best-effort value but flag the row.
                _ => {
                    let a = quad::integrate(&integrand, 0.0, pi, 1e-6 * scale).unwrap_or(0.0);
                    let b = quad::integrate(&integrand, pi, 8.0 * pi, 1e-6 * scale).unwrap_or(0.0);
                    let c = quad::integrate_to_infinity(&integrand, 8.0 * pi, 1e-6 * scale).unwrap_or(0.0);
                    (a + b + c, true)
                }
            }
        })
        .collect();

    let mut diag = vec![0.0; n];
    let mut flagged_rows = Vec::new();
    for i in 0..n {
        let (s_i, flagged) = rows[i];
        if flagged {
            flagged_rows.push(i);
        }
        diag[i] = s_i - lattice[i];
    }
    Ok(SubtractedKernel { l, off_diag, diag, flagged_rows })
}

impl SubtractedKernel {
    /// Apply the subtracted operator to a sampled function.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * f[i];
            for j in 0..n {
                acc += self.off_diag[(i, j)] * f[j];
            }
            out[i] = acc;
        }
        out
    }
}
