//! Angular-momentum algebra: Clebsch-Gordan coefficients, spin-angle
//! functions, and the coupling tables for the action of `sigma . phat`
//! on spin-angle functions from the left and from the right.
//!
//! Clebsch-Gordan coefficients are evaluated exactly as signed square
//! roots of rationals (Condon-Shortley phase) and converted to `f64`
//! only at the point of use, so the sum rules obeyed by the coupling
//! tables hold to machine precision.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array2;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// An angular momentum with projection, stored as `2j` and `2m` so
/// half-integer values are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AngularMomentum {
    twice_j: i32,
    twice_m: i32,
}

impl AngularMomentum {
    pub fn new(twice_j: i32, twice_m: i32) -> Result<Self> {
        if twice_j < 0 {
            return Err(Error::Domain(format!("negative 2j = {twice_j}")));
        }
        if twice_m.abs() > twice_j {
            return Err(Error::Domain(format!("|2m| = {} > 2j = {}", twice_m.abs(), twice_j)));
        }
        if (twice_j - twice_m) % 2 != 0 {
            return Err(Error::Domain(format!("2j = {twice_j} and 2m = {twice_m} differ in parity")));
        }
        Ok(Self { twice_j, twice_m })
    }

    /// Integer angular momentum `(l, m)`.
    pub fn integer(l: i32, m: i32) -> Result<Self> {
        Self::new(2 * l, 2 * m)
    }

    pub fn twice_j(&self) -> i32 {
        self.twice_j
    }

    pub fn twice_m(&self) -> i32 {
        self.twice_m
    }
}

/// A value of the form `sign * sqrt(|q|)` with `q` rational; the sign is
/// the sign of `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedSqrt(Ratio<BigInt>);

impl SignedSqrt {
    pub fn zero() -> Self {
        Self(Ratio::zero())
    }

    /// The signed square `q`.
    pub fn signed_square(&self) -> &Ratio<BigInt> {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        let mag = self.0.abs().to_f64().unwrap_or(f64::NAN).sqrt();
        if self.0.is_negative() {
            -mag
        } else {
            mag
        }
    }
}

fn factorial(n: i32) -> BigInt {
    debug_assert!(n >= 0);
    let mut out = BigInt::one();
    for k in 2..=n {
        out *= k;
    }
    out
}

/// Exact Clebsch-Gordan coefficient `<j1 j2; m1 m2 | J M>` via the Racah
/// closed-form sum, Condon-Shortley convention. Selection-rule failures
/// return zero; unphysical inputs are rejected at `AngularMomentum`
/// construction.
pub fn clebsch_gordan_exact(j1: AngularMomentum, j2: AngularMomentum, j: AngularMomentum) -> SignedSqrt {
    let (tj1, tm1) = (j1.twice_j, j1.twice_m);
    let (tj2, tm2) = (j2.twice_j, j2.twice_m);
    let (tj, tm) = (j.twice_j, j.twice_m);

    if tm1 + tm2 != tm {
        return SignedSqrt::zero();
    }
    // Triangle rule, and integer perimeter.
    if tj > tj1 + tj2 || tj < (tj1 - tj2).abs() || (tj1 + tj2 + tj) % 2 != 0 {
        return SignedSqrt::zero();
    }

    // All of these are integers (twice-value differences with even parity).
    let a = (tj1 + tj2 - tj) / 2;
    let b = (tj1 - tj2 + tj) / 2;
    let c = (-tj1 + tj2 + tj) / 2;
    let d = (tj1 + tj2 + tj) / 2 + 1;
    let jm1m = (tj1 - tm1) / 2;
    let jp1m = (tj1 + tm1) / 2;
    let jm2m = (tj2 - tm2) / 2;
    let jp2m = (tj2 + tm2) / 2;
    let jpm = (tj + tm) / 2;
    let jmm = (tj - tm) / 2;

    let pre_num = factorial(a) * factorial(b) * factorial(c)
        * factorial(jpm) * factorial(jmm)
        * factorial(jm1m) * factorial(jp1m) * factorial(jm2m) * factorial(jp2m)
        * BigInt::from(tj + 1);
    let pre = Ratio::new(pre_num, factorial(d));

    let k_min = 0.max((tj2 - tj - tm1) / 2).max((tj1 - tj + tm2) / 2);
    let k_max = a.min(jm1m).min(jp2m);
    let mut sum = Ratio::<BigInt>::zero();
    for k in k_min..=k_max {
        let den = factorial(k)
            * factorial(a - k)
            * factorial(jm1m - k)
            * factorial(jp2m - k)
            * factorial((tj - tj2 + tm1) / 2 + k)
            * factorial((tj - tj1 - tm2) / 2 + k);
        let term = Ratio::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }

    SignedSqrt(&sum * &sum * pre * if sum.is_negative() { -Ratio::one() } else { Ratio::one() })
}

/// `<j1 j2; m1 m2 | J M>` as `f64`.
pub fn clebsch_gordan(j1: AngularMomentum, j2: AngularMomentum, j: AngularMomentum) -> f64 {
    clebsch_gordan_exact(j1, j2, j).to_f64()
}

/// Integer-argument convenience wrapper used throughout the table builder.
fn cg_int(l1: i32, m1: i32, l2: i32, m2: i32, l: i32, m: i32) -> f64 {
    if m1.abs() > l1 || m2.abs() > l2 || m.abs() > l {
        return 0.0;
    }
    clebsch_gordan(
        AngularMomentum::integer(l1, m1).expect("validated"),
        AngularMomentum::integer(l2, m2).expect("validated"),
        AngularMomentum::integer(l, m).expect("validated"),
    )
}

// ---------------------------------------------------------------------------
// Spin matrices and spin-angle functions
// ---------------------------------------------------------------------------

/// Singlet/triplet spin matrix `phi_{S mS}` as a real 2x2 array; the row
/// index is the first constituent's spin, the column the second's, and
/// each entry is the Clebsch-Gordan coefficient `<1/2 1/2; ma mb | S mS>`.
pub fn spin_matrix(s: i32, m_s: i32) -> Result<Array2<f64>> {
    if !(s == 0 || s == 1) {
        return Err(Error::Domain(format!("spin S = {s} not in {{0, 1}}")));
    }
    if m_s.abs() > s {
        return Err(Error::Domain(format!("|mS| = {} > S = {s}", m_s.abs())));
    }
    let mut phi = Array2::zeros((2, 2));
    for (row, tma) in [(0usize, 1i32), (1, -1)] {
        for (col, tmb) in [(0usize, 1i32), (1, -1)] {
            if tma + tmb != 2 * m_s {
                continue;
            }
            phi[(row, col)] = clebsch_gordan(
                AngularMomentum::new(1, tma).expect("validated"),
                AngularMomentum::new(1, tmb).expect("validated"),
                AngularMomentum::integer(s, m_s).expect("validated"),
            );
        }
    }
    Ok(phi)
}

fn assoc_legendre(l: i32, m: i32, x: f64) -> f64 {
    debug_assert!(m >= 0 && m <= l);
    // P_m^m with the Condon-Shortley (-1)^m built in.
    let mut pmm = 1.0;
    if m > 0 {
        let somx2 = ((1.0 - x) * (1.0 + x)).sqrt();
        let mut fact = 1.0;
        for _ in 0..m {
            pmm *= -fact * somx2;
            fact += 2.0;
        }
    }
    if l == m {
        return pmm;
    }
    let mut pmmp1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pmmp1;
    }
    let mut pll = 0.0;
    for ll in (m + 2)..=l {
        pll = (x * ((2 * ll - 1) as f64) * pmmp1 - ((ll + m - 1) as f64) * pmm) / ((ll - m) as f64);
        pmm = pmmp1;
        pmmp1 = pll;
    }
    pll
}

/// Spherical harmonic `Y_{l m}(theta, phi)`, Condon-Shortley phase.
pub fn sph_harm(l: i32, m: i32, theta: f64, phi: f64) -> Complex64 {
    let ma = m.abs();
    if ma > l {
        return Complex64::new(0.0, 0.0);
    }
    let mut lnfac = 0.0f64;
    for k in (l - ma + 1)..=(l + ma) {
        lnfac += (k as f64).ln();
    }
    let norm = ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI) * (-lnfac).exp()).sqrt();
    let plm = assoc_legendre(l, ma, theta.cos());
    let base = norm * plm * Complex64::from_polar(1.0, ma as f64 * phi);
    if m >= 0 {
        base
    } else {
        let conj = base.conj();
        if ma % 2 == 0 {
            conj
        } else {
            -conj
        }
    }
}

/// Spin-angle function as a 2x2 complex matrix: the Clebsch-Gordan
/// contraction of spin matrices with spherical harmonics for total `F`.
pub fn spin_angle_value(f: i32, m_f: i32, l: i32, s: i32, theta: f64, phi: f64) -> Result<Array2<Complex64>> {
    if !(s == 0 || s == 1) {
        return Err(Error::Domain(format!("spin S = {s} not in {{0, 1}}")));
    }
    if f < (l - s).abs() || f > l + s {
        return Err(Error::Domain(format!("triangle rule violated: |L-S| <= F <= L+S for L={l}, S={s}, F={f}")));
    }
    if m_f.abs() > f {
        return Err(Error::Domain(format!("|mF| = {} > F = {f}", m_f.abs())));
    }
    let mut out = Array2::zeros((2, 2));
    for m_l in -l..=l {
        let m_s = m_f - m_l;
        if m_s.abs() > s {
            continue;
        }
        let cg = cg_int(l, m_l, s, m_s, f, m_f);
        if cg == 0.0 {
            continue;
        }
        let y = sph_harm(l, m_l, theta, phi);
        let phi_m = spin_matrix(s, m_s)?;
        for r in 0..2 {
            for c in 0..2 {
                out[(r, c)] += cg * y * phi_m[(r, c)];
            }
        }
    }
    Ok(out)
}

/// `sigma . phat` for the direction `(theta, phi)` as a 2x2 matrix.
pub fn sigma_dot_unit(theta: f64, phi: f64) -> Array2<Complex64> {
    let (st, ct) = (theta.sin(), theta.cos());
    let mut m = Array2::zeros((2, 2));
    m[(0, 0)] = Complex64::new(ct, 0.0);
    m[(0, 1)] = Complex64::from_polar(st, -phi);
    m[(1, 0)] = Complex64::from_polar(st, phi);
    m[(1, 1)] = Complex64::new(-ct, 0.0);
    m
}

// ---------------------------------------------------------------------------
// Coupling tables for sigma . phat
// ---------------------------------------------------------------------------

/// Which side `sigma . phat` acts on: `Left` is the plain action (the `C`
/// coefficients), `Right` is right-multiplication by the transpose (the
/// `C^T` coefficients).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Expansion coefficients of `sigma . phat` acting on the spin-angle
/// functions of a fixed `(F, mF)` sector. Entries obey the pseudo-scalar
/// selection rule `|L - L'| = 1`; all channels with `S in {0, 1}`
/// contributing to `F` are tabulated.
#[derive(Debug, Clone)]
pub struct CouplingTable {
    pub f: i32,
    pub m_f: i32,
    pub side: Side,
    entries: BTreeMap<(i32, i32), Vec<(i32, i32, f64)>>,
}

/// All `(L, S)` channels with total angular momentum `F`.
pub fn channels(f: i32) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for s in 0..=1 {
        for l in (f - s).max(0)..=(f + s) {
            if (l - s).abs() <= f && f <= l + s {
                out.push((l, s));
            }
        }
    }
    out
}

/// Spherical components of the Pauli vector, real in this basis.
fn sigma_spherical(q: i32) -> Array2<f64> {
    let sq2 = std::f64::consts::SQRT_2;
    match q {
        1 => Array2::from_shape_vec((2, 2), vec![0.0, -sq2, 0.0, 0.0]).unwrap(),
        0 => Array2::from_shape_vec((2, 2), vec![1.0, 0.0, 0.0, -1.0]).unwrap(),
        -1 => Array2::from_shape_vec((2, 2), vec![0.0, 0.0, sq2, 0.0]).unwrap(),
        _ => unreachable!(),
    }
}

/// Matrix element of `sigma^1_q` between spin matrices, acting on the
/// first constituent (left) or the second (right, transposed).
fn spin_action(q: i32, s: i32, m_s: i32, s_p: i32, side: Side) -> f64 {
    let m_sp = m_s + q;
    if m_s.abs() > s || m_sp.abs() > s_p {
        return 0.0;
    }
    let phi_in = spin_matrix(s, m_s).expect("validated");
    let phi_out = spin_matrix(s_p, m_sp).expect("validated");
    let sig = sigma_spherical(q);
    let mut tr = 0.0;
    match side {
        Side::Left => {
            // Tr[phi_out^T . sigma_q . phi_in]
            for a in 0..2 {
                for b in 0..2 {
                    for ap in 0..2 {
                        tr += phi_out[(a, b)] * sig[(a, ap)] * phi_in[(ap, b)];
                    }
                }
            }
        }
        Side::Right => {
            // Tr[phi_out^T . phi_in . sigma_q^T]
            for a in 0..2 {
                for b in 0..2 {
                    for bp in 0..2 {
                        tr += phi_out[(a, b)] * phi_in[(a, bp)] * sig[(b, bp)];
                    }
                }
            }
        }
    }
    tr
}

/// Single coefficient `C^{F mF}_{LS L'S'}` (or the transposed-side
/// analogue) from the spherical-component expansion of `sigma . phat`.
fn coupling_coefficient(f: i32, m_f: i32, l: i32, s: i32, l_p: i32, s_p: i32, side: Side) -> f64 {
    if (l - l_p).abs() != 1 {
        return 0.0;
    }
    let mut total = 0.0;
    for m_l in -l..=l {
        let m_s = m_f - m_l;
        if m_s.abs() > s {
            continue;
        }
        let cg_in = cg_int(l, m_l, s, m_s, f, m_f);
        if cg_in == 0.0 {
            continue;
        }
        for q in -1..=1 {
            let m_sp = m_s + q;
            if m_sp.abs() > s_p || (m_l - q).abs() > l_p {
                continue;
            }
            let spin = spin_action(q, s, m_s, s_p, side);
            if spin == 0.0 {
                continue;
            }
            // C^1_{-q} Y_{L mL} -> sqrt((2L+1)/(2L'+1)) <1 L;0 0|L' 0><1 L;-q mL|L' mL-q> Y_{L' mL-q}
            let orb = ((2 * l + 1) as f64 / (2 * l_p + 1) as f64).sqrt()
                * cg_int(1, 0, l, 0, l_p, 0)
                * cg_int(1, -q, l, m_l, l_p, m_l - q);
            if orb == 0.0 {
                continue;
            }
            let cg_out = cg_int(l_p, m_l - q, s_p, m_sp, f, m_f);
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * cg_in * spin * orb * cg_out;
        }
    }
    total
}

impl CouplingTable {
    /// Coefficient for `(L, S) -> (L', S')`; zero when absent.
    pub fn get(&self, l: i32, s: i32, l_p: i32, s_p: i32) -> f64 {
        self.entries
            .get(&(l, s))
            .and_then(|v| v.iter().find(|(a, b, _)| *a == l_p && *b == s_p))
            .map(|(_, _, c)| *c)
            .unwrap_or(0.0)
    }

    /// All target channels coupled to `(L, S)`.
    pub fn row(&self, l: i32, s: i32) -> &[(i32, i32, f64)] {
        self.entries.get(&(l, s)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn channels(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        self.entries.keys().copied()
    }

    /// Plain-text dump, one entry per line: `F mF L S L' S' value`
    /// with 17 significant digits.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let side = match self.side {
            Side::Left => "left",
            Side::Right => "right",
        };
        out.push_str(&format!("# F={} mF={} side={side}: F mF L S L' S' C\n", self.f, self.m_f));
        for ((l, s), row) in &self.entries {
            for (l_p, s_p, c) in row {
                out.push_str(&format!("{} {} {} {} {} {} {:.17e}\n", self.f, self.m_f, l, s, l_p, s_p, c));
            }
        }
        out
    }
}

type TableCache = Mutex<BTreeMap<(i32, i32, bool), Arc<CouplingTable>>>;

fn table_cache() -> &'static TableCache {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(BTreeMap::new()))
}

/// Build (or fetch from the per-process cache) the coupling table for
/// one `(F, mF)` sector and side.
pub fn build_coupling_table(f: i32, m_f: i32, side: Side) -> Result<Arc<CouplingTable>> {
    if f < 0 {
        return Err(Error::Domain(format!("negative F = {f}")));
    }
    if m_f.abs() > f {
        return Err(Error::Domain(format!("|mF| = {} > F = {f}", m_f.abs())));
    }
    let key = (f, m_f, side == Side::Right);
    if let Some(t) = table_cache().lock().unwrap().get(&key) {
        return Ok(t.clone());
    }
    let chans = channels(f);
    let mut entries = BTreeMap::new();
    for &(l, s) in &chans {
        let mut row = Vec::new();
        for &(l_p, s_p) in &chans {
            if (l - l_p).abs() != 1 {
                continue;
            }
            let c = coupling_coefficient(f, m_f, l, s, l_p, s_p, side);
            row.push((l_p, s_p, c));
        }
        entries.insert((l, s), row);
    }
    let table = Arc::new(CouplingTable { f, m_f, side, entries });
    table_cache().lock().unwrap().insert(key, table.clone());
    Ok(table)
}

/// Per-identity maximum deviations for the coupling-coefficient sum
/// rules: three sign relations between the two sides, the symmetry of
/// each table, and the two completeness sums.
#[derive(Debug, Clone)]
pub struct SumRuleReport {
    pub sign_s0: f64,
    pub sign_s1_to_s0: f64,
    pub sign_s1_to_s1: f64,
    pub symmetry: f64,
    pub completeness_left: f64,
    pub completeness_right: f64,
    pub tolerance: f64,
}

impl SumRuleReport {
    pub fn max_deviation(&self) -> f64 {
        [
            self.sign_s0,
            self.sign_s1_to_s0,
            self.sign_s1_to_s1,
            self.symmetry,
            self.completeness_left,
            self.completeness_right,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn pass(&self) -> bool {
        self.max_deviation() <= self.tolerance
    }
}

/// Check the six sum-rule identities for the `(F, mF)` sector of the
/// given table (the opposite side is fetched internally).
pub fn verify_sum_rules(table: &CouplingTable) -> Result<SumRuleReport> {
    let left = match table.side {
        Side::Left => Arc::new(table.clone()),
        Side::Right => build_coupling_table(table.f, table.m_f, Side::Left)?,
    };
    let right = match table.side {
        Side::Right => Arc::new(table.clone()),
        Side::Left => build_coupling_table(table.f, table.m_f, Side::Right)?,
    };
    let chans = channels(table.f);
    let mut report = SumRuleReport {
        sign_s0: 0.0,
        sign_s1_to_s0: 0.0,
        sign_s1_to_s1: 0.0,
        symmetry: 0.0,
        completeness_left: 0.0,
        completeness_right: 0.0,
        tolerance: 1e-14,
    };
    for &(l, s) in &chans {
        for &(l_p, s_p) in &chans {
            let c = left.get(l, s, l_p, s_p);
            let ct = right.get(l, s, l_p, s_p);
            match (s, s_p) {
                (0, _) => report.sign_s0 = report.sign_s0.max((c + ct).abs()),
                (1, 0) => report.sign_s1_to_s0 = report.sign_s1_to_s0.max((c + ct).abs()),
                (1, 1) => report.sign_s1_to_s1 = report.sign_s1_to_s1.max((c - ct).abs()),
                _ => unreachable!(),
            }
            report.symmetry = report
                .symmetry
                .max((left.get(l, s, l_p, s_p) - left.get(l_p, s_p, l, s)).abs())
                .max((right.get(l, s, l_p, s_p) - right.get(l_p, s_p, l, s)).abs());
            // Completeness: sum_{L''S''} C(LS -> L''S'') C(L''S'' -> L'S') = delta.
            let delta = if l == l_p && s == s_p { 1.0 } else { 0.0 };
            let mut acc_l = 0.0;
            let mut acc_r = 0.0;
            for &(l_m, s_m) in &chans {
                acc_l += left.get(l, s, l_m, s_m) * left.get(l_m, s_m, l_p, s_p);
                acc_r += right.get(l, s, l_m, s_m) * right.get(l_m, s_m, l_p, s_p);
            }
            report.completeness_left = report.completeness_left.max((acc_l - delta).abs());
            report.completeness_right = report.completeness_right.max((acc_r - delta).abs());
        }
    }
    Ok(report)
}

/// Per-`L` contracted weights entering the radial equations of one
/// `(F, mF, L, S)` channel: the squared right-side coefficients on the
/// upper equation's small term, the squared left-side coefficients on
/// the lower equation's leading term, and the quadruple contraction on
/// the lower equation's small term.
#[derive(Debug, Clone)]
pub struct ChannelWeights {
    pub g_small: BTreeMap<i32, f64>,
    pub h_big: BTreeMap<i32, f64>,
    pub h_small: BTreeMap<i32, f64>,
}

pub fn channel_weights(f: i32, m_f: i32, l: i32, s: i32) -> Result<ChannelWeights> {
    let left = build_coupling_table(f, m_f, Side::Left)?;
    let right = build_coupling_table(f, m_f, Side::Right)?;
    if !channels(f).contains(&(l, s)) {
        return Err(Error::Domain(format!("channel (L={l}, S={s}) does not couple to F={f}")));
    }
    let mut g_small = BTreeMap::new();
    let mut h_big = BTreeMap::new();
    for &(l_p, s_p, ct) in right.row(l, s) {
        let _ = s_p;
        if ct != 0.0 {
            *g_small.entry(l_p).or_insert(0.0) += ct * ct;
        }
    }
    for &(l_p, _s_p, c) in left.row(l, s) {
        if c != 0.0 {
            *h_big.entry(l_p).or_insert(0.0) += c * c;
        }
    }
    let mut h_small = BTreeMap::new();
    for &(l1, s1, c1) in left.row(l, s) {
        for &(l2, s2, t1) in right.row(l1, s1) {
            for &(l3, s3, t2) in right.row(l2, s2) {
                let c2 = left.get(l, s, l3, s3);
                let w = c1 * t1 * t2 * c2;
                if w != 0.0 {
                    *h_small.entry(l2).or_insert(0.0) += w;
                }
            }
        }
    }
    // Drop numerically-zero accumulations so kernels are only built for
    // the L values that actually contribute.
    g_small.retain(|_, v| v.abs() > 1e-15);
    h_big.retain(|_, v| v.abs() > 1e-15);
    h_small.retain(|_, v| v.abs() > 1e-15);
    Ok(ChannelWeights { g_small, h_big, h_small })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn am(tj: i32, tm: i32) -> AngularMomentum {
        AngularMomentum::new(tj, tm).unwrap()
    }

    #[test]
    fn singlet_and_stretched_cg() {
        // <1/2 1/2; 1/2 -1/2 | 0 0> = 1/sqrt(2)
        let v = clebsch_gordan(am(1, 1), am(1, -1), am(0, 0));
        assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
        // <1/2 1/2; 1/2 1/2 | 1 1> = 1
        let v = clebsch_gordan(am(1, 1), am(1, 1), am(2, 2));
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cg_exact_value_is_rational_square() {
        // <1 1/2; 0 1/2 | 3/2 1/2> = sqrt(2/3)
        let v = clebsch_gordan_exact(am(2, 0), am(1, 1), am(3, 1));
        // signed square is exactly 2/3
        let expect = Ratio::new(BigInt::from(2), BigInt::from(3));
        assert_eq!(*v.signed_square(), expect);
        assert!((v.to_f64() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    // Independent oracle: the three-term recursion in M, seeded from the
    // stretched state, checked against the Racah-sum implementation.
    #[test]
    fn cg_matches_recursion_oracle() {
        // J(J+1) - m(m±1) ladder relation:
        // C_-(J,M) <j1 j2; m1 m2|J M-1> = C_-(j1,m1+1) <m1+1, m2|J M> + C_-(j2,m2+1) <m1, m2+1|J M>
        let cm = |tj: i32, tm: i32| {
            let j = tj as f64 / 2.0;
            let m = tm as f64 / 2.0;
            (j * (j + 1.0) - m * (m - 1.0)).sqrt()
        };
        for tj1 in 0..=5 {
            for tj2 in 0..=5 {
                for tj in (tj1 - tj2).abs()..=(tj1 + tj2) {
                    if (tj1 + tj2 + tj) % 2 != 0 {
                        continue;
                    }
                    for tm in (-tj..tj).step_by(2) {
                        // build both sides of the lowering relation
                        for tm1 in -tj1..=tj1 {
                            if (tm1 - tj1) % 2 != 0 {
                                continue;
                            }
                            let tm2 = tm - tm1;
                            if tm2.abs() > tj2 {
                                continue;
                            }
                            let lhs = cm(tj, tm + 2)
                                * clebsch_gordan(am(tj1, tm1), am(tj2, tm2), am(tj, tm));
                            let mut rhs = 0.0;
                            if tm1 + 2 <= tj1 {
                                rhs += cm(tj1, tm1 + 2)
                                    * clebsch_gordan(am(tj1, tm1 + 2), am(tj2, tm2), am(tj, tm + 2));
                            }
                            if tm2 + 2 <= tj2 {
                                rhs += cm(tj2, tm2 + 2)
                                    * clebsch_gordan(am(tj1, tm1), am(tj2, tm2 + 2), am(tj, tm + 2));
                            }
                            assert!(
                                (lhs - rhs).abs() < 1e-13,
                                "lowering relation failed: 2j=({tj1},{tj2},{tj}), 2m=({tm1},{tm2},{tm})"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cg_orthogonality() {
        // sum_{m1 m2} <j1 j2; m1 m2|J M><j1 j2; m1 m2|J' M'> = delta
        for tj1 in 0..=5 {
            for tj2 in 0..=5 {
                for tja in (tj1 - tj2).abs()..=(tj1 + tj2) {
                    for tjb in (tj1 - tj2).abs()..=(tj1 + tj2) {
                        if (tj1 + tj2 + tja) % 2 != 0 || (tj1 + tj2 + tjb) % 2 != 0 {
                            continue;
                        }
                        for tma in (-tja..=tja).step_by(2) {
                            for tmb in (-tjb..=tjb).step_by(2) {
                                let mut acc = 0.0;
                                for tm1 in -tj1..=tj1 {
                                    if (tm1 - tj1) % 2 != 0 {
                                        continue;
                                    }
                                    let tm2a = tma - tm1;
                                    let tm2b = tmb - tm1;
                                    if tm2a.abs() > tj2 || tm2a != tm2b {
                                        continue;
                                    }
                                    acc += clebsch_gordan(am(tj1, tm1), am(tj2, tm2a), am(tja, tma))
                                        * clebsch_gordan(am(tj1, tm1), am(tj2, tm2a), am(tjb, tmb));
                                }
                                let delta = if tja == tjb && tma == tmb { 1.0 } else { 0.0 };
                                assert!((acc - delta).abs() < 1e-13);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_unphysical_m() {
        assert!(AngularMomentum::new(1, 3).is_err());
        assert!(AngularMomentum::new(2, 1).is_err());
        assert!(AngularMomentum::new(-2, 0).is_err());
    }

    #[test]
    fn spin_angle_s_wave_is_constant() {
        let y = spin_angle_value(0, 0, 0, 0, 1.234, 0.567).unwrap();
        let phi00 = spin_matrix(0, 0).unwrap();
        let norm = 1.0 / (4.0 * std::f64::consts::PI).sqrt();
        for r in 0..2 {
            for c in 0..2 {
                assert!((y[(r, c)] - norm * phi00[(r, c)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn spin_angle_rejects_bad_spin() {
        assert!(spin_angle_value(2, 0, 2, 2, 0.3, 0.4).is_err());
    }

    #[test]
    fn f0_couples_s_channel_entirely_to_p() {
        let right = build_coupling_table(0, 0, Side::Right).unwrap();
        let row = right.row(0, 0);
        let mut total = 0.0;
        for &(l_p, s_p, c) in row {
            assert_eq!((l_p, s_p), (1, 1), "only (L'=1, S'=1) may couple to (0,0)");
            total += c * c;
        }
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn completeness_for_all_channels_up_to_f3() {
        for f in 0..=3 {
            for m_f in -f..=f {
                let left = build_coupling_table(f, m_f, Side::Left).unwrap();
                let report = verify_sum_rules(&left).unwrap();
                assert!(report.pass(), "sum rules failed for F={f}, mF={m_f}: {report:?}");
                for (l, s) in channels(f) {
                    let sum: f64 = left.row(l, s).iter().map(|(_, _, c)| c * c).sum();
                    assert!((sum - 1.0).abs() < 1e-14, "row norm failed for F={f} (L={l},S={s})");
                }
            }
        }
    }

    #[test]
    fn injected_fault_fails_symmetry() {
        let table = build_coupling_table(1, 0, Side::Left).unwrap();
        let mut bad = (*table).clone();
        let key = *bad.entries.keys().next().unwrap();
        bad.entries.get_mut(&key).unwrap()[0].2 *= -1.0;
        let report = verify_sum_rules(&bad).unwrap();
        assert!(!report.pass());
        assert!(report.symmetry > 1e-3);
    }

    #[test]
    fn s_wave_triplet_weights() {
        // (L=0, S=1) in F=1: lower-equation small term carries 1/9 on V_0
        // and 8/9 on V_2.
        let w = channel_weights(1, 1, 0, 1).unwrap();
        assert!((w.h_small.get(&0).copied().unwrap_or(0.0) - 1.0 / 9.0).abs() < 1e-14);
        assert!((w.h_small.get(&2).copied().unwrap_or(0.0) - 8.0 / 9.0).abs() < 1e-14);
        assert!((w.g_small.get(&1).copied().unwrap_or(0.0) - 1.0).abs() < 1e-14);
        assert!((w.h_big.get(&1).copied().unwrap_or(0.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn s_wave_singlet_weights() {
        let w = channel_weights(0, 0, 0, 0).unwrap();
        assert!((w.g_small.get(&1).copied().unwrap_or(0.0) - 1.0).abs() < 1e-14);
        assert!((w.h_big.get(&1).copied().unwrap_or(0.0) - 1.0).abs() < 1e-14);
        assert!((w.h_small.get(&0).copied().unwrap_or(0.0) - 1.0).abs() < 1e-14);
        assert_eq!(w.h_small.len(), 1);
    }

    #[test]
    fn weights_are_mf_independent() {
        for f in 1..=3 {
            for (l, s) in channels(f) {
                let base = channel_weights(f, f, l, s).unwrap();
                for m_f in -f..f {
                    let w = channel_weights(f, m_f, l, s).unwrap();
                    for (k, v) in &base.g_small {
                        assert!((w.g_small[k] - v).abs() < 1e-13);
                    }
                    for (k, v) in &base.h_big {
                        assert!((w.h_big[k] - v).abs() < 1e-13);
                    }
                    for (k, v) in &base.h_small {
                        assert!((w.h_small[k] - v).abs() < 1e-13);
                    }
                }
            }
        }
    }
}
