//! Quadrature utilities: Gauss-Legendre rules, adaptive Gauss-Kronrod
//! integration, and a product rule on the unit sphere.

use crate::{Error, Result};

/// Legendre polynomial `P_l(x)` by the three-term recursion.
pub fn legendre_p(l: i32, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let mut pm = 1.0;
            let mut p = x;
            for k in 2..=l {
                let next = (((2 * k - 1) as f64) * x * p - ((k - 1) as f64) * pm) / k as f64;
                pm = p;
                p = next;
            }
            p
        }
    }
}

/// Gauss-Legendre nodes and weights on `(-1, 1)`, Newton iteration on
/// the roots of `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut pm = 1.0;
            let mut p = x;
            for k in 2..=n {
                let next = (((2 * k - 1) as f64) * x * p - ((k - 1) as f64) * pm) / k as f64;
                pm = p;
                p = next;
            }
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let fsum = f(c - x) + f(c + x);
        kronrod += WGK[i] * fsum;
        if i % 2 == 1 {
            gauss += WG[i / 2] * fsum;
        }
    }
    kronrod *= h;
    gauss *= h;
    (kronrod, (kronrod - gauss).abs())
}

/// Adaptive Gauss-Kronrod integration of `f` on `[a, b]` to the given
/// absolute tolerance, by recursive bisection of the worst interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    // (neg_err, a, b, value) max-heap on error via sorted insertion
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(e, a, b, v)];
    let mut total_err = e;
    let mut total = v;
    for _ in 0..10_000 {
        if total_err <= tol || total_err <= 1e-15 * total.abs() {
            return Ok(total);
        }
        // split the interval with the largest error estimate
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
            .expect("nonempty");
        let (err, ia, ib, iv) = intervals.swap_remove(idx);
        let mid = 0.5 * (ia + ib);
        if mid <= ia || mid >= ib {
            // interval at floating-point resolution; accept its value
            total_err -= err;
            total = intervals.iter().map(|t| t.3).sum::<f64>() + iv;
            intervals.push((0.0, ia, ib, iv));
            continue;
        }
        let (v1, e1) = gk15(&f, ia, mid);
        let (v2, e2) = gk15(&f, mid, ib);
        total += v1 + v2 - iv;
        total_err += e1 + e2 - err;
        intervals.push((e1, ia, mid, v1));
        intervals.push((e2, mid, ib, v2));
    }
    Err(Error::Quadrature(format!(
        "adaptive integration did not reach tol {tol:.2e} on [{a}, {b}] (err {total_err:.2e})"
    )))
}

/// Integral of `f` over `[a, inf)` via the rational substitution
/// `x = a + t/(1-t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<f64> {
    integrate(
        |t| {
            let omt = 1.0 - t;
            f(a + t / omt) / (omt * omt)
        },
        0.0,
        1.0,
        tol,
    )
}

/// Product quadrature on the unit sphere: Gauss-Legendre in `cos(theta)`
/// crossed with a uniform rule in `phi`. Exact for spherical harmonics
/// up to degree `2n - 1`.
pub fn sphere_rule(n: usize) -> Vec<(f64, f64, f64)> {
    let (xs, ws) = gauss_legendre(n);
    let n_phi = 2 * n.max(1);
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut out = Vec::with_capacity(n * n_phi);
    for (x, w) in xs.iter().zip(&ws) {
        let theta = x.acos();
        for k in 0..n_phi {
            out.push((theta, k as f64 * dphi, w * dphi));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (xs, ws) = gauss_legendre(8);
        // degree 15 polynomial x^14 integrates to 2/15
        let s: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let s: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(15)).sum();
        assert!(s.abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_log_endpoint_singularity() {
        // int_0^1 ln(x) dx = -1
        let v = integrate(|x| x.max(1e-300).ln(), 0.0, 1.0, 1e-11).unwrap();
        assert!((v + 1.0).abs() < 1e-9);
    }

    #[test]
    fn semi_infinite_exponential() {
        let v = integrate_to_infinity(|x| (-x).exp(), 0.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
    }

    #[test]
    fn sphere_rule_integrates_harmonics() {
        use crate::angular::sph_harm;
        let rule = sphere_rule(8);
        let mut s00 = num_complex::Complex64::new(0.0, 0.0);
        let mut s22 = num_complex::Complex64::new(0.0, 0.0);
        for &(th, ph, w) in &rule {
            s00 += w * sph_harm(2, 1, th, ph) * sph_harm(2, 1, th, ph).conj();
            s22 += w * sph_harm(2, 1, th, ph) * sph_harm(3, 1, th, ph).conj();
        }
        assert!((s00.re - 1.0).abs() < 1e-13);
        assert!(s22.norm() < 1e-13);
    }
}
