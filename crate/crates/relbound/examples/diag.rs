//! Scratch diagnostics for tuning the acceptance suite: subtraction
//! convergence, Dirac-limit deviation, wave-function difference shape,
//! and mass-interchange spreads. Not part of the test suite.

use std::sync::Arc;

use relbound::kernel::{build_grid, build_kernel, coulomb_partial_wave, lande_subtraction, Mapping};
use relbound::quad;
use relbound::reference::{dirac_coulomb_energy, dirac_reference_wavefunction};
use relbound::solver::{
    assemble_with, bound_eigenvalues, default_window, normalize, select_state, solve_bound_states,
    NormConvention, QuantumState, TwoBodySystem,
};
use relbound::{ALPHA, M_ELECTRON, M_PROTON};

fn ground() -> QuantumState {
    QuantumState::new(1, 0, 0, 0, 0).unwrap()
}

fn ladder(system: &TwoBodySystem, state: &QuantumState, n_grid: usize) -> Vec<f64> {
    let grid =
        Arc::new(build_grid(n_grid, Mapping::Rational { scale: system.bohr_momentum() }).unwrap());
    let op = assemble_with(system, state, &grid, true).unwrap();
    bound_eigenvalues(&op, default_window()).unwrap()
}

fn subtraction_convergence() {
    println!("== subtraction error vs N ==");
    let measure = |pp: f64| pp * pp / (1.0 + pp * pp).sqrt();
    let f = |pp: f64| (-pp * pp).exp();
    for n in [200usize, 400, 800, 1200, 1600] {
        let grid = build_grid(n, Mapping::Rational { scale: 1.0 }).unwrap();
        let kernel = build_kernel(0, &grid).unwrap();
        let sub = lande_subtraction(&kernel, &grid, measure).unwrap();
        let fv: Vec<f64> = grid.nodes().iter().map(|&x| f(x)).collect();
        let applied = sub.apply(&fv);
        print!("N={n}:");
        for frac in [0.1, 0.4, 0.7] {
            let row = (n as f64 * frac) as usize;
            let p = grid.nodes()[row];
            let integrand = |pp: f64| {
                if (pp - p).abs() < 1e-14 {
                    0.0
                } else {
                    measure(pp) * coulomb_partial_wave(0, p, pp).unwrap() * f(pp)
                }
            };
            let oracle = quad::integrate(&integrand, 0.0, p, 1e-12).unwrap()
                + quad::integrate(&integrand, p, 8.0 * p.max(4.0), 1e-12).unwrap()
                + quad::integrate_to_infinity(&integrand, 8.0 * p.max(4.0), 1e-12).unwrap();
            let rel = ((applied[row] - oracle) / oracle).abs();
            print!("  frac {frac}: {rel:.3e}");
        }
        println!();
    }
}

fn dirac_limit() {
    println!("== dirac limit, m2 = 1e6 m1, N=800 ==");
    let heavy = TwoBodySystem::new(M_ELECTRON, 1e6 * M_ELECTRON, ALPHA, "heavy").unwrap();
    let e = ladder(&heavy, &ground(), 800)[0];
    let exact = dirac_coulomb_energy(1, 1, 1.0, ALPHA).unwrap();
    let mu = 1e6 / (1e6 + 1.0);
    let exact_mu = dirac_coulomb_energy(1, 1, mu, ALPHA).unwrap();
    println!("e        = {e:.15e}");
    println!("dirac m1 = {exact:.15e}  rel {:.6e}", ((e - exact) / exact).abs());
    println!("dirac mu = {exact_mu:.15e}  rel {:.6e}", ((e - exact_mu) / exact_mu).abs());
}

fn shape(n_grid: usize) {
    println!("== wave-function shape, N={n_grid} ==");
    for sys in [
        TwoBodySystem::new(M_ELECTRON, M_PROTON, ALPHA, "hydrogen-e").unwrap(),
        TwoBodySystem::new(relbound::M_MUON, M_PROTON, ALPHA, "hydrogen-mu").unwrap(),
    ] {
        let grid =
            Arc::new(build_grid(n_grid, Mapping::Rational { scale: sys.bohr_momentum() }).unwrap());
        let op = assemble_with(&sys, &ground(), &grid, true).unwrap();
        let sols = solve_bound_states(&op, default_window()).unwrap();
        let sol = select_state(&sols, 1, 0).unwrap();
        let sol = normalize(&sol, NormConvention::DiscreteL2).unwrap();
        let mu = sys.reduced_mass() / sys.m1();
        let dirac = dirac_reference_wavefunction(mu, &ground(), sys.alpha(), &grid).unwrap();
        let diff: Vec<f64> = sol.g.iter().zip(&dirac.g).map(|(a, b)| a - b).collect();
        let g_max = sol.g.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let d_max = diff.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let live: Vec<usize> =
            (0..diff.len()).filter(|&i| sol.g[i].abs() > 1e-3 * g_max).collect();
        println!("{}: d_max/g_max = {:.3e}, live rows {}..{}", sys.label, d_max / g_max,
            live.first().unwrap(), live.last().unwrap());
        let mut crossings = Vec::new();
        for w in live.windows(2) {
            if diff[w[0]].signum() != diff[w[1]].signum() {
                crossings.push(w[1]);
            }
        }
        println!("  sign crossings at rows {crossings:?}");
        for &i in live.iter().take(8) {
            println!("  row {i}: p/lam = {:.3}, diff/d_max = {:+.3e}", grid.nodes()[i] / sys.bohr_momentum(), diff[i] / d_max);
        }
        let tail: Vec<usize> = live.iter().rev().take(4).copied().collect();
        for &i in tail.iter().rev() {
            println!("  row {i}: p/lam = {:.3}, diff/d_max = {:+.3e}", grid.nodes()[i] / sys.bohr_momentum(), diff[i] / d_max);
        }
    }
}

fn dirac_reference_convergence() {
    println!("== one-body limit operator vs closed form ==");
    let exact = dirac_coulomb_energy(1, 1, 1.0, ALPHA).unwrap();
    for n in [400usize, 800, 1600] {
        let grid = Arc::new(build_grid(n, Mapping::Rational { scale: ALPHA }).unwrap());
        let e = relbound::reference::dirac_limit_energy(1.0, &ground(), ALPHA, &grid).unwrap();
        println!("N={n}: {e:.15e}  rel {:.6e}", ((e - exact) / exact).abs());
    }
    println!("== two-body heavy limit convergence ==");
    let heavy = TwoBodySystem::new(M_ELECTRON, 1e6 * M_ELECTRON, ALPHA, "heavy").unwrap();
    for n in [400usize, 800, 1600] {
        let e = ladder(&heavy, &ground(), n)[0];
        println!("N={n}: {e:.15e}  rel {:.6e}", ((e - exact) / exact).abs());
    }
}

fn matrix_compare() {
    println!("== two-body (xi=1e6) vs one-body limit matrices, N=100 ==");
    let n = 100usize;
    let grid = Arc::new(build_grid(n, Mapping::Rational { scale: ALPHA }).unwrap());
    let heavy = TwoBodySystem::new(M_ELECTRON, 1e6 * M_ELECTRON, ALPHA, "heavy").unwrap();
    let two = assemble_with(&heavy, &ground(), &grid, true).unwrap();
    let one = relbound::reference::dirac_limit_operator(1.0, &ground(), ALPHA, &grid).unwrap();
    let blocks = [("gg", 0, 0), ("gh", 0, n), ("hg", n, 0), ("hh", n, n)];
    for (name, r0, c0) in blocks {
        let mut worst = 0.0f64;
        let mut at = (0usize, 0usize);
        let mut scale = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let a = two.matrix[(r0 + i, c0 + j)];
                let b = one.matrix[(r0 + i, c0 + j)];
                scale = scale.max(b.abs());
                if (a - b).abs() > worst {
                    worst = (a - b).abs();
                    at = (i, j);
                }
            }
        }
        let (i, j) = at;
        println!(
            "{name}: max |diff| = {worst:.6e} at ({i},{j}) [two {:.9e} vs one {:.9e}], block scale {scale:.3e}",
            two.matrix[(r0 + i, c0 + j)],
            one.matrix[(r0 + i, c0 + j)]
        );
    }
}

fn perturbation() {
    println!("== eigenvalue-weighted block perturbations, N=400 ==");
    let n = 400usize;
    let grid = Arc::new(build_grid(n, Mapping::Rational { scale: ALPHA }).unwrap());
    let heavy = TwoBodySystem::new(M_ELECTRON, 1e6 * M_ELECTRON, ALPHA, "heavy").unwrap();
    let two = assemble_with(&heavy, &ground(), &grid, true).unwrap();
    let one = relbound::reference::dirac_limit_operator(1.0, &ground(), ALPHA, &grid).unwrap();
    let sols = solve_bound_states(&one, relbound::reference::dirac_window(1.0)).unwrap();
    let sol = select_state(&sols, 1, 0).unwrap();
    // quadrature-weighted inner products: <u|Delta|u> / <u|u> per block,
    // with u = (g, h) and the p^2 w measure
    let w = grid.weights();
    let p = grid.nodes();
    let mut u = vec![0.0f64; 2 * n];
    for i in 0..n {
        let m = (w[i] * p[i] * p[i]).sqrt();
        u[i] = sol.g[i] * m;
        u[n + i] = sol.h[i] * m;
    }
    // first-order shift in the balanced (near-symmetric) frame:
    // num = sum_IJ d(I)^2 u_I Delta_IJ u_J, den = sum_I d(I)^2 u_I^2,
    // with d_i^2 = w_i p_i^2 and u the raw (g, h) samples
    for i in 0..n {
        u[i] = sol.g[i];
        u[n + i] = sol.h[i];
    }
    let d2 = |idx: usize| {
        let i = idx % n;
        w[i] * p[i] * p[i]
    };
    let den: f64 = (0..2 * n).map(|i| d2(i) * u[i] * u[i]).sum();
    let blocks = [("gg", 0, 0), ("gh", 0, n), ("hg", n, 0), ("hh", n, n)];
    let mut total = 0.0;
    for (name, r0, c0) in blocks {
        let mut acc = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let d = two.matrix[(r0 + i, c0 + j)] - one.matrix[(r0 + i, c0 + j)];
                acc += d2(r0 + i) * u[r0 + i] * d * u[c0 + j];
            }
        }
        acc /= den;
        total += acc;
        println!("{name}: shift = {acc:+.6e}");
    }
    println!("total {total:+.6e} vs observed offset {:+.6e}", 3.03e-9);
    // localize the gg shift: diagonal vs off-diagonal, and by row momentum
    let mut diag_acc = 0.0f64;
    let mut off_acc = 0.0f64;
    let mut by_row = vec![0.0f64; n];
    for i in 0..n {
        for j in 0..n {
            let d = two.matrix[(i, j)] - one.matrix[(i, j)];
            let c = d2(i) * u[i] * d * u[j] / den;
            by_row[i] += c;
            if i == j {
                diag_acc += c;
            } else {
                off_acc += c;
            }
        }
    }
    println!("gg diagonal {diag_acc:+.6e}, off-diagonal {off_acc:+.6e}");
    for i in (0..n).step_by(40) {
        println!("  row {i}: p/alpha = {:8.3}, cum contribution {:+.3e}", p[i] / ALPHA, by_row[i]);
    }
    let imax = (0..n).max_by(|&a, &b| by_row[a].abs().partial_cmp(&by_row[b].abs()).unwrap()).unwrap();
    println!("  dominant row {imax}: p/alpha = {:.3}, contribution {:+.3e}, Dgg_ii = {:+.6e}",
        p[imax] / ALPHA, by_row[imax], two.matrix[(imax, imax)] - one.matrix[(imax, imax)]);
}

fn gg_decompose() {
    println!("== gg diagonal decomposition at xi = 1e6, N=400 ==");
    let n = 400usize;
    let xi = 1e6f64;
    let grid = Arc::new(build_grid(n, Mapping::Rational { scale: ALPHA }).unwrap());
    let heavy = TwoBodySystem::new(M_ELECTRON, 1e6 * M_ELECTRON, ALPHA, "heavy").unwrap();
    let two = assemble_with(&heavy, &ground(), &grid, true).unwrap();
    let one = relbound::reference::dirac_limit_operator(1.0, &ground(), ALPHA, &grid).unwrap();
    let p = grid.nodes();
    let c_int = ALPHA / std::f64::consts::PI.powi(3);
    let kernel = build_kernel(0, &grid).unwrap();
    let e2 = |pp: f64| (pp * pp + xi * xi).sqrt();
    let m_e = move |pp: f64| pp * pp / (2.0 * e2(pp));
    let m_s = move |pp: f64| (pp / (e2(pp) + xi)) * m_e(pp);
    let sub_e = lande_subtraction(&kernel, &grid, m_e).unwrap();
    let sub_s = lande_subtraction(&kernel, &grid, m_s).unwrap();
    let sub_p2 = lande_subtraction(&kernel, &grid, |pp| pp * pp).unwrap();
    for &i in &[120usize, 165, 200, 240] {
        let e_i = e2(p[i]);
        let kin = p[i] * p[i] / (e_i + xi);
        let big = c_int * (e_i + xi) * sub_e.diag[i];
        let small = c_int * p[i] * sub_s.diag[i];
        let expected_one = c_int * sub_p2.diag[i];
        let d_actual = two.matrix[(i, i)] - one.matrix[(i, i)];
        println!("row {i}: p = {:.4e}", p[i]);
        println!("  actual Dgg_ii          = {d_actual:+.6e}");
        println!("  kinetic p^2/(E+xi)     = {kin:+.6e}");
        println!("  big - one_body         = {:+.6e}", big - expected_one);
        println!("  small-term diag        = {small:+.6e}");
        println!("  kin + (big-one) + small = {:+.6e}", kin + (big - expected_one) + small);
    }
}

fn s_tolerance() {
    println!("== s_i tolerance sensitivity at xi = 1e6 ==");
    let n = 400usize;
    let xi = 1e6f64;
    let grid = Arc::new(build_grid(n, Mapping::Rational { scale: ALPHA }).unwrap());
    let p = grid.nodes();
    let e2 = |pp: f64| (pp * pp + xi * xi).sqrt();
    let m_e = move |pp: f64| pp * pp / (2.0 * e2(pp));
    for &i in &[120usize, 165, 200] {
        let pi = p[i];
        let profile = |pp: f64| 2.0 * pi * pi / (pi * pi + pp * pp);
        let integrand = |pp: f64| {
            if pp <= 0.0 || (pp - pi).abs() < 1e-300 {
                return 0.0;
            }
            m_e(pp) * coulomb_partial_wave(0, pi, pp).unwrap() * profile(pp)
        };
        let s_at = |tol: f64| {
            quad::integrate(&integrand, 0.0, pi, tol).unwrap()
                + quad::integrate(&integrand, pi, 8.0 * pi, tol).unwrap()
                + quad::integrate_to_infinity(&integrand, 8.0 * pi, tol).unwrap()
        };
        let loose = s_at(2.5e-11);
        let tight = s_at(1e-14);
        println!(
            "row {i}: p = {:.4e}, s_loose = {loose:.12e}, (loose-tight)*(E+xi) = {:+.6e}",
            pi,
            (loose - tight) * (e2(pi) + xi)
        );
    }
}

fn dirac_offsets() {
    println!("== NQA - Dirac(reduced mass) 1S offsets, N=800 ==");
    for sys in [
        TwoBodySystem::new(M_ELECTRON, M_PROTON, ALPHA, "hydrogen-e").unwrap(),
        TwoBodySystem::new(relbound::M_MUON, M_PROTON, ALPHA, "hydrogen-mu").unwrap(),
    ] {
        let e = ladder(&sys, &ground(), 800)[0];
        let mu = sys.reduced_mass() / sys.m1();
        let dirac = dirac_coulomb_energy(1, 1, mu, sys.alpha()).unwrap();
        println!(
            "{}: NQA {:+.9e} eV, Dirac(mu) {:+.9e} eV, NQA-Dirac = {:+.4} meV",
            sys.label,
            e * sys.ev_per_m1(),
            dirac * sys.ev_per_m1(),
            (e - dirac) * sys.ev_per_m1() * 1e3
        );
    }
}

fn interchange() {
    println!("== mass interchange, electronic 1S/2S ==");
    let sys = TwoBodySystem::new(M_ELECTRON, M_PROTON, ALPHA, "hydrogen-e").unwrap();
    let swapped = sys.swapped();
    for n in [800usize, 1000, 1200] {
        let l = ladder(&sys, &ground(), n);
        let ls = ladder(&swapped, &ground(), n);
        println!(
            "N={n}: 1S {:+.12e} / swapped {:+.12e} eV; 2S {:+.12e} / swapped {:+.12e} eV",
            l[0] * sys.ev_per_m1(),
            ls[0] * swapped.ev_per_m1(),
            l[1] * sys.ev_per_m1(),
            ls[1] * swapped.ev_per_m1()
        );
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("all");
    if which == "all" || which == "sub" {
        subtraction_convergence();
    }
    if which == "all" || which == "dirac" {
        dirac_limit();
    }
    if which == "dirac2" {
        dirac_reference_convergence();
    }
    if which == "cmp" {
        matrix_compare();
    }
    if which == "pert" {
        perturbation();
    }
    if which == "gg" {
        gg_decompose();
    }
    if which == "stol" {
        s_tolerance();
    }
    if which == "offsets" {
        dirac_offsets();
    }
    if which == "all" || which == "shape" {
        shape(600);
    }
    if which == "all" || which == "swap" {
        interchange();
    }
}
