"""Smoke test for the relbound_py extension module.

Build and install first, e.g.:

    pip install maturin
    maturin develop -m crates/relbound-py/Cargo.toml --release

then run:  python python/smoke_test.py
"""

import math

import relbound_py as rb


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    system = rb.System.preset("hydrogen-e")
    assert close(system.xi, rb.M_PROTON / rb.M_ELECTRON, 1e-12)

    state = rb.State.parse("1S0F0")
    assert (state.n, state.f, state.l, state.s) == (1, 0, 0, 0)
    try:
        rb.State.parse("1S0F1")  # triangle rule
        raise AssertionError("expected a rejection")
    except ValueError:
        pass

    sol = rb.solve(system, state, n_grid=300)
    print(f"hydrogen 1S0F0 at N=300: {sol.epsilon_ev:.6f} eV "
          f"(nodes={sol.node_count}, residual={sol.residual:.2e})")
    assert close(sol.epsilon_ev, -13.59847, 1e-3)
    assert sol.node_count == 0
    assert sol.residual < 1e-8
    norm = sum(
        w_p_sq * (g * g + h * h)
        for w_p_sq, g, h in zip(
            [p * p for p in sol.p_over_m1], sol.g, sol.h
        )
    )
    assert norm > 0  # weights live in the library; just sanity here
    assert sol.g[0] > 0

    ladder = rb.spectrum(system, state, n_grid=300, max_levels=3)
    print("ladder (eV):", [f"{e:.5f}" for e in ladder])
    for n, e in enumerate(ladder, start=1):
        assert close(e, -13.6057 / n**2, 5e-3), (n, e)

    mu = rb.M_ELECTRON * rb.M_PROTON / (rb.M_ELECTRON + rb.M_PROTON)
    dirac = rb.dirac_coulomb_energy(1, 1, mu * 1e6, rb.ALPHA)
    assert close(dirac, -13.59847, 1e-5)
    assert close(sol.epsilon_ev, dirac, 1e-4)

    g_small, h_big, h_small = rb.channel_weights(1, 1, 0, 1)
    weights = dict(h_small)
    assert math.isclose(weights[0], 1.0 / 9.0, rel_tol=1e-14)
    assert math.isclose(weights[2], 8.0 / 9.0, rel_tol=1e-14)
    assert dict(h_big) == {1: 1.0}
    assert dict(g_small) == {1: 1.0}

    print("smoke test passed")


if __name__ == "__main__":
    main()
