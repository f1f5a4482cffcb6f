"""Time delay two ways: dynamical sojourn sweep vs stationary formula.

A bump state on [0.25, 0.75] scatters off a rank-one Gaussian
perturbation of the position operator.  The dynamical route measures how
much longer the interacting evolution keeps the state inside a dilated
momentum window than the free one does, then extrapolates the window
scale r to infinity.  The stationary route integrates the phase-shift
derivative against the state's energy density.  The two numbers agree
to about eight digits; run and see.
"""

import numpy as np

import friedrichs as fr


def main():
    grid = fr.make_grid(16.0, 2048)
    v = fr.gaussian_state(grid)
    model = fr.finite_rank_model(grid, [v], [1.0])
    phi = fr.bump_state(grid, (0.25, 0.75))
    f = fr.make_localization("indicator", J=(-1.0, 1.0))

    print("computing scattering curve ...")
    curve = fr.compute_curve(model, (-6.0, 6.0), 1001)
    print("diagonalizing H (one-time cost) ...")
    prop = fr.build_propagator(model)

    r_list = [4.0, 8.0, 16.0, 32.0, 64.0]
    print(f"sweeping r = {r_list} ...\n")
    records, summary = fr.time_delay_sweep(prop, curve, phi, f, r_list)

    print(f"{'r':>6} {'T_full':>14} {'T0':>14} {'tau_in':>16} {'tail':>10}")
    for rec in records:
        print(f"{rec.r:6.1f} {rec.T:14.8f} {rec.T0:14.8f} "
              f"{rec.tau_in:16.10f} {rec.tail_estimate:10.2e}")

    ew = summary["ew_value"]
    print(f"\nextrapolated tau_inf   = {summary['tau_inf']:.10f}")
    print(f"stationary expectation = {ew:.10f}")
    print(f"relative gap           = {summary['rel_gap']:.2e}")
    print(f"fit exponent beta      = {summary['beta']:g}, "
          f"ok = {summary['fit_ok']}")

    # the free-route delay built from the scattered state alone heads to
    # the same limit without ever touching the interacting propagator,
    # though for this broadband state it gets there noticeably later
    tau_free = np.array([rec.tau_free for rec in records])
    print(f"\nfree-route delays      = {np.array2string(tau_free, precision=8)}")


if __name__ == "__main__":
    main()
