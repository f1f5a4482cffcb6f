"""Propagators, wave operators, sojourn times, and the r-sweep.

Oracle notes.  Free evolution is multiplication by e^{-ixt} in position,
equivalently a momentum translation: for t equal to a whole number of
momentum cells the translated transform matches np.roll exactly, which
checks the evolution against the FFT conventions with no analysis in
between.  Wave-operator quality is certified by three independent
handles: isometry, intertwining with the evolutions, and the agreement
of the two construction methods on a state both can reach.
"""

import math

import numpy as np
import pytest

import friedrichs as fr
from friedrichs import Representation, ToleranceError, ValidationError


@pytest.fixture(scope="module")
def f_ind():
    return fr.make_localization("indicator", J=(-1.0, 1.0))


@pytest.fixture(scope="module")
def f_smooth():
    return fr.make_localization("smooth_bump", delta=1.0, width=1.0, rho=3.0)


# ---------------------------------------------------------------------------
# evolution


def test_free_evolution_is_position_phase(gaussian_propagator, grid):
    phi = fr.gaussian_state(grid, 0.3, 0.7)
    t = 1.37
    out = fr.evolve(gaussian_propagator, phi, t, "free")
    ref = np.exp(-1j * t * grid.position_nodes()) * phi.samples
    assert np.max(np.abs(out.samples - ref)) < 1e-14


def test_free_evolution_translates_momentum(gaussian_propagator, grid):
    # t = n momentum cells: the transform shifts down by exactly n bins
    n = 10
    t = n * grid.momentum_spacing
    phi = fr.gaussian_state(grid, 0.0, 0.5, momentum=1.0)
    before = fr.transform(phi).samples
    after = fr.transform(fr.evolve(gaussian_propagator, phi, t, "free")).samples
    assert np.max(np.abs(after - np.roll(before, -n))) < 1e-12


def test_full_evolution_unitary_and_energy_conserving(gaussian_propagator, grid):
    gen = np.random.default_rng(17)
    E, U = gaussian_propagator.eigenvalues, gaussian_propagator.eigenvectors
    for _ in range(25):
        raw = gen.standard_normal(grid.points) * np.exp(
            -0.1 * np.abs(grid.position_nodes()))
        phi = fr.grid_function(grid, raw / np.linalg.norm(raw) / math.sqrt(grid.spacing))
        out = fr.evolve(gaussian_propagator, phi, 3.7, "full")
        assert abs(fr.norm(out) - fr.norm(phi)) < 1e-12
        # <phi, H phi> through the eigenbasis before and after
        c0 = U.conj().T @ phi.samples
        c1 = U.conj().T @ out.samples
        e0 = float(np.real(np.sum(E * np.abs(c0) ** 2)))
        e1 = float(np.real(np.sum(E * np.abs(c1) ** 2)))
        assert abs(e1 - e0) < 1e-10 * max(1.0, abs(e0))


def test_eigenvalue_interlacing_small_grid():
    # rank-one positive perturbation pushes each eigenvalue into the next
    # node gap: x_i <= E_i <= x_{i+1}
    g = fr.make_grid(12.0, 128)
    model = fr.finite_rank_model(g, [fr.gaussian_state(g)], [0.9])
    prop = fr.build_propagator(model)
    x = g.position_nodes()
    E = np.sort(prop.eigenvalues)
    assert np.all(E >= x - 1e-12)
    assert np.all(E[:-1] <= x[1:] + 1e-12)


def test_zero_coupling_propagator_is_diagonal(grid):
    model = fr.finite_rank_model(grid, [fr.gaussian_state(grid)], [0.0])
    prop = fr.build_propagator(model)
    assert prop.is_diagonal
    phi = fr.gaussian_state(grid, 0.2, 0.6)
    full = fr.evolve(prop, phi, 2.2, "full")
    free = fr.evolve(prop, phi, 2.2, "free")
    assert np.array_equal(full.samples, free.samples)


def test_evolve_which_validation(gaussian_propagator, grid):
    phi = fr.gaussian_state(grid)
    with pytest.raises(ValidationError):
        fr.evolve(gaussian_propagator, phi, 1.0, "sideways")
    # spelling variants canonicalize
    a = fr.evolve(gaussian_propagator, phi, 0.5, "FREE")
    b = fr.evolve(gaussian_propagator, phi, 0.5, "free")
    assert np.array_equal(a.samples, b.samples)


# ---------------------------------------------------------------------------
# wave operators


def test_wave_operator_identity_for_zero_coupling(grid):
    model = fr.finite_rank_model(grid, [fr.gaussian_state(grid)], [0.0])
    prop = fr.build_propagator(model)
    phi = fr.bump_state(grid, (0.25, 0.75))
    for method in ("cook", "dressing"):
        out = fr.wave_operator(prop, phi, "minus", method)
        assert np.array_equal(out.samples, phi.samples)


def test_wave_operator_methods_agree(gaussian_propagator, grid):
    # a narrow Gaussian is reachable by both constructions
    psi = fr.gaussian_state(grid, 0.5, 0.4)
    cook = fr.wave_operator(gaussian_propagator, psi, "minus", "cook")
    dress = fr.wave_operator(gaussian_propagator, psi, "minus", "dressing")
    diff = fr.norm(fr.grid_function(grid, cook.samples - dress.samples))
    assert diff < 1e-4  # measured ~1e-13
    assert abs(fr.norm(cook) - 1.0) < 1e-4
    assert abs(fr.norm(dress) - 1.0) < 1e-4


def test_wave_operator_isometry_on_bump(gaussian_propagator, grid):
    phi = fr.bump_state(grid, (0.25, 0.75))
    w, info = fr.wave_operator(gaussian_propagator, phi, "minus", "cook",
                               return_info=True)
    assert abs(fr.norm(w) - fr.norm(phi)) < 1e-4
    assert info["tail_estimate"] <= 1e-4
    assert info["zeta"] > 2.0


def test_wave_operator_intertwines_evolutions(gaussian_propagator, grid):
    # W_- e^{-itH0} = e^{-itH} W_-
    psi = fr.gaussian_state(grid, 0.5, 0.4)
    t = 1.0
    lhs = fr.wave_operator(gaussian_propagator,
                           fr.evolve(gaussian_propagator, psi, t, "free"),
                           "minus", "cook")
    w = fr.wave_operator(gaussian_propagator, psi, "minus", "cook")
    rhs = fr.evolve(gaussian_propagator, w, t, "full")
    res = fr.norm(fr.grid_function(grid, lhs.samples - rhs.samples))
    assert res < 1e-4  # measured ~1e-14


def test_plus_and_minus_differ_by_scattering(gaussian_propagator, gaussian_curve, grid):
    # S phi = W_+^* W_- phi, so W_+ (S phi) = W_- phi
    phi = fr.bump_state(grid, (0.25, 0.75))
    w_minus = fr.wave_operator(gaussian_propagator, phi, "minus", "cook")
    s_phi = fr.apply_scattering(gaussian_curve, phi)
    w_plus_s = fr.wave_operator(gaussian_propagator, s_phi, "plus", "cook")
    diff = fr.norm(fr.grid_function(grid, w_minus.samples - w_plus_s.samples))
    assert diff < 1e-4


def test_dressing_refuses_wideband_state(gaussian_propagator, grid):
    # the bump's bandwidth leaves no aliasing-safe dressing horizon at
    # the default tolerance; the failure must be loud, not approximate
    phi = fr.bump_state(grid, (0.25, 0.75))
    with pytest.raises(ToleranceError, match="[Cc]ook"):
        fr.wave_operator(gaussian_propagator, phi, "minus", "dressing", tol=1e-6)


def test_wave_operator_validation(gaussian_propagator, grid):
    phi = fr.gaussian_state(grid, 0.5, 0.4)
    with pytest.raises(ValidationError):
        fr.wave_operator(gaussian_propagator, phi, "backwards", "cook")
    with pytest.raises(ValidationError):
        fr.wave_operator(gaussian_propagator, phi, "minus", "magic")
    cap = grid.momentum_cutoff
    with pytest.raises(ValidationError):
        fr.wave_operator(gaussian_propagator, phi, "minus", "cook", horizon=cap + 50.0)


# ---------------------------------------------------------------------------
# sojourn times and the propagation functional


def test_free_sojourn_identity(gaussian_propagator, grid, f_ind, f_smooth):
    # T0_r = r ||phi||^2 integral(f), checked through the numeric route
    states = [fr.gaussian_state(grid, 0.0, 1.0, momentum=1.5),
              fr.bump_state(grid, (0.25, 0.75))]
    for phi in states:
        for f in (f_ind, f_smooth):
            for r in (1.0, 8.0, 64.0):
                got = fr.sojourn(gaussian_propagator, phi, f, r, "freenumeric")
                ref = r * fr.norm(phi) ** 2 * fr.localization_integral(f)
                assert abs(got - ref) < 1e-4 * ref


def test_free_analytic_route(gaussian_propagator, grid, f_ind):
    phi = fr.bump_state(grid, (0.25, 0.75))
    got = fr.sojourn(gaussian_propagator, phi, f_ind, 16.0, "freeanalytic")
    assert got == pytest.approx(16.0 * fr.norm(phi) ** 2 * 2.0, rel=1e-12)


def test_full_sojourn_reduces_to_free_for_zero_coupling(grid, f_ind):
    model = fr.finite_rank_model(grid, [fr.gaussian_state(grid)], [0.0])
    prop = fr.build_propagator(model)
    phi = fr.bump_state(grid, (0.25, 0.75))
    full = fr.sojourn(prop, phi, f_ind, 8.0, "full")
    free = fr.sojourn(prop, phi, f_ind, 8.0, "freenumeric")
    assert full == free  # same code path, bit for bit


def test_full_sojourn_requires_dressed_state(gaussian_propagator, grid, f_ind):
    phi = fr.bump_state(grid, (0.25, 0.75))
    with pytest.raises(ValidationError):
        fr.sojourn(gaussian_propagator, phi, f_ind, 8.0, "full")


def test_sojourn_tolerance_failure_is_loud(gaussian_propagator, grid, f_ind):
    phi = fr.bump_state(grid, (0.25, 0.75))
    w = fr.wave_operator(gaussian_propagator, phi, "minus", "cook")
    with pytest.raises(ToleranceError):
        fr.sojourn(gaussian_propagator, phi, f_ind, 8.0, "full",
                   w_minus_phi=w, tol=1e-15)


def test_propagation_functional_exact_regime(f_ind):
    # indicator density on [1, 2]: window covers the support once r > 2,
    # leaving I_r = 2 <P> = 3 exactly
    dens = fr.indicator_momentum_density((1.0, 2.0))
    for r in (2.5, 4.0, 10.0, 64.0):
        val = fr.propagation_functional(dens, f_ind, r)
        assert abs(val - 3.0) < 1e-8


def test_propagation_functional_gaussian_monotone(f_ind):
    dens = fr.gaussian_momentum_density(momentum=1.5, width=0.9)
    devs = [abs(fr.propagation_functional(dens, f_ind, r) - 3.0)
            for r in (2.0, 4.0, 8.0, 16.0, 32.0)]
    assert devs[-1] < 1e-6
    for a, b in zip(devs, devs[1:]):
        assert b <= a + 1e-12  # decreasing until the round-off floor


def test_propagation_functional_routes_agree(grid, f_ind):
    phi = fr.gaussian_state(grid, 0.0, 1.0, momentum=1.5)
    cf = fr.propagation_functional(phi, f_ind, 4.0, "closedform")
    direct = fr.propagation_functional(phi, f_ind, 4.0, "direct")
    assert abs(cf - direct) < 1e-5
    dens = fr.gaussian_momentum_density(momentum=1.5, width=1.0)
    with pytest.raises(ValidationError):
        fr.propagation_functional(dens, f_ind, 4.0, "direct")


# ---------------------------------------------------------------------------
# the sweep


def test_sweep_identities_and_convergence(gaussian_propagator, gaussian_curve,
                                          grid, f_ind):
    phi = fr.bump_state(grid, (0.25, 0.75))
    records, summary = fr.time_delay_sweep(
        gaussian_propagator, gaussian_curve, phi, f_ind, [4, 8, 16])
    for rec in records:
        # record fields are internally consistent
        assert rec.tau_in == pytest.approx(rec.T - rec.T0, abs=1e-12)
        assert rec.tau_sym == pytest.approx(rec.T - 0.5 * (rec.T0 + rec.T0_S),
                                            abs=1e-12)
        # free-term symmetry: S preserves the free sojourn
        assert abs(rec.T0_S - rec.T0) < 1e-6
        assert abs(rec.tau_in - rec.tau_sym) < 1e-6
        assert rec.tail_estimate < 1e-5
    assert summary["fit_ok"]
    assert abs(summary["tau_inf"] - summary["ew_value"]) < 0.02 * abs(summary["ew_value"])


def test_sweep_free_route_converges_to_full(gaussian_propagator, gaussian_curve,
                                            grid, f_ind):
    # narrow-band wave packet: the momentum window covers the state by
    # r = 64, so tau_free meets tau_in below the quadrature tails
    wp = fr.gaussian_state(grid, center=0.0, width=0.125, momentum=1.5)
    records, summary = fr.time_delay_sweep(
        gaussian_propagator, gaussian_curve, wp, f_ind, [16, 32, 64])
    gaps = [abs(rec.tau_free - rec.tau_in) for rec in records]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[-1] < 2.0 * records[-1].tail_estimate + 1e-8
    assert summary["rel_gap"] < 1e-8


def test_sweep_trivial_for_zero_coupling(grid, f_ind):
    model = fr.finite_rank_model(grid, [fr.gaussian_state(grid)], [0.0])
    prop = fr.build_propagator(model)
    curve = fr.compute_curve(model, (-6.0, 6.0), 201)
    phi = fr.bump_state(grid, (0.25, 0.75))
    records, summary = fr.time_delay_sweep(prop, curve, phi, f_ind, [4, 8, 16])
    for rec in records:
        # V = 0 takes the analytic free route: exact zeros, not residue
        assert rec.tau_in == 0.0
        assert rec.tau_sym == 0.0
        assert rec.tau_free == 0.0
    assert summary["ew_value"] == 0.0
    assert summary["tau_inf"] == 0.0


def test_sweep_validates_r_list(gaussian_propagator, gaussian_curve, grid, f_ind):
    phi = fr.bump_state(grid, (0.25, 0.75))
    with pytest.raises(ValidationError):
        fr.time_delay_sweep(gaussian_propagator, gaussian_curve, phi, f_ind, [])
    with pytest.raises(ValidationError):
        fr.time_delay_sweep(gaussian_propagator, gaussian_curve, phi, f_ind, [-2.0])
