"""A bound state hiding inside the continuum, and how the tools react.

Couple the position operator to the vector v(x) = c (x - 1) e^{-x^2/2}.
Because v vanishes at x = 1 and the principal-value integral of |v|^2
against 1/(k - 1) can be cancelled by tuning the coupling, the value
lambda = 3/2 plants an exact eigenvalue at x = 1 embedded in the
continuous spectrum.  The eigenvalue search certifies it, and the
scattering curve must then exclude a ball around it: the time-delay
machinery refuses states that ride the singular point, and accepts
states supported safely away from it.
"""

import math

import numpy as np

import friedrichs as fr


def main():
    grid = fr.make_grid(16.0, 2048)
    x = grid.position_nodes()
    c = (1.5 * math.sqrt(math.pi)) ** -0.5
    v = fr.grid_function(grid, c * (x - 1.0) * np.exp(-0.5 * x * x))
    model = fr.finite_rank_model(grid, [v], [1.5])

    print("searching for point spectrum ...")
    ps = fr.point_spectrum(model)
    for e, rad in zip(ps.eigenvalues, ps.radii):
        print(f"  eigenvalue {e:.8f}  (exclusion radius {rad:.3f})")
    if not ps.eigenvalues:
        print("  none found")
        return

    exclusions = tuple(zip(ps.eigenvalues, ps.radii))
    curve = fr.compute_curve(model, (-6.0, 6.0), 1001, exclusions=exclusions)
    print(f"\ncurve keeps {curve.energies.size} of 1001 energy points; "
          "the gap brackets the eigenvalue")

    # a state whose support avoids the eigenvalue scatters normally
    safe = fr.bump_state(grid, (-0.75, -0.25))
    print(f"safe state delay     = {fr.ew_time_delay(curve, safe):.8f}")

    # one that straddles x = 1 is refused: its energy content touches
    # the excluded ball where the phase derivative is singular
    riding = fr.bump_state(grid, (0.8, 1.2))
    try:
        fr.ew_time_delay(curve, riding)
    except fr.StateNotAdmissible as exc:
        print(f"riding state refused: {exc}")


if __name__ == "__main__":
    main()
