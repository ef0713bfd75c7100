"""Literature values shipped as data: ground-state energies and time steps.

These are published estimates for reporting relative errors beyond the
reach of the exact solver.  They are not produced by this package.
"""
from __future__ import annotations

from .lattice import LatticeKind

TDL = None  # thermodynamic-limit entry

# (lattice, J2, N or TDL) -> ground-state energy per site
REFERENCE_ENERGIES: dict[tuple[LatticeKind, float, int | None], float] = {
    (LatticeKind.SQUARE, 0.5, 36): -0.503810,
    (LatticeKind.SQUARE, 0.5, 100): -0.497629,
    (LatticeKind.TRIANGULAR, 0.0, 36): -0.5603734,
    (LatticeKind.TRIANGULAR, 0.0, TDL): -0.551,
    (LatticeKind.TRIANGULAR, 0.125, 36): -0.515564,
    (LatticeKind.TRIANGULAR, 0.125, 108): -0.5126,
    (LatticeKind.HONEYCOMB, 0.2, 32): -0.460650,
    (LatticeKind.HONEYCOMB, 0.2, TDL): -0.4527,
    (LatticeKind.KAGOME, 0.0, 36): -0.43837653,
    (LatticeKind.KAGOME, 0.0, 48): -0.438703897,
    (LatticeKind.KAGOME, 0.0, 108): -0.4386,
}

# (lattice, N) -> imaginary-time step used for training
TIME_STEPS: dict[tuple[LatticeKind, int], float] = {
    (LatticeKind.SQUARE, 36): 0.04,
    (LatticeKind.SQUARE, 100): 0.007,
    (LatticeKind.HONEYCOMB, 32): 0.04,
    (LatticeKind.HONEYCOMB, 98): 0.01,
    (LatticeKind.TRIANGULAR, 36): 0.04,
    (LatticeKind.TRIANGULAR, 108): 0.01,
    (LatticeKind.KAGOME, 36): 0.05,
    (LatticeKind.KAGOME, 108): 0.015,
}

SMALL_SYSTEM_TIME_STEP = 0.05  # desk-scale default for N <= 16


def reference_energy(kind: LatticeKind | str, j2: float, n_sites: int) -> float | None:
    """Per-site literature energy for this exact cluster size, if tabulated."""
    return REFERENCE_ENERGIES.get((LatticeKind(kind), float(j2), n_sites))


def default_time_step(kind: LatticeKind | str, n_sites: int) -> float:
    """Tabulated step for known sizes, 0.05 up to 16 sites, else the nearest tabulated size."""
    kind = LatticeKind(kind)
    if (kind, n_sites) in TIME_STEPS:
        return TIME_STEPS[(kind, n_sites)]
    if n_sites <= 16:
        return SMALL_SYSTEM_TIME_STEP
    sizes = sorted(n for k, n in TIME_STEPS if k is kind)
    if not sizes:
        return SMALL_SYSTEM_TIME_STEP
    nearest = min(sizes, key=lambda n: abs(n - n_sites))
    return TIME_STEPS[(kind, nearest)]


def relative_error(energy: float, reference: float) -> float:
    """``epsilon = (E - E0) / E0``.

    With a negative ``E0`` a variational energy above it gives a negative
    epsilon; thresholds compare ``abs(epsilon)``.
    """
    return (energy - reference) / reference
