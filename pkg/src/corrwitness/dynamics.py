"""Trace-distance dynamics and the initial-correlation witnesses.

A pair of engineered phases (f1, f2) on a shared angular profile gives
two reduced-state trajectories parameterized by the SLM slope ``a``. Any
growth of their trace distance above its initial value is bounded by the
information initially stored outside the polarization, I12(0), and can
only occur when at least one initial total state is correlated.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .photon import (
    AngularProfile,
    ConsistencyError,
    PhaseFunction,
    TotalState,
    build_total_state,
    epsilon_curve,
    reduced_state_from_epsilon,
)
from .qstate import pure_trace_distance, reduced_from_branches, trace_distance

INCREASE_TOL = 1e-10
PATH_AGREEMENT_TOL = 1e-10
CURVE_HEADER = ["a", "eps1_re", "eps1_im", "eps2_re", "eps2_im", "trace_distance", "i12_bound"]


def default_a_grid(start: float = 0.0, stop: float = 1.0, step: float = 0.01) -> np.ndarray:
    """Evenly spaced evolution slopes, ``stop`` included when on the lattice."""
    if not step > 0:
        raise ValueError("a_step must be positive")
    if start > stop:
        raise ValueError("a_start must not exceed a_stop")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


@dataclass(frozen=True, eq=False)
class CoherenceCurve:
    a_values: np.ndarray
    eps1: np.ndarray
    eps2: np.ndarray
    trace_distance: np.ndarray
    i12_bound: float

    def __post_init__(self):
        n = len(self.a_values)
        if not (len(self.eps1) == len(self.eps2) == len(self.trace_distance) == n):
            raise ValueError("curve arrays must have equal lengths")

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CURVE_HEADER)
            for a, e1, e2, d in zip(self.a_values, self.eps1, self.eps2, self.trace_distance):
                writer.writerow([_g12(x) for x in (a, e1.real, e1.imag, e2.real, e2.imag, d, self.i12_bound)])

    @classmethod
    def from_csv(cls, path: str | Path) -> "CoherenceCurve":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != CURVE_HEADER:
                raise ValueError(f"{path}: unexpected header {header}")
            rows = np.array([[float(x) for x in row] for row in reader])
        return cls(rows[:, 0], rows[:, 1] + 1j * rows[:, 2], rows[:, 3] + 1j * rows[:, 4],
                   rows[:, 5], float(rows[0, 6]) if len(rows) else 0.0)


def _g12(x: float) -> str:
    s = f"{x:.12g}"
    return "0" if s == "-0" else s


@dataclass(frozen=True)
class WitnessReport:
    initial_D: float
    max_D: float
    argmax_a: float
    increase_detected: bool
    bound_satisfied: bool | None = None
    semigroup_violated: bool | None = None
    i12_bound: float | None = None
    max_increase: float = 0.0

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def initial_information(psi1: TotalState, psi2: TotalState) -> float:
    """I12(0): total-state trace distance minus reduced-state trace distance."""
    if psi1.grid != psi2.grid:
        raise ValueError("total states live on different pixel grids")
    d_total = pure_trace_distance(psi1.vector(), psi2.vector())
    d_red = trace_distance(reduced_from_branches(*psi1.amplitudes), reduced_from_branches(*psi2.amplitudes))
    return d_total - d_red


def sweep(profile: AngularProfile, f1: PhaseFunction, f2: PhaseFunction, V0: float, a_grid) -> CoherenceCurve:
    """Trace distance between the two reduced trajectories over ``a_grid``.

    Each point is computed from the closed form ``|eps1 - eps2| / 2`` and
    checked against the eigenvalue trace distance of the full 4x4 states.
    """
    a = np.asarray(a_grid, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("a_grid must be a non-empty 1-d array")
    if np.any(np.diff(a) <= 0):
        raise ValueError("a_grid must be strictly increasing")
    eps1 = epsilon_curve(profile, f1, a, V0)
    eps2 = epsilon_curve(profile, f2, a, V0)
    D = 0.5 * np.abs(eps1 - eps2)
    for k in range(a.size):
        full = trace_distance(reduced_state_from_epsilon(eps1[k]), reduced_state_from_epsilon(eps2[k]))
        if abs(full - D[k]) > PATH_AGREEMENT_TOL:
            raise ConsistencyError(
                f"closed-form and matrix trace distance disagree at a={a[k]:g}: {D[k]!r} vs {full!r}")
    grid = profile.grid
    i12 = initial_information(build_total_state(grid, profile, f1, 0.0),
                              build_total_state(grid, profile, f2, 0.0))
    return CoherenceCurve(a, eps1, eps2, D, i12)


def bound_check(curve: CoherenceCurve) -> WitnessReport:
    """Compare the growth of D over its first grid value with I12(0)."""
    D = curve.trace_distance
    d0 = float(D[0])
    k = int(np.argmax(D))
    increase = D - d0
    bound_ok = bool(np.all(increase <= curve.i12_bound + INCREASE_TOL))
    return WitnessReport(
        initial_D=d0,
        max_D=float(D[k]),
        argmax_a=float(curve.a_values[k]),
        increase_detected=bool(D[k] > d0 + INCREASE_TOL),
        bound_satisfied=bound_ok,
        i12_bound=float(curve.i12_bound),
        max_increase=float(np.max(increase)),
    )


def self_distance_curve(profile: AngularProfile, V0: float, tau: float, a_grid) -> np.ndarray:
    """``D(a) = |eps(a) - eps(a + tau)| / 2`` along the uncorrelated trajectory."""
    a = np.asarray(a_grid, dtype=float)
    zero = PhaseFunction.zero()
    eps_a = epsilon_curve(profile, zero, a, V0)
    eps_shift = epsilon_curve(profile, zero, a + tau, V0)
    return 0.5 * np.abs(eps_a - eps_shift)


def semigroup_witness(profile: AngularProfile, V0: float, tau: float, a_grid) -> WitnessReport:
    """Flag trajectories incompatible with a dynamical semigroup.

    Under a semigroup, D(rho(a), rho(a + tau)) could never exceed its value
    at the first grid point.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    a = np.asarray(a_grid, dtype=float)
    D = self_distance_curve(profile, V0, tau, a)
    d0 = float(D[0])
    k = int(np.argmax(D))
    violated = bool(D[k] > d0 + INCREASE_TOL)
    return WitnessReport(
        initial_D=d0,
        max_D=float(D[k]),
        argmax_a=float(a[k]),
        increase_detected=violated,
        semigroup_violated=violated,
        max_increase=float(D[k] - d0),
    )
