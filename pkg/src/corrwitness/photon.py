"""Two-photon polarization/momentum state on a discretized SLM pixel grid.

The signal-photon angle is sampled at pixel offsets ``m = n - n2`` with
angular resolution ``h / D``. All phases are in rad, slopes in rad/pixel.
The idler angle is traced out analytically (the engineered phase does not
depend on it), so a total state is stored as two per-pixel branches:

    |psi> = sum_m  g(m)/sqrt(2) |HH, m>  +  g(m) e^{i(a m + f(m))}/sqrt(2) |VV, m>
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .qstate import (
    NORM_TOL,
    POLARIZATION_LABELS,
    DensityMatrix,
    InvariantError,
    PureStateVector,
    reduced_from_branches,
)

DEFAULT_PIXEL_WIDTH = 100e-6  # m
DEFAULT_SLM_DISTANCE = 0.330  # m
DEFAULT_FWHM_MRAD = 6.0
DEFAULT_ACCEPTANCE_MRAD = 10.0
DEFAULT_A_OPT = 0.1  # rad/pixel
DEFAULT_V0 = 0.914


class WindowTruncationWarning(UserWarning):
    """The pixel window is narrower than three times the profile FWHM."""


class ConsistencyError(RuntimeError):
    """Two independent computation paths disagree, or a bound is broken."""


def _half_window_for(acceptance_mrad: float, resolution: float) -> int:
    pixels = acceptance_mrad * 1e-3 / resolution
    return max(1, math.ceil((pixels - 1.0) / 2.0 - 1e-9))


@dataclass(frozen=True)
class PixelGrid:
    pixel_width_h: float = DEFAULT_PIXEL_WIDTH
    slm_distance_D: float = DEFAULT_SLM_DISTANCE
    half_window_N: int = 16

    def __post_init__(self):
        if self.pixel_width_h <= 0 or self.slm_distance_D <= 0:
            raise ValueError("pixel width and SLM distance must be positive")
        if int(self.half_window_N) != self.half_window_N or self.half_window_N < 0:
            raise ValueError(f"half_window_N must be a non-negative integer, got {self.half_window_N}")
        object.__setattr__(self, "half_window_N", int(self.half_window_N))

    @classmethod
    def from_acceptance(cls, acceptance_mrad: float = DEFAULT_ACCEPTANCE_MRAD,
                        pixel_width_h: float = DEFAULT_PIXEL_WIDTH,
                        slm_distance_D: float = DEFAULT_SLM_DISTANCE) -> "PixelGrid":
        """Smallest centred window whose 2N+1 pixels span the slit acceptance."""
        res = pixel_width_h / slm_distance_D
        return cls(pixel_width_h, slm_distance_D, _half_window_for(acceptance_mrad, res))

    @property
    def resolution(self) -> float:
        """Angle per pixel in rad."""
        return self.pixel_width_h / self.slm_distance_D

    @property
    def size(self) -> int:
        return 2 * self.half_window_N + 1

    @property
    def offsets(self) -> np.ndarray:
        N = self.half_window_N
        return np.arange(-N, N + 1, dtype=float)

    @property
    def angles(self) -> np.ndarray:
        return self.offsets * self.resolution

    def window_mrad(self) -> float:
        return self.size * self.resolution * 1e3


@dataclass(frozen=True, eq=False)
class AngularProfile:
    """Normalized per-pixel weights ``|g(m)|^2``."""

    grid: PixelGrid
    weights: np.ndarray
    fwhm_mrad: float | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.grid.size,):
            raise ValueError(f"profile has {w.size} weights, grid has {self.grid.size} pixels")
        if np.any(w < 0):
            raise InvariantError("non-negative weights")
        total = w.sum()
        if abs(total - 1.0) > 1e-12:
            raise InvariantError("normalized weights", f"sum = {total:.15g}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def symmetric(self) -> bool:
        return bool(np.array_equal(self.weights, self.weights[::-1]))

    @property
    def amplitudes(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def pixel_std(self) -> float:
        m = self.grid.offsets
        mean = np.dot(self.weights, m)
        return float(np.sqrt(np.dot(self.weights, (m - mean) ** 2)))


def _symmetrize(w: np.ndarray) -> np.ndarray:
    return 0.5 * (w + w[::-1])


def gaussian_profile(grid: PixelGrid, fwhm_mrad: float = DEFAULT_FWHM_MRAD, *,
                     width_of: str = "intensity", strict: bool = False) -> AngularProfile:
    """Gaussian angular profile with the given FWHM.

    ``width_of="intensity"`` puts the FWHM on the weights ``|g|^2`` (the
    measured angular distribution); ``"amplitude"`` puts it on ``|g|``.
    Warns (or raises with ``strict``) when the window is narrower than
    three FWHM.
    """
    if not fwhm_mrad > 0:
        raise ValueError(f"fwhm must be positive, got {fwhm_mrad}")
    if grid.window_mrad() < 3.0 * fwhm_mrad:
        msg = (f"window of {grid.window_mrad():.3g} mrad holds less than 3 x FWHM "
               f"({3.0 * fwhm_mrad:.3g} mrad); profile is truncated")
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, WindowTruncationWarning, stacklevel=2)
    theta = grid.angles
    fw = fwhm_mrad * 1e-3
    w = np.exp(-4.0 * np.log(2.0) * theta ** 2 / fw ** 2) if math.isfinite(fw) else np.ones_like(theta)
    if width_of == "amplitude":
        w = w ** 2
    elif width_of != "intensity":
        raise ValueError(f"width_of must be 'intensity' or 'amplitude', got {width_of!r}")
    w = _symmetrize(w)
    return AngularProfile(grid, w / w.sum(), fwhm_mrad)


def tabulated_profile(grid: PixelGrid, values) -> AngularProfile:
    """Profile from non-negative per-pixel intensities (normalized here)."""
    w = np.asarray(values, dtype=float)
    if np.any(w < 0) or not w.sum() > 0:
        raise ValueError("tabulated profile needs non-negative values with positive sum")
    return AngularProfile(grid, w / w.sum())


def load_table(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column ``offset value`` text table; ``#`` starts a comment."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns, found {data.shape[1]}")
    offsets = data[:, 0]
    if not np.all(offsets == np.round(offsets)):
        raise ValueError(f"{path}: pixel offsets must be integers")
    return offsets.astype(int), data[:, 1]


def table_on_grid(grid: PixelGrid, offsets, values, *, fill: float | None = None) -> np.ndarray:
    """Place tabulated values on the grid; missing offsets take ``fill`` or raise."""
    table = dict(zip(np.asarray(offsets, dtype=int).tolist(), np.asarray(values, dtype=float).tolist()))
    out = np.empty(grid.size)
    for i, m in enumerate(range(-grid.half_window_N, grid.half_window_N + 1)):
        if m in table:
            out[i] = table[m]
        elif fill is not None:
            out[i] = fill
        else:
            raise ValueError(f"table has no value for pixel offset {m}")
    return out


def save_table(path: str | Path, offsets, values, header: str = "") -> None:
    lines = [f"# {header}"] if header else []
    lines += [f"{int(m)} {v:.17g}" for m, v in zip(offsets, values)]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True, eq=False)
class PhaseFunction:
    """Engineered SLM phase ``f(m)`` on pixel offsets.

    ``linear`` contributes only a slope, which is folded into the evolution
    slope during evaluation so that ``linear(tau)`` at ``a`` and ``zero`` at
    ``a + tau`` produce the same floating-point operations.
    """

    kind: str = "zero"
    param: float = 0.0
    values: np.ndarray | None = field(default=None, repr=False)

    KINDS = ("zero", "linear", "sinusoidal", "tabulated")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown phase kind {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "tabulated":
            if self.values is None:
                raise ValueError("tabulated phase needs values")
            v = np.array(self.values, dtype=float)
            if v.ndim != 1 or v.size % 2 != 1:
                raise ValueError("tabulated phase needs an odd number of centred values")
            v.setflags(write=False)
            object.__setattr__(self, "values", v)
        object.__setattr__(self, "param", float(self.param))

    @classmethod
    def zero(cls) -> "PhaseFunction":
        return cls("zero")

    @classmethod
    def linear(cls, tau: float) -> "PhaseFunction":
        return cls("linear", tau)

    @classmethod
    def sinusoidal(cls, lam: float) -> "PhaseFunction":
        return cls("sinusoidal", lam)

    @classmethod
    def tabulated(cls, values) -> "PhaseFunction":
        return cls("tabulated", 0.0, np.asarray(values, dtype=float))

    @property
    def is_odd(self) -> bool:
        if self.kind != "tabulated":
            return True
        return bool(np.array_equal(self.values, -self.values[::-1]))

    @property
    def slope(self) -> float:
        return self.param if self.kind == "linear" else 0.0

    def nonlinear(self, offsets) -> np.ndarray:
        m = np.asarray(offsets, dtype=float)
        if self.kind == "sinusoidal":
            return np.sin(self.param * m)
        if self.kind == "tabulated":
            half = (self.values.size - 1) // 2
            idx = np.rint(m).astype(int) + half
            if np.any(idx < 0) or np.any(idx >= self.values.size) or np.any(m != np.rint(m)):
                raise ValueError("tabulated phase evaluated outside its pixel table")
            return self.values[idx]
        return np.zeros_like(m)

    def __call__(self, offsets) -> np.ndarray:
        m = np.asarray(offsets, dtype=float)
        return self.slope * m + self.nonlinear(m)

    def on_grid(self, grid: PixelGrid) -> tuple[float, np.ndarray]:
        """Split into (slope, per-pixel nonlinear phase) on ``grid``."""
        if self.kind == "tabulated" and self.values.size != grid.size:
            raise ValueError(f"tabulated phase has {self.values.size} values, grid has {grid.size} pixels")
        return self.slope, self.nonlinear(grid.offsets)

    def describe(self) -> str:
        if self.kind in ("linear", "sinusoidal"):
            return f"{self.kind}({self.param:g})"
        return self.kind


def random_odd_phase(grid: PixelGrid, rng: np.random.Generator, scale: float = np.pi) -> PhaseFunction:
    """Tabulated odd phase with uniform values in [-scale, scale] on positive offsets."""
    N = grid.half_window_N
    pos = rng.uniform(-scale, scale, size=N)
    return PhaseFunction.tabulated(np.concatenate([-pos[::-1], [0.0], pos]))


@dataclass(frozen=True)
class SlmProfileConfig:
    a_opt: float = DEFAULT_A_OPT
    b: float = 0.0
    n1: int = 0
    n2: int = 0


def slm_phase_profiles(cfg: SlmProfileConfig, n: int, a: float, f: PhaseFunction) -> tuple[float, float]:
    """Phases written on the idler and signal halves of the SLM at absolute pixel ``n``."""
    phi1 = -cfg.a_opt * (n - cfg.n1) + cfg.b
    m = n - cfg.n2
    phi2 = cfg.a_opt * m + a * m + float(f(m))
    return phi1, phi2


@dataclass(frozen=True, eq=False)
class TotalState:
    """Pure polarization-momentum state with an HH and a VV branch per pixel."""

    grid: PixelGrid
    amplitudes: np.ndarray
    evolution_a: float = 0.0
    baseline_visibility_V0: float = 1.0

    def __post_init__(self):
        A = np.array(self.amplitudes, dtype=complex)
        if A.shape != (2, self.grid.size):
            raise ValueError(f"amplitudes must have shape (2, {self.grid.size}), got {A.shape}")
        norm = np.sum(np.abs(A) ** 2)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvariantError("unit norm", f"sum |amplitudes|^2 = {norm:.15g}")
        if np.any(A[0].imag != 0) or np.any(A[0].real < 0):
            raise InvariantError("HH branch real and non-negative")
        if not 0 < self.baseline_visibility_V0 <= 1:
            raise ValueError("V0 must lie in (0, 1]")
        A.setflags(write=False)
        object.__setattr__(self, "amplitudes", A)

    def vector(self) -> PureStateVector:
        """Full state in (polarization HH,HV,VH,VV) x pixel order."""
        full = np.zeros((4, self.grid.size), dtype=complex)
        full[0] = self.amplitudes[0]
        full[3] = self.amplitudes[1]
        v = full.ravel()
        return PureStateVector(v / np.linalg.norm(v))


def _check_v0(V0: float) -> None:
    if not 0 < V0 <= 1:
        raise ValueError(f"V0 must lie in (0, 1], got {V0}")


def build_total_state(grid: PixelGrid, profile: AngularProfile, f: PhaseFunction,
                      a: float, V0: float = 1.0) -> TotalState:
    if profile.grid != grid:
        raise ValueError("profile was built on a different grid")
    _check_v0(V0)
    slope, phase = f.on_grid(grid)
    g = profile.amplitudes / np.sqrt(2.0)
    vv = g * np.exp(1j * ((a + slope) * grid.offsets + phase))
    return TotalState(grid, np.vstack([g.astype(complex), vv]), a, V0)


def epsilon_curve(profile: AngularProfile, f: PhaseFunction, a_values, V0: float = 1.0) -> np.ndarray:
    """Coherence ``V0 * sum_m |g(m)|^2 e^{i(a m + f(m))}`` for each ``a``."""
    _check_v0(V0)
    slope, phase = f.on_grid(profile.grid)
    a = np.atleast_1d(np.asarray(a_values, dtype=float))
    slopes = np.ascontiguousarray(a + slope)
    eps = kernels.coherence_sweep(
        np.ascontiguousarray(profile.weights),
        np.ascontiguousarray(profile.grid.offsets),
        slopes,
        np.ascontiguousarray(phase, dtype=float),
    )
    return V0 * eps


def epsilon(profile: AngularProfile, f: PhaseFunction, a: float, V0: float = 1.0) -> complex:
    return complex(epsilon_curve(profile, f, [a], V0)[0])


def reduced_state_from_epsilon(eps: complex) -> DensityMatrix:
    if abs(eps) > 1.0 + 1e-12:
        raise ConsistencyError(f"|epsilon| = {abs(eps):.15g} exceeds 1")
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[3, 0] = 0.5 * eps
    rho[0, 3] = 0.5 * np.conj(eps)
    return DensityMatrix(rho, POLARIZATION_LABELS)


def reduced_state(profile: AngularProfile, f: PhaseFunction, a: float, V0: float = 1.0) -> DensityMatrix:
    """Polarization state ``(|HH><HH| + eps|VV><HH| + eps*|HH><VV| + |VV><VV|) / 2``."""
    return reduced_state_from_epsilon(epsilon(profile, f, a, V0))


def visibility(eps: complex) -> float:
    return float(np.real(eps))


def reduced_state_of_total(psi: TotalState) -> DensityMatrix:
    return reduced_from_branches(psi.amplitudes[0], psi.amplitudes[1])
