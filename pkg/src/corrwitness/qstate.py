"""Finite-dimensional density-operator algebra.

Construction and validation of density matrices, pure states and
projectors, partial trace, trace distance and the optimal (Helstrom)
projector that attains it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10
NORM_TOL = 1e-12
PROJECTOR_TOL = 1e-10
# eigenvalues of rho1 - rho2 inside this band are left out of the Helstrom projector
ZERO_EIG_TOL = 1e-12

POLARIZATION_LABELS = ("HH", "HV", "VH", "VV")


class InvariantError(ValueError):
    """An input violates a named mathematical invariant."""

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        msg = f"invariant violated: {invariant}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class DimensionMismatchError(ValueError):
    pass


def _default_labels(dim: int) -> tuple[str, ...]:
    if dim == 4:
        return POLARIZATION_LABELS
    return tuple(str(i) for i in range(dim))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator.

    Validated on construction; ``InvariantError`` names the first failed
    invariant ("hermitian", "unit trace" or "positive semidefinite").
    """

    entries: np.ndarray
    basis_labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] == 0:
            raise InvariantError("square matrix", f"shape {rho.shape}")
        dim = rho.shape[0]
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > HERMITIAN_TOL:
            raise InvariantError("hermitian", f"max |rho - rho^dag| = {herm:.3e}")
        tr = np.trace(rho)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvariantError("unit trace", f"Tr = {tr:.15g}")
        lo = np.linalg.eigvalsh(rho)[0]
        if lo < PSD_TOL:
            raise InvariantError("positive semidefinite", f"min eigenvalue {lo:.3e}")
        labels = tuple(self.basis_labels) or _default_labels(dim)
        if len(labels) != dim:
            raise InvariantError("label count", f"{len(labels)} labels for dim {dim}")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)
        object.__setattr__(self, "basis_labels", labels)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_pure(cls, psi: "PureStateVector | np.ndarray", labels: Sequence[str] = ()) -> "DensityMatrix":
        vec = psi.amplitudes if isinstance(psi, PureStateVector) else np.asarray(psi, dtype=complex)
        return cls(np.outer(vec, vec.conj()), tuple(labels))

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


@dataclass(frozen=True)
class PureStateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        vec = np.array(self.amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvariantError("unit norm", f"|psi| = {norm:.15g}")
        vec.setflags(write=False)
        object.__setattr__(self, "amplitudes", vec)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]


@dataclass(frozen=True)
class Projector:
    entries: np.ndarray

    def __post_init__(self):
        P = np.array(self.entries, dtype=complex)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise InvariantError("square matrix", f"shape {P.shape}")
        if np.max(np.abs(P - P.conj().T)) > PROJECTOR_TOL:
            raise InvariantError("hermitian")
        if np.max(np.abs(P @ P - P)) > PROJECTOR_TOL:
            raise InvariantError("idempotent")
        ev = np.linalg.eigvalsh(P)
        if np.any(np.minimum(np.abs(ev), np.abs(ev - 1.0)) > PROJECTOR_TOL):
            raise InvariantError("eigenvalues in {0,1}")
        P.setflags(write=False)
        object.__setattr__(self, "entries", P)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.real(np.trace(self.entries))))

    @classmethod
    def onto(cls, vectors: np.ndarray) -> "Projector":
        """Projector onto the span of the orthonormal columns of ``vectors``."""
        V = np.asarray(vectors, dtype=complex)
        if V.ndim == 1:
            V = V[:, None]
        return cls(V @ V.conj().T)


def as_density_matrix(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(np.asarray(rho))


def _difference(rho1, rho2) -> np.ndarray:
    r1, r2 = as_density_matrix(rho1), as_density_matrix(rho2)
    if r1.dim != r2.dim:
        raise DimensionMismatchError(f"dimension mismatch: {r1.dim} vs {r2.dim}")
    delta = r1.entries - r2.entries
    return 0.5 * (delta + delta.conj().T)


def trace_distance(rho1, rho2) -> float:
    """Half the sum of absolute eigenvalues of ``rho1 - rho2``."""
    x = np.linalg.eigvalsh(_difference(rho1, rho2))
    return float(min(max(0.5 * np.sum(np.abs(x)), 0.0), 1.0))


def helstrom_projector(rho1, rho2) -> Projector:
    """Projector onto the strictly positive eigenspace of ``rho1 - rho2``.

    ``Tr[P (rho1 - rho2)]`` equals the trace distance. Eigenvalues within
    ``ZERO_EIG_TOL`` of zero are excluded.
    """
    x, vecs = np.linalg.eigh(_difference(rho1, rho2))
    keep = x > ZERO_EIG_TOL
    return Projector.onto(vecs[:, keep]) if keep.any() else Projector(np.zeros_like(vecs))


def pure_trace_distance(psi1, psi2) -> float:
    """Trace distance of two pure states, ``sqrt(1 - |<psi1|psi2>|^2)``."""
    v1 = psi1.amplitudes if isinstance(psi1, PureStateVector) else PureStateVector(psi1).amplitudes
    v2 = psi2.amplitudes if isinstance(psi2, PureStateVector) else PureStateVector(psi2).amplitudes
    if v1.shape != v2.shape:
        raise DimensionMismatchError(f"dimension mismatch: {v1.shape[0]} vs {v2.shape[0]}")
    overlap = abs(np.vdot(v1, v2)) ** 2
    return float(np.sqrt(max(0.0, 1.0 - min(overlap, 1.0))))


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``rho`` may be a state vector or a density matrix on the tensor product
    of spaces with dimensions ``dims``.
    """
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    arr = np.asarray(rho, dtype=complex)
    if arr.ndim == 1:
        psi = arr.reshape(dims)
        traced = [i for i in range(n) if i not in keep]
        psi = np.moveaxis(psi, keep + traced, list(range(n)))
        dk = int(np.prod([dims[i] for i in keep]))
        psi = psi.reshape(dk, -1)
        return psi @ psi.conj().T
    t = arr.reshape(dims + dims)
    for count, i in enumerate(sorted(set(range(n)) - set(keep), reverse=True)):
        cur = n - count
        t = np.trace(t, axis1=i, axis2=i + cur)
    dk = int(np.prod([dims[i] for i in keep]))
    return t.reshape(dk, dk)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Ginibre-distributed random state of the given rank (full rank by default)."""
    k = dim if rank is None else rank
    A = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = A @ A.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def random_pure_state(dim: int, rng: np.random.Generator) -> PureStateVector:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureStateVector(v / np.linalg.norm(v))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    Z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def reduced_from_branches(hh: np.ndarray, vv: np.ndarray) -> DensityMatrix:
    """Polarization state left after tracing out momentum.

    ``hh`` and ``vv`` are the per-pixel amplitudes of the two branches of a
    state ``sum_n hh[n] |HH,n> + vv[n] |VV,n>``.
    """
    A = np.vstack([hh, vv]).astype(complex)
    norm = np.sum(np.abs(A) ** 2)
    if abs(norm - 1.0) > NORM_TOL:
        raise InvariantError("unit norm", f"sum |amplitudes|^2 = {norm:.15g}")
    block = A @ A.conj().T
    rho = np.zeros((4, 4), dtype=complex)
    rho[np.ix_([0, 3], [0, 3])] = block
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho, POLARIZATION_LABELS)


def partial_trace_environment(psi) -> DensityMatrix:
    """Trace the momentum pixels out of a total state (HH and VV branches)."""
    amps = np.asarray(psi.amplitudes)
    return reduced_from_branches(amps[0], amps[1])
