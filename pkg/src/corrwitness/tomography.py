"""Two-qubit polarization tomography with maximum-likelihood reconstruction.

Counts are modelled as independent Poisson variables with mean
``n_total * <psi_k|rho|psi_k>``. The estimate is parameterized as
``rho = T^dag T / Tr(T^dag T)`` with ``T`` lower triangular (4 real diagonal
entries, 6 complex off-diagonal ones), which keeps it physical without any
clipping. The likelihood is maximized by a gradient-only (limited-memory
BFGS) ascent with a monotone backtracking line search.
"""
from __future__ import annotations

import csv
import itertools
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .qstate import POLARIZATION_LABELS, DensityMatrix, Projector, as_density_matrix

_S = 1 / np.sqrt(2)
SINGLE_QUBIT = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_S, _S], dtype=complex),
    "A": np.array([_S, -_S], dtype=complex),
    "R": np.array([_S, 1j * _S], dtype=complex),
    "L": np.array([_S, -1j * _S], dtype=complex),
}
BASES = (("H", "V"), ("D", "A"), ("R", "L"))
MINIMAL_16 = ("HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
              "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL")

PROBABILITY_FLOOR = 1e-12
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 100_000
LBFGS_MEMORY = 8
RECORDS_HEADER = ["label", "n_total", "observed"]

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_LABELS = tuple(a + b for a in "IXYZ" for b in "IXYZ")
_PAULI_OPS = np.array([np.kron(_PAULI[a], _PAULI[b]) for a, b in PAULI_LABELS])


class IncompleteRecordsError(ValueError):
    """The measured projectors leave part of the state undetermined."""


class IncompleteTomographyWarning(UserWarning):
    pass


def ket(label: str) -> np.ndarray:
    """Two-qubit product ket for a label such as ``"HD"`` (idler first)."""
    if len(label) != 2 or any(c not in SINGLE_QUBIT for c in label):
        raise ValueError(f"unknown projector label {label!r}")
    return np.kron(SINGLE_QUBIT[label[0]], SINGLE_QUBIT[label[1]])


@dataclass(frozen=True, eq=False)
class TomographyProjectorSet:
    labels: tuple[str, ...]
    kind: str

    @property
    def kets(self) -> np.ndarray:
        return np.array([ket(lab) for lab in self.labels])

    @property
    def projectors(self) -> list[Projector]:
        return [Projector(np.outer(v, v.conj())) for v in self.kets]

    def groups(self) -> list[tuple[str, ...]]:
        """Complete 4-outcome measurement groups (overcomplete set only)."""
        if self.kind != "overcomplete-36":
            return []
        return [tuple(self.labels[4 * i:4 * i + 4]) for i in range(9)]

    def __len__(self) -> int:
        return len(self.labels)


def projector_set(kind: str = "overcomplete-36") -> TomographyProjectorSet:
    if kind == "overcomplete-36":
        labels = []
        for b1, b2 in itertools.product(BASES, BASES):
            labels.extend(x + y for x in b1 for y in b2)
        return TomographyProjectorSet(tuple(labels), kind)
    if kind == "minimal-16":
        return TomographyProjectorSet(MINIMAL_16, kind)
    raise ValueError(f"unknown projector set {kind!r}")


@dataclass(frozen=True)
class TomographyRecord:
    label: str
    n_total: float
    observed: float


def expected_records(rho, pset: TomographyProjectorSet, n_total: float) -> list[TomographyRecord]:
    """Noiseless records: every count equals its Poisson mean."""
    p = probabilities(rho, pset.labels)
    return [TomographyRecord(lab, float(n_total), float(n_total * pk)) for lab, pk in zip(pset.labels, p)]


def simulate_records(rho, pset: TomographyProjectorSet, n_total: int, seed: int) -> list[TomographyRecord]:
    rng = np.random.default_rng(seed)
    p = probabilities(rho, pset.labels)
    obs = rng.poisson(n_total * p)
    return [TomographyRecord(lab, int(n_total), int(c)) for lab, c in zip(pset.labels, obs)]


def probabilities(rho, labels: Sequence[str]) -> np.ndarray:
    R = as_density_matrix(rho).entries
    K = np.array([ket(lab) for lab in labels])
    p = np.real(np.einsum("ki,ij,kj->k", K.conj(), R, K))
    return np.clip(p, 0.0, 1.0)


def _arrays(records: Sequence[TomographyRecord]):
    if not records:
        raise ValueError("no tomography records")
    kets = np.ascontiguousarray(np.array([ket(r.label) for r in records]))
    counts = np.array([float(r.observed) for r in records])
    totals = np.array([float(r.n_total) for r in records])
    if np.any(counts < 0) or np.any(totals <= 0):
        raise ValueError("counts must be non-negative and n_total positive")
    with np.errstate(divide="ignore"):
        logref = np.where(counts > 0, np.log(np.where(counts > 0, counts, 1.0) / totals), 0.0)
    return kets, counts, totals, logref


def log_likelihood(rho_params, records: Sequence[TomographyRecord]) -> tuple[float, np.ndarray]:
    """Poisson log-likelihood and its analytic gradient in the 16 factor parameters.

    The value is relative to the saturated model, i.e. differs from
    ``sum_k c_k ln p_k - N_k p_k`` only by a constant.
    """
    kets, counts, totals, logref = _arrays(records)
    params = np.ascontiguousarray(rho_params, dtype=float)
    return kernels.loglik_grad(params, kets, counts, totals, logref, PROBABILITY_FLOOR)


def rho_from_params(params) -> DensityMatrix:
    T = kernels.params_to_factor(np.asarray(params, dtype=float))
    M = T.conj().T @ T
    M = M / np.trace(M).real
    return DensityMatrix(0.5 * (M + M.conj().T), POLARIZATION_LABELS)


def _psd_cholesky(M: np.ndarray) -> np.ndarray:
    """Lower factor ``L`` with ``M = L L^dag`` that tolerates zero pivots."""
    n = M.shape[0]
    L = np.zeros_like(M, dtype=complex)
    scale = max(np.max(np.abs(np.diag(M))), 1.0)
    for j in range(n):
        d = M[j, j].real - np.sum(np.abs(L[j, :j]) ** 2)
        if d <= 1e-14 * scale:
            continue
        L[j, j] = np.sqrt(d)
        for i in range(j + 1, n):
            L[i, j] = (M[i, j] - np.dot(L[i, :j], L[j, :j].conj())) / L[j, j]
    return L


def params_from_rho(rho) -> np.ndarray:
    """Factor parameters that reproduce ``rho`` (rank-deficient states allowed)."""
    R = as_density_matrix(rho).entries
    J = np.eye(4)[::-1]
    L = _psd_cholesky(J @ R @ J)
    T = J @ L.conj().T @ J
    return kernels.factor_to_params(T)


def check_completeness(labels: Sequence[str]) -> None:
    """Raise unless the records at least fix the {HH, VV} block of the state.

    A set that fixes the block but not the full two-qubit state only warns.
    """
    K = np.array([ket(lab) for lab in labels])
    A = np.real(np.einsum("ki,pij,kj->kp", K.conj(), _PAULI_OPS, K))
    if np.linalg.matrix_rank(A, tol=1e-9) == 16:
        return
    block_ops = {
        "HH population": np.diag([1, 0, 0, 0]).astype(complex),
        "VV population": np.diag([0, 0, 0, 1]).astype(complex),
        "Re HH-VV coherence": np.zeros((4, 4), dtype=complex),
        "Im HH-VV coherence": np.zeros((4, 4), dtype=complex),
    }
    block_ops["Re HH-VV coherence"][0, 3] = block_ops["Re HH-VV coherence"][3, 0] = 1
    block_ops["Im HH-VV coherence"][0, 3] = -1j
    block_ops["Im HH-VV coherence"][3, 0] = 1j
    # Pauli coordinates of the block operators
    B = np.array([[np.real(np.trace(P @ op)) / 4 for P in _PAULI_OPS] for op in block_ops.values()]).T
    AB = A @ B
    if np.linalg.matrix_rank(AB, tol=1e-9) < 4:
        _, sv, vh = np.linalg.svd(AB)
        null = vh[np.sum(sv > 1e-9):]
        names = [name for name, w in zip(block_ops, np.max(np.abs(null), axis=0)) if w > 1e-6]
        raise IncompleteRecordsError(
            "records do not determine the span{HH,VV} block; unresolved: " + ", ".join(names))
    warnings.warn("records fix only the span{HH,VV} block; the rest of the estimate follows the "
                  "initialization", IncompleteTomographyWarning, stacklevel=3)


@dataclass(frozen=True, eq=False)
class TomographyResult:
    rho_hat: DensityMatrix
    log_likelihood: float
    iterations: int
    converged: bool
    final_gradient_norm: float
    history: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def metadata(self) -> dict:
        return {
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "final_gradient_norm": self.final_gradient_norm,
        }


def _initial_params(rng: np.random.Generator) -> np.ndarray:
    while True:
        x = np.zeros(16)
        x[:4] = 0.5
        x += 1e-3 * rng.standard_normal(16)
        if np.sum(x ** 2) >= 1e-12:
            return x


def _lbfgs_direction(g: np.ndarray, pairs) -> np.ndarray:
    """Two-loop recursion for the ascent direction of a concave-like objective.

    ``pairs`` holds ``(s, y, 1/(s.y))`` with ``y`` the negated gradient change,
    so the recursion is the usual minimization one applied to ``-f``.
    """
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * np.dot(s, q)
        q -= a * y
        alphas.append(a)
    if pairs:
        s, y, _ = pairs[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


def ml_reconstruct(records: Sequence[TomographyRecord], tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER, seed: int = 0) -> TomographyResult:
    """Maximum-likelihood two-qubit state from projector counts.

    Starts at the maximally mixed state plus a seeded jitter. The objective
    and gradient are divided by the total number of trials so that ``tol``
    is independent of the count scale. Returns the best iterate with
    ``converged=False`` if ``max_iter`` is reached first.
    """
    kets, counts, totals, logref = _arrays(records)
    check_completeness([r.label for r in records])
    norm = float(np.sum(totals))
    rng = np.random.default_rng(seed)

    def fun(x):
        v, g = kernels.loglik_grad(x, kets, counts, totals, logref, PROBABILITY_FLOOR)
        return v / norm, g / norm

    x = _initial_params(rng)
    f, g = fun(x)
    history = [f]
    pairs: list[tuple[np.ndarray, np.ndarray, float]] = []
    gnorm = float(np.linalg.norm(g))
    converged = gnorm <= tol
    it = 0
    while not converged and it < max_iter:
        it += 1
        d = _lbfgs_direction(g, pairs)
        slope = float(np.dot(d, g))
        if slope <= 0.0:
            pairs.clear()
            d, slope = g.copy(), gnorm * gnorm
        t = 1.0
        while True:
            xn = x + t * d
            fn, gn = fun(xn)
            if fn >= f + 1e-4 * t * slope or (fn >= f and np.dot(gn, d) >= 0.0):
                break
            t *= 0.5
            if t < 1e-20:
                xn = None
                break
        if xn is None:
            if pairs:
                # stale curvature memory; retry from a plain gradient step
                pairs.clear()
                continue
            break
        s, y = xn - x, gn - g
        sy = -float(np.dot(s, y))
        if sy > 1e-16 * float(np.dot(s, s)):
            pairs.append((s, -y, 1.0 / sy))
            if len(pairs) > LBFGS_MEMORY:
                pairs.pop(0)
        x, f, g = xn, fn, gn
        scale2 = float(np.dot(x, x))
        if scale2 < 1e-12:
            x = _initial_params(rng)
            f, g = fun(x)
            pairs.clear()
        elif not 0.25 <= scale2 <= 4.0:
            c = np.sqrt(scale2)
            x, g = x / c, g * c
            pairs.clear()
        history.append(f)
        gnorm = float(np.linalg.norm(g))
        converged = gnorm <= tol
    return TomographyResult(
        rho_hat=rho_from_params(x),
        log_likelihood=f * norm,
        iterations=it,
        converged=bool(converged),
        final_gradient_norm=gnorm,
        history=np.array(history),
    )


def visibility_of(rho) -> float:
    """``2 Re <HH|rho|VV>``."""
    return float(2.0 * np.real(as_density_matrix(rho).entries[0, 3]))


def diagonal_visibility(records: Sequence[TomographyRecord]) -> tuple[float, float]:
    """Visibility and first-order Poisson error from the D/A x D/A records."""
    by_label = {r.label: float(r.observed) for r in records}
    try:
        cp = by_label["DD"] + by_label["AA"]
        cm = by_label["DA"] + by_label["AD"]
    except KeyError as exc:
        raise ValueError(f"diagonal-basis record {exc} missing") from None
    total = cp + cm
    if total <= 0:
        raise ValueError("no diagonal-basis counts")
    return (cp - cm) / total, 2.0 * np.sqrt(cp * cm / total ** 3)


def write_records(path: str | Path, records: Sequence[TomographyRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORDS_HEADER)
        for r in records:
            w.writerow([r.label, _num(r.n_total), _num(r.observed)])


def read_records(path: str | Path) -> list[TomographyRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RECORDS_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [TomographyRecord(row["label"].strip(), float(row["n_total"]), float(row["observed"]))
                for row in reader]


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def format_matrix(rho) -> str:
    R = as_density_matrix(rho).entries
    rows = []
    for i in range(R.shape[0]):
        rows.append(" ".join(f"{R[i, j].real:+.12e} {R[i, j].imag:+.12e}" for j in range(R.shape[1])))
    return "\n".join(rows)


def write_reconstruction(path: str | Path, result: TomographyResult, extra: dict | None = None) -> None:
    """4x4 grid of (re, im) pairs followed by a JSON metadata block."""
    meta = dict(result.metadata())
    meta["visibility"] = visibility_of(result.rho_hat)
    if extra:
        meta.update(extra)
    text = ("# reconstructed density matrix, rows/cols HH HV VH VV, (re im) pairs\n"
            + format_matrix(result.rho_hat)
            + "\n# metadata\n"
            + json.dumps(meta, indent=2, sort_keys=True) + "\n")
    Path(path).write_text(text)


def read_reconstruction(path: str | Path) -> tuple[np.ndarray, dict]:
    lines = Path(path).read_text().splitlines()
    rows, meta_lines, in_meta = [], [], False
    for line in lines:
        if line.startswith("# metadata"):
            in_meta = True
        elif in_meta:
            meta_lines.append(line)
        elif line and not line.startswith("#"):
            vals = [float(x) for x in line.split()]
            rows.append([complex(vals[2 * j], vals[2 * j + 1]) for j in range(len(vals) // 2)])
    return np.array(rows), json.loads("\n".join(meta_lines))
