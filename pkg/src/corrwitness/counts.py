"""Coincidence counting behind linear polarizers, with Poisson noise.

Polarizer convention: a polarizer at angle beta transmits
``cos(beta)|H> + sin(beta)|V>``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .qstate import DensityMatrix, as_density_matrix

COUNTS_HEADER = ["beta1_deg", "beta2_deg", "n_total", "observed", "seed"]
DEFAULT_N_TOTAL = 10_000
PLUS = math.radians(45.0)
MINUS = math.radians(-45.0)


@dataclass(frozen=True)
class PolarizerSetting:
    """Idler and signal polarizer angles in radians (meaningful mod pi)."""

    beta1: float
    beta2: float

    @classmethod
    def degrees(cls, beta1_deg: float, beta2_deg: float) -> "PolarizerSetting":
        return cls(math.radians(beta1_deg), math.radians(beta2_deg))

    def ket(self) -> np.ndarray:
        b1 = np.array([math.cos(self.beta1), math.sin(self.beta1)])
        b2 = np.array([math.cos(self.beta2), math.sin(self.beta2)])
        return np.kron(b1, b2).astype(complex)


DIAGONAL = PolarizerSetting(PLUS, PLUS)
ANTIDIAGONAL = PolarizerSetting(PLUS, MINUS)


@dataclass(frozen=True)
class CountRecord:
    setting: PolarizerSetting
    expected_rate: float
    observed: int
    n_total: int
    rng_seed: int

    def __post_init__(self):
        if self.observed < 0:
            raise ValueError("observed counts must be non-negative")
        if self.n_total <= 0:
            raise ValueError("n_total must be positive")
        if self.expected_rate > self.n_total * (1 + 1e-12):
            raise ValueError("expected rate exceeds n_total")


def coincidence_probability(rho: DensityMatrix, setting: PolarizerSetting) -> float:
    """Born-rule probability of a coincidence behind the two polarizers."""
    rho = as_density_matrix(rho)
    if rho.dim != 4:
        raise ValueError(f"two-qubit state required, got dim {rho.dim}")
    v = setting.ket()
    p = float(np.real(np.vdot(v, rho.entries @ v)))
    return min(max(p, 0.0), 1.0)


def simulate_counts(p: float, n_total: int, seed: int, setting: PolarizerSetting | None = None) -> CountRecord:
    """One Poisson draw with mean ``p * n_total`` from a generator seeded by ``seed``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    if n_total <= 0:
        raise ValueError("n_total must be positive")
    rng = np.random.default_rng(seed)
    mean = p * n_total
    observed = int(rng.poisson(mean))
    return CountRecord(setting or DIAGONAL, mean, observed, int(n_total), int(seed))


def visibility_from_counts(c_plus: CountRecord, c_minus: CountRecord) -> tuple[float, float]:
    """Visibility ``(C++ - C+-)/(C++ + C+-)`` and its first-order Poisson error."""
    cp, cm = float(c_plus.observed), float(c_minus.observed)
    total = cp + cm
    if total <= 0:
        raise ValueError("no coincidences recorded in either setting")
    estimate = (cp - cm) / total
    sigma = 2.0 * math.sqrt(cp * cm / total ** 3)
    return estimate, sigma


def point_seed(seed: int, index: int, record: int = 0, per_point: int = 4) -> int:
    """Seed for record ``record`` of grid point ``index``: ``per_point * (seed + index) + record``."""
    return per_point * (seed + index) + record


def measure_visibility(rho: DensityMatrix, n_total: int, seed_a: int, seed_b: int) -> tuple[float, float, list[CountRecord]]:
    """Simulate the two diagonal settings on ``rho`` and estimate the visibility."""
    rp = simulate_counts(coincidence_probability(rho, DIAGONAL), n_total, seed_a, DIAGONAL)
    rm = simulate_counts(coincidence_probability(rho, ANTIDIAGONAL), n_total, seed_b, ANTIDIAGONAL)
    v, s = visibility_from_counts(rp, rm)
    return v, s, [rp, rm]


def write_records(path: str | Path, records: Sequence[CountRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COUNTS_HEADER)
        for r in records:
            writer.writerow([
                f"{math.degrees(r.setting.beta1):.12g}",
                f"{math.degrees(r.setting.beta2):.12g}",
                r.n_total,
                r.observed,
                r.rng_seed,
            ])


def read_records(path: str | Path) -> list[CountRecord]:
    """Load records written by :func:`write_records`.

    The expected rate is not stored in the file and comes back as NaN.
    """
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COUNTS_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            out.append(CountRecord(
                PolarizerSetting.degrees(float(row["beta1_deg"]), float(row["beta2_deg"])),
                float("nan"),
                int(row["observed"]),
                int(row["n_total"]),
                int(row["seed"]),
            ))
    return out
