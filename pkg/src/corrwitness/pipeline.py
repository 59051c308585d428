"""End-to-end runs behind the CLI subcommands.

Each ``run_*`` function takes an :class:`ExperimentConfig`, writes its files
next to ``cfg.out`` and returns the report dictionary that went into the
machine-readable trailer.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from pathlib import Path

import numpy as np

from . import counts as cs
from . import tomography as tomo
from .config import ExperimentConfig, grid_of, phase_of
from .dynamics import INCREASE_TOL, bound_check, default_a_grid, semigroup_witness, sweep
from .photon import (
    ConsistencyError,
    PhaseFunction,
    WindowTruncationWarning,
    gaussian_profile,
    load_table,
    random_odd_phase,
    reduced_state,
    table_on_grid,
    tabulated_profile,
)

TRAILER = "--- machine-readable ---"
ESTIMATE_HEADER = ["a", "v1_hat", "v1_sigma", "v2_hat", "v2_sigma", "d_hat", "d_sigma", "d_model"]


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    if isinstance(x, (list, tuple)):
        return " ".join(_fmt(v) for v in x)
    return f"{float(x):.12g}"


def write_report(path: str | Path, title: str, fields: dict) -> None:
    """Plain ``key: value`` lines followed by a JSON trailer with the same data."""
    lines = [f"# {title}"]
    lines += [f"{k}: {_fmt(v)}" for k, v in fields.items()]
    lines.append(TRAILER)
    lines.append(json.dumps(fields, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trailer(path: str | Path) -> dict:
    text = Path(path).read_text()
    return json.loads(text.split(TRAILER, 1)[1])


def companion(out: str | Path, suffix: str) -> Path:
    out = Path(out)
    return out.with_name(out.name + suffix)


def profile_of(cfg: ExperimentConfig):
    grid = grid_of(cfg)
    if cfg.profile_table:
        offsets, values = load_table(cfg.profile_table)
        return tabulated_profile(grid, table_on_grid(grid, offsets, values, fill=0.0))
    with warnings.catch_warnings():
        # the default 33-pixel window is intentionally narrower than 3 x FWHM
        warnings.simplefilter("ignore", WindowTruncationWarning)
        return gaussian_profile(grid, cfg.fwhm_mrad, width_of=cfg.fwhm_of)


def run_sweep(cfg: ExperimentConfig) -> dict:
    profile = profile_of(cfg)
    grid = profile.grid
    f1, f2 = phase_of(cfg, "phase1", grid), phase_of(cfg, "phase2", grid)
    a_grid = default_a_grid(cfg.a_start, cfg.a_stop, cfg.a_step)
    curve = sweep(profile, f1, f2, cfg.V0, a_grid)
    curve.to_csv(cfg.out)
    report = bound_check(curve)
    fields = {
        "phase1": f1.describe(),
        "phase2": f2.describe(),
        "V0": cfg.V0,
        "points": int(a_grid.size),
        **report.as_dict(),
    }
    if f1.kind == "zero" and f2.kind == "linear" and f2.param > 0:
        sg = semigroup_witness(profile, cfg.V0, f2.param, a_grid)
        fields["semigroup_violated"] = sg.semigroup_violated
    if cfg.n_total > 0:
        fields.update(_simulate_sweep_counts(cfg, profile, f1, f2, a_grid, curve.trace_distance))
    write_report(companion(cfg.out, ".report.txt"), "trace-distance sweep", fields)
    if report.bound_satisfied is False:
        raise ConsistencyError(
            f"trace-distance increase {report.max_increase:.3e} exceeds I12(0) = {report.i12_bound:.3e}")
    return fields


def _simulate_sweep_counts(cfg, profile, f1, f2, a_grid, d_model) -> dict:
    """Counts at (45,45) and (45,-45) for both states at every grid point.

    Record ``r`` of point ``k`` uses seed ``4 * (seed + k) + r``.
    """
    records = []
    rows = []
    within = 0
    for k, a in enumerate(a_grid):
        rho1 = reduced_state(profile, f1, a, cfg.V0)
        rho2 = reduced_state(profile, f2, a, cfg.V0)
        v1, s1, r1 = cs.measure_visibility(rho1, cfg.n_total, cs.point_seed(cfg.seed, k, 0), cs.point_seed(cfg.seed, k, 1))
        v2, s2, r2 = cs.measure_visibility(rho2, cfg.n_total, cs.point_seed(cfg.seed, k, 2), cs.point_seed(cfg.seed, k, 3))
        records += r1 + r2
        d_hat = 0.5 * abs(v1 - v2)
        d_sig = 0.5 * math.hypot(s1, s2)
        within += abs(d_hat - d_model[k]) <= 3 * d_sig
        rows.append([a, v1, s1, v2, s2, d_hat, d_sig, d_model[k]])
    cs.write_records(companion(cfg.out, ".counts.csv"), records)
    with open(companion(cfg.out, ".estimate.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ESTIMATE_HEADER)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return {"n_total": cfg.n_total, "seed": cfg.seed, "points_within_3sigma": int(within)}


def run_tomography(cfg: ExperimentConfig, a: float | None = None) -> dict:
    profile = profile_of(cfg)
    a = cfg.tomo_a if a is None else a
    f = phase_of(cfg, cfg.tomo_phase, profile.grid)
    rho0 = reduced_state(profile, f, a, cfg.V0)
    pset = tomo.projector_set(cfg.projector_set)
    records = tomo.simulate_records(rho0, pset, cfg.tomo_n_total, cfg.seed)
    tomo.write_records(companion(cfg.out, ".counts.csv"), records)
    result = tomo.ml_reconstruct(records, seed=cfg.seed)
    has_diagonal = {"DD", "DA", "AD", "AA"} <= set(pset.labels)
    v_diag, s_diag = tomo.diagonal_visibility(records) if has_diagonal else (None, None)
    R = result.rho_hat.entries
    extra = {
        "phase": f.describe(),
        "a": a,
        "n_total": cfg.tomo_n_total,
        "seed": cfg.seed,
        "projector_set": cfg.projector_set,
        "visibility_true": float(np.real(2 * rho0.entries[0, 3])),
        "visibility_counts": v_diag,
        "visibility_counts_sigma": s_diag,
        "hv_population": float(R[1, 1].real),
        "vh_population": float(R[2, 2].real),
    }
    tomo.write_reconstruction(cfg.out, result, extra)
    return {**result.metadata(), "visibility": tomo.visibility_of(result.rho_hat), **extra}


def run_bound_demo(cfg: ExperimentConfig) -> dict:
    """I12(0) against the largest trace-distance increase for the configured pair
    and for ``random_phases`` seeded random odd phases against f = 0."""
    profile = profile_of(cfg)
    grid = profile.grid
    a_grid = default_a_grid(cfg.a_start, cfg.a_stop, cfg.a_step)
    f1, f2 = phase_of(cfg, "phase1", grid), phase_of(cfg, "phase2", grid)
    main = bound_check(sweep(profile, f1, f2, cfg.V0, a_grid))
    fields = {
        "phase1": f1.describe(),
        "phase2": f2.describe(),
        "i12_bound": main.i12_bound,
        "max_increase": main.max_increase,
        "margin": main.i12_bound - main.max_increase,
    }
    rng = np.random.default_rng(cfg.seed)
    margins = []
    for _ in range(cfg.random_phases):
        rep = bound_check(sweep(profile, PhaseFunction.zero(), random_odd_phase(grid, rng), cfg.V0, a_grid))
        margins.append(rep.i12_bound - rep.max_increase)
    fields["random_phases"] = cfg.random_phases
    fields["random_min_margin"] = min(margins) if margins else None
    fields["random_margins"] = margins
    write_report(cfg.out, "initial-information bound", fields)
    worst = min([fields["margin"]] + margins)
    if worst < -INCREASE_TOL:
        raise ConsistencyError(f"bound violated: margin {worst:.3e}")
    return fields
