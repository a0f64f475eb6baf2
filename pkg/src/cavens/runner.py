"""Scenario orchestration: witness time series, sign matrices, drive sweeps.

The sign matrix scores, for every configuration and drive strength, whether
each witness dips below its classical boundary anywhere on the sampled time
grid (excluding tau = 0).  A dip only counts when it clears the scenario
threshold, which separates genuine features from integrator noise; every
cell keeps its evidence (the attained minimum and the time it occurred).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory, integrate
from .model import Configuration, Scenario, initial_state, preset_params
from .witnesses import (
    MODE_KEYS,
    ORDERED_PAIR_KEYS,
    PAIR_KEYS,
    PARTITION_KEYS,
    WitnessRecord,
    evaluate,
)

__all__ = [
    "WitnessSeries",
    "SignCell",
    "SignMatrix",
    "SweepSurface",
    "SIGN_ROWS",
    "run_scenario",
    "table_matrix",
    "chi_sweep",
]


@dataclass(frozen=True)
class WitnessSeries:
    """Witness records aligned with a trajectory's time grid."""

    taus: np.ndarray
    records: list

    def __post_init__(self):
        if len(self.records) != len(self.taus):
            raise ValueError("records and time grid differ in length")

    def __len__(self) -> int:
        return len(self.records)

    @staticmethod
    def column_names() -> list[str]:
        return WitnessRecord.column_names()

    def column(self, name: str) -> np.ndarray:
        names = self.column_names()
        try:
            i = names.index(name)
        except ValueError:
            raise KeyError(f"unknown witness column {name!r}") from None
        return np.array([r.column_values()[i] for r in self.records])


def run_scenario(scenario: Scenario) -> tuple[Trajectory, WitnessSeries]:
    """Integrate the moment system and evaluate every witness at every sample."""
    traj = integrate(scenario)
    records = [evaluate(traj.state_at(i)) for i in range(len(traj))]
    return traj, WitnessSeries(traj.taus, records)


# (row name, cell keys, classical boundary, extractor(record, key))
SIGN_ROWS = (
    ("mandel", MODE_KEYS, 0.0, lambda r, k: r.mandel[k]),
    ("squeeze", MODE_KEYS, 0.25, lambda r, k: min(r.var_x[k], r.var_y[k])),
    ("squeeze_pair", PAIR_KEYS, 0.25, lambda r, k: min(r.var_x_pair[k], r.var_y_pair[k])),
    ("hz_e", PAIR_KEYS, 0.0, lambda r, k: r.hz_e[k]),
    ("hz_etilde", PAIR_KEYS, 0.0, lambda r, k: r.hz_etilde[k]),
    ("duan", PAIR_KEYS, 0.0, lambda r, k: r.duan[k]),
    ("bisep_e", PARTITION_KEYS, 0.0, lambda r, k: r.bisep_e[k]),
    ("bisep_eprime", PARTITION_KEYS, 0.0, lambda r, k: r.bisep_eprime[k]),
    ("antibunch", MODE_KEYS, 0.0, lambda r, k: r.antibunch[k]),
    ("antibunch_pair", PAIR_KEYS, 0.0, lambda r, k: r.antibunch_pair[k]),
    ("steering", ORDERED_PAIR_KEYS, 0.0, lambda r, k: r.steering[k]),
)


@dataclass(frozen=True)
class SignCell:
    """One tick/cross decision with its evidence."""

    config: str
    chi: float
    row: str
    cell: str
    tick: bool
    min_value: float
    argmin_tau: float


@dataclass(frozen=True)
class SignMatrix:
    """All cells for every (configuration, chi) column, in fixed row order."""

    threshold: float
    t_max: float
    cells: tuple

    def cell(self, config: str, chi: float, row: str, cell: str) -> SignCell:
        for c in self.cells:
            if (
                c.config == config
                and c.row == row
                and c.cell == cell
                and math.isclose(c.chi, chi, abs_tol=1e-12)
            ):
                return c
        raise KeyError(f"no cell ({config}, {chi}, {row}, {cell})")

    def tick(self, config: str, chi: float, row: str, cell: str) -> bool:
        return self.cell(config, chi, row, cell).tick


def _score_series(taus, values, boundary, threshold):
    """Minimum over tau > 0 and the tick decision; NaN samples are skipped."""
    vals = np.asarray(values, dtype=float)[1:]
    ts = taus[1:]
    mask = np.isfinite(vals)
    if not mask.any():
        return False, math.nan, math.nan
    i = int(np.nanargmin(np.where(mask, vals, np.inf)))
    vmin = float(vals[i])
    return vmin < boundary - threshold, vmin, float(ts[i])


def table_matrix(
    t_max: float = 10.0,
    threshold: float = 1e-4,
    sample_count: int = 1001,
    abs_tol: float = 1e-10,
    rel_tol: float = 1e-9,
    chis: tuple = (0.0, 0.2),
    init_occupations: tuple = (1.0, 1.0, 1.0),
) -> SignMatrix:
    """Sign matrix over all four configurations and the given drive strengths."""
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    cells = []
    for config in Configuration:
        for chi in chis:
            scenario = Scenario(
                params=preset_params(config, chi),
                initial=initial_state(*init_occupations),
                t_max=t_max,
                sample_count=sample_count,
                abs_tol=abs_tol,
                rel_tol=rel_tol,
                threshold=threshold,
            )
            _, series = run_scenario(scenario)
            for row, keys, boundary, get in SIGN_ROWS:
                for key in keys:
                    values = [get(r, key) for r in series.records]
                    tick, vmin, argmin = _score_series(
                        series.taus, values, boundary, threshold
                    )
                    cells.append(
                        SignCell(config.name, chi, row, key, tick, vmin, argmin)
                    )
    return SignMatrix(threshold=threshold, t_max=t_max, cells=tuple(cells))


@dataclass(frozen=True)
class SweepSurface:
    """One witness on a (chi, tau) grid; rows are independent scenario runs."""

    config: str
    witness: str
    chis: np.ndarray
    taus: np.ndarray
    values: np.ndarray   # shape (len(chis), len(taus))
    status: tuple        # "ok" or the per-row failure message


def chi_sweep(
    config: "str | Configuration",
    chis,
    witness: str,
    t_max: float = 10.0,
    sample_count: int = 1001,
    abs_tol: float = 1e-10,
    rel_tol: float = 1e-9,
    init_occupations: tuple = (1.0, 1.0, 1.0),
) -> SweepSurface:
    """Run one scenario per drive strength and collect one witness column.

    Failed rows are retained as NaN with a per-row status message; the other
    rows are unaffected.
    """
    config = Configuration.parse(config)
    chis = np.asarray(list(chis), dtype=float)
    if chis.size == 0:
        raise ValueError("chi grid must be non-empty")
    if witness not in WitnessRecord.column_names():
        raise KeyError(f"unknown witness column {witness!r}")
    taus = np.linspace(0.0, t_max, sample_count)
    values = np.full((chis.size, taus.size), np.nan)
    status = []
    for i, chi in enumerate(chis):
        scenario = Scenario(
            params=preset_params(config, float(chi)),
            initial=initial_state(*init_occupations),
            t_max=t_max,
            sample_count=sample_count,
            abs_tol=abs_tol,
            rel_tol=rel_tol,
        )
        try:
            _, series = run_scenario(scenario)
            values[i] = series.column(witness)
            status.append("ok")
        except Exception as exc:  # keep the sweep going; row stays NaN
            status.append(f"error: {exc}")
    return SweepSurface(
        config=config.name,
        witness=witness,
        chis=chis,
        taus=taus,
        values=values,
        status=tuple(status),
    )
