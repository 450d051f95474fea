"""Multiscaled random-walk models for toad refuge choice.

Toads forage independently each night with a heavy-tailed (symmetric stable)
displacement and then either settle at the foraging endpoint or return to a
previous refuge, under one of three return rules. The data object is an
(n_days x n_toads) matrix of daytime refuge positions projected onto the
shoreline axis; missing observations are NaN.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _fastpath
from .errors import ParameterDomainError, ShapeError
from .models import ModelSpec
from .seeding import SeedSpec

__all__ = [
    "ToadConfig",
    "LagFeatures",
    "simulate_toads",
    "extract_lag_features",
    "toad_summary_stats",
    "toad_models",
    "load_toad_matrix",
    "TOAD_TRUE_PARAMS",
    "QUANTILE_DIFF_FLOOR",
]

DEFAULT_LAGS = (1, 2, 4, 8)
DEFAULT_RETURN_RADIUS = 10.0
# floor applied to non-positive quantile differences before the log
QUANTILE_DIFF_FLOOR = 1e-12

# parameter estimates used to generate study datasets, per return model
TOAD_TRUE_PARAMS = {
    "M1": (1.7, 34.0, 0.6),
    "M2": (1.83, 46.0, 0.65),
    "M3": (1.65, 32.0, 0.43, 758.0),
}


@dataclass(frozen=True)
class ToadConfig:
    """Geometry and return model for one simulation."""

    model: int  # 1 random return, 2 nearest return, 3 distance-decaying return
    params: tuple  # (alpha, gamma, p0) or (alpha, gamma, p0, d0)
    n_days: int = 63
    n_toads: int = 66
    lags: tuple = DEFAULT_LAGS
    return_radius: float = DEFAULT_RETURN_RADIUS

    def __post_init__(self):
        if self.model not in (1, 2, 3):
            raise ParameterDomainError(f"model must be 1, 2 or 3, got {self.model}")
        if self.n_days < 2 or self.n_toads < 1:
            raise ParameterDomainError("need n_days >= 2 and n_toads >= 1")
        if max(self.lags) >= self.n_days:
            raise ParameterDomainError("lags must be smaller than n_days")
        if self.return_radius <= 0:
            raise ParameterDomainError("return_radius must be > 0")
        want = 4 if self.model == 3 else 3
        if len(self.params) != want:
            raise ParameterDomainError(
                f"model {self.model} takes {want} parameters, got {len(self.params)}"
            )
        _validate_toad_params(self.model, np.asarray(self.params, dtype=float))


def _validate_toad_params(model: int, theta: np.ndarray):
    alpha, gamma, p0 = theta[0], theta[1], theta[2]
    if not 0.0 < alpha <= 2.0:
        raise ParameterDomainError(f"alpha must be in (0, 2], got {alpha}")
    if not gamma > 0.0:
        raise ParameterDomainError(f"gamma must be > 0, got {gamma}")
    if not 0.0 <= p0 <= 1.0:
        raise ParameterDomainError(f"p0 must be in [0, 1], got {p0}")
    if model == 3 and not theta[3] > 0.0:
        raise ParameterDomainError(f"d0 must be > 0, got {theta[3]}")


def _walk_matrix(model: int, theta: np.ndarray, n_days: int, n_toads: int, gen) -> np.ndarray:
    """Draw stable steps and uniforms, then run the return-rule walk."""
    alpha, gamma = theta[0], theta[1]
    p0 = theta[2]
    d0 = theta[3] if model == 3 else 1.0
    shape = (n_days - 1, n_toads)
    u = gen.uniform(-np.pi / 2.0, np.pi / 2.0, size=shape)
    w = gen.standard_exponential(size=shape)
    if alpha == 1.0:
        steps = gamma * np.tan(u)
    else:
        steps = gamma * (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)) * (
            np.cos((1.0 - alpha) * u) / w
        ) ** ((1.0 - alpha) / alpha)
    u_ret = gen.uniform(0.0, 1.0, size=shape)
    u_pick = gen.uniform(0.0, 1.0, size=shape)
    out = np.empty((n_days, n_toads))
    _fastpath.toad_walk(model, steps, u_ret, u_pick, p0, d0, out)
    return out


def simulate_toads(config: ToadConfig, seed) -> np.ndarray:
    """Simulate the (n_days x n_toads) refuge-location matrix."""
    gen = seed.generator() if isinstance(seed, SeedSpec) else seed
    theta = np.asarray(config.params, dtype=float)
    return _walk_matrix(config.model, theta, config.n_days, config.n_toads, gen)


@dataclass
class LagFeatures:
    """Displacement features at one time lag: the return count (displacement
    <= radius) and the non-return displacements themselves."""

    lag: int
    return_count: int
    non_returns: np.ndarray
    n_pairs: int  # valid (day, day + lag) pairs across toads


def extract_lag_features(
    locations: np.ndarray,
    lags: Sequence[int] = DEFAULT_LAGS,
    return_radius: float = DEFAULT_RETURN_RADIUS,
) -> list:
    """Absolute displacements |Y[i + lag, j] - Y[i, j]| per lag, split into
    returns (<= radius) and the retained non-return sample. Pairs with a
    missing endpoint are dropped."""
    y = np.asarray(locations, dtype=float)
    if y.ndim != 2 or y.shape[0] < max(lags) + 1:
        raise ShapeError(f"location matrix needs more rows than max lag, got {y.shape}")
    out = []
    for lag in lags:
        d = np.abs(y[lag:, :] - y[:-lag, :]).ravel()
        d = d[np.isfinite(d)]
        if d.size == 0:
            raise ShapeError(f"no valid pairs at lag {lag}")
        ret = int(np.count_nonzero(d <= return_radius))
        out.append(LagFeatures(lag, ret, d[d > return_radius], d.size))
    return out


def _log_quantile_diffs(non_returns: np.ndarray) -> np.ndarray:
    q = np.quantile(non_returns, np.linspace(0.0, 1.0, 11))
    dq = np.maximum(np.diff(q), QUANTILE_DIFF_FLOOR)
    return np.log(dq)


def toad_summary_stats(features: Sequence[LagFeatures]) -> np.ndarray:
    """44 summary statistics: per lag, the log of the 10 successive differences
    of the 0, 0.1, ..., 1 non-return quantiles plus the return count."""
    parts = []
    for f in features:
        if f.non_returns.size == 0:
            raise ShapeError(f"lag {f.lag} has no non-return displacements")
        parts.append(_log_quantile_diffs(f.non_returns))
        parts.append([float(f.return_count)])
    return np.concatenate(parts)


# --------------------------------------------------------------------------
# model specs


@dataclass(frozen=True)
class _ToadPrior:
    model: int

    def __call__(self, gen):
        alpha = gen.uniform(1.0, 2.0)
        gam = gen.uniform(10.0, 100.0)
        p0 = gen.uniform(0.0, 1.0)
        if self.model == 3:
            return np.array([alpha, gam, p0, gen.uniform(20.0, 2000.0)])
        return np.array([alpha, gam, p0])


@dataclass(frozen=True)
class _ToadSimulator:
    model: int

    def __call__(self, theta, shape, gen):
        n_days, n_toads = shape
        _validate_toad_params(self.model, theta)
        return _walk_matrix(self.model, theta, n_days, n_toads, gen)


@dataclass(frozen=True)
class _ToadSummary:
    lags: tuple = DEFAULT_LAGS
    return_radius: float = DEFAULT_RETURN_RADIUS

    def __call__(self, locations):
        return toad_summary_stats(
            extract_lag_features(locations, self.lags, self.return_radius)
        )


def toad_models(
    lags: tuple = DEFAULT_LAGS, return_radius: float = DEFAULT_RETURN_RADIUS
):
    """The three return-rule candidates with uniform priors alpha ~ U(1,2),
    gamma ~ U(10,100), p0 ~ U(0,1) and, for the distance model, d0 ~ U(20,2000)."""
    eta = _ToadSummary(lags, return_radius)
    names3 = ("alpha", "gamma", "p0")
    return (
        ModelSpec(0, "M1", names3, _ToadPrior(1), _ToadSimulator(1), eta),
        ModelSpec(1, "M2", names3, _ToadPrior(2), _ToadSimulator(2), eta),
        ModelSpec(2, "M3", names3 + ("d0",), _ToadPrior(3), _ToadSimulator(3), eta),
    )


def load_toad_matrix(path):
    """Read the observation matrix from delimited text.

    Rows are days, columns are toads, empty cells are missing. Returns the
    float matrix (missing -> NaN) and a missingness report.
    """
    rows = []
    with open(path, newline="") as fh:
        sample = fh.read(4096)
        fh.seek(0)
        try:
            dialect = csv.Sniffer().sniff(sample, delimiters=",;\t ")
        except csv.Error:
            dialect = csv.excel
        for raw in csv.reader(fh, dialect):
            if not raw or all(c.strip() == "" for c in raw):
                continue
            row = []
            for cell in raw:
                cell = cell.strip()
                if cell == "" or cell.upper() in ("NA", "NAN"):
                    row.append(np.nan)
                else:
                    row.append(float(cell))
            rows.append(row)
    if not rows:
        raise ShapeError(f"no data rows in {path}")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ShapeError(f"ragged rows in {path}: widths {sorted(widths)}")
    mat = np.array(rows, dtype=float)
    n_missing = int(np.isnan(mat).sum())
    report = {
        "n_days": mat.shape[0],
        "n_toads": mat.shape[1],
        "n_missing": n_missing,
        "missing_fraction": n_missing / mat.size,
    }
    return mat, report
