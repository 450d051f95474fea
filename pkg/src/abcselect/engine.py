"""Rejection ABC for model choice: joint (model, parameter, dataset) simulation,
distance recording, post-hoc quantile thresholding, posterior estimation.

The sampler is the store-then-cut equivalent of the repeat-until-accept loop:
all N draws are generated unconditionally with their distances recorded, and a
threshold policy keeps the closest q-quantile afterwards. Draw i consumes only
the stream (master_seed, i), so runs are byte-identical for any worker count.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _fastpath
from .discrepancies import (
    DistanceRecord,
    KernelSpec,
    combine_distances,
    log_transform,
    median_heuristic,
    summary_distance,
)
from .errors import ParameterDomainError, PolicyError, ShapeError
from .models import ModelSpec
from .seeding import DrawStreams, SeedSpec, derive_seed
from .toads import extract_lag_features, toad_summary_stats

__all__ = [
    "AbcMethod",
    "AbcRun",
    "ThresholdPolicy",
    "PosteriorEstimate",
    "IidAdapter",
    "ToadAdapter",
    "run_abc",
    "run_abc_multi",
    "apply_threshold",
    "estimate_mad_weights",
    "posterior_param_summary",
    "save_run",
    "load_run",
]

_MAX_RETRIES = 3
_RETRY_STRIDE = 1 << 48  # retry r of draw i uses stream i + r * stride


@dataclass(frozen=True)
class AbcMethod:
    """How a draw is compared to the observed data.

    kind "summary": distance between summary vectors under ``metric``
    (optionally MAD-weighted). kind "discrepancy": a statistical distance on
    the raw samples ("cvm", "wasserstein1", "mmd", "energy"), optionally on
    log-transformed data. kind "combined": the movement-study plan, one
    return-count distance plus one statistical distance per lag, combined
    post hoc with weight ``omega``.
    """

    name: str
    kind: str
    distance: Optional[str] = None
    log_transform: bool = False
    kernel: Optional[KernelSpec] = None
    metric: str = "euclidean"
    mad_weighting: bool = False
    omega: float = 0.2

    def __post_init__(self):
        if self.kind not in ("summary", "discrepancy", "combined"):
            raise ParameterDomainError(f"unknown method kind {self.kind!r}")
        if self.kind in ("discrepancy", "combined"):
            if self.distance not in ("cvm", "wasserstein1", "mmd", "energy"):
                raise ParameterDomainError(f"unknown distance {self.distance!r}")
        if not 0.0 <= self.omega <= 1.0:
            raise ParameterDomainError(f"omega must be in [0, 1], got {self.omega}")

    @staticmethod
    def summary(name="ABC-Stat", metric="euclidean", mad_weighting=False):
        return AbcMethod(name=name, kind="summary", metric=metric, mad_weighting=mad_weighting)

    @staticmethod
    def discrepancy(name, distance, log=False, kernel=None):
        if distance == "mmd" and kernel is None:
            kernel = KernelSpec()
        return AbcMethod(name=name, kind="discrepancy", distance=distance,
                         log_transform=log, kernel=kernel)

    @staticmethod
    def combined(name, distance, omega=0.2, log=False, kernel=None):
        if distance == "mmd" and kernel is None:
            kernel = KernelSpec()
        return AbcMethod(name=name, kind="combined", distance=distance,
                         log_transform=log, kernel=kernel, omega=omega)


@dataclass(frozen=True)
class ThresholdPolicy:
    """Keep the ceil(q * N) smallest-distance draws."""

    q: float

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise PolicyError(f"quantile must lie in (0, 1], got {self.q}")

    def n_accepted(self, n_draws: int) -> int:
        m = math.ceil(self.q * n_draws)
        if m < 1:
            raise PolicyError(f"quantile {self.q} keeps no draws out of {n_draws}")
        return m


@dataclass
class AbcRun:
    """The full record of N draws for one method."""

    method: AbcMethod
    model_index: np.ndarray  # (N,) 0-based
    params: np.ndarray  # (N, pmax), NaN-padded
    components: np.ndarray  # (N, C)
    component_names: tuple
    combined: Optional[np.ndarray]
    master_seed: int
    model_labels: tuple
    param_names: tuple  # tuple of per-model name tuples
    config_digest: str
    metadata: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return self.model_index.size

    @property
    def n_models(self) -> int:
        return len(self.model_labels)

    def distances(self) -> np.ndarray:
        """The scalar distance used for thresholding."""
        if self.method.kind == "combined":
            if self.combined is None:
                raise PolicyError("combined method: combine_distances has not run")
            return self.combined
        return self.components[:, 0]

    def record(self, i: int) -> DistanceRecord:
        """The named distance components of draw i."""
        combined = None if self.combined is None else float(self.combined[i])
        return DistanceRecord(self.component_names, self.components[i], combined)


@dataclass
class PosteriorEstimate:
    """Acceptance frequencies and accepted parameter draws under one threshold."""

    model_probs: np.ndarray
    counts: np.ndarray
    n_accepted: int
    epsilon_realized: float
    accepted: dict  # model index -> (m_k, d_k) parameter array
    accepted_indices: np.ndarray
    model_labels: tuple


# --------------------------------------------------------------------------
# per-draw contexts and scorers


class _DrawContext:
    __slots__ = ("z", "z_sorted", "z_log_sorted", "eta",
                 "ret_counts", "nr_sorted", "nr_log_sorted")

    def __init__(self):
        self.z = None
        self.z_sorted = None
        self.z_log_sorted = None
        self.eta = None
        self.ret_counts = None
        self.nr_sorted = None
        self.nr_log_sorted = None


@dataclass
class IidAdapter:
    """Prepares i.i.d.-sample draws: sorting, optional logs, summary vectors."""

    observed: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.observed, dtype=float).ravel()
        if y.size < 1 or not np.all(np.isfinite(y)):
            raise ShapeError("observed data must be non-empty and finite")
        self.observed = y
        self.sim_shape = y.size
        self.y_sorted = np.sort(y)
        self.needs = set()

    def observed_log_sorted(self):
        return log_transform(self.y_sorted)

    def build(self, z, model: ModelSpec) -> _DrawContext:
        ctx = _DrawContext()
        ctx.z = z
        if "sorted" in self.needs:
            ctx.z_sorted = np.sort(z)
        if "log_sorted" in self.needs:
            ctx.z_log_sorted = np.log(ctx.z_sorted)
        if "eta" in self.needs:
            ctx.eta = model.summary(z)
        return ctx


@dataclass
class ToadAdapter:
    """Prepares movement-matrix draws: lag features, sorted non-returns, summaries.

    When the observed matrix carries missing entries, the same missingness
    mask is applied to every simulated matrix so feature sample sizes match.
    """

    observed: np.ndarray
    lags: tuple = (1, 2, 4, 8)
    return_radius: float = 10.0

    def __post_init__(self):
        y = np.asarray(self.observed, dtype=float)
        if y.ndim != 2:
            raise ShapeError("observed toad data must be a (days x toads) matrix")
        self.observed = y
        self.sim_shape = y.shape
        self.mask = np.isnan(y) if np.isnan(y).any() else None
        feats = extract_lag_features(y, self.lags, self.return_radius)
        self.obs_ret_counts = np.array([f.return_count for f in feats], dtype=float)
        self.obs_nr_sorted = [np.sort(f.non_returns) for f in feats]
        self.needs = set()

    def observed_log_nr(self):
        return [log_transform(v) for v in self.obs_nr_sorted]

    def build(self, z, model: ModelSpec) -> _DrawContext:
        ctx = _DrawContext()
        if self.mask is not None:
            z = z.copy()
            z[self.mask] = np.nan
        ctx.z = z
        feats = extract_lag_features(z, self.lags, self.return_radius)
        for f in feats:
            # draws with no (or one) non-return displacement at a lag have
            # undefined distances/summaries; the retry policy resamples them
            if f.non_returns.size < 2:
                raise ShapeError(f"lag {f.lag}: non-return sample too small")
        ctx.ret_counts = np.array([f.return_count for f in feats], dtype=float)
        ctx.nr_sorted = [np.sort(f.non_returns) for f in feats]
        if "log_nr" in self.needs:
            # non-returns exceed the radius, hence are strictly positive
            ctx.nr_log_sorted = [np.log(v) for v in ctx.nr_sorted]
        if "eta" in self.needs:
            # identical to model.summary(z) but reuses the features just built
            ctx.eta = toad_summary_stats(feats)
        return ctx


@dataclass
class _SummaryScorer:
    eta_obs: np.ndarray
    metric: str
    weights: Optional[np.ndarray]
    component_names: tuple = ("summary",)
    needs = frozenset({"eta"})

    def score(self, ctx):
        return summary_distance(self.eta_obs, ctx.eta, self.metric, self.weights)


def _resolve_bandwidth(kernel: KernelSpec, observed_side: np.ndarray) -> float:
    if kernel.rule == "fixed":
        return float(kernel.bandwidth)
    return median_heuristic(observed_side)


@dataclass
class _DiscrepancyScorer:
    """One statistical distance on the full samples (equal sizes)."""

    distance: str
    log: bool
    y_side: np.ndarray  # sorted observed values (log scale when log=True)
    h: Optional[float] = None  # Gaussian kernel width sqrt(2 * bandwidth)
    own_y: float = 0.0
    component_names: tuple = ("distance",)

    @property
    def needs(self):
        base = {"sorted"}
        if self.log:
            base.add("log_sorted")
        return frozenset(base)

    def score(self, ctx):
        zs = ctx.z_log_sorted if self.log else ctx.z_sorted
        ys = self.y_side
        n = ys.size
        if self.distance == "wasserstein1":
            return float(np.mean(np.abs(ys - zs)))
        if self.distance == "cvm":
            sy, sz = _fastpath.cvm_rank_sums(ys, zs)
            u = sy + sz
            return float(u / (2.0 * n * n) - (4.0 * n * n - 1.0) / (12.0 * n))
        if self.distance == "mmd":
            s_zz, s_yz = _fastpath.gauss_pair_sums(ys, zs, self.h)
            own_z = (s_zz - n) / (n * (n - 1.0))
            return float(self.own_y + own_z - 2.0 * s_yz / (n * n))
        # energy
        own_z = -_fastpath.self_abs_sum(zs) / (n * (n - 1.0))
        cross = -_fastpath.cross_abs_sum(ys, zs)
        return float(self.own_y + own_z - 2.0 * cross / (n * n))


def _general_distance(distance, ys, zs, h, own_y):
    """Unequal-size variants for the per-lag movement distances."""
    n = ys.size
    m = zs.size
    if distance == "wasserstein1":
        return float(_fastpath.wasserstein_cdf_area(ys, zs))
    if distance == "cvm":
        sy, sz = _fastpath.cvm_rank_sums(ys, zs)
        u = n * sy + m * sz
        return float(u / (n * m * (n + m)) - (4.0 * n * m - 1.0) / (6.0 * (n + m)))
    if distance == "mmd":
        s_zz, s_yz = _fastpath.gauss_pair_sums(ys, zs, h)
        own_z = (s_zz - m) / (m * (m - 1.0))
        return float(own_y + own_z - 2.0 * s_yz / (n * m))
    own_z = -_fastpath.self_abs_sum(zs) / (m * (m - 1.0))
    cross = -_fastpath.cross_abs_sum(ys, zs)
    return float(own_y + own_z - 2.0 * cross / (n * m))


@dataclass
class _CombinedScorer:
    """Eight components per draw: |return-count gap| per lag, then one
    statistical distance on the non-return samples per lag."""

    distance: str
    log: bool
    obs_ret_counts: np.ndarray
    y_sides: list  # sorted observed non-returns per lag (log scale when log)
    hs: Optional[list] = None
    own_ys: Optional[list] = None
    component_names: tuple = ()

    @property
    def needs(self):
        base = {"features"}
        if self.log:
            base.add("log_nr")
        return frozenset(base)

    def score(self, ctx):
        out = np.empty(8)
        out[:4] = np.abs(self.obs_ret_counts - ctx.ret_counts)
        zsides = ctx.nr_log_sorted if self.log else ctx.nr_sorted
        for i in range(4):
            h = self.hs[i] if self.hs is not None else None
            oy = self.own_ys[i] if self.own_ys is not None else 0.0
            out[4 + i] = _general_distance(self.distance, self.y_sides[i], zsides[i], h, oy)
        return out


def _bind_scorer(method: AbcMethod, adapter, models, mad_weights):
    """Build the observed-side scorer for one method and register its needs."""
    if method.kind == "summary":
        eta_obs = models[0].summary(adapter.observed)
        weights = None
        metric = method.metric
        if method.mad_weighting:
            if mad_weights is None:
                raise ParameterDomainError(
                    f"{method.name}: MAD weighting requested but no weights supplied"
                )
            weights = np.asarray(mad_weights, dtype=float)
            metric = "weighted_euclidean"
        adapter.needs.add("eta")
        return _SummaryScorer(np.asarray(eta_obs, dtype=float), metric, weights)

    if method.kind == "discrepancy":
        if not isinstance(adapter, IidAdapter):
            raise ParameterDomainError(
                "plain discrepancy methods apply to i.i.d. samples; "
                "use a combined method for matrix data"
            )
        ys = adapter.observed_log_sorted() if method.log_transform else adapter.y_sorted
        n = ys.size
        h = None
        own_y = 0.0
        if method.distance == "mmd":
            bw = _resolve_bandwidth(method.kernel, ys)
            h = math.sqrt(2.0 * bw)
            s_yy = _fastpath.gauss_sum(ys, ys, h)
            own_y = (s_yy - n) / (n * (n - 1.0))
        elif method.distance == "energy":
            own_y = -_fastpath.self_abs_sum(ys) / (n * (n - 1.0))
        adapter.needs.add("sorted")
        if method.log_transform:
            adapter.needs.add("log_sorted")
        return _DiscrepancyScorer(method.distance, method.log_transform, ys, h, own_y)

    # combined
    if not isinstance(adapter, ToadAdapter):
        raise ParameterDomainError("combined methods apply to movement-matrix data")
    y_sides = adapter.observed_log_nr() if method.log_transform else adapter.obs_nr_sorted
    hs = None
    own_ys = None
    if method.distance == "mmd":
        hs, own_ys = [], []
        for ys in y_sides:
            bw = _resolve_bandwidth(method.kernel, ys)
            h = math.sqrt(2.0 * bw)
            n = ys.size
            hs.append(h)
            own_ys.append((_fastpath.gauss_sum(ys, ys, h) - n) / (n * (n - 1.0)))
    elif method.distance == "energy":
        own_ys = [
            -_fastpath.self_abs_sum(ys) / (ys.size * (ys.size - 1.0)) for ys in y_sides
        ]
    adapter.needs.add("features")
    if method.log_transform:
        adapter.needs.add("log_nr")
    names = tuple(f"ret_lag{lag}" for lag in adapter.lags) + tuple(
        f"dist_lag{lag}" for lag in adapter.lags
    )
    return _CombinedScorer(
        method.distance, method.log_transform, adapter.obs_ret_counts,
        y_sides, hs, own_ys, names,
    )


# --------------------------------------------------------------------------
# the draw loop


def _normalize_model_prior(prior, n_models: int) -> np.ndarray:
    if prior is None:
        return np.full(n_models, 1.0 / n_models)
    p = np.asarray(prior, dtype=float)
    if p.shape != (n_models,) or np.any(p < 0) or p.sum() <= 0:
        raise ParameterDomainError("model prior must be a nonnegative length-K vector")
    return p / p.sum()


def _run_chunk(args):
    (models, adapter, scorers, master_seed, i0, i1, pmax, prior_cum) = args
    n = i1 - i0
    model_idx = np.empty(n, dtype=np.int64)
    params = np.full((n, pmax), np.nan)
    comps = []
    for s in scorers:
        width = len(s.component_names) if isinstance(s, _CombinedScorer) else 1
        comps.append(np.empty((n, width)))
    n_retried = 0
    streams = DrawStreams(master_seed)
    for i in range(i0, i1):
        row = i - i0
        ok = False
        last_err = None
        for attempt in range(_MAX_RETRIES + 1):
            gen = streams.generator(i + attempt * _RETRY_STRIDE)
            u = gen.random()
            k = int(np.searchsorted(prior_cum, u, side="right"))
            if k >= len(models):
                k = len(models) - 1
            try:
                theta = models[k].prior(gen)
                z = models[k].simulate(theta, adapter.sim_shape, gen)
                ctx = adapter.build(z, models[k])
                vals = [s.score(ctx) for s in scorers]
            except (ShapeError, ParameterDomainError, FloatingPointError) as exc:
                # e.g. a movement draw with no non-return displacements at
                # some lag: its distances are undefined, so the draw is
                # resampled from a fresh stream (counted in metadata)
                vals = None
                last_err = exc
            if vals is not None and all(np.all(np.isfinite(v)) for v in vals):
                ok = True
                break
            n_retried += 1
        if not ok:
            raise RuntimeError(
                f"draw {i}: simulator/distance failed after {_MAX_RETRIES} "
                f"retries (last error: {last_err})"
            )
        model_idx[row] = k
        params[row, : theta.size] = theta
        for s_i, v in enumerate(vals):
            comps[s_i][row, :] = v
    return model_idx, params, comps, n_retried


def _digest(payload) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def run_abc_multi(
    models: Sequence[ModelSpec],
    observed,
    methods: Sequence[AbcMethod],
    n_draws: int,
    seed,
    adapter=None,
    model_prior=None,
    mad_weights=None,
    workers: int = 1,
):
    """Run the rejection sampler once, scoring every method on the same draws.

    Returns one AbcRun per method. Draw i's (model, parameters, dataset) come
    from stream (master_seed, i) alone, so results are identical to running
    each method separately with the same seed, and to any worker count.
    """
    if n_draws < 1:
        raise ParameterDomainError(f"need >= 1 draw, got {n_draws}")
    if not models:
        raise ParameterDomainError("need at least one model")
    master = seed.master_seed if isinstance(seed, SeedSpec) else int(seed)
    if adapter is None:
        adapter = IidAdapter(observed)
    prior = _normalize_model_prior(model_prior, len(models))
    prior_cum = np.cumsum(prior)
    scorers = [_bind_scorer(m, adapter, models, mad_weights) for m in methods]
    pmax = max(len(m.param_names) for m in models)

    _fastpath.warmup()
    chunks = _split_range(n_draws, workers)
    if workers <= 1 or len(chunks) == 1:
        results = [
            _run_chunk((list(models), adapter, scorers, master, i0, i1, pmax, prior_cum))
            for i0, i1 in chunks
        ]
    else:
        import multiprocessing as mp

        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context("spawn")
        with ctx.Pool(processes=workers) as pool:
            results = pool.map(
                _run_chunk,
                [(list(models), adapter, scorers, master, i0, i1, pmax, prior_cum)
                 for i0, i1 in chunks],
            )

    model_idx = np.concatenate([r[0] for r in results])
    params = np.vstack([r[1] for r in results])
    n_retried = sum(r[3] for r in results)
    labels = tuple(m.label for m in models)
    pnames = tuple(tuple(m.param_names) for m in models)

    runs = []
    for s_i, method in enumerate(methods):
        comps = np.vstack([r[2][s_i] for r in results])
        scorer = scorers[s_i]
        if isinstance(scorer, _CombinedScorer):
            names = scorer.component_names
        else:
            names = (method.name,)
        meta = {"n_retried": n_retried, "workers": workers}
        if isinstance(scorer, _DiscrepancyScorer) and scorer.h is not None:
            meta["gaussian_bandwidth"] = scorer.h ** 2 / 2.0
        if isinstance(scorer, _CombinedScorer) and scorer.hs is not None:
            meta["gaussian_bandwidths"] = [h * h / 2.0 for h in scorer.hs]
        digest = _digest({
            "n_draws": int(n_draws), "seed": int(master), "method": method.name,
            "kind": method.kind, "models": list(labels), "omega": method.omega,
            "log": method.log_transform,
        })
        run = AbcRun(
            method=method, model_index=model_idx, params=params, components=comps,
            component_names=names, combined=None, master_seed=master,
            model_labels=labels, param_names=pnames, config_digest=digest,
            metadata=meta,
        )
        if method.kind == "combined":
            run.combined = combine_distances(comps, method.omega)
        runs.append(run)
    return runs


def run_abc(
    models: Sequence[ModelSpec],
    observed,
    method: AbcMethod,
    n_draws: int,
    seed,
    adapter=None,
    model_prior=None,
    mad_weights=None,
    workers: int = 1,
) -> AbcRun:
    """Single-method rejection run; see run_abc_multi."""
    if method.kind == "summary" and method.mad_weighting and mad_weights is None:
        obs = np.asarray(observed)
        shape = adapter.sim_shape if adapter is not None else (
            obs.shape if obs.ndim > 1 else obs.size
        )
        master = seed.master_seed if isinstance(seed, SeedSpec) else int(seed)
        mad_weights = estimate_mad_weights(
            models, observed_shape=shape, n_prior_draws=500,
            seed=derive_seed(master, 2977), model_prior=model_prior,
        )
    return run_abc_multi(
        models, observed, [method], n_draws, seed, adapter=adapter,
        model_prior=model_prior, mad_weights=mad_weights, workers=workers,
    )[0]


def _split_range(n: int, workers: int):
    k = max(1, min(workers, n))
    edges = np.linspace(0, n, k + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def apply_threshold(run: AbcRun, policy) -> PosteriorEstimate:
    """Keep the closest fraction of draws; ties broken by draw index."""
    if not isinstance(policy, ThresholdPolicy):
        policy = ThresholdPolicy(float(policy))
    dist = run.distances()
    if not np.all(np.isfinite(dist)):
        raise PolicyError("run contains non-finite distances")
    m = policy.n_accepted(run.n_draws)
    order = np.argsort(dist, kind="stable")[:m]
    eps = float(dist[order[-1]])
    counts = np.bincount(run.model_index[order], minlength=run.n_models)
    probs = counts / m
    accepted = {}
    for k in range(run.n_models):
        sel = order[run.model_index[order] == k]
        accepted[k] = run.params[sel, : len(run.param_names[k])]
    return PosteriorEstimate(
        model_probs=probs, counts=counts, n_accepted=m, epsilon_realized=eps,
        accepted=accepted, accepted_indices=order, model_labels=run.model_labels,
    )


def estimate_mad_weights(
    models: Sequence[ModelSpec],
    observed_shape,
    n_prior_draws: int,
    seed,
    model_prior=None,
    floor: float = 1e-12,
    return_info: bool = False,
):
    """Reciprocal MADs of the prior-predictive distribution of each summary
    statistic (the weighted-Euclidean weights). Statistics whose MAD collapses
    to zero get the floored (capped) weight and a warning."""
    if n_prior_draws < 100:
        raise ParameterDomainError(f"need >= 100 prior draws, got {n_prior_draws}")
    master = seed.master_seed if isinstance(seed, SeedSpec) else int(seed)
    prior_cum = np.cumsum(_normalize_model_prior(model_prior, len(models)))
    streams = DrawStreams(master)
    stats = None
    for i in range(n_prior_draws):
        eta = None
        last_err = None
        for attempt in range(_MAX_RETRIES + 1):
            gen = streams.generator(i + attempt * _RETRY_STRIDE)
            u = gen.random()
            k = min(int(np.searchsorted(prior_cum, u, side="right")), len(models) - 1)
            theta = models[k].prior(gen)
            z = models[k].simulate(theta, observed_shape, gen)
            try:
                eta = np.asarray(models[k].summary(z), dtype=float)
                break
            except (ShapeError, ParameterDomainError, FloatingPointError) as exc:
                last_err = exc
        if eta is None:
            raise RuntimeError(
                f"prior-predictive draw {i} failed after {_MAX_RETRIES} retries "
                f"(last error: {last_err})"
            )
        if stats is None:
            stats = np.empty((n_prior_draws, eta.size))
        stats[i] = eta
    med = np.median(stats, axis=0)
    mad = np.median(np.abs(stats - med), axis=0)
    capped = mad < floor
    if capped.any():
        warnings.warn(
            f"{int(capped.sum())} summary statistic(s) are constant under the prior "
            "predictive; their weights were capped", RuntimeWarning,
        )
    weights = 1.0 / np.maximum(mad, floor)
    if return_info:
        return weights, {"mad": mad, "capped": np.flatnonzero(capped).tolist()}
    return weights


def posterior_param_summary(estimate: PosteriorEstimate, model: int, param_names=None):
    """Mean and quantiles of the accepted parameter draws for one model, or
    None when that model has no accepted draws."""
    draws = estimate.accepted.get(model)
    if draws is None or draws.shape[0] == 0:
        return None
    qs = np.quantile(draws, [0.025, 0.25, 0.5, 0.75, 0.975], axis=0)
    out = {}
    for j in range(draws.shape[1]):
        name = param_names[j] if param_names else f"param{j}"
        out[name] = {
            "mean": float(draws[:, j].mean()),
            "q2.5": float(qs[0, j]), "q25": float(qs[1, j]), "median": float(qs[2, j]),
            "q75": float(qs[3, j]), "q97.5": float(qs[4, j]),
        }
    return out


# --------------------------------------------------------------------------
# serialization: columnar npz with a JSON header


_FORMAT_VERSION = 1


def save_run(run: AbcRun, path):
    header = {
        "format_version": _FORMAT_VERSION,
        "method": {
            "name": run.method.name, "kind": run.method.kind,
            "distance": run.method.distance, "log_transform": run.method.log_transform,
            "metric": run.method.metric, "mad_weighting": run.method.mad_weighting,
            "omega": run.method.omega,
        },
        "component_names": list(run.component_names),
        "model_labels": list(run.model_labels),
        "param_names": [list(p) for p in run.param_names],
        "master_seed": run.master_seed,
        "config_digest": run.config_digest,
        "metadata": run.metadata,
    }
    arrays = {
        "model_index": run.model_index,
        "params": run.params,
        "components": run.components,
        "header_json": np.frombuffer(json.dumps(header).encode(), dtype=np.uint8),
    }
    if run.combined is not None:
        arrays["combined"] = run.combined
    np.savez_compressed(path, **arrays)


def load_run(path) -> AbcRun:
    with np.load(path) as data:
        header = json.loads(bytes(data["header_json"].tobytes()).decode())
        if header["format_version"] != _FORMAT_VERSION:
            raise ValueError(f"unsupported run format {header['format_version']}")
        h = header["method"]
        kernel = KernelSpec() if h["distance"] == "mmd" else None
        method = AbcMethod(
            name=h["name"], kind=h["kind"], distance=h["distance"],
            log_transform=h["log_transform"], kernel=kernel, metric=h["metric"],
            mad_weighting=h["mad_weighting"], omega=h["omega"],
        )
        return AbcRun(
            method=method,
            model_index=data["model_index"],
            params=data["params"],
            components=data["components"],
            component_names=tuple(header["component_names"]),
            combined=data["combined"] if "combined" in data.files else None,
            master_seed=header["master_seed"],
            model_labels=tuple(header["model_labels"]),
            param_names=tuple(tuple(p) for p in header["param_names"]),
            config_digest=header["config_digest"],
            metadata=header["metadata"],
        )
