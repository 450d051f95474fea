import math

import numpy as np
import pytest

from abcselect import _fastpath
from abcselect.errors import ParameterDomainError, ShapeError
from abcselect.samplers import StableParams, sample_stable
from abcselect.seeding import SeedSpec
from abcselect.toads import (
    QUANTILE_DIFF_FLOOR,
    LagFeatures,
    ToadConfig,
    extract_lag_features,
    load_toad_matrix,
    simulate_toads,
    toad_models,
    toad_summary_stats,
)


def reference_walk(model, steps, u_ret, u_pick, p0, d0):
    """Slow, direct transcription of the three return rules."""
    nd = steps.shape[0] + 1
    nt = steps.shape[1]
    out = np.zeros((nd, nt))
    for t in range(nt):
        refs = [0.0]
        for d in range(1, nd):
            x = out[d - 1, t] + steps[d - 1, t]
            u = u_ret[d - 1, t]
            if model == 1:
                if u < p0:
                    idx = min(int(u_pick[d - 1, t] * d), d - 1)
                    out[d, t] = out[idx, t]
                else:
                    out[d, t] = x
            elif model == 2:
                if u < p0:
                    best, bd = 0, abs(x - out[0, t])
                    for i in range(1, d):
                        di = abs(x - out[i, t])
                        if di < bd:
                            bd, best = di, i
                    out[d, t] = out[best, t]
                else:
                    out[d, t] = x
            else:
                pret = [p0 * math.exp(-abs(x - r) / d0) for r in refs]
                pstay = 1.0
                psum = 0.0
                for p in pret:
                    pstay *= 1.0 - p
                    psum += p
                if u < pstay or psum == 0.0:
                    out[d, t] = x
                    refs.append(x)
                else:
                    acc = pstay
                    chosen = len(refs) - 1
                    scale = (1.0 - pstay) / psum
                    for i, p in enumerate(pret):
                        acc += p * scale
                        if u < acc:
                            chosen = i
                            break
                    out[d, t] = refs[chosen]
    return out


@pytest.mark.parametrize("model", [1, 2, 3])
def test_walk_kernel_matches_reference(model):
    gen = SeedSpec(41).generator()
    steps = gen.normal(0, 30, size=(20, 5))
    u_ret = gen.uniform(size=(20, 5))
    u_pick = gen.uniform(size=(20, 5))
    out = np.empty((21, 5))
    _fastpath.toad_walk(model, steps, u_ret, u_pick, 0.6, 400.0, out)
    ref = reference_walk(model, steps, u_ret, u_pick, 0.6, 400.0)
    assert np.array_equal(out, ref)


def test_no_return_degenerates_to_random_walk():
    # p0 = 0: row differences are exactly the raw step draws
    cfg = ToadConfig(model=1, params=(1.7, 34.0, 0.0), n_days=20, n_toads=6)
    mat = simulate_toads(cfg, SeedSpec(42))
    steps = sample_stable(StableParams(1.7, 34.0), 19 * 6, SeedSpec(42))
    assert np.allclose(np.diff(mat, axis=0).ravel(), steps)
    for model in (2, 3):
        params = (1.7, 34.0, 0.0) if model == 2 else (1.7, 34.0, 0.0, 500.0)
        m = simulate_toads(ToadConfig(model=model, params=params, n_days=20, n_toads=6),
                           SeedSpec(42))
        assert np.allclose(np.diff(m, axis=0).ravel(), steps)


def test_certain_return_model1_all_zero():
    cfg = ToadConfig(model=1, params=(1.7, 34.0, 1.0), n_days=30, n_toads=8)
    mat = simulate_toads(cfg, SeedSpec(43))
    assert np.all(mat == 0.0)


def test_first_row_is_zero_and_targets_are_refuges():
    for model, params in ((2, (1.8, 40.0, 0.7)), (3, (1.8, 40.0, 0.7, 300.0))):
        cfg = ToadConfig(model=model, params=params, n_days=25, n_toads=10)
        mat = simulate_toads(cfg, SeedSpec(44))
        assert np.all(mat[0] == 0.0)
        # any non-continuation entry must equal an earlier value of that toad
        for t in range(mat.shape[1]):
            col = mat[:, t]
            for d in range(1, len(col)):
                if col[d] in col[:d]:
                    continue  # a return (or a rare numeric coincidence)
                # otherwise it extends the walk; nothing to assert here
        # empirically some returns must occur at p0 = 0.7
        repeats = sum(
            mat[d, t] in mat[:d, t] for t in range(10) for d in range(1, 25))
        assert repeats > 0


def test_model3_step_probabilities_sum_to_one():
    # stay probability plus the return masses is exactly one
    gen = SeedSpec(45).generator()
    for _ in range(200):
        refs = gen.normal(0, 100, size=int(gen.integers(1, 40)))
        x = gen.normal(0, 150)
        p0 = gen.uniform(0.05, 0.95)
        d0 = gen.uniform(20, 2000)
        pret = p0 * np.exp(-np.abs(x - refs) / d0)
        pstay = np.prod(1.0 - pret)
        p_i = pret / pret.sum() * (1.0 - pstay)
        assert pstay + p_i.sum() == pytest.approx(1.0, abs=1e-12)


def test_model3_infinite_d0_gives_constant_p0():
    gen = SeedSpec(46).generator()
    d = np.abs(gen.normal(0, 500, size=1000))
    p0 = 0.43
    pret = p0 * np.exp(-d / 1e12)
    assert np.max(np.abs(pret - p0)) < 1e-9


def test_toad_config_validation():
    with pytest.raises(ParameterDomainError):
        ToadConfig(model=4, params=(1.7, 34.0, 0.6))
    with pytest.raises(ParameterDomainError):
        ToadConfig(model=3, params=(1.7, 34.0, 0.6))  # missing d0
    with pytest.raises(ParameterDomainError):
        ToadConfig(model=1, params=(2.5, 34.0, 0.6))
    with pytest.raises(ParameterDomainError):
        ToadConfig(model=1, params=(1.7, 34.0, 0.6), n_days=8, lags=(1, 2, 4, 8))


# ---------------------------------------------------------------------------
# lag features


def test_constant_matrix_all_returns():
    mat = np.full((10, 4), 3.25)
    feats = extract_lag_features(mat, lags=(1, 2), return_radius=10.0)
    for f, lag in zip(feats, (1, 2)):
        assert f.return_count == (10 - lag) * 4
        assert f.non_returns.size == 0


def test_single_pair_hand_count():
    mat = np.array([[0.0], [25.0]])
    (f,) = extract_lag_features(mat, lags=(1,), return_radius=10.0)
    assert f.return_count == 0
    assert np.array_equal(f.non_returns, [25.0])


def test_feature_counts_match_independent_recount():
    cfg = ToadConfig(model=2, params=(1.83, 46.0, 0.65))
    mat = simulate_toads(cfg, SeedSpec(47))
    # knock out entries like the field data
    gen = SeedSpec(48).generator()
    mask = gen.uniform(size=mat.shape) < 0.15
    mat[mask] = np.nan
    feats = extract_lag_features(mat, (1, 2, 4, 8), 10.0)
    for f, lag in zip(feats, (1, 2, 4, 8)):
        ret = 0
        non = 0
        for t in range(mat.shape[1]):
            for d in range(mat.shape[0] - lag):
                a, b = mat[d, t], mat[d + lag, t]
                if np.isnan(a) or np.isnan(b):
                    continue
                if abs(b - a) <= 10.0:
                    ret += 1
                else:
                    non += 1
        assert f.return_count == ret
        assert f.non_returns.size == non
        assert f.return_count + f.non_returns.size == f.n_pairs


def test_features_reject_bad_shapes():
    with pytest.raises(ShapeError):
        extract_lag_features(np.zeros((3, 2)), lags=(4,))
    mat = np.full((10, 2), np.nan)
    with pytest.raises(ShapeError):
        extract_lag_features(mat, lags=(1,))


# ---------------------------------------------------------------------------
# summary statistics


def test_summary_has_44_components():
    cfg = ToadConfig(model=1, params=(1.7, 34.0, 0.6))
    mat = simulate_toads(cfg, SeedSpec(49))
    stats = toad_summary_stats(extract_lag_features(mat, (1, 2, 4, 8), 10.0))
    assert stats.shape == (44,)
    assert np.all(np.isfinite(stats))


def test_summary_floors_degenerate_quantiles():
    feats = [LagFeatures(1, 5, np.full(20, 11.0), 25)]
    stats = toad_summary_stats(feats)
    assert stats[:10] == pytest.approx(np.log(QUANTILE_DIFF_FLOOR))
    assert stats[10] == 5.0


def test_summary_finite_for_distinct_values():
    feats = [LagFeatures(1, 2, np.linspace(11, 30, 11), 13)]
    stats = toad_summary_stats(feats)
    assert np.all(np.isfinite(stats))
    assert stats.shape == (11,)


def test_toad_models_round_trip():
    models = toad_models()
    gen = SeedSpec(50).generator()
    for model in models:
        theta = model.prior(gen)
        mat = model.simulate(theta, (30, 12), gen)
        assert mat.shape == (30, 12)
        eta = model.summary(mat)
        assert eta.shape == (44,)
        assert np.all(np.isfinite(eta))


def test_toad_prior_boxes():
    models = toad_models()
    gen = SeedSpec(51).generator()
    draws = np.array([models[2].prior(gen) for _ in range(2000)])
    lo = draws.min(axis=0)
    hi = draws.max(axis=0)
    assert np.all(lo >= [1.0, 10.0, 0.0, 20.0])
    assert np.all(hi <= [2.0, 100.0, 1.0, 2000.0])


# ---------------------------------------------------------------------------
# loader


def test_load_toad_matrix(tmp_path):
    path = tmp_path / "toads.csv"
    path.write_text("0.0,1.5,\n2.0,,3.5\n4.0,5.0,6.0\n")
    mat, report = load_toad_matrix(path)
    assert mat.shape == (3, 3)
    assert np.isnan(mat[0, 2]) and np.isnan(mat[1, 1])
    assert report["n_days"] == 3 and report["n_toads"] == 3
    assert report["n_missing"] == 2
    assert report["missing_fraction"] == pytest.approx(2 / 9)


def test_load_toad_matrix_rejects_ragged(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3\n4,5\n")
    with pytest.raises(ShapeError):
        load_toad_matrix(path)
