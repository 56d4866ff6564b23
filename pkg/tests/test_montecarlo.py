import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jmcover import limits
from jmcover.coverage import GrowthConfiguration, jm_cover_time
from jmcover.geom import BUILTIN_WINDOWS
from jmcover.montecarlo import (
    EcdfSummary,
    ExperimentConfig,
    jm_spbm_equivalence_test,
    load,
    merge,
    persist,
    run_cover_time_experiment,
    scaling_lemma_test,
)
from jmcover.processes import BIRTH_TIME, MarkedPointSet, RadiusLaw, RngSpec
from jmcover.stats import dkw_epsilon, ks_critical, ks_distance, ks_two_sample, two_proportion_z, wilson_interval

SQ = BUILTIN_WINDOWS["square"]()
SMALL = ExperimentConfig(scales=(50.0, 200.0), replications=12, master_seed=3)


@pytest.fixture(scope="module")
def small_run():
    return run_cover_time_experiment(SMALL)


# configuration


@pytest.mark.parametrize(
    "kw",
    [
        {"model": "voronoi"},
        {"replications": 0},
        {"scales": (100.0, 50.0)},
        {"scales": (-1.0,)},
        {"scales": ()},
        {"model": "spbm_restricted"},
        {"window": BUILTIN_WINDOWS["cube"](), "model": "jm_unrestricted"},
    ],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ExperimentConfig(**kw)


def test_config_json_roundtrip():
    cfg = ExperimentConfig("spbm_unrestricted", BUILTIN_WINDOWS["disc"](), (10.0, 20.0), 2,
                           RadiusLaw.pareto(3.0, 0.5), 7, 9, 1e-8, "out.csv", 2)
    back = ExperimentConfig.from_json(json.loads(json.dumps(cfg.to_json())))
    assert back == cfg
    assert set(cfg.to_json()) == {f for f in cfg.__dataclass_fields__}


def test_theorem_selection():
    assert ExperimentConfig().theorem == "jm-polygon"
    assert ExperimentConfig(window=BUILTIN_WINDOWS["cube"]()).theorem == "jm-smooth"
    law = RadiusLaw.uniform(1)
    assert ExperimentConfig("spbm_restricted", law=law).theorem == "spbm-polygon"
    assert ExperimentConfig("spbm_unrestricted", law=law).theorem == "spbm-unrestricted"
    assert set(ExperimentConfig().candidate_laws()) == {"jm-polygon", "jm-unrestricted"}


# experiments


def test_one_summary_per_scale(small_run):
    assert [s.scale for s in small_run] == [50.0, 200.0]
    for s in small_run:
        assert len(s.values) == 12 and np.all(np.diff(s.values) >= 0)
        assert all(0 <= v <= 1 for v in s.ks.values())
        assert s.errors == []


def test_deterministic(small_run):
    again = run_cover_time_experiment(SMALL)
    assert again == small_run


def test_worker_count_irrelevant(small_run, tmp_path):
    par = run_cover_time_experiment(ExperimentConfig(**{**SMALL.__dict__, "threads": 2}))
    assert par == small_run
    a, _ = persist(small_run, SMALL, tmp_path / "a.csv")
    b, _ = persist(par, SMALL, tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_merge_equals_single_run(small_run):
    parts = [run_cover_time_experiment(SMALL, streams=range(i, 12, 3)) for i in range(3)]
    assert merge(parts, SMALL) == small_run


def test_replicate_matches_direct():
    from jmcover.coverage import simulate_jm_cover_time

    cfg = ExperimentConfig(scales=(80.0,), replications=2, master_seed=5)
    s = run_cover_time_experiment(cfg)[0]
    T, _ = simulate_jm_cover_time(SQ, 80.0, RngSpec(5, 1, (0,)))
    assert s.raw[1] == T
    assert s.standardized[1] == pytest.approx(limits.standardize(T, 80.0, "jm-polygon"))


def test_single_replication_point_mass():
    cfg = ExperimentConfig(scales=(100.0,), replications=1, master_seed=2)
    s = run_cover_time_experiment(cfg)[0]
    v = s.values[0]
    assert s.ecdf(v - 1e-9) == 0.0 and s.ecdf(v) == 1.0


def test_single_seed_standardized_value():
    seeds = MarkedPointSet(np.array([[0.5, 0.5]]), [0.0], BIRTH_TIME, 1.0, SQ)
    T = jm_cover_time(SQ, GrowthConfiguration(seeds))
    s = EcdfSummary(100.0, np.array([0]), np.array([T]), np.array([limits.standardize(T, 100.0, "jm-polygon")]),
                    {}, {})
    expect = math.pi * 100 * (math.sqrt(2) / 2) ** 3 - 2 * math.log(100) - 4 * math.log(math.log(100))
    assert s.values[0] == pytest.approx(expect, abs=1e-5)


def test_spbm_experiment():
    cfg = ExperimentConfig("spbm_restricted", scales=(100.0,), replications=5, law=RadiusLaw.uniform(1.0), k=2)
    s = run_cover_time_experiment(cfg)[0]
    assert np.isfinite(s.raw).all() and "spbm-polygon" in s.ks


def test_cube_grid_path():
    cfg = ExperimentConfig(window=BUILTIN_WINDOWS["cube"](), scales=(200.0,), replications=2, grid_h=0.05)
    s = run_cover_time_experiment(cfg)[0]
    assert np.isfinite(s.raw).all()


# persistence


def test_persist_roundtrip(small_run, tmp_path):
    csv_path, meta_path = persist(small_run, SMALL, tmp_path / "run.csv")
    back, cfg = load(csv_path)
    assert cfg == SMALL and back == small_run
    meta = json.loads(meta_path.read_text())
    assert set(SMALL.to_json()) <= set(meta["config"])
    assert meta["master_seed"] == 3 and "wall_time" in meta and "git_describe" in meta


def test_load_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        load(tmp_path / "nope.csv")


def test_load_schema_mismatch(small_run, tmp_path):
    _, meta = persist(small_run, SMALL, tmp_path / "r.csv")
    doc = json.loads(meta.read_text())
    doc["schema_version"] = 99
    meta.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        load(tmp_path / "r.csv")


# statistics helpers


def test_ks_identical_samples():
    x = np.random.default_rng(0).random(100)
    assert ks_two_sample(x, x)[0] == 0.0


def test_ks_point_mass_at_median():
    law = limits.limit_cdf("jm-polygon", limits.ModelSpec(area=1, perimeter=4))
    m = law.quantile(0.5)
    assert ks_distance([m], law) == pytest.approx(0.5, abs=1e-9)


def test_ks_exact_sample_small():
    spec = limits.ModelSpec(area=1, perimeter=4)
    x = limits.tcev_sample(spec, np.random.default_rng(1), 100_000)
    assert ks_distance(x, limits.limit_cdf("jm-polygon", spec)) < 0.01


def test_ks_empty():
    with pytest.raises(ValueError):
        ks_distance([], lambda x: x)


def test_ks_critical_values():
    assert ks_critical(5000, 5000, 0.01) == pytest.approx(1.6276 * math.sqrt(2 / 5000), rel=1e-3)
    assert dkw_epsilon(100, 0.05) == pytest.approx(math.sqrt(math.log(40) / 200))


@given(st.integers(0, 50), st.integers(1, 50))
@settings(max_examples=50)
def test_wilson_contains_estimate(hits, extra):
    n = hits + extra
    lo, hi = wilson_interval(hits, n)
    assert 0 <= lo <= hits / n <= hi <= 1


@pytest.mark.parametrize("hits,n", [(0, 3), (3, 3), (0, 1)])
def test_wilson_endpoints_exact(hits, n):
    lo, hi = wilson_interval(hits, n)
    assert lo <= hits / n <= hi and (hits or lo == 0.0) and (hits < n or hi == 1.0)


def test_two_proportion_degenerate():
    assert two_proportion_z(0, 10, 0, 10) == 0.0
    assert two_proportion_z(10, 10, 0, 10) > 3


# scaling and equivalence checks


@pytest.mark.filterwarnings("ignore:divide by zero")
def test_scaling_smoke():
    r = scaling_lemma_test(2.0, SQ, 1, RngSpec(1))
    assert r.n_a == r.n_b == 1 and r.rho == 8.0
    assert ks_two_sample(r.a, r.a)[0] == 0.0


def test_scaling_rejects_small_L():
    with pytest.raises(ValueError):
        scaling_lemma_test(1.0, SQ, 1, RngSpec(1))


def test_scaling_small_agreement():
    r = scaling_lemma_test(2.0, SQ, 150, RngSpec(4))
    assert r.ks < 2 * ks_critical(150, 150, 0.01)
    assert np.median(r.a) == pytest.approx(np.median(r.b), rel=0.1)


def test_equivalence_extremes():
    lo = jm_spbm_equivalence_test(50.0, 0.02, SQ, 20, RngSpec(1))
    assert lo.p_jm == 0.0 and lo.p_spbm == 0.0
    hi = jm_spbm_equivalence_test(500.0, 1.6, SQ, 20, RngSpec(1))
    assert hi.p_jm == 1.0 and hi.p_spbm == 1.0 and hi.within_3sigma


def test_equivalence_rejects_bad_t():
    with pytest.raises(ValueError):
        jm_spbm_equivalence_test(10.0, 0.0, SQ, 2, RngSpec(1))


def test_equivalence_moderate():
    # intermediate coverage probability, both routes must agree
    r = jm_spbm_equivalence_test(300.0, 0.33, SQ, 200, RngSpec(2))
    assert 0.1 < r.p_jm < 0.9
    assert abs(r.z) < 3.5
