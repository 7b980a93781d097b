import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bfdcqo import BiasState, HuboHamiltonian
from bfdcqo.cdsynth import PruningPolicy, Schedule
from bfdcqo.errors import DimensionError, InvalidInputError
from bfdcqo.optimizer import (
    CvarConfig,
    cvar_energy,
    cvar_filter,
    iteration_seeds,
    magnetization,
    mean_energy,
    merged_samples,
    optimize,
    sample_digest,
    tail_count,
    update_bias,
)
from bfdcqo.simulator import SampleSet

from conftest import random_hubo


def expected_cvar(samples: SampleSet, h: HuboHamiltonian, alpha: float) -> float:
    """Mean of the lowest ceil(alpha * n) energies of the shot-expanded list."""
    flat = sorted(h.evaluate(b) for b, c in samples.counts.items() for _ in range(c))
    k = math.ceil(round(alpha * len(flat), 9))
    return float(np.mean(flat[:k]))


def random_samples(rng, n, distinct, max_count=20):
    keys = {format(int(i), f"0{n}b") for i in rng.integers(0, 1 << n, size=distinct)}
    return SampleSet(n, {k: int(rng.integers(1, max_count)) for k in keys})


@pytest.mark.parametrize("alpha, n, want", [(0.1, 2000, 200), (0.1, 7, 1), (0.5, 3, 2), (1.0, 9, 9), (1e-9, 100, 1), (0.3, 10, 3)])
def test_tail_count(alpha, n, want):
    assert tail_count(alpha, n) == want


def test_cvar_against_expanded_oracle(rng):
    for _ in range(20):
        h = random_hubo(rng, 5, 3, 6)
        ss = random_samples(rng, 5, 12)
        for alpha in (0.05, 0.1, 0.37, 0.5, 1.0):
            assert cvar_energy(ss, h, alpha) == pytest.approx(expected_cvar(ss, h, alpha), abs=1e-12)


def test_cvar_filter_splits_boundary_multiplicity():
    h = HuboHamiltonian(2, {(0,): 1.0, (1,): 0.5})
    ss = SampleSet(2, {"11": 3, "10": 5, "00": 2})
    tail, energies = cvar_filter(ss, h, 0.5)
    assert tail.counts == {"11": 3, "10": 2}
    np.testing.assert_allclose(energies, [-1.5] * 3 + [-0.5] * 2)


def test_cvar_tie_break_is_lexicographic():
    h = HuboHamiltonian(2, {(0, 1): 1.0})
    ss = SampleSet(2, {"10": 2, "01": 2})
    tail, _ = cvar_filter(ss, h, 0.5)
    assert tail.counts == {"01": 2}


def test_cvar_input_validation():
    h = HuboHamiltonian(2, {(0,): 1.0})
    with pytest.raises(InvalidInputError):
        cvar_energy(SampleSet(2, {"00": 1}), h, 0.0)
    with pytest.raises(InvalidInputError):
        cvar_energy(SampleSet(2, {}), h, 0.5)
    with pytest.raises(DimensionError):
        cvar_energy(SampleSet(3, {"000": 1}), h, 0.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_cvar_bounded_by_min_and_mean(seed):
    rng = np.random.default_rng(seed)
    h = random_hubo(rng, 4, 2, 5)
    ss = random_samples(rng, 4, 8)
    emin = min(ss.energies(h).values())
    for alpha in (0.01, 0.2, 0.8):
        c = cvar_energy(ss, h, alpha)
        assert emin - 1e-12 <= c <= mean_energy(ss, h) + 1e-12


def test_magnetization_and_bias_maps():
    h = HuboHamiltonian(2, {(0,): 1.0, (1,): -1.0})
    ss = SampleSet(2, {"10": 6, "00": 2, "01": 2})
    np.testing.assert_allclose(magnetization(ss), [(4 - 6) / 10, 1.0 - 2 * 0.2])
    prev = BiasState([-0.5, -2.0], [9.0, 9.0])
    b = update_bias(ss, h, CvarConfig(alpha=0.5), prev)
    np.testing.assert_array_equal(b.hx, prev.hx)
    np.testing.assert_allclose(b.hb, [-1.0, 1.0])
    b = update_bias(ss, h, CvarConfig(alpha=1.0, bias_map="sign"), prev)
    np.testing.assert_allclose(b.hb, [-1.0, 1.0])
    b = update_bias(ss, h, CvarConfig(alpha=1.0, bias_map="scaled", kappa=0.5), prev)
    np.testing.assert_allclose(b.hb, [-0.1, 0.3])


@pytest.mark.parametrize("kwargs", [{"alpha": 0.0}, {"alpha": 1.5}, {"n_shots": 0}, {"bias_map": "tanh"}])
def test_cvar_config_validation(kwargs):
    with pytest.raises(InvalidInputError):
        CvarConfig(**kwargs)


def test_iteration_seeds_are_reproducible():
    assert iteration_seeds(5, 4) == iteration_seeds(5, 4)
    assert len(set(iteration_seeds(5, 10))) == 10
    assert iteration_seeds(5, 3) != iteration_seeds(6, 3)


def test_optimize_records_and_determinism():
    h = HuboHamiltonian(5, {(0, 1): 0.7, (1, 2, 3): -0.4, (3, 4): 0.5, (0,): 0.3, (4,): -0.2})
    cfg = CvarConfig(n_shots=300)
    a = optimize(h, Schedule(), PruningPolicy(0.01, "soft"), cfg, iters=4, seed=11)
    b = optimize(h, Schedule(), PruningPolicy(0.01, "soft"), cfg, iters=4, seed=11)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
    assert [r.iteration for r in a] == [0, 1, 2, 3]
    assert all(r.samples.shots == 300 for r in a)
    assert all(r.digest == sample_digest(r.samples) for r in a)
    assert a[0].bias == BiasState.default(5)
    for prev, r in zip(a, a[1:]):
        assert r.bias == update_bias(prev.samples, h, cfg, prev.bias)
        assert r.global_best_energy <= prev.global_best_energy
    best = min(a, key=lambda r: r.best_energy)
    assert a[-1].global_best_energy == best.best_energy
    assert merged_samples(a).shots == 1200


def test_optimize_warns_on_empty_program():
    h = HuboHamiltonian(3, {(0, 1): 0.2, (2,): 0.1})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        recs = optimize(h, Schedule(), PruningPolicy(3.2, "hard"), CvarConfig(n_shots=50), iters=2, seed=0)
    assert any("empty" in str(w.message) for w in caught)
    assert all(r.zz_count == 0 and r.warnings for r in recs)


def test_optimize_validation():
    h = HuboHamiltonian(2, {(0,): 1.0})
    with pytest.raises(InvalidInputError):
        optimize(h, iters=0)
    with pytest.raises(DimensionError):
        optimize(h, bias=BiasState.default(3), iters=1)


def test_record_serialization_excludes_samples():
    h = HuboHamiltonian(2, {(0, 1): 1.0})
    rec = optimize(h, cfg=CvarConfig(n_shots=20), iters=1, seed=0)[0]
    d = rec.to_dict()
    assert "samples" not in d
    assert d["bias"] == {"hx": [-1.0, -1.0], "hb": [0.0, 0.0]}
