import numpy as np
import pytest
from hypothesis import given, strategies as st

from adhoc_beam.metrics import SI_SDR_CAP_DB, EvalResult, evaluate, si_sdr, snr_variant


def test_identity_is_capped(rng):
    s = rng.standard_normal(1000)
    assert si_sdr(s, s) == SI_SDR_CAP_DB
    assert si_sdr(s, 2 * s) == SI_SDR_CAP_DB


def test_equal_power_orthogonal_noise_is_zero_db(rng):
    s = rng.standard_normal(4000)
    n = rng.standard_normal(4000)
    n -= np.dot(n, s) / np.dot(s, s) * s
    n *= np.linalg.norm(s) / np.linalg.norm(n)
    assert abs(si_sdr(s, s + n)) < 0.1


def test_known_value(rng):
    s = rng.standard_normal(4000)
    n = rng.standard_normal(4000)
    n -= np.dot(n, s) / np.dot(s, s) * s
    n *= np.linalg.norm(s) / np.linalg.norm(n) / np.sqrt(10)
    assert si_sdr(s, s + n) == pytest.approx(10.0, abs=1e-9)


def test_zero_reference_rejected():
    with pytest.raises(ValueError):
        si_sdr(np.zeros(10), np.ones(10))


def test_length_mismatch():
    with pytest.raises(ValueError):
        si_sdr(np.ones(10), np.ones(11))


def test_orthogonal_estimate_floors():
    s = np.array([1.0, 0.0])
    assert si_sdr(s, np.array([0.0, 1.0])) == -SI_SDR_CAP_DB


def test_snr_variant_values():
    assert snr_variant(np.array([3.0, 0.0]), np.array([1.0, 0.0])) == 0.75
    assert snr_variant(np.ones(4), np.zeros(4)) == 1.0


def test_evaluate_bundle(rng):
    s = rng.standard_normal(500)
    r = evaluate(s, s + 0.1 * rng.standard_normal(500), scene=3)
    assert isinstance(r, EvalResult) and r.meta == {"scene": 3}
    assert 0 <= r.snr_variant <= 1
    assert r.si_sdr_db > 15


@given(st.floats(0.01, 100.0), st.integers(0, 2**32 - 1))
def test_scale_invariance(a, seed):
    r = np.random.default_rng(seed)
    s, e = r.standard_normal(300), r.standard_normal(300)
    assert si_sdr(s, a * e) == pytest.approx(si_sdr(s, e), abs=1e-9)
