import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact.pauli import (Observable, ObservableError, apply_string, expectation_exact,
                            load_observable, parse_observable, random_observable,
                            serialize_observable, stats, string_matrix, string_weights,
                            term_expectations)
from oracles import observable_dense, pauli_dense

strings = st.integers(1, 4).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))


def random_state(n, rng):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


@given(strings)
def test_string_matrix_matches_kron(s):
    assert np.allclose(string_matrix(s), pauli_dense(s))


@given(strings, st.integers(0, 2**32 - 1))
@settings(max_examples=60)
def test_apply_string_matches_dense_and_is_pure(s, seed):
    n = len(s)
    v = random_state(n, np.random.default_rng(seed))
    t = v.reshape((2,) * n)
    before = t.copy()
    out = apply_string(t, s)
    assert np.allclose(out.reshape(-1), pauli_dense(s) @ v)
    assert np.array_equal(t, before)


@pytest.mark.parametrize("n,N", [(1, 1), (2, 3), (3, 7), (4, 10)])
def test_expectation_matches_dense(n, N):
    rng = np.random.default_rng(n * 31 + N)
    obs = random_observable(n, N, 2.0, rng)
    v = random_state(n, rng)
    dense = np.vdot(v, observable_dense(obs.coeffs, obs.strings) @ v).real
    assert expectation_exact(obs, v) == pytest.approx(dense, abs=1e-12)


@given(strings)
def test_string_expectation_bounded(s):
    v = random_state(len(s), np.random.default_rng(len(s)))
    obs = Observable((1.0,), (s,))
    assert -1 - 1e-12 <= term_expectations(obs, v)[0] <= 1 + 1e-12


def test_identity_expectation_is_one():
    v = random_state(3, np.random.default_rng(0))
    assert expectation_exact(Observable((2.5,), ("III",)), v) == pytest.approx(2.5)


def test_rejects_unnormalized_state():
    with pytest.raises(ObservableError):
        expectation_exact(Observable((1.0,), ("Z",)), np.array([1.0, 1.0]))


def test_rejects_size_mismatch():
    with pytest.raises(ObservableError):
        expectation_exact(Observable((1.0,), ("ZZ",)), np.array([1.0, 0.0]))


@pytest.mark.parametrize("text,fragment", [
    ("0.5 XZ\n1.0 Z\n", "line 2"),
    ("abc XZ\n", "not a real number"),
    ("0.5 XQ\n", "unknown Pauli"),
    ("0.5\n", "expected"),
    ("# only a comment\n", "no terms"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(ObservableError, match=fragment):
        parse_observable(text)


def test_parse_comments_and_case():
    obs = parse_observable("# header\n0.25 xz  # tail\n\n-1e-3 YI\n")
    assert obs.strings == ("XZ", "YI")
    assert obs.coeffs == (0.25, -1e-3)


def test_duplicates_flagged_not_merged():
    obs = Observable((1.0, 2.0, 3.0), ("XX", "ZZ", "XX"))
    assert obs.duplicates == (2,)
    assert obs.N == 3


def test_nonfinite_coefficient_rejected():
    with pytest.raises(ObservableError):
        Observable((float("nan"),), ("X",))


@given(st.integers(1, 4), st.integers(1, 8), st.integers(0, 10**6))
@settings(max_examples=30)
def test_serialize_roundtrip(n, N, seed):
    obs = random_observable(n, N, 1.0, seed)
    back = parse_observable(serialize_observable(obs))
    assert back == obs


def test_load_observable(tmp_path):
    p = tmp_path / "h.txt"
    p.write_text("1.5 ZI\n-0.5 XX\n")
    assert load_observable(p).coeffs == (1.5, -0.5)


def test_random_observable_reproducible_and_nontrivial():
    a = random_observable(3, 20, 1.0, 7)
    assert a == random_observable(3, 20, 1.0, 7)
    assert "III" not in a.strings
    assert max(abs(c) for c in a.coeffs) <= 1.0


def test_stats_and_weights():
    obs = Observable((1.0, -3.0), ("XI", "YZ"))
    st_ = stats(obs)
    assert (st_.weight_l1, st_.weight_max, st_.N, st_.n) == (4.0, 3.0, 2, 2)
    assert string_weights(obs.strings) == [1, 2]


def test_scaled_and_subset():
    obs = Observable((1.0, 2.0, 3.0), ("X", "Y", "Z"))
    assert obs.scaled(2).coeffs == (2.0, 4.0, 6.0)
    assert obs.subset([2, 0]).strings == ("Z", "X")
    assert np.allclose(obs.matrix(), observable_dense(obs.coeffs, obs.strings))


def test_single_term_formats():
    obs = parse_observable("1.0 Z")
    assert (obs.N, obs.n, obs.coeffs) == (1, 1, (1.0,))
    assert (parse_observable("0.5 XX\n-0.25 ZI").N, parse_observable("0.5 XX\n-0.25 ZI").n) == (2, 2)


def test_hundred_line_roundtrip_canonical():
    obs = random_observable(4, 100, 3.0, 99)
    text = serialize_observable(obs)
    assert serialize_observable(parse_observable(text)) == text


@pytest.mark.parametrize("string,state", [("Z", [1, 0]), ("X", [2**-0.5, 2**-0.5])])
def test_eigenstate_expectations(string, state):
    assert expectation_exact(Observable((1.0,), (string,)), np.array(state)) == pytest.approx(1.0)


def test_random_coefficients_uniform():
    from scipy.stats import kstest
    obs = random_observable(2, 10**4, 1.0, 3)
    assert all(len(s) == 2 for s in obs.strings)
    assert kstest(obs.coeffs, "uniform", args=(-1, 2)).pvalue > 0.01
