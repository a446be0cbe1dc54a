"""Unit tests for the centrality measures."""

import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import opinionkit as ok
from helpers import brute_force_centrality, row_stochastic, stable_network


def _line_network(n=4):
    # 0 - 1 - 2 - 3 path, symmetric hop weights
    w = np.zeros((n, n))
    for i in range(n - 1):
        w[i, i + 1] = 1.0
        w[i + 1, i] = 1.0
    w = w / w.sum(axis=1, keepdims=True)
    return ok.InfluenceNetwork(w=w, lam=np.full(n, 0.5), directed=False)


def test_degree_centrality_hand_instance():
    w = np.array([[0.5, 0.5, 0.0], [0.0, 1.0, 0.0], [0.25, 0.25, 0.5]])
    net = ok.InfluenceNetwork(w=w, lam=np.full(3, 0.5))
    assert ok.degree_centrality(net, direction="in").values.tolist() == [2, 1, 3]
    assert ok.degree_centrality(net, direction="out").values.tolist() == [2, 3, 1]
    weighted = ok.degree_centrality(net, direction="out", weighted=True)
    assert np.allclose(weighted.values, w.sum(axis=0))


def test_degree_centrality_rejects_unknown_direction():
    net = _line_network()
    with pytest.raises(ok.ParameterError):
        ok.degree_centrality(net, direction="sideways")


def test_closeness_on_a_path_graph():
    net = _line_network(4)
    values = ok.closeness_centrality(net).values
    # end nodes: distances 1+2+3; middle nodes: 1+1+2
    assert np.allclose(values, [1 / 6, 1 / 4, 1 / 4, 1 / 6])


def test_betweenness_on_a_path_graph():
    net = _line_network(4)
    values = ok.betweenness_centrality(net).values
    # node 1 carries pairs (0,2), (0,3); node 2 carries (0,3), (1,3)
    assert np.allclose(values, [0.0, 2.0, 2.0, 0.0])


def test_betweenness_on_a_star():
    n = 5
    w = np.zeros((n, n))
    w[0, 1:] = 1.0
    w[1:, 0] = 1.0
    w = w / w.sum(axis=1, keepdims=True)
    net = ok.InfluenceNetwork(w=w, lam=np.full(n, 0.5), directed=False)
    values = ok.betweenness_centrality(net).values
    # hub carries all C(4, 2) = 6 leaf pairs, leaves carry none
    assert np.allclose(values, [6.0, 0.0, 0.0, 0.0, 0.0])


def test_closeness_warns_when_not_strongly_connected():
    w = np.array([[0.0, 1.0], [0.0, 1.0]])
    net = ok.InfluenceNetwork(w=w, lam=np.full(2, 0.5))
    with pytest.warns(UserWarning):
        values = ok.closeness_centrality(net).values
    assert values[0] == pytest.approx(1.0)
    assert values[1] == 0.0


@given(st.integers(0, 200))
def test_path_based_centralities_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    net = ok.InfluenceNetwork(
        w=row_stochastic(rng, n, density=0.5),
        lam=np.full(n, 0.5),
    )
    for weighted in (False, True):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            bc = ok.betweenness_centrality(net, weighted=weighted).values
            cc = ok.closeness_centrality(net, weighted=weighted).values
        bc_ref, cc_ref = brute_force_centrality(net, weighted)
        assert np.allclose(bc, bc_ref, atol=1e-9)
        assert np.allclose(cc, cc_ref, atol=1e-9)


def test_eigenvector_centrality_on_a_symmetric_pair():
    values = ok.eigenvector_centrality(np.array([[0.0, 1.0], [1.0, 0.0]])).values
    assert np.allclose(values, [0.5, 0.5], atol=1e-9)


def test_eigenvector_centrality_matches_dense_eigensolver():
    rng = np.random.default_rng(17)
    a = rng.uniform(0.1, 1.0, (6, 6))
    values = ok.eigenvector_centrality(a).values
    eigvals, eigvecs = np.linalg.eig(a)
    lead = eigvecs[:, np.argmax(eigvals.real)].real
    lead = np.abs(lead) / np.abs(lead).sum()
    assert np.allclose(values, lead, atol=1e-8)
    assert values.sum() == pytest.approx(1.0)


def test_eigenvector_centrality_flags_reducible_input():
    a = np.array([[1.0, 0.0], [0.0, 1.0]])
    with pytest.warns(UserWarning):
        ok.eigenvector_centrality(a)


def test_pagerank_uniform_on_a_symmetric_cycle():
    n = 5
    m = np.zeros((n, n))
    for i in range(n):
        m[(i + 1) % n, i] = 1.0  # column-stochastic cycle
    values = ok.pagerank(m, m=0.15).values
    assert np.allclose(values, 1 / n, atol=1e-9)


def test_pagerank_equals_dominant_eigenvector_of_the_blend():
    rng = np.random.default_rng(4)
    m = rng.uniform(0.0, 1.0, (6, 6))
    m = m / m.sum(axis=0, keepdims=True)
    damping = 0.15
    blend = (1 - damping) * m + damping / 6 * np.ones((6, 6))
    pr = ok.pagerank(m, m=damping).values
    ev = ok.eigenvector_centrality(blend).values
    assert np.allclose(pr, ev, atol=1e-8)


def test_pagerank_row_stochastic_flag_transposes_the_walk():
    rng = np.random.default_rng(4)
    w = row_stochastic(rng, 5, density=0.8)
    pr_row = ok.pagerank(w, m=0.15, row_stochastic=True).values
    pr_col = ok.pagerank(w.T, m=0.15).values
    assert np.allclose(pr_row, pr_col, atol=1e-10)


def test_pagerank_rejects_a_non_stochastic_matrix():
    with pytest.raises(ok.ParameterError):
        ok.pagerank(np.array([[0.5, 0.2], [0.1, 0.3]]))


def test_friedkin_centrality_two_agent_hand_value():
    net = ok.InfluenceNetwork(
        w=np.array([[0.0, 1.0], [1.0, 0.0]]), lam=np.array([0.5, 0.5])
    )
    # symmetric pair: equal social power
    values = ok.friedkin_centrality(net).values
    assert np.allclose(values, [0.5, 0.5], atol=1e-12)


def test_friedkin_centrality_is_the_column_mean_of_the_control_matrix():
    rng = np.random.default_rng(23)
    net = stable_network(rng, 7)
    x0 = np.eye(7)
    _, v = ok.fj_equilibrium(net, x0)
    values = ok.friedkin_centrality(net).values
    assert np.allclose(values, v.mean(axis=0), atol=1e-10)


def test_friedkin_centrality_favors_the_stubborn_agent():
    net = ok.InfluenceNetwork(
        w=np.array([[0.0, 1.0], [1.0, 0.0]]), lam=np.array([0.2, 0.9])
    )
    values = ok.friedkin_centrality(net).values
    assert values[0] > values[1]


def test_friedkin_centrality_requires_stability():
    net = ok.InfluenceNetwork(
        w=np.array([[1.0, 0.0], [0.0, 1.0]]), lam=np.array([1.0, 1.0])
    )
    with pytest.raises(ok.StabilityError):
        ok.friedkin_centrality(net)
