"""Unit tests for the opinion dynamics simulators."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import opinionkit as ok
from helpers import row_stochastic, stable_network


def _pair_network(lam=(0.5, 0.5)):
    return ok.InfluenceNetwork(
        w=np.array([[0.0, 1.0], [1.0, 0.0]]), lam=np.asarray(lam, dtype=float)
    )


def test_simulate_fj_two_agent_closed_form():
    net = _pair_network()
    x0 = np.array([1.0, 0.0])
    traj = ok.simulate_fj(net, x0, steps=200)
    # x(k+1) = 0.5 * W x(k) + 0.5 * x0 converges to (I - 0.5 W)^-1 0.5 x0
    expected = np.linalg.solve(np.eye(2) - 0.5 * net.w, 0.5 * x0)
    assert np.allclose(traj.states[-1, :, 0], expected, atol=1e-12)
    assert traj.states.shape == (201, 2, 1)


def test_simulate_fj_keeps_stubborn_agents_fixed():
    net = _pair_network(lam=(0.0, 0.8))
    traj = ok.simulate_fj(net, np.array([0.7, -0.4]), steps=50)
    assert np.all(traj.states[:, 0, 0] == 0.7)


def test_degroot_reaches_the_left_eigenvector_consensus():
    w = np.array([[0.5, 0.5, 0.0], [1 / 3, 1 / 3, 1 / 3], [0.0, 0.5, 0.5]])
    net = ok.InfluenceNetwork(w=w, lam=np.ones(3))
    traj = ok.simulate_fj(net, np.array([1.0, 0.0, 0.0]), steps=400)
    final = traj.states[-1, :, 0]
    assert np.allclose(final, final[0], atol=1e-10)
    # independent oracle: the left Perron vector of W
    eigvals, eigvecs = np.linalg.eig(w.T)
    pi = eigvecs[:, np.argmax(eigvals.real)].real
    pi = pi / pi.sum()
    assert abs(final[0] - pi[0]) < 1e-8


def test_fj_equilibrium_matches_the_long_run_iterate():
    rng = np.random.default_rng(3)
    net = stable_network(rng, 12)
    x0 = rng.uniform(-1, 1, (12, 4))
    x_inf, v = ok.fj_equilibrium(net, x0)
    traj = ok.simulate_fj(net, x0, steps=3000)
    assert np.allclose(traj.states[-1], x_inf, atol=1e-9)
    assert np.allclose(v.sum(axis=1), 1.0, atol=1e-12)
    assert np.allclose(v @ x0, x_inf, atol=1e-12)


def test_fj_equilibrium_two_agent_hand_values():
    net = _pair_network()
    x_inf, v = ok.fj_equilibrium(net, np.array([1.0, 0.0]))
    assert np.allclose(v, [[2 / 3, 1 / 3], [1 / 3, 2 / 3]], atol=1e-12)
    assert np.allclose(x_inf, [2 / 3, 1 / 3], atol=1e-12)


def test_fj_equilibrium_requires_stability():
    net = ok.InfluenceNetwork(w=np.eye(2), lam=np.ones(2))
    with pytest.raises(ok.StabilityError):
        ok.fj_equilibrium(net, np.array([1.0, 0.0]))


def test_schur_stability_walk_criterion_hand_instances():
    # fully susceptible ring: nobody is anchored
    ring = ok.InfluenceNetwork(
        w=np.array([[0.0, 1.0], [1.0, 0.0]]), lam=np.ones(2)
    )
    report = ok.is_schur_stable(ring)
    assert not report.schur_stable
    assert report.unanchored == (0, 1)
    # one partially stubborn agent anchors everyone who reaches it
    anchored = ok.InfluenceNetwork(
        w=np.array([[0.0, 1.0], [1.0, 0.0]]), lam=np.array([1.0, 0.5])
    )
    report = ok.is_schur_stable(anchored)
    assert report.schur_stable
    assert report.spectral_radius < 1.0
    assert report.open_set == (1,)


def test_schur_stability_detects_cut_off_components():
    # agents 2 and 3 form a closed fully-susceptible loop
    w = np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ]
    )
    lam = np.array([0.5, 1.0, 1.0, 1.0])
    report = ok.is_schur_stable(ok.InfluenceNetwork(w=w, lam=lam))
    assert not report.schur_stable
    assert report.unanchored == (2, 3)


@given(st.integers(0, 500))
def test_schur_walk_criterion_agrees_with_the_spectrum(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 12))
    net = ok.InfluenceNetwork(
        w=row_stochastic(rng, n, density=0.3),
        lam=rng.choice([0.0, 0.4, 1.0], size=n),
    )
    report = ok.is_schur_stable(net)
    spectral = ok.spectral_radius(np.diag(net.lam) @ net.w)
    assert report.schur_stable == (spectral < 1.0 - 1e-9)


def test_belief_system_with_identity_coupling_is_plain_fj():
    rng = np.random.default_rng(2)
    net = stable_network(rng, 6)
    x0 = rng.uniform(-1, 1, (6, 3))
    plain = ok.simulate_fj(net, x0, steps=60)
    coupled = ok.simulate_belief_system(net, np.eye(3), x0, steps=60)
    assert np.allclose(plain.states, coupled.states, atol=1e-14)


def test_belief_system_coupling_mixes_issues():
    rng = np.random.default_rng(5)
    net = stable_network(rng, 5)
    x0 = rng.uniform(-1, 1, (5, 2))
    c = np.array([[0.7, 0.3], [0.3, 0.7]])
    coupled = ok.simulate_belief_system(net, c, x0, steps=40)
    plain = ok.simulate_fj(net, x0, steps=40)
    assert not np.allclose(coupled.states, plain.states, atol=1e-6)
    # one step by hand: X(1) = Lambda W X(0) C' + (I - Lambda) X(0)
    lam = net.lam[:, None]
    expected = lam * (net.w @ x0 @ c.T) + (1 - lam) * x0
    assert np.allclose(coupled.states[1], expected, atol=1e-12)


def test_belief_system_rejects_wrong_coupling_shape():
    rng = np.random.default_rng(6)
    net = stable_network(rng, 4)
    with pytest.raises(ok.StructuralError):
        ok.simulate_belief_system(net, np.eye(3), np.zeros((4, 2)), steps=5)


def test_reflected_appraisal_path_shapes_and_simplex():
    rng = np.random.default_rng(7)
    c = rng.uniform(0.1, 1.0, (5, 5))
    np.fill_diagonal(c, 0.0)
    c = c / c.sum(axis=1, keepdims=True)
    c0 = np.full(5, 0.2)
    path = ok.simulate_reflected_appraisal(c, c0, n_issues=60)
    assert path.w_seq.shape == (60, 5, 5)
    assert path.c_seq.shape == (61, 5)
    assert np.allclose(path.c_seq.sum(axis=1), 1.0, atol=1e-9)
    assert path.c_seq.min() > 0.0 and path.c_seq.max() < 1.0
    # each issue's influence matrix stays row-stochastic
    assert np.allclose(path.w_seq.sum(axis=2), 1.0, atol=1e-9)


def test_reflected_appraisal_uniform_start_is_a_fixed_point():
    c = np.array([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])
    path = ok.simulate_reflected_appraisal(c, np.full(3, 1 / 3), 50)
    assert np.allclose(path.c_seq, 1 / 3, atol=1e-12)


def test_reflected_appraisal_settles_from_a_generic_start():
    c = np.array([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])
    path = ok.simulate_reflected_appraisal(c, np.array([0.5, 0.2, 0.3]), 300)
    assert np.max(np.abs(path.c_seq[-1] - path.c_seq[-2])) < 1e-10


def test_reflected_appraisal_rejects_off_simplex_starts():
    c = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ok.ParameterError):
        ok.simulate_reflected_appraisal(c, np.array([0.6, 0.6]), 5)


def test_gossip_expected_dynamics_hand_instance():
    net = _pair_network()
    gamma_bar, b_bar, x_mean = ok.expected_gossip_dynamics(
        net, beta=0.5, x0=np.array([1.0, 0.0])
    )
    assert np.allclose(gamma_bar, [[0.5, 0.25], [0.25, 0.5]], atol=1e-12)
    assert np.allclose(b_bar, [0.25, 0.0], atol=1e-12)
    assert np.allclose(x_mean, [2 / 3, 1 / 3], atol=1e-12)


def test_gossip_requires_pollable_neighbors():
    lonely = ok.InfluenceNetwork(w=np.eye(2), lam=np.full(2, 0.5))
    with pytest.raises(ok.StructuralError):
        ok.expected_gossip_dynamics(lonely, beta=0.5, x0=np.zeros(2))
    with pytest.raises(ok.StructuralError):
        ok.simulate_gossip_fj(lonely, np.zeros(2), steps=10, activation_size=1, seed=0)


def test_gossip_simulation_is_reproducible_and_bounded():
    net = _pair_network()
    x0 = np.array([1.0, 0.0])
    a = ok.simulate_gossip_fj(net, x0, steps=500, activation_size=1, seed=9)
    b = ok.simulate_gossip_fj(net, x0, steps=500, activation_size=1, seed=9)
    c = ok.simulate_gossip_fj(net, x0, steps=500, activation_size=1, seed=10)
    assert np.array_equal(a.states, b.states)
    assert not np.array_equal(a.states, c.states)
    assert a.states.min() >= 0.0 and a.states.max() <= 1.0


def test_gossip_validates_activation_size():
    net = _pair_network()
    with pytest.raises(ok.ParameterError):
        ok.simulate_gossip_fj(net, np.zeros(2), steps=5, activation_size=0, seed=0)
    with pytest.raises(ok.ParameterError):
        ok.simulate_gossip_fj(net, np.zeros(2), steps=5, activation_size=3, seed=0)


def test_cesaro_average_of_a_constant_trajectory_is_constant():
    net = _pair_network(lam=(0.0, 0.0))
    x0 = np.array([0.3, 0.9])
    traj = ok.simulate_gossip_fj(net, x0, steps=50, activation_size=1, seed=1)
    avg = ok.cesaro_average(traj)
    assert np.allclose(avg[-1, :, 0], x0, atol=1e-12)


def test_cesaro_average_matches_cumulative_means():
    rng = np.random.default_rng(11)
    net = stable_network(rng, 4)
    traj = ok.simulate_fj(net, rng.uniform(-1, 1, 4), steps=20)
    avg = ok.cesaro_average(traj)
    direct = np.cumsum(traj.states, axis=0) / np.arange(1, 22)[:, None, None]
    assert np.allclose(avg, direct, atol=1e-14)


def test_cross_correlation_recursion_matches_direct_evaluation():
    rng = np.random.default_rng(13)
    gamma = rng.uniform(0, 0.3, (3, 3))
    b = rng.uniform(-0.5, 0.5, 3)
    x_mean = rng.uniform(-1, 1, 3)
    sigma0 = np.eye(3) + 0.1
    stack = ok.cross_correlation_recursion(gamma, b, x_mean, sigma0, 4)
    expected = sigma0.copy()
    for lag in range(4):
        expected = expected @ gamma.T + np.outer(x_mean, b)
        assert np.allclose(stack[lag + 1], expected, atol=1e-14)


def test_multiplex_simulation_without_noise_matches_fj_per_layer():
    cfg = ok.MultiplexConfig(
        model_tag="common_support",
        base=ok.GeneratorConfig(model="erdos_renyi", n=8, p=0.4, lambda_range=(0.3, 0.7)),
        n_layers=2,
    )
    mx = ok.build_multiplex(cfg, seed=3)
    rng = np.random.default_rng(4)
    u = rng.uniform(-1, 1, 8)
    trajs = ok.simulate_multiplex_fj(mx, u, q_noise=np.zeros((8, 8)), steps=30, seed=0)
    assert len(trajs) == 2
    for layer, traj in zip(mx.layers, trajs):
        plain = ok.simulate_fj(layer, u, steps=30)
        assert np.allclose(traj.states, plain.states, atol=1e-12)


def test_multiplex_simulation_noise_is_seeded():
    cfg = ok.MultiplexConfig(
        model_tag="independent",
        base=ok.GeneratorConfig(model="erdos_renyi", n=6, p=0.5, lambda_range=(0.2, 0.8)),
        n_layers=2,
    )
    mx = ok.build_multiplex(cfg, seed=8)
    u = np.linspace(-1, 1, 6)
    q = 0.01 * np.eye(6)
    a = ok.simulate_multiplex_fj(mx, u, q, steps=40, seed=5)
    b = ok.simulate_multiplex_fj(mx, u, q, steps=40, seed=5)
    c = ok.simulate_multiplex_fj(mx, u, q, steps=40, seed=6)
    for ta, tb, tc in zip(a, b, c):
        assert np.array_equal(ta.states, tb.states)
        assert not np.array_equal(ta.states, tc.states)


def test_trajectory_file_round_trip(tmp_path):
    rng = np.random.default_rng(19)
    net = stable_network(rng, 5)
    traj = ok.simulate_fj(net, rng.uniform(-1, 1, (5, 2)), steps=12)
    path = tmp_path / "traj.csv"
    ok.save_trajectory(traj, path)
    steps, states = ok.load_trajectory(path)
    assert np.array_equal(steps, np.arange(13))
    assert np.array_equal(states, traj.states)


def test_trajectory_stride_keeps_every_kth_step(tmp_path):
    rng = np.random.default_rng(20)
    net = stable_network(rng, 4)
    traj = ok.simulate_fj(net, rng.uniform(-1, 1, 4), steps=10)
    path = tmp_path / "traj.csv"
    ok.save_trajectory(traj, path, stride=4)
    steps, states = ok.load_trajectory(path)
    assert steps.tolist() == [0, 4, 8]
    assert np.array_equal(states, traj.states[[0, 4, 8]])


def test_load_trajectory_rejects_a_foreign_header(tmp_path):
    path = tmp_path / "traj.csv"
    path.write_text("time,node,dim,x\n0,0,0,1.0\n")
    with pytest.raises(ok.ConfigError):
        ok.load_trajectory(path)
