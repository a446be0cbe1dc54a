"""Opinion-formation dynamics over influence networks.

All models share the anchored-averaging update family
    x(k+1) = Lambda W x(k) + (I - Lambda) x(0)  (+ model-specific terms)
where Lambda = diag(lambda) holds susceptibilities and x(0) the innate
opinions. Pure averaging is the lambda = 1 special case. Multi-issue
variants act on n x m opinion matrices.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    NumericalError,
    ParameterError,
    StabilityError,
    StructuralError,
)
from .netgraph import InfluenceNetwork, MultiplexNetwork
from .numkit import STRUCTURAL_ZERO, philox_stream, spectral_radius

# Plateau detector: this many consecutive steps with ||dX||_inf below
# PLATEAU_TOL mark the trajectory as converged.
PLATEAU_TOL = 1e-10
PLATEAU_RUN = 3

_DIVERGENCE_CAP = 1e12


@dataclass(frozen=True)
class ModelDescriptor:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int | None = None


@dataclass(frozen=True)
class OpinionTrajectory:
    """States indexed as states[k, agent, issue] for k = 0..horizon."""

    states: np.ndarray
    model: ModelDescriptor
    converged_at: int | None = None

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 2:
            states = states[:, :, None]
        if states.ndim != 3:
            raise StructuralError("trajectory states must be (steps, agents, issues)")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def n_issues(self) -> int:
        return self.states.shape[2]


@dataclass(frozen=True)
class StabilityReport:
    """Graph stability certificate for Lambda W.

    schur_stable holds iff every agent either has lambda < 1 or can reach
    one that does by a walk along influence edges; the numerically
    computed spectral radius must agree and is cross-checked.
    """

    schur_stable: bool
    spectral_radius: float
    open_set: tuple[int, ...]
    unanchored: tuple[int, ...]


@dataclass(frozen=True)
class AppraisalPath:
    """Per-stage transition matrices and the social-power sequence."""

    w_seq: np.ndarray      # (stages, n, n)
    c_seq: np.ndarray      # (stages + 1, n)


def _as_profile(x0, n: int) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim == 1:
        x0 = x0[:, None]
    if x0.ndim != 2 or x0.shape[0] != n:
        raise StructuralError(f"initial profile must be ({n},) or ({n}, m)")
    return x0


def is_schur_stable(net: InfluenceNetwork) -> StabilityReport:
    """Decide Schur stability of Lambda W by the walk criterion.

    The open set collects agents with lambda < 1; stability holds iff no
    agent is cut off from it. The eigenvalue radius is computed
    independently and the two routes must agree (the graph criterion is
    authoritative for ties at radius 1).
    """
    lam, w = net.lam, net.w
    reaches = lam < 1.0
    support = np.abs(w) > STRUCTURAL_ZERO
    # Propagate reachability backwards along influence edges until stable.
    changed = True
    while changed:
        grown = reaches | (support @ reaches)
        changed = bool((grown != reaches).any())
        reaches = grown
    unanchored = tuple(np.flatnonzero(~reaches).tolist())
    stable = not unanchored

    radius = spectral_radius(np.diag(lam) @ w)
    if stable and radius >= 1.0 + 1e-9:
        raise NumericalError(
            f"graph criterion says stable but spectral radius is {radius:.12g}"
        )
    if not stable and radius < 1.0 - 1e-10:
        raise NumericalError(
            f"graph criterion says unstable but spectral radius is {radius:.12g}"
        )
    return StabilityReport(
        schur_stable=stable,
        spectral_radius=radius,
        open_set=tuple(np.flatnonzero(lam < 1.0).tolist()),
        unanchored=unanchored,
    )


def simulate_fj(net: InfluenceNetwork, x0, steps: int) -> OpinionTrajectory:
    """Run x(k+1) = Lambda W x(k) + (I - Lambda) x(0) for `steps` steps.

    Works for any susceptibility vector; with lambda = 1 everywhere this
    is pure averaging. Returns the full trajectory including x(0).
    """
    x0 = _as_profile(x0, net.n)
    coupling = np.diag(net.lam) @ net.w
    anchor = (1.0 - net.lam)[:, None] * x0
    states = np.empty((steps + 1, net.n, x0.shape[1]))
    states[0] = x0
    converged_at, run = None, 0
    for k in range(steps):
        states[k + 1] = coupling @ states[k] + anchor
        run = run + 1 if np.max(np.abs(states[k + 1] - states[k])) < PLATEAU_TOL else 0
        if run >= PLATEAU_RUN and converged_at is None:
            converged_at = k + 1
    descriptor = ModelDescriptor(kind="anchored_averaging", params={"steps": steps})
    return OpinionTrajectory(states=states, model=descriptor, converged_at=converged_at)


def fj_equilibrium(net: InfluenceNetwork, x0) -> tuple[np.ndarray, np.ndarray]:
    """Equilibrium profile and the control matrix V with x(inf) = V x(0).

    V = (I - Lambda W)^{-1} (I - Lambda) is row-stochastic; requires
    Schur stability and raises on ill-conditioned systems.
    """
    report = is_schur_stable(net)
    if not report.schur_stable:
        raise StabilityError(
            f"equilibrium undefined: agents {report.unanchored} cannot reach "
            "any agent with lambda < 1"
        )
    x0 = np.asarray(x0, dtype=float)
    system = np.eye(net.n) - np.diag(net.lam) @ net.w
    condition = np.linalg.cond(system)
    if condition > 1e12:
        raise NumericalError(f"I - Lambda W has condition number {condition:.3g}")
    control = np.linalg.solve(system, np.diag(1.0 - net.lam))
    row_err = np.max(np.abs(control.sum(axis=1) - 1.0))
    if row_err > 1e-9 or control.min() < -1e-9:
        raise NumericalError(
            f"control matrix failed stochasticity check (row error {row_err:.3g})"
        )
    return control @ x0, control


def simulate_belief_system(
    net: InfluenceNetwork, c_matrix: np.ndarray, x0, steps: int
) -> OpinionTrajectory:
    """Multi-issue dynamics X(k+1) = Lambda W X(k) C' + (I - Lambda) X(0).

    C couples the issues; row-contractive C (sum of |row| <= 1) keeps the
    recursion bounded. A violated contract is flagged, and divergence past
    1e12 aborts with a numerical error.
    """
    c_matrix = np.atleast_2d(np.asarray(c_matrix, dtype=float))
    x0 = _as_profile(x0, net.n)
    if c_matrix.shape != (x0.shape[1], x0.shape[1]):
        raise StructuralError(
            f"issue coupling must be ({x0.shape[1]}, {x0.shape[1]}), got {c_matrix.shape}"
        )
    if np.abs(c_matrix).sum(axis=1).max() > 1.0 + 1e-12:
        warnings.warn(
            "issue-coupling matrix is not row-contractive; dynamics may diverge",
            stacklevel=2,
        )
    coupling = np.diag(net.lam) @ net.w
    anchor = (1.0 - net.lam)[:, None] * x0
    states = np.empty((steps + 1, net.n, x0.shape[1]))
    states[0] = x0
    converged_at, run = None, 0
    for k in range(steps):
        states[k + 1] = coupling @ states[k] @ c_matrix.T + anchor
        if not np.all(np.isfinite(states[k + 1])) or np.max(
            np.abs(states[k + 1])
        ) > _DIVERGENCE_CAP:
            raise NumericalError(f"belief-system trajectory diverged at step {k + 1}")
        run = run + 1 if np.max(np.abs(states[k + 1] - states[k])) < PLATEAU_TOL else 0
        if run >= PLATEAU_RUN and converged_at is None:
            converged_at = k + 1
    descriptor = ModelDescriptor(kind="belief_system", params={"steps": steps})
    return OpinionTrajectory(states=states, model=descriptor, converged_at=converged_at)


def simulate_reflected_appraisal(
    c_influence: np.ndarray, c0: np.ndarray, n_issues: int
) -> AppraisalPath:
    """Issue-sequence evolution of self-weights under reflected appraisal.

    Between issues, each agent's self-weight becomes its realized social
    power: with Lambda(s) = I - diag(c(s)) and
    W(s) = I - Lambda(s) + Lambda(s) C, the next power vector is
    c(s+1)' = (1'/n) (I - Lambda(s) W(s))^{-1} (I - Lambda(s)).
    C must be zero-diagonal with unit row sums; c0 lies on the open simplex.
    """
    c_influence = np.atleast_2d(np.asarray(c_influence, dtype=float))
    n = c_influence.shape[0]
    if c_influence.shape != (n, n):
        raise StructuralError("appraisal matrix must be square")
    if np.abs(np.diag(c_influence)).max() > STRUCTURAL_ZERO:
        raise ParameterError("appraisal matrix must have a zero diagonal")
    if np.max(np.abs(c_influence.sum(axis=1) - 1.0)) > 1e-9:
        raise ParameterError("appraisal matrix rows must sum to 1")
    c = np.asarray(c0, dtype=float).ravel()
    if c.shape[0] != n:
        raise StructuralError("c0 length does not match the appraisal matrix")
    if abs(c.sum() - 1.0) > 1e-9 or c.min() <= 0.0 or c.max() >= 1.0:
        raise ParameterError("c0 must lie strictly inside the simplex")
    if n_issues < 1:
        raise ParameterError("n_issues must be >= 1")

    w_seq = np.empty((n_issues, n, n))
    c_seq = np.empty((n_issues + 1, n))
    c_seq[0] = c
    for s in range(n_issues):
        w_stage = np.diag(c) + (1.0 - c)[:, None] * c_influence
        w_seq[s] = w_stage
        system = np.eye(n) - (1.0 - c)[:, None] * w_stage
        c_next = c * np.linalg.solve(system.T, np.ones(n)) / n
        if abs(c_next.sum() - 1.0) > 1e-9 or c_next.min() <= 0.0:
            raise NumericalError(f"social power left the simplex at stage {s + 1}")
        c = c_next
        c_seq[s + 1] = c
    return AppraisalPath(w_seq=w_seq, c_seq=c_seq)


def _neighbor_menus(net: InfluenceNetwork) -> tuple[np.ndarray, np.ndarray]:
    """Padded neighbor table and per-agent counts, self-loops excluded."""
    support = np.abs(net.w) > STRUCTURAL_ZERO
    np.fill_diagonal(support, False)
    counts = support.sum(axis=1)
    if (counts == 0).any():
        lonely = np.flatnonzero(counts == 0).tolist()
        raise StructuralError(f"agents {lonely} have no neighbors to poll")
    table = np.zeros((net.n, int(counts.max())), dtype=int)
    for i in range(net.n):
        nbrs = np.flatnonzero(support[i])
        table[i, : nbrs.size] = nbrs
    return table, counts


def simulate_gossip_fj(
    net: InfluenceNetwork,
    x0,
    steps: int,
    activation_size: int,
    seed: int | None = None,
) -> OpinionTrajectory:
    """Asynchronous anchored averaging with random activation.

    Each step draws an activation set uniformly among subsets of the given
    size; every active agent polls one uniformly chosen neighbor theta
    (self excluded) and moves to
    lambda_i ((1 - w_i,theta) x_i + w_i,theta x_theta) + (1 - lambda_i) x_i(0).
    Updates within a step read the previous state.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape[0] != net.n:
        raise StructuralError("x0 length does not match the network")
    if not 1 <= activation_size <= net.n:
        raise ParameterError(f"activation_size must lie in [1, {net.n}]")
    table, counts = _neighbor_menus(net)
    rng = philox_stream(seed)
    # Pre-drawn randomness keeps the run reproducible and the loop tight:
    # argpartition of iid keys yields a uniform fixed-size subset.
    keys = rng.random((steps, net.n))
    picks = rng.random((steps, net.n))

    x = x0.copy()
    states = np.empty((steps + 1, net.n))
    states[0] = x
    lam = net.lam
    for k in range(steps):
        active = np.argpartition(keys[k], activation_size - 1)[:activation_size]
        polled = table[active, (picks[k, active] * counts[active]).astype(int)]
        weight = net.w[active, polled]
        x_next = x.copy()
        x_next[active] = (
            lam[active] * ((1.0 - weight) * x[active] + weight * x[polled])
            + (1.0 - lam[active]) * x0[active]
        )
        x = x_next
        states[k + 1] = x
    descriptor = ModelDescriptor(
        kind="gossip",
        params={"activation_size": activation_size, "beta": activation_size / net.n},
        seed=seed,
    )
    return OpinionTrajectory(states=states[:, :, None], model=descriptor)


def expected_gossip_dynamics(
    net: InfluenceNetwork, beta: float, x0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean update of the gossip process: (Gamma_bar, b_bar, x_mean_inf).

    E[x(k+1)] = Gamma_bar E[x(k)] + b_bar with
    Gamma_bar = (1 - beta) I + beta Lambda (I - D^{-1} (I - W)) and
    b_bar = beta (I - Lambda) x(0), where D holds neighbor counts
    (self excluded) and beta the activation fraction. Exact for
    row-stochastic W under the activation model of simulate_gossip_fj.
    """
    if not 0.0 < beta <= 1.0:
        raise ParameterError("beta must lie in (0, 1]")
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape[0] != net.n:
        raise StructuralError("x0 length does not match the network")
    _, counts = _neighbor_menus(net)
    n = net.n
    inv_d = np.diag(1.0 / counts)
    gamma_bar = (1.0 - beta) * np.eye(n) + beta * np.diag(net.lam) @ (
        np.eye(n) - inv_d @ (np.eye(n) - net.w)
    )
    b_bar = beta * (1.0 - net.lam) * x0
    radius = spectral_radius(gamma_bar)
    if radius >= 1.0 - 1e-10:
        raise StabilityError(
            f"expected gossip update has spectral radius {radius:.12g}"
        )
    x_mean_inf = np.linalg.solve(np.eye(n) - gamma_bar, b_bar)
    return gamma_bar, b_bar, x_mean_inf


def cesaro_average(traj: OpinionTrajectory) -> np.ndarray:
    """Running time-averages (1/(k+1)) sum_{l<=k} x(l), same shape as states."""
    cumulative = np.cumsum(traj.states, axis=0)
    steps = np.arange(1, traj.states.shape[0] + 1, dtype=float)
    return cumulative / steps[:, None, None]


def _noise_factor(q: np.ndarray, n: int) -> np.ndarray:
    q = np.atleast_2d(np.asarray(q, dtype=float))
    if q.shape != (n, n):
        raise StructuralError(f"noise covariance must be ({n}, {n})")
    if not np.allclose(q, q.T, atol=1e-9):
        raise ParameterError("noise covariance must be symmetric")
    eigvals, eigvecs = np.linalg.eigh(q)
    if eigvals.min() < -1e-10:
        raise ParameterError("noise covariance must be positive semidefinite")
    return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def simulate_multiplex_fj(
    mx: MultiplexNetwork,
    u,
    q_noise,
    steps: int,
    seed: int | None = None,
    lambdas=None,
) -> list[OpinionTrajectory]:
    """Noisy anchored averaging on every layer, from x(0) = u.

    Layer s runs x(k+1) = Lambda_s W_s x(k) + (I - Lambda_s) u_s + eta(k)
    with eta ~ N(0, q_noise), using independent spawned noise streams.
    u and q_noise may be shared across layers or given per layer.
    """
    n, n_layers = mx.n, mx.n_layers
    u_layers = _per_layer_vectors(u, n, n_layers)
    q_layers = _per_layer_matrices(q_noise, n, n_layers)
    trajectories = []
    for s, layer in enumerate(mx.layers):
        lam = np.asarray(
            layer.lam if lambdas is None else lambdas[s], dtype=float
        ).ravel()
        net = InfluenceNetwork(w=layer.w, lam=lam, directed=layer.directed)
        report = is_schur_stable(net)
        if not report.schur_stable:
            raise StabilityError(f"layer {s} is not Schur stable")
        factor = _noise_factor(q_layers[s], n)
        rng = philox_stream(seed, 3, s)
        coupling = np.diag(lam) @ layer.w
        anchor = (1.0 - lam) * u_layers[s]
        states = np.empty((steps + 1, n))
        states[0] = u_layers[s]
        shocks = rng.standard_normal((steps, n))
        for k in range(steps):
            states[k + 1] = coupling @ states[k] + anchor + factor @ shocks[k]
        descriptor = ModelDescriptor(
            kind="multiplex_noisy", params={"layer": s, "steps": steps}, seed=seed
        )
        trajectories.append(
            OpinionTrajectory(states=states[:, :, None], model=descriptor)
        )
    return trajectories


def _per_layer_vectors(u, n: int, n_layers: int) -> list[np.ndarray]:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        vectors = [u] * n_layers
    elif u.ndim == 2 and u.shape == (n_layers, n):
        vectors = list(u)
    else:
        raise StructuralError(f"u must be ({n},) or ({n_layers}, {n})")
    if any(v.shape[0] != n for v in vectors):
        raise StructuralError("anchor length does not match the agent count")
    return vectors


def _per_layer_matrices(q, n: int, n_layers: int) -> list[np.ndarray]:
    q = np.asarray(q, dtype=float)
    if q.ndim == 2:
        return [q] * n_layers
    if q.ndim == 3 and q.shape[0] == n_layers:
        return list(q)
    raise StructuralError(f"q_noise must be ({n}, {n}) or ({n_layers}, {n}, {n})")


def cross_correlation_recursion(
    gamma_bar: np.ndarray,
    b_bar: np.ndarray,
    x_mean: np.ndarray,
    sigma0: np.ndarray,
    n_lags: int,
) -> np.ndarray:
    """Propagate stationary cross-correlations across lags.

    Sigma[l+1] = Sigma[l] Gamma_bar' + x_mean b_bar', starting from the
    supplied lag-0 matrix; returns an (n_lags + 1, n, n) stack.
    """
    gamma_bar = np.atleast_2d(np.asarray(gamma_bar, dtype=float))
    n = gamma_bar.shape[0]
    drift = np.outer(np.asarray(x_mean, float).ravel(), np.asarray(b_bar, float).ravel())
    out = np.empty((n_lags + 1, n, n))
    out[0] = np.asarray(sigma0, dtype=float)
    for lag in range(n_lags):
        out[lag + 1] = out[lag] @ gamma_bar.T + drift
    return out


# ---- file format ----------------------------------------------------------
#
# Trajectories are stored as delimited text with header k,agent,issue,value;
# a thinning stride keeps every stride-th step (step 0 always included).


def save_trajectory(traj: OpinionTrajectory, path, stride: int = 1) -> None:
    if stride < 1:
        raise ParameterError("stride must be >= 1")
    with open(path, "w") as fh:
        fh.write("k,agent,issue,value\n")
        for k in range(0, traj.states.shape[0], stride):
            for agent in range(traj.n):
                for issue in range(traj.n_issues):
                    value = format(traj.states[k, agent, issue], ".17g")
                    fh.write(f"{k},{agent},{issue},{value}\n")


def load_trajectory(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a trajectory file; returns (step indices, states array)."""
    entries = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "k,agent,issue,value":
            raise ConfigError(f"unexpected trajectory header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            k, agent, issue, value = line.split(",")
            entries[(int(k), int(agent), int(issue))] = float(value)
    if not entries:
        raise ConfigError("trajectory file holds no samples")
    ks = sorted({key[0] for key in entries})
    n = max(key[1] for key in entries) + 1
    m = max(key[2] for key in entries) + 1
    states = np.empty((len(ks), n, m))
    for row, k in enumerate(ks):
        for agent in range(n):
            for issue in range(m):
                try:
                    states[row, agent, issue] = entries[(k, agent, issue)]
                except KeyError:
                    raise ConfigError(
                        f"trajectory file is missing (k={k}, agent={agent}, issue={issue})"
                    ) from None
    return np.asarray(ks, dtype=int), states
