"""Reconstruction of influence networks from opinion data.

Three data regimes are covered: finite trajectories (banded row-wise
programs), equilibrium snapshots (l1 row programs on the fixed-point
identity), and stationary second moments of randomly observed streams
(lag-correlation identities solved for the mean update). All estimators
decompose into per-row or per-column programs and report supports,
metrics, and solver diagnostics in one record type.
"""

import warnings
from dataclasses import dataclass, field
from math import log, pi as _PI

import numpy as np
from scipy.optimize import linprog
from scipy.special import multigammaln

from .errors import (
    ConfigError,
    EstimationError,
    IdentifiabilityError,
    InfeasibleError,
    NumericalError,
    ParameterError,
    StructuralError,
    TransformError,
)
from .dynamics import OpinionTrajectory
from .netgraph import InfluenceNetwork
from .numkit import (
    L1Problem,
    PINV_RCOND,
    STRUCTURAL_ZERO,
    pseudoinverse,
    solve_l1,
    spectral_radius,
)
from .observe import ObservationStream, observation_moments

# Default number of lag matrices averaged into Sigma_minus / Sigma_plus.
N_SIGMA = 5

# Off-diagonal entries of Gamma-hat below this fraction of the largest one
# are treated as absent edges.
SUPPORT_FRACTION = 0.05

DEFAULT_SUPPORT_TOL = 1e-6


@dataclass(frozen=True)
class EstimationReport:
    """One reconstructed network: weights, susceptibilities when
    estimated, the mean-update matrix when one was formed, the thresholded
    support, and solver diagnostics."""

    w_hat: np.ndarray
    lambda_hat: np.ndarray | None
    gamma_hat: np.ndarray | None
    support: tuple[tuple[int, int], ...]
    metrics: dict = field(default_factory=dict)
    solver_log: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MomentEstimates:
    """Corrected moment estimates from one observation stream."""

    x_hat: np.ndarray
    sigma: np.ndarray          # (max_lag + 1, n, n)
    sigma_minus: np.ndarray
    sigma_plus: np.ndarray
    n_sigma: int
    horizon: int


@dataclass(frozen=True)
class BayesShrinkage:
    matrices: tuple
    gammas: tuple
    prior_mean: np.ndarray


@dataclass(frozen=True)
class HyperFit:
    psi: np.ndarray
    nu: float
    objective: float
    n_iter: int
    converged: bool
    confidence: str


@dataclass(frozen=True)
class MultiplexEstimate:
    reports: tuple
    joint_support: tuple | None


@dataclass(frozen=True)
class EvalMetrics:
    precision: float
    recall: float
    f1: float
    frobenius_error: float
    max_abs_error: float


def _support_of(matrix: np.ndarray, threshold: float) -> tuple[tuple[int, int], ...]:
    rows, cols = np.nonzero(np.abs(matrix) > threshold)
    return tuple(zip(rows.tolist(), cols.tolist()))


def _as_profiles(x0, x_inf) -> tuple[np.ndarray, np.ndarray]:
    x0 = np.asarray(x0, dtype=float)
    x_inf = np.asarray(x_inf, dtype=float)
    if x0.ndim == 1:
        x0 = x0[:, None]
    if x_inf.ndim == 1:
        x_inf = x_inf[:, None]
    if x0.shape != x_inf.shape:
        raise StructuralError(f"profile shapes differ: {x0.shape} vs {x_inf.shape}")
    return x0, x_inf


def _consensus_guard(x0: np.ndarray) -> None:
    spreads = x0.max(axis=0) - x0.min(axis=0)
    consensus = spreads <= STRUCTURAL_ZERO
    if consensus.all():
        raise IdentifiabilityError(
            "every initial column is a consensus vector; equilibrium data "
            "carries no information about the weights"
        )
    if consensus.any():
        warnings.warn(
            f"{int(consensus.sum())} initial columns are consensus vectors "
            "and contribute nothing",
            stacklevel=3,
        )


def identify_finite_horizon(
    traj: OpinionTrajectory,
    eps: float = 0.0,
    lam: np.ndarray | None = None,
    support_threshold: float = DEFAULT_SUPPORT_TOL,
) -> EstimationReport:
    """Fit x(k+1) ~ A x(k) + B x(0) from a finite trajectory.

    Row-wise linear programs minimize the off-diagonal l1 mass of A
    subject to a per-sample deviation band of half-width eps, the
    stochastic closure sum_j a_ij = 1 - b_i, and 0 <= a, 0 <= b <= 1.
    Passing lam pins b_i = 1 - lambda_i. The recovered pair is
    lambda_i = 1 - b_i and w_ij = a_ij / lambda_i (a fully stubborn row
    falls back to the self-loop convention).
    """
    if eps < 0.0:
        raise ParameterError("eps must be >= 0")
    states = traj.states
    if states.shape[0] < 2:
        raise StructuralError("need at least one transition")
    n, m = states.shape[1], states.shape[2]
    x0 = states[0]
    data = np.concatenate(list(states[:-1]), axis=1)        # (n, (K)*m)
    target = np.concatenate(list(states[1:]), axis=1)       # (n, (K)*m)

    a_hat = np.zeros((n, n))
    b_hat = np.zeros(n)
    statuses = []
    for i in range(n):
        # Variables [a_i (n), b_i]; all nonnegative by bounds. The tiny
        # self-weight cost breaks the a_ii / b_i degeneracy of constant
        # rows toward the anchored reading.
        cost = np.ones(n + 1)
        cost[i] = 1e-9
        cost[n] = 0.0
        # Anchor coefficients repeat x_i(0) across steps, issue-minor.
        anchor = np.tile(x0[i], states.shape[0] - 1)
        phi = np.vstack([data, anchor[None, :]])
        closure = np.ones((1, n + 1))
        rhs = target[i]
        if lam is not None:
            b_bounds = (1.0 - float(lam[i]),) * 2
        else:
            b_bounds = (0.0, 1.0)
        bounds = [(0.0, None)] * n + [b_bounds]
        if eps == 0.0:
            res = linprog(
                cost,
                A_eq=np.vstack([phi.T, closure]),
                b_eq=np.concatenate([rhs, [1.0]]),
                bounds=bounds,
                method="highs",
            )
        else:
            band = np.vstack([phi.T, -phi.T])
            band_rhs = np.concatenate([rhs + eps, -(rhs - eps)])
            res = linprog(
                cost,
                A_ub=band,
                b_ub=band_rhs,
                A_eq=closure,
                b_eq=[1.0],
                bounds=bounds,
                method="highs",
            )
        if res.status == 2:
            needed = _minimal_band(phi.T, rhs, closure, bounds)
            raise InfeasibleError(
                f"row {i}: no (a, b) fits within eps={eps:.3g}; "
                f"smallest feasible band is {needed:.6g}"
            )
        if res.status != 0:
            raise NumericalError(f"row {i}: solver status {res.status}: {res.message}")
        a_hat[i] = res.x[:n]
        b_hat[i] = res.x[n]
        statuses.append("optimal")

    lambda_hat = 1.0 - b_hat
    w_hat = np.zeros((n, n))
    for i in range(n):
        if lambda_hat[i] > STRUCTURAL_ZERO:
            w_hat[i] = a_hat[i] / lambda_hat[i]
        else:
            w_hat[i, i] = 1.0
    return EstimationReport(
        w_hat=w_hat,
        lambda_hat=lambda_hat,
        gamma_hat=None,
        support=_support_of(w_hat, support_threshold),
        metrics={"eps": eps, "n_transitions": states.shape[0] - 1, "n_issues": m},
        solver_log={"rows": tuple(statuses), "coupling_matrix": a_hat},
    )


def _minimal_band(phi_t, rhs, closure, bounds) -> float:
    """Smallest deviation band for which the row program is feasible."""
    n_var = phi_t.shape[1]
    cost = np.zeros(n_var + 1)
    cost[-1] = 1.0
    ones_col = np.ones((phi_t.shape[0], 1))
    a_ub = np.vstack(
        [np.hstack([phi_t, -ones_col]), np.hstack([-phi_t, -ones_col])]
    )
    b_ub = np.concatenate([rhs, -rhs])
    a_eq = np.hstack([closure, [[0.0]]])
    res = linprog(
        cost,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=list(bounds) + [(0.0, None)],
        method="highs",
    )
    return float(res.fun) if res.status == 0 else float("inf")


def check_lambda_identifiability(lam) -> None:
    """Raise when susceptibilities alone rule out equilibrium recovery:
    lambda = 1 everywhere (any row-stochastic W fits) or any lambda = 0
    (that agent's row never shows in the data)."""
    lam = np.asarray(lam, dtype=float).ravel()
    if np.all(lam >= 1.0):
        raise IdentifiabilityError(
            "lambda = 1 everywhere: equilibria satisfy W x = x for any "
            "row-stochastic W, so the weights are not identifiable"
        )
    if np.any(lam <= 0.0):
        raise IdentifiabilityError(
            "fully stubborn agents (lambda = 0) never reveal their weights"
        )


def identify_infinite_horizon(
    x0,
    x_inf,
    lam,
    nonneg: bool = False,
    support_threshold: float = DEFAULT_SUPPORT_TOL,
) -> EstimationReport:
    """Recover W from equilibrium snapshots with known susceptibilities.

    Each row solves min ||w||_1 subject to X(inf)' w = psi_j and
    1'w = 1, where psi_j = (x_j(inf) - (1 - lambda_j) x_j(0)) / lambda_j
    restates the fixed-point identity. nonneg additionally constrains
    w >= 0. Consensus-only initial data, lambda = 1 everywhere, or any
    lambda_j = 0 make the program meaningless and raise.
    """
    x0, x_inf = _as_profiles(x0, x_inf)
    n = x0.shape[0]
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.shape[0] != n:
        raise StructuralError("lambda length does not match the profiles")
    check_lambda_identifiability(lam)
    if np.any(lam >= 1.0):
        warnings.warn(
            "rows with lambda = 1 admit the trivial self-loop solution; "
            "their estimates are minimal-l1 representatives only",
            stacklevel=2,
        )
    _consensus_guard(x0)

    phi = x_inf.T
    psi = (x_inf - (1.0 - lam)[:, None] * x0) / lam[:, None]
    w_hat = np.zeros((n, n))
    objectives, residuals = [], []
    for j in range(n):
        result = solve_l1(L1Problem(phi=phi, psi=psi[j], sum_to=1.0, nonneg=nonneg))
        if result.status == "infeasible":
            raise InfeasibleError(f"row {j}: equilibrium identities are inconsistent")
        if not result.ok:
            raise NumericalError(f"row {j}: l1 solve ended with {result.status}")
        w_hat[j] = result.x
        objectives.append(result.objective)
        residuals.append(result.residual)
    return EstimationReport(
        w_hat=w_hat,
        lambda_hat=lam,
        gamma_hat=None,
        support=_support_of(w_hat, support_threshold),
        metrics={"max_residual": float(np.max(residuals))},
        solver_log={"objectives": tuple(objectives), "nonneg": nonneg},
    )


def identify_unknown_lambda(
    x0,
    x_inf,
    nonneg: bool = False,
    support_threshold: float = DEFAULT_SUPPORT_TOL,
) -> EstimationReport:
    """Joint recovery of (W, lambda) up to the scaling ambiguity.

    Self-weights trade off against susceptibilities without changing any
    equilibrium, so the estimate is pinned to the canonical representative
    with diag(W) = 0. Each row solves the augmented program on
    [X(inf)', x_j(0) - x_j(inf)] with unknown [w_j; 1/lambda_j],
    w_jj = 0, 1'w_j = 1.
    """
    x0, x_inf = _as_profiles(x0, x_inf)
    n, m = x0.shape
    if n < 2:
        raise StructuralError("need at least two agents")
    _consensus_guard(x0)
    spread_0 = float((x0.max(axis=0) - x0.min(axis=0)).max())
    spread_inf = float((x_inf.max(axis=0) - x_inf.min(axis=0)).max())
    if spread_inf < 0.01 * spread_0:
        warnings.warn(
            "equilibrium profiles are nearly consensus (susceptibilities "
            "close to 1); the recovery is ill-conditioned",
            stacklevel=2,
        )

    w_hat = np.zeros((n, n))
    mu = np.ones(n)
    at_rest = []
    movement = np.abs(x0 - x_inf).max(axis=1)
    for j in range(n):
        phi = np.hstack([x_inf.T, (x0[j] - x_inf[j])[:, None]])
        # Appending the closure row keeps the sum over w only, not mu.
        closure = np.zeros(n + 1)
        closure[:n] = 1.0
        phi = np.vstack([phi, closure])
        psi = np.concatenate([x0[j], [1.0]])
        weights = np.ones(n + 1)
        weights[n] = 0.0
        lo = np.full(n + 1, np.nan)
        hi = np.full(n + 1, np.nan)
        lo[j] = hi[j] = 0.0
        lo[n] = 1.0
        result = solve_l1(
            L1Problem(
                phi=phi, psi=psi, sum_to=None, nonneg=nonneg, weights=weights,
                lo=lo, hi=hi,
            )
        )
        if result.status == "infeasible":
            raise InfeasibleError(f"row {j}: augmented identities are inconsistent")
        if not result.ok:
            raise NumericalError(f"row {j}: l1 solve ended with {result.status}")
        w_hat[j] = result.x[:n]
        mu[j] = result.x[n]
        if movement[j] <= STRUCTURAL_ZERO:
            at_rest.append(j)
    if at_rest:
        warnings.warn(
            f"agents {at_rest} never moved; their susceptibilities are arbitrary",
            stacklevel=2,
        )
    lambda_hat = 1.0 / mu
    return EstimationReport(
        w_hat=w_hat,
        lambda_hat=lambda_hat,
        gamma_hat=None,
        support=_support_of(w_hat, support_threshold),
        metrics={"canonical": "zero-diagonal"},
        solver_log={"rows_at_rest": tuple(at_rest), "nonneg": nonneg},
    )


def ambiguity_transform(lam, w, d) -> tuple[np.ndarray, np.ndarray]:
    """Produce the equivalent model (lambda', W') indexed by d in [0, 1]^n.

    Off-diagonal couplings scale as d_i lambda_i w_ij while
    lambda'_i = 1 - d_i (1 - lambda_i); self-weights absorb the change, so
    every admissible d yields the same map from initial to equilibrium
    opinions. Raises when the transformed model leaves the admissible
    class (negative weights, lambda outside [0, 1], or lost stability).
    """
    lam = np.asarray(lam, dtype=float).ravel()
    w = np.atleast_2d(np.asarray(w, dtype=float))
    d = np.asarray(d, dtype=float).ravel()
    n = lam.shape[0]
    if w.shape != (n, n) or d.shape[0] != n:
        raise StructuralError("lambda, W, and d sizes are inconsistent")
    if d.min() < 0.0 or d.max() > 1.0:
        raise ParameterError("d entries must lie in [0, 1]")

    lam2 = 1.0 - d * (1.0 - lam)
    coupling = lam[:, None] * w
    off = coupling.copy()
    np.fill_diagonal(off, 0.0)
    coupling2 = d[:, None] * off
    diag2 = 1.0 - d * ((1.0 - lam) + off.sum(axis=1))
    coupling2[np.arange(n), np.arange(n)] = diag2

    w2 = np.zeros((n, n))
    for i in range(n):
        if lam2[i] > STRUCTURAL_ZERO:
            w2[i] = coupling2[i] / lam2[i]
        elif np.abs(coupling2[i]).max() <= 1e-9:
            w2[i, i] = 1.0
        else:
            raise TransformError(
                f"d[{i}] makes agent {i} fully stubborn while keeping couplings"
            )
    if w2.min() < -1e-9:
        raise TransformError("transformed weights leave the nonnegative cone")
    w2 = np.clip(w2, 0.0, None)
    row_err = np.max(np.abs(w2.sum(axis=1) - 1.0))
    if row_err > 1e-9:
        raise TransformError(f"transformed rows are off-stochastic by {row_err:.3g}")
    if lam2.min() < -1e-12 or lam2.max() > 1.0 + 1e-12:
        raise TransformError("transformed susceptibilities leave [0, 1]")
    from .dynamics import is_schur_stable

    check = is_schur_stable(InfluenceNetwork(w=w2, lam=np.clip(lam2, 0.0, 1.0)))
    if not check.schur_stable:
        raise TransformError("transform breaks reachability of lambda < 1 agents")
    return np.clip(lam2, 0.0, 1.0), w2


def estimate_state_mean(stream: ObservationStream, model=None) -> np.ndarray:
    """Bias-corrected mean state x_hat = z_bar / pi."""
    if stream.horizon <= 0:
        raise EstimationError("empty stream carries no information")
    model = model if model is not None else stream.model
    pi = model.rho_vector(stream.n)
    zero = np.flatnonzero(pi == 0.0)
    if zero.size:
        raise IdentifiabilityError(
            f"agents {zero.tolist()} have rho = 0 and are never observed"
        )
    return stream.values.mean(axis=0) / pi


def estimate_cross_correlations(
    stream: ObservationStream, max_lag: int, n_sigma: int = N_SIGMA, model=None
) -> MomentEstimates:
    """Moment-corrected lag correlations and their Sigma-+/- averages.

    S_hat[l] = (1/(t-l)) sum_k z(k) z(k+l)' is corrected entrywise by the
    observation moments; sigma_minus and sigma_plus average lags
    0..n_sigma-1 and 1..n_sigma.
    """
    steps = stream.values.shape[0]
    model = model if model is not None else stream.model
    if n_sigma < 1:
        raise ParameterError("n_sigma must be >= 1")
    if max_lag < n_sigma:
        raise ParameterError(f"max_lag={max_lag} must be >= n_sigma={n_sigma}")
    if steps <= max_lag:
        raise EstimationError(f"{steps} steps cannot support lag {max_lag}")
    moments = observation_moments(model, stream.n, max_lag)
    if np.any(moments.cap_pi[: max_lag + 1] == 0.0):
        raise IdentifiabilityError(
            "observation moments vanish somewhere; those correlations are "
            "not estimable"
        )
    z = stream.values
    sigma = np.empty((max_lag + 1, stream.n, stream.n))
    for lag in range(max_lag + 1):
        upper = steps - lag
        raw = z[:upper].T @ z[lag:] / upper
        sigma[lag] = raw / moments.cap_pi[lag]
    return MomentEstimates(
        x_hat=stream.values.mean(axis=0) / moments.pi,
        sigma=sigma,
        sigma_minus=sigma[:n_sigma].mean(axis=0),
        sigma_plus=sigma[1 : n_sigma + 1].mean(axis=0),
        n_sigma=n_sigma,
        horizon=stream.horizon,
    )


def estimate_gamma(
    moments: MomentEstimates,
    b_bar,
    mode: str = "dense",
    eta: float = 0.0,
    rcond: float = PINV_RCOND,
) -> tuple[np.ndarray, dict]:
    """Solve the lag identity Sigma_plus = Sigma_minus Gamma' + x b_bar'.

    dense inverts Sigma_minus through the pseudoinverse (rank deficiency
    falls back to the minimum-norm solution with a warning); sparse
    minimizes the off-diagonal l1 mass of Gamma' column by column subject
    to a max-norm band of width eta around the identity.
    """
    if mode not in ("dense", "sparse"):
        raise ParameterError(f"unknown mode {mode!r}")
    b_bar = np.asarray(b_bar, dtype=float).ravel()
    n = moments.sigma_minus.shape[0]
    target = moments.sigma_plus - np.outer(moments.x_hat, b_bar)
    sing = np.linalg.svd(moments.sigma_minus, compute_uv=False)
    rank = int(np.sum(sing > rcond * sing[0]))
    condition = float(sing[0] / sing[-1]) if sing[-1] > 0.0 else float("inf")
    info = {"mode": mode, "condition": condition, "rank": rank}
    if mode == "dense":
        if rank < n:
            warnings.warn(
                f"Sigma_minus has rank {rank} < {n}; using the pseudoinverse "
                "fallback",
                stacklevel=2,
            )
        gamma_t = pseudoinverse(moments.sigma_minus, rcond=rcond) @ target
        return gamma_t.T, info

    gamma_t = np.empty((n, n))
    for col in range(n):
        weights = np.ones(n)
        weights[col] = 0.0
        if eta == 0.0:
            result = solve_l1(
                L1Problem(phi=moments.sigma_minus, psi=target[:, col], weights=weights)
            )
            if result.status == "infeasible":
                raise InfeasibleError(
                    f"column {col}: lag identities are inconsistent at eta = 0; "
                    "widen the band"
                )
            if not result.ok:
                raise NumericalError(f"column {col}: solver ended with {result.status}")
            gamma_t[:, col] = result.x
            continue
        cost = np.concatenate([weights, weights])
        block = np.hstack([moments.sigma_minus, -moments.sigma_minus])
        a_ub = np.vstack([block, -block])
        b_ub = np.concatenate([target[:, col] + eta, eta - target[:, col]])
        res = linprog(
            cost, A_ub=a_ub, b_ub=b_ub, bounds=[(0.0, None)] * (2 * n), method="highs"
        )
        if res.status == 2:
            raise InfeasibleError(f"column {col}: band eta={eta:.3g} is infeasible")
        if res.status != 0:
            raise NumericalError(f"column {col}: solver status {res.status}")
        gamma_t[:, col] = res.x[:n] - res.x[n:]
    return gamma_t.T, info


def recover_topology_and_w(
    gamma_hat: np.ndarray,
    lam,
    beta: float,
    threshold: float | None = None,
) -> EstimationReport:
    """Invert the expected gossip update for the weight matrix.

    The off-diagonal support of Gamma-bar equals the edge set, so
    neighborhood sizes are read off the thresholded estimate and
    W = (1/beta) D Lambda^{-1} [Gamma - (1-beta) I - beta Lambda (I - D^{-1})]
    undoes the averaging. Recovered rows are clipped at zero and
    renormalized, with both adjustments reported.
    """
    gamma_hat = np.atleast_2d(np.asarray(gamma_hat, dtype=float))
    lam = np.asarray(lam, dtype=float).ravel()
    n = gamma_hat.shape[0]
    if gamma_hat.shape != (n, n) or lam.shape[0] != n:
        raise StructuralError("gamma and lambda sizes are inconsistent")
    if not 0.0 < beta <= 1.0:
        raise ParameterError("beta must lie in (0, 1]")
    if np.any(lam <= 0.0):
        raise IdentifiabilityError(
            "agents with lambda = 0 never move, so their rows cannot be recovered"
        )
    off = np.abs(gamma_hat.copy())
    np.fill_diagonal(off, 0.0)
    if threshold is None:
        threshold = SUPPORT_FRACTION * off.max()
    keep = off > threshold
    d_hat = keep.sum(axis=1).astype(float)
    empty = np.flatnonzero(d_hat == 0)
    if empty.size:
        raise StructuralError(
            f"rows {empty.tolist()} keep no edges above threshold {threshold:.3g}"
        )
    trimmed = np.where(keep, gamma_hat, 0.0)
    np.fill_diagonal(trimmed, np.diag(gamma_hat))

    correction = trimmed - (1.0 - beta) * np.eye(n) - beta * np.diag(
        lam * (1.0 - 1.0 / d_hat)
    )
    w_hat = (d_hat / (beta * lam))[:, None] * correction
    clipped = float(-np.clip(w_hat, None, 0.0).sum())
    w_hat = np.clip(w_hat, 0.0, None)
    sums = w_hat.sum(axis=1)
    if np.any(sums <= 0.0):
        raise NumericalError("a recovered row has no positive mass")
    renorm = float(np.max(np.abs(sums - 1.0)))
    w_hat = w_hat / sums[:, None]
    support = _support_of(np.where(keep, 1.0, 0.0), 0.5)
    return EstimationReport(
        w_hat=w_hat,
        lambda_hat=lam,
        gamma_hat=gamma_hat,
        support=support,
        metrics={
            "threshold": float(threshold),
            "clipped_negative_mass": clipped,
            "max_row_renormalization": renorm,
        },
        solver_log={"d_hat": d_hat},
    )


def _check_prior(psi: np.ndarray, nu: float, n: int) -> None:
    if psi.shape != (n, n):
        raise StructuralError(f"prior scale must be ({n}, {n})")
    if not np.allclose(psi, psi.T, atol=1e-9):
        raise ParameterError("prior scale must be symmetric")
    if np.linalg.eigvalsh(psi).min() <= 0.0:
        raise ParameterError("prior scale must be positive definite")
    if nu <= n + 1:
        raise ParameterError(f"nu must exceed n + 1 = {n + 1}")


def bayesian_covariance(samples, psi: np.ndarray, nu: float) -> BayesShrinkage:
    """Shrink per-system sample covariances toward a common prior mean.

    Each system's estimate is gamma * Psi/(nu - (n+1)) + (1-gamma) * SCM
    with gamma = (nu - (n+1)) / (nu + T - (n+1)); systems with no samples
    return the prior mean exactly.
    """
    samples = [np.atleast_2d(np.asarray(z, dtype=float)) for z in samples]
    if not samples:
        raise ParameterError("need at least one system")
    n = samples[0].shape[0]
    _check_prior(np.asarray(psi, dtype=float), float(nu), n)
    psi = np.asarray(psi, dtype=float)
    prior_mean = psi / (nu - (n + 1))
    matrices, gammas = [], []
    for z in samples:
        if z.shape[0] != n:
            raise StructuralError("all systems must share the dimension")
        t = z.shape[1]
        gamma = (nu - (n + 1)) / (nu + t - (n + 1))
        scm = z @ z.T / t if t > 0 else np.zeros((n, n))
        matrices.append(gamma * prior_mean + (1.0 - gamma) * scm)
        gammas.append(float(gamma))
    return BayesShrinkage(
        matrices=tuple(matrices), gammas=tuple(gammas), prior_mean=prior_mean
    )


def _neg_log_marginal(psi: np.ndarray, nu: float, grams, t_sizes, n: int) -> float:
    sign, logdet_psi = np.linalg.slogdet(psi)
    if sign <= 0:
        return float("inf")
    total = 0.0
    for gram, t in zip(grams, t_sizes):
        sign_g, logdet_g = np.linalg.slogdet(psi + gram)
        if sign_g <= 0:
            return float("inf")
        total += (
            multigammaln((nu + t) / 2.0, n)
            - multigammaln(nu / 2.0, n)
            + (nu / 2.0) * logdet_psi
            - ((nu + t) / 2.0) * logdet_g
            - (n * t / 2.0) * log(_PI)
        )
    return -total


def _golden_nu(psi, grams, t_sizes, n, lo, hi, evals=80):
    ratio = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - ratio * (b - a)
    d = a + ratio * (b - a)
    fc = _neg_log_marginal(psi, c, grams, t_sizes, n)
    fd = _neg_log_marginal(psi, d, grams, t_sizes, n)
    for _ in range(evals):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - ratio * (b - a)
            fc = _neg_log_marginal(psi, c, grams, t_sizes, n)
        else:
            a, c, fc = c, d, fd
            d = a + ratio * (b - a)
            fd = _neg_log_marginal(psi, d, grams, t_sizes, n)
    return (c, fc) if fc <= fd else (d, fd)


def fit_hyperparameters(samples, max_iter: int = 200, rel_tol: float = 1e-8) -> HyperFit:
    """Empirical-Bayes fit of the prior (Psi, nu) across systems.

    Alternates a golden-section search in nu with a damped fixed-point
    update of Psi, driving the summed negative log marginal likelihood of
    the zero-mean Gaussian / inverse-Wishart hierarchy downward; the
    objective is non-increasing by construction and convergence is
    declared at relative change below rel_tol.
    """
    samples = [np.atleast_2d(np.asarray(z, dtype=float)) for z in samples]
    if not samples:
        raise ParameterError("need at least one system")
    n = samples[0].shape[0]
    t_sizes = [z.shape[1] for z in samples]
    if min(t_sizes) < 1:
        raise ParameterError("every system needs at least one sample to fit a prior")
    grams = [z @ z.T for z in samples]
    m = len(samples)

    nu = n + 3.0
    pooled = np.mean([g / t for g, t in zip(grams, t_sizes)], axis=0)
    pooled = (pooled + pooled.T) / 2.0 + 1e-8 * np.eye(n) * max(np.trace(pooled) / n, 1e-8)
    psi = (nu - (n + 1)) * pooled
    lo, hi = n + 1 + 1e-6, n + 1 + 1000.0

    objective = _neg_log_marginal(psi, nu, grams, t_sizes, n)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        nu_new, obj_nu = _golden_nu(psi, grams, t_sizes, n, lo, hi)
        if obj_nu < objective:
            nu, objective = nu_new, obj_nu

        inv_sum = np.zeros((n, n))
        for gram, t in zip(grams, t_sizes):
            inv_sum += (nu + t) * np.linalg.inv(psi + gram)
        candidate = np.linalg.inv(inv_sum / (m * nu))
        candidate = (candidate + candidate.T) / 2.0
        obj_candidate = _neg_log_marginal(candidate, nu, grams, t_sizes, n)
        halvings = 0
        while obj_candidate > objective and halvings < 30:
            candidate = (candidate + psi) / 2.0
            obj_candidate = _neg_log_marginal(candidate, nu, grams, t_sizes, n)
            halvings += 1
        previous = objective
        if obj_candidate <= objective:
            psi, objective = candidate, obj_candidate
        if objective > previous + 1e-9 * max(1.0, abs(previous)):
            raise NumericalError("objective increased; alternating update is broken")
        if abs(previous - objective) <= rel_tol * max(1.0, abs(previous)):
            converged = True
            break

    confidence = "low" if m == 1 or sum(t_sizes) < 5 * n * n else "ok"
    return HyperFit(
        psi=psi,
        nu=float(nu),
        objective=float(objective),
        n_iter=iterations,
        converged=converged,
        confidence=confidence,
    )


def identify_multiplex(
    streams,
    model_tag: str,
    lambdas,
    u,
    max_lag: int = N_SIGMA,
    n_sigma: int = N_SIGMA,
    psi: np.ndarray | None = None,
    nu: float | None = None,
    support_threshold: float | None = None,
    shrink: bool = True,
) -> MultiplexEstimate:
    """Per-layer mean-update estimation with cross-layer regularization.

    Each layer runs the moment pipeline for the synchronous anchored
    model (Gamma = Lambda W, b = (I - Lambda) u); the lag-0 moment is
    shrunk toward a cross-layer prior mean before inversion. Under the
    common_support tag, supports are intersected across layers and each
    layer's weights are re-masked to the joint support.
    """
    from .netgraph import MULTIPLEX_MODELS

    if model_tag not in MULTIPLEX_MODELS:
        raise ParameterError(
            f"unknown multiplex model {model_tag!r}; choose from {MULTIPLEX_MODELS}"
        )
    joint_support = model_tag == "common_support"
    streams = list(streams)
    if not streams:
        raise ParameterError("need at least one layer")
    n = streams[0].n
    n_layers = len(streams)
    lambdas = [np.asarray(lam, dtype=float).ravel() for lam in lambdas]
    u_vectors = _layer_anchors(u, n, n_layers)
    if len(lambdas) != n_layers:
        raise StructuralError("one lambda vector per layer is required")
    if any(np.any(lam <= 0.0) for lam in lambdas):
        raise IdentifiabilityError("every susceptibility must be positive")

    moment_sets = [
        estimate_cross_correlations(stream, max_lag, n_sigma) for stream in streams
    ]
    t_effs = [float(stream.mask.sum()) / stream.n for stream in streams]
    gammas_shrink = [0.0] * n_layers
    if shrink:
        if psi is None or nu is None:
            nu = float(nu) if nu is not None else n + 3.0
            pooled = np.mean([me.sigma[0] for me in moment_sets], axis=0)
            pooled = (pooled + pooled.T) / 2.0
            floor = max(np.trace(pooled) / n, 1e-8) * 1e-8
            pooled = pooled + floor * np.eye(n)
            psi = (nu - (n + 1)) * pooled
        prior_mean = np.asarray(psi, dtype=float) / (nu - (n + 1))
        for s, me in enumerate(moment_sets):
            gamma = (nu - (n + 1)) / (nu + t_effs[s] - (n + 1))
            gammas_shrink[s] = float(gamma)
            sigma = me.sigma.copy()
            sigma[0] = gamma * prior_mean + (1.0 - gamma) * sigma[0]
            moment_sets[s] = MomentEstimates(
                x_hat=me.x_hat,
                sigma=sigma,
                sigma_minus=sigma[:n_sigma].mean(axis=0),
                sigma_plus=sigma[1 : n_sigma + 1].mean(axis=0),
                n_sigma=n_sigma,
                horizon=me.horizon,
            )

    gamma_hats, supports, infos = [], [], []
    for s, me in enumerate(moment_sets):
        b_bar = (1.0 - lambdas[s]) * u_vectors[s]
        gamma_hat, info = estimate_gamma(me, b_bar, mode="dense")
        gamma_hats.append(gamma_hat)
        infos.append(info)
        off = np.abs(gamma_hat.copy())
        np.fill_diagonal(off, 0.0)
        cut = (
            support_threshold
            if support_threshold is not None
            else SUPPORT_FRACTION * off.max()
        )
        supports.append({
            (int(i), int(j))
            for i, j in zip(*np.nonzero(np.abs(gamma_hat) > cut))
        })

    joint = None
    if joint_support:
        joint = set.intersection(*supports)
    reports = []
    for s in range(n_layers):
        keep = joint if joint is not None else supports[s]
        mask = np.zeros((n, n), dtype=bool)
        for i, j in keep:
            mask[i, j] = True
        w_hat = np.where(mask, gamma_hats[s] / lambdas[s][:, None], 0.0)
        w_hat = np.clip(w_hat, 0.0, None)
        sums = w_hat.sum(axis=1)
        renorm = float(np.max(np.abs(sums - 1.0))) if np.all(sums > 0) else float("nan")
        w_hat = np.divide(w_hat, sums[:, None], out=w_hat, where=sums[:, None] > 0)
        reports.append(
            EstimationReport(
                w_hat=w_hat,
                lambda_hat=lambdas[s],
                gamma_hat=gamma_hats[s],
                support=tuple(sorted(keep)),
                metrics={
                    "shrinkage_gamma": gammas_shrink[s],
                    "t_effective": t_effs[s],
                    "max_row_renormalization": renorm,
                },
                solver_log=infos[s],
            )
        )
    return MultiplexEstimate(
        reports=tuple(reports),
        joint_support=tuple(sorted(joint)) if joint is not None else None,
    )


def _layer_anchors(u, n: int, n_layers: int) -> list[np.ndarray]:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        if u.shape[0] != n:
            raise StructuralError("anchor length does not match the agent count")
        return [u] * n_layers
    if u.ndim == 2 and u.shape == (n_layers, n):
        return list(u)
    raise StructuralError(f"u must be ({n},) or ({n_layers}, {n})")


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, set):
        return [_jsonable(v) for v in sorted(value)]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def save_report(report: EstimationReport, path) -> None:
    """Serialize an estimation report to a JSON document."""
    import json

    doc = {
        "w_hat": report.w_hat.tolist(),
        "lambda_hat": None if report.lambda_hat is None else report.lambda_hat.tolist(),
        "gamma_hat": None if report.gamma_hat is None else report.gamma_hat.tolist(),
        "support": [[int(i), int(j)] for i, j in report.support],
        "metrics": _jsonable(report.metrics),
        "solver_log": _jsonable(report.solver_log),
    }
    with open(path, "w") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_report(path) -> EstimationReport:
    import json

    with open(path) as handle:
        doc = json.load(handle)
    expected = {"w_hat", "lambda_hat", "gamma_hat", "support", "metrics", "solver_log"}
    if set(doc) != expected:
        raise ConfigError(
            f"report document has keys {sorted(doc)}, expected {sorted(expected)}"
        )
    return EstimationReport(
        w_hat=np.asarray(doc["w_hat"], dtype=float),
        lambda_hat=None
        if doc["lambda_hat"] is None
        else np.asarray(doc["lambda_hat"], dtype=float),
        gamma_hat=None
        if doc["gamma_hat"] is None
        else np.asarray(doc["gamma_hat"], dtype=float),
        support=tuple((int(i), int(j)) for i, j in doc["support"]),
        metrics=doc["metrics"],
        solver_log=doc["solver_log"],
    )


def evaluate_estimate(w_true: np.ndarray, estimate, tol: float = 1e-8) -> EvalMetrics:
    """Support precision/recall/F1 and weight errors of an estimate.

    estimate may be an EstimationReport (its stored support is used) or a
    plain matrix (support thresholded at tol). True edges are entries of
    w_true above the structural-zero tolerance.
    """
    w_true = np.atleast_2d(np.asarray(w_true, dtype=float))
    if isinstance(estimate, EstimationReport):
        w_hat = estimate.w_hat
        predicted = set(estimate.support)
    else:
        w_hat = np.atleast_2d(np.asarray(estimate, dtype=float))
        predicted = set(_support_of(w_hat, tol))
    if w_hat.shape != w_true.shape:
        raise StructuralError("estimate and truth shapes differ")
    actual = set(_support_of(w_true, STRUCTURAL_ZERO))
    tp = len(predicted & actual)
    precision = tp / len(predicted) if predicted else (1.0 if not actual else 0.0)
    recall = tp / len(actual) if actual else 1.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0.0
        else 0.0
    )
    return EvalMetrics(
        precision=float(precision),
        recall=float(recall),
        f1=float(f1),
        frobenius_error=float(np.linalg.norm(w_true - w_hat)),
        max_abs_error=float(np.max(np.abs(w_true - w_hat))),
    )
