"""Shared numerical kernels: weighted l1 programs, pseudoinverse policy,
spark / nullspace-property diagnostics, and spectral radius.

The l1 programs are solved exactly as linear programs (split-variable
formulation) with scipy's HiGHS backend, which is deterministic for fixed
inputs. Combinatorial diagnostics (spark, nullspace property) are exhaustive
and therefore capped at small dimensions; they exist to certify test
instances, not to scale.
"""

from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np
from scipy.optimize import linprog

from .errors import CapacityError, NumericalError, ParameterError

# Entries smaller than this are structural zeros throughout the package.
STRUCTURAL_ZERO = 1e-12

# Relative singular-value cutoff for pseudoinverse and rank decisions.
PINV_RCOND = 1e-10

_LINPROG_STATUS = {
    0: "optimal",
    1: "iteration_limit",
    2: "infeasible",
    3: "unbounded",
    4: "numerical",
}


def philox_stream(seed: int | None, *spawn_key: int) -> np.random.Generator:
    """Counter-based random stream; distinct spawn keys give independent
    child streams, so parallel draws stay reproducible."""
    ss = np.random.SeedSequence(seed, spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class L1Problem:
    """Weighted l1 minimization over an affine set.

    minimize    sum_i weights_i * |x_i|
    subject to  phi @ x == psi
                sum(x) == sum_to        (when sum_to is not None)
                x >= 0                  (when nonneg)
                lo_i <= x_i <= hi_i     (optional per-coordinate bounds;
                                         NaN entries mean unbounded)

    weights defaults to all ones; a zero weight exempts that coordinate
    from the objective (used for diagonal/auxiliary coordinates).
    """

    phi: np.ndarray
    psi: np.ndarray
    sum_to: float | None = None
    nonneg: bool = False
    weights: np.ndarray | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    objective: float
    residual: float
    status: str
    solver_log: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def solve_l1(problem: L1Problem) -> SolveResult:
    """Solve an L1Problem to global optimality.

    Returns a SolveResult whose status is "optimal" on success; infeasible
    or pathological programs are reported through status, never silently.
    Ties between optimal vertices are broken by the deterministic HiGHS
    vertex choice, recorded in solver_log.
    """
    phi = np.atleast_2d(np.asarray(problem.phi, dtype=float))
    psi = np.asarray(problem.psi, dtype=float).ravel()
    m, n = phi.shape
    if psi.shape[0] != m:
        raise ParameterError(f"phi has {m} rows but psi has {psi.shape[0]} entries")
    weights = (
        np.ones(n) if problem.weights is None else np.asarray(problem.weights, float)
    )
    if weights.shape[0] != n or (weights < 0).any():
        raise ParameterError("weights must be a nonnegative length-n vector")

    # x = u - v with u, v >= 0; |x_i| <= u_i + v_i with equality at optimum
    # for every positively weighted coordinate.
    c = np.concatenate([weights, weights])
    a_eq = [np.hstack([phi, -phi])]
    b_eq = [psi]
    if problem.sum_to is not None:
        row = np.concatenate([np.ones(n), -np.ones(n)])
        a_eq.append(row[None, :])
        b_eq.append(np.array([float(problem.sum_to)]))
    a_eq = np.vstack(a_eq)
    b_eq = np.concatenate(b_eq)

    a_ub_rows, b_ub_vals = [], []
    for bound, sign in ((problem.hi, 1.0), (problem.lo, -1.0)):
        if bound is None:
            continue
        bound = np.asarray(bound, dtype=float)
        for i in range(n):
            if np.isnan(bound[i]):
                continue
            row = np.zeros(2 * n)
            row[i], row[n + i] = sign, -sign
            a_ub_rows.append(row)
            b_ub_vals.append(sign * bound[i])
    a_ub = np.vstack(a_ub_rows) if a_ub_rows else None
    b_ub = np.asarray(b_ub_vals) if a_ub_rows else None

    v_cap = (0.0, 0.0) if problem.nonneg else (0.0, None)
    bounds = [(0.0, None)] * n + [v_cap] * n
    res = linprog(
        c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs"
    )
    status = _LINPROG_STATUS.get(res.status, "numerical")
    x = np.zeros(n) if res.x is None else res.x[:n] - res.x[n:]
    objective = float(np.sum(weights * np.abs(x)))
    residual = float(np.max(np.abs(phi @ x - psi))) if res.x is not None else np.inf
    log = {
        "method": "highs",
        "tie_break": "solver-vertex",
        "iterations": int(getattr(res, "nit", -1)),
        "message": str(res.message),
    }
    return SolveResult(x=x, objective=objective, residual=residual, status=status, solver_log=log)


def pseudoinverse(matrix: np.ndarray, rcond: float = PINV_RCOND) -> np.ndarray:
    """Moore-Penrose pseudoinverse with singular values below
    rcond * sigma_max treated as zero."""
    return np.linalg.pinv(np.asarray(matrix, dtype=float), rcond=rcond)


def spark(phi: np.ndarray, tol: float | None = None) -> int:
    """Smallest number of linearly dependent columns of phi.

    Exhaustive over column subsets; capped at 20 columns. A matrix with
    full column rank has spark n + 1 by convention.
    """
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    m, n = phi.shape
    if n > 20:
        raise CapacityError(f"spark is exhaustive; {n} columns exceeds the cap of 20")
    for k in range(1, min(m + 1, n) + 1):
        for cols in combinations(range(n), k):
            if np.linalg.matrix_rank(phi[:, cols], tol=tol) < k:
                return k
    return n + 1


@dataclass(frozen=True)
class RecoveryDiagnostics:
    """Conditions under which s-sparse vectors are recoverable from phi."""

    m: int
    n: int
    s: int
    spark: int
    spark_ok: bool
    nsp_ok: bool
    rec_delta: float
    sample_bound: float


def _nsp_violated_on(phi: np.ndarray, support: tuple[int, ...]) -> bool:
    """True iff ker(phi) contains eta != 0 with ||eta_Sc||_1 <= ||eta_S||_1."""
    m, n = phi.shape
    comp = [j for j in range(n) if j not in support]
    s = len(support)
    # Variables: eta (n), then t_j >= |eta_j| for j in the complement.
    n_var = n + len(comp)
    for signs in product((1.0, -1.0), repeat=s):
        c = np.zeros(n_var)
        c[n:] = 1.0
        a_eq = np.zeros((m + 1, n_var))
        a_eq[:m, :n] = phi
        for idx, j in enumerate(support):
            a_eq[m, j] = signs[idx]
        b_eq = np.zeros(m + 1)
        b_eq[m] = 1.0
        a_ub = np.zeros((2 * len(comp), n_var))
        for r, j in enumerate(comp):
            a_ub[2 * r, j], a_ub[2 * r, n + r] = 1.0, -1.0
            a_ub[2 * r + 1, j], a_ub[2 * r + 1, n + r] = -1.0, -1.0
        bounds = [(None, None)] * n + [(0.0, None)] * len(comp)
        res = linprog(
            c,
            A_ub=a_ub,
            b_ub=np.zeros(2 * len(comp)),
            A_eq=a_eq,
            b_eq=b_eq,
            bounds=bounds,
            method="highs",
        )
        if res.status == 0 and res.fun <= 1.0 + 1e-9:
            return True
    return False


def check_recovery_conditions(
    phi: np.ndarray, s: int, c: float = 1.0, delta: float | None = None
) -> RecoveryDiagnostics:
    """Exhaustive sparse-recovery certificates for a measurement matrix.

    spark_ok certifies uniqueness of every s-sparse solution (spark > 2s);
    nsp_ok certifies that l1 minimization recovers every s-sparse vector
    (no nonzero kernel element concentrates half its l1 mass on s
    coordinates); rec_delta is the smallest restricted singular value over
    size-s supports, scaled by 1/sqrt(m); sample_bound reports the
    m >= (c*s/delta^2) * log(n/(delta*s)) requirement with the supplied
    constant, for reporting only.
    """
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    m, n = phi.shape
    if n > 20:
        raise CapacityError(f"{n} columns exceeds the exhaustive cap of 20")
    if not 1 <= s <= n // 2:
        raise CapacityError(f"sparsity order s={s} must lie in [1, n/2] for n={n}")

    spark_value = spark(phi)
    spark_ok = spark_value > 2 * s

    # A violation on S' subset of S is a violation on S, so checking
    # supports of size exactly s covers every order <= s.
    nsp_ok = True
    rec_delta = np.inf
    for support in combinations(range(n), s):
        sub = phi[:, support]
        rec_delta = min(rec_delta, np.linalg.svd(sub, compute_uv=False)[-1] / np.sqrt(m))
        if nsp_ok and _nsp_violated_on(phi, support):
            nsp_ok = False
    rec_delta = float(rec_delta)

    delta_used = delta if delta is not None else min(max(rec_delta, 1e-6), 0.999)
    sample_bound = float(c * s / delta_used**2 * np.log(n / (delta_used * s)))
    return RecoveryDiagnostics(
        m=m,
        n=n,
        s=s,
        spark=spark_value,
        spark_ok=spark_ok,
        nsp_ok=nsp_ok,
        rec_delta=rec_delta,
        sample_bound=sample_bound,
    )


def spectral_radius(matrix: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Spectral radius of a square matrix.

    Dense eigen-solve for n <= 200; beyond that, power iteration on the
    shifted absolute companion |M| + I (exact for nonnegative matrices, an
    upper bound otherwise).
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    n = matrix.shape[0]
    if matrix.shape[0] != matrix.shape[1]:
        raise ParameterError("spectral radius requires a square matrix")
    if n <= 200:
        return float(np.max(np.abs(np.linalg.eigvals(matrix))))

    companion = np.abs(matrix) + np.eye(n)
    x = np.full(n, 1.0 / n)
    lam_prev = np.inf
    for iteration in range(max_iter):
        y = companion @ x
        lam = float(np.max(y / x))
        x = y / np.sum(y)
        if abs(lam - lam_prev) < tol:
            return lam - 1.0
        lam_prev = lam
    raise NumericalError(
        f"power iteration did not converge within {max_iter} iterations"
    )
