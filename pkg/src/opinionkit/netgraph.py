"""Influence-network types, metrics, random generators, and file formats.

Conventions: opinions of agent i are driven by the entries of row i of the
influence matrix W, so edge (i, j) means "j influences i". W is
row-stochastic with nonnegative entries; entries with magnitude below
STRUCTURAL_ZERO are structural zeros. Each agent i carries a
susceptibility lambda_i in [0, 1] (lambda_i = 1 recovers pure averaging,
lambda_i = 0 a fully stubborn agent).
"""

import json
import warnings
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .errors import ConfigError, EstimationError, ParameterError, StructuralError
from .numkit import STRUCTURAL_ZERO, philox_stream

GENERATOR_MODELS = ("erdos_renyi", "watts_strogatz", "barabasi_albert")
MULTIPLEX_MODELS = ("common_component", "common_support", "independent")


@dataclass(frozen=True)
class InfluenceNetwork:
    """A weighted directed influence network with per-agent susceptibilities."""

    w: np.ndarray
    lam: np.ndarray
    directed: bool = True

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.w, dtype=float))
        lam = np.asarray(self.lam, dtype=float).ravel()
        if w.shape[0] != w.shape[1]:
            raise StructuralError(f"influence matrix must be square, got {w.shape}")
        if lam.shape[0] != w.shape[0]:
            raise StructuralError(
                f"{lam.shape[0]} susceptibilities for {w.shape[0]} agents"
            )
        w.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "lam", lam)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def edge_set(self) -> set[tuple[int, int]]:
        rows, cols = np.nonzero(np.abs(self.w) > STRUCTURAL_ZERO)
        return set(zip(rows.tolist(), cols.tolist()))


@dataclass(frozen=True)
class MultiplexNetwork:
    """A stack of influence layers over one agent set."""

    layers: tuple[InfluenceNetwork, ...]
    model_tag: str
    base: InfluenceNetwork | None = None

    def __post_init__(self):
        if not self.layers:
            raise StructuralError("a multiplex network needs at least one layer")
        n = self.layers[0].n
        if any(layer.n != n for layer in self.layers):
            raise StructuralError("all layers must share the agent set")
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def n(self) -> int:
        return self.layers[0].n

    @property
    def n_layers(self) -> int:
        return len(self.layers)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    problems: tuple[str, ...]


@dataclass(frozen=True)
class DensityReport:
    n_edges: int
    density: float
    sparse: bool | None


@dataclass(frozen=True)
class DegreeProfile:
    """Support-count and weight-mass degrees; d_max is the largest
    row-support size (the quantity entering sample-complexity bounds)."""

    in_degree: np.ndarray
    out_degree: np.ndarray
    weighted_in_degree: np.ndarray
    weighted_out_degree: np.ndarray
    d_max: int


@dataclass(frozen=True)
class PowerLawFit:
    gamma: float
    k_min: float
    n_tail: int


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters for one random network draw.

    model selects the topology family; p (erdos_renyi edge probability),
    k/beta_rw (watts_strogatz ring degree and rewiring probability), and
    m0 (barabasi_albert attachment count) apply to their model only.
    Susceptibilities are drawn uniformly from lambda_range.
    """

    model: str
    n: int
    p: float | None = None
    k: int | None = None
    beta_rw: float | None = None
    m0: int | None = None
    lambda_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.model not in GENERATOR_MODELS:
            raise ParameterError(f"unknown generator model {self.model!r}")
        if self.n < 2:
            raise ParameterError("generators need n >= 2")
        lo, hi = self.lambda_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ParameterError(f"lambda_range {self.lambda_range} not inside [0, 1]")
        if self.model == "erdos_renyi":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ParameterError("erdos_renyi needs p in [0, 1]")
        elif self.model == "watts_strogatz":
            if self.k is None or self.k < 2 or self.k >= self.n or self.k % 2:
                raise ParameterError("watts_strogatz needs even k with 2 <= k < n")
            if self.beta_rw is None or not 0.0 <= self.beta_rw <= 1.0:
                raise ParameterError("watts_strogatz needs beta_rw in [0, 1]")
        elif self.model == "barabasi_albert":
            if self.m0 is None or not 1 <= self.m0 < self.n:
                raise ParameterError("barabasi_albert needs 1 <= m0 < n")


@dataclass(frozen=True)
class MultiplexConfig:
    """Parameters for a multi-layer draw.

    common_component: every layer is the base raw weight matrix plus a
    sparse innovation (edge probability innovation_p, weights in
    (0, innovation_scale]), row-renormalized. common_support: layers share
    the base support and redraw weights. independent: fresh draw per layer.
    """

    model_tag: str
    base: GeneratorConfig
    n_layers: int
    innovation_p: float = 0.0
    innovation_scale: float = 0.5

    def __post_init__(self):
        if self.model_tag not in MULTIPLEX_MODELS:
            raise ParameterError(f"unknown multiplex model {self.model_tag!r}")
        if self.n_layers < 1:
            raise ParameterError("n_layers must be >= 1")
        if not 0.0 <= self.innovation_p <= 1.0:
            raise ParameterError("innovation_p must lie in [0, 1]")
        if self.innovation_scale <= 0.0:
            raise ParameterError("innovation_scale must be positive")


def validate_network(net: InfluenceNetwork, tol: float = 1e-9) -> ValidationReport:
    """Check row-stochasticity, weight range, and susceptibility range.

    Returns every violation found; an empty problem list means the network
    satisfies the model contract within tol.
    """
    problems: list[str] = []
    w, lam = net.w, net.lam
    if not np.all(np.isfinite(w)):
        problems.append("non-finite weight entries")
    if not np.all(np.isfinite(lam)):
        problems.append("non-finite susceptibility entries")
    if np.all(np.isfinite(w)):
        bad = np.argwhere((w < -tol) | (w > 1.0 + tol))
        problems.extend(
            f"w[{i},{j}]={w[i, j]:.6g} outside [0, 1]" for i, j in bad[:20]
        )
        if len(bad) > 20:
            problems.append(f"... {len(bad) - 20} more weight-range violations")
        sums = w.sum(axis=1)
        for i in np.flatnonzero(np.abs(sums - 1.0) > tol):
            problems.append(f"row {i} sums to {sums[i]:.12g}")
    if np.all(np.isfinite(lam)):
        for i in np.flatnonzero((lam < -tol) | (lam > 1.0 + tol)):
            problems.append(f"lambda[{i}]={lam[i]:.6g} outside [0, 1]")
    return ValidationReport(ok=not problems, problems=tuple(problems))


def network_density(net: InfluenceNetwork, alpha: float | None = None) -> DensityReport:
    """Edge count over n^2 (self-loops included). When alpha is given, the
    sparse flag reports whether |E| <= alpha * n."""
    n_edges = int(np.count_nonzero(np.abs(net.w) > STRUCTURAL_ZERO))
    density = n_edges / net.n**2
    sparse = None if alpha is None else bool(n_edges <= alpha * net.n)
    return DensityReport(n_edges=n_edges, density=density, sparse=sparse)


def degree_profile(net: InfluenceNetwork) -> DegreeProfile:
    support = np.abs(net.w) > STRUCTURAL_ZERO
    return DegreeProfile(
        in_degree=support.sum(axis=1),
        out_degree=support.sum(axis=0),
        weighted_in_degree=net.w.sum(axis=1),
        weighted_out_degree=net.w.sum(axis=0),
        d_max=int(support.sum(axis=1).max()),
    )


def laplacian(net: InfluenceNetwork) -> tuple[np.ndarray, np.ndarray]:
    """Degree matrix D = diag(row sums) and Laplacian L = D - W."""
    degree = np.diag(net.w.sum(axis=1))
    return degree, degree - net.w


def laplacian_quadratic(net: InfluenceNetwork, x: np.ndarray) -> float:
    """Disagreement energy (1/2) * sum_ij w_ij (x_i - x_j)^2.

    Defined for symmetric W, where it equals x' L x; directed inputs are
    accepted with the same double sum and flagged.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != net.n:
        raise StructuralError(f"profile length {x.shape[0]} != n = {net.n}")
    if not np.allclose(net.w, net.w.T, atol=STRUCTURAL_ZERO):
        warnings.warn(
            "laplacian_quadratic on an asymmetric matrix: value is the "
            "literal double sum, not a quadratic form of L",
            stacklevel=2,
        )
    diff = x[:, None] - x[None, :]
    return float(0.5 * np.sum(net.w * diff**2))


def _topology(config: GeneratorConfig, rng: np.random.Generator) -> np.ndarray:
    """Boolean adjacency (no self-loops) for the configured model."""
    n = config.n
    if config.model == "erdos_renyi":
        graph = nx.gnp_random_graph(n, config.p, seed=rng, directed=True)
    elif config.model == "watts_strogatz":
        graph = nx.watts_strogatz_graph(n, config.k, config.beta_rw, seed=rng)
    else:
        graph = nx.barabasi_albert_graph(n, config.m0, seed=rng)
    adj = np.zeros((n, n), dtype=bool)
    for u, v in graph.edges():
        adj[u, v] = True
        if not graph.is_directed():
            adj[v, u] = True
    np.fill_diagonal(adj, False)
    return adj


def _raw_weights(adj: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Positive raw weights on the support; empty rows get self-loop 1."""
    raw = np.zeros(adj.shape)
    raw[adj] = 1.0 - rng.random(int(adj.sum()))
    empty = raw.sum(axis=1) == 0.0
    raw[empty, np.flatnonzero(empty)] = 1.0
    return raw


def _row_normalize(raw: np.ndarray) -> np.ndarray:
    return raw / raw.sum(axis=1, keepdims=True)


def _draw_lambda(
    config: GeneratorConfig, rng: np.random.Generator, n: int
) -> np.ndarray:
    lo, hi = config.lambda_range
    return rng.uniform(lo, hi, size=n)


def generate_network(config: GeneratorConfig, seed: int | None = None) -> InfluenceNetwork:
    """Draw a row-stochastic influence network from the configured model.

    Bit-reproducible for fixed (config, seed). Agents left without
    out-edges by the topology draw anchor to themselves with a self-loop
    of weight 1.
    """
    rng = philox_stream(seed)
    adj = _topology(config, rng)
    raw = _raw_weights(adj, rng)
    lam = _draw_lambda(config, rng, config.n)
    return InfluenceNetwork(w=_row_normalize(raw), lam=lam, directed=True)


def fit_power_law(degrees: np.ndarray, k_min: float = 1.0) -> PowerLawFit:
    """Tail-exponent fit gamma = 1 + N / sum(log(k_i / (k_min - 1/2))).

    Uses the continuous maximum-likelihood estimator with the half-integer
    offset for integer-valued degrees, over the tail degrees >= k_min.
    """
    degrees = np.asarray(degrees, dtype=float).ravel()
    if k_min < 1.0:
        raise ParameterError("k_min must be >= 1")
    tail = degrees[degrees >= k_min]
    if tail.size < 10:
        raise EstimationError(
            f"only {tail.size} degrees >= k_min={k_min}; need at least 10"
        )
    if np.all(tail == tail[0]):
        raise EstimationError("degenerate degree sample: all tail degrees equal")
    gamma = 1.0 + tail.size / np.sum(np.log(tail / (k_min - 0.5)))
    return PowerLawFit(gamma=float(gamma), k_min=float(k_min), n_tail=int(tail.size))


def pair_d_correlation(mx: MultiplexNetwork, dims: tuple[int, int]) -> float:
    """Jaccard overlap |E_a & E_b| / |E_a | E_b| of two layers' edge sets."""
    a, b = dims
    edges_a = mx.layers[a].edge_set()
    edges_b = mx.layers[b].edge_set()
    union = edges_a | edges_b
    if not union:
        warnings.warn("both layers are empty; overlap reported as 0", stacklevel=2)
        return 0.0
    return len(edges_a & edges_b) / len(union)


def build_multiplex(config: MultiplexConfig, seed: int | None = None) -> MultiplexNetwork:
    """Draw a multi-layer network under the configured coupling model.

    Layer streams are spawned from the seed, so layers are independent
    and the draw is reproducible regardless of evaluation order.
    """
    base_rng = philox_stream(seed, 0)
    adj = _topology(config.base, base_rng)
    base_raw = _raw_weights(adj, base_rng)
    base_net = InfluenceNetwork(
        w=_row_normalize(base_raw),
        lam=_draw_lambda(config.base, base_rng, config.base.n),
        directed=True,
    )

    layers = []
    for layer_idx in range(config.n_layers):
        rng = philox_stream(seed, 1, layer_idx)
        if config.model_tag == "independent":
            layer_adj = _topology(config.base, rng)
            raw = _raw_weights(layer_adj, rng)
        elif config.model_tag == "common_support":
            raw = _raw_weights(adj, rng)
        else:  # common_component
            innovation = np.zeros_like(base_raw)
            if config.innovation_p > 0.0:
                extra = rng.random(base_raw.shape) < config.innovation_p
                np.fill_diagonal(extra, False)
                innovation[extra] = config.innovation_scale * (
                    1.0 - rng.random(int(extra.sum()))
                )
            raw = base_raw + innovation
        layers.append(
            InfluenceNetwork(
                w=_row_normalize(raw),
                lam=_draw_lambda(config.base, rng, config.base.n),
                directed=True,
            )
        )
    base = base_net if config.model_tag != "independent" else None
    return MultiplexNetwork(layers=tuple(layers), model_tag=config.model_tag, base=base)


# ---- file format ----------------------------------------------------------
#
# Networks are stored as a single JSON object:
#   {"n": 3, "directed": true, "lambda": [...], "edges": [[i, j, w], ...]}
# with 0-based indices, edges sorted by (i, j), and weights printed with 17
# significant digits so that load(save(net)) is bit-exact.

_NETWORK_KEYS = {"n", "directed", "lambda", "edges"}
_MULTIPLEX_KEYS = {"model_tag", "base", "layers"}


def _f17(x: float) -> str:
    return format(float(x), ".17g")


def _network_doc(net: InfluenceNetwork) -> str:
    lam = ", ".join(_f17(v) for v in net.lam)
    rows, cols = np.nonzero(np.abs(net.w) > STRUCTURAL_ZERO)
    order = np.lexsort((cols, rows))
    edges = ", ".join(
        f"[{rows[k]}, {cols[k]}, {_f17(net.w[rows[k], cols[k]])}]" for k in order
    )
    directed = "true" if net.directed else "false"
    return (
        f'{{"n": {net.n}, "directed": {directed}, '
        f'"lambda": [{lam}], "edges": [{edges}]}}'
    )


def _network_from_doc(doc: dict) -> InfluenceNetwork:
    unknown = set(doc) - _NETWORK_KEYS
    if unknown:
        raise ConfigError(f"unknown network file keys: {sorted(unknown)}")
    missing = _NETWORK_KEYS - set(doc)
    if missing:
        raise ConfigError(f"network file missing keys: {sorted(missing)}")
    n = int(doc["n"])
    w = np.zeros((n, n))
    for entry in doc["edges"]:
        i, j, weight = int(entry[0]), int(entry[1]), float(entry[2])
        if not (0 <= i < n and 0 <= j < n):
            raise ConfigError(f"edge ({i}, {j}) outside agent range 0..{n - 1}")
        w[i, j] = weight
    return InfluenceNetwork(
        w=w, lam=np.asarray(doc["lambda"], dtype=float), directed=bool(doc["directed"])
    )


def save_network(net: InfluenceNetwork, path) -> None:
    with open(path, "w") as fh:
        fh.write(_network_doc(net) + "\n")


def load_network(path) -> InfluenceNetwork:
    with open(path) as fh:
        return _network_from_doc(json.load(fh))


def save_multiplex(mx: MultiplexNetwork, path) -> None:
    base = _network_doc(mx.base) if mx.base is not None else "null"
    layers = ", ".join(_network_doc(layer) for layer in mx.layers)
    with open(path, "w") as fh:
        fh.write(
            f'{{"model_tag": "{mx.model_tag}", "base": {base}, '
            f'"layers": [{layers}]}}\n'
        )


def load_multiplex(path) -> MultiplexNetwork:
    with open(path) as fh:
        doc = json.load(fh)
    unknown = set(doc) - _MULTIPLEX_KEYS
    if unknown:
        raise ConfigError(f"unknown multiplex file keys: {sorted(unknown)}")
    base = _network_from_doc(doc["base"]) if doc.get("base") is not None else None
    layers = tuple(_network_from_doc(entry) for entry in doc["layers"])
    return MultiplexNetwork(layers=layers, model_tag=doc["model_tag"], base=base)
