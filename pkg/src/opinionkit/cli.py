"""Command-line pipeline driver.

Binds the library into reproducible generate -> simulate -> observe ->
identify -> evaluate -> report experiments. A pipeline is one JSON
document with a seed and an ordered stage list; stages reference earlier
stages by name, every artifact lands in one output directory, and a
manifest records the config hash, the seed, dependency versions, and a
digest per artifact. Reruns of the same config are byte-identical.

Exit codes: 1 configuration or usage, 2 identifiability, 3 numerical or
stability, 4 capacity.
"""

import copy
import hashlib
import itertools
import json
import re
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import networkx
import numpy as np
import platform
import scipy

from ._version import __version__
from .errors import ConfigError, OpinionKitError
from .centrality import (
    betweenness_centrality,
    closeness_centrality,
    degree_centrality,
    eigenvector_centrality,
    friedkin_centrality,
    pagerank,
)
from .dynamics import (
    ModelDescriptor,
    OpinionTrajectory,
    fj_equilibrium,
    load_trajectory,
    save_trajectory,
    simulate_fj,
    simulate_gossip_fj,
)
from .identify import (
    EstimationReport,
    check_lambda_identifiability,
    estimate_cross_correlations,
    estimate_gamma,
    evaluate_estimate,
    identify_finite_horizon,
    identify_infinite_horizon,
    identify_unknown_lambda,
    load_report,
    recover_topology_and_w,
    save_report,
)
from .netgraph import (
    GENERATOR_MODELS,
    GeneratorConfig,
    InfluenceNetwork,
    generate_network,
    load_network,
    save_network,
)
from .observe import (
    SAMPLING_KINDS,
    ObservationStream,
    SamplingModel,
    load_stream,
    sample_observations,
    save_stream,
)

_NAME_RE = re.compile(r"[A-Za-z0-9_\-]+\Z")

CENTRALITY_MEASURES = (
    "in_degree",
    "out_degree",
    "closeness",
    "betweenness",
    "eigenvector",
    "pagerank",
    "friedkin",
)

IDENTIFY_METHODS = (
    "finite_horizon",
    "infinite_horizon",
    "unknown_lambda",
    "yule_walker",
)


def _version_table() -> dict:
    from importlib.metadata import version

    return {
        "click": version("click"),
        "networkx": networkx.__version__,
        "numpy": np.__version__,
        "opinionkit": __version__,
        "python": platform.python_version(),
        "scipy": scipy.__version__,
    }


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _check_keys(record: dict, required: set, optional: set, where: str) -> None:
    keys = set(record)
    missing = required - keys
    unknown = keys - required - optional
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _stage_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0])


def _load_config(path) -> dict:
    try:
        with open(path) as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def _write_json(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# pipeline stages


def _ref(objects: dict, name, expected, where: str):
    if not isinstance(name, str) or name not in objects:
        raise ConfigError(
            f"{where}: references stage {name!r}, which does not exist yet "
            "(stages may only reference earlier stages)"
        )
    value = objects[name]
    if not isinstance(value, expected):
        raise ConfigError(
            f"{where}: stage {name!r} holds {type(value).__name__}, "
            f"not {expected.__name__}"
        )
    return value


def _resolve_x0(spec, n: int, issues: int, stage_seed: int) -> np.ndarray:
    if spec == "spread":
        if issues != 1:
            raise ConfigError("x0 'spread' is single-issue; use 'random' or a matrix")
        return np.linspace(0.0, 1.0, n)
    if spec == "random":
        from .numkit import philox_stream

        return philox_stream(stage_seed, 101).random((n, issues))
    x0 = np.asarray(spec, dtype=float)
    if x0.ndim == 1 and x0.shape[0] == n:
        return x0
    if x0.ndim == 2 and x0.shape[0] == n:
        return x0
    raise ConfigError(f"x0 must be 'spread', 'random', or {n} rows of values")


def _stage_generate(record, where, stage_seed, objects, out, emit, artifacts):
    _check_keys(
        record,
        {"stage", "name", "model", "n"},
        {"p", "k", "beta_rw", "m0", "lambda_range"},
        where,
    )
    lambda_range = tuple(record.get("lambda_range", (0.0, 1.0)))
    config = GeneratorConfig(
        model=record["model"],
        n=record["n"],
        p=record.get("p"),
        k=record.get("k"),
        beta_rw=record.get("beta_rw"),
        m0=record.get("m0"),
        lambda_range=lambda_range,
    )
    net = generate_network(config, seed=stage_seed)
    objects[record["name"]] = net
    rel = f"{record['name']}.json"
    save_network(net, out / rel)
    artifacts.append(rel)


def _stage_load(record, where, stage_seed, objects, out, emit, artifacts):
    _check_keys(record, {"stage", "name", "path", "format"}, set(), where)
    path = Path(record["path"])
    if not path.is_file():
        raise ConfigError(f"{where}: input file {path} does not exist")
    kind = record["format"]
    if kind == "network":
        objects[record["name"]] = load_network(path)
    elif kind == "trajectory":
        _, states = load_trajectory(path)
        objects[record["name"]] = OpinionTrajectory(
            states=states, model=ModelDescriptor(kind="loaded", params={"path": str(path)})
        )
    elif kind == "stream":
        objects[record["name"]] = load_stream(path)
    else:
        raise ConfigError(f"{where}: unknown format {kind!r}")


def _stage_simulate(record, where, stage_seed, objects, out, emit, artifacts):
    _check_keys(
        record,
        {"stage", "name", "network", "kind", "steps"},
        {"x0", "issues", "activation_size", "stride"},
        where,
    )
    net = _ref(objects, record["network"], InfluenceNetwork, where)
    x0 = _resolve_x0(
        record.get("x0", "spread"), net.n, record.get("issues", 1), stage_seed
    )
    kind = record["kind"]
    if kind == "fj":
        traj = simulate_fj(net, x0, record["steps"])
    elif kind == "gossip":
        if "activation_size" not in record:
            raise ConfigError(f"{where}: gossip needs activation_size")
        traj = simulate_gossip_fj(
            net, x0, record["steps"], record["activation_size"], seed=stage_seed
        )
    else:
        raise ConfigError(f"{where}: unknown dynamics kind {kind!r}")
    objects[record["name"]] = traj
    if emit["trajectories"]:
        rel = f"{record['name']}.csv"
        save_trajectory(traj, out / rel, stride=record.get("stride", 1))
        artifacts.append(rel)


def _stage_observe(record, where, stage_seed, objects, out, emit, artifacts):
    _check_keys(
        record, {"stage", "name", "trajectory", "kind"}, {"rho", "issue"}, where
    )
    traj = _ref(objects, record["trajectory"], OpinionTrajectory, where)
    rho = record.get("rho")
    if isinstance(rho, list):
        rho = np.asarray(rho, dtype=float)
    model = SamplingModel(kind=record["kind"], rho=rho)
    stream = sample_observations(
        traj, model, seed=stage_seed, issue=record.get("issue", 0)
    )
    objects[record["name"]] = stream
    if emit["trajectories"]:
        rel = f"{record['name']}.csv"
        save_stream(stream, out / rel)
        artifacts.append(rel)
        artifacts.append(rel + ".meta.json")


def _stage_identify(record, where, stage_seed, objects, out, emit, artifacts):
    _check_keys(
        record,
        {"stage", "name", "method"},
        {
            "trajectory",
            "network",
            "stream",
            "x0",
            "issues",
            "eps",
            "nonneg",
            "beta",
            "mode",
            "eta",
            "max_lag",
            "n_sigma",
            "threshold",
            "x0_from",
        },
        where,
    )
    method = record["method"]
    if method == "finite_horizon":
        traj = _ref(objects, record.get("trajectory"), OpinionTrajectory, where)
        lam = None
        if "network" in record:
            lam = _ref(objects, record["network"], InfluenceNetwork, where).lam
        report = identify_finite_horizon(traj, eps=record.get("eps", 0.0), lam=lam)
    elif method in ("infinite_horizon", "unknown_lambda"):
        net = _ref(objects, record.get("network"), InfluenceNetwork, where)
        if method == "infinite_horizon":
            check_lambda_identifiability(net.lam)
        issues = record.get("issues", net.n)
        x0 = _resolve_x0(record.get("x0", "random"), net.n, issues, stage_seed)
        x_inf, _ = fj_equilibrium(net, x0)
        if method == "infinite_horizon":
            report = identify_infinite_horizon(
                x0, x_inf, net.lam, nonneg=record.get("nonneg", False)
            )
        else:
            report = identify_unknown_lambda(
                x0, x_inf, nonneg=record.get("nonneg", False)
            )
    elif method == "yule_walker":
        stream = _ref(objects, record.get("stream"), ObservationStream, where)
        net = _ref(objects, record.get("network"), InfluenceNetwork, where)
        if "beta" not in record or "x0_from" not in record:
            raise ConfigError(f"{where}: yule_walker needs beta and x0_from")
        source = _ref(objects, record["x0_from"], OpinionTrajectory, where)
        x0 = source.states[0, :, stream.issue]
        beta = record["beta"]
        moments = estimate_cross_correlations(
            stream,
            max_lag=record.get("max_lag", 5),
            n_sigma=record.get("n_sigma", 5),
        )
        b_bar = beta * (1.0 - net.lam) * x0
        gamma_hat, info = estimate_gamma(
            moments, b_bar, mode=record.get("mode", "dense"), eta=record.get("eta", 0.0)
        )
        report = recover_topology_and_w(
            gamma_hat, net.lam, beta, threshold=record.get("threshold")
        )
        report = EstimationReport(
            w_hat=report.w_hat,
            lambda_hat=report.lambda_hat,
            gamma_hat=report.gamma_hat,
            support=report.support,
            metrics=report.metrics,
            solver_log={**report.solver_log, **info},
        )
    else:
        raise ConfigError(f"{where}: unknown identify method {method!r}")
    objects[record["name"]] = report
    if emit["reports"]:
        rel = f"{record['name']}.json"
        save_report(report, out / rel)
        artifacts.append(rel)


def _stage_centrality(record, where, stage_seed, objects, out, emit, artifacts):
    _check_keys(
        record,
        {"stage", "name", "network", "measure"},
        {"weighted", "alpha", "damping"},
        where,
    )
    net = _ref(objects, record["network"], InfluenceNetwork, where)
    values = _centrality_values(
        net,
        record["measure"],
        weighted=record.get("weighted", False),
        alpha=record.get("alpha"),
        damping=record.get("damping", 0.15),
    )
    objects[record["name"]] = values
    if emit["reports"]:
        rel = f"{record['name']}.csv"
        _write_centrality_csv(values, out / rel)
        artifacts.append(rel)


def _stage_evaluate(record, where, stage_seed, objects, out, emit, artifacts):
    _check_keys(record, {"stage", "name", "estimate", "truth"}, {"tol"}, where)
    report = _ref(objects, record["estimate"], EstimationReport, where)
    truth = _ref(objects, record["truth"], InfluenceNetwork, where)
    metrics = evaluate_estimate(truth.w, report, tol=record.get("tol", 1e-8))
    doc = {
        "f1": metrics.f1,
        "frobenius_error": metrics.frobenius_error,
        "max_abs_error": metrics.max_abs_error,
        "precision": metrics.precision,
        "recall": metrics.recall,
    }
    objects[record["name"]] = doc
    if emit["reports"]:
        rel = f"{record['name']}.json"
        _write_json(doc, out / rel)
        artifacts.append(rel)


def _stage_report(record, where, stage_seed, objects, out, emit, artifacts):
    _check_keys(record, {"stage", "name", "inputs"}, set(), where)
    inputs = record["inputs"]
    if not isinstance(inputs, list) or not inputs:
        raise ConfigError(f"{where}: inputs must be a non-empty list of stage names")
    rows = []
    for name in inputs:
        value = _ref(objects, name, object, where)
        rows.extend(_plot_rows(name, value, where))
    rows.sort(key=lambda row: (row[2], str(row[0])))
    if emit["plot_data"]:
        rel = f"{record['name']}.csv"
        with open(out / rel, "w") as handle:
            handle.write("x,y,series\n")
            for x, y, series in rows:
                handle.write(f"{x},{format(float(y), '.17g')},{series}\n")
        artifacts.append(rel)
    objects[record["name"]] = rows


def _plot_rows(name: str, value, where: str) -> list:
    from .centrality import CentralityVector

    if isinstance(value, dict):
        return [(key, value[key], name) for key in sorted(value)]
    if isinstance(value, CentralityVector):
        return [(i, v, name) for i, v in enumerate(value.values)]
    raise ConfigError(
        f"{where}: stage {name!r} holds {type(value).__name__}, which has no "
        "plottable rows (use evaluate or centrality outputs)"
    )


_STAGES = {
    "generate": _stage_generate,
    "load": _stage_load,
    "simulate": _stage_simulate,
    "observe": _stage_observe,
    "identify": _stage_identify,
    "centrality": _stage_centrality,
    "evaluate": _stage_evaluate,
    "report": _stage_report,
}

_EMIT_DEFAULTS = {"reports": True, "trajectories": True, "plot_data": True}


def run_pipeline(config: dict, output_dir=None) -> dict:
    """Execute the stages of one experiment config and write a manifest.

    Returns the manifest document. Stage failures abort with the failing
    stage named; artifacts written before the failure stay on disk.
    """
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(config, {"seed", "stages"}, {"output_dir", "emit"}, "config")
    seed = config["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    stages = config["stages"]
    if not isinstance(stages, list) or not stages:
        raise ConfigError("stages must be a non-empty list")
    emit = dict(_EMIT_DEFAULTS)
    emit_spec = config.get("emit", {})
    _check_keys(emit_spec, set(), set(_EMIT_DEFAULTS), "emit")
    for key, value in emit_spec.items():
        if not isinstance(value, bool):
            raise ConfigError(f"emit.{key} must be boolean")
        emit[key] = value
    target = output_dir or config.get("output_dir")
    if target is None:
        raise ConfigError("no output directory: set output_dir or pass one")
    out = Path(target)
    out.mkdir(parents=True, exist_ok=True)

    objects: dict = {}
    artifacts: list = []
    seen = set()
    for index, record in enumerate(stages):
        if not isinstance(record, dict):
            raise ConfigError(f"stage {index} is not an object")
        kind = record.get("stage")
        if kind not in _STAGES:
            raise ConfigError(
                f"stage {index}: unknown stage kind {kind!r}; "
                f"choose from {sorted(_STAGES)}"
            )
        name = record.get("name")
        if not isinstance(name, str) or not _NAME_RE.match(name):
            raise ConfigError(f"stage {index}: name must match [A-Za-z0-9_-]+")
        if name in seen:
            raise ConfigError(f"stage {index}: duplicate name {name!r}")
        seen.add(name)
        where = f"stage {name!r} ({kind})"
        try:
            _STAGES[kind](
                record, where, _stage_seed(seed, index), objects, out, emit, artifacts
            )
        except OpinionKitError as exc:
            if str(exc).startswith(where):
                raise
            raise type(exc)(f"{where}: {exc}") from exc

    manifest = {
        "artifacts": {rel: _sha256(out / rel) for rel in sorted(artifacts)},
        "config_sha256": _config_hash(config),
        "seed": seed,
        "versions": _version_table(),
    }
    _write_json(manifest, out / "manifest.json")
    return manifest


# sweeps


def _set_path(config, path: str, value) -> None:
    tokens = path.split(".")
    node = config
    try:
        for token in tokens[:-1]:
            node = node[int(token)] if isinstance(node, list) else node[token]
        last = tokens[-1]
        if isinstance(node, list):
            node[int(last)] = value
        elif isinstance(node, dict):
            node[last] = value
        else:
            raise TypeError(type(node).__name__)
    except (KeyError, IndexError, ValueError, TypeError) as exc:
        raise ConfigError(f"grid path {path!r} does not resolve: {exc}") from exc


def _sweep_point(payload):
    index, config, point_dir = payload
    run_pipeline(config, output_dir=point_dir)
    metrics = {}
    for record in config["stages"]:
        if isinstance(record, dict) and record.get("stage") == "evaluate":
            artifact = Path(point_dir) / f"{record['name']}.json"
            if artifact.is_file():
                metrics[record["name"]] = json.loads(artifact.read_text())
    return index, metrics


def run_sweep(config: dict, output_dir=None, jobs: int = 1) -> dict:
    """Run the cartesian grid of a sweep config; aggregate the metrics.

    Axes are ordered by sorted path name; each point gets an independent
    derived seed and its own point_NNNN directory, and the aggregation
    rows come out sorted by grid coordinates regardless of worker order.
    """
    if not isinstance(config, dict):
        raise ConfigError("sweep config must be a JSON object")
    _check_keys(config, {"base", "grid", "seed"}, {"output_dir"}, "sweep config")
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    base = config["base"]
    grid = config["grid"]
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("grid must map parameter paths to value lists")
    for path, values in grid.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"grid {path!r} must list at least one value")
    target = output_dir or config.get("output_dir")
    if target is None:
        raise ConfigError("no output directory: set output_dir or pass one")
    out = Path(target)
    out.mkdir(parents=True, exist_ok=True)

    axes = [(path, list(grid[path])) for path in sorted(grid)]
    payloads = []
    coordinates = []
    for index, combo in enumerate(itertools.product(*(values for _, values in axes))):
        point = copy.deepcopy(base)
        for (path, _), value in zip(axes, combo):
            _set_path(point, path, value)
        point["seed"] = _stage_seed(config["seed"], index)
        point.pop("output_dir", None)
        payloads.append((index, point, str(out / f"point_{index:04d}")))
        coordinates.append(combo)

    if jobs == 1:
        results = [_sweep_point(payload) for payload in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, payloads))
    results.sort(key=lambda item: item[0])

    metric_columns = sorted(
        {
            f"{stage}.{key}"
            for _, metrics in results
            for stage, doc in metrics.items()
            for key in doc
        }
    )
    rel = "sweep.csv"
    with open(out / rel, "w") as handle:
        header = ["point"] + [path for path, _ in axes] + metric_columns
        handle.write(",".join(header) + "\n")
        for index, metrics in results:
            row = [str(index)]
            for value in coordinates[index]:
                row.append(
                    format(value, ".17g") if isinstance(value, float) else str(value)
                )
            flat = {
                f"{stage}.{key}": doc[key]
                for stage, doc in metrics.items()
                for key in doc
            }
            for column in metric_columns:
                value = flat.get(column)
                row.append("" if value is None else format(float(value), ".17g"))
            handle.write(",".join(row) + "\n")

    files = sorted(
        p.relative_to(out).as_posix()
        for p in out.rglob("*")
        if p.is_file() and p.relative_to(out).as_posix() != "manifest.json"
    )
    manifest = {
        "artifacts": {rel_path: _sha256(out / rel_path) for rel_path in files},
        "config_sha256": _config_hash(config),
        "points": len(payloads),
        "seed": config["seed"],
        "versions": _version_table(),
    }
    _write_json(manifest, out / "manifest.json")
    return manifest


# centrality helpers shared by the stage executor and the subcommand


def _centrality_values(net, measure, weighted=False, alpha=None, damping=0.15):
    if measure == "in_degree":
        return degree_centrality(net, direction="in", weighted=weighted)
    if measure == "out_degree":
        return degree_centrality(net, direction="out", weighted=weighted)
    if measure == "closeness":
        return closeness_centrality(net, weighted=weighted)
    if measure == "betweenness":
        return betweenness_centrality(net, weighted=weighted)
    if measure == "eigenvector":
        return eigenvector_centrality(net.w)
    if measure == "pagerank":
        return pagerank(net.w, m=damping, row_stochastic=True)
    if measure == "friedkin":
        return friedkin_centrality(net, alpha=alpha)
    raise ConfigError(f"unknown centrality measure {measure!r}")


def _write_centrality_csv(values, path) -> None:
    with open(path, "w") as handle:
        handle.write("agent,value\n")
        for agent, value in enumerate(values.values):
            handle.write(f"{agent},{format(float(value), '.17g')}\n")


# command definitions


def _print_versions(ctx, param, value):
    if not value or ctx.resilient_parsing:
        return
    click.echo(json.dumps(_version_table(), indent=2, sort_keys=True))
    ctx.exit(0)


@click.group()
@click.version_option(__version__, "--version", prog_name="opinionkit")
@click.option(
    "--manifest",
    is_flag=True,
    expose_value=False,
    is_eager=True,
    callback=_print_versions,
    help="Print tool and dependency versions as JSON and exit.",
)
def cli():
    """Opinion-dynamics simulation and influence-network identification."""


@cli.command()
@click.option("--model", type=click.Choice(GENERATOR_MODELS), required=True)
@click.option("--n", "n_agents", type=int, required=True)
@click.option("--p", type=float, default=None, help="erdos_renyi edge probability.")
@click.option("--k", type=int, default=None, help="watts_strogatz ring degree (even).")
@click.option("--beta-rw", type=float, default=None, help="watts_strogatz rewiring probability.")
@click.option("--m0", type=int, default=None, help="barabasi_albert attachment count.")
@click.option("--lambda-range", nargs=2, type=float, default=(0.0, 1.0), show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def generate(model, n_agents, p, k, beta_rw, m0, lambda_range, seed, out):
    """Draw a random influence network and write it as JSON."""
    config = GeneratorConfig(
        model=model, n=n_agents, p=p, k=k, beta_rw=beta_rw, m0=m0,
        lambda_range=tuple(lambda_range),
    )
    net = generate_network(config, seed=seed)
    save_network(net, out)
    click.echo(f"wrote {out}: n={net.n}, edges={len(net.edge_set())}")


@cli.command()
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("--measure", type=click.Choice(CENTRALITY_MEASURES), required=True)
@click.option("--weighted", is_flag=True, help="Use 1/weight edge lengths / weight mass.")
@click.option("--alpha", type=float, default=None, help="Uniform susceptibility for the friedkin measure.")
@click.option("--damping", type=float, default=0.15, show_default=True, help="Teleport mass for pagerank.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def centrality(network, measure, weighted, alpha, damping, out):
    """Rank the agents of a network by one centrality measure."""
    net = load_network(network)
    values = _centrality_values(net, measure, weighted=weighted, alpha=alpha, damping=damping)
    if out is None:
        click.echo("agent,value")
        for agent, value in enumerate(values.values):
            click.echo(f"{agent},{format(float(value), '.17g')}")
    else:
        _write_centrality_csv(values, out)
        click.echo(f"wrote {out}: {measure} for {net.n} agents")


@cli.command()
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", type=click.Choice(["fj", "gossip"]), default="fj", show_default=True)
@click.option("--steps", type=int, required=True)
@click.option("--x0", default="spread", show_default=True, help="Comma-separated values or 'spread'.")
@click.option("--activation-size", type=int, default=None, help="Agents updating per gossip step.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--stride", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def simulate(network, kind, steps, x0, activation_size, seed, stride, out):
    """Run opinion dynamics on a stored network; write the trajectory CSV."""
    net = load_network(network)
    profile = _parse_vector(x0, net.n, "x0")
    if kind == "fj":
        traj = simulate_fj(net, profile, steps)
    else:
        if activation_size is None:
            raise ConfigError("gossip needs --activation-size")
        traj = simulate_gossip_fj(net, profile, steps, activation_size, seed=seed)
    save_trajectory(traj, out, stride=stride)
    click.echo(f"wrote {out}: {traj.horizon + 1} frames, n={traj.n}")


def _parse_vector(text: str, n: int, what: str) -> np.ndarray:
    if text == "spread":
        return np.linspace(0.0, 1.0, n)
    try:
        values = np.array([float(item) for item in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"{what} must be 'spread' or comma-separated floats") from exc
    if values.shape[0] != n:
        raise ConfigError(f"{what} has {values.shape[0]} entries for {n} agents")
    return values


@cli.command()
@click.argument("trajectory", type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", type=click.Choice(SAMPLING_KINDS), required=True)
@click.option("--rho", default=None, help="Scalar or comma-separated per-agent probabilities.")
@click.option("--issue", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def observe(trajectory, kind, rho, issue, seed, out):
    """Push a stored trajectory through an observation law; write the stream."""
    _, states = load_trajectory(trajectory)
    traj = OpinionTrajectory(
        states=states, model=ModelDescriptor(kind="loaded", params={"path": trajectory})
    )
    model = SamplingModel(kind=kind, rho=_parse_rho(rho))
    stream = sample_observations(traj, model, seed=seed, issue=issue)
    save_stream(stream, out)
    click.echo(f"wrote {out}: {int(stream.mask.sum())} observations")


def _parse_rho(text):
    if text is None:
        return None
    if "," in text:
        return np.array([float(item) for item in text.split(",")])
    return float(text)


@cli.command()
@click.option("--method", type=click.Choice(IDENTIFY_METHODS), required=True)
@click.option("--trajectory", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Trajectory CSV: finite-horizon data, or the yule_walker anchor profile (frame 0).")
@click.option("--profiles", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Two-frame trajectory CSV holding initial and equilibrium profiles.")
@click.option("--stream", "stream_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--network", "network_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Network JSON supplying the known susceptibilities.")
@click.option("--eps", type=float, default=0.0, show_default=True)
@click.option("--beta", type=float, default=None, help="Gossip activation fraction.")
@click.option("--mode", type=click.Choice(["dense", "sparse"]), default="dense", show_default=True)
@click.option("--eta", type=float, default=0.0, show_default=True)
@click.option("--n-sigma", type=int, default=5, show_default=True)
@click.option("--max-lag", type=int, default=5, show_default=True)
@click.option("--threshold", type=float, default=None)
@click.option("--nonneg", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def identify(method, trajectory, profiles, stream_path, network_path, eps, beta,
             mode, eta, n_sigma, max_lag, threshold, nonneg, out):
    """Reconstruct the influence matrix from stored opinion data."""
    if method == "finite_horizon":
        if trajectory is None:
            raise ConfigError("finite_horizon needs --trajectory")
        _, states = load_trajectory(trajectory)
        traj = OpinionTrajectory(states=states, model=ModelDescriptor(kind="loaded"))
        lam = load_network(network_path).lam if network_path else None
        report = identify_finite_horizon(traj, eps=eps, lam=lam)
    elif method in ("infinite_horizon", "unknown_lambda"):
        if profiles is None:
            raise ConfigError(f"{method} needs --profiles")
        _, states = load_trajectory(profiles)
        if states.shape[0] != 2:
            raise ConfigError(
                f"--profiles must hold exactly 2 frames (initial, equilibrium); "
                f"got {states.shape[0]}"
            )
        x0, x_inf = states[0], states[1]
        if method == "infinite_horizon":
            if network_path is None:
                raise ConfigError("infinite_horizon needs --network for lambda")
            lam = load_network(network_path).lam
            report = identify_infinite_horizon(x0, x_inf, lam, nonneg=nonneg)
        else:
            report = identify_unknown_lambda(x0, x_inf, nonneg=nonneg)
    else:
        if stream_path is None or network_path is None or beta is None or trajectory is None:
            raise ConfigError(
                "yule_walker needs --stream, --network, --beta, and --trajectory "
                "(anchor profile)"
            )
        stream = load_stream(stream_path)
        net = load_network(network_path)
        _, states = load_trajectory(trajectory)
        x0 = states[0, :, stream.issue]
        moments = estimate_cross_correlations(stream, max_lag=max_lag, n_sigma=n_sigma)
        b_bar = beta * (1.0 - net.lam) * x0
        gamma_hat, _ = estimate_gamma(moments, b_bar, mode=mode, eta=eta)
        report = recover_topology_and_w(gamma_hat, net.lam, beta, threshold=threshold)
    save_report(report, out)
    click.echo(f"wrote {out}: {len(report.support)} recovered edges")


@cli.command()
@click.option("--truth", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Ground-truth network JSON.")
@click.option("--estimate", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Estimation report JSON.")
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def evaluate(truth, estimate, tol, out):
    """Score an estimation report against a ground-truth network."""
    net = load_network(truth)
    report = load_report(estimate)
    metrics = evaluate_estimate(net.w, report, tol=tol)
    doc = {
        "f1": metrics.f1,
        "frobenius_error": metrics.frobenius_error,
        "max_abs_error": metrics.max_abs_error,
        "precision": metrics.precision,
        "recall": metrics.recall,
    }
    if out is None:
        click.echo(json.dumps(doc, indent=2, sort_keys=True))
    else:
        _write_json(doc, Path(out))
        click.echo(f"wrote {out}: f1={doc['f1']:.4f}")


@cli.command(name="run")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", envvar="OPINIONKIT_OUT", default=None,
              help="Output directory (default: config output_dir or $OPINIONKIT_OUT).")
def run_command(config, out):
    """Execute a pipeline config; write artifacts plus manifest.json."""
    document = _load_config(config)
    manifest = run_pipeline(document, output_dir=out)
    target = out or document.get("output_dir")
    click.echo(f"wrote {len(manifest['artifacts'])} artifacts to {target}")


@cli.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", envvar="OPINIONKIT_OUT", default=None,
              help="Output directory (default: config output_dir or $OPINIONKIT_OUT).")
@click.option("--jobs", type=int, default=1, show_default=True)
def sweep(config, out, jobs):
    """Run a parameter grid of pipelines; aggregate metrics into sweep.csv."""
    document = _load_config(config)
    manifest = run_sweep(document, output_dir=out, jobs=jobs)
    target = out or document.get("output_dir")
    click.echo(f"swept {manifest['points']} points into {target}")


@cli.command()
@click.argument("inputs", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def report(inputs, out):
    """Aggregate metric JSONs / centrality CSVs into plot-ready x,y,series rows."""
    rows = []
    for path in inputs:
        series = Path(path).stem
        if path.endswith(".json"):
            doc = json.loads(Path(path).read_text())
            if not isinstance(doc, dict):
                raise ConfigError(f"{path} does not hold a metrics object")
            for key in sorted(doc):
                value = doc[key]
                if isinstance(value, (int, float)) and not isinstance(value, bool):
                    rows.append((key, float(value), series))
        else:
            with open(path) as handle:
                header = handle.readline().strip()
                if header != "agent,value":
                    raise ConfigError(f"{path} is not an agent,value table")
                for line in handle:
                    agent, value = line.strip().split(",")
                    rows.append((agent, float(value), series))
    rows.sort(key=lambda row: (row[2], str(row[0])))
    lines = ["x,y,series"] + [
        f"{x},{format(y, '.17g')},{series}" for x, y, series in rows
    ]
    text = "\n".join(lines) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)
        click.echo(f"wrote {out}: {len(rows)} rows")


def main(argv=None) -> int:
    """Entry point with library exit-code mapping."""
    try:
        result = cli.main(args=argv, standalone_mode=False)
    except OpinionKitError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    if isinstance(result, int):
        return result
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
