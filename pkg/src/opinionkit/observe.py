"""Random observation models over opinion trajectories.

A stream holds the samples z(k) = P(k) x(k) where P(k) is a random 0/1
diagonal: either the whole vector is seen with probability rho
(intermittent), each coordinate independently with probability rho_i
(independent), or everything (full). Missing values are absent records in
the file format; in memory a boolean mask separates observed zeros from
gaps.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import OpinionTrajectory
from .errors import ConfigError, ParameterError, StructuralError
from .numkit import philox_stream

SAMPLING_KINDS = ("full", "intermittent", "independent")


@dataclass(frozen=True)
class SamplingModel:
    """Observation law: kind plus the observation probability rho
    (scalar for intermittent, scalar or per-agent vector for independent,
    unused for full)."""

    kind: str
    rho: float | np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in SAMPLING_KINDS:
            raise ParameterError(f"unknown sampling kind {self.kind!r}")
        if self.kind == "full":
            if self.rho is not None:
                raise ParameterError("full sampling takes no rho")
            return
        if self.rho is None:
            raise ParameterError(f"{self.kind} sampling needs rho")
        rho = np.asarray(self.rho, dtype=float)
        if self.kind == "intermittent" and rho.ndim != 0:
            raise ParameterError("intermittent sampling takes a scalar rho")
        if rho.min() < 0.0 or rho.max() > 1.0:
            raise ParameterError("rho entries must lie in [0, 1]")

    def rho_vector(self, n: int) -> np.ndarray:
        """Per-agent observation probability pi."""
        if self.kind == "full":
            return np.ones(n)
        rho = np.asarray(self.rho, dtype=float)
        if rho.ndim == 0:
            return np.full(n, float(rho))
        if rho.shape[0] != n:
            raise StructuralError(f"rho has {rho.shape[0]} entries for {n} agents")
        return rho


@dataclass(frozen=True)
class ObservationStream:
    """Zero-filled sample matrix with an observation mask.

    values[k, i] is z_i(k) (zero when unobserved); mask[k, i] records
    whether (k, i) was actually seen, so observed zeros stay
    distinguishable from gaps.
    """

    values: np.ndarray
    mask: np.ndarray
    model: SamplingModel
    seed: int | None = None
    issue: int = 0

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        mask = np.atleast_2d(np.asarray(self.mask, dtype=bool))
        if values.shape != mask.shape:
            raise StructuralError("values and mask shapes differ")
        if np.any(values[~mask] != 0.0):
            raise StructuralError("unobserved entries must be stored as zeros")
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def records(self):
        """Yield (k, agent, value) for every observed entry."""
        for k, i in zip(*np.nonzero(self.mask)):
            yield int(k), int(i), float(self.values[k, i])


@dataclass(frozen=True)
class ObservationMoments:
    """First and second moments of the observation process: pi_i = E[p_i]
    and cap_pi[l] = E[p(k) p(k + l)'] for lags 0..max_lag."""

    pi: np.ndarray
    cap_pi: np.ndarray


def sample_observations(
    traj: OpinionTrajectory,
    model: SamplingModel,
    seed: int | None = None,
    issue: int = 0,
) -> ObservationStream:
    """Apply the observation law to each stored step of a trajectory.

    The full model reproduces the trajectory exactly; the random models
    draw the masks from a dedicated seeded stream.
    """
    if not 0 <= issue < traj.n_issues:
        raise ParameterError(f"issue {issue} outside 0..{traj.n_issues - 1}")
    x = traj.states[:, :, issue]
    steps, n = x.shape
    rng = philox_stream(seed)
    if model.kind == "full":
        mask = np.ones((steps, n), dtype=bool)
    elif model.kind == "intermittent":
        mask = np.repeat(rng.random(steps)[:, None] < float(model.rho), n, axis=1)
    else:
        mask = rng.random((steps, n)) < model.rho_vector(n)[None, :]
    return ObservationStream(
        values=np.where(mask, x, 0.0), mask=mask, model=model, seed=seed, issue=issue
    )


def observation_moments(model: SamplingModel, n: int, max_lag: int) -> ObservationMoments:
    """Exact moments of the sampling process for lags 0..max_lag.

    Independent: cap_pi[0] = diag(rho) + rho rho' off the diagonal, and
    rho rho' for every positive lag. Intermittent: rho everywhere at lag 0
    (the whole vector is seen or missed together), rho^2 at positive lags.
    """
    if max_lag < 0:
        raise ParameterError("max_lag must be >= 0")
    pi = model.rho_vector(n)
    cap = np.empty((max_lag + 1, n, n))
    cross = np.outer(pi, pi)
    if model.kind == "intermittent":
        cap[0] = pi[0]
    else:
        cap[0] = cross.copy()
        np.fill_diagonal(cap[0], pi)
    cap[1:] = cross
    if np.any(pi == 0.0):
        warnings.warn(
            "some agents are never observed; moment corrections divide by zero there",
            stacklevel=2,
        )
    return ObservationMoments(pi=pi, cap_pi=cap)


# ---- file format ----------------------------------------------------------
#
# Streams are stored as delimited text with header k,agent,value holding only
# the observed records, plus a sidecar descriptor <path>.meta.json with the
# sampling model, seed, horizon, agent count, and observed issue.


def _sidecar_path(path) -> str:
    return str(path) + ".meta.json"


def save_stream(stream: ObservationStream, path) -> None:
    with open(path, "w") as fh:
        fh.write("k,agent,value\n")
        for k, agent, value in stream.records():
            fh.write(f"{k},{agent},{format(value, '.17g')}\n")
    rho = stream.model.rho
    if isinstance(rho, np.ndarray):
        rho = rho.tolist()
    descriptor = {
        "horizon": stream.horizon,
        "issue": stream.issue,
        "kind": stream.model.kind,
        "n": stream.n,
        "rho": rho,
        "seed": stream.seed,
    }
    with open(_sidecar_path(path), "w") as fh:
        json.dump(descriptor, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_stream(path) -> ObservationStream:
    try:
        with open(_sidecar_path(path)) as fh:
            descriptor = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"stream descriptor {_sidecar_path(path)} is missing") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"stream descriptor is not valid JSON: {exc}") from exc
    expected = {"horizon", "issue", "kind", "n", "rho", "seed"}
    if set(descriptor) != expected:
        raise ConfigError(
            f"stream descriptor keys {sorted(descriptor)} != {sorted(expected)}"
        )
    rho = descriptor["rho"]
    if isinstance(rho, list):
        rho = np.asarray(rho, dtype=float)
    model = SamplingModel(kind=descriptor["kind"], rho=rho)
    steps = descriptor["horizon"] + 1
    n = descriptor["n"]
    values = np.zeros((steps, n))
    mask = np.zeros((steps, n), dtype=bool)
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "k,agent,value":
            raise ConfigError(f"unexpected stream header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            k, agent, value = line.split(",")
            k, agent = int(k), int(agent)
            if not (0 <= k < steps and 0 <= agent < n):
                raise ConfigError(f"record ({k}, {agent}) outside the stream frame")
            values[k, agent] = float(value)
            mask[k, agent] = True
    return ObservationStream(
        values=values,
        mask=mask,
        model=model,
        seed=descriptor["seed"],
        issue=descriptor["issue"],
    )
