"""Monte Carlo sampler for the killed Ornstein-Uhlenbeck process.

A particle follows dX = -eps*X dt + sqrt(2) dB from x0 and is killed when
the integrated jump rate I_t = sum Lambda(X_k)*dt first reaches an
independent Exp(1) threshold.  The waiting time is tau = (k+1)*dt at the
firing step, censored at t_max otherwise.

Reproducibility contract: sample i draws from the philox substream keyed
(master_seed, i) with a fixed draw order -- draw 0 is the Exp(1) threshold,
draws 1, 2, ... are the Gaussian increments in step order.  Batches are
split across workers as contiguous index ranges writing into disjoint
output slots, so the dataset is bit-identical for any worker count and any
scheduling.  The compiled kernel in _kernels uses the same arithmetic
expressions in the same order as the pure-python path here; the test suite
compares them sample by sample.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from . import _io, _kernels, _philox, ratefn
from ._version import __version__
from .errors import (ConfigurationError, DomainError, InvalidSpecError,
                     SimulationError)

__all__ = [
    "OUParams", "SimConfig", "WaitingTimeOutcome", "WaitingTimeDataset",
    "SampleStream", "em_step", "clock_step", "sample_waiting_time",
    "simulate_batch", "ou_exact_transition", "write_dataset", "read_dataset",
]

SQRT2 = math.sqrt(2.0)
SCHEMA_VERSION = 1

# default horizons when SimConfig.t_max is left unset
T_MAX_OVER_EPS = 10.0
T_MAX_STEPS_DRIFTFREE = 10_000_000


@dataclass(frozen=True)
class OUParams:
    """Drift strength and initial state; diffusion amplitude is fixed sqrt(2).

    eps = 0 is the drift-free limit (plain Brownian motion with variance 2t).
    """
    eps: float
    x0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.eps) and self.eps >= 0.0):
            raise InvalidSpecError(
                f"drift strength must be finite and >= 0, got {self.eps}")
        if not math.isfinite(self.x0):
            raise InvalidSpecError(f"initial state must be finite, got {self.x0}")


@dataclass(frozen=True)
class SimConfig:
    """Batch shape: step size, sample count, censoring horizon, seed, workers.

    t_max = None resolves per-params at simulation time: 10/eps for eps > 0
    (an order of magnitude past the exponential transition), 1e7 steps for
    the drift-free case where mean waiting time is infinite.  The worker
    count never influences results, only scheduling.
    """
    dt: float = 1e-3
    n_samples: int = 100_000
    t_max: Optional[float] = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ConfigurationError(f"dt must be finite and > 0, got {self.dt}")
        if int(self.n_samples) < 1:
            raise ConfigurationError(
                f"n_samples must be >= 1, got {self.n_samples}")
        if self.t_max is not None:
            if not (math.isfinite(self.t_max) and self.t_max >= self.dt):
                raise ConfigurationError(
                    f"t_max must be finite and >= dt, got {self.t_max}")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ConfigurationError(
                f"seed must fit in 64 bits, got {self.seed}")
        if int(self.workers) < 1:
            raise ConfigurationError(
                f"worker count must be >= 1, got {self.workers}")

    def effective_t_max(self, params: OUParams) -> float:
        """The censoring horizon actually used for these params."""
        if self.t_max is not None:
            return float(self.t_max)
        if params.eps > 0.0:
            return T_MAX_OVER_EPS / params.eps
        return T_MAX_STEPS_DRIFTFREE * self.dt


@dataclass(frozen=True)
class WaitingTimeOutcome:
    """One sample: tau is (steps * dt) at firing, or t_max when censored."""
    index: int
    tau: float
    censored: bool
    steps: int


@dataclass(frozen=True)
class WaitingTimeDataset:
    """All outcomes of a batch, ordered by sample index, plus provenance."""
    outcomes: tuple
    params: OUParams
    rate: object
    config: SimConfig
    schema_version: int = SCHEMA_VERSION

    def __len__(self):
        return len(self.outcomes)

    @cached_property
    def taus(self) -> np.ndarray:
        return np.array([o.tau for o in self.outcomes], dtype=np.float64)

    @cached_property
    def censored(self) -> np.ndarray:
        return np.array([o.censored for o in self.outcomes], dtype=bool)

    @cached_property
    def steps(self) -> np.ndarray:
        return np.array([o.steps for o in self.outcomes], dtype=np.int64)

    @property
    def n_censored(self) -> int:
        return int(self.censored.sum())

    def manifest(self) -> dict:
        """JSON-able description of everything that determines the data.

        The worker count is deliberately absent: it affects scheduling only,
        and serialized datasets must be byte-identical across worker counts.
        """
        t_eff = self.config.effective_t_max(self.params)
        return {
            "schema_version": self.schema_version,
            "params": {"eps": self.params.eps, "x0": self.params.x0},
            "rate": ratefn.rate_to_dict(self.rate),
            "config": {
                "dt": self.config.dt,
                "n_samples": int(self.config.n_samples),
                "t_max": t_eff,
                "seed": int(self.config.seed),
            },
        }

    def config_hash(self) -> str:
        return _io.json_digest(self.manifest())


# ---------------------------------------------------------------------------
# elementary updates
# ---------------------------------------------------------------------------

def em_step(x: float, eps: float, dt: float, db: float) -> float:
    """One Euler-Maruyama update: x - eps*x*dt + sqrt(2)*db."""
    return x - eps * x * dt + SQRT2 * db


def clock_step(i: float, rate: float, dt: float) -> float:
    """Advance the integrated killing clock: i + rate*dt.

    The rate is the one evaluated at the freshly updated state (the clock
    uses the right endpoint of the step).
    """
    return i + rate * dt


def ou_exact_transition(x0: float, eps: float, t: float, draw: float) -> float:
    """Exact OU transition: e^{-eps*t}*x0 + sqrt((1-e^{-2*eps*t})/eps)*draw.

    `draw` is a standard normal variate.  The eps -> 0 limit (variance 2t)
    is taken automatically, and -expm1 keeps the variance accurate for
    eps*t near the underflow of e^{-2*eps*t}-1.
    """
    if not t > 0.0:
        raise DomainError(f"transition time must be positive, got {t}")
    if eps < 0.0:
        raise DomainError(f"drift strength must be >= 0, got {eps}")
    if eps == 0.0:
        return x0 + math.sqrt(2.0 * t) * draw
    var = -math.expm1(-2.0 * eps * t) / eps
    return math.exp(-eps * t) * x0 + math.sqrt(var) * draw


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

class SampleStream:
    """Cursor over the philox substream keyed (seed, sample_index).

    Draw order is part of the file format, in effect: draw 0 feeds the
    Exp(1) firing threshold, draws 1.. feed the Gaussian increments.
    """
    __slots__ = ("seed", "sample_index", "cursor")

    def __init__(self, seed: int, sample_index: int):
        self.seed = int(seed)
        self.sample_index = int(sample_index)
        self.cursor = 0

    def next_raw(self) -> int:
        raw = _philox.raw_draw(self.seed, self.sample_index, self.cursor)
        self.cursor += 1
        return raw

    def next_exponential(self) -> float:
        return _philox.exp1_from_raw(self.next_raw())

    def next_normal(self) -> float:
        return _philox.norm_ppf(_philox.uniform_open(self.next_raw()))


def sample_waiting_time(params: OUParams, rate, cfg: SimConfig,
                        stream: SampleStream) -> WaitingTimeOutcome:
    """Reference (pure python) simulation of a single sample.

    Draws the Exp(1) threshold first, then steps the state and the clock
    until the clock fires (tau = (k+1)*dt) or the horizon is reached
    (censored, tau = t_max).  Bit-identical to the compiled batch kernel.
    """
    t_max = cfg.effective_t_max(params)
    max_steps = int(round(t_max / cfg.dt))
    if max_steps < 1:
        raise ConfigurationError(
            f"t_max {t_max} shorter than one step of {cfg.dt}")
    gamma = stream.next_exponential()
    sdt = math.sqrt(cfg.dt)
    x = params.x0
    clock = 0.0
    for k in range(max_steps):
        db = sdt * stream.next_normal()
        x = em_step(x, params.eps, cfg.dt, db)
        if not math.isfinite(x):
            raise SimulationError(
                f"state became non-finite at step {k + 1}",
                sample_index=stream.sample_index, step_index=k + 1)
        clock = clock_step(clock, ratefn.eval_rate(rate, x), cfg.dt)
        if clock >= gamma:
            return WaitingTimeOutcome(stream.sample_index, (k + 1) * cfg.dt,
                                      False, k + 1)
    return WaitingTimeOutcome(stream.sample_index, t_max, True, max_steps)


def _chunk_ranges(n: int, workers: int):
    """Split [0, n) into <= workers contiguous (start, size) ranges."""
    w = max(1, min(int(workers), n))
    base, extra = divmod(n, w)
    out = []
    start = 0
    for j in range(w):
        size = base + (1 if j < extra else 0)
        out.append((start, size))
        start += size
    return out


def simulate_batch(params: OUParams, rate, cfg: SimConfig) -> WaitingTimeDataset:
    """Simulate cfg.n_samples waiting times with the compiled kernel.

    Samples are distributed to workers as contiguous index ranges; each
    sample's substream is keyed by its global index, so the dataset is
    identical for every worker count.  Any non-finite state aborts the
    whole batch with the failing sample index.
    """
    report = ratefn.validate_rate(rate)
    if not (report.nonnegative and report.bounded):
        raise InvalidSpecError(
            f"rate family not admissible for simulation: {report.notes}")
    n = int(cfg.n_samples)
    t_max = cfg.effective_t_max(params)
    max_steps = int(round(t_max / cfg.dt))
    if max_steps < 1:
        raise ConfigurationError(
            f"t_max {t_max} shorter than one step of {cfg.dt}")

    kind, p0, p1, p2, p3, xs, rs = ratefn.kernel_args(rate)
    tau = np.zeros(n, dtype=np.float64)
    status = np.zeros(n, dtype=np.int64)
    steps = np.zeros(n, dtype=np.int64)

    def run(chunk):
        start, size = chunk
        if size == 0:
            return
        _kernels.run_batch(
            np.uint64(cfg.seed), np.uint64(start), size,
            float(params.eps), float(params.x0), float(cfg.dt), max_steps,
            kind, float(p0), float(p1), float(p2), float(p3), xs, rs,
            tau[start:start + size], status[start:start + size],
            steps[start:start + size])

    ranges = _chunk_ranges(n, cfg.workers)
    if len(ranges) == 1:
        run(ranges[0])
    else:
        with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
            list(pool.map(run, ranges))

    bad = np.nonzero(status == _kernels.NONFINITE)[0]
    if bad.size:
        i = int(bad[0])
        raise SimulationError(
            f"state became non-finite in sample {i}",
            sample_index=i, step_index=int(steps[i]))

    outcomes = []
    for i in range(n):
        if status[i] == _kernels.CENSORED:
            outcomes.append(WaitingTimeOutcome(i, t_max, True, int(steps[i])))
        else:
            outcomes.append(WaitingTimeOutcome(i, float(tau[i]), False,
                                               int(steps[i])))
    return WaitingTimeDataset(tuple(outcomes), params, rate, cfg)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def write_dataset(ds: WaitingTimeDataset, csv_path: str) -> str:
    """Write the dataset CSV plus its JSON sidecar, both atomically.

    CSV columns: index, tau, censored (0/1), steps.  The first line pins the
    config hash so a CSV can always be matched to its sidecar.  Returns the
    sidecar path.
    """
    digest = ds.config_hash()
    lines = [f"# kol_version={__version__}",
             f"# config_hash={digest}",
             "index,tau,censored,steps"]
    for o in ds.outcomes:
        lines.append(f"{o.index},{o.tau!r},{1 if o.censored else 0},{o.steps}")
    _io.atomic_write_text(csv_path, "\n".join(lines) + "\n")

    side = dict(ds.manifest())
    side["config_hash"] = digest
    side["kol_version"] = __version__
    side_path = _io.sidecar_path(csv_path)
    _io.atomic_write_text(side_path, _io.canonical_json(side))
    return side_path


def read_dataset(csv_path: str) -> WaitingTimeDataset:
    """Rebuild a WaitingTimeDataset from a CSV and its JSON sidecar."""
    import json

    with open(_io.sidecar_path(csv_path)) as fh:
        side = json.load(fh)
    if side.get("schema_version") != SCHEMA_VERSION:
        raise ConfigurationError(
            f"unsupported dataset schema {side.get('schema_version')!r}")
    params = OUParams(eps=side["params"]["eps"], x0=side["params"]["x0"])
    rate = ratefn.rate_from_dict(side["rate"])
    cfgd = side["config"]
    cfg = SimConfig(dt=cfgd["dt"], n_samples=cfgd["n_samples"],
                    t_max=cfgd["t_max"], seed=cfgd["seed"])

    outcomes = []
    with open(csv_path) as fh:
        header = fh.readline().strip()
        if header.startswith("# kol_version="):
            header = fh.readline().strip()
        if not header.startswith("# config_hash="):
            raise ConfigurationError(f"{csv_path}: missing config_hash header")
        file_hash = header.split("=", 1)[1]
        if side.get("config_hash") not in (None, file_hash):
            raise ConfigurationError(
                f"{csv_path}: sidecar and CSV disagree on config hash")
        cols = fh.readline().strip()
        if cols != "index,tau,censored,steps":
            raise ConfigurationError(f"{csv_path}: unexpected columns {cols!r}")
        for line in fh:
            idx_s, tau_s, cen_s, steps_s = line.rstrip("\n").split(",")
            outcomes.append(WaitingTimeOutcome(
                int(idx_s), float(tau_s), cen_s == "1", int(steps_s)))
    if len(outcomes) != cfg.n_samples:
        raise ConfigurationError(
            f"{csv_path}: {len(outcomes)} rows for n_samples={cfg.n_samples}")
    return WaitingTimeDataset(tuple(outcomes), params, rate, cfg)
