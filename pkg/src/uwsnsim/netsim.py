"""Agent-based discrete-time simulation of an unattended WSN under attack.

Per time unit, in this order: (1) an average of l*N0 new susceptible sensors
awaken (Poisson, capped by the optional finite pool); (2) every informed
sensor transmits to each susceptible neighbor independently; (3) each
informed sensor loses its datum to the attacker with probability c; (4) each
awake sensor empties its battery with probability m.  Attack and death apply
to the pre-step membership snapshot, so sensors informed or awakened during
the step are spared until the next one.

Transmission probability per (informed, susceptible) pair:

* CompleteMixing: b / N0 (mean-field consistent with the b*i*s rate of the
  vital-dynamics model), or the literal b when ``raw_b`` is set;
* RandomGeometric: b per edge, with b read as a per-contact probability.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "CompleteMixing",
    "RandomGeometric",
    "SimParams",
    "CensusSeries",
    "RunRecord",
    "CohortStats",
    "McSummary",
    "ParamRanges",
    "build_topology",
    "simulate",
    "monte_carlo",
    "analytic_r0",
]

S, I, R, DEAD = 0, 1, 2, 3

#: Give up after this many redraws of a zero m (degenerate interval guard).
MAX_REDRAWS_PER_RUN = 1000


@dataclass(frozen=True)
class CompleteMixing:
    """Every awake sensor is adjacent to every other."""


@dataclass(frozen=True)
class RandomGeometric:
    """Sensors placed uniformly in a square, edges within ``radius``."""

    radius: float
    side: float = 1.0

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")
        if not self.side > 0:
            raise ValueError(f"side must be > 0, got {self.side}")


Topology = Union[CompleteMixing, RandomGeometric]


@dataclass(frozen=True)
class SimParams:
    """One simulation run; all of l, m, c, b are per-time-unit probabilities."""

    n_initial: int
    l: float
    m: float
    c: float
    b: float
    horizon: int = 60
    seed: int = 0
    initial_informed_prob: float = 0.1
    topology: Topology = CompleteMixing()
    pool: int | None = None
    raw_b: bool = False

    def __post_init__(self) -> None:
        if self.n_initial < 1:
            raise ValueError(f"n_initial must be >= 1, got {self.n_initial}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")
        for name in ("l", "m", "c", "b", "initial_informed_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.pool is not None and self.pool < 0:
            raise ValueError(f"pool must be >= 0, got {self.pool}")

    @property
    def pair_probability(self) -> float:
        if isinstance(self.topology, RandomGeometric):
            return self.b
        return self.b if self.raw_b else self.b / self.n_initial


@dataclass
class CensusSeries:
    """Per-step compartment counts; row t is the census after step t."""

    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    dead: np.ndarray
    seed: int = 0

    def __len__(self) -> int:
        return len(self.s)

    @property
    def total_awakened(self) -> np.ndarray:
        return self.s + self.i + self.r + self.dead

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# seed={self.seed}\n")
            fh.write("step,S,I,R,Dead\n")
            for t in range(len(self.s)):
                fh.write(f"{t},{self.s[t]},{self.i[t]},{self.r[t]},{self.dead[t]}\n")


def _geo_edges(positions: np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Directed edge arrays (src, dst) of the geometric graph on ``positions``."""
    if len(positions) < 2:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    pairs = cKDTree(positions).query_pairs(radius, output_type="ndarray")
    if pairs.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    return src, dst


def build_topology(params: SimParams, n: int | None = None) -> np.ndarray:
    """Adjacency matrix over ``n`` freshly placed awake sensors.

    CompleteMixing: all pairs.  RandomGeometric: uniform placement in the
    square, edge iff distance <= radius.  Deterministic given params.seed.
    """
    if n is None:
        n = params.n_initial
    adj = np.zeros((n, n), dtype=bool)
    if isinstance(params.topology, CompleteMixing):
        adj[:] = True
        np.fill_diagonal(adj, False)
        return adj
    rng = np.random.default_rng(params.seed)
    positions = rng.uniform(0.0, params.topology.side, size=(n, 2))
    src, dst = _geo_edges(positions, params.topology.radius)
    adj[src, dst] = True
    return adj


def simulate(params: SimParams) -> CensusSeries:
    """Run one seeded simulation and return the census series."""
    rng = np.random.default_rng(params.seed)
    geo = params.topology if isinstance(params.topology, RandomGeometric) else None
    n0 = params.n_initial
    p_pair = params.pair_probability

    status = np.full(n0, S, dtype=np.int8)
    status[rng.random(n0) < params.initial_informed_prob] = I
    positions = (rng.uniform(0.0, geo.side, size=(n0, 2)) if geo is not None else None)
    pool_left = params.pool

    horizon = params.horizon
    counts = np.zeros((horizon + 1, 4), dtype=np.int64)
    counts[0] = np.bincount(status, minlength=4)

    edges = None
    members_changed = True
    for t in range(1, horizon + 1):
        pre_members = np.nonzero(status != DEAD)[0]
        pre_informed = pre_members[status[pre_members] == I]

        # (1) awaken
        births = int(rng.poisson(params.l * n0))
        if pool_left is not None:
            births = min(births, pool_left)
            pool_left -= births
        if births:
            status = np.concatenate([status, np.full(births, S, dtype=np.int8)])
            if geo is not None:
                positions = np.vstack([positions, rng.uniform(0.0, geo.side, size=(births, 2))])
            members_changed = True

        # (2) transmit from the pre-step informed set
        susceptible = np.nonzero(status == S)[0]
        if len(pre_informed) and len(susceptible) and params.b > 0:
            if geo is None:
                p_inf = 1.0 - (1.0 - p_pair) ** len(pre_informed)
                hit = rng.random(len(susceptible)) < p_inf
                status[susceptible[hit]] = I
            else:
                if members_changed:
                    alive = np.nonzero(status != DEAD)[0]
                    local = np.full(len(status), -1, dtype=np.int64)
                    local[alive] = np.arange(len(alive))
                    edges = _geo_edges(positions[alive], geo.radius)
                    edge_owner = alive
                    members_changed = False
                src, dst = edges
                informed_local = np.zeros(len(edge_owner), dtype=bool)
                informed_local[local[pre_informed]] = True
                n_inf_neighbors = np.bincount(
                    src[informed_local[dst]], minlength=len(edge_owner))
                k = n_inf_neighbors[local[susceptible]]
                p_v = 1.0 - (1.0 - p_pair) ** k
                hit = rng.random(len(susceptible)) < p_v
                status[susceptible[hit]] = I

        # (3) attacker strikes the pre-step informed set
        if len(pre_informed) and params.c > 0:
            struck = rng.random(len(pre_informed)) < params.c
            status[pre_informed[struck]] = R

        # (4) natural death over the pre-step membership
        if len(pre_members) and params.m > 0:
            died = rng.random(len(pre_members)) < params.m
            if died.any():
                status[pre_members[died]] = DEAD
                members_changed = True

        counts[t] = np.bincount(status, minlength=4)

    return CensusSeries(counts[:, S].copy(), counts[:, I].copy(),
                        counts[:, R].copy(), counts[:, DEAD].copy(),
                        seed=params.seed)


# ---------------------------------------------------------------------------
# Monte Carlo campaigns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamRanges:
    """Per-parameter draw intervals; defaults are the random-campaign ones."""

    l: tuple[float, float] = (0.0, 0.2)
    m: tuple[float, float] = (0.0, 0.01)
    c: tuple[float, float] = (0.0, 0.1)
    b: tuple[float, float] = (0.0, 0.033)

    def __post_init__(self) -> None:
        for name in ("l", "m", "c", "b"):
            lo, hi = getattr(self, name)
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError(f"interval for {name} must satisfy 0 <= lo <= hi <= 1")


def analytic_r0(l: float, m: float, c: float, b: float) -> float:
    """Reproduction number b*l/(m*(c+m)) of the vital-dynamics model."""
    return b * l / (m * (c + m))


@dataclass(frozen=True)
class RunRecord:
    run: int
    l: float
    m: float
    c: float
    b: float
    r0: float
    extinct: bool
    final_i: int
    min_i_step: int
    mean_i: float


@dataclass(frozen=True)
class CohortStats:
    runs: int
    mean_r0: float
    mean_informed: float
    extinction_rate: float
    mean_min_step: float


@dataclass(frozen=True)
class McSummary:
    runs: int
    redraws: int
    below: CohortStats  # R0 < 1
    above: CohortStats  # R0 >= 1
    records: tuple[RunRecord, ...] = field(repr=False, default=())

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("run,l,m,c,b,R0,extinct,final_I,min_I_step\n")
            for r in self.records:
                fh.write(f"{r.run},{r.l!r},{r.m!r},{r.c!r},{r.b!r},{r.r0!r},"
                         f"{int(r.extinct)},{r.final_i},{r.min_i_step}\n")


def _mc_run(args) -> tuple[RunRecord, int]:
    run, seed_seq, ranges, base = args
    rng = np.random.default_rng(seed_seq)
    redraws = 0
    l = rng.uniform(*ranges.l)
    c = rng.uniform(*ranges.c)
    b = rng.uniform(*ranges.b)
    m = rng.uniform(*ranges.m)
    while m == 0.0:
        redraws += 1
        if redraws > MAX_REDRAWS_PER_RUN:
            raise ValueError("m interval keeps producing 0; widen the interval")
        m = rng.uniform(*ranges.m)
    sim_seed = int(rng.integers(0, 2**63))
    census = simulate(replace(base, l=l, m=m, c=c, b=b, seed=sim_seed))
    i_series = census.i
    record = RunRecord(
        run=run, l=l, m=m, c=c, b=b,
        r0=analytic_r0(l, m, c, b),
        extinct=bool((i_series == 0).any()),
        final_i=int(i_series[-1]),
        min_i_step=int(np.argmin(i_series)),
        mean_i=float(i_series.mean()),
    )
    return record, redraws


def _cohort(records: list[RunRecord]) -> CohortStats:
    if not records:
        return CohortStats(0, float("nan"), float("nan"), float("nan"), float("nan"))
    return CohortStats(
        runs=len(records),
        mean_r0=float(np.mean([r.r0 for r in records])),
        mean_informed=float(np.mean([r.mean_i for r in records])),
        extinction_rate=float(np.mean([r.extinct for r in records])),
        mean_min_step=float(np.mean([r.min_i_step for r in records])),
    )


def monte_carlo(runs: int, ranges: ParamRanges, base: SimParams,
                seed: int = 0, workers: int | None = None) -> McSummary:
    """Random-parameter campaign: draw (l, m, c, b) uniformly per run,
    simulate, and aggregate per R0 cohort.

    Deterministic given ``seed`` regardless of ``workers`` (each run derives
    its own stream from a spawned seed sequence; aggregation is by run
    index).  ``workers`` defaults to the UWSN_THREADS environment variable,
    or serial execution.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    if workers is None:
        workers = int(os.environ.get("UWSN_THREADS", "1"))
    children = np.random.SeedSequence(seed).spawn(runs)
    jobs = [(k, children[k], ranges, base) for k in range(runs)]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_mc_run, jobs, chunksize=max(1, runs // (8 * workers))))
    else:
        results = [_mc_run(job) for job in jobs]

    records = [rec for rec, _ in results]
    redraws = sum(rd for _, rd in results)
    below = _cohort([r for r in records if r.r0 < 1.0])
    above = _cohort([r for r in records if r.r0 >= 1.0])
    return McSummary(runs=runs, redraws=redraws, below=below, above=above,
                     records=tuple(records))
