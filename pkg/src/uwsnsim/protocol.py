"""Three-rule distributed node-scheduling protocol and its verification.

Node states: working, probing, sleeping, locked; compartments S/I/R as in
the epidemic models (R = the datum was destroyed by the attacker).  Rules,
guarded on a node i with neighborhood predicates
A(i) = "some neighbor holds compartment R", W(i) = "some working neighbor",
W*(i)/P*(i) = "some working/probing neighbor with lower id":

    r1: probing and W(i)               -> copy the datum from a working
                                          informed neighbor, go sleeping
    r2: probing and ((not W(i) and not P*(i)) or A(i))
                                       -> lock every attacked neighbor,
                                          become working
    r3: working and W*(i)              -> copy the datum from a lower-id
                                          working informed neighbor if still
                                          susceptible, go sleeping

The central daemon fires one enabled (node, rule) per step; when a probing
node has both r1 and r2 enabled (possible only while A(i) holds) r2 fires
first so quarantine cannot be skipped.  Convergence is bounded by 2n moves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._kernels import run_central

__all__ = [
    "NodeState",
    "Compartment",
    "Rule",
    "Daemon",
    "TieBreak",
    "NodeClass",
    "ProtocolNode",
    "ProtocolGraph",
    "Predicates",
    "MoveRecord",
    "SchedulerResult",
    "predicates",
    "enabled_rules",
    "apply_rule",
    "run_scheduler",
    "check_legitimate",
    "classify_nodes",
    "inject_attack",
    "heal_and_wake",
    "all_probing",
    "run_protocol_experiment",
    "scan_report",
    "write_move_trace",
]


class NodeState(Enum):
    WORKING = "working"
    PROBING = "probing"
    SLEEPING = "sleeping"
    LOCKED = "locked"


class Compartment(Enum):
    S = "S"
    I = "I"
    R = "R"


class Rule(Enum):
    R1 = "r1"
    R2 = "r2"
    R3 = "r3"


class Daemon(Enum):
    CENTRAL = "central"
    SYNCHRONOUS = "synchronous"


class TieBreak(Enum):
    LOWEST_ID = "lowest-id"
    SEEDED_RANDOM = "seeded-random"


class NodeClass(Enum):
    INDEPENDENT = "independent"
    DOMINATED = "dominated"
    LOCKED_CLASS = "locked"
    UNCLASSIFIED = "unclassified"


_STATE_CODE = {NodeState.WORKING: 0, NodeState.PROBING: 1,
               NodeState.SLEEPING: 2, NodeState.LOCKED: 3}
_STATE_FROM = {v: k for k, v in _STATE_CODE.items()}
_COMP_CODE = {Compartment.S: 0, Compartment.I: 1, Compartment.R: 2}
_COMP_FROM = {v: k for k, v in _COMP_CODE.items()}
_RULE_FROM = {1: Rule.R1, 2: Rule.R2, 3: Rule.R3}

WORKING, PROBING, SLEEPING, LOCKED = 0, 1, 2, 3
COMP_S, COMP_I, COMP_R = 0, 1, 2


@dataclass(frozen=True)
class ProtocolNode:
    """Read-only snapshot of one node."""

    id: int
    state: NodeState
    compartment: Compartment
    neighbors: frozenset[int]


class Predicates(dict):
    """Mapping with the four guard predicates: A, W, W_star, P_star."""


@dataclass(frozen=True)
class MoveRecord:
    step: int
    node: int
    rule: Rule
    state_before: NodeState
    state_after: NodeState
    compartment_before: Compartment
    compartment_after: Compartment
    locked: tuple[int, ...] = ()
    # Guard context at fire time (probing rules only); the trace scans use
    # these to decide whether the stability guarantees' premises applied.
    attack_seen: bool = False
    working_seen: bool = False


@dataclass
class SchedulerResult:
    graph: "ProtocolGraph"
    trace: list[MoveRecord]
    quiescent: bool

    @property
    def moves(self) -> int:
        return len(self.trace)


class GraphFormatError(ValueError):
    """Malformed graph or node-state file; carries the offending line."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ProtocolGraph:
    """Id-indexed node collection with symmetric adjacency, no self-loops.

    Ids are arbitrary unsigned integers; internally nodes are stored in
    ascending id order, so index comparisons agree with id comparisons.
    """

    def __init__(self, ids: list[int], edges: set[tuple[int, int]]):
        self.ids = sorted(ids)
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("node ids must be unique")
        if any(i < 0 for i in self.ids):
            raise ValueError("node ids must be unsigned integers")
        self._index = {node_id: k for k, node_id in enumerate(self.ids)}
        n = len(self.ids)

        neigh: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            iu, iv = self._index[u], self._index[v]
            neigh[iu].add(iv)
            neigh[iv].add(iu)
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        for k in range(n):
            self.indptr[k + 1] = self.indptr[k] + len(neigh[k])
        self.indices = np.zeros(int(self.indptr[-1]), dtype=np.int64)
        for k in range(n):
            self.indices[self.indptr[k]:self.indptr[k + 1]] = sorted(neigh[k])

        self.state = np.full(n, PROBING, dtype=np.int8)
        self.comp = np.full(n, COMP_S, dtype=np.int8)
        self.age = np.zeros(n, dtype=np.int64)  # sweeps spent in current state

    # -- construction ------------------------------------------------------

    @classmethod
    def from_edges(cls, edges, extra_nodes=()) -> "ProtocolGraph":
        edge_set = {(int(u), int(v)) for u, v in edges}
        ids = {u for u, _ in edge_set} | {v for _, v in edge_set} | {int(x) for x in extra_nodes}
        return cls(sorted(ids), edge_set)

    @classmethod
    def from_edge_file(cls, path) -> "ProtocolGraph":
        edges = []
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise GraphFormatError(f"expected 'u v', got {line!r}", lineno)
                try:
                    u, v = int(parts[0]), int(parts[1])
                except ValueError:
                    raise GraphFormatError(f"non-integer node id in {line!r}", lineno) from None
                if u < 0 or v < 0:
                    raise GraphFormatError("node ids must be unsigned", lineno)
                if u == v:
                    raise GraphFormatError(f"self-loop on node {u}", lineno)
                edges.append((u, v))
        return cls.from_edges(edges)

    def load_states(self, path) -> None:
        """Apply a per-node initial state file: lines 'id state compartment'."""
        state_names = {s.value: s for s in NodeState}
        comp_names = {c.value.upper(): c for c in Compartment}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 3:
                    raise GraphFormatError(f"expected 'id state compartment', got {line!r}", lineno)
                try:
                    node_id = int(parts[0])
                except ValueError:
                    raise GraphFormatError(f"non-integer node id {parts[0]!r}", lineno) from None
                if node_id not in self._index:
                    raise GraphFormatError(f"unknown node id {node_id}", lineno)
                state = state_names.get(parts[1].lower())
                if state is None:
                    raise GraphFormatError(f"unknown state {parts[1]!r}", lineno)
                comp = comp_names.get(parts[2].upper())
                if comp is None:
                    raise GraphFormatError(f"unknown compartment {parts[2]!r}", lineno)
                k = self._index[node_id]
                self.state[k] = _STATE_CODE[state]
                self.comp[k] = _COMP_CODE[comp]

    # -- access ------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.ids)

    def index(self, node_id: int) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id}") from None

    def neighbor_indices(self, k: int) -> np.ndarray:
        return self.indices[self.indptr[k]:self.indptr[k + 1]]

    def neighbors(self, node_id: int) -> frozenset[int]:
        k = self.index(node_id)
        return frozenset(self.ids[j] for j in self.neighbor_indices(k))

    def node(self, node_id: int) -> ProtocolNode:
        k = self.index(node_id)
        return ProtocolNode(node_id, _STATE_FROM[self.state[k]],
                            _COMP_FROM[self.comp[k]], self.neighbors(node_id))

    def set_node(self, node_id: int, state: NodeState | None = None,
                 compartment: Compartment | None = None) -> None:
        k = self.index(node_id)
        if state is not None:
            self.state[k] = _STATE_CODE[state]
            self.age[k] = 0
        if compartment is not None:
            self.comp[k] = _COMP_CODE[compartment]

    def copy(self) -> "ProtocolGraph":
        g = object.__new__(ProtocolGraph)
        g.ids = list(self.ids)
        g._index = dict(self._index)
        g.indptr = self.indptr.copy()
        g.indices = self.indices.copy()
        g.state = self.state.copy()
        g.comp = self.comp.copy()
        g.age = self.age.copy()
        return g


def all_probing(graph: ProtocolGraph, informed_frac: float = 0.0, seed: int = 0) -> None:
    """Default initial configuration: everyone probing and susceptible, with
    a seeded fraction holding the datum."""
    graph.state[:] = PROBING
    graph.comp[:] = COMP_S
    graph.age[:] = 0
    if informed_frac > 0:
        rng = np.random.default_rng(seed)
        graph.comp[rng.random(graph.n) < informed_frac] = COMP_I


# ---------------------------------------------------------------------------
# Guards and single moves (reference implementation)
# ---------------------------------------------------------------------------

def predicates(graph: ProtocolGraph, node_id: int) -> Predicates:
    """The four guard predicates of ``node_id``."""
    k = graph.index(node_id)
    nb = graph.neighbor_indices(k)
    state, comp = graph.state, graph.comp
    return Predicates(
        A=bool(np.any(comp[nb] == COMP_R)),
        W=bool(np.any(state[nb] == WORKING)),
        W_star=bool(np.any((state[nb] == WORKING) & (nb < k))),
        P_star=bool(np.any((state[nb] == PROBING) & (nb < k))),
    )


def enabled_rules(graph: ProtocolGraph, node_id: int) -> frozenset[Rule]:
    k = graph.index(node_id)
    st = graph.state[k]
    if st == SLEEPING or st == LOCKED:
        return frozenset()
    p = predicates(graph, node_id)
    out = set()
    if st == PROBING:
        if p["W"]:
            out.add(Rule.R1)
        if (not p["W"] and not p["P_star"]) or p["A"]:
            out.add(Rule.R2)
    elif st == WORKING and p["W_star"]:
        out.add(Rule.R3)
    return frozenset(out)


def apply_rule(graph: ProtocolGraph, node_id: int, rule: Rule,
               step: int = 0) -> MoveRecord:
    """Execute one enabled rule on the (mutated) graph; guard violations are
    harness bugs and raise."""
    if rule not in enabled_rules(graph, node_id):
        raise ValueError(f"rule {rule.value} is not enabled at node {node_id}")
    k = graph.index(node_id)
    nb = graph.neighbor_indices(k)
    state, comp = graph.state, graph.comp
    sb, cb = _STATE_FROM[state[k]], _COMP_FROM[comp[k]]
    locked: list[int] = []
    attack_seen = working_seen = False
    if state[k] == PROBING:
        attack_seen = bool(np.any(comp[nb] == COMP_R))
        working_seen = bool(np.any(state[nb] == WORKING))

    if rule is Rule.R1:
        if np.any((state[nb] == WORKING) & (comp[nb] == COMP_I)):
            comp[k] = COMP_I
        state[k] = SLEEPING
    elif rule is Rule.R2:
        if np.any(comp[nb] == COMP_R):
            for j in nb:
                if comp[j] == COMP_R and state[j] != LOCKED:
                    state[j] = LOCKED
                    graph.age[j] = 0
                    locked.append(graph.ids[j])
        state[k] = WORKING
    else:
        if comp[k] == COMP_S and np.any(
                (nb < k) & (state[nb] == WORKING) & (comp[nb] == COMP_I)):
            comp[k] = COMP_I
        state[k] = SLEEPING
    graph.age[k] = 0

    return MoveRecord(step, node_id, rule, sb, _STATE_FROM[state[k]],
                      cb, _COMP_FROM[comp[k]], tuple(locked),
                      attack_seen=attack_seen, working_seen=working_seen)


# ---------------------------------------------------------------------------
# Schedulers
# ---------------------------------------------------------------------------

def _run_central(graph: ProtocolGraph, tie_break: TieBreak, seed: int,
                 max_steps: int, step_offset: int) -> SchedulerResult:
    cap = min(max_steps, 2 * graph.n + 2)
    mv_node = np.zeros(cap, dtype=np.int64)
    mv_rule = np.zeros(cap, dtype=np.int8)
    mv_sb = np.zeros(cap, dtype=np.int8)
    mv_sa = np.zeros(cap, dtype=np.int8)
    mv_cb = np.zeros(cap, dtype=np.int8)
    mv_ca = np.zeros(cap, dtype=np.int8)
    mv_flags = np.zeros(cap, dtype=np.int8)
    lk_move = np.zeros(graph.n + 1, dtype=np.int64)
    lk_node = np.zeros(graph.n + 1, dtype=np.int64)
    n_moves, n_locks, quiescent = run_central(
        graph.indptr, graph.indices, graph.state, graph.comp,
        0 if tie_break is TieBreak.LOWEST_ID else 1,
        seed & (2**64 - 1), cap,
        mv_node, mv_rule, mv_sb, mv_sa, mv_cb, mv_ca, mv_flags,
        lk_move, lk_node)

    locks_by_move: dict[int, list[int]] = {}
    for j in range(n_locks):
        locks_by_move.setdefault(int(lk_move[j]), []).append(graph.ids[int(lk_node[j])])
    trace = []
    for j in range(n_moves):
        trace.append(MoveRecord(
            step=step_offset + j,
            node=graph.ids[int(mv_node[j])],
            rule=_RULE_FROM[int(mv_rule[j])],
            state_before=_STATE_FROM[int(mv_sb[j])],
            state_after=_STATE_FROM[int(mv_sa[j])],
            compartment_before=_COMP_FROM[int(mv_cb[j])],
            compartment_after=_COMP_FROM[int(mv_ca[j])],
            locked=tuple(locks_by_move.get(j, ())),
            attack_seen=bool(mv_flags[j] & 1),
            working_seen=bool(mv_flags[j] & 2),
        ))
        graph.age[graph.index(trace[-1].node)] = 0
        for locked_id in trace[-1].locked:
            graph.age[graph.index(locked_id)] = 0
    return SchedulerResult(graph, trace, bool(quiescent))


def _run_synchronous(graph: ProtocolGraph, max_steps: int,
                     step_offset: int) -> SchedulerResult:
    """All enabled nodes move simultaneously on the pre-round snapshot with
    per-node rule priority r1 > r2 > r3; lock writes land last.  Exploratory
    semantics: the move bound is asserted under the central daemon only."""
    trace: list[MoveRecord] = []
    rounds = 0
    while rounds < max_steps:
        snap_state = graph.state.copy()
        snap_comp = graph.comp.copy()
        movers: list[tuple[int, Rule]] = []
        for node_id in graph.ids:
            rules = _enabled_on(graph, snap_state, snap_comp, node_id)
            if rules:
                movers.append((node_id, rules[0]))
        if not movers:
            return SchedulerResult(graph, trace, True)
        lock_targets: set[int] = set()
        for node_id, rule in movers:
            k = graph.index(node_id)
            nb = graph.neighbor_indices(k)
            sb, cb = _STATE_FROM[snap_state[k]], _COMP_FROM[snap_comp[k]]
            attack_seen = bool(np.any(snap_comp[nb] == COMP_R))
            working_seen = bool(np.any(snap_state[nb] == WORKING))
            locked: list[int] = []
            if rule is Rule.R1:
                if np.any((snap_state[nb] == WORKING) & (snap_comp[nb] == COMP_I)):
                    graph.comp[k] = COMP_I
                graph.state[k] = SLEEPING
            elif rule is Rule.R2:
                for j in nb:
                    if snap_comp[j] == COMP_R and int(j) not in lock_targets:
                        lock_targets.add(int(j))
                        locked.append(graph.ids[j])
                graph.state[k] = WORKING
            else:
                if snap_comp[k] == COMP_S and np.any(
                        (nb < k) & (snap_state[nb] == WORKING) & (snap_comp[nb] == COMP_I)):
                    graph.comp[k] = COMP_I
                graph.state[k] = SLEEPING
            graph.age[k] = 0
            trace.append(MoveRecord(step_offset + rounds, node_id, rule, sb,
                                    _STATE_FROM[graph.state[k]], cb,
                                    _COMP_FROM[graph.comp[k]], tuple(locked),
                                    attack_seen=attack_seen,
                                    working_seen=working_seen))
        for j in lock_targets:
            graph.state[j] = LOCKED
            graph.age[j] = 0
        rounds += 1
    return SchedulerResult(graph, trace, False)


def _enabled_on(graph: ProtocolGraph, state: np.ndarray, comp: np.ndarray,
                node_id: int) -> list[Rule]:
    """Enabled rules evaluated on a snapshot, in r1 > r2 > r3 priority order."""
    k = graph.index(node_id)
    nb = graph.neighbor_indices(k)
    st = state[k]
    out: list[Rule] = []
    if st == PROBING:
        w = bool(np.any(state[nb] == WORKING))
        a = bool(np.any(comp[nb] == COMP_R))
        pst = bool(np.any((state[nb] == PROBING) & (nb < k)))
        if w:
            out.append(Rule.R1)
        if (not w and not pst) or a:
            out.append(Rule.R2)
    elif st == WORKING:
        if np.any((state[nb] == WORKING) & (nb < k)):
            out.append(Rule.R3)
    return out


def run_scheduler(graph: ProtocolGraph, daemon: Daemon = Daemon.CENTRAL,
                  tie_break: TieBreak = TieBreak.LOWEST_ID,
                  max_steps: int | None = None, seed: int = 0,
                  step_offset: int = 0) -> SchedulerResult:
    """Run rules until quiescence or ``max_steps``; mutates ``graph``.

    ``quiescent=False`` in the result distinguishes step exhaustion from
    real quiescence.
    """
    if max_steps is None:
        max_steps = 4 * graph.n + 16
    if daemon is Daemon.CENTRAL:
        return _run_central(graph, tie_break, seed, max_steps, step_offset)
    return _run_synchronous(graph, max_steps, step_offset)


# ---------------------------------------------------------------------------
# State predicates over the whole graph
# ---------------------------------------------------------------------------

def check_legitimate(graph: ProtocolGraph) -> tuple[bool, list[int]]:
    """Every working node must hold compartment S or I."""
    bad = np.nonzero((graph.state == WORKING) & (graph.comp == COMP_R))[0]
    return bad.size == 0, [graph.ids[k] for k in bad]


def classify_nodes(graph: ProtocolGraph) -> dict[int, NodeClass]:
    """Independent / dominated / locked partition (complete at settled
    quiescence; Unclassified may appear mid-execution)."""
    out: dict[int, NodeClass] = {}
    state = graph.state
    for k, node_id in enumerate(graph.ids):
        nb = graph.neighbor_indices(k)
        has_working = bool(np.any(state[nb] == WORKING))
        if state[k] == WORKING:
            out[node_id] = (NodeClass.INDEPENDENT if not has_working
                            else NodeClass.UNCLASSIFIED)
        elif has_working:
            out[node_id] = NodeClass.DOMINATED
        elif state[k] == LOCKED:
            out[node_id] = NodeClass.LOCKED_CLASS
        else:
            out[node_id] = NodeClass.UNCLASSIFIED
    return out


# ---------------------------------------------------------------------------
# Attacker and wake/heal plumbing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttackResult:
    attacked: tuple[int, ...]
    skipped: tuple[int, ...]


def inject_attack(graph: ProtocolGraph, targets=None, rate: float | None = None,
                  seed: int = 0, require_neighbors: bool = False) -> AttackResult:
    """Destroy the datum on selected informed nodes (compartment -> R).

    Either explicit ``targets`` or a per-node probability ``rate`` over the
    I-compartment population.  Non-I targets are skipped (reported, not an
    error).  ``require_neighbors`` excludes degree-0 nodes, which no probing
    neighbor could ever quarantine.
    """
    if (targets is None) == (rate is None):
        raise ValueError("give exactly one of targets or rate")
    if targets is None:
        rng = np.random.default_rng(seed)
        candidates = [graph.ids[k] for k in np.nonzero(graph.comp == COMP_I)[0]]
        targets = [i for i in candidates if rng.random() < rate]
    attacked, skipped = [], []
    for node_id in targets:
        k = graph.index(node_id)
        degree = graph.indptr[k + 1] - graph.indptr[k]
        if graph.comp[k] == COMP_I and not (require_neighbors and degree == 0):
            graph.comp[k] = COMP_R
            attacked.append(node_id)
        else:
            skipped.append(node_id)
    return AttackResult(tuple(attacked), tuple(skipped))


@dataclass(frozen=True)
class SweepResult:
    healed: tuple[int, ...]
    woken: tuple[int, ...]


def heal_and_wake(graph: ProtocolGraph, heal_after: int = 1,
                  probe_after: int | None = 1) -> SweepResult:
    """One timer sweep: locked nodes that sat through ``heal_after`` sweeps
    re-enter sleeping with a fresh S compartment; sleeping nodes that sat
    through ``probe_after`` sweeps wake to probing.  ``probe_after=None``
    disables wake-ups entirely."""
    if heal_after < 0 or (probe_after is not None and probe_after < 0):
        raise ValueError("timers must be non-negative")
    healed, woken = [], []
    for k in range(graph.n):
        st = graph.state[k]
        if st == LOCKED:
            if graph.age[k] >= heal_after:
                graph.state[k] = SLEEPING
                graph.comp[k] = COMP_S
                graph.age[k] = 0
                healed.append(graph.ids[k])
            else:
                graph.age[k] += 1
        elif st == SLEEPING and probe_after is not None:
            if graph.age[k] >= probe_after:
                graph.state[k] = PROBING
                graph.age[k] = 0
                woken.append(graph.ids[k])
            else:
                graph.age[k] += 1
    return SweepResult(tuple(healed), tuple(woken))


# ---------------------------------------------------------------------------
# Experiment harness: converge, attack, recover; full event log for scans
# ---------------------------------------------------------------------------

@dataclass
class Checkpoint:
    label: str
    step: int
    state: np.ndarray
    comp: np.ndarray


@dataclass
class ExperimentLog:
    """Everything the trace scanners need about one experiment."""

    graph: ProtocolGraph
    trace: list[MoveRecord] = field(default_factory=list)
    wake_steps: dict[int, list[int]] = field(default_factory=dict)
    attack_steps: list[int] = field(default_factory=list)
    r_intervals: dict[int, list[list[int | None]]] = field(default_factory=dict)
    checkpoints: list[Checkpoint] = field(default_factory=list)
    initial_moves: int = 0
    cycles: int = 0
    completed: bool = True

    def _open_r(self, node_id: int, step: int) -> None:
        self.r_intervals.setdefault(node_id, []).append([step, None])

    def _close_r(self, node_id: int, step: int) -> None:
        spans = self.r_intervals.get(node_id)
        if spans and spans[-1][1] is None:
            spans[-1][1] = step

    def r_tainted(self, node_ids, lo: int, hi: int) -> bool:
        """Does any node of ``node_ids`` hold compartment R at some step in
        (lo, hi]?"""
        last = self.trace[-1].step if self.trace else lo
        for node_id in node_ids:
            for start, end in self.r_intervals.get(node_id, ()):
                span_end = last + 1 if end is None else end
                if start <= hi and span_end > lo:
                    return True
        return False


def _absorb(log: ExperimentLog, result: SchedulerResult) -> None:
    for mv in result.trace:
        if mv.compartment_before is Compartment.R and mv.compartment_after is Compartment.I:
            log._close_r(mv.node, mv.step)
        log.trace.append(mv)


def run_protocol_experiment(
    graph: ProtocolGraph,
    tie_break: TieBreak = TieBreak.LOWEST_ID,
    seed: int = 0,
    attack_rate: float | None = None,
    attack_targets=None,
    heal_after: int = 1,
    probe_after: int = 1,
    max_cycles: int = 200,
) -> ExperimentLog:
    """Converge from the current configuration, optionally inject an attack,
    then run wake/heal cycles until the network settles again.

    Each rule execution and each timer sweep occupies one global step, so the
    move trace and the wake/heal/attack events are totally ordered.  The
    recovery loop stops once no node is locked and a full wake round leaves
    compartments and the worker set unchanged.
    """
    log = ExperimentLog(graph)
    for k in np.nonzero(graph.comp == COMP_R)[0]:
        log._open_r(graph.ids[k], 0)

    step = 0
    result = run_scheduler(graph, Daemon.CENTRAL, tie_break, seed=seed, step_offset=step)
    if not result.quiescent:
        raise RuntimeError("initial convergence exhausted the step budget")
    _absorb(log, result)
    step += result.moves
    log.initial_moves = result.moves
    log.checkpoints.append(Checkpoint("converged", step, graph.state.copy(), graph.comp.copy()))

    if attack_rate is None and attack_targets is None:
        log.checkpoints.append(Checkpoint("settled-final", step,
                                          graph.state.copy(), graph.comp.copy()))
        return log

    attack = inject_attack(graph, targets=attack_targets, rate=attack_rate,
                           seed=seed + 1, require_neighbors=True)
    log.attack_steps.append(step)
    for node_id in attack.attacked:
        log._open_r(node_id, step)
    step += 1

    stable = 0
    signature = None
    for cycle in range(max_cycles):
        sweep = heal_and_wake(graph, heal_after, probe_after)
        for node_id in sweep.healed:
            log._close_r(node_id, step)
        for node_id in sweep.woken:
            log.wake_steps.setdefault(node_id, []).append(step)
        step += 1

        result = run_scheduler(graph, Daemon.CENTRAL, tie_break,
                               seed=seed + 2 + cycle, step_offset=step)
        if not result.quiescent:
            raise RuntimeError("recovery episode exhausted the step budget")
        _absorb(log, result)
        step += result.moves
        log.cycles = cycle + 1

        sig = (graph.comp.tobytes(), (graph.state == WORKING).tobytes())
        any_locked = bool(np.any(graph.state == LOCKED))
        if any_locked or sig != signature:
            stable = 0
        else:
            stable += 1
        signature = sig
        if not any_locked and stable >= probe_after + 1:
            break
    else:
        log.completed = False

    log.checkpoints.append(Checkpoint("settled-final", step,
                                      graph.state.copy(), graph.comp.copy()))
    return log


# ---------------------------------------------------------------------------
# Trace scans (testable restatements of the convergence guarantees)
# ---------------------------------------------------------------------------

def scan_move_bound(log: ExperimentLog) -> list[str]:
    """Initial attack-free convergence uses at most 2n moves."""
    bound = 2 * log.graph.n
    if log.initial_moves > bound:
        return [f"initial convergence took {log.initial_moves} moves > 2n = {bound}"]
    return []


def _moves_by_node(log: ExperimentLog) -> dict[int, list[MoveRecord]]:
    out: dict[int, list[MoveRecord]] = {}
    for mv in log.trace:
        out.setdefault(mv.node, []).append(mv)
    return out


def _attack_r2_steps(log: ExperimentLog) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {}
    for mv in log.trace:
        if mv.rule is Rule.R2 and mv.attack_seen:
            out.setdefault(mv.node, []).append(mv.step)
    return out


def _attack_exempt(log: ExperimentLog, a_steps: dict[int, list[int]],
                   node_id: int, lo: int, hi: int) -> bool:
    """Attack influence on ``node_id`` during (lo, hi]: a compartment-R node
    in its closed neighborhood, or a quarantine (A-branch) r2 fired there.
    Where this holds the stability guarantees do not apply."""
    closed = set(log.graph.neighbors(node_id)) | {node_id}
    if log.r_tainted(closed, lo, hi):
        return True
    for u in closed:
        if any(lo < s <= hi for s in a_steps.get(u, ())):
            return True
    return False


def scan_promotion_stability(log: ExperimentLog) -> list[str]:
    """A node promoted by an r2 that saw no working neighbor stays put until
    its next probing activation, except under attack influence."""
    violations = []
    by_node = _moves_by_node(log)
    a_steps = _attack_r2_steps(log)
    for node_id, moves in by_node.items():
        wakes = log.wake_steps.get(node_id, ())
        for j, mv in enumerate(moves):
            if mv.rule is not Rule.R2 or mv.working_seen:
                continue
            later_wakes = [w for w in wakes if w > mv.step]
            window_end = later_wakes[0] if later_wakes else float("inf")
            for later in moves[j + 1:]:
                if later.step > window_end:
                    break
                if not _attack_exempt(log, a_steps, node_id, mv.step, later.step):
                    violations.append(
                        f"node {node_id} fired r2 at step {mv.step} but moved again "
                        f"at step {later.step} with no attack influence")
    return violations


def scan_neighbor_refresh(log: ExperimentLog) -> list[str]:
    """After i fires r2 (seeing no working neighbor), each neighbor makes at
    most one move while i stays working and before the neighbor's next
    wake-up, and that move is r1 — attack influence exempted."""
    violations = []
    by_node = _moves_by_node(log)
    a_steps = _attack_r2_steps(log)
    for mv in log.trace:
        if mv.rule is not Rule.R2 or mv.working_seen:
            continue
        own_later = [m.step for m in by_node.get(mv.node, ()) if m.step > mv.step]
        own_end = own_later[0] if own_later else float("inf")
        for j in log.graph.neighbors(mv.node):
            wakes = [w for w in log.wake_steps.get(j, ()) if w > mv.step]
            window_end = min(wakes[0] if wakes else float("inf"), own_end)
            in_window = [m for m in by_node.get(j, ())
                         if mv.step < m.step <= window_end]
            live = [m for m in in_window
                    if not _attack_exempt(log, a_steps, j, mv.step, m.step)]
            if len(live) > 1:
                violations.append(
                    f"neighbor {j} of r2-node {mv.node} moved {len(live)} times "
                    f"before its next wake (r2 at step {mv.step})")
            elif live and live[0].rule is not Rule.R1:
                violations.append(
                    f"neighbor {j} of r2-node {mv.node} fired {live[0].rule.value} "
                    f"instead of r1 (step {live[0].step})")
    return violations


def scan_activation_budget(log: ExperimentLog) -> list[str]:
    """Between consecutive probing activations a node executes at most two
    moves; a two-move window is exactly r2-then-r3 in working state; every
    consecutive (r3, r2) pair straddles a probing activation."""
    violations = []
    moves_by_node: dict[int, list[MoveRecord]] = {}
    for mv in log.trace:
        moves_by_node.setdefault(mv.node, []).append(mv)
    for node_id, moves in moves_by_node.items():
        wakes = log.wake_steps.get(node_id, [])
        bounds = [-1] + wakes + [float("inf")]
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            window = [m for m in moves if lo < m.step <= hi] if hi != float("inf") \
                else [m for m in moves if m.step > lo]
            if len(window) > 2:
                violations.append(
                    f"node {node_id} made {len(window)} moves between probing activations")
            elif len(window) == 2:
                first, second = window
                if not (first.rule is Rule.R2 and second.rule is Rule.R3
                        and first.state_after is NodeState.WORKING):
                    violations.append(
                        f"node {node_id} two-move window is "
                        f"({first.rule.value}, {second.rule.value}), not (r2, r3)")
        for prev, nxt in zip(moves[:-1], moves[1:]):
            if prev.rule is Rule.R3 and nxt.rule is Rule.R2:
                # The pair must straddle a wake (r3 puts the node to sleep; r2
                # requires probing again).  A lock/heal interlude can insert
                # extra activations, so "at least one" is the invariant.
                between = [w for w in wakes if prev.step < w <= nxt.step]
                if not between:
                    violations.append(
                        f"node {node_id} fired r3 then r2 with no probing "
                        f"activation in between")
    return violations


def scan_settled_states(log: ExperimentLog) -> list[str]:
    """At the settled checkpoints: no Unclassified node, and every working
    node holds S or I."""
    violations = []
    scratch = log.graph.copy()
    for cp in log.checkpoints:
        scratch.state[:] = cp.state
        scratch.comp[:] = cp.comp
        ok, bad = check_legitimate(scratch)
        if not ok:
            violations.append(f"{cp.label}@{cp.step}: working R nodes {bad}")
        classes = classify_nodes(scratch)
        unclassified = [i for i, c in classes.items() if c is NodeClass.UNCLASSIFIED]
        if unclassified:
            violations.append(f"{cp.label}@{cp.step}: unclassified nodes {unclassified}")
    return violations


def scan_report(log: ExperimentLog) -> dict[str, list[str]]:
    """All scans; empty lists mean the verdicts pass."""
    report = {
        "move-bound": scan_move_bound(log),
        "promotion-stability": scan_promotion_stability(log),
        "neighbor-refresh": scan_neighbor_refresh(log),
        "settled-states": scan_settled_states(log),
        "activation-budget": scan_activation_budget(log),
    }
    if not log.completed:
        report["recovery"] = ["recovery loop hit the cycle cap before settling"]
    return report


def write_move_trace(trace: list[MoveRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,node,rule,state_before,state_after,"
                 "compartment_before,compartment_after\n")
        for mv in trace:
            fh.write(f"{mv.step},{mv.node},{mv.rule.value},{mv.state_before.value},"
                     f"{mv.state_after.value},{mv.compartment_before.value},"
                     f"{mv.compartment_after.value}\n")
