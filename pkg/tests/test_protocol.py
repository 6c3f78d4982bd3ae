"""Protocol rule, scheduler and verification-harness tests."""

import itertools

import numpy as np
import pytest

from uwsnsim._kernels import _pure
from uwsnsim.protocol import (
    Compartment,
    Daemon,
    GraphFormatError,
    NodeClass,
    NodeState,
    ProtocolGraph,
    Rule,
    TieBreak,
    all_probing,
    apply_rule,
    check_legitimate,
    classify_nodes,
    enabled_rules,
    heal_and_wake,
    inject_attack,
    predicates,
    run_protocol_experiment,
    run_scheduler,
    scan_report,
    write_move_trace,
)

S, I, R = Compartment.S, Compartment.I, Compartment.R
W, P, SL, L = (NodeState.WORKING, NodeState.PROBING,
               NodeState.SLEEPING, NodeState.LOCKED)


def make_graph(edges, nodes, states):
    """states: {id: (NodeState, Compartment)}"""
    g = ProtocolGraph.from_edges(edges, extra_nodes=nodes)
    for node_id, (st, comp) in states.items():
        g.set_node(node_id, state=st, compartment=comp)
    return g


def random_graph(rng, n_max=50, id_space=4096):
    n = int(rng.integers(2, n_max + 1))
    p = rng.uniform(0.05, 0.5)
    mask = rng.random((n, n)) < p
    ids = rng.permutation(id_space)[:n]
    edges = [(int(ids[u]), int(ids[v]))
             for u in range(n) for v in range(u + 1, n) if mask[u, v]]
    return ProtocolGraph.from_edges(edges, extra_nodes=[int(x) for x in ids])


# ---------------------------------------------------------------------------
# predicates / enabled_rules / apply_rule
# ---------------------------------------------------------------------------

def test_predicates_isolated_node():
    g = make_graph([], [7], {7: (P, S)})
    assert dict(predicates(g, 7)) == {"A": False, "W": False,
                                      "W_star": False, "P_star": False}


def test_predicates_working_and_probing_neighbors():
    g = make_graph([(1, 2)], [1, 2], {1: (W, S), 2: (P, S)})
    p2 = predicates(g, 2)
    assert p2["W"] and p2["W_star"] and not p2["P_star"]
    g2 = make_graph([(1, 2)], [1, 2], {1: (P, S), 2: (P, S)})
    assert not predicates(g2, 1)["P_star"]
    assert predicates(g2, 2)["P_star"]


def test_predicates_unknown_id():
    g = make_graph([], [1], {})
    with pytest.raises(KeyError):
        predicates(g, 99)


def test_enabled_rules_spec_examples():
    g = make_graph([], [3], {3: (P, S)})
    assert enabled_rules(g, 3) == frozenset({Rule.R2})

    g = make_graph([(1, 2)], [1, 2], {1: (W, S), 2: (P, S)})
    assert enabled_rules(g, 2) == frozenset({Rule.R1})
    g.set_node(1, compartment=R)  # now A(2) holds as well
    assert enabled_rules(g, 2) == frozenset({Rule.R1, Rule.R2})

    g = make_graph([(1, 2)], [1, 2], {1: (SL, S), 2: (L, R)})
    assert enabled_rules(g, 1) == frozenset()
    assert enabled_rules(g, 2) == frozenset()


def test_enabled_rules_brute_force_over_star_configurations():
    # Center node 5 with neighbors 1 and 9 (one lower, one higher id):
    # enumerate every state/compartment combination and compare against the
    # guard formulas evaluated directly.
    states = list(NodeState)
    comps = list(Compartment)
    for st_c, cp_c, st_a, cp_a, st_b, cp_b in itertools.product(
            states, comps, states, comps, states, comps):
        g = make_graph([(5, 1), (5, 9)], [1, 5, 9],
                       {5: (st_c, cp_c), 1: (st_a, cp_a), 9: (st_b, cp_b)})
        got = enabled_rules(g, 5)
        a = cp_a is R or cp_b is R
        w = st_a is W or st_b is W
        p_star = st_a is P  # only node 1 has lower id than 5
        w_star = st_a is W
        expected = set()
        if st_c is P:
            if w:
                expected.add(Rule.R1)
            if (not w and not p_star) or a:
                expected.add(Rule.R2)
        elif st_c is W and w_star:
            expected.add(Rule.R3)
        assert got == frozenset(expected)


def test_apply_rule_r1_transfers_datum():
    g = make_graph([(1, 2)], [1, 2], {1: (W, I), 2: (P, S)})
    mv = apply_rule(g, 2, Rule.R1)
    assert g.node(2).state is SL and g.node(2).compartment is I
    assert mv.rule is Rule.R1 and mv.compartment_after is I
    # No informed working witness: datum stays put.
    g2 = make_graph([(1, 2)], [1, 2], {1: (W, S), 2: (P, S)})
    apply_rule(g2, 2, Rule.R1)
    assert g2.node(2).compartment is S


def test_apply_rule_r2_locks_attacked_neighbors():
    g = make_graph([(1, 2)], [1, 2], {1: (P, S), 2: (SL, R)})
    mv = apply_rule(g, 1, Rule.R2)
    assert g.node(1).state is W
    assert g.node(2).state is L
    assert mv.locked == (2,)
    assert mv.attack_seen and not mv.working_seen


def test_apply_rule_r3_keeps_compartment_without_informed_witness():
    g = make_graph([(1, 2)], [1, 2], {1: (W, S), 2: (W, S)})
    mv = apply_rule(g, 2, Rule.R3)
    assert g.node(2).state is SL and g.node(2).compartment is S
    assert mv.rule is Rule.R3
    # With a lower-id informed working witness the datum replicates.
    g2 = make_graph([(1, 2)], [1, 2], {1: (W, I), 2: (W, S)})
    apply_rule(g2, 2, Rule.R3)
    assert g2.node(2).compartment is I


def test_apply_rule_rejects_disabled_rule():
    g = make_graph([], [3], {3: (SL, S)})
    with pytest.raises(ValueError, match="not enabled"):
        apply_rule(g, 3, Rule.R1)


# ---------------------------------------------------------------------------
# run_scheduler
# ---------------------------------------------------------------------------

def test_all_sleeping_quiesces_in_zero_moves():
    g = make_graph([(1, 2), (2, 3)], [1, 2, 3],
                   {1: (SL, S), 2: (SL, S), 3: (SL, S)})
    res = run_scheduler(g)
    assert res.moves == 0 and res.quiescent


def test_path3_hand_trace():
    g = ProtocolGraph.from_edges([(1, 2), (2, 3)])
    all_probing(g)
    res = run_scheduler(g, tie_break=TieBreak.LOWEST_ID)
    got = [(mv.node, mv.rule) for mv in res.trace]
    assert got == [(1, Rule.R2), (2, Rule.R1), (3, Rule.R2)]
    assert res.quiescent and res.moves == 3 <= 2 * 3
    assert check_legitimate(g)[0]


def exhaustive_serializations(graph):
    """Every central-daemon serialization (adversarial daemon oracle).

    Yields (moves, final graph) for every maximal execution.
    """
    stack = [(graph, 0)]
    while stack:
        g, moves = stack.pop()
        choices = []
        for node_id in g.ids:
            for rule in enabled_rules(g, node_id):
                choices.append((node_id, rule))
        if not choices:
            yield moves, g
            continue
        for node_id, rule in choices:
            g2 = g.copy()
            apply_rule(g2, node_id, rule)
            stack.append((g2, moves + 1))


def connected_edge_masks(n):
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        adj = [0] * n
        for bit, (u, v) in enumerate(pairs):
            if mask >> bit & 1:
                adj[u] |= 1 << v
                adj[v] |= 1 << u
        seen = 1
        frontier = [0]
        while frontier:
            u = frontier.pop()
            rest = adj[u] & ~seen
            while rest:
                v = (rest & -rest).bit_length() - 1
                seen |= 1 << v
                frontier.append(v)
                rest &= rest - 1
        if seen == (1 << n) - 1:
            yield [(u, v) for bit, (u, v) in enumerate(pairs) if mask >> bit & 1]


def test_every_serialization_converges_within_2n_legitimate():
    # Adversarial daemon over every connected graph with n <= 4, from the
    # all-probing configuration: any order of enabled moves quiesces within
    # 2n moves in a legitimate, fully classified state.
    for n in range(1, 5):
        for edges in connected_edge_masks(n):
            base = ProtocolGraph.from_edges(edges, extra_nodes=range(n))
            all_probing(base)
            for moves, final in exhaustive_serializations(base):
                assert moves <= 2 * n
                assert check_legitimate(final)[0]
                classes = classify_nodes(final)
                assert NodeClass.UNCLASSIFIED not in classes.values()


def test_scheduler_matches_reference_replay():
    # The kernel-backed central daemon must agree move for move with a
    # pure-python replay built from enabled_rules/apply_rule and the same
    # tie-break logic.
    rng = np.random.default_rng(10)
    for trial in range(40):
        g = random_graph(rng, n_max=25)
        all_probing(g, informed_frac=0.4, seed=trial)
        if trial % 3 == 0:
            inject_attack(g, rate=0.5, seed=trial)
        tie = TieBreak.LOWEST_ID if trial % 2 == 0 else TieBreak.SEEDED_RANDOM
        ref = g.copy()
        res = run_scheduler(g, tie_break=tie, seed=trial)

        replay = []
        rng_state = trial & (2**64 - 1)
        while True:
            enabled = [nid for nid in ref.ids if enabled_rules(ref, nid)]
            if not enabled:
                break
            if tie is TieBreak.LOWEST_ID:
                node_id = enabled[0]
            else:
                rng_state, draw = _pure._splitmix64(rng_state)
                node_id = enabled[draw % len(enabled)]
            rules = enabled_rules(ref, node_id)
            p = predicates(ref, node_id)
            if ref.node(node_id).state is P:
                rule = Rule.R2 if p["A"] else (Rule.R1 if Rule.R1 in rules else Rule.R2)
            else:
                rule = Rule.R3
            replay.append(apply_rule(ref, node_id, rule, step=len(replay)))

        assert [(m.node, m.rule, m.locked) for m in res.trace] == \
               [(m.node, m.rule, m.locked) for m in replay]
        assert np.array_equal(g.state, ref.state)
        assert np.array_equal(g.comp, ref.comp)
        assert res.quiescent


def test_scheduler_reports_exhaustion_distinctly():
    g = ProtocolGraph.from_edges([(1, 2), (2, 3)])
    all_probing(g)
    res = run_scheduler(g, max_steps=1)
    assert not res.quiescent and res.moves == 1


def test_synchronous_daemon_quiesces_legitimately():
    rng = np.random.default_rng(11)
    for trial in range(30):
        g = random_graph(rng, n_max=20)
        all_probing(g, informed_frac=0.3, seed=trial)
        res = run_scheduler(g, daemon=Daemon.SYNCHRONOUS)
        assert res.quiescent
        assert check_legitimate(g)[0]


def test_large_random_graph_move_bound():
    rng = np.random.default_rng(12)
    n = 10_000
    g_edges = []
    p = 5.0 / n
    for u in range(n):
        hits = np.nonzero(rng.random(n - u - 1) < p)[0]
        g_edges.extend((u, u + 1 + int(h)) for h in hits)
    g = ProtocolGraph.from_edges(g_edges, extra_nodes=range(n))
    all_probing(g)
    res = run_scheduler(g, tie_break=TieBreak.SEEDED_RANDOM, seed=99)
    assert res.quiescent
    assert res.moves <= 2 * n
    assert check_legitimate(g)[0]


# ---------------------------------------------------------------------------
# classification, attack, heal
# ---------------------------------------------------------------------------

def test_classify_nodes_examples():
    g = make_graph([(1, 2), (2, 3)], [1, 2, 3],
                   {1: (W, S), 2: (SL, S), 3: (P, S)})
    classes = classify_nodes(g)
    assert classes[1] is NodeClass.INDEPENDENT
    assert classes[2] is NodeClass.DOMINATED
    assert classes[3] is NodeClass.UNCLASSIFIED  # mid-execution is fine
    g2 = make_graph([(1, 2)], [1, 2], {1: (L, R), 2: (SL, S)})
    assert classify_nodes(g2)[1] is NodeClass.LOCKED_CLASS


def test_check_legitimate():
    empty = ProtocolGraph.from_edges([])
    assert check_legitimate(empty) == (True, [])
    g = make_graph([], [4], {4: (W, R)})
    ok, bad = check_legitimate(g)
    assert not ok and bad == [4]


def test_inject_attack_only_hits_informed():
    g = make_graph([(1, 2)], [1, 2], {1: (W, I), 2: (W, S)})
    res = inject_attack(g, targets=[1, 2])
    assert res.attacked == (1,) and res.skipped == (2,)
    assert g.node(1).compartment is R
    res2 = inject_attack(g, targets=[])
    assert res2.attacked == () and g.node(2).compartment is S
    g3 = make_graph([(1, 2)], [1, 2], {1: (W, I), 2: (SL, I)})
    res3 = inject_attack(g3, rate=1.0, seed=0)
    assert set(res3.attacked) == {1, 2}


def test_attacked_node_gets_locked_by_probing_neighbor():
    g = make_graph([(1, 2)], [1, 2], {1: (P, S), 2: (W, I)})
    inject_attack(g, targets=[2])
    res = run_scheduler(g)
    assert g.node(2).state is L
    assert any(mv.rule is Rule.R2 and 2 in mv.locked for mv in res.trace)
    assert check_legitimate(g)[0]


def test_heal_and_wake_timers():
    g = make_graph([(1, 2)], [1, 2], {1: (L, R), 2: (SL, S)})
    sweep = heal_and_wake(g, heal_after=0, probe_after=None)
    assert sweep.healed == (1,)
    assert g.node(1).state is SL and g.node(1).compartment is S
    assert g.node(2).state is SL  # wake-ups disabled
    # probe_after=1: first sweep ages, second wakes.
    g2 = make_graph([], [5], {5: (SL, S)})
    assert heal_and_wake(g2, probe_after=1).woken == ()
    assert heal_and_wake(g2, probe_after=1).woken == (5,)
    assert g2.node(5).state is P


def test_full_attack_heal_cycle_restores_legitimacy():
    rng = np.random.default_rng(21)
    for trial in range(100):
        g = random_graph(rng, n_max=30)
        all_probing(g, informed_frac=0.5, seed=trial)
        log = run_protocol_experiment(g, seed=trial, attack_rate=0.6)
        assert log.completed
        report = scan_report(log)
        assert not any(report.values()), report
        assert check_legitimate(g)[0]
        assert NodeClass.UNCLASSIFIED not in classify_nodes(g).values()
        # No rule ever sets a compartment to R; only the attacker does.
        for mv in log.trace:
            assert not (mv.compartment_before is not R
                        and mv.compartment_after is R)


def test_trace_scans_both_tie_breaks_random_corpus():
    rng = np.random.default_rng(22)
    for trial in range(200):
        g = random_graph(rng)
        tie = TieBreak.LOWEST_ID if trial % 2 == 0 else TieBreak.SEEDED_RANDOM
        all_probing(g, informed_frac=float(rng.uniform(0.1, 0.9)), seed=trial)
        log = run_protocol_experiment(g, tie_break=tie, seed=trial,
                                      attack_rate=float(rng.uniform(0.0, 1.0)))
        report = scan_report(log)
        assert not any(report.values()), (trial, report)


# ---------------------------------------------------------------------------
# graph I/O
# ---------------------------------------------------------------------------

def test_edge_file_roundtrip(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("# comment\n1 2\n2 3\n\n10 1\n")
    g = ProtocolGraph.from_edge_file(path)
    assert g.n == 4
    assert g.neighbors(1) == frozenset({2, 10})


def test_edge_file_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1 2\n1 2 3\n")
    with pytest.raises(GraphFormatError, match="line 2"):
        ProtocolGraph.from_edge_file(path)
    path.write_text("1 1\n")
    with pytest.raises(GraphFormatError, match="self-loop"):
        ProtocolGraph.from_edge_file(path)
    path.write_text("a b\n")
    with pytest.raises(GraphFormatError, match="non-integer"):
        ProtocolGraph.from_edge_file(path)


def test_state_file(tmp_path):
    gpath = tmp_path / "g.txt"
    gpath.write_text("1 2\n")
    spath = tmp_path / "init.txt"
    spath.write_text("1 working I\n2 sleeping S\n")
    g = ProtocolGraph.from_edge_file(gpath)
    g.load_states(spath)
    assert g.node(1).state is W and g.node(1).compartment is I
    assert g.node(2).state is SL
    spath.write_text("7 working I\n")
    with pytest.raises(GraphFormatError, match="unknown node"):
        g.load_states(spath)


def test_move_trace_csv(tmp_path):
    g = ProtocolGraph.from_edges([(1, 2), (2, 3)])
    all_probing(g)
    res = run_scheduler(g)
    path = tmp_path / "trace.csv"
    write_move_trace(res.trace, path)
    lines = path.read_text().splitlines()
    assert lines[0] == ("step,node,rule,state_before,state_after,"
                        "compartment_before,compartment_after")
    assert lines[1] == "0,1,r2,probing,working,S,S"
