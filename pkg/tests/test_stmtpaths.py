"""Dynamic dependence graph activation, segment discovery, and splicing."""

from __future__ import annotations

from crossflow.methodpaths import MethodFlowPath, PathSet
from crossflow.pipeline import analyze_flows, direct_coverage
from crossflow.simulator import Scenario, all_graph_variants, generate_program, simulate
from crossflow.staticgraph import DepEdge, SourceSinkConfig, StaticDepGraph
from crossflow.stmtpaths import (
    DynDepGraph,
    InletOutletIndex,
    build_ddg,
    find_paths,
    phase2,
    prune_ddg,
    splice_segments,
    summary_counts,
)
from crossflow.trace import EventRecord, MethodId, merge_global, stamp_lamport

from oracles import all_simple_paths


def mid(proc, name):
    return MethodId(proc, "C", name)


def make_graph(nodes, edges, **kw):
    return StaticDepGraph(
        nodes=nodes,
        edges=frozenset(DepEdge(*e) for e in edges),
        icfg_succ=kw.get("icfg", {}),
        entry_points=kw.get("entries", {}),
        send_sites=frozenset(kw.get("sends", ())),
        recv_sites=frozenset(kw.get("recvs", ())),
        guards={s: None for s in nodes},
    )


class TestBuildDdg:
    def setup_method(self):
        m1, m2 = mid("P", "m1"), mid("P", "m2")
        self.m1, self.m2 = m1, m2
        self.graph = make_graph(
            {"a": m1, "b": m2},
            [("inter_adjacent", "a", "b")],
        )
        self.post_graph = make_graph(
            {"a": m1, "b": m2},
            [("inter_posterior", "a", "b")],
        )

    def _traces(self, order):
        raw = {"P": [
            EventRecord("entry", m, seq=i) for i, m in enumerate(order)
        ]}
        traces, _ = stamp_lamport(raw)
        return traces

    def test_never_after_no_edge(self):
        traces = self._traces([self.m2, self.m1])
        ddg = build_ddg(self.post_graph, "a", "b", traces)
        assert not ddg.edges

    def test_adjacent_needs_immediate_succession(self):
        other = mid("P", "other")
        traces = self._traces([self.m1, other, self.m2])
        ddg = build_ddg(self.graph, "a", "b", traces)
        assert ("a", "b") not in ddg.edges
        ddg_post = build_ddg(self.post_graph, "a", "b", traces)
        assert ("a", "b") in ddg_post.edges

    def test_adjacent_activates_when_consecutive(self):
        traces = self._traces([self.m1, self.m2])
        ddg = build_ddg(self.graph, "a", "b", traces)
        assert ("a", "b") in ddg.edges

    def test_unexecuted_source_empty(self):
        traces = self._traces([self.m2])
        assert not build_ddg(self.graph, "a", "b", traces).nodes

    def test_single_method_restricted_to_s_t(self):
        m = mid("P", "solo")
        graph = make_graph(
            {"s": m, "x": m, "t": m, "dead": m},
            [
                ("intra_data", "s", "x"),
                ("intra_data", "x", "t"),
                ("intra_data", "t", "dead"),
            ],
        )
        raw = {"P": [EventRecord("entry", m, seq=0)]}
        traces, _ = stamp_lamport(raw)
        ddg = build_ddg(graph, "s", "t", traces)
        assert ddg.nodes == {"s", "x", "t"}


class TestPruneDdg:
    def _ddg(self):
        m = mid("P", "m")
        return DynDepGraph(
            nodes=frozenset({"s", "x", "t"}),
            edges=frozenset({("s", "x"), ("x", "t")}),
            methods={"s": m, "x": m, "t": m},
        )

    def test_full_coverage_identity(self):
        ddg = self._ddg()
        assert prune_ddg(ddg, {"s", "x", "t"}) == ddg

    def test_zero_coverage_empty(self):
        assert not prune_ddg(self._ddg(), set()).nodes

    def test_bridge_removal(self):
        pruned = prune_ddg(self._ddg(), {"s", "t"})
        assert pruned.nodes == {"s", "t"} and not pruned.edges


class TestFindPaths:
    def test_zero_length_path_when_in_meets_out(self):
        m = mid("P", "m")
        ddg = DynDepGraph(frozenset({"x"}), frozenset(), {"x": m})
        assert find_paths(ddg, {"x"}, {"x"}, {m}) == [("x",)]

    def test_disconnected_empty(self):
        m = mid("P", "m")
        ddg = DynDepGraph(
            frozenset({"a", "b"}), frozenset(), {"a": m, "b": m}
        )
        assert find_paths(ddg, {"a"}, {"b"}, {m}) == []

    def test_diamond_both_branches(self):
        m = mid("P", "m")
        edges = {("s", "l"), ("s", "r"), ("l", "t"), ("r", "t")}
        nodes = frozenset({"s", "l", "r", "t"})
        ddg = DynDepGraph(nodes, frozenset(edges), {n: m for n in nodes})
        got = set(find_paths(ddg, {"s"}, {"t"}, {m}))
        want = all_simple_paths(edges, {"s"}, {"t"}, set(nodes))
        assert got == want == {("s", "l", "t"), ("s", "r", "t")}

    def test_trace_restriction_excludes_other_process(self):
        ma, mb = mid("A", "m"), mid("B", "m")
        nodes = frozenset({"a1", "b1"})
        ddg = DynDepGraph(
            nodes, frozenset({("a1", "b1")}), {"a1": ma, "b1": mb}
        )
        assert find_paths(ddg, {"a1"}, {"b1"}, {ma}) == []


def two_process_fixture():
    """A: src -> send; B: recv -> sink, one message."""
    ma, mb = mid("A", "go"), mid("B", "serve")
    graph = make_graph(
        {"src": ma, "out": ma, "in_": mb, "sink": mb},
        [("intra_data", "src", "out"), ("intra_data", "in_", "sink")],
        sends=["out"],
        recvs=["in_"],
    )
    raw = {
        "A": [
            EventRecord("entry", ma, 0),
            EventRecord("stmt_cover", ma, 1, stmt_id="src"),
            EventRecord("stmt_cover", ma, 2, stmt_id="out"),
            EventRecord("send", ma, 3, msg_id="m0", peer="B", stmt_id="out"),
        ],
        "B": [
            EventRecord("entry", mb, 0),
            EventRecord("stmt_cover", mb, 1, stmt_id="in_"),
            EventRecord("recv", mb, 2, msg_id="m0", peer="A", stmt_id="in_"),
            EventRecord("stmt_cover", mb, 3, stmt_id="sink"),
        ],
    }
    traces, _ = stamp_lamport(raw)
    return graph, traces, ma, mb


class TestSplice:
    def test_two_process_single_junction(self):
        graph, traces, ma, mb = two_process_fixture()
        order = merge_global(traces)
        index = InletOutletIndex.build(traces, {ma, mb})
        spliced = splice_segments(
            [("src", "out")], [], [("in_", "sink")], order, index,
            stmt_methods=dict(graph.nodes),
        )
        assert [p.stmts for p in spliced] == [("src", "out", "in_", "sink")]

    def test_junction_with_intervening_event_rejected(self):
        ma, mb = mid("A", "go"), mid("B", "serve")
        raw = {
            "A": [
                EventRecord("send", ma, 0, msg_id="m0", peer="B", stmt_id="out"),
                EventRecord("send", ma, 1, msg_id="m1", peer="B", stmt_id="out2"),
            ],
            "B": [
                EventRecord("recv", mb, 0, msg_id="m0", peer="A", stmt_id="in_"),
                EventRecord("recv", mb, 1, msg_id="m1", peer="A", stmt_id="in2"),
            ],
        }
        traces, _ = stamp_lamport(raw)
        order = merge_global(traces)
        index = InletOutletIndex.build(traces, {ma, mb})
        # out's recv is not adjacent to out: out2 intervenes in the
        # junction-event subsequence
        spliced = splice_segments(
            [("out",)], [], [("in_",)], order, index,
            stmt_methods={"out": ma, "out2": ma, "in_": mb, "in2": mb},
        )
        assert spliced == []

    def test_three_process_relay_chain(self):
        sc = Scenario("n_tier", seed=2, length=100, tiers=3)
        model = generate_program(sc)
        traces, truth = simulate(model, sc)
        graphs = all_graph_variants(model)
        res = analyze_flows(traces, graphs, model.default_cfg(), mode="sim")
        spliced = res.phase2.interprocess_paths()
        assert spliced
        owner = model.stmt_owner()
        for truth_path in truth.dyn_paths:
            procs = {owner[s].process for s in truth_path}
            if len(procs) == 3:
                assert truth_path in {p.stmts for p in spliced}


class TestPhase2EndToEnd:
    def test_empty_phase1_yields_empty(self):
        graph, traces, ma, mb = two_process_fixture()
        cfg = SourceSinkConfig(frozenset({"src"}), frozenset({"sink"}))
        empty = PathSet(frozenset(), False)
        res = phase2(graph, empty, traces, {"src", "out", "in_", "sink"}, cfg)
        assert res.pairs == ()

    def test_two_process_fixture_end_to_end(self):
        graph, traces, ma, mb = two_process_fixture()
        cfg = SourceSinkConfig(frozenset({"src"}), frozenset({"sink"}))
        p1 = PathSet(frozenset({MethodFlowPath((ma, mb))}), False)
        res = phase2(graph, p1, traces, {"src", "out", "in_", "sink"}, cfg)
        assert res.all_stmt_sequences() == {("src", "out", "in_", "sink")}
        counts = summary_counts(res)
        assert counts["interprocess_paths"] == 1
        assert counts["intra_paths"] == 0

    def test_all_emitted_statements_covered(self):
        for sc in [
            Scenario("client_server", seed=s, length=100) for s in range(4)
        ]:
            model = generate_program(sc)
            traces, _ = simulate(model, sc)
            graphs = all_graph_variants(model)
            res = analyze_flows(traces, graphs, model.default_cfg(), mode="default")
            covered = direct_coverage(traces)
            for seqid in res.phase2.all_stmt_sequences():
                assert set(seqid) <= covered

    def test_ground_truth_paths_emitted(self):
        scenarios = (
            [Scenario("client_server", seed=s, length=90) for s in range(5)]
            + [Scenario("peer_to_peer", seed=s, length=80) for s in range(3)]
            + [Scenario("n_tier", seed=s, length=110, tiers=3) for s in range(3)]
            + [Scenario("n_tier", seed=7, length=140, tiers=4)]
        )
        for sc in scenarios:
            model = generate_program(sc)
            traces, truth = simulate(model, sc)
            graphs = all_graph_variants(model)
            res = analyze_flows(traces, graphs, model.default_cfg(), mode="default")
            emitted = res.phase2.all_stmt_sequences()
            for gt in truth.dyn_paths:
                assert gt in emitted, (sc, gt)

    def test_modes_agree(self):
        scenarios = (
            [Scenario("client_server", seed=s, length=90) for s in range(4)]
            + [Scenario("peer_to_peer", seed=s, length=80) for s in range(2)]
            + [Scenario("n_tier", seed=s, length=100, tiers=3) for s in range(2)]
        )
        for sc in scenarios:
            model = generate_program(sc)
            traces, _ = simulate(model, sc)
            graphs = all_graph_variants(model)
            outs = {
                mode: analyze_flows(traces, graphs, model.default_cfg(), mode=mode)
                for mode in ("default", "sim", "mul")
            }
            base = outs["default"].phase2.all_stmt_sequences()
            assert outs["sim"].phase2.all_stmt_sequences() == base, sc
            assert outs["mul"].phase2.all_stmt_sequences() == base, sc

    def test_coverage_styles_equivalent(self):
        sc = Scenario("client_server", seed=2, length=120)
        model = generate_program(sc)
        traces, _ = simulate(model, sc)
        graphs = all_graph_variants(model)
        a = analyze_flows(traces, graphs, model.default_cfg(), coverage_style="direct")
        b = analyze_flows(traces, graphs, model.default_cfg(), coverage_style="branches")
        assert a.phase2.all_stmt_sequences() == b.phase2.all_stmt_sequences()

    def test_strict_splice_is_at_most_default(self):
        # the all-events junction rule can only reject more concatenations
        for sc in [
            Scenario("client_server", seed=0, length=90),
            Scenario("n_tier", seed=2, length=100, tiers=3),
        ]:
            model = generate_program(sc)
            traces, _ = simulate(model, sc)
            graphs = all_graph_variants(model)
            loose = analyze_flows(traces, graphs, model.default_cfg())
            strict = analyze_flows(
                traces, graphs, model.default_cfg(), strict_splice=True
            )
            loose_inter = {p.stmts for p in loose.phase2.interprocess_paths()}
            strict_inter = {p.stmts for p in strict.phase2.interprocess_paths()}
            assert strict_inter <= loose_inter

    def test_strict_splice_two_process_junction_survives(self):
        graph, traces, ma, mb = two_process_fixture()
        order = merge_global(traces)
        index = InletOutletIndex.build(traces, {ma, mb})
        spliced = splice_segments(
            [("src", "out")], [], [("in_", "sink")], order, index,
            strict=True, stmt_methods=dict(graph.nodes),
        )
        # the recv is the very next event after the send in the merged order
        assert [p.stmts for p in spliced] == [("src", "out", "in_", "sink")]
