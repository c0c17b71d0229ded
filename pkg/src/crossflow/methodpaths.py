"""Method-level information flow paths (pre-analysis phase).

For each executed source-enclosing method ``q`` the analysis computes its
dynamic dependence set ``DS(q)`` from the happens-before approximation: a
local method joins when q's first entry does not postdate its last event, and
a remote method joins when the remote process received its first
origin-influenced message inside q's span.  Paths are then every duplicate-free
sequence of DS(q) members from q to a sink-enclosing method whose pairwise
first-entry/last-event ordering is consistent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .trace import (
    MethodId,
    ProcessTrace,
    influenced_recv_ts,
    method_spans,
)

DEFAULT_PATH_LIMIT = 16
DEFAULT_MAX_PATHS = 20000
DEFAULT_WORK_BUDGET = 400000


@dataclass(frozen=True)
class DependenceSet:
    root: MethodId
    members: frozenset[MethodId]


@dataclass(frozen=True)
class MethodFlowPath:
    methods: tuple[MethodId, ...]

    @property
    def source_method(self) -> MethodId:
        return self.methods[0]

    @property
    def sink_method(self) -> MethodId:
        return self.methods[-1]

    def render(self) -> str:
        return " -> ".join(m.qualified() for m in self.methods)


@dataclass(frozen=True)
class PathSet:
    paths: frozenset[MethodFlowPath]
    truncated: bool


def method_ds(
    q: MethodId,
    traces: Mapping[str, ProcessTrace],
    spans: Optional[Mapping[MethodId, tuple[int, int]]] = None,
    influenced: Optional[Mapping[tuple[str, str], int]] = None,
) -> DependenceSet:
    """Forward impact set of q: methods whose execution may depend on it.

    An unexecuted q yields the empty set.  Remote membership uses only the
    first influenced message timestamp per process pair; influence follows
    message chains transitively.
    """
    spans = method_spans(traces) if spans is None else spans
    if q not in spans:
        return DependenceSet(q, frozenset())
    influenced = influenced_recv_ts(traces) if influenced is None else influenced
    entry_ts = spans[q][0]
    members = {
        m for m, (_, lr) in spans.items()
        if m.process == q.process and entry_ts <= lr
    }
    for proc in traces:
        if proc == q.process:
            continue
        t = influenced.get((proc, q.process))
        if t is None or t < entry_ts:
            continue
        for m, (_, lr) in spans.items():
            if m.process == proc and t <= lr:
                members.add(m)
    return DependenceSet(q, frozenset(members))


def method_level_paths(
    traces: Mapping[str, ProcessTrace],
    source_methods: Iterable[MethodId],
    sink_methods: Iterable[MethodId],
    path_limit: int = DEFAULT_PATH_LIMIT,
    max_paths: int = DEFAULT_MAX_PATHS,
    work_budget: int = DEFAULT_WORK_BUDGET,
) -> PathSet:
    """All method-level flow paths between executed sources and sinks."""
    spans = method_spans(traces)
    influenced = influenced_recv_ts(traces)
    sinks = {m for m in sink_methods if m in spans}
    sources = sorted(
        (m for m in source_methods if m in spans), key=MethodId.sort_key
    )
    paths: set[MethodFlowPath] = set()
    truncated = False
    for q in sources:
        ds = method_ds(q, traces, spans, influenced).members
        if not ds & sinks:
            continue
        truncated |= _enumerate(
            q, ds, sinks, spans, path_limit, max_paths, work_budget, paths
        )
    return PathSet(frozenset(paths), truncated)


def _enumerate(
    q: MethodId,
    members: frozenset[MethodId],
    sinks: set[MethodId],
    spans: Mapping[MethodId, tuple[int, int]],
    path_limit: int,
    max_paths: int,
    work_budget: int,
    out: set[MethodFlowPath],
) -> bool:
    """DFS over sequences where no member's first entry postdates a later
    member's last event.

    Candidates are visited in (fe, lr, name) order so causally early methods
    come first.  Branches from which no sink can be appended any more are cut
    (appending only raises the running max fe, so the cut is exact).  The
    enumeration reports truncation when the length cap, the path cap, or the
    work budget bites.
    """
    ordered = sorted(
        members, key=lambda m: (spans[m][0], spans[m][1], m.sort_key())
    )
    reachable_sinks = members & sinks
    truncated = False
    steps = 0
    seq: list[MethodId] = [q]
    in_seq = {q}

    def walk(max_fe: int) -> None:
        nonlocal truncated, steps
        if seq[-1] in sinks:
            if len(out) >= max_paths:
                truncated = True
                return
            out.add(MethodFlowPath(tuple(seq)))
        if len(seq) >= path_limit:
            truncated = True
            return
        for m in ordered:
            if truncated and len(out) >= max_paths:
                return
            if m in in_seq:
                continue
            m_first, m_last = spans[m]
            if m_last < max_fe:
                continue  # some earlier member would start after m ended
            steps += 1
            if steps > work_budget:
                truncated = True
                return
            new_max = max(max_fe, m_first)
            seq.append(m)
            in_seq.add(m)
            if m in sinks or any(
                s not in in_seq and spans[s][1] >= new_max
                for s in reachable_sinks
            ):
                walk(new_max)
            seq.pop()
            in_seq.discard(m)

    walk(spans[q][0])
    return truncated


def check_path_ordering(
    path: MethodFlowPath, spans: Mapping[MethodId, tuple[int, int]]
) -> bool:
    """The emitted-path predicate, machine-checkable per path."""
    ms = path.methods
    for i in range(len(ms)):
        for j in range(i + 1, len(ms)):
            if spans[ms[i]][0] > spans[ms[j]][1]:
                return False
    return True


def covers_chain(paths: Iterable[MethodFlowPath], chain: tuple[MethodId, ...]) -> bool:
    """True if some path contains the chain as an ordered subsequence."""
    for path in paths:
        it = iter(path.methods)
        if all(m in it for m in chain):
            return True
    return False


def render_paths(paths: Iterable[MethodFlowPath]) -> str:
    lines = [
        f"path level=method {p.render()}"
        for p in sorted(paths, key=lambda p: tuple(m.sort_key() for m in p.methods))
    ]
    return "\n".join(lines) + ("\n" if lines else "")
