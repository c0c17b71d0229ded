"""Event/trace data model, Lamport logical-clock stamping, and global ordering.

Every analysis in this package consumes the same trace representation: one
ordered event sequence per process, where each event carries the enclosing
method, a per-process sequence number, and (after stamping) a Lamport
timestamp.  Message events are matched across processes by ``msg_id``; the
happens-before relation is the transitive closure of per-process program
order plus send->recv edges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

EVENT_KINDS = frozenset(
    {"entry", "returned_into", "send", "recv", "branch", "stmt_cover"}
)
METHOD_EVENT_KINDS = frozenset({"entry", "returned_into"})


class TraceError(ValueError):
    """Base class for trace-format and trace-content problems."""


class MalformedTraceError(TraceError):
    """A record violates the trace format (e.g. recv with unknown msg_id)."""


class CausalityError(TraceError):
    """Message matching implies a causal cycle; no Lamport stamping exists."""


@dataclass(frozen=True)
class MethodId:
    """Identifies one method: (process, program unit, signature) is unique."""

    process: str
    class_name: str
    method_name: str

    def __post_init__(self) -> None:
        if not (self.process and self.class_name and self.method_name):
            raise ValueError("MethodId fields must be non-empty")

    @property
    def code_key(self) -> tuple[str, str]:
        """Process-independent identity, used to detect code reuse."""
        return (self.class_name, self.method_name)

    def qualified(self) -> str:
        return f"{self.process}.{self.class_name}.{self.method_name}"

    def sort_key(self) -> tuple[str, str, str]:
        return (self.process, self.class_name, self.method_name)


@dataclass(frozen=True)
class EventRecord:
    """One traced event.  ``ts`` is None until Lamport stamping."""

    kind: str
    method: MethodId
    seq: int
    ts: Optional[int] = None
    msg_id: Optional[str] = None
    peer: Optional[str] = None
    branch_id: Optional[str] = None
    stmt_id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise MalformedTraceError(f"unknown event kind {self.kind!r}")
        if self.kind in ("send", "recv") and self.msg_id is None:
            raise MalformedTraceError(f"{self.kind} event requires msg_id")
        if self.ts is not None and self.ts < 1:
            raise MalformedTraceError("stamped timestamps start at 1")

    @property
    def process(self) -> str:
        return self.method.process

    def key(self) -> tuple[str, int]:
        """Stable per-execution identity: (process, seq)."""
        return (self.process, self.seq)


@dataclass(frozen=True)
class ProcessTrace:
    """Events of one process, ordered by seq."""

    process: str
    events: tuple[EventRecord, ...]

    def __post_init__(self) -> None:
        prev = None
        for ev in self.events:
            if ev.process != self.process:
                raise MalformedTraceError(
                    f"event of {ev.process} in trace of {self.process}"
                )
            if prev is not None:
                if ev.seq <= prev.seq:
                    raise MalformedTraceError("seq must strictly increase")
                if ev.ts is not None and prev.ts is not None and ev.ts < prev.ts:
                    raise MalformedTraceError("timestamps decrease along trace")
            prev = ev

    @property
    def stamped(self) -> bool:
        return all(ev.ts is not None for ev in self.events)


@dataclass(frozen=True)
class FirstMsgMap:
    """(receiver, sender) -> Lamport ts of the receiver's first message from
    that sender.  Only direct messages populate the map; transitive message
    reachability is answered by :func:`happens_before`."""

    entries: Mapping[tuple[str, str], int]

    def first_recv_ts(self, receiver: str, sender: str) -> Optional[int]:
        return self.entries.get((receiver, sender))


@dataclass(frozen=True)
class GlobalOrder:
    """All events merged into one deterministic total order extending the
    Lamport partial order; tiebreak is (ts, process id, seq)."""

    merged: tuple[EventRecord, ...]

    def method_events(self) -> tuple[EventRecord, ...]:
        return tuple(e for e in self.merged if e.kind in METHOD_EVENT_KINDS)


TraceMap = dict[str, ProcessTrace]


def stamp_lamport(
    raw_traces: Mapping[str, Sequence[EventRecord]],
) -> tuple[TraceMap, FirstMsgMap]:
    """Assign Lamport timestamps to every event and build the first-message map.

    Rules: each event increments its process counter; a send piggybacks its
    own timestamp; a recv takes max(local counter, piggybacked) + 1.  Existing
    timestamps on input events are ignored and recomputed, so stamping is
    idempotent.
    """
    sends: dict[str, EventRecord] = {}
    for proc in raw_traces:
        for ev in raw_traces[proc]:
            if ev.kind == "send":
                if ev.msg_id in sends:
                    raise MalformedTraceError(f"duplicate send msg_id {ev.msg_id!r}")
                sends[ev.msg_id] = ev
    for proc in raw_traces:
        for ev in raw_traces[proc]:
            if ev.kind == "recv" and ev.msg_id not in sends:
                raise MalformedTraceError(f"recv of unknown msg_id {ev.msg_id!r}")

    counters = {proc: 0 for proc in raw_traces}
    cursors = {proc: 0 for proc in raw_traces}
    send_ts: dict[str, int] = {}
    stamped: dict[str, list[EventRecord]] = {proc: [] for proc in raw_traces}
    first_msgs: dict[tuple[str, str], int] = {}
    order = sorted(raw_traces)

    remaining = sum(len(raw_traces[p]) for p in raw_traces)
    while remaining:
        progressed = False
        for proc in order:
            events = raw_traces[proc]
            while cursors[proc] < len(events):
                ev = events[cursors[proc]]
                if ev.kind == "recv" and ev.msg_id not in send_ts:
                    break  # matching send not stamped yet
                if ev.kind == "recv":
                    counters[proc] = max(counters[proc], send_ts[ev.msg_id]) + 1
                else:
                    counters[proc] += 1
                ts = counters[proc]
                new = replace(ev, ts=ts)
                stamped[proc].append(new)
                if ev.kind == "send":
                    send_ts[ev.msg_id] = ts
                elif ev.kind == "recv":
                    sender = sends[ev.msg_id].process
                    first_msgs.setdefault((proc, sender), ts)
                cursors[proc] += 1
                remaining -= 1
                progressed = True
        if not progressed:
            raise CausalityError("cyclic message causality; cannot stamp traces")

    traces = {
        proc: ProcessTrace(proc, tuple(stamped[proc])) for proc in raw_traces
    }
    return traces, FirstMsgMap(dict(first_msgs))


def merge_global(traces: Mapping[str, ProcessTrace]) -> GlobalOrder:
    """Merge stamped traces into one total order by (ts, process, seq)."""
    flat: list[EventRecord] = []
    for proc in sorted(traces):
        trace = traces[proc]
        if not trace.stamped:
            raise TraceError(f"trace of {proc} is not stamped")
        flat.extend(trace.events)
    flat.sort(key=lambda e: (e.ts, e.process, e.seq))
    return GlobalOrder(tuple(flat))


class EventGraph:
    """Program-order plus message edges over a set of stamped traces.

    Successor edges: each event to the next event of its process, and each
    send to its matching recv.  Used both by :func:`happens_before` and by
    the message-influence computations in the path analyses.
    """

    def __init__(self, traces: Mapping[str, ProcessTrace]):
        self.traces = traces
        self._succ: dict[tuple[str, int], list[tuple[str, int]]] = {}
        self._events: dict[tuple[str, int], EventRecord] = {}
        recv_by_msg: dict[str, EventRecord] = {}
        for trace in traces.values():
            for ev in trace.events:
                self._events[ev.key()] = ev
                if ev.kind == "recv":
                    recv_by_msg[ev.msg_id] = ev
        for trace in traces.values():
            evs = trace.events
            for i, ev in enumerate(evs):
                succ = self._succ.setdefault(ev.key(), [])
                if i + 1 < len(evs):
                    succ.append(evs[i + 1].key())
                if ev.kind == "send" and ev.msg_id in recv_by_msg:
                    succ.append(recv_by_msg[ev.msg_id].key())

    def reaches(self, src: tuple[str, int], dst: tuple[str, int]) -> bool:
        if src == dst:
            return False
        seen = {src}
        stack = [src]
        while stack:
            cur = stack.pop()
            for nxt in self._succ.get(cur, ()):
                if nxt == dst:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    def downstream_recvs(self, start: EventRecord) -> list[EventRecord]:
        """All recv events reachable from ``start`` (inclusive of chains)."""
        out = []
        seen = {start.key()}
        stack = [start.key()]
        while stack:
            cur = stack.pop()
            for nxt in self._succ.get(cur, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    ev = self._events[nxt]
                    if ev.kind == "recv":
                        out.append(ev)
                    stack.append(nxt)
        return out


def happens_before(
    e1: EventRecord, e2: EventRecord, traces: Mapping[str, ProcessTrace]
) -> bool:
    """True iff e1 precedes e2 in the closure of program order and messages."""
    if e1.ts is None or e2.ts is None:
        raise TraceError("happens_before requires stamped events")
    if e1.process == e2.process:
        return e1.seq < e2.seq
    if e1.ts >= e2.ts:
        return False  # Lamport: causality implies strictly increasing ts
    return EventGraph(traces).reaches(e1.key(), e2.key())


SPAN_EVENT_KINDS = frozenset({"entry", "returned_into", "send", "recv"})


def method_spans(
    traces: Mapping[str, ProcessTrace]
) -> dict[MethodId, tuple[int, int]]:
    """fe/lr per executed method.

    A method's span runs from its first entry timestamp to its last method
    or message event timestamp; for methods that make calls the span ends at
    the last returned-into event, and it degrades gracefully for leaf methods
    (which never have one).  Coverage events carry no ordering information of
    their own and are excluded, so spans are identical whether a trace holds
    all instances or only the first/last ones.
    """
    first_entry: dict[MethodId, int] = {}
    last_event: dict[MethodId, int] = {}
    for trace in traces.values():
        for ev in trace.events:
            if ev.kind == "entry" and ev.method not in first_entry:
                first_entry[ev.method] = ev.ts
            if ev.kind in SPAN_EVENT_KINDS:
                last_event[ev.method] = max(last_event.get(ev.method, 0), ev.ts)
    return {
        m: (first_entry[m], last_event[m]) for m in first_entry
    }


def influenced_recv_ts(
    traces: Mapping[str, ProcessTrace],
) -> dict[tuple[str, str], int]:
    """(receiver, origin) -> ts of receiver's first recv that is causally
    downstream of any send in the origin process, directly or via message
    chains through other processes."""
    graph = EventGraph(traces)
    out: dict[tuple[str, str], int] = {}
    for origin in sorted(traces):
        for ev in traces[origin].events:
            if ev.kind != "send":
                continue
            for recv in graph.downstream_recvs(ev):
                if recv.process == origin:
                    continue
                key = (recv.process, origin)
                if key not in out or recv.ts < out[key]:
                    out[key] = recv.ts
    return out


def filter_traces(
    traces: Mapping[str, ProcessTrace], methods: Iterable[MethodId]
) -> TraceMap:
    """Restrict traces to events of the given methods (relevance filtering)."""
    keep = set(methods)
    return {
        proc: ProcessTrace(
            proc, tuple(ev for ev in trace.events if ev.method in keep)
        )
        for proc, trace in traces.items()
    }


def reduce_first_last(trace: ProcessTrace) -> ProcessTrace:
    """Keep only each method's first entry and last method event.

    This models tracing only first-entry/last-returned-into instances; the
    last *entry* is retained as well when it postdates the last returned-into
    so that fe/lr are preserved exactly.
    """
    first: dict[MethodId, EventRecord] = {}
    last: dict[MethodId, EventRecord] = {}
    for ev in trace.events:
        if ev.kind not in METHOD_EVENT_KINDS:
            continue
        if ev.kind == "entry" and ev.method not in first:
            first[ev.method] = ev
        last[ev.method] = ev
    keep = {ev.key() for ev in first.values()} | {ev.key() for ev in last.values()}
    kept = []
    for ev in trace.events:
        if ev.kind in ("send", "recv") or ev.key() in keep:
            kept.append(ev)
    return ProcessTrace(trace.process, tuple(kept))


# ---------------------------------------------------------------------------
# Trace file format: one JSON object per line with fields proc, seq, kind,
# class, method, ts, msg_id, peer, branch_id, stmt_id.  Unknown fields are
# ignored.  A bundle is a directory of one file per process plus manifest.json
# naming the processes and the scenario.
# ---------------------------------------------------------------------------

_FIELDS = ("msg_id", "peer", "branch_id", "stmt_id")


def event_to_record(ev: EventRecord) -> dict:
    rec = {
        "proc": ev.process,
        "seq": ev.seq,
        "kind": ev.kind,
        "class": ev.method.class_name,
        "method": ev.method.method_name,
    }
    if ev.ts is not None:
        rec["ts"] = ev.ts
    for name in _FIELDS:
        value = getattr(ev, name)
        if value is not None:
            rec[name] = value
    return rec


def event_from_record(rec: Mapping) -> EventRecord:
    try:
        method = MethodId(rec["proc"], rec["class"], rec["method"])
        return EventRecord(
            kind=rec["kind"],
            method=method,
            seq=int(rec["seq"]),
            ts=int(rec["ts"]) if rec.get("ts") is not None else None,
            msg_id=rec.get("msg_id"),
            peer=rec.get("peer"),
            branch_id=rec.get("branch_id"),
            stmt_id=rec.get("stmt_id"),
        )
    except (KeyError, TypeError) as exc:
        raise MalformedTraceError(f"bad trace record {rec!r}") from exc


def write_trace(path: Path, trace: ProcessTrace) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in trace.events:
            fh.write(json.dumps(event_to_record(ev), sort_keys=True) + "\n")


def read_trace(path: Path, process: str) -> ProcessTrace:
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedTraceError(f"not a JSON record: {line!r}") from exc
            events.append(event_from_record(rec))
    return ProcessTrace(process, tuple(events))


def write_bundle(
    directory: Path, traces: Mapping[str, ProcessTrace], scenario: Mapping
) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "scenario": dict(scenario),
        "processes": sorted(traces),
        "files": {proc: f"{proc}.trace" for proc in sorted(traces)},
    }
    (directory / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    for proc, trace in traces.items():
        write_trace(directory / manifest["files"][proc], trace)


def read_bundle(directory: Path) -> tuple[TraceMap, dict]:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise MalformedTraceError(f"no manifest.json in {directory}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    traces = {}
    for proc in manifest["processes"]:
        traces[proc] = read_trace(directory / manifest["files"][proc], proc)
    return traces, manifest
