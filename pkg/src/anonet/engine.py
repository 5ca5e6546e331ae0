"""Event-driven executor for pairwise gossip protocols on connected graphs.

A run is a sequence of activations. Each activation picks one ordered edge
(initiator, responder) uniformly at random and applies the protocol's
transition rule to the two endpoint states. Continuous time is bookkept on
the side: every edge carries an independent exponential clock of rate `rate`,
so the superposed process selects edges uniformly and the holding time
between activations is exponential with rate `rate * |E|`.

All randomness of a run comes from one `random.Random(seed)` stream in a
fixed, documented order:

1. optional input shuffle (done by callers, before the run loop),
2. per activation: one `randrange(2|E|)` draw encoding edge index and
   orientation (low bit), then one exponential holding-time draw,
3. at rewire steps: the edge-pair, pairing and connectivity draws.

Identical (protocol, graph, input, seed, limits) therefore give bit-identical
traces and results.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Optional, Sequence

__all__ = [
    "Graph",
    "Activation",
    "Trace",
    "RunResult",
    "RewirePolicy",
    "GraphError",
    "ProtocolViolation",
    "build_graph",
    "parse_rewire",
    "load_edge_list",
    "write_trace",
    "is_connected",
    "schedule_next",
    "run",
    "rewire",
    "measure_meeting_time",
]


class GraphError(ValueError):
    """Bad graph specification or a graph violating the model invariants."""


class ProtocolViolation(RuntimeError):
    """A transition produced a state the protocol declares impossible."""


@dataclass
class Graph:
    """Undirected connected graph on nodes 0..n-1.

    Edges are stored as sorted unique (u, v) tuples with u < v. Connectivity
    is part of the model contract and is validated on construction.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    generator_tag: str = "manual"

    def __post_init__(self) -> None:
        if self.n < 2:
            raise GraphError(f"need at least 2 nodes, got {self.n}")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={self.n}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphError(f"duplicate edge {key}")
            seen.add(key)
        self.edges = tuple(sorted((min(u, v), max(u, v)) for u, v in self.edges))
        if not is_connected(self.n, self.edges):
            raise GraphError("graph is not connected")

    @property
    def m(self) -> int:
        return len(self.edges)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj


class Activation(NamedTuple):
    initiator: int
    responder: int
    time: float
    step: int


@dataclass
class Trace:
    activations: list[Activation]
    final_outputs: tuple


@dataclass
class RunResult:
    protocol: str
    n: int
    first_correct_step: Optional[int]
    stabilized: bool
    confirmation_window: int
    final_outputs: tuple
    total_steps: int
    elapsed_time: float
    stopped_by: str  # "quiescence" | "window" | "max_steps"
    matched: bool
    final_states: tuple = ()
    trace: Optional[Trace] = None


@dataclass(frozen=True)
class RewirePolicy:
    """Connectivity-preserving double edge swaps every `period` activations."""

    kind: str  # "none" | "swap"
    period: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("none", "swap"):
            raise GraphError(f"unknown rewire policy {self.kind!r}")
        if self.kind == "swap" and self.period < 1:
            raise GraphError("swap period must be >= 1")


def parse_rewire(spec: str) -> RewirePolicy:
    if spec == "none":
        return RewirePolicy("none")
    if spec.startswith("swap:"):
        return RewirePolicy("swap", int(spec.split(":", 1)[1]))
    raise GraphError(f"unknown rewire spec {spec!r}")


def is_connected(n: int, edges: Sequence[tuple[int, int]]) -> bool:
    """BFS reachability from node 0."""
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = bytearray(n)
    seen[0] = 1
    frontier = [0]
    count = 1
    while frontier:
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = 1
                    count += 1
                    nxt.append(w)
        frontier = nxt
    return count == n


_GNP_ATTEMPTS = 200


def build_graph(spec: str, seed: int = 0) -> Graph:
    """Build a graph from a spec string.

    Supported: complete:n, cycle:n, path:n, star:n, gnp:n:p, file:path.
    gnp resamples (bounded attempts) until the sample is connected.
    """
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "complete":
            n = int(parts[1])
            edges = tuple((u, v) for u in range(n) for v in range(u + 1, n))
            return Graph(n, edges, spec)
        if kind == "cycle":
            n = int(parts[1])
            if n < 3:
                raise GraphError("cycle needs n >= 3")
            edges = tuple((i, (i + 1) % n) for i in range(n))
            return Graph(n, edges, spec)
        if kind == "path":
            n = int(parts[1])
            edges = tuple((i, i + 1) for i in range(n - 1))
            return Graph(n, edges, spec)
        if kind == "star":
            n = int(parts[1])
            edges = tuple((0, i) for i in range(1, n))
            return Graph(n, edges, spec)
        if kind == "gnp":
            n, p = int(parts[1]), float(parts[2])
            rng = random.Random(seed)
            for _ in range(_GNP_ATTEMPTS):
                edges = tuple(
                    (u, v)
                    for u in range(n)
                    for v in range(u + 1, n)
                    if rng.random() < p
                )
                if is_connected(n, edges) and len(edges) > 0:
                    return Graph(n, edges, spec)
            raise GraphError(
                f"gnp:{n}:{p} produced no connected sample in {_GNP_ATTEMPTS} attempts"
            )
        if kind == "file":
            path = spec.split(":", 1)[1]
            return load_edge_list(path)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, GraphError):
            raise
        raise GraphError(f"unparsable graph spec {spec!r}: {exc}") from exc
    raise GraphError(f"unknown graph spec {spec!r}")


def load_edge_list(path: str) -> Graph:
    """Read a plain-text edge list: one "u v" pair per line, 0-indexed.

    Blank lines are ignored; comments start with '#'.
    """
    edges = []
    max_node = -1
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                fields = line.split()
                if len(fields) != 2:
                    raise GraphError(f"{path}:{lineno}: expected 'u v', got {line!r}")
                u, v = int(fields[0]), int(fields[1])
                if u < 0 or v < 0:
                    raise GraphError(f"{path}:{lineno}: negative node id")
                edges.append((u, v))
                max_node = max(max_node, u, v)
    except OSError as exc:
        raise GraphError(f"cannot read graph file {path}: {exc}") from exc
    if max_node < 1:
        raise GraphError(f"{path}: no edges")
    return Graph(max_node + 1, tuple(edges), f"file:{path}")


def write_trace(path: str, trace: Trace) -> None:
    """Write a trace file: one "step time initiator responder" line per
    activation, then a final line "outputs o0 o1 ...".
    """
    with open(path, "w", encoding="utf-8") as fh:
        for act in trace.activations:
            fh.write(f"{act.step} {act.time:.9f} {act.initiator} {act.responder}\n")
        fh.write("outputs " + " ".join(str(o) for o in trace.final_outputs) + "\n")


def schedule_next(
    graph: Graph,
    rate: float,
    rng: random.Random,
    *,
    time: float = 0.0,
    step: int = 0,
) -> Activation:
    """Draw the next activation: uniform ordered edge, exponential holding time.

    The run loop inlines exactly this draw order, so a trace can be replayed
    against repeated calls to this function.
    """
    m = graph.m
    if m == 0:
        raise GraphError("graph has no edges")
    k = rng.randrange(2 * m)
    u, v = graph.edges[k >> 1]
    if k & 1:
        u, v = v, u
    dt = rng.expovariate(rate * m)
    return Activation(u, v, time + dt, step + 1)


def _attempt_swap(
    edges: list[tuple[int, int]], n: int, rng: random.Random
) -> bool:
    """One connectivity-preserving double edge swap; returns True if applied.

    Draws are made unconditionally so the stream stays aligned whether or not
    the proposal is accepted.
    """
    m = len(edges)
    if m < 2:
        return False
    i = rng.randrange(m)
    j = rng.randrange(m - 1)
    if j >= i:
        j += 1
    flip = rng.randrange(2)
    u, v = edges[i]
    x, y = edges[j]
    if flip:
        x, y = y, x
    # propose (u,v),(x,y) -> (u,x),(v,y)
    if len({u, v, x, y}) < 4:
        return False
    e1 = (min(u, x), max(u, x))
    e2 = (min(v, y), max(v, y))
    current = set(edges)
    if e1 in current or e2 in current or e1 == e2:
        return False
    trial = list(edges)
    trial[i] = e1
    trial[j] = e2
    if not is_connected(n, trial):
        return False
    edges[i] = e1
    edges[j] = e2
    return True


def rewire(graph: Graph, policy: RewirePolicy, rng: random.Random) -> Graph:
    """Apply one rewiring event under `policy`, returning a connected graph
    on the same node set (identical graph for policy "none" or a rolled-back
    proposal)."""
    if policy.kind == "none":
        return graph
    edges = list(graph.edges)
    _attempt_swap(edges, graph.n, rng)
    return Graph(graph.n, tuple(edges), graph.generator_tag + "+swap")


def _default_window(graph: Graph) -> int:
    return 10 * graph.n * graph.m


def run(
    protocol,
    graph: Graph,
    inputs: Sequence[int],
    *,
    seed: int = 0,
    max_steps: int = 10_000_000,
    confirmation_window: Optional[int] = None,
    expected: Any = None,
    rewire_policy: Optional[RewirePolicy] = None,
    rate: float = 1.0,
    record_trace: bool = False,
    on_step: Optional[Callable[[int, list], None]] = None,
) -> RunResult:
    """Execute `protocol` on `graph` until stabilization or `max_steps`.

    Stabilization is detected when (a) the protocol's quiescence predicate
    holds (checked lazily, every n activations), or (b) `expected` is given
    and the match condition has held for `confirmation_window` consecutive
    activations. The match condition is per-node equality with `expected`,
    or, for protocols with match_mode "ones_count", that the number of nodes
    outputting 1 equals `expected`.

    With expected=None the window fallback is "no output changed for a full
    window". `first_correct_step` is the start of the final matching stretch
    (0 means the initial configuration already matched).
    """
    n = graph.n
    if len(inputs) != n:
        raise ValueError(f"input length {len(inputs)} != n {n}")
    arity = getattr(protocol, "colors", None)
    if arity is not None:
        for c in inputs:
            if not (0 <= c < arity):
                raise ValueError(f"input color {c} invalid for {protocol.name}")

    rng = random.Random(seed)
    states: list = [protocol.init(c) for c in inputs]
    transition = protocol.transition
    output = protocol.output
    quiescent = protocol.quiescent
    ones_mode = getattr(protocol, "match_mode", "per_node") == "ones_count"

    window = confirmation_window if confirmation_window is not None else _default_window(graph)
    edges = list(graph.edges)
    m = len(edges)
    period = rewire_policy.period if rewire_policy and rewire_policy.kind == "swap" else 0

    # memoized pure transition and output maps
    pair_cache: dict = {}
    out_cache: dict = {}

    def out_of(s):
        o = out_cache.get(s)
        if o is None:
            o = output(s)
            out_cache[s] = o
        return o

    outputs = [out_of(s) for s in states]
    if expected is None:
        match_count = None
        matched = False
    elif ones_mode:
        match_count = sum(1 for o in outputs if o == 1)
        matched = match_count == expected
    else:
        match_count = sum(1 for o in outputs if o == expected)
        matched = match_count == n

    streak_start = 0 if (matched or expected is None) else None
    step = 0
    now = 0.0
    activations: list[Activation] = [] if record_trace else None  # type: ignore
    stopped_by = "max_steps"
    stabilized = False
    check_period = max(n, 1)
    expovariate = rng.expovariate
    randrange = rng.randrange
    rate_m = rate * m

    def is_quiescent() -> bool:
        return quiescent is not None and quiescent(states)

    if is_quiescent():
        stopped_by = "quiescence"
        stabilized = matched if expected is not None else True
    else:
        while step < max_steps:
            k = randrange(2 * m)
            u, v = edges[k >> 1]
            if k & 1:
                u, v = v, u
            now += expovariate(rate_m)
            step += 1

            su, sv = states[u], states[v]
            key = (su, sv)
            nxt = pair_cache.get(key)
            if nxt is None:
                nxt = transition(su, sv)
                pair_cache[key] = nxt
            nsu, nsv = nxt
            if nsu is not su or nsv is not sv:
                if expected is None:
                    if out_of(nsu) != out_of(su) or out_of(nsv) != out_of(sv):
                        streak_start = step  # an output changed; restart stretch
                elif ones_mode:
                    match_count += (out_of(nsu) == 1) - (out_of(su) == 1)
                    match_count += (out_of(nsv) == 1) - (out_of(sv) == 1)
                    now_matched = match_count == expected
                    if now_matched and not matched:
                        streak_start = step
                    elif not now_matched:
                        streak_start = None
                    matched = now_matched
                else:
                    match_count += (out_of(nsu) == expected) - (out_of(su) == expected)
                    match_count += (out_of(nsv) == expected) - (out_of(sv) == expected)
                    now_matched = match_count == n
                    if now_matched and not matched:
                        streak_start = step
                    elif not now_matched:
                        streak_start = None
                    matched = now_matched
                states[u] = nsu
                states[v] = nsv

            if record_trace:
                activations.append(Activation(u, v, now, step))
            if on_step is not None:
                on_step(step, states)

            if period and step % period == 0:
                if _attempt_swap(edges, n, rng):
                    pass  # edges mutated in place; oriented draw uses the list

            if expected is None:
                if streak_start is not None and step - streak_start >= window:
                    stopped_by = "window"
                    stabilized = True
                    break
            elif matched and step - streak_start >= window:
                stopped_by = "window"
                stabilized = True
                break

            if step % check_period == 0 and is_quiescent():
                stopped_by = "quiescence"
                stabilized = matched if expected is not None else True
                break

    outputs = tuple(out_of(s) for s in states)
    if expected is not None and not matched:
        first_correct = None
    else:
        first_correct = streak_start
    result = RunResult(
        protocol=getattr(protocol, "name", "protocol"),
        n=n,
        first_correct_step=first_correct,
        stabilized=stabilized,
        confirmation_window=window,
        final_outputs=outputs,
        total_steps=step,
        elapsed_time=now,
        stopped_by=stopped_by,
        matched=matched if expected is not None else stabilized,
        final_states=tuple(states),
        trace=Trace(activations, outputs) if record_trace else None,
    )
    return result


@dataclass
class MeetingStats:
    graph: str
    n: int
    trials: int
    mean_steps: float
    stderr_steps: float
    mean_time: float
    stderr_time: float


def measure_meeting_time(
    graph: Graph, trials: int, seed: int = 0, rate: float = 1.0
) -> MeetingStats:
    """Mean activations and elapsed time until two walking tokens interact.

    Tokens start on distinct uniform nodes. When an activated edge has a
    token on exactly one endpoint the token crosses it (swap semantics); the
    trial ends on the first activation whose edge holds both tokens.
    """
    if graph.n < 2:
        raise GraphError("need n >= 2")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    edges = graph.edges
    m = len(edges)
    rate_m = rate * m
    steps_samples = []
    time_samples = []
    for _ in range(trials):
        a = rng.randrange(graph.n)
        b = rng.randrange(graph.n - 1)
        if b >= a:
            b += 1
        steps = 0
        now = 0.0
        while True:
            k = rng.randrange(2 * m)
            u, v = edges[k >> 1]
            now += rng.expovariate(rate_m)
            steps += 1
            if (u == a and v == b) or (u == b and v == a):
                break
            if u == a:
                a = v
            elif v == a:
                a = u
            elif u == b:
                b = v
            elif v == b:
                b = u
        steps_samples.append(steps)
        time_samples.append(now)

    def mean_se(xs):
        mu = sum(xs) / len(xs)
        if len(xs) < 2:
            return mu, 0.0
        var = sum((x - mu) ** 2 for x in xs) / (len(xs) - 1)
        return mu, (var / len(xs)) ** 0.5

    ms, ses = mean_se(steps_samples)
    mt, set_ = mean_se(time_samples)
    return MeetingStats(graph.generator_tag, graph.n, trials, ms, ses, mt, set_)
