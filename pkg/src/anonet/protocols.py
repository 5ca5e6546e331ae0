"""Binary-input gossip protocols with strict per-agent memory budgets.

Each protocol is a `ProtocolDef`: an initializer from input colors to agent
states, a total deterministic pairwise transition rule applied to the
(initiator, responder) state pair, an output map, an optional exact
quiescence predicate, and a declared bit budget that the reachable state set
must fit (audited in oracle.audit_memory).

Conventions shared by all protocols here:

* input color 0 is the counted color ("red"); r denotes its multiplicity,
* in asymmetric rules the initiator takes the first listed outcome,
* states are small NamedTuples, hashable so the engine can memoize pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

from .engine import ProtocolViolation

__all__ = [
    "ProtocolDef",
    "ParityState",
    "ThresholdState",
    "BitState",
    "EstState",
    "or_protocol",
    "lsb_counter_protocol",
    "threshold_protocol",
    "bit_protocol",
    "estimate_protocol",
    "level_count",
]


@dataclass(frozen=True)
class ProtocolDef:
    """Immutable protocol descriptor; transitions are pure functions, so a
    single instance is safe to share across parallel runs."""

    name: str
    init: Callable
    transition: Callable
    output: Callable
    quiescent: Optional[Callable] = None
    budget_bits: int = 0
    colors: int = 2
    match_mode: str = "per_node"  # "per_node" | "ones_count"


# ---------------------------------------------------------------------------
# OR


def or_protocol() -> ProtocolDef:
    """1-bit OR: on meeting, both parties keep the max of the two bits."""

    def init(color: int) -> int:
        return color

    def transition(a: int, b: int):
        m = a if a > b else b
        return (m, m)

    def output(s: int) -> int:
        return s

    def quiescent(states) -> bool:
        first = states[0]
        return all(s == first for s in states)

    return ProtocolDef(
        name="or",
        init=init,
        transition=transition,
        output=output,
        quiescent=quiescent,
        budget_bits=1,
    )


# ---------------------------------------------------------------------------
# Modular counter (c least significant bits of r)


class ParityState(NamedTuple):
    counter: int
    active: int


def lsb_counter_protocol(c: int) -> ProtocolDef:
    """Counts r modulo 2^c in c+1 bits per agent.

    Red agents start (1, active), others (0, passive). Two active agents
    merge: the initiator keeps the mod-2^c sum and stays active, the
    responder keeps the sum but turns passive. A passive agent copies an
    active agent's counter and the active/passive statuses swap, so the
    live token random-walks. Passive pairs do not interact.
    """
    if c < 1:
        raise ValueError("c must be >= 1")
    mod = 1 << c

    def init(color: int) -> ParityState:
        return ParityState(1, 1) if color == 0 else ParityState(0, 0)

    def transition(a: ParityState, b: ParityState):
        if a.active and b.active:
            s = (a.counter + b.counter) % mod
            return (ParityState(s, 1), ParityState(s, 0))
        if a.active and not b.active:
            return (ParityState(a.counter, 0), ParityState(a.counter, 1))
        if b.active and not a.active:
            return (ParityState(b.counter, 1), ParityState(b.counter, 0))
        return (a, b)

    def output(s: ParityState) -> int:
        return s.counter

    def quiescent(states) -> bool:
        actives = [s for s in states if s.active]
        if not actives:
            return True  # r == 0: nothing will ever change
        if len(actives) > 1:
            return False
        target = actives[0].counter
        return all(s.counter == target for s in states)

    return ProtocolDef(
        name=f"lsb:{c}",
        init=init,
        transition=transition,
        output=output,
        quiescent=quiescent,
        budget_bits=c + 1,
    )


# ---------------------------------------------------------------------------
# Rational threshold


class ThresholdState(NamedTuple):
    counter: int
    strong: int


def threshold_protocol(a: int, b: int, c: int) -> ProtocolDef:
    """Decides whether r/(n-r) > a/b with c+2 bits per agent.

    Red agents start (+b, strong), others (-a, strong). Opposite-sign strong
    agents cancel: the initiator keeps the sum and stays strong while the
    responder drops to (0, weak); on equal magnitudes the initiator becomes
    (0, weak) and the responder (0, strong). Weak agents copy a strong
    agent's counter (zero included: after a full tie cancellation only
    zero strongs remain and stale nonzero copies must still be flushed)
    with statuses swapped, and a strong zero defers to a nonzero strong the
    same way, so zero strongs die out whenever nonzero strongs exist and
    cannot keep feeding 0 alongside them. Everything else swaps states.
    Output is [counter > 0]; exact ties stabilize to 0.
    """
    if not (1 <= a <= (1 << c) and 1 <= b <= (1 << c)):
        raise ValueError(f"need 1 <= a,b <= 2^c, got a={a} b={b} c={c}")

    def init(color: int) -> ThresholdState:
        return ThresholdState(b, 1) if color == 0 else ThresholdState(-a, 1)

    def transition(x: ThresholdState, y: ThresholdState):
        if x.strong and y.strong:
            cx, cy = x.counter, y.counter
            if cx != 0 and cy != 0 and (cx > 0) != (cy > 0):
                if abs(cx) != abs(cy):
                    return (ThresholdState(cx + cy, 1), ThresholdState(0, 0))
                return (ThresholdState(0, 0), ThresholdState(0, 1))
            if cx == 0 and cy != 0:
                return (ThresholdState(cy, 1), ThresholdState(cy, 0))
            if cy == 0 and cx != 0:
                return (ThresholdState(cx, 0), ThresholdState(cx, 1))
            return (y, x)
        if not x.strong and y.strong:
            return (ThresholdState(y.counter, 1), ThresholdState(y.counter, 0))
        if not y.strong and x.strong:
            return (ThresholdState(x.counter, 0), ThresholdState(x.counter, 1))
        return (y, x)

    def output(s: ThresholdState) -> int:
        return 1 if s.counter > 0 else 0

    def quiescent(states) -> bool:
        signs = {1 if s.counter > 0 else -1 for s in states if s.strong and s.counter != 0}
        if len(signs) > 1:
            return False
        if signs == {1}:
            # a surviving zero strong could still hand a 0 to a weak agent
            if any(s.strong and s.counter == 0 for s in states):
                return False
            return all(s.counter > 0 for s in states)
        return all(s.counter <= 0 for s in states)

    return ProtocolDef(
        name=f"threshold:{a}:{b}:{c}",
        init=init,
        transition=transition,
        output=output,
        quiescent=quiescent,
        budget_bits=c + 2,
    )


# ---------------------------------------------------------------------------
# Per-bit counting


def level_count(n_max: int) -> int:
    """Number of levels L = ceil(log2(n_max)) + 1; tokens live in [0, L)."""
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    return math.ceil(math.log2(n_max)) + 1


class BitState(NamedTuple):
    color: int
    active: int
    level: int
    out: int


def _merge_actives(x: BitState, y: BitState, levels: int):
    """Equal-level merge: (1,1) promotes the responder one level up; any
    other color pair leaves the XOR on the initiator and kills the responder."""
    if x.color == 1 and y.color == 1:
        if y.level + 1 >= levels:
            raise ProtocolViolation(
                f"token would exceed level {levels - 1}; n exceeds the configured n_max"
            )
        return (
            BitState(0, 1, x.level, x.out),
            BitState(1, 1, y.level + 1, y.out),
        )
    return (
        BitState(x.color ^ y.color, 1, x.level, x.out),
        BitState(0, 0, y.level, y.out),
    )


def bit_protocol(j: int, n_max: int) -> ProtocolDef:
    """Computes bit j of r (count of color-0 agents) for any n <= n_max.

    Red agents start as active level-0 tokens of color 1. Equal-level tokens
    merge, carrying binary-addition carries upward, so the last token left
    at level i holds bit i of r. Tokens at different levels only swap (a
    random-walk shuffle), and a passive agent meeting an active one swaps
    full states after recording its observation.

    Every agent keeps an `out` register updated whenever it meets an active
    level-j agent. The output map reads `color` for an active level-j agent
    itself (its own register may hold a stale observation of an earlier
    level-j token) and `out` for everyone else; passive agents that never
    meet a level-j token answer the default 0.
    """
    levels = level_count(n_max)
    if not (0 <= j < levels):
        raise ValueError(f"bit index {j} outside [0, {levels})")

    def init(color: int) -> BitState:
        return BitState(1, 1, 0, 0) if color == 0 else BitState(0, 0, 0, 0)

    def observe(s: BitState, other: BitState) -> BitState:
        if other.active and other.level == j and s.out != other.color:
            return s._replace(out=other.color)
        return s

    def transition(x: BitState, y: BitState):
        x2, y2 = observe(x, y), observe(y, x)
        if x2.active and y2.active:
            if x2.level == y2.level:
                return _merge_actives(x2, y2, levels)
            return (y2, x2)
        if x2.active != y2.active:
            return (y2, x2)  # identities swap so tokens random-walk
        return (x2, y2) if (x2 != x or y2 != y) else (x, y)

    def output(s: BitState) -> int:
        if s.active and s.level == j:
            return s.color
        return s.out

    def quiescent(states) -> bool:
        seen_levels = set()
        for s in states:
            if s.active:
                if s.level in seen_levels:
                    return False
                seen_levels.add(s.level)
        survivor = next(
            (s.color for s in states if s.active and s.level == j), 0
        )
        return all(output(s) == survivor for s in states)

    return ProtocolDef(
        name=f"bit:{j}:{n_max}",
        init=init,
        transition=transition,
        output=output,
        quiescent=quiescent,
        budget_bits=math.ceil(math.log2(levels)) + 3,
    )


# ---------------------------------------------------------------------------
# Factor-2 count estimator


class EstState(NamedTuple):
    color: int
    active: int
    level: int
    est: int


def estimate_protocol(n_max: int) -> ProtocolDef:
    """Estimates r within a factor of 2: runs the per-bit token dynamics and
    gossips est = max level ever observed on an active agent, which settles
    at floor(log2 r), so 2^est is the estimate. For r = 0 every register
    stays 0 and the caller reports the run as empty.
    """
    levels = level_count(n_max)

    def init(color: int) -> EstState:
        return EstState(1, 1, 0, 0) if color == 0 else EstState(0, 0, 0, 0)

    def transition(x: EstState, y: EstState):
        if not x.active and not y.active:
            if x.est == y.est:
                return (x, y)
            est = max(x.est, y.est)
            return (x._replace(est=est), y._replace(est=est))
        if x.active and y.active and x.level == y.level:
            mx, my = _merge_actives(
                BitState(x.color, 1, x.level, 0), BitState(y.color, 1, y.level, 0), levels
            )
            ax = EstState(mx.color, mx.active, mx.level, x.est)
            ay = EstState(my.color, my.active, my.level, y.est)
        else:
            ax, ay = y, x  # different levels or active/passive: identities swap
        est = max(
            ax.est,
            ay.est,
            ax.level if ax.active else 0,
            ay.level if ay.active else 0,
        )
        return (ax._replace(est=est), ay._replace(est=est))

    def output(s: EstState) -> int:
        return s.est

    def quiescent(states) -> bool:
        seen_levels = set()
        top = 0
        for s in states:
            if s.active:
                if s.level in seen_levels:
                    return False
                seen_levels.add(s.level)
                top = max(top, s.level)
        return all(s.est == top for s in states)

    log_l = math.ceil(math.log2(levels))
    return ProtocolDef(
        name=f"estimate:{n_max}",
        init=init,
        transition=transition,
        output=output,
        quiescent=quiescent,
        budget_bits=log_l + 3 + log_l,
    )
