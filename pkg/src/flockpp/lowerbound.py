"""Occurrence thresholds and the state-count lower bound.

For a protocol state ``q``, its occurrence threshold is the smallest
population size ``n`` at which ``q`` appears in some reachable
configuration (infinite if it never does).  For any sound threshold
protocol these values are constrained:

* the initial state has threshold 1, and a state first produced by an
  encounter of states with thresholds ``x`` and ``y`` has threshold at most
  ``x + y`` — so consecutive finite thresholds can at most double
  (:func:`check_doubling_gaps`);
* the accepting states have threshold exactly ``d`` (sound + complete), so
  a doubling chain from 1 to ``d`` needs at least ``log2(d) + 1`` distinct
  values, hence that many states (:func:`check_state_lower_bound`, checked
  in exact integer arithmetic as ``2**(|Q| - 1) >= d``).

:func:`occurrence_thresholds` computes the exact values by sweeping
population sizes; :func:`occurrence_upper_bounds` computes the additive
fixpoint bound independently, and the sweep cross-checks itself against it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import DEFAULT_NODE_CAP, CapExceeded, Protocol, occurring_states, reach
from .verify import HOLDS, Verdict

__all__ = [
    "OccurrenceMap",
    "occurrence_thresholds",
    "occurrence_upper_bounds",
    "check_doubling_gaps",
    "check_state_lower_bound",
]


@dataclass(frozen=True)
class OccurrenceMap:
    """Occurrence thresholds of every state, exact up to ``n_cap``.

    ``values[q]`` is the smallest population size at which state ``q``
    occurs; states absent from ``values`` are in ``unknown`` and occur first
    (if ever) beyond ``n_cap``.  When a reachability cap aborted the sweep,
    ``cap_error`` holds the message and ``n_cap`` is the last size actually
    completed — established values stay valid either way.
    """

    protocol: Protocol
    n_cap: int
    values: dict[int, int]
    unknown: frozenset[int]
    cap_error: str | None = None

    def by_name(self) -> dict[str, int | None]:
        out: dict[str, int | None] = {}
        for s in self.protocol.states:
            out[s.name] = self.values.get(s.index)
        return out


def occurrence_upper_bounds(p: Protocol) -> dict[int, int]:
    """Additive fixpoint bound on occurrence thresholds.

    Seed the initial state with 1; a result state of an encounter ``(a, b)``
    is bounded by ``bound(a) + bound(b)`` (``2 * bound(a)`` on the diagonal),
    since disjoint witness populations can be combined and the two witness
    agents made to meet.  States never reached by the fixpoint are omitted.
    The true threshold can be smaller — one agent may serve both roles — so
    this is only an upper bound, useful as an independent cross-check.
    """
    bound: dict[int, int] = {p.q_init: 1}
    changed = True
    while changed:
        changed = False
        for a, b, cell in p.delta:
            ba = bound.get(a)
            bb = bound.get(b)
            if ba is None or bb is None:
                continue
            cand = ba + bb
            for c, d in cell:
                for q in (c, d):
                    cur = bound.get(q)
                    if cur is None or cand < cur:
                        bound[q] = cand
                        changed = True
    return bound


def occurrence_thresholds(
    p: Protocol, n_cap: int, node_cap: int = DEFAULT_NODE_CAP
) -> OccurrenceMap:
    """Exact occurrence thresholds by sweeping ``n = 1 .. n_cap``.

    Occurrence is monotone in ``n`` (a larger population can park its extra
    agents in the initial state and replay any smaller population's run, and
    every protocol here leaves ``(q, q_init)`` encounters available), so the
    first ``n`` whose reachable set contains ``q`` is exact.  The sweep
    stops early once every state has occurred.  If some size exceeds the
    node cap the sweep stops there and the remaining states are reported
    unknown beyond the last completed size.
    """
    if n_cap < 1:
        raise ValueError("n_cap must be >= 1")
    values: dict[int, int] = {}
    done = 0
    cap_error: str | None = None
    for n in range(1, n_cap + 1):
        try:
            g = reach(p, n, node_cap)
        except CapExceeded as exc:
            cap_error = str(exc)
            break
        for q in occurring_states(g):
            values.setdefault(q, n)
        done = n
        if len(values) == p.num_states:
            done = n_cap
            break
    fixpoint = occurrence_upper_bounds(p)
    for q, v in values.items():
        ub = fixpoint.get(q)
        if ub is not None and v > ub:
            raise RuntimeError(
                f"cross-check failed for {p.name!r}: state {p.display(q)} "
                f"first occurs at n={v} but the additive bound is {ub}"
            )
    for q, ub in fixpoint.items():
        if ub <= done and q not in values:
            raise RuntimeError(
                f"cross-check failed for {p.name!r}: state {p.display(q)} "
                f"has additive bound {ub} <= {done} but never occurred"
            )
    unknown = frozenset(range(p.num_states)) - values.keys()
    return OccurrenceMap(
        protocol=p, n_cap=done, values=values, unknown=unknown, cap_error=cap_error
    )


def check_doubling_gaps(om: OccurrenceMap) -> Verdict:
    """Consecutive distinct finite occurrence thresholds at most double.

    Fails with the witness pair ``(smaller, larger)`` if some gap exceeds
    a factor of two — which for a sound protocol would contradict the
    additive-combination argument.
    """
    vals = sorted(set(om.values.values()))
    for lo, hi in zip(vals, vals[1:]):
        if hi > 2 * lo:
            return Verdict("fails", (lo, hi))
    return HOLDS


def check_state_lower_bound(p: Protocol, d: int) -> Verdict:
    """Any 1-aware protocol for threshold ``d`` needs ``log2(d) + 1`` states.

    Checked in integers: holds iff ``2**(|Q| - 1) >= d``.  The witness on
    failure is ``(|Q|, d)``.
    """
    if d < 1:
        raise ValueError("threshold must be >= 1")
    if 2 ** (p.num_states - 1) >= d:
        return HOLDS
    return Verdict("fails", (p.num_states, d))
