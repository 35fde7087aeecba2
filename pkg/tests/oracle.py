"""Independent reference semantics used by the tests.

Everything here is deliberately naive and shares no machinery with the
package: configurations are agent-indexed tuples, transitions pick ordered
pairs of agent positions, reachability is a plain set-based BFS.  The
package's multiset engine must agree with the permutation quotient of this
semantics exactly.
"""

from __future__ import annotations

from flockpp import Protocol


def agent_graph(p: Protocol, n: int) -> tuple[set[tuple], set[tuple]]:
    """Reachable agent-tuples from all-q_init, plus every one-step edge."""
    init = (p.q_init,) * n
    seen = {init}
    frontier = [init]
    edges: set[tuple] = set()
    while frontier:
        nxt_frontier = []
        for cfg in frontier:
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    for c, d in p.delta_of(cfg[i], cfg[j]):
                        out = list(cfg)
                        out[i] = c
                        out[j] = d
                        out_t = tuple(out)
                        edges.add((cfg, out_t))
                        if out_t not in seen:
                            seen.add(out_t)
                            nxt_frontier.append(out_t)
        frontier = nxt_frontier
    return seen, edges


def sorted_multiset(cfg: tuple) -> tuple:
    return tuple(sorted(cfg))


def quotient_nodes(nodes: set[tuple]) -> set[tuple]:
    return {sorted_multiset(c) for c in nodes}


def quotient_edges(edges: set[tuple]) -> set[tuple[tuple, tuple]]:
    return {(sorted_multiset(a), sorted_multiset(b)) for a, b in edges}


def occurrence_by_sweep(p: Protocol, n_max: int) -> dict[int, int]:
    """First population size at which each state occurs, for n <= n_max."""
    first: dict[int, int] = {}
    for n in range(1, n_max + 1):
        nodes, _ = agent_graph(p, n)
        for cfg in nodes:
            for q in cfg:
                first.setdefault(q, n)
    return first
