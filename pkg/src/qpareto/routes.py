"""Loopless source-to-destination routes and the trellis operators on them.

A route is a plain tuple of 1-based node indices: node 1 is the source,
node ``n_nodes`` is the destination, and every intermediate entry is a
distinct relay index in ``2..n_nodes-1``. The trellis stage of a route is
its relay count, so the direct route sits at stage 0 and each forward
expansion moves one stage deeper.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations

Route = tuple[int, ...]

# Exhaustive enumeration grows factorially; 12 nodes is already ~10^7 routes.
ENUMERATION_GUARD = 12

EXPANSION_RULES = ("any-slot", "last-slot")


def stage(route: Route) -> int:
    """Trellis stage of a route: the number of relay nodes it contains."""
    return len(route) - 2


def validate_route(route: Route, n_nodes: int) -> None:
    """Raise ValueError unless ``route`` is a valid loopless SN->DN sequence."""
    if len(route) < 2:
        raise ValueError(f"route too short: {route!r}")
    if route[0] != 1 or route[-1] != n_nodes:
        raise ValueError(f"route {route!r} must start at node 1 and end at node {n_nodes}")
    if len(set(route)) != len(route):
        raise ValueError(f"route {route!r} repeats a node")
    for rn in route[1:-1]:
        if not 2 <= rn <= n_nodes - 1:
            raise ValueError(f"route {route!r} contains invalid relay index {rn}")


def direct_route(n_nodes: int) -> Route:
    """The stage-0 route that connects the source straight to the destination."""
    if n_nodes < 2:
        raise ValueError(f"need at least 2 nodes, got {n_nodes}")
    return (1, n_nodes)


def expand_route(route: Route, n_nodes: int, rule: str = "any-slot") -> set[Route]:
    """All stage+1 routes obtained by inserting one unused relay into ``route``.

    With the default ``any-slot`` rule the relay may go between any pair of
    consecutive nodes, which yields ``(unused relays) * (len(route)-1)``
    children. The restrictive ``last-slot`` rule only inserts between the
    last relay and the destination (one child per unused relay).
    """
    if rule not in EXPANSION_RULES:
        raise ValueError(f"unknown expansion rule {rule!r}")
    used = set(route)
    unused = [rn for rn in range(2, n_nodes) if rn not in used]
    if rule == "last-slot":
        slots: tuple[int, ...] = (len(route) - 1,)
    else:
        slots = tuple(range(1, len(route)))
    return {route[:pos] + (rn,) + route[pos:] for rn in unused for pos in slots}


def so_backtrace(route: Route) -> list[Route]:
    """Chain of routes reached by repeatedly deleting the last relay.

    Element ``j`` has stage ``stage(route) - (j+1)``; the chain ends at the
    direct route and is empty when ``route`` is already direct.
    """
    chain: list[Route] = []
    current = route
    while len(current) > 2:
        current = current[:-2] + current[-1:]
        chain.append(current)
    return chain


def mo_backtrace(route: Route, n: int) -> set[Route]:
    """Routes reachable by deleting one relay at a time, up to ``n`` deletions.

    Returns the union over depths ``1..min(n, stage(route))`` of every
    single-relay removal, deduplicated. Depth 0 returns the empty set.
    """
    if n < 0:
        raise ValueError(f"back-trace depth must be >= 0, got {n}")
    visited: set[Route] = set()
    frontier = {route}
    for _ in range(min(n, stage(route))):
        frontier = {
            r[:pos] + r[pos + 1:]
            for r in frontier
            for pos in range(1, len(r) - 1)
        }
        visited |= frontier
    return visited


@lru_cache(maxsize=16)
def enumerate_all_routes(n_nodes: int) -> tuple[Route, ...]:
    """Every loopless SN->DN route, i.e. every ordered selection of relays.

    The result is cached per node count (it does not depend on topology) and
    ordered by stage, then lexicographically, so downstream consumers see a
    deterministic sequence.
    """
    if n_nodes < 2:
        raise ValueError(f"need at least 2 nodes, got {n_nodes}")
    if n_nodes > ENUMERATION_GUARD:
        raise ValueError(
            f"exhaustive enumeration limited to {ENUMERATION_GUARD} nodes, got {n_nodes}"
        )
    relays = range(2, n_nodes)
    routes = [
        (1,) + middle + (n_nodes,)
        for k in range(n_nodes - 1)
        for middle in permutations(relays, k)
    ]
    return tuple(sorted(routes, key=lambda r: (len(r), r)))


def route_text(route: Route) -> str:
    """Render a route in its ``1->2->5`` text form for logs and CSV columns."""
    return "->".join(str(v) for v in route)


def parse_route(text: str) -> Route:
    """Inverse of :func:`route_text`."""
    try:
        return tuple(int(part) for part in text.split("->"))
    except ValueError as exc:
        raise ValueError(f"malformed route text {text!r}") from exc
