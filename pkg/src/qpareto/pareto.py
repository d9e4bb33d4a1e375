"""Pareto dominance, non-dominated set extraction, and accuracy metrics.

All objectives are minimized. The default dominance relation is the weak
form (no worse everywhere, strictly better somewhere); the all-strict
literal form is available behind the ``mode`` switch. Routes with identical
utility vectors never dominate each other and therefore coexist in fronts.
"""

from __future__ import annotations

import json
from typing import Iterable, Mapping

import numpy as np

from .network import RouteEvaluator, Topology, UtilityVector
from .routes import Route, enumerate_all_routes, parse_route, route_text

DOMINANCE_MODES = ("weak", "strict")

# below this many candidates a plain python sweep beats numpy dispatch
_VECTOR_CUTOFF = 96


def dominates(f1: UtilityVector, f2: UtilityVector, mode: str = "weak") -> bool:
    """True iff ``f1`` Pareto-dominates ``f2`` (minimization).

    Weak mode: componentwise <= with at least one strict <. Strict mode:
    strictly lower in every component. Both are strict partial orders.
    """
    if mode == "weak":
        return (
            f1[0] <= f2[0] and f1[1] <= f2[1] and f1[2] <= f2[2]
            and (f1[0] < f2[0] or f1[1] < f2[1] or f1[2] < f2[2])
        )
    if mode == "strict":
        return f1[0] < f2[0] and f1[1] < f2[1] and f1[2] < f2[2]
    raise ValueError(f"dominance mode must be one of {DOMINANCE_MODES}")


class ParetoFront:
    """An immutable set of mutually non-dominated (route, utility) pairs.

    Construction filters nothing; callers pass already-filtered members (use
    :func:`non_dominated_set`). Deduplication is by route.
    """

    __slots__ = ("_members",)

    def __init__(self, members: Mapping[Route, UtilityVector] | Iterable[tuple[Route, UtilityVector]] = ()):
        self._members = dict(members)

    @property
    def routes(self) -> frozenset[Route]:
        return frozenset(self._members)

    def members(self) -> dict[Route, UtilityVector]:
        return dict(self._members)

    def utility(self, route: Route) -> UtilityVector:
        return self._members[route]

    def __len__(self) -> int:
        return len(self._members)

    def __contains__(self, route: Route) -> bool:
        return route in self._members

    def __iter__(self):
        return iter(self._members.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParetoFront):
            return NotImplemented
        return self._members == other._members

    def __repr__(self) -> str:
        return f"ParetoFront({len(self._members)} members)"

    def to_json(self) -> str:
        doc = [
            {"route": route_text(r), "ber": uv.ber, "power_loss": uv.power_loss, "delay": uv.delay}
            for r, uv in sorted(self._members.items())
        ]
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ParetoFront":
        doc = json.loads(text)
        return cls(
            (parse_route(e["route"]), UtilityVector(e["ber"], e["power_loss"], e["delay"]))
            for e in doc
        )


def non_dominated_set(
    candidates: Mapping[Route, UtilityVector] | Iterable[tuple[Route, UtilityVector]],
    mode: str = "weak",
) -> ParetoFront:
    """Exact non-dominated subset of ``candidates`` under the given mode.

    Small inputs go through a sorted sweep; large ones through a vectorized
    masking pass. Both return members in a deterministic order.
    """
    if mode not in DOMINANCE_MODES:
        raise ValueError(f"dominance mode must be one of {DOMINANCE_MODES}")
    pairs = list(candidates.items()) if isinstance(candidates, Mapping) else list(candidates)
    if len(pairs) > _VECTOR_CUTOFF:
        return _non_dominated_vectorized(pairs, mode)
    return _non_dominated_sweep(pairs, mode)


def _non_dominated_sweep(pairs: list[tuple[Route, UtilityVector]], mode: str) -> ParetoFront:
    # lexicographic sort puts every dominator ahead of what it dominates,
    # so checking new candidates against the running front alone is exact
    pairs.sort(key=lambda item: (item[1], item[0]))
    strict = mode == "strict"
    front: list[tuple[Route, UtilityVector]] = []
    front_uvs: list[UtilityVector] = []
    for route, uv in pairs:
        b, l, d = uv
        dominated = False
        for fb, fl, fd in front_uvs:
            if strict:
                if fb < b and fl < l and fd < d:
                    dominated = True
                    break
            elif fb <= b and fl <= l and fd <= d and (fb, fl, fd) != (b, l, d):
                dominated = True
                break
        if not dominated:
            front.append((route, uv))
            front_uvs.append(uv)
    return ParetoFront(front)


def _non_dominated_vectorized(pairs: list[tuple[Route, UtilityVector]], mode: str) -> ParetoFront:
    pairs.sort(key=lambda item: (item[1], item[0]))
    costs = np.asarray([uv for _, uv in pairs])
    alive = np.arange(len(pairs))
    pos = 0
    while pos < len(costs):
        pivot = costs[pos]
        if mode == "strict":
            keep = ~np.all(pivot < costs, axis=1)
        else:
            keep = np.any(costs < pivot, axis=1) | np.all(costs == pivot, axis=1)
        keep[pos] = True
        alive = alive[keep]
        costs = costs[keep]
        pos = int(np.count_nonzero(keep[:pos])) + 1
    return ParetoFront(pairs[i] for i in alive)


def brute_force_opf(topology: Topology, evaluator: RouteEvaluator | None = None, mode: str = "weak") -> ParetoFront:
    """Ground-truth optimal Pareto front by exhaustive route enumeration."""
    evaluator = evaluator or RouteEvaluator(topology)
    routes = enumerate_all_routes(topology.n_nodes)
    costs = evaluator.evaluate_database(routes)
    pairs = [
        (r, UtilityVector(row[0], row[1], int(row[2])))
        for r, row in zip(routes, costs.tolist())
    ]
    return non_dominated_set(pairs, mode=mode)


def pareto_distance(
    identified: ParetoFront,
    all_routes_with_uv: Mapping[Route, UtilityVector],
    true_opf: ParetoFront,
    mode: str = "weak",
) -> tuple[float, float]:
    """Misdetection rate and graded dominance-count distance of a found front.

    The misdetection rate is the fraction of identified members that are not
    in the true front (route identity). The graded distance averages, over
    identified members, the share of all routes that dominate the member.
    """
    if len(identified) == 0:
        raise ValueError("identified front is empty")
    true_routes = true_opf.routes
    wrong = sum(1 for r in identified.routes if r not in true_routes)
    misdetection = wrong / len(identified)

    costs = np.asarray(list(all_routes_with_uv.values()))
    total = len(all_routes_with_uv)
    graded_sum = 0.0
    for _, uv in identified:
        target = np.asarray(uv)
        if mode == "strict":
            dominating = np.all(costs < target, axis=1)
        else:
            dominating = np.all(costs <= target, axis=1) & np.any(costs < target, axis=1)
        graded_sum += float(np.count_nonzero(dominating)) / total
    return misdetection, graded_sum / len(identified)


def pareto_completion(identified: ParetoFront, true_opf: ParetoFront) -> float:
    """Fraction of the true front recovered, by route identity."""
    if len(true_opf) == 0:
        raise ValueError("true front is empty")
    return len(identified.routes & true_opf.routes) / len(true_opf)
