"""The evolutionary trellis optimizer and its back-tracing extensions.

Three variants share one machinery:

* ``eqpo`` -- the baseline: start from the direct route, repeatedly expand
  the surviving routes one relay deeper, keep the non-dominated set, stop
  when a stage yields nothing new.
* ``bta-eqpo`` -- adds two back-tracing processes: per-objective trellis
  dynamic programming plus single-objective back-tracing to pre-populate
  the survivor sets (so the forward pass cannot die early), and an n-deep
  multi-objective back-trace around the identified front afterwards.
* ``bta-eqpo-full-search`` -- same initialization and forward pass, then a
  final emulated quantum search over the entire route database; with the
  exact-mode emulator this provably lands on the true Pareto front.

All search work is charged to a :class:`~qpareto.quantum.CfeLedger` through
the emulator's cost model. Classical trellis comparisons are charged as
``n_nodes^2`` sequential CFEs per stage; they count one parallel CFE per
stage because the per-stage comparisons are independent and map onto fully
parallel hardware.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping

import numpy as np

from .network import RouteEvaluator, Topology, UtilityVector
from .pareto import ParetoFront, non_dominated_set
from .quantum import CfeLedger, SearchConfig, quantum_search_nondominated
from .routes import (
    EXPANSION_RULES,
    Route,
    direct_route,
    enumerate_all_routes,
    expand_route,
    mo_backtrace,
    route_text,
    so_backtrace,
    stage,
    validate_route,
)

VARIANTS = ("eqpo", "bta-eqpo", "bta-eqpo-full-search")
OBJECTIVES = ("ber", "loss", "delay")

TraceSink = Callable[[dict], None]


@dataclass
class TrellisState:
    """Bookkeeping of what entered the front and survivor sets, per stage."""

    stage_index: int = 0
    opf_by_stage: dict[int, set[Route]] = field(default_factory=dict)
    surv_by_stage: dict[int, set[Route]] = field(default_factory=dict)
    gen_current: set[Route] = field(default_factory=set)

    def store_opf(self, route: Route) -> None:
        self.opf_by_stage.setdefault(stage(route), set()).add(route)

    def store_survivor(self, route: Route) -> None:
        self.surv_by_stage.setdefault(stage(route), set()).add(route)


@dataclass(frozen=True)
class AlgorithmConfig:
    """Variant selection and the rule switches threaded through a run."""

    variant: str = "bta-eqpo"
    backtrace_n: int = 2
    expansion: str = "any-slot"
    dominance: str = "weak"
    refilter_each_stage: bool = True
    search: SearchConfig = field(default_factory=SearchConfig)

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.backtrace_n < 0:
            raise ValueError("backtrace_n must be >= 0")
        if self.expansion not in EXPANSION_RULES:
            raise ValueError(f"expansion must be one of {EXPANSION_RULES}")
        if self.search.dominance != self.dominance:
            object.__setattr__(self, "search", replace(self.search, dominance=self.dominance))

    @property
    def label(self) -> str:
        return self.variant


def single_objective_dp(
    topology: Topology,
    objective: str,
    ledger: CfeLedger,
    evaluator: RouteEvaluator | None = None,
) -> Route:
    """Globally optimal route for one objective via trellis dynamic programming.

    Keeps the best partial route per end node per stage, closing each stage
    against the destination. Partials are allowed to revisit nodes; because
    every hop strictly worsens each objective, any such walk is strictly
    beaten by its loop-free shortcut, so the reported optimum is always a
    valid route equal to the exhaustive minimum. Ties break toward the
    lexicographically smaller node sequence.

    Each trellis stage charges ``n_nodes^2`` sequential CFEs and one
    parallel CFE (the stage's comparisons are mutually independent).
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    n = topology.n_nodes
    ev = evaluator or RouteEvaluator(topology)
    if objective == "ber":
        rows = ev.ber_rows

        def extend(acc: float, i: int, j: int) -> float:
            link = rows[i - 1][j - 1]
            return acc + link - 2.0 * acc * link

    elif objective == "loss":
        rows = ev.loss_rows  # linear or dB scale; argmin is the same either way

        def extend(acc: float, i: int, j: int) -> float:
            return acc + rows[i - 1][j - 1]

    else:

        def extend(acc: float, i: int, j: int) -> float:
            return acc + 1.0

    relays = range(2, n)
    best: dict[int, tuple[float, Route]] = {}
    complete = (extend(0.0, 1, n), (1, n))
    for trellis_stage in range(1, n - 1):
        ledger.charge(parallel=1.0, sequential=float(n * n))
        if trellis_stage == 1:
            best = {v: (extend(0.0, 1, v), (1, v)) for v in relays}
        else:
            best = {
                u: min(
                    (extend(val, v, u), rt + (u,))
                    for v, (val, rt) in best.items()
                    if v != u
                )
                for u in relays
            }
        closing = min((extend(val, v, n), rt + (n,)) for v, (val, rt) in best.items())
        complete = min(complete, closing)
    route = complete[1]
    if len(set(route)) != len(route):
        raise RuntimeError(f"trellis optimum degenerated into a walk: {route}")
    return route


def so_btp_initialize(optimal_routes: Iterable[Route], state: TrellisState) -> TrellisState:
    """Seed the trellis sets from the per-objective optimal routes.

    Each optimum lands in the front set of its own stage; every route on its
    last-relay-removal chain lands in the survivor set of its stage, ending
    with the direct route at stage 0.
    """
    for route in sorted(set(optimal_routes)):
        state.store_opf(route)
        for ancestor in so_backtrace(route):
            state.store_survivor(ancestor)
    return state


def eqpo_loop(
    topology: Topology,
    state: TrellisState,
    config: AlgorithmConfig,
    ledger: CfeLedger,
    rng: np.random.Generator,
    evaluator: RouteEvaluator | None = None,
    trace: TraceSink | None = None,
) -> dict[Route, UtilityVector]:
    """Forward evolutionary pass over the trellis; returns the cumulative front.

    Per stage: expand last stage's survivors one relay deeper, union in the
    current front, run the emulated non-dominated search seeded with that
    front, then record the newly found members as this stage's survivors
    (together with any pre-populated ones). Stops when survivors run out or
    the deepest stage is reached.
    """
    ev = evaluator or RouteEvaluator(topology)
    n = topology.n_nodes
    direct = direct_route(n)
    state.store_opf(direct)
    state.store_survivor(direct)
    state.gen_current = {direct}
    front: dict[Route, UtilityVector] = {direct: ev.utility(direct)}
    pool: dict[Route, UtilityVector] = dict(front)
    survivors: set[Route] = set(state.surv_by_stage[0])
    i = 0
    while i < n - 2 and survivors:
        i += 1
        state.stage_index = i
        gen: dict[Route, UtilityVector] = {}
        for parent in sorted(survivors):
            for child in expand_route(parent, n, config.expansion):
                if child not in gen:
                    gen[child] = ev.utility(child)
        for r, uv in front.items():
            gen.setdefault(r, uv)
        state.gen_current = set(gen)
        seed = ParetoFront(front)
        identified = quantum_search_nondominated(gen, seed, config.search, ledger, rng)

        prestored = state.opf_by_stage.get(i, set())
        merged = identified.members()
        for r in prestored:
            merged.setdefault(r, ev.utility(r))
        marker = set(front) if config.refilter_each_stage else set(pool)
        pool.update(merged)
        if prestored - set(identified.members()):
            front = non_dominated_set(merged, mode=config.dominance).members()
        else:
            front = merged
        current = front if config.refilter_each_stage else pool
        new_members = {r for r in current if r not in marker}
        survivors = new_members | state.surv_by_stage.get(i, set())
        for r in new_members:
            state.store_opf(r)
        for r in survivors:
            state.store_survivor(r)
        if trace:
            trace(
                {
                    "event": "stage",
                    "stage": i,
                    "generated": len(gen),
                    "new_front_members": len(new_members),
                    "survivors": len(survivors),
                    "front_size": len(front),
                    "parallel_cfes": ledger.parallel_cfes,
                    "sequential_cfes": ledger.sequential_cfes,
                }
            )
    if not config.refilter_each_stage:
        return pool
    return front


def mo_btp_stage(
    topology: Topology,
    front: dict[Route, UtilityVector],
    state: TrellisState,
    config: AlgorithmConfig,
    ledger: CfeLedger,
    rng: np.random.Generator,
    evaluator: RouteEvaluator | None = None,
    trace: TraceSink | None = None,
) -> dict[Route, UtilityVector]:
    """Back-trace ``backtrace_n`` stages around the front and re-search.

    Generates every route reachable from a front member by deleting up to n
    relays, then runs one emulated search over that neighborhood united with
    the front, seeded by the front. Depth 0 leaves the front untouched.
    """
    ev = evaluator or RouteEvaluator(topology)
    depth = min(config.backtrace_n, topology.n_nodes - 2)
    generated: set[Route] = set()
    for route in front:
        generated |= mo_backtrace(route, depth)
    state.stage_index += 1
    state.gen_current = set(generated)
    if not generated:
        return front
    db = {r: ev.utility(r) for r in sorted(generated)}
    for r, uv in front.items():
        db.setdefault(r, uv)
    refined = quantum_search_nondominated(db, ParetoFront(front), config.search, ledger, rng)
    if trace:
        trace(
            {
                "event": "back-trace",
                "depth": depth,
                "generated": len(generated),
                "front_size": len(refined),
                "parallel_cfes": ledger.parallel_cfes,
                "sequential_cfes": ledger.sequential_cfes,
            }
        )
    return refined.members()


def _full_database_stage(
    topology: Topology,
    front: dict[Route, UtilityVector],
    state: TrellisState,
    config: AlgorithmConfig,
    ledger: CfeLedger,
    rng: np.random.Generator,
    evaluator: RouteEvaluator,
    trace: TraceSink | None = None,
) -> dict[Route, UtilityVector]:
    routes = enumerate_all_routes(topology.n_nodes)
    costs = evaluator.evaluate_database(routes)
    db = {
        r: UtilityVector(row[0], row[1], int(row[2]))
        for r, row in zip(routes, costs.tolist())
    }
    state.stage_index += 1
    state.gen_current = set(routes)
    refined = quantum_search_nondominated(db, ParetoFront(front), config.search, ledger, rng)
    if trace:
        trace(
            {
                "event": "full-search",
                "database": len(db),
                "front_size": len(refined),
                "parallel_cfes": ledger.parallel_cfes,
                "sequential_cfes": ledger.sequential_cfes,
            }
        )
    return refined.members()


def run(
    topology: Topology,
    config: AlgorithmConfig,
    seed: int = 0,
    evaluator: RouteEvaluator | None = None,
    trace: TraceSink | None = None,
) -> tuple[ParetoFront, CfeLedger]:
    """Execute one optimizer variant end to end on one topology.

    Returns the exported front (always internally non-dominated) and the
    accumulated CFE ledger. Deterministic given (topology, config, seed).
    """
    ev = evaluator or RouteEvaluator(topology)
    ledger = CfeLedger()
    rng = np.random.default_rng(seed)
    state = TrellisState()
    state.surv_by_stage.setdefault(0, set())

    if config.variant in ("bta-eqpo", "bta-eqpo-full-search"):
        optima = []
        for objective in OBJECTIVES:
            before = ledger.snapshot()
            best = single_objective_dp(topology, objective, ledger, evaluator=ev)
            optima.append(best)
            if trace:
                after = ledger.snapshot()
                trace(
                    {
                        "event": "single-objective-dp",
                        "objective": objective,
                        "route": route_text(best),
                        "parallel_cfes": after[0] - before[0],
                        "sequential_cfes": after[1] - before[1],
                    }
                )
        so_btp_initialize(optima, state)
        if trace:
            trace(
                {
                    "event": "so-btp",
                    "opf_stages": {s: len(v) for s, v in sorted(state.opf_by_stage.items())},
                    "survivor_stages": {s: len(v) for s, v in sorted(state.surv_by_stage.items())},
                }
            )

    front = eqpo_loop(topology, state, config, ledger, rng, evaluator=ev, trace=trace)

    # absorb optima pre-stored at stages the forward pass never reached
    for routes in state.opf_by_stage.values():
        for r in routes:
            front.setdefault(r, ev.utility(r))

    if config.variant == "bta-eqpo":
        front = mo_btp_stage(topology, front, state, config, ledger, rng, evaluator=ev, trace=trace)
    elif config.variant == "bta-eqpo-full-search":
        front = _full_database_stage(topology, front, state, config, ledger, rng, ev, trace=trace)

    exported = non_dominated_set(front, mode=config.dominance)
    if trace:
        trace(
            {
                "event": "export",
                "front_size": len(exported),
                "parallel_cfes": ledger.parallel_cfes,
                "sequential_cfes": ledger.sequential_cfes,
            }
        )
    return exported, ledger
