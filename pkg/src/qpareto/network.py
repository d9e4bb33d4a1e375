"""Wireless multihop network model: random topologies and route objectives.

The network lives on a square block with the source and destination pinned
to opposite corners and relays scattered uniformly inside. Each node sees a
Gaussian-distributed interference power (in dBm). Per link, the model gives
a free-space-style path loss and a closed-form Rayleigh-fading QPSK bit
error ratio; per route, the three objectives are the end-to-end BER, the
aggregate power loss, and the hop count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .routes import Route, validate_route

LOSS_AGGREGATIONS = ("linear-sum", "db-sum")


@dataclass(frozen=True)
class ChannelParams:
    """Channel and geometry constants shared by every link in a topology.

    ``loss_aggregation`` selects how per-link dB losses combine into the
    route-level power objective: ``linear-sum`` (default) adds the linear
    attenuation factors and reports 10*log10 of the sum, ``db-sum`` adds the
    dB values literally.
    """

    path_loss_exponent: float = 3.0
    carrier_wavelength: float = 0.125
    tx_power_dbm: float = 20.0
    interference_mean_dbm: float = -90.0
    interference_std_db: float = 10.0
    area_side: float = 100.0
    loss_aggregation: str = "linear-sum"

    def __post_init__(self) -> None:
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be > 0")
        if self.carrier_wavelength <= 0:
            raise ValueError("carrier_wavelength must be > 0")
        if self.area_side <= 0:
            raise ValueError("area_side must be > 0")
        if self.interference_std_db < 0:
            raise ValueError("interference_std_db must be >= 0")
        if self.loss_aggregation not in LOSS_AGGREGATIONS:
            raise ValueError(f"loss_aggregation must be one of {LOSS_AGGREGATIONS}")


class UtilityVector(NamedTuple):
    """Objective triple of a route: BER, aggregate power loss (dB), hop count."""

    ber: float
    power_loss: float
    delay: int


@dataclass(frozen=True)
class Topology:
    """An immutable snapshot of node positions and per-node interference.

    Node indices are 1-based: node 1 is the source at (0, 0), node
    ``n_nodes`` is the destination at the opposite corner, everything in
    between is a relay.
    """

    node_positions: tuple[tuple[float, float], ...]
    interference_dbm: tuple[float, ...]
    params: ChannelParams = field(default_factory=ChannelParams)

    def __post_init__(self) -> None:
        n = len(self.node_positions)
        if n < 2:
            raise ValueError("topology needs at least source and destination")
        if len(self.interference_dbm) != n:
            raise ValueError("one interference value per node required")
        side = self.params.area_side
        if self.node_positions[0] != (0.0, 0.0):
            raise ValueError("source must sit at (0, 0)")
        if self.node_positions[-1] != (side, side):
            raise ValueError(f"destination must sit at ({side}, {side})")
        for x, y in self.node_positions:
            if not (0.0 <= x <= side and 0.0 <= y <= side):
                raise ValueError(f"position ({x}, {y}) outside the {side} m square")

    @property
    def n_nodes(self) -> int:
        return len(self.node_positions)

    def distance(self, i: int, j: int) -> float:
        xi, yi = self.node_positions[i - 1]
        xj, yj = self.node_positions[j - 1]
        return math.hypot(xi - xj, yi - yj)

    def to_json(self) -> str:
        """Serialize to the documented reproducibility schema."""
        doc = {
            "n_nodes": self.n_nodes,
            "node_positions": [list(p) for p in self.node_positions],
            "interference_dbm": list(self.interference_dbm),
            "params": asdict(self.params),
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        doc = json.loads(text)
        params = ChannelParams(**doc["params"])
        return cls(
            node_positions=tuple((float(x), float(y)) for x, y in doc["node_positions"]),
            interference_dbm=tuple(float(v) for v in doc["interference_dbm"]),
            params=params,
        )


def generate_topology(n_nodes: int, seed: int, params: ChannelParams | None = None) -> Topology:
    """Draw a random topology: corner-pinned endpoints, uniform relays.

    Relay positions are i.i.d. uniform over the square; per-node interference
    is Normal(mean, std^2) in dBm. The draw is a pure function of
    ``(n_nodes, seed, params)``. Relays that land exactly on an existing node
    (possible only through floating-point coincidence) are redrawn.
    """
    if n_nodes < 2:
        raise ValueError(f"need at least 2 nodes, got {n_nodes}")
    params = params or ChannelParams()
    rng = np.random.default_rng(seed)
    side = params.area_side
    positions: list[tuple[float, float]] = [(0.0, 0.0)]
    taken = {(0.0, 0.0), (side, side)}
    for _ in range(n_nodes - 2):
        while True:
            x, y = rng.uniform(0.0, side, size=2)
            point = (float(x), float(y))
            if point not in taken:
                taken.add(point)
                positions.append(point)
                break
    positions.append((side, side))
    interference = rng.normal(params.interference_mean_dbm, params.interference_std_db, size=n_nodes)
    return Topology(
        node_positions=tuple(positions),
        interference_dbm=tuple(float(v) for v in interference),
        params=params,
    )


def link_path_loss_db(topology: Topology, i: int, j: int) -> float:
    """Path loss in dB of the i->j link: ``10*alpha*log10(4*pi*d/lambda)``."""
    _check_link(topology, i, j)
    p = topology.params
    d = topology.distance(i, j)
    return 10.0 * p.path_loss_exponent * math.log10(4.0 * math.pi * d / p.carrier_wavelength)


def link_ber(topology: Topology, i: int, j: int) -> float:
    """Mean bit error ratio of QPSK over flat Rayleigh fading on link i->j.

    The mean linear SINR at the receiving node j is
    ``10**((tx_power - loss_dB - interference_j)/10)`` and the averaged BER
    is ``0.5*(1 - sqrt(g/(1+g)))``, which lives strictly inside (0, 0.5).
    """
    _check_link(topology, i, j)
    p = topology.params
    sinr_db = p.tx_power_dbm - link_path_loss_db(topology, i, j) - topology.interference_dbm[j - 1]
    g = 10.0 ** (sinr_db / 10.0)
    return 0.5 * (1.0 - math.sqrt(g / (1.0 + g)))


def combine_ber(p1: float, p2: float) -> float:
    """Compose two binary-symmetric-channel stages: ``p1 + p2 - 2*p1*p2``.

    Both inputs must lie in [0, 0.5]; the result stays in [0, 0.5]. This
    composition is commutative, associative, and monotone in each argument.
    """
    for p in (p1, p2):
        if not 0.0 <= p <= 0.5:
            raise ValueError(f"BER {p} outside [0, 0.5]")
    return p1 + p2 - 2.0 * p1 * p2


def route_utility(topology: Topology, route: Route) -> UtilityVector:
    """Evaluate the objective triple [BER, power loss, hop count] of a route."""
    validate_route(route, topology.n_nodes)
    ber = 0.0
    for i, j in zip(route, route[1:]):
        ber = combine_ber(ber, link_ber(topology, i, j))
    losses = [link_path_loss_db(topology, i, j) for i, j in zip(route, route[1:])]
    return UtilityVector(ber=ber, power_loss=_aggregate_loss(losses, topology.params), delay=len(route) - 1)


def _aggregate_loss(losses_db: Sequence[float], params: ChannelParams) -> float:
    if params.loss_aggregation == "db-sum":
        return float(sum(losses_db))
    linear = 0.0
    for loss in losses_db:
        linear += 10.0 ** (loss / 10.0)
    return 10.0 * math.log10(linear)


def _check_link(topology: Topology, i: int, j: int) -> None:
    n = topology.n_nodes
    for v in (i, j):
        if not 1 <= v <= n:
            raise ValueError(f"node index {v} outside 1..{n}")
    if i == j:
        raise ValueError(f"degenerate zero-length link {i}->{j}")


class RouteEvaluator:
    """Memoized route-objective evaluation against one topology.

    Precomputes the per-link loss and BER matrices once, serves single-route
    lookups from a cache, and offers a vectorized whole-database path used by
    the exhaustive oracle and full-database searches. Instances are immutable
    apart from the cache and safe to share within a run.
    """

    def __init__(self, topology: Topology):
        self.topology = topology
        p = topology.params
        pos = np.asarray(topology.node_positions)
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((diff ** 2).sum(axis=2))
        np.fill_diagonal(dist, np.nan)
        loss_db = 10.0 * p.path_loss_exponent * np.log10(4.0 * np.pi * dist / p.carrier_wavelength)
        sinr_db = p.tx_power_dbm - loss_db - np.asarray(topology.interference_dbm)[None, :]
        g = 10.0 ** (sinr_db / 10.0)
        ber = 0.5 * (1.0 - np.sqrt(g / (1.0 + g)))
        self._loss_db = loss_db
        self._linear_loss = 10.0 ** (loss_db / 10.0)
        self._ber = ber
        # plain nested lists: scalar indexing is much faster than numpy here
        self._ber_rows = ber.tolist()
        self._loss_rows = (self._loss_db if p.loss_aggregation == "db-sum" else self._linear_loss).tolist()
        self._db_sum = p.loss_aggregation == "db-sum"
        self._cache: dict[Route, UtilityVector] = {}

    def utility(self, route: Route) -> UtilityVector:
        cached = self._cache.get(route)
        if cached is not None:
            return cached
        ber_rows = self._ber_rows
        loss_rows = self._loss_rows
        survive = 1.0  # probability-like product (1 - 2*ber) over the links
        loss = 0.0
        prev = route[0] - 1
        for node in route[1:]:
            cur = node - 1
            survive *= 1.0 - 2.0 * ber_rows[prev][cur]
            loss += loss_rows[prev][cur]
            prev = cur
        power = loss if self._db_sum else 10.0 * math.log10(loss)
        uv = UtilityVector(ber=0.5 * (1.0 - survive), power_loss=power, delay=len(route) - 1)
        self._cache[route] = uv
        return uv

    def utilities(self, routes: Iterable[Route]) -> dict[Route, UtilityVector]:
        return {r: self.utility(r) for r in routes}

    def evaluate_database(self, routes: Sequence[Route]) -> np.ndarray:
        """Vectorized (len(routes), 3) objective matrix, grouped by length."""
        out = np.empty((len(routes), 3))
        by_len: dict[int, list[int]] = {}
        for pos_idx, r in enumerate(routes):
            by_len.setdefault(len(r), []).append(pos_idx)
        for length, idxs in by_len.items():
            idx = np.asarray([routes[i] for i in idxs]) - 1
            if length == 2:
                heads, tails = idx[:, :1], idx[:, 1:]
            else:
                heads, tails = idx[:, :-1], idx[:, 1:]
            ber_links = self._ber[heads, tails]
            ber = 0.5 * (1.0 - np.multiply.reduce(1.0 - 2.0 * ber_links, axis=1))
            if self._db_sum:
                power = np.add.reduce(self._loss_db[heads, tails], axis=1)
            else:
                power = 10.0 * np.log10(np.add.reduce(self._linear_loss[heads, tails], axis=1))
            rows = np.asarray(idxs)
            out[rows, 0] = ber
            out[rows, 1] = power
            out[rows, 2] = length - 1
        return out
