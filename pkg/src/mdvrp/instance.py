"""MDVRP problem instances and the Cordeau benchmark file format.

Node indexing is flat: customers occupy ``0..N-1`` and depots ``N..N+M-1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

UNBOUNDED = math.inf


class ParseError(ValueError):
    """Malformed Cordeau file. ``lineno`` is 1-based, 0 when not line-specific."""

    def __init__(self, message: str, lineno: int = 0):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno else message)


@dataclass(frozen=True)
class Customer:
    id: int
    x: float
    y: float
    service_duration: float
    demand: float


@dataclass(frozen=True)
class Depot:
    id: int
    x: float
    y: float
    max_route_duration: float  # UNBOUNDED (inf) when the file says 0
    max_vehicle_load: float
    vehicles: int


@dataclass(frozen=True, eq=False)
class Instance:
    name: str
    customers: tuple[Customer, ...]
    depots: tuple[Depot, ...]

    @property
    def n_customers(self) -> int:
        return len(self.customers)

    @property
    def n_depots(self) -> int:
        return len(self.depots)

    @property
    def node_count(self) -> int:
        return len(self.customers) + len(self.depots)

    def depot_node(self, d: int) -> int:
        return len(self.customers) + d

    @cached_property
    def coords(self) -> np.ndarray:
        pts = [(c.x, c.y) for c in self.customers] + [(d.x, d.y) for d in self.depots]
        return np.asarray(pts, dtype=np.float64).reshape(-1, 2)

    @cached_property
    def dist(self) -> np.ndarray:
        """Dense Euclidean distance matrix over all nodes, unrounded."""
        xy = self.coords
        diff = xy[:, None, :] - xy[None, :, :]
        d = np.sqrt((diff * diff).sum(axis=2))
        d.setflags(write=False)
        return d

    @cached_property
    def demand(self) -> np.ndarray:
        a = np.array([c.demand for c in self.customers], dtype=np.float64)
        a.setflags(write=False)
        return a

    @cached_property
    def service(self) -> np.ndarray:
        """Service duration per node; depots carry 0."""
        a = np.zeros(self.node_count, dtype=np.float64)
        a[: self.n_customers] = [c.service_duration for c in self.customers]
        a.setflags(write=False)
        return a

    @cached_property
    def q_max(self) -> np.ndarray:
        return np.array([d.max_vehicle_load for d in self.depots], dtype=np.float64)

    @cached_property
    def r_max(self) -> np.ndarray:
        return np.array([d.max_route_duration for d in self.depots], dtype=np.float64)

    @cached_property
    def vehicles(self) -> np.ndarray:
        return np.array([d.vehicles for d in self.depots], dtype=np.int64)

    @cached_property
    def depot_capacity(self) -> np.ndarray:
        """Total load all vehicles of each depot can carry (K * Q_max)."""
        return self.vehicles * self.q_max

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.name, self.customers, self.depots) == (other.name, other.customers, other.depots)

    def __hash__(self):
        return hash((self.name, self.customers, self.depots))


def make_instance(
    depots,
    customers,
    *,
    q_max=math.inf,
    r_max=UNBOUNDED,
    vehicles=1,
    name="synthetic",
) -> Instance:
    """Build an instance from plain tuples.

    ``depots`` holds ``(x, y)`` pairs; ``customers`` holds ``(x, y, demand)`` or
    ``(x, y, demand, service)``. Scalar ``q_max``/``r_max``/``vehicles`` apply to
    every depot; sequences give per-depot values.
    """
    m = len(depots)

    def per_depot(v):
        if np.ndim(v) == 0:
            return [v] * m
        if len(v) != m:
            raise ValueError("per-depot parameter length does not match depot count")
        return list(v)

    qs, rs, ks = per_depot(q_max), per_depot(r_max), per_depot(vehicles)
    cust = []
    for i, c in enumerate(customers):
        x, y, q = c[:3]
        s = c[3] if len(c) > 3 else 0.0
        cust.append(Customer(i, float(x), float(y), float(s), float(q)))
    n = len(cust)
    deps = tuple(
        Depot(n + d, float(x), float(y), float(rs[d]), float(qs[d]), int(ks[d]))
        for d, (x, y) in enumerate(depots)
    )
    return Instance(name, tuple(cust), deps)


def distance(instance: Instance, i: int, j: int) -> float:
    n = instance.node_count
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"node index out of range: ({i}, {j}) with {n} nodes")
    return float(instance.dist[i, j])


def validate(instance: Instance) -> list[str]:
    problems = []
    if instance.n_customers < 1:
        problems.append("no customers")
    if instance.n_depots < 1:
        problems.append("no depots")
    for c in instance.customers:
        if c.demand < 0:
            problems.append(f"customer {c.id}: negative demand {c.demand}")
        if c.service_duration < 0:
            problems.append(f"customer {c.id}: negative service duration {c.service_duration}")
    for k, c in enumerate(instance.customers):
        if c.id != k:
            problems.append(f"customer at position {k} has id {c.id}; ids must be dense")
    for d in instance.depots:
        if not d.max_vehicle_load > 0:
            problems.append(f"depot {d.id}: max vehicle load must be positive")
        if d.vehicles < 1:
            problems.append(f"depot {d.id}: needs at least one vehicle")
        if not d.max_route_duration > 0:
            problems.append(f"depot {d.id}: max route duration must be positive or unbounded")
    if instance.depots:
        cap = max(d.max_vehicle_load for d in instance.depots)
        for c in instance.customers:
            if c.demand > cap:
                problems.append(f"customer {c.id}: unservable, demand {c.demand:g} exceeds every depot's Q_max")
    if instance.node_count:
        xy = instance.coords
        if not np.all(np.isfinite(xy)):
            problems.append("non-finite coordinates")
    return problems


def _num(tok: str, lineno: int, what: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"{what}: expected a number, got {tok!r}", lineno) from None
    if not math.isfinite(v):
        raise ParseError(f"{what}: non-finite value {tok!r}", lineno)
    return v


def _int(tok: str, lineno: int, what: str) -> int:
    v = _num(tok, lineno, what)
    if v != int(v):
        raise ParseError(f"{what}: expected an integer, got {tok!r}", lineno)
    return int(v)


def parse_cordeau(text: str, name: str = "") -> Instance:
    lines = [(k + 1, ln.split()) for k, ln in enumerate(text.splitlines())]
    lines = [(k, toks) for k, toks in lines if toks]
    if not lines:
        raise ParseError("empty file")
    lineno, head = lines[0]
    if len(head) < 4:
        raise ParseError(f"header needs 'type m n t', got {len(head)} fields", lineno)
    ptype = _int(head[0], lineno, "type")
    if ptype != 2:
        raise ParseError(f"type code {ptype} is not MDVRP (2)", lineno)
    k = _int(head[1], lineno, "vehicles per depot")
    n = _int(head[2], lineno, "customer count")
    t = _int(head[3], lineno, "depot count")
    if k < 1:
        raise ParseError("vehicles per depot must be >= 1", lineno)
    if n < 0 or t < 0:
        raise ParseError("negative customer or depot count", lineno)
    need = 1 + t + n + t
    if len(lines) < need:
        raise ParseError(f"expected {need} non-empty lines for n={n}, t={t}, found {len(lines)}", lines[-1][0])
    if len(lines) > need:
        raise ParseError(f"unexpected trailing content, expected {need} lines", lines[need][0])

    limits = []
    for lineno, toks in lines[1 : 1 + t]:
        if len(toks) < 2:
            raise ParseError("depot limit line needs 'D Q'", lineno)
        dur = _num(toks[0], lineno, "max route duration")
        cap = _num(toks[1], lineno, "max vehicle load")
        if dur < 0:
            raise ParseError("negative max route duration", lineno)
        if cap <= 0:
            raise ParseError("max vehicle load must be positive", lineno)
        limits.append((UNBOUNDED if dur == 0 else dur, cap))

    customers = []
    for idx, (lineno, toks) in enumerate(lines[1 + t : 1 + t + n]):
        if len(toks) < 7:
            raise ParseError("customer line needs 'i x y d q f a ...'", lineno)
        ident = _int(toks[0], lineno, "customer id")
        if ident != idx + 1:
            raise ParseError(f"customer id {ident} out of sequence, expected {idx + 1}", lineno)
        x, y = _num(toks[1], lineno, "x"), _num(toks[2], lineno, "y")
        svc, dem = _num(toks[3], lineno, "service duration"), _num(toks[4], lineno, "demand")
        freq = _int(toks[5], lineno, "visit frequency")
        if dem < 0:
            raise ParseError("negative demand", lineno)
        if svc < 0:
            raise ParseError("negative service duration", lineno)
        if freq != 1:
            raise ParseError(f"visit frequency {freq} unsupported, MDVRP requires 1", lineno)
        customers.append(Customer(idx, x, y, svc, dem))

    depots = []
    for d, (lineno, toks) in enumerate(lines[1 + t + n :]):
        if len(toks) < 3:
            raise ParseError("depot line needs 'i x y ...'", lineno)
        ident = _int(toks[0], lineno, "depot id")
        if ident != n + d + 1:
            raise ParseError(f"depot id {ident} out of sequence, expected {n + d + 1}", lineno)
        x, y = _num(toks[1], lineno, "x"), _num(toks[2], lineno, "y")
        dur, cap = limits[d]
        depots.append(Depot(n + d, x, y, dur, cap, k))

    return Instance(name, tuple(customers), tuple(depots))


def load(path) -> Instance:
    path = Path(path)
    return parse_cordeau(path.read_text(), name=path.stem)


def _fmt(v: float) -> str:
    return repr(float(v)) if v != int(v) else str(int(v))


def to_cordeau(instance: Instance) -> str:
    """Serialize back to the Cordeau layout. Requires a uniform vehicle count."""
    ks = {d.vehicles for d in instance.depots}
    if len(ks) > 1:
        raise ValueError("Cordeau format carries one vehicle count for all depots")
    k = ks.pop() if ks else 1
    n, t = instance.n_customers, instance.n_depots
    out = [f"2 {k} {n} {t}"]
    for d in instance.depots:
        dur = 0 if math.isinf(d.max_route_duration) else d.max_route_duration
        out.append(f"{_fmt(dur)} {_fmt(d.max_vehicle_load)}")
    for c in instance.customers:
        out.append(f"{c.id + 1} {_fmt(c.x)} {_fmt(c.y)} {_fmt(c.service_duration)} {_fmt(c.demand)} 1 1 1")
    for d in instance.depots:
        out.append(f"{d.id + 1} {_fmt(d.x)} {_fmt(d.y)} 0 0")
    return "\n".join(out) + "\n"
