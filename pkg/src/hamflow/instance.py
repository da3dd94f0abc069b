"""Problem instances for time-dependent multicommodity network flow.

An :class:`Instance` holds the static description of a space-logistics
network: depots (orbital locations), directed arcs with a per-vehicle cost
(delta-V, km/s) and an integer travel time, commodities with a per-unit load
size, a discrete horizon, a vehicle capacity, and a supply/demand schedule.

Instances are read and written as UTF-8 JSON documents with top-level keys
``depots``, ``arcs``, ``commodities``, ``horizon``, ``capacity``, and
``schedule``.  Unknown keys are rejected so that typos in hand-authored
files surface immediately.

Schedule amounts are in mass units: positive entries are supply appearing at
a depot at a time step, negative entries are demand consumed there.  Every
amount must be a nonzero integer multiple of its commodity's load size.
Time steps are 1-based, ``t in {1..horizon}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable


class InstanceError(Exception):
    """Base class for instance construction and parsing failures."""


class InstanceSyntaxError(InstanceError):
    """Malformed JSON; carries the line/column of the first offending byte."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class InstanceSchemaError(InstanceError):
    """Structurally valid JSON that does not conform to the instance schema."""


class DuplicateIdError(InstanceSchemaError):
    pass


class UnknownIdError(InstanceSchemaError):
    pass


@dataclass(frozen=True)
class Depot:
    id: str
    label: str


@dataclass(frozen=True)
class Arc:
    origin: str           # tail depot id
    dest: str             # head depot id
    cost: float           # per-vehicle cost, km/s
    travel_time: int      # time steps, >= 1

    def __post_init__(self):
        if self.origin == self.dest:
            raise InstanceSchemaError(f"arc {self.origin}->{self.dest}: self-loops not allowed")
        if self.cost < 0:
            raise InstanceSchemaError(f"arc {self.key()}: negative cost {self.cost}")
        if not isinstance(self.travel_time, int) or self.travel_time < 1:
            raise InstanceSchemaError(f"arc {self.key()}: travel_time must be an integer >= 1")

    def key(self) -> str:
        return f"{self.origin}->{self.dest}"

    @property
    def pair(self) -> tuple[str, str]:
        return (self.origin, self.dest)


@dataclass(frozen=True)
class Commodity:
    id: str
    load: float           # mass units per unit of flow, > 0

    def __post_init__(self):
        if self.load <= 0:
            raise InstanceSchemaError(f"commodity {self.id}: non-positive load {self.load}")


@dataclass(frozen=True)
class ScheduleEntry:
    depot: str
    commodity: str
    time: int             # 1-based step
    amount: float         # mass units; > 0 supply, < 0 demand

    def __post_init__(self):
        if self.amount == 0:
            raise InstanceSchemaError(
                f"schedule entry ({self.depot}, {self.commodity}, t={self.time}): "
                "zero amounts are rejected, drop the entry instead")


@dataclass(frozen=True)
class Instance:
    """Immutable problem instance; safe to share across threads."""

    depots: tuple[Depot, ...]
    arcs: tuple[Arc, ...]
    commodities: tuple[Commodity, ...]
    horizon: int
    capacity: float
    schedule: tuple[ScheduleEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "depots", tuple(self.depots))
        object.__setattr__(self, "arcs", tuple(self.arcs))
        object.__setattr__(self, "commodities", tuple(self.commodities))
        object.__setattr__(self, "schedule", tuple(self.schedule))
        self._check()

    def _check(self):
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise InstanceSchemaError(f"horizon must be a positive integer, got {self.horizon!r}")
        if self.capacity <= 0:
            raise InstanceSchemaError(f"capacity must be positive, got {self.capacity!r}")
        depot_ids = [d.id for d in self.depots]
        if len(set(depot_ids)) != len(depot_ids):
            dup = _first_duplicate(depot_ids)
            raise DuplicateIdError(f"duplicate depot id {dup!r}")
        commodity_ids = [c.id for c in self.commodities]
        if len(set(commodity_ids)) != len(commodity_ids):
            dup = _first_duplicate(commodity_ids)
            raise DuplicateIdError(f"duplicate commodity id {dup!r}")
        pairs = [a.pair for a in self.arcs]
        if len(set(pairs)) != len(pairs):
            dup = _first_duplicate(pairs)
            raise DuplicateIdError(f"duplicate arc {dup[0]}->{dup[1]}")
        known_depots = set(depot_ids)
        known_commodities = set(commodity_ids)
        for a in self.arcs:
            for end in a.pair:
                if end not in known_depots:
                    raise UnknownIdError(f"arc {a.key()} references undeclared depot {end!r}")
            if a.travel_time > self.horizon:
                raise InstanceSchemaError(
                    f"arc {a.key()}: travel_time {a.travel_time} exceeds horizon {self.horizon}")
        seen_entries = set()
        for e in self.schedule:
            if e.depot not in known_depots:
                raise UnknownIdError(f"schedule entry references undeclared depot {e.depot!r}")
            if e.commodity not in known_commodities:
                raise UnknownIdError(f"schedule entry references undeclared commodity {e.commodity!r}")
            if not isinstance(e.time, int) or not 1 <= e.time <= self.horizon:
                raise InstanceSchemaError(
                    f"schedule entry ({e.depot}, {e.commodity}): time {e.time} outside [1, {self.horizon}]")
            k = (e.depot, e.commodity, e.time)
            if k in seen_entries:
                raise DuplicateIdError(f"duplicate schedule entry for {k}")
            seen_entries.add(k)

    # --- lookups -----------------------------------------------------------

    def depot(self, depot_id: str) -> Depot:
        for d in self.depots:
            if d.id == depot_id:
                return d
        raise UnknownIdError(f"no depot {depot_id!r}")

    def commodity(self, commodity_id: str) -> Commodity:
        for c in self.commodities:
            if c.id == commodity_id:
                return c
        raise UnknownIdError(f"no commodity {commodity_id!r}")

    def arc(self, origin: str, dest: str) -> Arc:
        for a in self.arcs:
            if a.pair == (origin, dest):
                return a
        raise UnknownIdError(f"no arc {origin}->{dest}")

    def schedule_amount(self, depot: str, commodity: str, time: int) -> float:
        """Supply (+) or demand (-) mass at (depot, commodity, time); 0 if unscheduled."""
        for e in self.schedule:
            if (e.depot, e.commodity, e.time) == (depot, commodity, time):
                return e.amount
        return 0.0

    def total_supply_mass(self, commodity: str) -> float:
        return sum(e.amount for e in self.schedule
                   if e.commodity == commodity and e.amount > 0)

    def out_arcs(self, depot_id: str) -> list[Arc]:
        return [a for a in self.arcs if a.origin == depot_id]

    def in_arcs(self, depot_id: str) -> list[Arc]:
        return [a for a in self.arcs if a.dest == depot_id]


@dataclass(frozen=True)
class Finding:
    kind: str             # "mass_balance" | "load_multiple" | "unreachable_demand"
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def ok(self) -> bool:
        return not self.findings


# --- parsing / serialization ----------------------------------------------

_TOP_KEYS = {"depots", "arcs", "commodities", "horizon", "capacity", "schedule"}


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise InstanceSchemaError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise InstanceSchemaError(f"{where}: missing key(s) {sorted(missing)}")


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceSchemaError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise InstanceSchemaError(f"{where}: expected an integer, got {value!r}")
        value = int(value)
    return value


def parse_instance(text: str) -> Instance:
    """Parse an instance document (JSON text) into a validated Instance."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceSyntaxError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise InstanceSchemaError("instance document must be a JSON object")
    _require_keys(doc, _TOP_KEYS, _TOP_KEYS, "instance document")

    depots = []
    for i, d in enumerate(doc["depots"]):
        _require_keys(d, {"id", "label"}, {"id", "label"}, f"depots[{i}]")
        depots.append(Depot(id=str(d["id"]), label=str(d["label"])))
    arcs = []
    for i, a in enumerate(doc["arcs"]):
        _require_keys(a, {"from", "to", "cost", "travel_time"},
                      {"from", "to", "cost", "travel_time"}, f"arcs[{i}]")
        arcs.append(Arc(origin=str(a["from"]), dest=str(a["to"]),
                        cost=float(a["cost"]),
                        travel_time=_as_int(a["travel_time"], f"arcs[{i}].travel_time")))
    commodities = []
    for i, c in enumerate(doc["commodities"]):
        _require_keys(c, {"id", "load"}, {"id", "load"}, f"commodities[{i}]")
        commodities.append(Commodity(id=str(c["id"]), load=float(c["load"])))
    horizon = _as_int(doc["horizon"], "horizon")
    capacity = float(doc["capacity"])
    schedule = []
    for i, e in enumerate(doc["schedule"]):
        _require_keys(e, {"depot", "commodity", "time", "amount"},
                      {"depot", "commodity", "time", "amount"}, f"schedule[{i}]")
        schedule.append(ScheduleEntry(depot=str(e["depot"]), commodity=str(e["commodity"]),
                                      time=_as_int(e["time"], f"schedule[{i}].time"),
                                      amount=float(e["amount"])))

    inst = Instance(depots=tuple(depots), arcs=tuple(arcs), commodities=tuple(commodities),
                    horizon=horizon, capacity=capacity, schedule=tuple(schedule))

    # multiples of the load size are a schema requirement, not merely a finding
    by_id = {c.id: c for c in inst.commodities}
    for e in inst.schedule:
        load = by_id[e.commodity].load
        if not _is_multiple(e.amount, load):
            raise InstanceSchemaError(
                f"schedule entry ({e.depot}, {e.commodity}, t={e.time}): amount {e.amount} "
                f"is not an integer multiple of the load size {load}")
    return inst


def serialize_instance(inst: Instance) -> str:
    """Inverse of parse_instance: parse(serialize(inst)) == inst field-for-field."""
    doc = {
        "depots": [{"id": d.id, "label": d.label} for d in inst.depots],
        "arcs": [{"from": a.origin, "to": a.dest, "cost": a.cost, "travel_time": a.travel_time}
                 for a in inst.arcs],
        "commodities": [{"id": c.id, "load": c.load} for c in inst.commodities],
        "horizon": inst.horizon,
        "capacity": inst.capacity,
        "schedule": [{"depot": e.depot, "commodity": e.commodity, "time": e.time, "amount": e.amount}
                     for e in inst.schedule],
    }
    return json.dumps(doc, indent=2) + "\n"


def _is_multiple(amount: float, load: float) -> bool:
    units = amount / load
    return abs(units - round(units)) < 1e-9


def _first_duplicate(items: Iterable):
    seen = set()
    for x in items:
        if x in seen:
            return x
        seen.add(x)
    return None


# --- validation -------------------------------------------------------------

def validate_instance(inst: Instance) -> ValidationReport:
    """Semantic checks beyond structure; findings, never exceptions.

    Reports (a) commodities whose scheduled supply and demand masses do not
    cancel, (b) schedule amounts that are not integer multiples of the load
    size, and (c) demands scheduled before any mass of that commodity could
    first arrive at the depot (earliest-arrival pre-check over supply times
    and arc travel times).
    """
    findings: list[Finding] = []
    for c in inst.commodities:
        balance = sum(e.amount for e in inst.schedule if e.commodity == c.id)
        if abs(balance) > 1e-9:
            findings.append(Finding(
                "mass_balance",
                f"commodity {c.id}: scheduled amounts sum to {balance:+g}, not 0; "
                "instance is infeasible by mass balance"))
    by_id = {c.id: c for c in inst.commodities}
    for e in inst.schedule:
        if not _is_multiple(e.amount, by_id[e.commodity].load):
            findings.append(Finding(
                "load_multiple",
                f"({e.depot}, {e.commodity}, t={e.time}): amount {e.amount} is not a "
                f"multiple of load {by_id[e.commodity].load}"))

    dist = shortest_travel_times(inst)
    for c in inst.commodities:
        earliest = earliest_presence(inst, c.id, dist)
        for e in inst.schedule:
            if e.commodity != c.id or e.amount >= 0:
                continue
            if e.time < earliest.get(e.depot, float("inf")):
                findings.append(Finding(
                    "unreachable_demand",
                    f"({e.depot}, {e.commodity}, t={e.time}): demand precedes the earliest "
                    f"possible arrival (t={earliest.get(e.depot, float('inf'))})"))
    return ValidationReport(findings=tuple(findings))


def shortest_travel_times(inst: Instance) -> dict[tuple[str, str], float]:
    """All-pairs minimum travel time over the arc graph (Floyd-Warshall)."""
    ids = [d.id for d in inst.depots]
    dist = {(i, j): (0.0 if i == j else float("inf")) for i in ids for j in ids}
    for a in inst.arcs:
        dist[a.pair] = min(dist[a.pair], float(a.travel_time))
    for m in ids:
        for i in ids:
            dim = dist[(i, m)]
            if dim == float("inf"):
                continue
            for j in ids:
                alt = dim + dist[(m, j)]
                if alt < dist[(i, j)]:
                    dist[(i, j)] = alt
    return dist


def earliest_presence(inst: Instance, commodity: str,
                      dist: dict[tuple[str, str], float] | None = None) -> dict[str, float]:
    """Earliest time step any mass of a commodity can be present at each depot."""
    if dist is None:
        dist = shortest_travel_times(inst)
    earliest: dict[str, float] = {}
    supplies = [(e.depot, e.time) for e in inst.schedule
                if e.commodity == commodity and e.amount > 0]
    for d in inst.depots:
        best = float("inf")
        for origin, t0 in supplies:
            best = min(best, t0 + dist[(origin, d.id)])
        earliest[d.id] = best
    return earliest


def latest_useful_presence(inst: Instance, commodity: str,
                           dist: dict[tuple[str, str], float] | None = None) -> dict[str, float]:
    """Latest time step at which mass present at a depot can still reach a demand."""
    if dist is None:
        dist = shortest_travel_times(inst)
    latest: dict[str, float] = {}
    demands = [(e.depot, e.time) for e in inst.schedule
               if e.commodity == commodity and e.amount < 0]
    for d in inst.depots:
        best = float("-inf")
        for sink, td in demands:
            best = max(best, td - dist[(d.id, sink)])
        latest[d.id] = best
    return latest


# --- case study --------------------------------------------------------------

CASE_STUDY_DEPOTS = (
    ("N1", "Earth"), ("N2", "LEO"), ("N3", "LTO"), ("N4", "LLO"),
    ("N5", "LS"), ("N6", "LMO"), ("N7", "Mars"),
)

CASE_STUDY_ARCS = (
    ("N1", "N2"), ("N2", "N3"), ("N2", "N4"), ("N3", "N6"),
    ("N3", "N4"), ("N4", "N5"), ("N6", "N7"), ("N4", "N3"),
)

# (depot, commodity, time, mass)
CASE_STUDY_SCHEDULE = (
    ("N1", "L1", 1, 40), ("N1", "L1", 2, 60),
    ("N1", "L2", 1, 80), ("N1", "L2", 2, 120),
    ("N5", "L1", 5, -20), ("N5", "L1", 6, -30),
    ("N5", "L2", 5, -40), ("N5", "L2", 6, -60),
    ("N7", "L1", 5, -20), ("N7", "L1", 6, -30),
    ("N7", "L2", 5, -40), ("N7", "L2", 6, -60),
)


def arc_key(origin: str, dest: str) -> str:
    return f"{origin}->{dest}"


def parse_arc_key(key: str) -> tuple[str, str]:
    parts = key.split("->")
    if len(parts) != 2 or not all(parts):
        raise InstanceSchemaError(f"bad arc key {key!r}, expected 'Ni->Nj'")
    return (parts[0], parts[1])


def build_case_study(costs: dict[str, float]) -> Instance:
    """Earth-Moon-Mars benchmark: 7 depots, 8 unit-travel-time arcs,
    commodities L1 (load 10) and L2 (load 20), vehicle capacity 100,
    horizon 6, and the fixed supply/demand schedule.

    `costs` maps every arc key 'Ni->Nj' to its per-vehicle cost.
    """
    known = {arc_key(o, d) for (o, d) in CASE_STUDY_ARCS}
    extra = set(costs) - known
    if extra:
        raise InstanceSchemaError(f"unknown case-study arc(s) in cost map: {sorted(extra)}")
    missing = known - set(costs)
    if missing:
        raise InstanceSchemaError(f"missing cost for case-study arc(s): {sorted(missing)}")
    return Instance(
        depots=tuple(Depot(i, label) for i, label in CASE_STUDY_DEPOTS),
        arcs=tuple(Arc(o, d, float(costs[arc_key(o, d)]), 1) for (o, d) in CASE_STUDY_ARCS),
        commodities=(Commodity("L1", 10.0), Commodity("L2", 20.0)),
        horizon=6,
        capacity=100.0,
        schedule=tuple(ScheduleEntry(dep, com, t, float(m))
                       for (dep, com, t, m) in CASE_STUDY_SCHEDULE),
    )


def load_cost_map(text: str) -> dict[str, float]:
    """Parse an arc-cost map: a JSON object of 'Ni->Nj' keys to numbers."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceSyntaxError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise InstanceSchemaError("cost map must be a JSON object")
    out = {}
    for k, v in doc.items():
        parse_arc_key(k)
        if not isinstance(v, (int, float)) or isinstance(v, bool) or v < 0:
            raise InstanceSchemaError(f"cost for {k}: expected a nonnegative number, got {v!r}")
        out[k] = float(v)
    return out


def default_case_study_costs() -> dict[str, float]:
    """The committed per-arc cost fixture for the case study."""
    text = resources.files("hamflow.data").joinpath("case_study_costs.json").read_text("utf-8")
    return load_cost_map(text)
