"""Time expansion of an Instance into an integer program.

Decision variables are `flow` variables x[arc, commodity, t] (units of a
commodity departing on an arc at step t) and `vehicle` variables z[arc, t]
(vehicles dispatched on an arc at step t).  Departure steps run over
t in [1, T] with t + travel_time <= T + 1; later departures could only
strand cargo beyond the horizon and are never created.

Constraints:
  conservation, one per (depot, commodity, t), equality in mass units:
      sum_out x * load  -  sum_in x[departed t - travel_time] * load  =  d
  capacity, one per (arc, t), inequality in mass units:
      sum_k x * load_k  -  capacity * z  <=  0

All constraint coefficients and right-hand sides are integers so that
residual arithmetic is exact; loads, capacity, and schedule amounts must be
integral (rejected otherwise).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

from .instance import (
    Instance,
    arc_key,
    earliest_presence,
    latest_useful_presence,
    parse_arc_key,
    shortest_travel_times,
    validate_instance,
)

FLOW = "flow"
VEHICLE = "vehicle"


class ModelError(Exception):
    pass


class InfeasibleModelError(ModelError):
    """Pruning removed every variable from a constraint with nonzero rhs."""


@dataclass(frozen=True)
class Variable:
    index: int
    kind: str                       # FLOW or VEHICLE
    arc: tuple[str, str]
    commodity: str | None           # set for flow variables only
    time: int                       # departure step
    upper_bound: int

    def name(self) -> str:
        if self.kind == FLOW:
            return f"x[{self.arc[0]}->{self.arc[1]},{self.commodity},t={self.time}]"
        return f"z[{self.arc[0]}->{self.arc[1]},t={self.time}]"


# Constraint tags are plain tuples so they stay hashable and printable:
#   ("conservation", depot, commodity, time)
#   ("capacity", (origin, dest), time)
Tag = tuple


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple[tuple[int, int], ...]   # (variable index, integer coefficient)
    relation: str                        # "eq" or "le"
    rhs: int
    tag: Tag


@dataclass(frozen=True)
class Model:
    instance: Instance
    variables: tuple[Variable, ...]
    constraints: tuple[LinearConstraint, ...]
    objective: tuple[tuple[int, float], ...]   # (vehicle variable index, cost)

    def flow_index(self) -> dict[tuple[tuple[str, str], str, int], int]:
        return {(v.arc, v.commodity, v.time): v.index
                for v in self.variables if v.kind == FLOW}

    def vehicle_index(self) -> dict[tuple[tuple[str, str], int], int]:
        return {(v.arc, v.time): v.index for v in self.variables if v.kind == VEHICLE}

    def num_flow_variables(self) -> int:
        return sum(1 for v in self.variables if v.kind == FLOW)

    def num_vehicle_variables(self) -> int:
        return sum(1 for v in self.variables if v.kind == VEHICLE)

    def constraints_tagged(self, name: str) -> list[LinearConstraint]:
        return [c for c in self.constraints if c.tag[0] == name]


@dataclass(frozen=True)
class Assignment:
    """Integer value per model variable; a candidate solution."""
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))


@dataclass(frozen=True)
class FeasibilityReport:
    residuals: tuple[int, ...]       # signed for equalities, max(0, lhs-rhs) for inequalities
    feasible: bool
    worst: tuple[Tag, int] | None    # constraint tag with the largest |residual|
    bound_findings: tuple[tuple[int, int, int], ...] = ()   # (var index, value, upper bound)


def _as_exact_int(value: float, what: str) -> int:
    if isinstance(value, int):
        return value
    if float(value).is_integer():
        return int(value)
    raise ModelError(f"{what} must be integral for exact constraint arithmetic, got {value!r}")


def expand_model(inst: Instance) -> Model:
    """Expand an instance into variables, constraints, and the cost objective.

    Rejects instances whose per-commodity scheduled masses do not cancel;
    those could only produce an unsatisfiable model.
    """
    report = validate_instance(inst)
    balance = [f for f in report.findings if f.kind == "mass_balance"]
    if balance:
        raise ModelError("instance fails mass balance: " + "; ".join(f.message for f in balance))

    T = inst.horizon
    loads = {c.id: _as_exact_int(c.load, f"load of {c.id}") for c in inst.commodities}
    capacity = _as_exact_int(inst.capacity, "vehicle capacity")
    demand = {}
    for e in inst.schedule:
        demand[(e.depot, e.commodity, e.time)] = _as_exact_int(
            e.amount, f"schedule amount at ({e.depot}, {e.commodity}, t={e.time})")

    supply_units = {c.id: _as_exact_int(inst.total_supply_mass(c.id), "supply mass") // loads[c.id]
                    for c in inst.commodities}
    total_supply_mass = sum(inst.total_supply_mass(c.id) for c in inst.commodities)
    vehicle_ub = math.ceil(total_supply_mass / capacity)

    variables: list[Variable] = []
    flow_idx: dict[tuple, int] = {}
    vehicle_idx: dict[tuple, int] = {}
    for a in inst.arcs:
        for c in inst.commodities:
            for t in range(1, T + 1):
                if t + a.travel_time > T + 1:
                    continue
                v = Variable(len(variables), FLOW, a.pair, c.id, t, supply_units[c.id])
                variables.append(v)
                flow_idx[(a.pair, c.id, t)] = v.index
    for a in inst.arcs:
        for t in range(1, T + 1):
            if t + a.travel_time > T + 1:
                continue
            v = Variable(len(variables), VEHICLE, a.pair, None, t, vehicle_ub)
            variables.append(v)
            vehicle_idx[(a.pair, t)] = v.index

    constraints: list[LinearConstraint] = []
    for d in inst.depots:
        for c in inst.commodities:
            for t in range(1, T + 1):
                terms: list[tuple[int, int]] = []
                for a in inst.out_arcs(d.id):
                    i = flow_idx.get((a.pair, c.id, t))
                    if i is not None:
                        terms.append((i, loads[c.id]))
                for a in inst.in_arcs(d.id):
                    i = flow_idx.get((a.pair, c.id, t - a.travel_time))
                    if i is not None:
                        terms.append((i, -loads[c.id]))
                constraints.append(LinearConstraint(
                    terms=tuple(terms), relation="eq",
                    rhs=demand.get((d.id, c.id, t), 0),
                    tag=("conservation", d.id, c.id, t)))
    for a in inst.arcs:
        for t in range(1, T + 1):
            zi = vehicle_idx.get((a.pair, t))
            if zi is None:
                continue
            terms = [(flow_idx[(a.pair, c.id, t)], loads[c.id]) for c in inst.commodities]
            terms.append((zi, -capacity))
            constraints.append(LinearConstraint(
                terms=tuple(terms), relation="le", rhs=0,
                tag=("capacity", a.pair, t)))

    objective = tuple((vehicle_idx[(a.pair, t)], a.cost)
                      for a in inst.arcs for t in range(1, T + 1)
                      if (a.pair, t) in vehicle_idx)
    return Model(instance=inst, variables=tuple(variables),
                 constraints=tuple(constraints), objective=objective)


def prune_model(model: Model) -> Model:
    """Drop variables that can carry no useful flow and reindex densely.

    A flow variable (arc, k, t) is kept only if t is no earlier than the
    earliest possible presence of commodity k at the arc tail, and the
    arrival t + travel_time can still reach some demand for k in time.
    Vehicle variables and capacity rows survive only where some flow does;
    conservation rows that become 0 = 0 are dropped.
    """
    inst = model.instance
    dist = shortest_travel_times(inst)
    earliest = {c.id: earliest_presence(inst, c.id, dist) for c in inst.commodities}
    latest = {c.id: latest_useful_presence(inst, c.id, dist) for c in inst.commodities}

    def keep(v: Variable) -> bool:
        if v.kind != FLOW:
            return False
        tail, head = v.arc
        a = inst.arc(tail, head)
        if v.time < earliest[v.commodity][tail]:
            return False
        return v.time + a.travel_time <= latest[v.commodity][head]

    kept_flow = [v for v in model.variables if v.kind == FLOW and keep(v)]
    live_arc_times = {(v.arc, v.time) for v in kept_flow}
    kept = list(kept_flow) + [v for v in model.variables
                              if v.kind == VEHICLE and (v.arc, v.time) in live_arc_times]
    kept.sort(key=lambda v: v.index)
    remap = {v.index: i for i, v in enumerate(kept)}
    variables = tuple(replace(v, index=remap[v.index]) for v in kept)

    constraints: list[LinearConstraint] = []
    for c in model.constraints:
        terms = tuple((remap[i], a) for (i, a) in c.terms if i in remap)
        if c.tag[0] == "capacity" and (c.tag[1], c.tag[2]) not in live_arc_times:
            continue
        if not terms:
            if c.rhs != 0:
                raise InfeasibleModelError(
                    f"constraint {c.tag} requires {c.rhs} but every variable was pruned")
            continue
        constraints.append(replace(c, terms=terms))

    objective = tuple((remap[i], cost) for (i, cost) in model.objective if i in remap)
    return Model(instance=inst, variables=variables,
                 constraints=tuple(constraints), objective=objective)


def verify_assignment(model: Model, a: Assignment) -> FeasibilityReport:
    """Exact integer residuals of every constraint at an assignment."""
    if len(a.values) != len(model.variables):
        raise ValueError(f"assignment has {len(a.values)} values, model has "
                         f"{len(model.variables)} variables")
    residuals = []
    worst: tuple[Tag, int] | None = None
    for c in model.constraints:
        lhs = sum(coef * a.values[i] for i, coef in c.terms)
        r = lhs - c.rhs
        if c.relation == "le":
            r = max(0, r)
        residuals.append(r)
        if r != 0 and (worst is None or abs(r) > abs(worst[1])):
            worst = (c.tag, r)
    bound_findings = tuple((v.index, a.values[v.index], v.upper_bound)
                           for v in model.variables
                           if not 0 <= a.values[v.index] <= v.upper_bound)
    return FeasibilityReport(residuals=tuple(residuals),
                             feasible=all(r == 0 for r in residuals),
                             worst=worst, bound_findings=bound_findings)


def evaluate_objective(model: Model, a: Assignment) -> float:
    """Total vehicle cost sum(c * z); flow variables do not contribute."""
    if len(a.values) != len(model.variables):
        raise ValueError("assignment length mismatch")
    return sum(cost * a.values[i] for i, cost in model.objective)


def zero_assignment(model: Model) -> Assignment:
    return Assignment(values=(0,) * len(model.variables))


def model_to_debug_dict(model: Model) -> dict:
    """JSON-friendly dump of variables and constraints for golden-file tests."""
    return {
        "variables": [
            {"index": v.index, "kind": v.kind, "arc": arc_key(*v.arc),
             "commodity": v.commodity, "time": v.time, "upper_bound": v.upper_bound}
            for v in model.variables],
        "constraints": [
            {"tag": tag_str(c.tag), "relation": c.relation, "rhs": c.rhs,
             "terms": [[i, coef] for i, coef in c.terms]}
            for c in model.constraints],
        "objective": [[i, cost] for i, cost in model.objective],
    }


def dump_model_json(model: Model) -> str:
    return json.dumps(model_to_debug_dict(model), indent=2) + "\n"


def tag_str(tag: Tag) -> str:
    if tag[0] == "conservation":
        return f"conservation({tag[1]},{tag[2]},t={tag[3]})"
    return f"capacity({arc_key(*tag[1])},t={tag[2]})"


# --- reconstruction from published schedule tables ---------------------------

class TableReconstructionError(Exception):
    """The schedule tables are inconsistent with any integral flow split."""


def reconstruct_solution(model: Model, tables: dict) -> Assignment:
    """Rebuild a full Assignment from a schedule-table document.

    The document is a JSON object with keys:

      horizon         int, must match the instance
      time_labeling   "arrival": vehicle-table columns are labeled by the
                      step a traversal arrives (column t = departure at
                      t - travel_time)
      vehicles        {"Ni->Nj": [count per t=1..T]}
      cargo           {"Ni->Nj": [total mass per t=1..T]}; only per-arc
                      totals are used (published per-step labels are not
                      consistent between tables)
      inventory       {node: {commodity: [on-hand mass per t=1..T]}} with
                      delivered demand retained in inventory

    Flows are derived from the inventory story: arrivals are recovered
    per (node, commodity, t), everything present must depart the same step
    (the conservation model has no holdover), and departures are split over
    outgoing arcs by elimination.  The split must be unique and integral in
    flow units; per-arc cargo totals and vehicle capacities are cross-checked.
    """
    inst = model.instance
    T = inst.horizon
    if tables.get("horizon") != T:
        raise TableReconstructionError(
            f"table horizon {tables.get('horizon')} != instance horizon {T}")
    if tables.get("time_labeling") != "arrival":
        raise TableReconstructionError("only 'arrival' time labeling is supported")

    def row(table: dict, key: str) -> list[float]:
        values = table.get(key, [0] * T)
        if len(values) != T:
            raise TableReconstructionError(f"row {key!r} must have {T} columns")
        return [float(v) for v in values]

    vehicles_doc = tables["vehicles"]
    cargo_doc = tables["cargo"]
    inventory_doc = tables["inventory"]
    for key in set(vehicles_doc) | set(cargo_doc):
        pair = parse_arc_key(key)
        inst.arc(*pair)   # raises on unknown arcs

    loads = {c.id: c.load for c in inst.commodities}
    sup = {(e.depot, e.commodity, e.time): max(e.amount, 0.0) for e in inst.schedule}
    dem = {(e.depot, e.commodity, e.time): max(-e.amount, 0.0) for e in inst.schedule}

    # arrivals from the inventory recurrence:
    # inv(t) - inv(t-1) = arr(t) + sup(t) - dep(t-1),  dep = arr + sup - dem
    arr: dict[tuple[str, str, int], float] = {}
    dep: dict[tuple[str, str, int], float] = {}
    for d in inst.depots:
        for c in inst.commodities:
            inv_row = row(inventory_doc.get(d.id, {}), c.id) if d.id in inventory_doc \
                else [0.0] * T
            prev_inv = prev_dep = 0.0
            for t in range(1, T + 1):
                s = sup.get((d.id, c.id, t), 0.0)
                m = dem.get((d.id, c.id, t), 0.0)
                a_t = inv_row[t - 1] - prev_inv - s + prev_dep
                if a_t < -1e-9:
                    raise TableReconstructionError(
                        f"inventory at ({d.id}, {c.id}, t={t}) implies negative arrivals")
                d_t = a_t + s - m
                if d_t < -1e-9:
                    raise TableReconstructionError(
                        f"inventory at ({d.id}, {c.id}, t={t}) cannot cover the demand")
                arr[(d.id, c.id, t)] = max(a_t, 0.0)
                dep[(d.id, c.id, t)] = max(d_t, 0.0)
                prev_inv, prev_dep = inv_row[t - 1], d_t

    # Split departures over outgoing arcs by elimination, jointly over all
    # departure steps per commodity.  One unknown per (arc, departure t); the
    # balance rows are: outflow rows, one per (depot, t) summing to dep; and
    # arrival rows, one per (depot, t') summing to arr.  The system must be
    # uniquely determined (repeated single-open-unknown elimination succeeds).
    send: dict[tuple[tuple[str, str], str, int], float] = {}
    for c in inst.commodities:
        unknowns: dict[tuple[tuple[str, str], int], float | None] = {
            (a.pair, t): None
            for a in inst.arcs for t in range(1, T + 1)
            if t + a.travel_time <= T}   # arrivals beyond T carry nothing
        out_rows = {}    # (depot, t) -> (need, [unknown keys])
        in_rows = {}     # (depot, t') -> (need, [unknown keys])
        for d in inst.depots:
            for t in range(1, T + 1):
                members = [(a.pair, t) for a in inst.out_arcs(d.id) if (a.pair, t) in unknowns]
                need = dep.get((d.id, c.id, t), 0.0)
                if members or need:
                    out_rows[(d.id, t)] = (need, members)
                in_members = [(a.pair, t - a.travel_time) for a in inst.in_arcs(d.id)
                              if (a.pair, t - a.travel_time) in unknowns]
                in_need = arr.get((d.id, c.id, t), 0.0)
                if in_members or in_need:
                    in_rows[(d.id, t)] = (in_need, in_members)

        def eliminate(rows) -> bool:
            changed = False
            for key, (need, members) in rows.items():
                open_members = [m for m in members if unknowns[m] is None]
                fixed = sum(unknowns[m] for m in members if unknowns[m] is not None)
                if len(open_members) == 1:
                    unknowns[open_members[0]] = need - fixed
                    changed = True
                elif not open_members and abs(fixed - need) > 1e-9:
                    raise TableReconstructionError(
                        f"flow balance at ({key[0]}, {c.id}, t={key[1]}) moves {fixed}, "
                        f"needs {need}")
                elif open_members and abs(fixed - need) < 1e-9:
                    # the row is already satisfied; remaining members carry nothing
                    for m in open_members:
                        unknowns[m] = 0.0
                    changed = True
            return changed

        while any(v is None for v in unknowns.values()):
            progressed = eliminate(out_rows)
            progressed = eliminate(in_rows) or progressed
            if not progressed:
                stuck = [k for k, v in unknowns.items() if v is None]
                raise TableReconstructionError(
                    f"ambiguous flow split for {c.id}; undetermined on "
                    f"{[(arc_key(*p), t) for p, t in stuck]}")
        eliminate(out_rows)   # final consistency pass over fully-fixed rows
        eliminate(in_rows)

        for (pair, t), value in unknowns.items():
            if value < -1e-9:
                raise TableReconstructionError(
                    f"negative flow implied on {arc_key(*pair)} for {c.id} at t={t}")
            if value > 1e-9:
                send[(pair, c.id, t)] = value

    flow_idx = model.flow_index()
    vehicle_idx = model.vehicle_index()
    values = [0] * len(model.variables)
    for (pair, cid, t), mass in send.items():
        units = mass / loads[cid]
        if abs(units - round(units)) > 1e-9:
            raise TableReconstructionError(
                f"mass {mass} on {arc_key(*pair)} at t={t} is not an integral "
                f"number of {cid} units")
        idx = flow_idx.get((pair, cid, t))
        if idx is None:
            raise TableReconstructionError(
                f"tables require flow on pruned variable ({arc_key(*pair)}, {cid}, t={t})")
        values[idx] = int(round(units))

    for key, counts in vehicles_doc.items():
        pair = parse_arc_key(key)
        dt = inst.arc(*pair).travel_time
        for col, count in enumerate(row(vehicles_doc, key), start=1):
            if count == 0:
                continue
            t = col - dt   # arrival-labeled column
            idx = vehicle_idx.get((pair, t))
            if idx is None:
                raise TableReconstructionError(
                    f"vehicle count on {key} arriving t={col} maps to no model variable")
            if count != int(count) or count < 0:
                raise TableReconstructionError(f"bad vehicle count {count} on {key}")
            values[idx] = int(count)

    # cross-checks: per-arc cargo totals and capacity cover
    for a in inst.arcs:
        total_doc = sum(row(cargo_doc, a.key())) if a.key() in cargo_doc else 0.0
        total_flow = sum(mass for (pair, cid, t), mass in send.items() if pair == a.pair)
        if abs(total_doc - total_flow) > 1e-9:
            raise TableReconstructionError(
                f"cargo total on {a.key()}: tables say {total_doc}, flows say {total_flow}")
        for t in range(1, T + 1):
            mass = sum(send.get((a.pair, c.id, t), 0.0) for c in inst.commodities)
            zi = vehicle_idx.get((a.pair, t))
            cover = inst.capacity * (values[zi] if zi is not None else 0)
            if mass > cover + 1e-9:
                raise TableReconstructionError(
                    f"cargo {mass} on {a.key()} departing t={t} exceeds vehicle cover {cover}")

    return Assignment(values=tuple(values))
