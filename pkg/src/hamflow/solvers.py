"""Classical back-ends: exact branch-and-bound, exhaustive enumeration for
tiny models, and a restart-based simulated annealer over the Hamiltonian
mirroring the sampling workflow of the target annealing hardware.

The branch-and-bound searches vehicle counts only; commodity flows are
completed at the leaves by an exact integral-flow search.  Two necessary
relaxations prune internal nodes: a per-commodity max-flow over the
time-expanded graph (timing) and a merged-mass max-flow (joint capacity).

The annealer searches decision variables only.  Slack variables are never
free dimensions: every capacity penalty is evaluated with its slack at the
value minimizing the squared residual, which halves the search space and
never worsens the energy.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from .expansion import (
    FLOW,
    VEHICLE,
    Assignment,
    FeasibilityReport,
    Model,
    verify_assignment,
    evaluate_objective,
)
from .hamiltonian import Hamiltonian


class SearchSpaceTooLargeError(Exception):
    pass


@dataclass(frozen=True)
class Sample:
    assignment: Assignment
    energy: float
    objective: float
    feasible: bool
    restart_index: int
    wall_time: float


@dataclass(frozen=True)
class ExactResult:
    """Outcome of an exact solve: status is 'optimal', 'time_limit', or
    'infeasible'.  `certified` is False only when the time limit expired."""
    status: str
    sample: Sample | None
    certified: bool
    nodes: int
    wall_time: float

    @property
    def objective(self) -> float | None:
        return None if self.sample is None else self.sample.objective


@dataclass(frozen=True)
class AnnealParams:
    restarts: int = 40
    sweeps: int = 3000
    initial_temperature: float | None = None   # None: scaled from alpha at run time
    final_temperature: float | None = None
    paired_move_probability: float = 0.5       # vehicle-flow paired move share

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        for t in (self.initial_temperature, self.final_temperature):
            if t is not None and t <= 0:
                raise ValueError("temperatures must be positive")
        if (self.initial_temperature is not None and self.final_temperature is not None
                and self.final_temperature > self.initial_temperature):
            raise ValueError("final temperature must not exceed the initial temperature")


@dataclass(frozen=True)
class SampleSet:
    samples: tuple[Sample, ...]          # ordered by (energy, restart_index)
    seed: int
    params: AnnealParams

    def best(self) -> Sample:
        return self.samples[0]

    def best_feasible(self) -> Sample | None:
        for s in self.samples:
            if s.feasible:
                return s
        return None

    def dump_csv(self) -> str:
        lines = ["restart_index,energy,objective,feasible,wall_time_s"]
        for s in self.samples:
            lines.append(f"{s.restart_index},{s.energy:.17g},{s.objective:.17g},"
                         f"{str(s.feasible).lower()},{s.wall_time:.6f}")
        return "\n".join(lines) + "\n"

    def canonical_bytes(self) -> bytes:
        """Deterministic serialization: everything except wall-clock times,
        which are measurements and cannot reproduce byte-for-byte."""
        lines = [f"seed={self.seed}"]
        for s in self.samples:
            values = ",".join(str(v) for v in s.assignment.values)
            lines.append(f"{s.restart_index};{s.energy:.17g};{s.objective:.17g};"
                         f"{str(s.feasible).lower()};{values}")
        return ("\n".join(lines) + "\n").encode("utf-8")


@dataclass(frozen=True)
class SummaryStats:
    best_energy: float
    median_energy: float
    worst_energy: float
    feasible_fraction: float
    mean_wall_time: float
    bins: tuple[tuple[float, float, int], ...]   # (lower, upper, count), 20 bins


# --- shared constraint scaffolding -------------------------------------------

class _Rows:
    """Constraint rows in a move-evaluation-friendly form."""

    def __init__(self, model: Model):
        self.terms = []        # list of ((idx, coeff), ...)
        self.rhs = []
        self.slack_levels = []  # None for equalities, else slack range
        for c in model.constraints:
            self.terms.append(tuple(c.terms))
            self.rhs.append(c.rhs)
            if c.relation == "eq":
                self.slack_levels.append(None)
            else:
                vehicle_ub = next(model.variables[i].upper_bound for i, coef in c.terms
                                  if model.variables[i].kind == VEHICLE)
                capacity = next(-coef for i, coef in c.terms
                                if model.variables[i].kind == VEHICLE)
                self.slack_levels.append(capacity * vehicle_ub)
        self.by_var: list[list[tuple[int, int]]] = [[] for _ in model.variables]
        for row, terms in enumerate(self.terms):
            for i, coef in terms:
                self.by_var[i].append((row, coef))

    def penalty(self, row: int, raw: int) -> int:
        """Squared residual with the row's slack (if any) set optimally."""
        r = raw - self.rhs[row]
        lev = self.slack_levels[row]
        if lev is None:
            return r * r
        if r > 0:
            return r * r
        if r < -lev:
            return (r + lev) * (r + lev)
        return 0

    def total_penalty(self, values) -> int:
        total = 0
        for row, terms in enumerate(self.terms):
            raw = sum(coef * values[i] for i, coef in terms)
            total += self.penalty(row, raw)
        return total


# --- post-processing ----------------------------------------------------------

def postprocess_flows(model: Model, a: Assignment) -> tuple[Assignment, FeasibilityReport]:
    """Zero every commodity flow scheduled where no vehicle runs.

    Vehicle variables are untouched, so the objective never changes; the
    returned report re-verifies the adjusted assignment.  Idempotent.
    """
    vehicle_idx = model.vehicle_index()
    values = list(a.values)
    for v in model.variables:
        if v.kind != FLOW:
            continue
        zi = vehicle_idx.get((v.arc, v.time))
        if zi is None or a.values[zi] == 0:
            values[v.index] = 0
    adjusted = Assignment(values=tuple(values))
    return adjusted, verify_assignment(model, adjusted)


# --- exact search -------------------------------------------------------------

def _exact_presence_bounds(model: Model):
    """Per-(depot, commodity, t) upper bounds on present units (forward DP)
    and absorbable units (backward DP), from the variables that exist."""
    inst = model.instance
    T = inst.horizon
    flow_vars = [v for v in model.variables if v.kind == FLOW]
    present: dict[tuple[str, str, int], int] = {}
    absorb: dict[tuple[str, str, int], int] = {}
    sup = {(e.depot, e.commodity, e.time): int(e.amount) for e in inst.schedule if e.amount > 0}
    dem = {(e.depot, e.commodity, e.time): int(-e.amount) for e in inst.schedule if e.amount < 0}
    loads = {c.id: int(c.load) for c in inst.commodities}
    arrivals: dict[tuple[str, str, int], list] = {}
    departures: dict[tuple[str, str, int], list] = {}
    for v in flow_vars:
        departures.setdefault((v.arc[0], v.commodity, v.time), []).append(v)
        t_arr = v.time + inst.arc(*v.arc).travel_time
        if t_arr <= T:
            arrivals.setdefault((v.arc[1], v.commodity, t_arr), []).append(v)
    for t in range(1, T + 1):
        for d in inst.depots:
            for c in inst.commodities:
                key = (d.id, c.id, t)
                units = sup.get(key, 0) // loads[c.id]
                for v in arrivals.get(key, ()):
                    units += min(present.get((v.arc[0], v.commodity, v.time), 0), v.upper_bound)
                present[key] = units
    for t in range(T, 0, -1):
        for d in inst.depots:
            for c in inst.commodities:
                key = (d.id, c.id, t)
                units = dem.get(key, 0) // loads[c.id]
                for v in departures.get(key, ()):
                    t_arr = t + inst.arc(*v.arc).travel_time
                    if t_arr <= T:
                        units += min(absorb.get((v.arc[1], v.commodity, t_arr), 0), v.upper_bound)
                absorb[key] = units
    return present, absorb


def _vehicle_search_caps(model: Model) -> dict[int, int]:
    """Largest useful vehicle count per vehicle variable: enough to cover the
    most mass that could ever traverse that (arc, t).  Some optimum always
    fits under these caps, so the search never looks above them."""
    inst = model.instance
    capacity = int(inst.capacity)
    loads = {c.id: int(c.load) for c in inst.commodities}
    present, absorb = _exact_presence_bounds(model)
    max_mass: dict[tuple, int] = {}
    for v in model.variables:
        if v.kind != FLOW:
            continue
        t_arr = v.time + inst.arc(*v.arc).travel_time
        units = min(v.upper_bound,
                    present.get((v.arc[0], v.commodity, v.time), 0),
                    absorb.get((v.arc[1], v.commodity, t_arr), 0))
        max_mass[(v.arc, v.time)] = max_mass.get((v.arc, v.time), 0) + units * loads[v.commodity]
    caps = {}
    for v in model.variables:
        if v.kind == VEHICLE:
            mass = max_mass.get((v.arc, v.time), 0)
            caps[v.index] = min(v.upper_bound, -(-mass // capacity))
    return caps


def _max_flow(n: int, edges: list[tuple[int, int, int]], source: int, sink: int) -> int:
    """Edmonds-Karp on a small dense-ish graph; capacities are integers."""
    head, nxt, cap = [], [], []
    first = [-1] * n

    def add(u, v, c):
        head.append(v); cap.append(c); nxt.append(first[u]); first[u] = len(head) - 1
        head.append(u); cap.append(0); nxt.append(first[v]); first[v] = len(head) - 1

    for u, v, c in edges:
        if c > 0:
            add(u, v, c)
    flow = 0
    while True:
        parent_edge = [-1] * n
        parent_edge[source] = -2
        queue = deque([source])
        while queue:
            u = queue.popleft()
            e = first[u]
            while e != -1:
                v = head[e]
                if parent_edge[v] == -1 and cap[e] > 0:
                    parent_edge[v] = e
                    if v == sink:
                        queue.clear()
                        break
                    queue.append(v)
                e = nxt[e]
        if parent_edge[sink] == -1:
            return flow
        bottleneck = None
        v = sink
        while v != source:
            e = parent_edge[v]
            bottleneck = cap[e] if bottleneck is None else min(bottleneck, cap[e])
            v = head[e ^ 1]
        v = sink
        while v != source:
            e = parent_edge[v]
            cap[e] -= bottleneck
            cap[e ^ 1] += bottleneck
            v = head[e ^ 1]
        flow += bottleneck


class _FlowRelaxation:
    """Necessary feasibility checks for a partial vehicle assignment."""

    def __init__(self, model: Model):
        inst = model.instance
        self.model = model
        self.inst = inst
        self.capacity = int(inst.capacity)
        self.loads = {c.id: int(c.load) for c in inst.commodities}
        T = inst.horizon
        self.node_id = {}
        for d in inst.depots:
            for t in range(1, T + 1):
                self.node_id[(d.id, t)] = len(self.node_id)
        self.source = len(self.node_id)
        self.sink = self.source + 1
        self.n_nodes = self.sink + 1
        self.flow_vars = [v for v in model.variables
                          if v.kind == FLOW and
                          v.time + inst.arc(*v.arc).travel_time <= T]
        self.sup = [(e.depot, e.commodity, e.time, int(e.amount))
                    for e in inst.schedule if e.amount > 0]
        self.dem = [(e.depot, e.commodity, e.time, int(-e.amount))
                    for e in inst.schedule if e.amount < 0]
        self.total_units = {c.id: sum(m for _, k, _, m in self.sup if k == c.id) // self.loads[c.id]
                            for c in inst.commodities}
        self.total_mass = sum(m for _, _, _, m in self.sup)

    def feasible(self, cap_mass: dict[tuple, int]) -> bool:
        """cap_mass: available mass per (arc, departure t).  Checks one
        max-flow per commodity plus one merged-mass max-flow."""
        inst = self.inst
        for c in inst.commodities:
            load = self.loads[c.id]
            edges = []
            for v in self.flow_vars:
                if v.commodity != c.id:
                    continue
                cap = min(v.upper_bound, cap_mass[(v.arc, v.time)] // load)
                t_arr = v.time + inst.arc(*v.arc).travel_time
                edges.append((self.node_id[(v.arc[0], v.time)],
                              self.node_id[(v.arc[1], t_arr)], cap))
            for depot, k, t, mass in self.sup:
                if k == c.id:
                    edges.append((self.source, self.node_id[(depot, t)], mass // load))
            for depot, k, t, mass in self.dem:
                if k == c.id:
                    edges.append((self.node_id[(depot, t)], self.sink, mass // load))
            if _max_flow(self.n_nodes, edges, self.source, self.sink) < self.total_units[c.id]:
                return False
        # merged-mass relaxation: all commodities pooled, joint capacity binds
        edges = []
        merged: dict[tuple, int] = {}
        for v in self.flow_vars:
            key = (v.arc, v.time)
            merged[key] = merged.get(key, 0) + v.upper_bound * self.loads[v.commodity]
        for (arc, t), ub_mass in merged.items():
            t_arr = t + inst.arc(*arc).travel_time
            edges.append((self.node_id[(arc[0], t)], self.node_id[(arc[1], t_arr)],
                          min(ub_mass, cap_mass[(arc, t)])))
        for depot, _, t, mass in self.sup:
            edges.append((self.source, self.node_id[(depot, t)], mass))
        for depot, _, t, mass in self.dem:
            edges.append((self.node_id[(depot, t)], self.sink, mass))
        return _max_flow(self.n_nodes, edges, self.source, self.sink) >= self.total_mass


def find_feasible_flows(model: Model, vehicle_values: dict[int, int]) -> dict[int, int] | None:
    """Exact integral commodity flows under fixed vehicle counts, or None.

    Depth-first search over (time, depot, commodity) cells: everything
    present at a cell must depart the same step, split over the outgoing
    flow variables without exceeding per-variable bounds or the remaining
    shared vehicle capacity on each (arc, t).
    """
    inst = model.instance
    T = inst.horizon
    capacity = int(inst.capacity)
    loads = {c.id: int(c.load) for c in inst.commodities}
    d_mass = {(e.depot, e.commodity, e.time): int(e.amount) for e in inst.schedule}

    cap_left = {}
    for v in model.variables:
        if v.kind == VEHICLE:
            cap_left[(v.arc, v.time)] = capacity * vehicle_values.get(v.index, 0)

    out_vars: dict[tuple[str, str, int], list] = {}
    for v in model.variables:
        if v.kind != FLOW:
            continue
        t_arr = v.time + inst.arc(*v.arc).travel_time
        if t_arr > T:
            continue   # arrivals beyond the horizon can never serve a demand
        out_vars.setdefault((v.arc[0], v.commodity, v.time), []).append((v, t_arr))
    for lst in out_vars.values():
        lst.sort(key=lambda pair: pair[0].index)

    cells = [(t, d.id, c.id) for t in range(1, T + 1)
             for d in inst.depots for c in inst.commodities]
    incoming: dict[tuple[str, str, int], int] = {}
    chosen: dict[int, int] = {}

    def distribute(options: list, units: int) -> bool:
        if not options:
            return units == 0 and advance()
        (v, t_arr), rest = options[0], options[1:]
        load = loads[v.commodity]
        cap_units = min(v.upper_bound, cap_left.get((v.arc, v.time), 0) // load)
        slack_units = sum(min(w.upper_bound, cap_left.get((w.arc, w.time), 0) // load)
                          for w, _ in rest)
        lo = max(0, units - slack_units)
        for take in range(lo, min(cap_units, units) + 1):
            if take:
                chosen[v.index] = take
                cap_left[(v.arc, v.time)] -= take * load
                incoming[(v.arc[1], v.commodity, t_arr)] = \
                    incoming.get((v.arc[1], v.commodity, t_arr), 0) + take * load
            if distribute(rest, units - take):
                return True
            if take:
                chosen.pop(v.index)
                cap_left[(v.arc, v.time)] += take * load
                incoming[(v.arc[1], v.commodity, t_arr)] -= take * load
        return False

    cell_no = [0]

    def advance() -> bool:
        while cell_no[0] < len(cells):
            t, depot, k = cells[cell_no[0]]
            key = (depot, k, t)
            available = incoming.get(key, 0) + d_mass.get(key, 0)
            if available < 0 or available % loads[k] != 0:
                return False
            units = available // loads[k]
            if units == 0:
                cell_no[0] += 1
                continue
            options = out_vars.get(key, [])
            cell_no[0] += 1
            saved = cell_no[0]
            if distribute(options, units):
                return True
            cell_no[0] = saved - 1
            return False
        return True

    if advance():
        return chosen
    return None


def solve_exact(model: Model, time_limit: float = 300.0) -> ExactResult:
    """Depth-first branch-and-bound over vehicle variables.

    Branches the most expensive arcs first and tries smaller counts first;
    internal nodes are pruned by a demand-cut cost bound and the max-flow
    relaxations, and leaves are completed by find_feasible_flows.  Returns a
    provably optimal sample, or the incumbent flagged uncertified when the
    time limit expires, or an explicit infeasible result.
    """
    start = time.perf_counter()
    inst = model.instance
    capacity = int(inst.capacity)
    relax = _FlowRelaxation(model)
    caps = _vehicle_search_caps(model)
    cost_of = dict(model.objective)

    branch_vars = [v for v in model.variables if v.kind == VEHICLE and caps[v.index] > 0]
    branch_vars.sort(key=lambda v: (-cost_of.get(v.index, 0.0), v.index))

    # demand-side cut data: vehicles required into each demand depot
    demand_mass = {}
    for e in inst.schedule:
        if e.amount < 0:
            demand_mass[e.depot] = demand_mass.get(e.depot, 0) + int(-e.amount)
    required = {d: -(-m // capacity) for d, m in demand_mass.items()}
    in_arc_vars = {d: [v for v in branch_vars if v.arc[1] == d] for d in required}

    z_fixed: dict[int, int] = {v.index: 0 for v in model.variables
                               if v.kind == VEHICLE and caps[v.index] == 0}
    cap_mass = {(v.arc, v.time): capacity * caps[v.index]
                for v in model.variables if v.kind == VEHICLE}

    best_cost = [math.inf]
    best_values: list[tuple[int, ...] | None] = [None]
    nodes = [0]
    timed_out = [False]

    def cut_bound(cost_so_far: float) -> float:
        """Lower bound: every demand depot still needs enough vehicle
        arrivals to carry its total demanded mass."""
        bound = cost_so_far
        for d, req in required.items():
            have = 0
            open_cost = math.inf
            open_caps = 0
            for v in in_arc_vars[d]:
                if v.index in z_fixed:
                    have += z_fixed[v.index]
                else:
                    open_cost = min(open_cost, cost_of.get(v.index, 0.0))
                    open_caps += caps[v.index]
            short = req - have
            if short > 0:
                if short > open_caps:
                    return math.inf
                bound += short * open_cost
        return bound

    def dfs(depth: int, cost_so_far: float):
        nodes[0] += 1
        if nodes[0] % 512 == 0 and time.perf_counter() - start > time_limit:
            timed_out[0] = True
        if timed_out[0]:
            return
        if cost_so_far >= best_cost[0] - 1e-9:
            return
        if cut_bound(cost_so_far) >= best_cost[0] - 1e-9:
            return
        if not relax.feasible(cap_mass):
            return
        if depth == len(branch_vars):
            flows = find_feasible_flows(model, z_fixed)
            if flows is None:
                return
            values = [0] * len(model.variables)
            for i, units in flows.items():
                values[i] = units
            for i, count in z_fixed.items():
                values[i] = count
            best_cost[0] = cost_so_far
            best_values[0] = tuple(values)
            return
        v = branch_vars[depth]
        cost = cost_of.get(v.index, 0.0)
        saved = cap_mass[(v.arc, v.time)]
        for value in range(0, caps[v.index] + 1):
            z_fixed[v.index] = value
            cap_mass[(v.arc, v.time)] = capacity * value
            dfs(depth + 1, cost_so_far + cost * value)
            if timed_out[0]:
                break
        del z_fixed[v.index]
        cap_mass[(v.arc, v.time)] = saved

    dfs(0, 0.0)
    wall = time.perf_counter() - start

    if best_values[0] is None:
        status = "time_limit" if timed_out[0] else "infeasible"
        return ExactResult(status=status, sample=None, certified=not timed_out[0],
                           nodes=nodes[0], wall_time=wall)
    assignment = Assignment(values=best_values[0])
    objective = evaluate_objective(model, assignment)
    sample = Sample(assignment=assignment, energy=objective, objective=objective,
                    feasible=True, restart_index=0, wall_time=wall)
    status = "time_limit" if timed_out[0] else "optimal"
    return ExactResult(status=status, sample=sample, certified=not timed_out[0],
                       nodes=nodes[0], wall_time=wall)


def brute_force_oracle(model: Model, limit: int = 10**7) -> ExactResult:
    """Exhaustive enumeration over the full bound box; exists to certify
    solve_exact on tiny models and shares no search logic with it."""
    start = time.perf_counter()
    dims = [v.upper_bound + 1 for v in model.variables]
    space = math.prod(dims)
    if space > limit:
        raise SearchSpaceTooLargeError(f"search space {space} exceeds limit {limit}")

    n = len(model.variables)
    m = len(model.constraints)
    A = np.zeros((m, n), dtype=np.int64)
    rhs = np.zeros(m, dtype=np.int64)
    is_eq = np.zeros(m, dtype=bool)
    for r, c in enumerate(model.constraints):
        for i, coef in c.terms:
            A[r, i] = coef
        rhs[r] = c.rhs
        is_eq[r] = c.relation == "eq"
    cost = np.zeros(n, dtype=np.float64)
    for i, c_val in model.objective:
        cost[i] = c_val

    best_obj = math.inf
    best_x = None
    chunk = 1 << 16
    for lo in range(0, space, chunk):
        hi = min(lo + chunk, space)
        flat = np.arange(lo, hi, dtype=np.int64)
        if n:
            X = np.stack(np.unravel_index(flat, dims), axis=1).astype(np.int64)
        else:
            X = np.zeros((hi - lo, 0), dtype=np.int64)
        R = X @ A.T - rhs
        ok = np.ones(hi - lo, dtype=bool)
        if m:
            ok &= (R[:, is_eq] == 0).all(axis=1)
            ok &= (R[:, ~is_eq] <= 0).all(axis=1)
        if not ok.any():
            continue
        obj = X @ cost
        obj[~ok] = math.inf
        j = int(np.argmin(obj))
        if obj[j] < best_obj - 1e-12:
            best_obj = float(obj[j])
            best_x = tuple(int(v) for v in X[j])
    wall = time.perf_counter() - start
    if best_x is None:
        return ExactResult(status="infeasible", sample=None, certified=True,
                           nodes=space, wall_time=wall)
    assignment = Assignment(values=best_x)
    sample = Sample(assignment=assignment, energy=best_obj, objective=best_obj,
                    feasible=True, restart_index=0, wall_time=wall)
    return ExactResult(status="optimal", sample=sample, certified=True,
                       nodes=space, wall_time=wall)


# --- simulated annealing -------------------------------------------------------

def anneal_sample(h: Hamiltonian, model: Model, params: AnnealParams | None = None,
                  seed: int = 0) -> SampleSet:
    """Restart-based simulated annealing over integer points within bounds.

    Each restart runs an independent Metropolis chain with geometric cooling
    whose random stream derives deterministically from (seed, restart index);
    the final point of each chain is decoded, vehicle-gated, verified, and
    recorded.  Identical inputs reproduce the SampleSet exactly (timings
    excluded, see SampleSet.canonical_bytes).
    """
    if params is None:
        params = AnnealParams()
    rows = _Rows(model)
    alpha = h.alpha
    n = len(model.variables)
    ub = [v.upper_bound for v in model.variables]
    cost_of = dict(model.objective)
    vehicle_idx = model.vehicle_index()
    vehicle_of = [vehicle_idx.get((v.arc, v.time)) if v.kind == FLOW else None
                  for v in model.variables]

    max_coeff = max((abs(coef) for terms in rows.terms for _, coef in terms), default=1)
    t_start = params.initial_temperature
    if t_start is None:
        t_start = alpha * max_coeff ** 2
    t_end = params.final_temperature
    if t_end is None:
        t_end = min(1e-2, t_start / 2)
    cooling = (t_end / t_start) ** (1.0 / max(params.sweeps - 1, 1))

    samples = []
    for restart in range(params.restarts):
        t0 = time.perf_counter()
        values = _run_chain(rows, alpha, n, ub, cost_of, vehicle_of,
                            params, seed, restart, t_start, cooling)
        assignment = Assignment(values=tuple(values))
        assignment, report = postprocess_flows(model, assignment)
        objective = evaluate_objective(model, assignment)
        energy = objective + alpha * rows.total_penalty(assignment.values)
        samples.append(Sample(assignment=assignment, energy=energy, objective=objective,
                              feasible=report.feasible, restart_index=restart,
                              wall_time=time.perf_counter() - t0))
    samples.sort(key=lambda s: (s.energy, s.restart_index))
    return SampleSet(samples=tuple(samples), seed=seed, params=params)


def _run_chain(rows: _Rows, alpha, n, ub, cost_of, vehicle_of,
               params: AnnealParams, seed: int, restart: int,
               t_start: float, cooling: float) -> list[int]:
    rng = np.random.default_rng([seed, restart])
    values = [0] * n
    raw = [sum(coef * values[i] for i, coef in terms) for terms in rows.terms]
    if n == 0:
        return values

    temperature = t_start
    for _ in range(params.sweeps):
        var_draws = rng.integers(0, n, size=n)
        dir_draws = rng.integers(0, 2, size=n)
        kind_draws = rng.random(size=n)
        accept_draws = rng.random(size=n)
        for k in range(n):
            v = int(var_draws[k])
            delta = 1 if dir_draws[k] else -1
            moves = [(v, delta)]
            if kind_draws[k] < params.paired_move_probability and vehicle_of[v] is not None:
                moves.append((vehicle_of[v], delta))
            ok = True
            for i, d in moves:
                nv = values[i] + d
                if nv < 0 or nv > ub[i]:
                    ok = False
                    break
            if not ok:
                continue
            row_delta: dict[int, int] = {}
            d_obj = 0.0
            for i, d in moves:
                d_obj += cost_of.get(i, 0.0) * d
                for row, coef in rows.by_var[i]:
                    row_delta[row] = row_delta.get(row, 0) + coef * d
            d_pen = 0
            for row, dr in row_delta.items():
                d_pen += rows.penalty(row, raw[row] + dr) - rows.penalty(row, raw[row])
            d_energy = d_obj + alpha * d_pen
            if d_energy > 0:
                threshold = d_energy / temperature
                if threshold > 700 or accept_draws[k] >= math.exp(-threshold):
                    continue
            for i, d in moves:
                values[i] += d
            for row, dr in row_delta.items():
                raw[row] += dr
        temperature *= cooling
    return values


def summarize_samples(s: SampleSet) -> SummaryStats:
    if not s.samples:
        raise ValueError("empty sample set")
    energies = sorted(x.energy for x in s.samples)
    k = len(energies)
    median = energies[k // 2] if k % 2 else 0.5 * (energies[k // 2 - 1] + energies[k // 2])
    return SummaryStats(
        best_energy=energies[0],
        median_energy=median,
        worst_energy=energies[-1],
        feasible_fraction=sum(1 for x in s.samples if x.feasible) / k,
        mean_wall_time=sum(x.wall_time for x in s.samples) / k,
        bins=tuple(energy_histogram([x.energy for x in s.samples])),
    )


def energy_histogram(energies: list[float], nbins: int = 20) -> list[tuple[float, float, int]]:
    """Fixed-width bins spanning the observed range; a zero range degenerates
    to a unit span centered on the value so exactly one bin is occupied."""
    lo, hi = min(energies), max(energies)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    width = (hi - lo) / nbins
    counts = [0] * nbins
    for e in energies:
        counts[min(int((e - lo) / width), nbins - 1)] += 1
    return [(lo + i * width, lo + (i + 1) * width, counts[i]) for i in range(nbins)]
