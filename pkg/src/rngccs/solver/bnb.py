"""LP-based branch-and-bound over the facility/sink/45Q binaries."""
from __future__ import annotations

import heapq
import logging
import math
import random
import time
from dataclasses import dataclass

import numpy as np

from ..errors import NoFeasibleSolution, NumericalStall, SolverError
from .simplex import Basis, LPResult, solve_lp

log = logging.getLogger("rngccs.solver")

BRANCHING_RULES = ("most_fractional", "pseudo_cost")
NODE_SELECTION = ("best_bound", "depth_first_dive")


@dataclass(frozen=True)
class SolverConfig:
    gap_tolerance: float = 0.10
    time_limit: float = 600.0  # seconds
    node_limit: int = 200_000
    branching: str = "most_fractional"
    node_selection: str = "best_bound"
    lp_feas_tol: float = 1e-7
    int_tol: float = 1e-6
    seed: int = 0
    fallback_gap: float = 0.20  # limit-hit solutions within this gap are flagged acceptable
    use_greedy: bool = True

    def __post_init__(self):
        if not 0 <= self.gap_tolerance < 1:
            raise ValueError("gap_tolerance must lie in [0, 1)")
        if self.lp_feas_tol <= 0 or self.int_tol <= 0:
            raise ValueError("tolerances must be > 0")
        if self.branching not in BRANCHING_RULES:
            raise ValueError(f"branching must be one of {BRANCHING_RULES}")
        if self.node_selection not in NODE_SELECTION:
            raise ValueError(f"node_selection must be one of {NODE_SELECTION}")


def presolve(model) -> tuple[np.ndarray, np.ndarray]:
    """Tightened column bounds.

    Fixes q_j = 1 when the 45Q threshold is zero, q_j = 0 when the facility can
    never capture the threshold (big-M below it), and caps flows by the supply,
    digester capacity and sink capacity they are tied to.
    """
    lb, ub = model.bounds()
    inst = model.instance
    threshold = model.scenario.q45_threshold
    for key, col in model.var_index.items():
        kind = key[0]
        if kind == "q":
            if threshold <= 0:
                lb[col] = ub[col] = 1.0
            elif model.big_m[key[1]] < threshold:
                ub[col] = 0.0
        elif kind == "x":
            cap = min(inst.source_by_id[key[1]].supply, inst.facility_by_id[key[2]].capacity)
            ub[col] = min(ub[col], cap)
        elif kind == "t":
            ub[col] = min(ub[col], inst.sink_by_id[key[2]].capacity)
        elif kind == "s":
            ub[col] = min(ub[col], inst.sink_by_id[key[1]].capacity)
    return lb, ub


class _LPCache:
    """Solves LP relaxations of one model under varying bounds."""

    def __init__(self, model, config: SolverConfig):
        self.model = model
        self.base = model.to_lp()
        self.config = config
        self.iterations = 0

    def solve(self, lb, ub, hint: Basis | None = None) -> LPResult:
        lp = self.base
        lp_n = type(lp)(lp.c, lp.A, lp.senses, lp.b, lb, ub)
        try:
            res = solve_lp(lp_n, hint, feas_tol=self.config.lp_feas_tol)
        except NumericalStall:
            if hint is None:
                raise
            res = solve_lp(lp_n, None, feas_tol=self.config.lp_feas_tol)
        self.iterations += res.iterations
        return res


def _feasible(model, x, tol=1e-6) -> bool:
    return model.worst_violation(x)[1] <= tol


def _fixed_binaries(model, lb, ub, on: dict[tuple, float]):
    """Bounds with every binary fixed: keys in ``on`` to the given value, others to lb."""
    lb2, ub2 = lb.copy(), ub.copy()
    for col in model.binary_columns:
        key = model.variables[col].key
        v = on.get(key, lb[col])
        v = min(max(v, lb[col]), ub[col])
        lb2[col] = ub2[col] = v
    return lb2, ub2


def greedy_assignment(model, lb, ub, lps: _LPCache):
    """Rank facilities by standalone profit, then add them while profit improves.

    Standalone profit: the facility alone with its nearest reachable sink, flows
    optimized by LP. Returns (assignment, objective) or None.
    """
    inst = model.instance
    nearest = {}
    for (j, k), miles in inst.dist_facility_sink.items():
        if j not in nearest or (miles, k) < nearest[j]:
            nearest[j] = (miles, k)

    def evaluate(active, sinks, qs):
        on = {("y", j): 1.0 for j in active}
        on.update({("z", k): 1.0 for k in sinks})
        on.update({("q", j): v for j, v in qs.items()})
        l2, u2 = _fixed_binaries(model, lb, ub, on)
        res = lps.solve(l2, u2)
        if res.status != "optimal":
            return None
        return res.x, res.objective

    standalone = []
    for pos, fac in enumerate(inst.facilities):
        j = fac.id
        sinks = [nearest[j][1]] if j in nearest else []
        qcol = model.var_index[("q", j)]
        best = None
        for qv in sorted({lb[qcol], ub[qcol]}, reverse=True):
            out = evaluate([j], sinks, {j: qv})
            if out is not None and (best is None or out[1] > best[1]):
                best = (out[0], out[1], qv)
        if best is not None and best[1] > 0:
            standalone.append((-best[1], pos, j, sinks, best[2]))
    standalone.sort()

    active, sinks, qs = [], [], {}
    current = None
    for _, _, j, jsinks, qv in standalone:
        trial_sinks = sinks + [k for k in jsinks if k not in sinks]
        for qtry in ([qv, 0.0] if qv > 0 else [qv]):
            out = evaluate(active + [j], trial_sinks, {**qs, j: qtry})
            if out is None:
                continue
            if current is None or out[1] > current[1] + 1e-9 * max(1.0, abs(current[1])):
                active.append(j)
                sinks = trial_sinks
                qs[j] = qtry
                current = out
            break
    return current


@dataclass
class _Node:
    priority: tuple
    seq: int
    lb: np.ndarray = None
    ub: np.ndarray = None
    bound: float = math.inf
    depth: int = 0
    basis: Basis | None = None
    branch: tuple | None = None  # (column, direction, fractional distance, parent objective)

    def __lt__(self, other):
        return (self.priority, self.seq) < (other.priority, other.seq)


class BranchAndBound:
    def __init__(self, model, config: SolverConfig | None = None, warm_start=None):
        self.model = model
        self.config = config or SolverConfig()
        self.warm_start = warm_start
        self.rng = random.Random(self.config.seed)
        self.lps = _LPCache(model, self.config)
        self.pseudo: dict[int, list[float]] = {}  # col -> [down_sum, down_n, up_sum, up_n]

    def _priority(self, bound: float, depth: int) -> tuple:
        if self.config.node_selection == "best_bound":
            return (-bound,)
        return (-depth, -bound)

    def _pick_branch(self, x: np.ndarray, frac_cols: np.ndarray) -> int:
        fracs = x[frac_cols] - np.floor(x[frac_cols])
        dist = np.minimum(fracs, 1.0 - fracs)
        if self.config.branching == "pseudo_cost":
            known = [c for c in frac_cols if c in self.pseudo
                     and self.pseudo[c][1] > 0 and self.pseudo[c][3] > 0]
            if known:
                scores = []
                for c, f in zip(frac_cols, fracs):
                    if c not in known:
                        continue
                    ps = self.pseudo[c]
                    down = ps[0] / ps[1] * f
                    up = ps[2] / ps[3] * (1.0 - f)
                    scores.append((max(down, 1e-9) * max(up, 1e-9), c))
                top = max(s for s, _ in scores)
                ties = sorted(c for s, c in scores if s >= top * (1 - 1e-12))
                return int(ties[0] if len(ties) == 1 else self.rng.choice(ties))
        top = dist.max()
        ties = sorted(int(c) for c, d in zip(frac_cols, dist) if d >= top - 1e-9)
        return ties[0] if len(ties) == 1 else self.rng.choice(ties)

    def _record_pseudo(self, node: _Node, objective: float):
        if node.branch is None:
            return
        col, direction, dist, parent_obj = node.branch
        if dist <= 0:
            return
        gain = max(parent_obj - objective, 0.0) / dist
        ps = self.pseudo.setdefault(col, [0.0, 0, 0.0, 0])
        if direction < 0:
            ps[0] += gain
            ps[1] += 1
        else:
            ps[2] += gain
            ps[3] += 1

    def run(self):
        from ..milp import SolveSummary, compute_gap, extract_solution

        model, cfg = self.model, self.config
        start = time.perf_counter()
        lb0, ub0 = presolve(model)

        incumbent, inc_obj = None, -math.inf
        zero = lb0.copy()
        if _feasible(model, zero):
            incumbent, inc_obj = zero, model.objective_value(zero)

        def offer(x, source):
            nonlocal incumbent, inc_obj
            x = np.asarray(x, dtype=float).copy()
            bins = model.binary_columns
            x[bins] = np.round(x[bins])
            if not _feasible(model, x):
                return False
            obj = model.objective_value(x)
            if obj > inc_obj + 1e-9 * max(1.0, abs(inc_obj)):
                incumbent, inc_obj = x, obj
                updates[0] += 1
                log.info("nodes=%d incumbent=%.6f bound=%.6f gap=%.6f (%s)", nodes, inc_obj,
                         bound, compute_gap(inc_obj, bound), source)
                return True
            return False

        updates = [0]
        nodes = 0
        bound = math.inf
        if cfg.use_greedy and model.n_vars:
            g = greedy_assignment(model, lb0, ub0, self.lps)
            if g is not None:
                offer(g[0], "greedy")
        if self.warm_start is not None and len(self.warm_start) == model.n_vars:
            offer(self.warm_start, "warm start")

        heap: list[_Node] = []
        seq = 0
        heapq.heappush(heap, _Node(self._priority(math.inf, 0), seq, lb0, ub0, math.inf, 0))
        trace = []
        status = "optimal"
        int_tol = cfg.int_tol

        def prune_tol():
            return 1e-9 * max(1.0, abs(inc_obj)) if incumbent is not None else 0.0

        def open_bound():
            if not heap:
                return -math.inf
            if cfg.node_selection == "best_bound":
                return heap[0].bound
            return max(n.bound for n in heap)

        while heap:
            if nodes >= cfg.node_limit:
                status = "node_limit"
                break
            if time.perf_counter() - start > cfg.time_limit:
                status = "time_limit"
                break
            node = heapq.heappop(heap)
            if incumbent is not None and node.bound <= inc_obj + prune_tol():
                continue
            res = self.lps.solve(node.lb, node.ub, node.basis)
            nodes += 1
            if res.status == "unbounded":
                raise SolverError("LP relaxation unbounded; model is malformed")
            if res.status == "optimal":
                self._record_pseudo(node, res.objective)
                obj = min(res.objective, node.bound)
                if incumbent is None or obj > inc_obj + prune_tol():
                    x = res.x
                    bins = model.binary_columns
                    frac = bins[np.abs(x[bins] - np.round(x[bins])) > int_tol]
                    if frac.size == 0:
                        offer(x, "integral LP")
                    else:
                        col = self._pick_branch(x, frac)
                        f = x[col] - math.floor(x[col])
                        for direction in (-1, 1):
                            lb, ub = node.lb.copy(), node.ub.copy()
                            if direction < 0:
                                ub[col] = math.floor(x[col])
                            else:
                                lb[col] = math.ceil(x[col])
                            dist = f if direction < 0 else 1.0 - f
                            seq += 1
                            heapq.heappush(heap, _Node(
                                self._priority(obj, node.depth + 1), seq, lb, ub, obj,
                                node.depth + 1, res.basis, (col, direction, dist, res.objective)))
            best_open = open_bound()
            new_bound = max(inc_obj, best_open) if incumbent is not None else best_open
            bound = min(bound, new_bound)
            trace.append(bound)
            if incumbent is not None and compute_gap(inc_obj, bound) <= cfg.gap_tolerance and heap:
                status = "gap_met"
                break

        if not heap and status == "optimal":
            bound = inc_obj if incumbent is not None else -math.inf
            trace.append(bound)
        if incumbent is None:
            raise NoFeasibleSolution("no feasible integer point found within limits")
        elapsed = time.perf_counter() - start
        gap = compute_gap(inc_obj, bound)
        if status in ("node_limit", "time_limit") and gap <= cfg.gap_tolerance:
            status = "gap_met"
        summary = SolveSummary(status, nodes, self.lps.iterations, cfg.gap_tolerance,
                               updates[0], trace)
        log.info("finished status=%s nodes=%d incumbent=%.6f bound=%.6f gap=%.6f in %.2fs",
                 status, nodes, inc_obj, bound, gap, elapsed)
        return extract_solution(model, incumbent, bound=bound, summary=summary)


def branch_and_bound(model, config: SolverConfig | None = None, *, warm_start=None):
    """Solve ``model`` to the configured gap; returns a NetworkSolution."""
    return BranchAndBound(model, config, warm_start).run()


def greedy_incumbent(instance, scenario=None, config: SolverConfig | None = None):
    """Feasible warm-start solution from the greedy heuristic (all-zero fallback)."""
    from ..milp import build_model, extract_solution

    model = build_model(instance, scenario)
    config = config or SolverConfig()
    lb, ub = presolve(model)
    lps = _LPCache(model, config)
    out = greedy_assignment(model, lb, ub, lps) if model.n_vars else None
    x = lb.copy() if out is None or out[1] <= 0 else out[0].copy()
    x[model.binary_columns] = np.round(x[model.binary_columns])
    return extract_solution(model, x)
