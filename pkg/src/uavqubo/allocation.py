"""Joint sub-channel and power-level allocation for a fixed clustering.

The sum-SINR surrogate is a ratio of a linear signal term to a quadratic
co-channel interference term; the scaling parameter weighting interference
against signal is found by the parametric (ratio-iteration) method, solving
one QUBO per iterate. The final plan is always re-scored with the exact
log-rate formula, never the surrogate.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .clustering import ClusterAssignment, NoFeasibleSampleError
from .evaluate import NetworkAssignment, sum_rate
from .netmodel import Scenario, gain_matrix
from .qubo import (
    QuboModel,
    PenaltyEstimate,
    penalty_exactly_one,
    scale_and_add,
    heuristic_penalty_bound,
    enumerated_penalty_bound,
)
from .solvers import filter_feasible, exactly_one_predicate

__all__ = [
    "AllocationVars",
    "FractionalObjective",
    "AllocationPlan",
    "fractional_objective",
    "fractional_qubo",
    "build_allocation_qubo",
    "penalty_bound_allocation",
    "decode_allocation",
    "dinkelbach_iterate",
    "dinkelbach_solve",
    "per_term_scaling",
    "plan_to_assignment",
    "plan_to_json",
    "plan_from_json",
    "plan_to_csv",
]


@dataclass(frozen=True)
class AllocationVars:
    """Bijection between (uav, channel, level) triples and flat variable ids."""

    num_uavs: int
    num_subchannels: int
    num_levels: int

    @property
    def num_vars(self) -> int:
        return self.num_uavs * self.num_subchannels * self.num_levels

    def index(self, m, k, l) -> int:
        return (m * self.num_subchannels + k) * self.num_levels + l

    def unpack(self, v: int):
        m, rest = divmod(v, self.num_subchannels * self.num_levels)
        k, l = divmod(rest, self.num_levels)
        return m, k, l

    def groups(self):
        """Per-UAV variable groups for the one-choice constraint."""
        span = self.num_subchannels * self.num_levels
        return [list(range(m * span, (m + 1) * span))
                for m in range(self.num_uavs)]


@dataclass
class FractionalObjective:
    """Aggregate surrogate ratio: signal sum over interference sum plus noise."""

    signal_w: np.ndarray
    interference_pairs: dict
    noise_w: float

    def numerator(self, x) -> float:
        return float(self.signal_w @ np.asarray(x, dtype=float))

    def interference(self, x) -> float:
        x = np.asarray(x)
        return float(sum(w for (i, j), w in self.interference_pairs.items()
                         if x[i] and x[j]))

    def denominator(self, x) -> float:
        return self.interference(x) + self.noise_w

    def ratio(self, x) -> float:
        return self.numerator(x) / self.denominator(x)


def _association_matrix(association) -> np.ndarray:
    if isinstance(association, ClusterAssignment):
        return association.association
    return np.asarray(association, dtype=np.int8)


def fractional_objective(scenario: Scenario, association):
    """Signal and interference coefficients for the given clustering."""
    s = _association_matrix(association)
    gains = gain_matrix(scenario).linear_gain
    p_w = scenario.radio.power_levels_w
    vars_ = AllocationVars(num_uavs=scenario.num_uavs,
                           num_subchannels=scenario.radio.num_subchannels,
                           num_levels=scenario.radio.num_power_levels)
    # cross[m2, m] = summed gain from UAV m2 into the GUs served by UAV m
    cross = gains @ s.T.astype(float)
    signal = np.zeros(vars_.num_vars)
    for m in range(vars_.num_uavs):
        for k in range(vars_.num_subchannels):
            for l in range(vars_.num_levels):
                signal[vars_.index(m, k, l)] = cross[m, m] * p_w[l]
    pairs: dict[tuple[int, int], float] = {}
    for m in range(vars_.num_uavs):
        for m2 in range(vars_.num_uavs):
            if m2 == m or cross[m2, m] == 0.0:
                continue
            for k in range(vars_.num_subchannels):
                for l in range(vars_.num_levels):
                    vm = vars_.index(m, k, l)
                    for l2 in range(vars_.num_levels):
                        vm2 = vars_.index(m2, k, l2)
                        key = (vm, vm2) if vm < vm2 else (vm2, vm)
                        pairs[key] = pairs.get(key, 0.0) + cross[m2, m] * p_w[l2]
    frac = FractionalObjective(signal_w=signal, interference_pairs=pairs,
                               noise_w=scenario.radio.noise_w)
    return frac, vars_


def _cost_model(frac: FractionalObjective, lambda_i: float,
                labels=None) -> QuboModel:
    model = QuboModel(len(frac.signal_w), var_labels=labels)
    for v, w in enumerate(frac.signal_w):
        if w:
            model.add_linear(v, -w)
    if lambda_i != 0.0:
        for (i, j), w in frac.interference_pairs.items():
            model.add_quadratic(i, j, lambda_i * w)
    return model


def fractional_qubo(frac: FractionalObjective, groups, lambda_i: float,
                    lambda_p2: float, labels=None) -> QuboModel:
    """-signal + lambda_i * interference + lambda_p2 * one-choice penalty."""
    if lambda_i < 0:
        raise ValueError("lambda_i must be nonnegative")
    if lambda_p2 <= 0:
        raise ValueError("lambda_p2 must be positive")
    cost = _cost_model(frac, lambda_i, labels)
    penalty = penalty_exactly_one(groups, num_vars=cost.num_vars)
    return scale_and_add(cost, penalty, lambda_p2)


def build_allocation_qubo(scenario: Scenario, association, lambda_i: float,
                          lambda_p2: float) -> QuboModel:
    """Allocation QUBO over (uav, channel, level) choice variables.

    At any one-choice-feasible x the energy equals
    -numerator(x) + lambda_i * (denominator(x) - noise), exactly.
    """
    frac, vars_ = fractional_objective(scenario, association)
    labels = {v: ("alloc",) + vars_.unpack(v) for v in range(vars_.num_vars)}
    return fractional_qubo(frac, vars_.groups(), lambda_i, lambda_p2, labels)


def penalty_bound_allocation(scenario: Scenario, association, lambda_i: float,
                             mode: str = "heuristic-bound",
                             cap: int = 20) -> PenaltyEstimate:
    """Penalty-factor range for the one-choice constraint at a given scaling."""
    frac, vars_ = fractional_objective(scenario, association)
    cost = _cost_model(frac, lambda_i)
    if mode == "heuristic-bound":
        return heuristic_penalty_bound(cost)
    if mode == "enumerated":
        return enumerated_penalty_bound(cost, vars_.groups(), cap=cap)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class AllocationPlan:
    """Decoded per-UAV channel and power choice plus solver diagnostics."""

    subchannel_of_uav: dict
    power_level_of_uav: dict
    lambda_i: float = 0.0
    dinkelbach_iters: int = 0
    residual_f: float = math.nan
    sum_rate: float = math.nan
    solve_time_s: float = 0.0


def _at_most_one_predicate(groups):
    arr_groups = [np.asarray(g) for g in groups]

    def predicate(bits):
        bits = np.asarray(bits)
        if bits.ndim == 2:
            mask = np.ones(bits.shape[0], dtype=bool)
            for g in arr_groups:
                mask &= bits[:, g].sum(axis=1) <= 1
            return mask
        return all(bits[g].sum() <= 1 for g in arr_groups)

    return predicate


def decode_allocation(sampleset, vars_: AllocationVars,
                      mode: str = "exactly-one") -> AllocationPlan:
    """Decode the lowest-energy feasible sample into per-UAV choices.

    Silent UAVs (an all-zero row) are only allowed in at-most-one mode.
    """
    groups = vars_.groups()
    if mode == "exactly-one":
        predicate = exactly_one_predicate(groups)
    elif mode == "at-most-one":
        predicate = _at_most_one_predicate(groups)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    feasible = filter_feasible(sampleset, predicate)
    if len(feasible) == 0:
        raise NoFeasibleSampleError("no feasible allocation sample")
    state = feasible.states[0]
    sub, pow_ = {}, {}
    for m, group in enumerate(groups):
        chosen = [v for v in group if state[v]]
        if not chosen:
            sub[m], pow_[m] = None, None
        else:
            _, k, l = vars_.unpack(chosen[0])
            sub[m], pow_[m] = k, l
    return AllocationPlan(subchannel_of_uav=sub, power_level_of_uav=pow_)


def dinkelbach_iterate(frac: FractionalObjective, groups, sampler,
                       tol: float = 1e-6, max_iter: int = 20,
                       lambda_p2: float | None = None,
                       max_escalations: int = 3, export_dir=None):
    """Ratio iteration on the aggregate surrogate.

    Starting from a zero scaling (interference-blind signal maximization),
    each round solves the QUBO at the current scaling q, then moves q to the
    ratio of the best feasible sample. Stops when the parametric residual
    numerator - q * denominator is small relative to the numerator (both
    sides normalized by the largest signal coefficient so the test is scale
    free), or when q stops moving, or after max_iter rounds. With export_dir
    set, every iteration's QUBO lands there as alloc_iter<NN>.qubo for audit.

    Returns (state, q, iterations, residual, solve_time_s).
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("need tol > 0 and max_iter >= 1")
    scale = float(frac.signal_w.max()) if len(frac.signal_w) else 1.0
    if scale <= 0:
        scale = 1.0
    predicate = exactly_one_predicate(groups)
    q = 0.0
    solve_time = 0.0
    x = q_used = residual = None
    for iteration in range(1, max_iter + 1):
        lam_p2 = lambda_p2
        if lam_p2 is None:
            lam_p2 = heuristic_penalty_bound(_cost_model(frac, q)).chosen
        feasible = None
        lam = lam_p2
        for _ in range(max_escalations + 1):
            model = fractional_qubo(frac, groups, q, lam)
            if export_dir is not None:
                from pathlib import Path
                from .qubo import export_qubo_file
                export_qubo_file(model, Path(export_dir)
                                 / f"alloc_iter{iteration:02d}.qubo")
            samples = sampler(model)
            solve_time += samples.wall_time_s
            feasible = filter_feasible(samples, predicate)
            if len(feasible):
                break
            lam *= 10.0
        if feasible is None or len(feasible) == 0:
            raise NoFeasibleSampleError(
                "no feasible allocation sample after penalty escalation")
        x = feasible.states[0]
        num = frac.numerator(x)
        den = frac.denominator(x)
        residual = num - q * den
        q_used = q
        if abs(residual) / scale <= tol * max(1.0, num / scale):
            break
        q_next = num / den
        if not math.isfinite(q_next):
            raise ArithmeticError(f"non-finite scaling parameter {q_next!r}")
        if q_next == q:
            break
        q = q_next
    return x, q_used, iteration, residual, solve_time


def dinkelbach_solve(scenario: Scenario, association, sampler,
                     tol: float = 1e-6, max_iter: int = 20,
                     lambda_p2: float | None = None,
                     max_served_per_uav: int | None = None,
                     export_dir=None) -> AllocationPlan:
    """Full allocation pass: derive the scaling, decode, score the exact rate."""
    frac, vars_ = fractional_objective(scenario, association)
    x, q, iters, residual, solve_time = dinkelbach_iterate(
        frac, vars_.groups(), sampler, tol=tol, max_iter=max_iter,
        lambda_p2=lambda_p2, export_dir=export_dir)
    sub, pow_ = {}, {}
    for m, group in enumerate(vars_.groups()):
        chosen = [v for v in group if x[v]]
        _, k, l = vars_.unpack(chosen[0])
        sub[m], pow_[m] = k, l
    plan = AllocationPlan(subchannel_of_uav=sub, power_level_of_uav=pow_,
                          lambda_i=q, dinkelbach_iters=iters,
                          residual_f=residual, solve_time_s=solve_time)
    assignment = plan_to_assignment(association, plan,
                                    scenario.radio.num_subchannels,
                                    scenario.radio.num_power_levels)
    plan.sum_rate = sum_rate(assignment, gain_matrix(scenario),
                             scenario.radio.power_levels_w,
                             scenario.radio.noise_w,
                             max_served_per_uav=max_served_per_uav)
    return plan


def per_term_scaling(scenario: Scenario, association, x) -> dict:
    """Per-link scaling split at a given state: numerator and denominator parts.

    For each active (uav, channel, level) choice and each GU it serves,
    lambda_num is the link's own gain-power product and lambda_den the summed
    gain-power products of active co-channel interferers; a zero denominator
    marks the interference-free branch.
    """
    s = _association_matrix(association)
    gains = gain_matrix(scenario).linear_gain
    p_w = scenario.radio.power_levels_w
    vars_ = AllocationVars(num_uavs=scenario.num_uavs,
                           num_subchannels=scenario.radio.num_subchannels,
                           num_levels=scenario.radio.num_power_levels)
    x = np.asarray(x)
    active = {}
    for v in np.nonzero(x)[0]:
        m, k, l = vars_.unpack(int(v))
        active[m] = (k, l)
    out = {}
    for m, (k, l) in active.items():
        for n in np.nonzero(s[m])[0]:
            lam_num = float(gains[m, n] * p_w[l])
            lam_den = 0.0
            for m2, (k2, l2) in active.items():
                if m2 != m and k2 == k:
                    lam_den += float(gains[m2, n] * p_w[l2])
            out[(m, int(n), k, l)] = (lam_num, lam_den)
    return out


def plan_to_assignment(association, plan: AllocationPlan, num_subchannels: int,
                       num_levels: int) -> NetworkAssignment:
    """Assemble the binary network assignment from a clustering and a plan."""
    s = _association_matrix(association)
    M = s.shape[0]
    sub = np.zeros((M, num_subchannels), dtype=np.int8)
    pow_ = np.zeros((M, num_levels), dtype=np.int8)
    for m in range(M):
        if plan.subchannel_of_uav.get(m) is not None:
            sub[m, plan.subchannel_of_uav[m]] = 1
        if plan.power_level_of_uav.get(m) is not None:
            pow_[m, plan.power_level_of_uav[m]] = 1
    return NetworkAssignment(association=s, subchannel=sub, power=pow_)


def plan_to_json(plan: AllocationPlan, power_levels_dbm, path):
    doc = {
        "subchannel_of_uav": {str(m): k for m, k in plan.subchannel_of_uav.items()},
        "power_dbm_of_uav": {
            str(m): (None if l is None else float(power_levels_dbm[l]))
            for m, l in plan.power_level_of_uav.items()},
        "power_level_of_uav": {str(m): l for m, l in plan.power_level_of_uav.items()},
        "lambda_i": plan.lambda_i,
        "iterations": plan.dinkelbach_iters,
        "residual": plan.residual_f,
        "sum_rate": plan.sum_rate,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def plan_from_json(path) -> AllocationPlan:
    with open(path) as fh:
        doc = json.load(fh)
    return AllocationPlan(
        subchannel_of_uav={int(m): k for m, k in doc["subchannel_of_uav"].items()},
        power_level_of_uav={int(m): l
                            for m, l in doc["power_level_of_uav"].items()},
        lambda_i=doc["lambda_i"], dinkelbach_iters=doc["iterations"],
        residual_f=doc["residual"], sum_rate=doc.get("sum_rate", math.nan))


def plan_to_csv(plan: AllocationPlan, power_levels_dbm, path):
    """One row per UAV: uav, subchannel, power_dbm, lambda_i, iterations,
    residual."""
    import csv
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["uav", "subchannel", "power_dbm", "lambda_i",
                         "iterations", "residual"])
        for m in sorted(plan.subchannel_of_uav):
            level = plan.power_level_of_uav[m]
            writer.writerow([
                m,
                "" if plan.subchannel_of_uav[m] is None
                else plan.subchannel_of_uav[m],
                "" if level is None else repr(float(power_levels_dbm[level])),
                repr(plan.lambda_i), plan.dinkelbach_iters,
                repr(plan.residual_f)])
