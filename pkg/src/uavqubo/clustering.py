"""Distance-based user clustering: QUBO build, penalty bounds, the sampling
loop with penalty escalation, the K-means++ baseline, and the poor-matching
metric.

The clustering cost has no coupling across ground users, so the constrained
optimum assigns every GU to its nearest UAV; that fact powers both the
penalty-bound shortcut and the test oracles.
"""

import json
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .netmodel import Scenario, distance_matrix
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
    "ClusterAssignment",
    "PenaltyEstimate",
    "NoFeasibleSampleError",
    "clustering_cost_model",
    "build_clustering_qubo",
    "clustering_groups",
    "clustering_penalty_lower",
    "penalty_bound_clustering",
    "cluster",
    "kmeanspp",
    "poor_matching_fraction",
    "assignment_to_json",
    "assignment_from_json",
]


class NoFeasibleSampleError(RuntimeError):
    """No sample satisfied the one-UAV-per-GU constraint, even after escalation."""


@dataclass
class ClusterAssignment:
    """GU-to-UAV association matrix with its distance objective."""

    association: np.ndarray
    objective: float
    source: str
    solve_time_s: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.association, dtype=np.int8)
        object.__setattr__(self, "association", arr)
        if not (arr.sum(axis=0) == 1).all():
            raise ValueError("every GU column must sum to exactly 1")

    @property
    def uav_of_gu(self) -> np.ndarray:
        return self.association.argmax(axis=0)


def _var(m, n, num_gus):
    return m * num_gus + n


def clustering_groups(num_uavs, num_gus):
    """One exactly-one group per GU column."""
    return [[_var(m, n, num_gus) for m in range(num_uavs)]
            for n in range(num_gus)]


def clustering_cost_model(scenario: Scenario) -> QuboModel:
    """Linear distance cost over association variables labeled (m, n)."""
    d = distance_matrix(scenario)
    M, N = d.shape
    model = QuboModel(M * N)
    for m in range(M):
        for n in range(N):
            v = _var(m, n, N)
            model.add_linear(v, d[m, n])
            model.set_label(v, ("assoc", m, n))
    return model


def build_clustering_qubo(scenario: Scenario, lambda_p: float) -> QuboModel:
    """Distance cost plus lambda_p times the one-UAV-per-GU penalty.

    At any feasible assignment the penalty vanishes, so the energy equals the
    clustering objective exactly.
    """
    if lambda_p <= 0:
        raise ValueError("lambda_p must be positive")
    cost = clustering_cost_model(scenario)
    groups = clustering_groups(scenario.num_uavs, scenario.num_gus)
    penalty = penalty_exactly_one(groups, num_vars=cost.num_vars)
    return scale_and_add(cost, penalty, lambda_p)


def clustering_penalty_lower(scenario: Scenario) -> float:
    """Exact penalty-factor lower bound for the clustering cost.

    The binding infeasible state drops the single worst-covered GU from the
    optimal assignment, so the bound is the largest nearest-UAV distance.
    Matches the enumerated bound wherever enumeration is tractable.
    """
    d = distance_matrix(scenario)
    return float(d.min(axis=0).max())


def penalty_bound_clustering(scenario: Scenario,
                             mode: str = "heuristic-bound",
                             cap: int = 20) -> PenaltyEstimate:
    """Penalty-factor range per the exhaustive definition or a safe heuristic.

    Heuristic mode returns a touch over the largest distance, which makes any
    one-unit constraint repair profitable regardless of the state.
    """
    cost = clustering_cost_model(scenario)
    if mode == "heuristic-bound":
        return heuristic_penalty_bound(cost)
    if mode == "enumerated":
        groups = clustering_groups(scenario.num_uavs, scenario.num_gus)
        return enumerated_penalty_bound(cost, groups, cap=cap)
    raise ValueError(f"unknown mode {mode!r}")


def _decode(best_state, scenario, d, source, solve_time):
    M, N = d.shape
    association = np.asarray(best_state, dtype=np.int8).reshape(M, N)
    objective = float((association * d).sum())
    out = ClusterAssignment(association=association, objective=objective,
                            source=source, solve_time_s=solve_time)
    loads = association.sum(axis=1)
    cap = scenario.radio.max_gus_per_uav
    if (loads > cap).any():
        heavy = ", ".join(f"UAV {m}: {loads[m]}" for m in np.nonzero(loads > cap)[0])
        warnings.warn(f"cluster load exceeds {cap} GUs per UAV ({heavy})")
    return out


def cluster(scenario: Scenario, sampler, lambda_p: float | None = None,
            max_escalations: int = 3) -> ClusterAssignment:
    """Sample the clustering QUBO and decode the best feasible assignment.

    Starts from lambda_p (default: just above the exact lower bound) and
    escalates it tenfold, up to max_escalations times, whenever the sampler
    returns no feasible state.
    """
    if lambda_p is None:
        lambda_p = 1.05 * clustering_penalty_lower(scenario)
    d = distance_matrix(scenario)
    groups = clustering_groups(scenario.num_uavs, scenario.num_gus)
    predicate = exactly_one_predicate(groups)
    solve_time = 0.0
    lam = float(lambda_p)
    for _ in range(max_escalations + 1):
        model = build_clustering_qubo(scenario, lam)
        samples = sampler(model)
        solve_time += samples.wall_time_s
        feasible = filter_feasible(samples, predicate)
        if len(feasible):
            return _decode(feasible.states[0], scenario, d,
                           samples.solver_name, solve_time)
        lam *= 10.0
    raise NoFeasibleSampleError(
        f"no feasible clustering sample after {max_escalations} escalations")


def _lloyd_once(points, k, rng, max_iters):
    """One D^2-seeded Lloyd run; returns (inertia, labels, centroids)."""
    centroids = np.empty((k, 2))
    centroids[0] = points[rng.integers(len(points))]
    for i in range(1, k):
        dist_sq = np.min(((points[:, None, :] - centroids[None, :i, :]) ** 2
                          ).sum(axis=2), axis=1)
        probs = dist_sq / dist_sq.sum()
        centroids[i] = points[rng.choice(len(points), p=probs)]
    labels = np.zeros(len(points), dtype=int)
    for _ in range(max_iters):
        dists = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = dists.argmin(axis=1)
        new_centroids = centroids.copy()
        for j in range(k):
            mask = labels == j
            if mask.any():
                new_centroids[j] = points[mask].mean(axis=0)
            else:
                new_centroids[j] = points[rng.integers(len(points))]
        if np.allclose(new_centroids, centroids):
            break
        centroids = new_centroids
    inertia = float(((points - centroids[labels]) ** 2).sum())
    return inertia, labels, centroids


def kmeanspp(scenario: Scenario, num_clusters: int | None = None,
             seed: int | None = None, max_iters: int = 100,
             n_init: int = 10) -> ClusterAssignment:
    """K-means++ seeding plus Lloyd iterations, decoded onto the fixed UAVs.

    Runs n_init independent inits and keeps the lowest-inertia clustering
    (the stock library behavior). Each converged cluster maps to its nearest
    UAV; when two clusters want the same UAV the closer pair wins and the
    other cluster takes its next nearest free UAV. Deterministic per seed.
    """
    points = scenario.gu_positions
    k = scenario.num_uavs if num_clusters is None else num_clusters
    if k > len(points):
        raise ValueError("more clusters than ground users")
    t0 = time.perf_counter()
    best = None
    for child in np.random.SeedSequence(seed).spawn(n_init):
        run = _lloyd_once(points, k, np.random.default_rng(child), max_iters)
        if best is None or run[0] < best[0]:
            best = run
    _, labels, centroids = best

    # greedy nearest-first matching of clusters onto the fixed UAV sites
    cu = np.linalg.norm(centroids[:, None, :] - scenario.uav_positions[None, :, :],
                        axis=2)
    uav_of_cluster = np.full(k, -1)
    taken = np.zeros(scenario.num_uavs, dtype=bool)
    order = np.dstack(np.unravel_index(np.argsort(cu, axis=None), cu.shape))[0]
    for ci, ui in order:
        if uav_of_cluster[ci] == -1 and not taken[ui]:
            uav_of_cluster[ci] = ui
            taken[ui] = True

    association = np.zeros((scenario.num_uavs, len(points)), dtype=np.int8)
    association[uav_of_cluster[labels], np.arange(len(points))] = 1
    d = distance_matrix(scenario)
    objective = float((association * d).sum())
    return ClusterAssignment(association=association, objective=objective,
                             source="kmeans++",
                             solve_time_s=time.perf_counter() - t0)


def poor_matching_fraction(assignment: ClusterAssignment,
                           scenario: Scenario) -> float:
    """Fraction of GUs not served by a minimum-distance UAV; ties are fine."""
    d = distance_matrix(scenario)
    served = d[assignment.uav_of_gu, np.arange(scenario.num_gus)]
    nearest = d.min(axis=0)
    return float((served > nearest + 1e-9).mean())


def assignment_to_json(assignment: ClusterAssignment, path):
    doc = {"association": assignment.association.tolist(),
           "objective": assignment.objective,
           "source": assignment.source}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def assignment_from_json(path) -> ClusterAssignment:
    with open(path) as fh:
        doc = json.load(fh)
    return ClusterAssignment(association=np.array(doc["association"]),
                             objective=doc["objective"],
                             source=doc.get("source", "file"))
