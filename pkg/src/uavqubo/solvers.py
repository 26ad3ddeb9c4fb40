"""Classical QUBO samplers behind one contract: exhaustive enumeration,
steepest descent, and simulated annealing.

These stand in for a quantum annealing machine; they minimize the identical
QUBO energy. Every sampler returns a SampleSet whose energies are recomputed
exactly from the model before returning, so reported values never drift from
the incremental bookkeeping used during the search.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .qubo import QuboModel

__all__ = [
    "SampleSet",
    "SaSchedule",
    "solve_exhaustive",
    "solve_steepest_descent",
    "solve_sa",
    "filter_feasible",
    "exactly_one_predicate",
    "connected_components",
    "merge_samplesets",
    "exhaustive_sampler",
    "sd_sampler",
    "sa_sampler",
]

EXHAUSTIVE_CAP = 24
_CHUNK_BITS = 16


@dataclass
class SampleSet:
    """Energy-ranked bit assignments from one solver run.

    Rows are sorted ascending by energy with lexicographic bit order breaking
    ties; duplicate states are merged into one row with summed multiplicity.
    """

    states: np.ndarray
    energies: np.ndarray
    multiplicities: np.ndarray
    solver_name: str
    wall_time_s: float = 0.0
    params_echo: dict = field(default_factory=dict)

    def __len__(self):
        return self.states.shape[0]

    @property
    def num_vars(self):
        return self.states.shape[1]

    def best(self):
        """Lowest-energy (state, energy) pair."""
        if len(self) == 0:
            raise ValueError("empty sample set")
        return self.states[0], float(self.energies[0])

    def to_csv(self, path, feasibility=None):
        """Rows: energy, feasible, bits (hex, bit 0 most significant), multiplicity."""
        import csv
        feas = _feasible_mask(self, feasibility) if feasibility else None
        width = max((self.num_vars + 3) // 4, 1)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["energy", "feasible", "bits_hex", "multiplicity"])
            for idx in range(len(self)):
                bits = self.states[idx]
                value = 0
                for b in bits:
                    value = (value << 1) | int(b)
                value <<= (width * 4 - self.num_vars)
                writer.writerow([repr(float(self.energies[idx])),
                                 "" if feas is None else bool(feas[idx]),
                                 format(value, f"0{width}x"),
                                 int(self.multiplicities[idx])])


@dataclass
class SaSchedule:
    """Annealing plan: geometric inverse-temperature ladder, restart count, seed.

    When the beta endpoints are omitted they are scaled from the model's
    largest coefficient magnitude (0.1/maxcoef up to 10/maxcoef), which makes
    the default schedule usable across very different coefficient scales.
    """

    sweeps: int = 200
    restarts: int = 10
    beta_initial: float | None = None
    beta_final: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.sweeps < 1 or self.restarts < 1:
            raise ValueError("sweeps and restarts must be >= 1")
        if self.beta_initial is not None and self.beta_final is not None:
            if not 0 < self.beta_initial < self.beta_final:
                raise ValueError("need 0 < beta_initial < beta_final")

    def resolve_betas(self, model: QuboModel):
        if self.beta_initial is not None and self.beta_final is not None:
            return float(self.beta_initial), float(self.beta_final)
        maxcoef = model.max_abs_coefficient()
        if maxcoef <= 0:
            maxcoef = 1.0
        return 0.1 / maxcoef, 10.0 / maxcoef


def _lex_keys(states):
    n = states.shape[1]
    if n == 0:
        return np.zeros(states.shape[0], dtype=np.uint64)
    if n <= 63:
        key = np.zeros(states.shape[0], dtype=np.uint64)
        for i in range(n):
            key |= states[:, i].astype(np.uint64) << np.uint64(n - 1 - i)
        return key
    return None


def _canonical(states, energies, multiplicities):
    states = np.ascontiguousarray(states, dtype=np.uint8)
    energies = np.asarray(energies, dtype=np.float64)
    multiplicities = np.asarray(multiplicities, dtype=np.int64)
    key = _lex_keys(states)
    if key is not None:
        order = np.lexsort((key, energies))
    else:
        cols = [states[:, i] for i in range(states.shape[1] - 1, -1, -1)]
        order = np.lexsort(tuple(cols) + (energies,))
    states, energies, multiplicities = states[order], energies[order], multiplicities[order]
    if len(states) > 1:
        same = np.all(states[1:] == states[:-1], axis=1)
        if same.any():
            starts = np.flatnonzero(np.concatenate(([True], ~same)))
            mult = np.add.reduceat(multiplicities, starts)
            states, energies = states[starts], energies[starts]
            multiplicities = mult
    return states, energies, multiplicities


def _make_sampleset(model, states, solver_name, wall_time_s, params_echo,
                    multiplicities=None):
    states = np.atleast_2d(np.asarray(states, dtype=np.uint8))
    if multiplicities is None:
        multiplicities = np.ones(states.shape[0], dtype=np.int64)
    energies = np.array([model.energy(s) for s in states])
    states, energies, multiplicities = _canonical(states, energies, multiplicities)
    return SampleSet(states=states, energies=energies,
                     multiplicities=multiplicities, solver_name=solver_name,
                     wall_time_s=wall_time_s, params_echo=params_echo)


def solve_exhaustive(model: QuboModel, k_best: int | None = None,
                     cap: int = EXHAUSTIVE_CAP) -> SampleSet:
    """Enumerate every state; the global minimum is always present.

    Returns all 2^n states, or only the k_best lowest-energy ones.
    """
    n = model.num_vars
    if n > cap:
        raise ValueError(f"exhaustive enumeration refused: {n} > cap {cap}")
    t0 = time.perf_counter()
    total = 1 << n
    chunk = 1 << min(_CHUNK_BITS, n)
    shifts = np.arange(n, dtype=np.int64)
    c, upper = model.dense()
    keep_states = []
    keep_energies = []
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        states = ((codes[:, None] >> shifts) & 1).astype(np.uint8)
        xf = states.astype(np.float64)
        energies = xf @ c + ((xf @ upper) * xf).sum(axis=1) + model.offset
        if k_best is not None and k_best < len(energies):
            part = np.argpartition(energies, k_best - 1)[:k_best]
            states, energies = states[part], energies[part]
        keep_states.append(states)
        keep_energies.append(energies)
        if k_best is not None and len(keep_states) > 1:
            all_s = np.concatenate(keep_states)
            all_e = np.concatenate(keep_energies)
            if len(all_e) > k_best:
                part = np.argpartition(all_e, k_best - 1)[:k_best]
                all_s, all_e = all_s[part], all_e[part]
            keep_states, keep_energies = [all_s], [all_e]
    states = np.concatenate(keep_states) if keep_states else np.zeros((1, 0), np.uint8)
    energies = np.concatenate(keep_energies) if keep_energies else np.array([model.offset])
    mult = np.ones(len(states), dtype=np.int64)
    states, energies, mult = _canonical(states, energies, mult)
    wall = time.perf_counter() - t0
    return SampleSet(states=states, energies=energies, multiplicities=mult,
                     solver_name="exhaustive", wall_time_s=wall,
                     params_echo={"k_best": k_best})


def _descend(model, x, g, sgn, W, max_rounds):
    """In-place steepest descent; returns the number of flips."""
    flips = 0
    while max_rounds is None or flips < max_rounds:
        i = int(np.argmin(g))  # ties break toward the lowest index
        gi = float(g[i])
        if gi >= 0.0:
            break
        delta = sgn[i]
        g += W[i] * (sgn * delta)
        g[i] = -gi
        x[i] ^= 1
        sgn[i] = -sgn[i]
        flips += 1
    return flips


def _init_state(model, W, c, x):
    xf = x.astype(np.float64)
    sgn = 1.0 - 2.0 * xf
    g = sgn * (c + W @ xf)
    return sgn, g


def solve_steepest_descent(model: QuboModel, start=None, seed=None,
                           max_rounds: int | None = None) -> SampleSet:
    """Greedy single-bit descent with incremental flip-gain updates.

    Flips the bit with the largest energy decrease until no flip decreases
    the energy (a 1-flip-local optimum) or max_rounds flips were made.
    """
    t0 = time.perf_counter()
    n = model.num_vars
    c, W = model.symmetric()
    if start is not None:
        x = np.asarray(start, dtype=np.uint8).copy()
        if x.shape != (n,):
            raise ValueError("start vector length mismatch")
    else:
        x = np.random.default_rng(seed).integers(0, 2, size=n, dtype=np.uint8)
    sgn, g = _init_state(model, W, c, x)
    flips = _descend(model, x, g, sgn, W, max_rounds)
    wall = time.perf_counter() - t0
    return _make_sampleset(model, [x], "steepest-descent", wall,
                           {"seed": seed, "max_rounds": max_rounds,
                            "flips": flips})


def _anneal_restarts(submodel, schedule, seed_seq):
    """Run schedule.restarts anneals; per restart return (final, best_seen)."""
    n = submodel.num_vars
    beta_i, beta_f = schedule.resolve_betas(submodel)
    betas = np.geomspace(beta_i, beta_f, schedule.sweeps)
    c, W = submodel.symmetric()
    finals, bests = [], []
    for child in seed_seq.spawn(schedule.restarts):
        rng = np.random.default_rng(child)
        x = rng.integers(0, 2, size=n, dtype=np.uint8)
        sgn, g = _init_state(submodel, W, c, x)
        e = submodel.energy(x)
        best_e, best_x = e, x.copy()
        for beta in betas:
            order = rng.permutation(n)
            logu = np.log1p(-rng.random(n))
            pos = 0
            while pos < n:
                # Gains stay valid until a flip, so the whole rejected run
                # of proposals is evaluated in one vector comparison.
                idx = order[pos:]
                accept = beta * g[idx] < -logu[pos:]
                k = int(np.argmax(accept))
                if not accept[k]:
                    break
                pos += k
                i = int(order[pos])
                gi = float(g[i])
                delta = sgn[i]
                g += W[i] * (sgn * delta)
                g[i] = -gi
                x[i] ^= 1
                sgn[i] = -sgn[i]
                e += gi
                if e < best_e:
                    best_e, best_x = e, x.copy()
                pos += 1
        finals.append(x.copy())
        bests.append(best_x)
    return finals, bests, (beta_i, beta_f)


def connected_components(model: QuboModel) -> list[list[int]]:
    """Variable groups linked by quadratic terms, ordered by smallest member."""
    parent = list(range(model.num_vars))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in model.quadratic:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for v in range(model.num_vars):
        groups.setdefault(find(v), []).append(v)
    return [groups[r] for r in sorted(groups)]


def _submodel(model, variables):
    sub = QuboModel(len(variables))
    pos = {v: k for k, v in enumerate(variables)}
    for v in variables:
        if v in model.linear:
            sub.add_linear(pos[v], model.linear[v])
    for (i, j), q in model.quadratic.items():
        if i in pos:  # components are closed under quadratic terms
            sub.add_quadratic(pos[i], pos[j], q)
    return sub


def solve_sa(model: QuboModel, schedule: SaSchedule,
             decompose: bool = False) -> SampleSet:
    """Metropolis single-flip annealing over a geometric beta ladder.

    Each restart draws its generator from one spawn of the schedule seed and
    contributes its final state and its best-seen state; deterministic for a
    fixed seed. With decompose=True the model is first split into connected
    components (the presolve step hybrid constrained solvers apply), each
    component is annealed independently with its own spawned seed stream, and
    restart r of the result concatenates restart r of every component. The
    energy being a direct sum over components, the assembled samples are
    exact samples of the full model.
    """
    t0 = time.perf_counter()
    n = model.num_vars
    root = np.random.SeedSequence(schedule.seed)
    components = connected_components(model) if decompose else []
    if decompose and len(components) > 1:
        finals = [np.zeros(n, dtype=np.uint8) for _ in range(schedule.restarts)]
        bests = [np.zeros(n, dtype=np.uint8) for _ in range(schedule.restarts)]
        comp_seeds = root.spawn(len(components))
        for variables, seed_seq in zip(components, comp_seeds):
            sub = _submodel(model, variables)
            sub_finals, sub_bests, _ = _anneal_restarts(sub, schedule, seed_seq)
            idx = np.asarray(variables)
            for r in range(schedule.restarts):
                finals[r][idx] = sub_finals[r]
                bests[r][idx] = sub_bests[r]
        states = [s for pair in zip(finals, bests) for s in pair]
        beta_echo = (None, None)
    else:
        finals, bests, beta_echo = _anneal_restarts(model, schedule, root)
        states = [s for pair in zip(finals, bests) for s in pair]
    wall = time.perf_counter() - t0
    return _make_sampleset(
        model, states, "simulated-annealing", wall,
        {"sweeps": schedule.sweeps, "restarts": schedule.restarts,
         "beta_initial": beta_echo[0], "beta_final": beta_echo[1],
         "seed": schedule.seed, "decompose": decompose,
         "num_components": len(components) if decompose else 1})


def _feasible_mask(sampleset: SampleSet, predicate):
    try:
        mask = predicate(sampleset.states)
        mask = np.asarray(mask)
        if mask.dtype == bool and mask.shape == (len(sampleset),):
            return mask
    except Exception:
        pass
    return np.array([bool(predicate(row)) for row in sampleset.states])


def filter_feasible(sampleset: SampleSet, predicate) -> SampleSet:
    """Stable subset of samples satisfying the predicate.

    The predicate receives either a (batch, n) matrix (fast path, returning a
    boolean mask) or a single bit vector.
    """
    mask = _feasible_mask(sampleset, predicate)
    return SampleSet(states=sampleset.states[mask],
                     energies=sampleset.energies[mask],
                     multiplicities=sampleset.multiplicities[mask],
                     solver_name=sampleset.solver_name,
                     wall_time_s=sampleset.wall_time_s,
                     params_echo=dict(sampleset.params_echo))


def exactly_one_predicate(groups):
    """Feasibility test: every group holds exactly one set bit. Batch-aware."""
    groups = [np.asarray(list(g), dtype=np.int64) for g in groups]

    def predicate(bits):
        bits = np.asarray(bits)
        if bits.ndim == 2:
            mask = np.ones(bits.shape[0], dtype=bool)
            for g in groups:
                mask &= bits[:, g].sum(axis=1) == 1
            return mask
        return all(bits[g].sum() == 1 for g in groups)

    return predicate


def merge_samplesets(samplesets, solver_name=None) -> SampleSet:
    """Deterministic union of sample sets over the same variable space."""
    if not samplesets:
        raise ValueError("nothing to merge")
    states = np.concatenate([s.states for s in samplesets])
    energies = np.concatenate([s.energies for s in samplesets])
    mult = np.concatenate([s.multiplicities for s in samplesets])
    states, energies, mult = _canonical(states, energies, mult)
    return SampleSet(states=states, energies=energies, multiplicities=mult,
                     solver_name=solver_name or samplesets[0].solver_name,
                     wall_time_s=sum(s.wall_time_s for s in samplesets),
                     params_echo=dict(samplesets[0].params_echo))


def exhaustive_sampler(k_best=None, cap=EXHAUSTIVE_CAP):
    """Sampler factory: model -> SampleSet via full enumeration."""

    def sampler(model, seed=None):
        return solve_exhaustive(model, k_best=k_best, cap=cap)

    return sampler


def sd_sampler(restarts=1, max_rounds=None, seed=None):
    """Sampler factory: one or more random-start descents, merged."""

    def sampler(model, seed_override=None):
        base = seed if seed_override is None else seed_override
        children = np.random.SeedSequence(base).spawn(restarts)
        runs = [solve_steepest_descent(model, seed=child, max_rounds=max_rounds)
                for child in children]
        return merge_samplesets(runs, solver_name="steepest-descent")

    return sampler


def sa_sampler(sweeps=200, restarts=10, beta_initial=None, beta_final=None,
               seed=None, decompose=False):
    """Sampler factory: simulated annealing with a fixed schedule."""

    def sampler(model, seed_override=None):
        return solve_sa(model, SaSchedule(
            sweeps=sweeps, restarts=restarts, beta_initial=beta_initial,
            beta_final=beta_final,
            seed=seed if seed_override is None else seed_override),
            decompose=decompose)

    return sampler
