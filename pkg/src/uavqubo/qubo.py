"""Sparse QUBO and Ising energy models, penalty assembly, and .qubo file I/O.

Models carry an explicit constant offset so that converted or combined models
agree with their sources state by state, not merely up to a constant.
"""

import numpy as np

__all__ = [
    "QuboModel",
    "IsingModel",
    "PenaltyEstimate",
    "energy",
    "to_ising",
    "penalty_exactly_one",
    "scale_and_add",
    "export_qubo_file",
    "import_qubo_file",
    "heuristic_penalty_bound",
    "enumerated_penalty_bound",
]


class QuboModel:
    """Quadratic energy over binary variables.

    E(x) = sum_i linear[i]*x_i + sum_{i<j} quadratic[(i,j)]*x_i*x_j + offset

    Quadratic keys are canonicalized to i < j and zero coefficients are
    dropped, so two models built from the same terms compare equal entry
    by entry. Build with add_linear / add_quadratic, then treat as frozen.
    """

    __slots__ = ("num_vars", "linear", "quadratic", "offset", "var_labels")

    def __init__(self, num_vars, linear=None, quadratic=None, offset=0.0,
                 var_labels=None):
        if num_vars < 0:
            raise ValueError("num_vars must be >= 0")
        self.num_vars = int(num_vars)
        self.linear: dict[int, float] = {}
        self.quadratic: dict[tuple[int, int], float] = {}
        self.offset = float(offset)
        self.var_labels: dict[int, tuple] = dict(var_labels or {})
        for i, c in (linear or {}).items():
            self.add_linear(i, c)
        for (i, j), c in (quadratic or {}).items():
            self.add_quadratic(i, j, c)

    def _check_var(self, i):
        if not 0 <= i < self.num_vars:
            raise IndexError(f"variable {i} out of range [0, {self.num_vars})")

    def add_linear(self, i, coeff):
        self._check_var(i)
        c = self.linear.get(i, 0.0) + float(coeff)
        if c == 0.0:
            self.linear.pop(i, None)
        else:
            self.linear[i] = c

    def add_quadratic(self, i, j, coeff):
        if i == j:
            raise ValueError("x_i*x_i == x_i for binary vars; use add_linear")
        self._check_var(i)
        self._check_var(j)
        key = (i, j) if i < j else (j, i)
        c = self.quadratic.get(key, 0.0) + float(coeff)
        if c == 0.0:
            self.quadratic.pop(key, None)
        else:
            self.quadratic[key] = c

    def add_offset(self, value):
        self.offset += float(value)

    def set_label(self, i, label):
        self._check_var(i)
        self.var_labels[i] = label

    def copy(self):
        out = QuboModel(self.num_vars, offset=self.offset,
                        var_labels=self.var_labels)
        out.linear = dict(self.linear)
        out.quadratic = dict(self.quadratic)
        return out

    def energy(self, x) -> float:
        """Exact energy of one bit vector."""
        x = np.asarray(x)
        if x.shape != (self.num_vars,):
            raise ValueError(
                f"state length {x.shape} does not match num_vars {self.num_vars}")
        e = self.offset
        for i, c in self.linear.items():
            if x[i]:
                e += c
        for (i, j), c in self.quadratic.items():
            if x[i] and x[j]:
                e += c
        return float(e)

    def energies(self, states) -> np.ndarray:
        """Energies of a (batch, num_vars) matrix of bit vectors."""
        states = np.asarray(states, dtype=np.float64)
        if states.ndim != 2 or states.shape[1] != self.num_vars:
            raise ValueError("states must be (batch, num_vars)")
        c, upper = self.dense()
        return states @ c + ((states @ upper) * states).sum(axis=1) + self.offset

    def dense(self):
        """Dense (linear vector, strictly upper-triangular matrix) pair."""
        c = np.zeros(self.num_vars)
        upper = np.zeros((self.num_vars, self.num_vars))
        for i, v in self.linear.items():
            c[i] = v
        for (i, j), v in self.quadratic.items():
            upper[i, j] = v
        return c, upper

    def symmetric(self):
        """Dense (linear vector, symmetric coupling matrix with zero diagonal)."""
        c, upper = self.dense()
        return c, upper + upper.T

    def max_abs_coefficient(self) -> float:
        vals = [abs(v) for v in self.linear.values()]
        vals += [abs(v) for v in self.quadratic.values()]
        return max(vals) if vals else 0.0

    def max_flip_gain(self) -> float:
        """Largest possible |energy change| of any single-bit flip."""
        row = np.zeros(self.num_vars)
        for i, v in self.linear.items():
            row[i] += abs(v)
        for (i, j), v in self.quadratic.items():
            row[i] += abs(v)
            row[j] += abs(v)
        return float(row.max()) if self.num_vars else 0.0

    def __repr__(self):
        return (f"QuboModel(num_vars={self.num_vars}, "
                f"nlin={len(self.linear)}, nquad={len(self.quadratic)}, "
                f"offset={self.offset!r})")


class IsingModel:
    """Spin-variable twin of a QUBO: E(s) = sum h_i s_i + sum_{i<j} J_ij s_i s_j + offset."""

    __slots__ = ("num_vars", "h", "j", "offset")

    def __init__(self, num_vars, h=None, j=None, offset=0.0):
        self.num_vars = int(num_vars)
        self.h: dict[int, float] = dict(h or {})
        self.j: dict[tuple[int, int], float] = dict(j or {})
        self.offset = float(offset)

    def energy(self, sigma) -> float:
        sigma = np.asarray(sigma)
        if sigma.shape != (self.num_vars,):
            raise ValueError("spin vector length mismatch")
        e = self.offset
        for i, c in self.h.items():
            e += c * sigma[i]
        for (i, j), c in self.j.items():
            e += c * sigma[i] * sigma[j]
        return float(e)


def energy(model: QuboModel, x) -> float:
    """Energy of bit vector x under the model."""
    return model.energy(x)


def to_ising(model: QuboModel) -> IsingModel:
    """Exact spin conversion via sigma_i = 2 x_i - 1.

    Each quadratic coefficient q splits as q/4 coupling plus q/4 on each
    endpoint field plus q/4 constant; each linear coefficient c splits as
    c/2 field plus c/2 constant. Energies then match the QUBO exactly at
    x = (sigma + 1) / 2.
    """
    ising = IsingModel(model.num_vars, offset=model.offset)

    def bump(d, k, v):
        nv = d.get(k, 0.0) + v
        if nv == 0.0:
            d.pop(k, None)
        else:
            d[k] = nv

    for i, c in model.linear.items():
        bump(ising.h, i, c / 2.0)
        ising.offset += c / 2.0
    for (i, j), q in model.quadratic.items():
        bump(ising.j, (i, j), q / 4.0)
        bump(ising.h, i, q / 4.0)
        bump(ising.h, j, q / 4.0)
        ising.offset += q / 4.0
    return ising


def penalty_exactly_one(groups, num_vars=None) -> QuboModel:
    """Quadratic penalty sum_g (sum_{v in g} x_v - 1)^2.

    Zero exactly when every group has exactly one variable set; each group
    contributes -1 per variable, +2 per variable pair, and +1 to the offset.
    """
    groups = [list(g) for g in groups]
    if num_vars is None:
        num_vars = max((max(g) for g in groups if g), default=-1) + 1
    model = QuboModel(num_vars)
    for g in groups:
        if not g:
            raise ValueError("empty constraint group")
        if len(set(g)) != len(g):
            raise ValueError("duplicate variable in constraint group")
        for v in g:
            model.add_linear(v, -1.0)
        for a in range(len(g)):
            for b in range(a + 1, len(g)):
                model.add_quadratic(g[a], g[b], 2.0)
        model.add_offset(1.0)
    return model


def penalty_values(states, groups) -> np.ndarray:
    """Batch evaluation of sum_g (group sum - 1)^2 over a state matrix."""
    states = np.asarray(states)
    total = np.zeros(states.shape[0])
    for g in groups:
        total += (states[:, list(g)].sum(axis=1) - 1.0) ** 2
    return total


def scale_and_add(target: QuboModel, addend: QuboModel, weight: float) -> QuboModel:
    """New model equal to target + weight * addend, coefficient-wise."""
    out = QuboModel(max(target.num_vars, addend.num_vars))
    out.offset = target.offset + weight * addend.offset
    out.linear = dict(target.linear)
    out.quadratic = dict(target.quadratic)
    out.var_labels = dict(target.var_labels)
    for i, lab in addend.var_labels.items():
        if i in out.var_labels and out.var_labels[i] != lab:
            raise ValueError(
                f"variable {i} labeled {out.var_labels[i]} in target "
                f"but {lab} in addend")
        out.var_labels[i] = lab
    if weight != 0.0:
        for i, c in addend.linear.items():
            out.add_linear(i, weight * c)
        for (i, j), c in addend.quadratic.items():
            out.add_quadratic(i, j, weight * c)
    return out


def export_qubo_file(model: QuboModel, path):
    """Write a plain-text coordinate file.

    Line 1: `c offset <value>`; line 2: `p qubo 0 <maxnode> <nlin> <nquad>`;
    then `i i value` lines (linear, ascending i) and `i j value` lines
    (quadratic, lexicographic). Output is byte-stable for a given model.
    """
    lines = [f"c offset {model.offset!r}",
             f"p qubo 0 {model.num_vars} {len(model.linear)} {len(model.quadratic)}"]
    for i in sorted(model.linear):
        lines.append(f"{i} {i} {model.linear[i]!r}")
    for i, j in sorted(model.quadratic):
        lines.append(f"{i} {j} {model.quadratic[(i, j)]!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def import_qubo_file(path) -> QuboModel:
    """Read a file written by export_qubo_file. Raises ValueError on bad input."""
    offset = 0.0
    header = None
    entries = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("c"):
                parts = line.split()
                if len(parts) == 3 and parts[1] == "offset":
                    offset = float(parts[2])
                continue
            if line.startswith("p"):
                parts = line.split()
                if len(parts) != 6 or parts[1] != "qubo":
                    raise ValueError(f"malformed problem line: {line!r}")
                header = (int(parts[3]), int(parts[4]), int(parts[5]))
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"malformed entry line: {line!r}")
            entries.append((int(parts[0]), int(parts[1]), float(parts[2])))
    if header is None:
        raise ValueError("missing 'p qubo' header line")
    num_vars, nlin, nquad = header
    model = QuboModel(num_vars, offset=offset)
    for i, j, v in entries:
        if i == j:
            if i in model.linear:
                raise ValueError(f"duplicate linear entry for variable {i}")
            model.add_linear(i, v)
        else:
            key = (i, j) if i < j else (j, i)
            if key in model.quadratic:
                raise ValueError(f"duplicate quadratic entry for {key}")
            model.add_quadratic(i, j, v)
    if len(model.linear) != nlin or len(model.quadratic) != nquad:
        raise ValueError("entry counts do not match header")
    return model


class PenaltyEstimate:
    """Penalty-factor range for turning exactly-one constraints into penalties."""

    __slots__ = ("lower", "upper", "chosen", "method")

    def __init__(self, lower, upper, chosen, method):
        self.lower = float(lower)
        self.upper = float(upper)
        self.chosen = float(chosen)
        self.method = method
        if self.chosen <= 0.0:
            raise ValueError("chosen penalty factor must be positive")
        if method == "enumerated" and not (self.lower <= self.chosen <= self.upper):
            raise ValueError("enumerated estimate requires lower <= chosen <= upper")

    def __repr__(self):
        return (f"PenaltyEstimate(lower={self.lower!r}, upper={self.upper!r}, "
                f"chosen={self.chosen!r}, method={self.method!r})")


def _pick_chosen(lower, upper, scale):
    # Strictly above the lower bound so the penalized ground state is feasible;
    # padded away from zero when the bound itself is not positive.
    base = max(lower, 0.0)
    pad = 0.05 * max(base, scale, 1e-300)
    return base + pad


def heuristic_penalty_bound(cost_model: QuboModel) -> PenaltyEstimate:
    """Sufficient penalty factor: exceed any single-flip cost change.

    With the factor above the largest possible one-bit cost swing, every
    one-unit constraint repair strictly lowers the penalized energy, so all
    local (hence global) minima are feasible.
    """
    bound = cost_model.max_flip_gain()
    total_abs = sum(abs(v) for v in cost_model.linear.values())
    total_abs += sum(abs(v) for v in cost_model.quadratic.values())
    chosen = _pick_chosen(bound, bound, bound)
    return PenaltyEstimate(lower=bound, upper=max(total_abs, chosen),
                           chosen=chosen, method="heuristic-bound")


def enumerated_penalty_bound(cost_model: QuboModel, groups, cap=20) -> PenaltyEstimate:
    """Exhaustive penalty-factor range over the full state space.

    lower = max over infeasible x of (best feasible cost - cost(x)) / penalty(x),
    upper = max over infeasible x of cost(x). Any factor strictly above the
    lower bound makes every infeasible state costlier than the feasible optimum.
    """
    n = cost_model.num_vars
    if n > cap:
        raise ValueError(f"enumeration cap exceeded: {n} > {cap}")
    states = _all_states(n)
    costs = cost_model.energies(states)
    pens = penalty_values(states, groups)
    feasible = pens == 0.0
    if not feasible.any():
        raise ValueError("constraint groups admit no feasible state")
    best_feasible = costs[feasible].min()
    infeasible = ~feasible
    ratios = (best_feasible - costs[infeasible]) / pens[infeasible]
    lower = float(ratios.max())
    upper_raw = float(costs[infeasible].max())
    scale = cost_model.max_abs_coefficient()
    chosen = _pick_chosen(lower, upper_raw, scale)
    return PenaltyEstimate(lower=lower, upper=max(upper_raw, chosen),
                           chosen=chosen, method="enumerated")


def _all_states(n) -> np.ndarray:
    codes = np.arange(2 ** n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(np.uint8)
