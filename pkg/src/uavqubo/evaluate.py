"""Received power, interference, SINR, and sum-rate evaluation.

All powers are handled in watts. Rates are log2(1 + SINR) in bits/s/Hz; a
ground user whose serving UAV holds no sub-channel or power level gets rate
zero rather than being treated as invalid.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .netmodel import GainMatrix

__all__ = [
    "NetworkAssignment",
    "LinkReport",
    "InfeasibleAssignmentError",
    "constraint_violations",
    "interference",
    "link_reports",
    "sum_rate",
    "reports_to_csv",
]


class InfeasibleAssignmentError(ValueError):
    """Raised when an assignment breaks the one-hot structure constraints."""

    def __init__(self, violations):
        super().__init__("infeasible assignment: " + "; ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class NetworkAssignment:
    """Binary association (M x N), sub-channel (M x K), and power (M x L) choices."""

    association: np.ndarray
    subchannel: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        for name in ("association", "subchannel", "power"):
            arr = np.asarray(getattr(self, name), dtype=np.int8)
            object.__setattr__(self, name, arr)

    @property
    def num_uavs(self) -> int:
        return self.association.shape[0]

    @property
    def num_gus(self) -> int:
        return self.association.shape[1]


def constraint_violations(assignment: NetworkAssignment) -> list[str]:
    """Structure checks: binary entries, one UAV per GU, at most one channel
    and power level per UAV."""
    out = []
    for name in ("association", "subchannel", "power"):
        arr = getattr(assignment, name)
        if not np.isin(arr, (0, 1)).all():
            out.append(f"{name} has non-binary entries")
    col = assignment.association.sum(axis=0)
    for n in np.nonzero(col != 1)[0]:
        out.append(f"GU {n} associated with {col[n]} UAVs (must be exactly 1)")
    for name in ("subchannel", "power"):
        rows = getattr(assignment, name).sum(axis=1)
        for m in np.nonzero(rows > 1)[0]:
            out.append(f"UAV {m} holds {rows[m]} {name} choices (at most 1)")
    return out


def _uav_choices(assignment: NetworkAssignment):
    """Per-UAV chosen (channel, level) indices, or None when the row is silent."""
    ks = [int(np.argmax(row)) if row.any() else None
          for row in assignment.subchannel]
    ls = [int(np.argmax(row)) if row.any() else None
          for row in assignment.power]
    return ks, ls


def interference(assignment: NetworkAssignment, gains: GainMatrix,
                 power_w: np.ndarray, gu: int, subchannel: int) -> float:
    """Co-channel power (W) reaching one GU from non-serving UAVs on a channel."""
    serving = int(np.argmax(assignment.association[:, gu]))
    ks, ls = _uav_choices(assignment)
    total = 0.0
    for m in range(assignment.num_uavs):
        if m == serving or ks[m] != subchannel or ls[m] is None:
            continue
        total += float(gains.linear_gain[m, gu]) * float(power_w[ls[m]])
    return total


def link_reports(assignment: NetworkAssignment, gains: GainMatrix,
                 power_w: np.ndarray, noise_w: float,
                 max_served_per_uav: int | None = None) -> list["LinkReport"]:
    """One report per GU for the configured network.

    With max_served_per_uav set, each UAV schedules only that many of its
    associated GUs per slot (the highest-rate ones, ties toward the lower GU
    index); unscheduled GUs keep their SINR in the report but carry zero rate.
    """
    violations = constraint_violations(assignment)
    if violations:
        raise InfeasibleAssignmentError(violations)
    ks, ls = _uav_choices(assignment)
    reports = []
    for n in range(assignment.num_gus):
        m = int(np.argmax(assignment.association[:, n]))
        k, l = ks[m], ls[m]
        if k is None or l is None:
            reports.append(LinkReport(gu=n, uav=m, subchannel=k, power_level=l,
                                      signal_w=0.0, interference_w=0.0,
                                      sinr=0.0, rate=0.0))
            continue
        sig = float(gains.linear_gain[m, n]) * float(power_w[l])
        intf = interference(assignment, gains, power_w, n, k)
        sinr = sig / (intf + noise_w)
        reports.append(LinkReport(gu=n, uav=m, subchannel=k, power_level=l,
                                  signal_w=sig, interference_w=intf,
                                  sinr=sinr, rate=math.log2(1.0 + sinr)))
    if max_served_per_uav is not None:
        for m in range(assignment.num_uavs):
            mine = [r for r in reports if r.uav == m]
            mine.sort(key=lambda r: (-r.rate, r.gu))
            for r in mine[max_served_per_uav:]:
                reports[r.gu] = LinkReport(
                    gu=r.gu, uav=r.uav, subchannel=r.subchannel,
                    power_level=r.power_level, signal_w=r.signal_w,
                    interference_w=r.interference_w, sinr=r.sinr, rate=0.0,
                    scheduled=False)
    return reports


def sum_rate(assignment: NetworkAssignment, gains: GainMatrix,
             power_w: np.ndarray, noise_w: float,
             max_served_per_uav: int | None = None) -> float:
    """Network sum rate (bits/s/Hz) over all scheduled GUs."""
    return float(sum(r.rate for r in link_reports(
        assignment, gains, power_w, noise_w,
        max_served_per_uav=max_served_per_uav)))


@dataclass(frozen=True)
class LinkReport:
    gu: int
    uav: int
    subchannel: int | None
    power_level: int | None
    signal_w: float
    interference_w: float
    sinr: float
    rate: float
    scheduled: bool = True


def reports_to_csv(reports, power_levels_dbm, path):
    """Write per-link rows: gu, uav, subchannel, power_dbm, signal_w,
    interference_w, sinr_db, rate."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gu", "uav", "subchannel", "power_dbm", "signal_w",
                         "interference_w", "sinr_db", "rate"])
        for r in reports:
            power_dbm = ("" if r.power_level is None
                         else repr(float(power_levels_dbm[r.power_level])))
            sinr_db = repr(10.0 * math.log10(r.sinr)) if r.sinr > 0 else ""
            writer.writerow([r.gu, r.uav,
                             "" if r.subchannel is None else r.subchannel,
                             power_dbm, repr(r.signal_w),
                             repr(r.interference_w), sinr_db, repr(r.rate)])
