"""Per-cell coverage bookkeeping and the velocity policies that steer it.

A cell alternates between covered (some drone overhead) and uncovered.
Covered stretches are the dwell intervals, uncovered stretches between two
visits are the gap intervals, and the coverage ratio is the covered fraction
of ``[0, t]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence


class ProtocolViolation(RuntimeError):
    pass


class ZeroTime(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class VelocityBounds:
    v_min: float
    v_max: float

    def __post_init__(self):
        if not (0.0 < self.v_min <= self.v_max):
            raise ValueError(f"need 0 < v_min <= v_max, got {self.v_min}, {self.v_max}")

    def clamp(self, v: float) -> float:
        return min(self.v_max, max(self.v_min, v))


@dataclass(frozen=True)
class CoverageTarget:
    p_star: float

    def __post_init__(self):
        if not (0.0 < self.p_star < 1.0):
            raise ValueError(f"p_star must lie in (0, 1), got {self.p_star}")


@dataclass
class CellCoverageState:
    index: int
    restricted_length: float = 0.0
    covered: float = 0.0
    last_event_time: float = 0.0
    occupied: bool = False
    events: list[float] = field(default_factory=list)
    dwells: list[float] = field(default_factory=list)
    gaps: list[float] = field(default_factory=list)

    def record_entry(self, t: float) -> None:
        if self.occupied:
            raise ProtocolViolation(f"cell {self.index}: entry at {t} while already occupied")
        if self.events and not t > self.last_event_time:
            raise ProtocolViolation(f"cell {self.index}: entry at {t} not after {self.last_event_time}")
        if self.events:
            self.gaps.append(t - self.events[-1])
        self.events.append(t)
        self.last_event_time = t
        self.occupied = True

    def record_exit(self, t: float) -> None:
        if not self.occupied:
            raise ProtocolViolation(f"cell {self.index}: exit at {t} while unoccupied")
        if not t > self.last_event_time:
            raise ProtocolViolation(f"cell {self.index}: exit at {t} not after {self.last_event_time}")
        dwell = t - self.events[-1]
        self.dwells.append(dwell)
        self.covered += dwell
        self.events.append(t)
        self.last_event_time = t
        self.occupied = False

    def covered_until(self, t: float) -> float:
        return self.covered + (t - self.last_event_time if self.occupied else 0.0)


def coverage_ratio(state: CellCoverageState, t: float) -> float:
    if t == 0:
        raise ZeroTime("coverage ratio is undefined at t = 0")
    if t < state.last_event_time:
        raise ValueError(f"query time {t} precedes last event {state.last_event_time}")
    return state.covered_until(t) / t


def adaptive_speed(
    p_l: float,
    target: CoverageTarget,
    cell_length: float,
    bounds: VelocityBounds,
    kappa: float = 1.0,
) -> float:
    """Traversal speed for a cell whose coverage ratio is ``p_l`` at entry.

    Under-covered cells get ``cell_length / (kappa * (p* - p_l))`` clamped to
    the bounds, so the dwell time is ``kappa`` times the coverage deficit.
    Cells at or above target are crossed at ``v_max``.
    """
    if not cell_length > 0:
        raise ValueError("cell_length must be positive")
    if p_l < target.p_star:
        return bounds.clamp(cell_length / (kappa * (target.p_star - p_l)))
    return bounds.v_max


def minmax_speed(p_at_arrival: float, target: CoverageTarget, bounds: VelocityBounds) -> float:
    return bounds.v_min if p_at_arrival <= target.p_star else bounds.v_max


def speed_thresholds(length: float, p_star: float, delta_min: float, delta_max: float) -> tuple[float, float]:
    """Speed thresholds under which min-max steering provably converges.

    Returns ``(v_max_required, v_min_allowed)``: the top speed must be at
    least the first value and the bottom speed at most the second.
    """
    if not length > 0 or not (0.0 < p_star < 1.0) or not (0.0 < delta_min <= delta_max):
        raise ValueError("need L > 0, 0 < p* < 1 and 0 < delta_min <= delta_max")
    k = length * (1.0 - p_star) / p_star
    return k / delta_min, k / delta_max


def bounds_feasible(bounds: VelocityBounds, length: float, p_star: float, delta_min: float, delta_max: float) -> bool:
    need_max, allow_min = speed_thresholds(length, p_star, delta_min, delta_max)
    return bounds.v_max >= need_max and bounds.v_min <= allow_min


def estimate_interval_bounds(state: CellCoverageState) -> tuple[float, float, float, float]:
    """Observed ``(gap_min, gap_max, dwell_min, dwell_max)``."""
    if not state.dwells or not state.gaps:
        raise InsufficientData(f"cell {state.index}: need at least one dwell and one gap")
    return min(state.gaps), max(state.gaps), min(state.dwells), max(state.dwells)


def convergence_check(
    series: Sequence[tuple[float, float]],
    p_star: float,
    epsilon: float,
    tail_fraction: float = 0.2,
) -> bool:
    """True when every sample in the final ``tail_fraction`` of the time span is within ``epsilon``."""
    if not series:
        raise ValueError("empty series")
    t0, t1 = series[0][0], series[-1][0]
    cut = t1 - tail_fraction * (t1 - t0)
    return all(abs(p - p_star) < epsilon for t, p in series if t >= cut)


@dataclass
class CellTrace:
    """Event history of one cell driven by a speed policy.

    ``times[j]`` and ``ratios[j]`` are the j-th event time and the coverage
    ratio there; even ``j`` are entries, odd ``j`` are exits.
    """

    state: CellCoverageState
    times: list[float]
    ratios: list[float]
    speeds: list[float]

    def entry_ratios(self) -> list[float]:
        return self.ratios[0::2]

    def series(self) -> list[tuple[float, float]]:
        return list(zip(self.times, self.ratios))


def synthetic_cell_trace(
    length: float,
    target: CoverageTarget,
    bounds: VelocityBounds,
    gap_range: tuple[float, float],
    visits: int,
    rng,
    policy: str = "minmax",
    kappa: float = 1.0,
) -> CellTrace:
    """Drive a single cell through ``visits`` traversals.

    Gaps between visits (and the wait before the first one) are drawn
    uniformly from ``gap_range``; each traversal crosses ``length`` meters at
    the speed the policy picks from the coverage ratio at entry. The first
    min-max traversal uses ``v_min``.
    """
    lo, hi = gap_range
    if not (0.0 < lo <= hi):
        raise ValueError("need 0 < gap_min <= gap_max")
    if visits < 1:
        raise ValueError("visits must be >= 1")
    if policy not in ("minmax", "adaptive"):
        raise ValueError(f"unknown policy {policy!r}")
    state = CellCoverageState(1, restricted_length=length)
    times: list[float] = []
    ratios: list[float] = []
    speeds: list[float] = []
    t = float(rng.uniform(lo, hi))
    for k in range(visits):
        p = state.covered / t
        if policy == "minmax":
            v = bounds.v_min if k == 0 else minmax_speed(p, target, bounds)
        else:
            v = adaptive_speed(p, target, length, bounds, kappa)
        state.record_entry(t)
        times.append(t)
        ratios.append(p)
        speeds.append(v)
        t += length / v
        state.record_exit(t)
        times.append(t)
        ratios.append(state.covered / t)
        t += float(rng.uniform(lo, hi))
    return CellTrace(state, times, ratios, speeds)


def monotone_step_violations(entry_ratios: Sequence[float], p_star: float) -> tuple[int, int]:
    """Count ``(applicable, violated)`` indices of the one-step monotonicity rule.

    Below target, the next entry ratio must not drop; above target, it must
    not rise. Indices exactly at target are not applicable.
    """
    applicable = violated = 0
    for a, b in zip(entry_ratios, entry_ratios[1:]):
        if a < p_star:
            applicable += 1
            violated += b < a
        elif a > p_star:
            applicable += 1
            violated += b > a
    return applicable, violated
