"""Event-driven simulation of a drone delivery fleet and the coverage it gives.

Drones leave the depot with one package each, fly a delivery path to the
house and back along the same path, then pick up the next package. Motion
between events is either constant speed along the path, or the closed-form
radial profile on the annular sector. Events are cell entries and exits,
house and depot arrivals, package arrivals and occupancy snapshots. They are
processed in time order; ties go to the lower drone id.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import ideal_process as ideal
from .adaptive_control import (
    CellCoverageState,
    CoverageTarget,
    VelocityBounds,
    adaptive_speed,
    coverage_ratio,
    minmax_speed,
)
from .geometry import (
    AnnularSector,
    CellGrid,
    EmptyGrid,
    GeometryError,
    Point2,
    PolygonRegion,
    build_equal_sector_cells,
    build_rect_grid,
    dist,
)
from .trajectory import DeliveryPath, PathSet, compute_crossings, ensure_cell_coverage, point_at_arclength, straight_paths

log = logging.getLogger(__name__)

POLICIES = ("ideal", "benchmark", "adaptive", "minmax")
DISPATCH = ("fifo", "round_robin")


class ConfigError(ValueError):
    pass


class NonTermination(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    region: AnnularSector | PolygonRegion
    drones: int
    packages: int
    policy: str = "ideal"
    houses: tuple[Point2, ...] | None = None
    house_count: int | None = None
    cell_size: float | None = None
    sector_cells: int | None = None
    v_avg: float = 10.0
    v_min: float | None = None
    v_max: float | None = None
    altitude: float = 0.0
    p_star: float | None = None
    kappa: float = 1.0
    dispatch: str = "fifo"
    poisson_rate: float | None = None  # None means saturated backlog
    destination_weights: tuple[float, ...] | None = None
    seed: int = 0
    snapshot_interval: float = 1.0
    snapshot_mode: str = "periodic"
    late_threshold: float = 1800.0
    advisory_speed_cap: float | None = 50.0
    max_events: int = 100_000_000
    record_series: bool = True
    record_radii: bool = False
    check_continuity: bool = False

    def __post_init__(self):
        problems = []
        if self.drones < 1:
            problems.append(("fleet.drones", "must be >= 1"))
        if self.packages < 1:
            problems.append(("workload.packages", "must be >= 1"))
        if self.policy not in POLICIES:
            problems.append(("policy", f"must be one of {POLICIES}"))
        if self.dispatch not in DISPATCH:
            problems.append(("dispatch", f"must be one of {DISPATCH}"))
        if not self.v_avg > 0:
            problems.append(("fleet.v_avg_mps", "must be positive"))
        if self.policy in ("adaptive", "minmax"):
            if self.v_min is None or self.v_max is None or not (0 < self.v_min <= self.v_max):
                problems.append(("fleet.v_min_mps/v_max_mps", "need 0 < v_min <= v_max for bounded policies"))
            if self.p_star is None or not (0 < self.p_star < 1):
                problems.append(("coverage.p_star", "must lie in (0, 1)"))
            if not self.kappa > 0:
                problems.append(("coverage.kappa_s", "must be positive"))
        if self.policy == "ideal" and not isinstance(self.region, AnnularSector):
            problems.append(("policy", "ideal policy needs a sector region"))
        if isinstance(self.region, AnnularSector):
            if self.sector_cells is None or self.sector_cells < 1:
                problems.append(("grid.equal_sector_cells", "sector regions need a positive wedge count"))
        else:
            if self.cell_size is None or not self.cell_size > 0:
                problems.append(("grid.cell_size_m", "polygon regions need a positive cell size"))
            if not self.houses:
                problems.append(("houses", "polygon regions need explicit house points"))
        if self.houses is None and (self.house_count is None or self.house_count < 1):
            problems.append(("houses.count", "must be >= 1"))
        if self.poisson_rate is not None and not self.poisson_rate > 0:
            problems.append(("workload.arrivals", "poisson rate must be positive"))
        if not self.snapshot_interval > 0:
            problems.append(("snapshot_interval_s", "must be positive"))
        if self.snapshot_mode not in ("periodic", "poisson"):
            problems.append(("snapshot_mode", "must be periodic or poisson"))
        if not self.late_threshold > 0:
            problems.append(("late_threshold_s", "must be positive"))
        n_houses = len(self.houses) if self.houses else self.house_count
        if self.destination_weights is not None:
            w = self.destination_weights
            if n_houses is not None and len(w) != n_houses:
                problems.append(("workload.destination_weights", f"need {n_houses} weights, got {len(w)}"))
            elif any(x < 0 for x in w) or not sum(w) > 0:
                problems.append(("workload.destination_weights", "weights must be >= 0 with positive sum"))
        if problems:
            raise ConfigError("; ".join(f"{k}: {v}" for k, v in problems))

    @property
    def n_houses(self) -> int:
        return len(self.houses) if self.houses else int(self.house_count)

    @property
    def bounds(self) -> VelocityBounds | None:
        if self.v_min is None or self.v_max is None:
            return None
        return VelocityBounds(self.v_min, self.v_max)


# ------------------------------------------------------------------ scene


@dataclass(frozen=True)
class Scene:
    """Everything about a run that is fixed before the first event."""

    grid: CellGrid
    paths: PathSet
    straight_lengths: tuple[float, ...]
    ideal_params: ideal.IdealParams | None
    stagger_window: float


def radial_paths(sector: AnnularSector, angles: Sequence[float], grid: CellGrid | None) -> PathSet:
    paths = []
    for h, th in enumerate(angles, start=1):
        wps = (sector.polar_point(sector.gamma, th), sector.polar_point(sector.rho, th))
        paths.append(DeliveryPath(h, wps, compute_crossings(wps, grid) if grid else ()))
    return PathSet(tuple(paths), grid)


def _streams(seed: int) -> list[np.random.Generator]:
    """Independent generators: houses, destinations, take-offs, arrivals, snapshots."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(5)]


def scene_for(config: SimConfig) -> Scene:
    """The scene a run with ``config`` would use, without simulating."""
    return build_scene(config, _streams(config.seed)[0])


def build_scene(config: SimConfig, house_rng: np.random.Generator) -> Scene:
    try:
        return _build_scene(config, house_rng)
    except EmptyGrid as exc:
        raise ConfigError(f"grid: {exc}") from None
    except GeometryError as exc:
        if "cell_size" in str(exc):
            raise ConfigError(f"grid.cell_size_m: {exc}") from None
        raise


def _build_scene(config: SimConfig, house_rng: np.random.Generator) -> Scene:
    region = config.region
    if isinstance(region, AnnularSector):
        grid = build_equal_sector_cells(region, config.sector_cells)
        if config.houses:
            angles = [math.atan2(y, x) % (2 * math.pi) for x, y in config.houses]
        else:
            angles = house_rng.uniform(0.0, region.theta_max, size=config.house_count).tolist()
        paths = radial_paths(region, angles, grid)
        params = ideal.IdealParams(region, config.v_avg, config.drones, len(angles))
        return Scene(grid, paths, tuple(region.rho - region.gamma for _ in angles), params, params.tau)
    grid = build_rect_grid(region, config.cell_size)
    base = straight_paths(region.depot, config.houses, grid)
    straight = tuple(p.total_length for p in base.paths)
    paths = base if config.policy == "benchmark" else ensure_cell_coverage(base, grid)
    window = float(np.mean(straight)) / config.v_avg
    return Scene(grid, paths, straight, None, window)


# ---------------------------------------------------------------- metrics


def _opt_min(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _opt_max(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


@dataclass(frozen=True)
class RunRecord:
    seed: int
    t_m: float
    lower_bound: float
    upper_bound: float | None
    p_final: tuple[float, ...]
    mean_speed: float
    overlap_events: int


@dataclass(frozen=True)
class CellStats:
    index: int
    area: float
    occupancy_sum: int = 0
    restricted_length: float = 0.0
    gap_min: float | None = None
    gap_max: float | None = None
    dwell_min: float | None = None
    dwell_max: float | None = None
    # shortest and longest single-path crossing of the cell
    crossing_min: float | None = None
    crossing_max: float | None = None

    def merge(self, other: "CellStats") -> "CellStats":
        if other.index != self.index:
            raise ValueError("cell index mismatch")
        return CellStats(
            self.index,
            self.area,
            self.occupancy_sum + other.occupancy_sum,
            max(self.restricted_length, other.restricted_length),
            _opt_min(self.gap_min, other.gap_min),
            _opt_max(self.gap_max, other.gap_max),
            _opt_min(self.dwell_min, other.dwell_min),
            _opt_max(self.dwell_max, other.dwell_max),
            _opt_min(self.crossing_min, other.crossing_min),
            _opt_max(self.crossing_max, other.crossing_max),
        )


@dataclass(frozen=True)
class RunMetrics:
    """Results of one or more replicas.

    Per-replica values are kept (sorted) rather than pre-averaged, so
    :meth:`merge` is exactly associative and commutative.
    """

    policy: str
    drones: int
    packages: int
    late_threshold: float
    p_star: float | None
    v_min: float | None
    v_max: float | None
    records: tuple[RunRecord, ...]
    delivery_times: tuple[float, ...]
    snapshots: int
    cells: tuple[CellStats, ...]

    def merge(self, other: "RunMetrics") -> "RunMetrics":
        if len(self.cells) != len(other.cells):
            raise ValueError("cannot merge runs over different grids")
        return replace(
            self,
            records=tuple(sorted(self.records + other.records, key=_record_key)),
            delivery_times=tuple(sorted(self.delivery_times + other.delivery_times)),
            snapshots=self.snapshots + other.snapshots,
            cells=tuple(a.merge(b) for a, b in zip(self.cells, other.cells)),
        )

    @property
    def replicas(self) -> int:
        return len(self.records)

    @property
    def t_m(self) -> float:
        return math.fsum(r.t_m for r in self.records) / len(self.records)

    @property
    def lower_bound(self) -> float:
        return math.fsum(r.lower_bound for r in self.records) / len(self.records)

    @property
    def upper_bound(self) -> float | None:
        if any(r.upper_bound is None for r in self.records):
            return None
        return math.fsum(r.upper_bound for r in self.records) / len(self.records)

    @property
    def eta(self) -> float:
        return math.fsum(r.lower_bound for r in self.records) / math.fsum(r.t_m for r in self.records)

    @property
    def late_fraction(self) -> float:
        if not self.delivery_times:
            return 0.0
        return sum(1 for d in self.delivery_times if d > self.late_threshold) / len(self.delivery_times)

    @property
    def mean_occupancy(self) -> np.ndarray:
        sums = np.array([c.occupancy_sum for c in self.cells], dtype=float)
        return sums / self.snapshots if self.snapshots else sums

    @property
    def p_final(self) -> np.ndarray:
        return np.mean([r.p_final for r in self.records], axis=0)

    @property
    def areas(self) -> np.ndarray:
        return np.array([c.area for c in self.cells])

    def to_dict(self) -> dict:
        occ = self.mean_occupancy
        pf = self.p_final
        return {
            "t_m_s": self.t_m,
            "eta": self.eta,
            "lower_bound_s": self.lower_bound,
            "upper_bound_s": self.upper_bound,
            "delivery_times_s": list(self.delivery_times),
            "late_fraction": self.late_fraction,
            "cells": [
                {
                    "index": c.index,
                    "mean_occupancy": float(occ[i]),
                    "p_final": float(pf[i]),
                    "delta_min_s": c.gap_min,
                    "delta_max_s": c.gap_max,
                    "dwell_min_s": c.dwell_min,
                    "dwell_max_s": c.dwell_max,
                    "area_m2": c.area,
                    "occupancy_sum": c.occupancy_sum,
                    "restricted_length_m": c.restricted_length,
                    "crossing_min_m": c.crossing_min,
                    "crossing_max_m": c.crossing_max,
                }
                for i, c in enumerate(self.cells)
            ],
            "policy": self.policy,
            "drones": self.drones,
            "packages": self.packages,
            "late_threshold_s": self.late_threshold,
            "p_star": self.p_star,
            "v_min_mps": self.v_min,
            "v_max_mps": self.v_max,
            "snapshots": self.snapshots,
            "replicas": [
                {
                    "seed": r.seed,
                    "t_m_s": r.t_m,
                    "lower_bound_s": r.lower_bound,
                    "upper_bound_s": r.upper_bound,
                    "p_final": list(r.p_final),
                    "mean_speed_mps": r.mean_speed,
                    "overlap_events": r.overlap_events,
                }
                for r in self.records
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunMetrics":
        records = tuple(
            RunRecord(
                r["seed"],
                r["t_m_s"],
                r["lower_bound_s"],
                r["upper_bound_s"],
                tuple(r["p_final"]),
                r["mean_speed_mps"],
                r["overlap_events"],
            )
            for r in d["replicas"]
        )
        cells = tuple(
            CellStats(
                c["index"],
                c["area_m2"],
                c["occupancy_sum"],
                c["restricted_length_m"],
                c["delta_min_s"],
                c["delta_max_s"],
                c["dwell_min_s"],
                c["dwell_max_s"],
                c.get("crossing_min_m"),
                c.get("crossing_max_m"),
            )
            for c in d["cells"]
        )
        return cls(
            d["policy"],
            d["drones"],
            d["packages"],
            d["late_threshold_s"],
            d["p_star"],
            d["v_min_mps"],
            d["v_max_mps"],
            records,
            tuple(d["delivery_times_s"]),
            d["snapshots"],
            cells,
        )


def _record_key(r: RunRecord):
    return (r.seed, r.t_m, r.lower_bound, r.p_final)


def merge_all(metrics: Iterable[RunMetrics]) -> RunMetrics:
    it = iter(metrics)
    out = next(it)
    for m in it:
        out = out.merge(m)
    return out


# ------------------------------------------------------------------ state


@dataclass
class Package:
    index: int
    destination: int  # house index, 1-based
    arrival: float | None = None
    dispatch: float | None = None
    delivered: float | None = None
    completed: float | None = None
    drone: int | None = None


@dataclass
class DroneState:
    id: int
    takeoff: float
    phase: str = "idle"  # idle | outbound | inbound
    package: Package | None = None
    path: DeliveryPath | None = None
    cumulative: tuple[float, ...] = ()
    sortie_start: float = 0.0
    leg_start: float = 0.0
    # position along the current leg, measured from the leg's start
    u: float = 0.0
    t_ref: float = 0.0
    speed: float = 0.0
    cell: int | None = None
    cell_exit_u: float | None = None
    marks: list = field(default_factory=list)
    mark_i: int = 0
    served: int = 0
    ready_since: float | None = None
    distance: float = 0.0
    airborne_time: float = 0.0


@dataclass
class RunResult:
    metrics: RunMetrics
    scene: Scene
    packages: list[Package]
    cell_states: list[CellCoverageState]
    series: dict[int, list[tuple[float, float]]]
    radii: np.ndarray
    speeds_seen: tuple[float, float]
    overlap_events: int
    continuity_error: float
    events: int
    end_time: float


class Simulation:
    """One replica. Call :meth:`run` once."""

    def __init__(self, config: SimConfig):
        self.config = config
        r_house, r_dest, r_take, r_arr, r_snap = _streams(config.seed)
        self.scene = build_scene(config, r_house)
        self.grid = self.scene.grid
        self.paths = self.scene.paths
        self.ip = self.scene.ideal_params
        self.bounds = config.bounds
        self.target = CoverageTarget(config.p_star) if config.p_star is not None else None
        self.snap_rng = r_snap

        m, n = config.packages, len(self.paths)
        if config.destination_weights is not None:
            w = np.asarray(config.destination_weights, dtype=float)
            dest = r_dest.choice(n, size=m, p=w / w.sum()) + 1
        else:
            dest = r_dest.integers(1, n + 1, size=m)
        self.packages = [Package(i + 1, int(dest[i])) for i in range(m)]
        if config.poisson_rate is not None:
            arrivals = np.cumsum(r_arr.exponential(1.0 / config.poisson_rate, size=m))
            for p, a in zip(self.packages, arrivals):
                p.arrival = float(a)

        window = self.scene.stagger_window
        tk = r_take.uniform(0.0, window, size=config.drones)
        while np.any(tk <= 0.0):
            bad = tk <= 0.0
            tk[bad] = r_take.uniform(0.0, window, size=int(bad.sum()))
        self.drones = [DroneState(d + 1, float(tk[d])) for d in range(config.drones)]

        self.cells = [
            CellCoverageState(c.index, restricted_length=0.0) for c in self.grid.cells
        ]
        for l, ln in self.paths.cell_lengths().items():
            self.cells[l - 1].restricted_length = ln
        self.count = [0] * self.grid.cell_count
        self.pending_exit: dict[int, float] = {}
        self.occ = [0] * self.grid.cell_count
        self.snapshots = 0
        self.series: dict[int, list[tuple[float, float]]] = {c.index: [] for c in self.grid.cells}
        self.radii: list[float] = []
        self.heap: list = []
        self.seq = 0
        self.queue: list[Package] = []  # waiting packages (poisson arrivals)
        self.next_package = 0  # index into self.packages for fifo dispatch
        self.rr_next = [d.id - 1 for d in self.drones]  # round robin: next package index per drone
        self.completed = 0
        self.now = 0.0
        self.overlaps = 0
        self.continuity_error = 0.0
        self.v_lo, self.v_hi = math.inf, 0.0
        self.events = 0
        if config.policy == "ideal":
            v_top, v_bottom = ideal.outbound_speed_extremes(self.ip)
            self._note_speed(v_bottom)
            self._note_speed(v_top)
            if config.advisory_speed_cap and v_top > config.advisory_speed_cap:
                log.warning(
                    "ideal speed profile peaks at %.1f m/s, above the advisory cap of %.1f m/s",
                    v_top,
                    config.advisory_speed_cap,
                )

    # -- event queue -----------------------------------------------------

    def _push(self, t: float, kind: int, drone: int, payload=None):
        self.seq += 1
        heapq.heappush(self.heap, (t, drone, kind, self.seq, payload))

    # kinds: 0 drone motion, 1 package arrival, 2 drone ready, 3 snapshot.
    # Same-time events run arrivals first (drone 0), then by drone id, snapshots last.
    def run(self) -> RunResult:
        cfg = self.config
        for d in self.drones:
            self._push(d.takeoff, 2, d.id)
        if cfg.poisson_rate is not None:
            for p in self.packages:
                self._push(p.arrival, 1, 0, p)
        self.snap_key = cfg.drones + 1
        self._push(self._next_snapshot(0.0), 3, self.snap_key)
        m = cfg.packages
        while self.completed < m:
            if not self.heap:
                raise NonTermination("event queue drained before all packages completed")
            self.events += 1
            if self.events > cfg.max_events:
                raise NonTermination(f"event cap {cfg.max_events} reached")
            t, did, kind, _, payload = heapq.heappop(self.heap)
            self._flush_exits(t)
            self.now = t
            if kind == 0:
                self._motion_event(self.drones[did - 1], payload)
            elif kind == 1:
                self.queue.append(payload)
                self._dispatch_idle(t)
            elif kind == 2:
                self._drone_ready(self.drones[did - 1], t)
            else:
                self._snapshot(t)
                self._push(self._next_snapshot(t), 3, self.snap_key)
        self._flush_exits(math.inf)
        return self._result()

    def _next_snapshot(self, t: float) -> float:
        if self.config.snapshot_mode == "poisson":
            return t + float(self.snap_rng.exponential(self.config.snapshot_interval))
        return t + self.config.snapshot_interval

    # -- dispatch --------------------------------------------------------

    def _next_for(self, drone: DroneState, t: float) -> Package | None:
        cfg = self.config
        if cfg.dispatch == "round_robin":
            i = self.rr_next[drone.id - 1]
            if i >= len(self.packages):
                return None
            p = self.packages[i]
            if p.arrival is not None and p.arrival > t:
                return None
            self.rr_next[drone.id - 1] += cfg.drones
            return p
        if cfg.poisson_rate is None:
            # first sortie of drone d carries package d
            if drone.served == 0 and drone.id <= len(self.packages):
                return self.packages[drone.id - 1]
            k = max(self.next_package, min(cfg.drones, len(self.packages)))
            if k >= len(self.packages):
                return None
            self.next_package = k + 1
            return self.packages[k]
        if self.queue:
            return self.queue.pop(0)
        return None

    def _drone_ready(self, drone: DroneState, t: float):
        drone.phase = "idle"
        drone.ready_since = t
        pkg = self._next_for(drone, t)
        if pkg is not None:
            self._start_sortie(drone, pkg, t)

    def _dispatch_idle(self, t: float):
        idle = [d for d in self.drones if d.phase == "idle" and d.ready_since is not None]
        idle.sort(key=lambda d: (d.ready_since, d.id))
        for d in idle:
            pkg = self._next_for(d, t)
            if pkg is None:
                if self.config.dispatch == "fifo":
                    break
                continue
            self._start_sortie(d, pkg, t)

    def _start_sortie(self, drone: DroneState, pkg: Package, t: float):
        if pkg.arrival is None:
            pkg.arrival = t
        pkg.dispatch = t
        pkg.drone = drone.id
        drone.package = pkg
        drone.path = self.paths[pkg.destination - 1]
        drone.cumulative = drone.path.cumulative
        drone.sortie_start = t
        drone.ready_since = None
        self._start_leg(drone, "outbound", t)

    # -- motion ----------------------------------------------------------

    def _start_leg(self, drone: DroneState, phase: str, t: float):
        path = drone.path
        total = drone.cumulative[-1]
        drone.phase = phase
        drone.leg_start = t
        drone.u = 0.0
        drone.t_ref = t
        drone.cell = None
        marks = []
        for c in path.crossings:
            if phase == "outbound":
                u_in, u_out = c.s_in, c.s_out
            else:
                u_in, u_out = total - c.s_out, total - c.s_in
            marks.append((u_in, 1, c.cell, u_out))
            marks.append((u_out, 0, c.cell, None))
        marks.sort(key=lambda x: (x[0], x[1]))
        marks.append((total, 2, None, None))
        drone.marks = marks
        drone.mark_i = 0
        drone.speed = self._free_speed()
        self._advance(drone, t)

    def _free_speed(self) -> float:
        """Speed outside every cell."""
        cfg = self.config
        if cfg.policy in ("adaptive", "minmax"):
            return self.bounds.clamp(cfg.v_avg)
        return cfg.v_avg

    def _time_to(self, drone: DroneState, mark) -> float:
        """Time at which ``drone`` reaches ``mark`` under its current motion."""
        u, kind = mark[0], mark[1]
        if self.config.policy == "ideal":
            ip = self.ip
            if kind == 2:
                return drone.leg_start + ip.tau
            if drone.phase == "outbound":
                return ideal.time_at_radius(min(ip.rho, ip.gamma + u), drone.leg_start, True, ip)
            return ideal.time_at_radius(max(ip.gamma, ip.rho - u), drone.leg_start, False, ip)
        return drone.t_ref + (u - drone.u) / drone.speed

    def _u_at(self, drone: DroneState, t: float) -> float:
        if self.config.policy == "ideal":
            ip = self.ip
            t = min(max(t, drone.leg_start), drone.leg_start + ip.tau)
            r = ideal.radius_at(t, drone.sortie_start, ip)
            return r - ip.gamma if drone.phase == "outbound" else ip.rho - r
        return drone.u + (t - drone.t_ref) * drone.speed

    def position(self, drone: DroneState, t: float) -> Point2 | None:
        if drone.phase == "idle":
            return None
        u = self._u_at(drone, t)
        total = drone.cumulative[-1]
        s = u if drone.phase == "outbound" else total - u
        return point_at_arclength(drone.path, min(total, max(0.0, s)), drone.cumulative)

    def _advance(self, drone: DroneState, t: float):
        """Apply every mark at the drone's current position, then schedule the next one.

        Marks within the snap tolerance form one batch: exits, then entries,
        then arrival, so adjacent cells hand over cleanly.
        """
        marks = drone.marks
        batch = []
        while drone.mark_i < len(marks) and marks[drone.mark_i][0] <= drone.u + 1e-9:
            batch.append(marks[drone.mark_i])
            drone.mark_i += 1
        batch.sort(key=lambda mk: mk[1])
        for u, kind, cell, u_out in batch:
            if kind == 0:
                if drone.cell == cell:
                    self._exit_cell(drone, cell, t)
            elif kind == 1:
                self._enter_cell(drone, cell, u_out, t)
            else:
                self._arrive(drone, t)
                return
        mark = marks[drone.mark_i]
        self._push(self._time_to(drone, mark), 0, drone.id, (drone.leg_start, drone.mark_i))

    def _motion_event(self, drone: DroneState, payload):
        leg_start, mark_i = payload
        if drone.leg_start != leg_start or drone.mark_i != mark_i:
            return  # stale
        t = self.now
        before = self.position(drone, t) if self.config.check_continuity else None
        u_new = drone.marks[mark_i][0]
        elapsed = t - drone.t_ref
        drone.distance += abs(u_new - drone.u)
        drone.airborne_time += elapsed
        drone.u = u_new
        drone.t_ref = t
        if before is not None:
            after = self.position(drone, t)
            self.continuity_error = max(self.continuity_error, dist(before, after))
        self._advance(drone, t)

    def _enter_cell(self, drone: DroneState, cell: int, u_out: float, t: float):
        cfg = self.config
        state = self.cells[cell - 1]
        p_now = coverage_ratio(state, t) if t > 0 else 0.0
        if cfg.policy == "adaptive":
            length = drone.path.cell_length(cell)
            v = adaptive_speed(p_now, self.target, length, self.bounds, cfg.kappa)
            drone.speed = v
        elif cfg.policy == "minmax":
            drone.speed = minmax_speed(p_now, self.target, self.bounds)
        if cfg.policy != "ideal":
            exit_t = t + (u_out - drone.u) / drone.speed
            if not exit_t > t:
                return  # grazing piece too short to register in floating point
            self._note_speed(drone.speed)
        drone.cell = cell
        self.count[cell - 1] += 1
        if self.count[cell - 1] > 1:
            self.overlaps += 1
            return
        if self.pending_exit.get(cell) == t:
            del self.pending_exit[cell]
        else:
            if cell in self.pending_exit:
                state.record_exit(self.pending_exit.pop(cell))
            state.record_entry(t)
        if cfg.record_series:
            self.series[cell].append((t, state.covered_until(t) / t if t > 0 else 0.0))

    def _exit_cell(self, drone: DroneState, cell: int, t: float):
        drone.cell = None
        drone.speed = self._free_speed() if self.config.policy != "ideal" else drone.speed
        self.count[cell - 1] -= 1
        if self.count[cell - 1] == 0:
            self.pending_exit[cell] = t
            if self.config.record_series:
                state = self.cells[cell - 1]
                self.series[cell].append((t, state.covered_until(t) / t))

    def _flush_exits(self, t: float):
        if not self.pending_exit:
            return
        for cell, te in sorted(self.pending_exit.items()):
            if te < t:
                self.cells[cell - 1].record_exit(te)
                del self.pending_exit[cell]

    def _note_speed(self, v: float):
        self.v_lo = min(self.v_lo, v)
        self.v_hi = max(self.v_hi, v)

    def _arrive(self, drone: DroneState, t: float):
        if drone.cell is not None:
            self._exit_cell(drone, drone.cell, t)
        pkg = drone.package
        if drone.phase == "outbound":
            pkg.delivered = t
            self._start_leg(drone, "inbound", t)
            return
        pkg.completed = t
        drone.phase = "idle"
        drone.package = None
        drone.path = None
        drone.served += 1
        self.completed += 1
        self._push(t, 2, drone.id)

    # -- observation -----------------------------------------------------

    def _snapshot(self, t: float):
        self.snapshots += 1
        for d in self.drones:
            if d.phase == "idle":
                continue
            if d.cell is not None:
                self.occ[d.cell - 1] += 1
            if self.config.record_radii:
                if self.ip is not None and self.config.policy == "ideal":
                    self.radii.append(ideal.radius_at(t, d.sortie_start, self.ip))
                else:
                    p = self.position(d, t)
                    self.radii.append(math.hypot(p.x, p.y))

    def _result(self) -> RunResult:
        cfg = self.config
        end = max(p.completed for p in self.packages)
        for st in self.cells:
            if st.occupied:  # cannot happen once all drones are home
                st.record_exit(end)
        if self.ip is not None:
            lower = ideal.lower_bound_time(cfg.packages, self.ip)
        else:
            lengths = self.scene.straight_lengths
            lower = math.fsum(2.0 * lengths[p.destination - 1] for p in self.packages) / (cfg.v_avg * cfg.drones)
        upper = lower + self.scene.stagger_window if cfg.policy in ("ideal", "benchmark") and self.ip else None
        if cfg.policy == "ideal":
            floor = ideal.efficiency_bound(cfg.packages, cfg.drones)
            if lower / end < floor:
                log.warning("efficiency %.6f below %.6f (m=%d, D=%d)", lower / end, floor, cfg.packages, cfg.drones)
        p_final = tuple(st.covered_until(end) / end for st in self.cells)
        dist_total = math.fsum(d.distance for d in self.drones)
        air = math.fsum(d.airborne_time for d in self.drones)
        record = RunRecord(cfg.seed, end, lower, upper, p_final, dist_total / air if air else 0.0, self.overlaps)
        crossing: dict[int, list[float]] = {}
        for p in self.paths.paths:
            per = {}
            for c in p.crossings:
                per[c.cell] = per.get(c.cell, 0.0) + c.length
            for l, ln in per.items():
                crossing.setdefault(l, []).append(ln)
        cells = []
        for c, st in zip(self.grid.cells, self.cells):
            cells.append(
                CellStats(
                    c.index,
                    c.area,
                    self.occ[c.index - 1],
                    st.restricted_length,
                    min(st.gaps) if st.gaps else None,
                    max(st.gaps) if st.gaps else None,
                    min(st.dwells) if st.dwells else None,
                    max(st.dwells) if st.dwells else None,
                    min(crossing[c.index]) if c.index in crossing else None,
                    max(crossing[c.index]) if c.index in crossing else None,
                )
            )
        delivery = tuple(sorted(p.delivered - p.arrival for p in self.packages))
        metrics = RunMetrics(
            cfg.policy,
            cfg.drones,
            cfg.packages,
            cfg.late_threshold,
            cfg.p_star,
            cfg.v_min,
            cfg.v_max,
            (record,),
            delivery,
            self.snapshots,
            tuple(cells),
        )
        speeds = (self.v_lo, self.v_hi) if self.v_hi > 0 else (cfg.v_avg, cfg.v_avg)
        return RunResult(
            metrics,
            self.scene,
            self.packages,
            self.cells,
            self.series,
            np.asarray(self.radii),
            speeds,
            self.overlaps,
            self.continuity_error,
            self.events,
            end,
        )


def simulate(config: SimConfig) -> RunResult:
    return Simulation(config).run()


def run(config: SimConfig) -> RunMetrics:
    return simulate(config).metrics


def run_replicas(config: SimConfig, replicas: int, workers: int | None = None) -> RunMetrics:
    """Run seeds ``seed, seed+1, ...`` and merge; optionally in worker processes."""
    configs = [replace(config, seed=config.seed + k, record_series=False) for k in range(replicas)]
    if workers and workers > 1 and replicas > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, configs))
    else:
        results = [run(c) for c in configs]
    return merge_all(results)
