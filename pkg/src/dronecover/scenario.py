"""JSON scenario files: parsing, validation and the shipped defaults.

Every quantity carries its unit in the key name (``_m``, ``_s``, ``_mps``,
``_rad``). Unknown keys are rejected so a typo never silently falls back to a
default.
"""

from __future__ import annotations

import json
import math
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .geometry import AnnularSector, GeometryError, Point2, PolygonRegion
from .sim_engine import ConfigError, SimConfig

_TOP = {
    "name", "description", "region", "houses", "grid", "fleet", "coverage", "workload",
    "policy", "dispatch", "seed", "snapshot_interval_s", "snapshot_mode", "late_threshold_s",
}
_FLEET = {"drones", "v_avg_mps", "v_min_mps", "v_max_mps", "altitude_m"}
_COVERAGE = {"p_star", "kappa_s"}
_WORKLOAD = {"packages", "arrivals", "destination_weights"}


def shipped_scenarios() -> list[str]:
    root = resources.files(__package__) / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve(path_or_name: str | Path) -> Path:
    """A filesystem path if it exists, otherwise a shipped scenario name."""
    p = Path(path_or_name)
    if p.exists():
        return p
    name = p.name[:-5] if p.name.endswith(".json") else p.name
    if name in shipped_scenarios():
        return Path(str(resources.files(__package__) / "scenarios" / f"{name}.json"))
    raise ConfigError(f"config: cannot read {str(path_or_name)!r} (no such file or shipped scenario)")


def _obj(d: Any, where: str, allowed: set[str]) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(extra)}")
    return d


def _num(d: dict, key: str, where: str, *, required: bool = True, default=None, integer: bool = False):
    if key not in d:
        if required:
            raise ConfigError(f"{where}.{key}: required")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}.{key}: expected a finite number, got {v!r}")
    if integer:
        if v != int(v):
            raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
        return int(v)
    return float(v)


def _point(v: Any, where: str) -> Point2:
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ConfigError(f"{where}: expected [x, y]")
    try:
        x, y = float(v[0]), float(v[1])
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected [x, y]") from None
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ConfigError(f"{where}: coordinates must be finite")
    return Point2(x, y)


def _region(d: Any):
    d = _obj(d, "region", {"sector", "polygon"})
    if len(d) != 1:
        raise ConfigError("region: give exactly one of sector or polygon")
    try:
        if "sector" in d:
            s = _obj(d["sector"], "region.sector", {"gamma_m", "rho_m", "theta_max_rad"})
            return AnnularSector(
                _num(s, "gamma_m", "region.sector"),
                _num(s, "rho_m", "region.sector"),
                _num(s, "theta_max_rad", "region.sector"),
            )
        p = _obj(d["polygon"], "region.polygon", {"vertices", "depot"})
        if not isinstance(p.get("vertices"), list):
            raise ConfigError("region.polygon.vertices: expected a list of [x, y]")
        verts = tuple(_point(v, f"region.polygon.vertices[{i}]") for i, v in enumerate(p["vertices"]))
        if "depot" not in p:
            raise ConfigError("region.polygon.depot: required")
        return PolygonRegion(verts, _point(p["depot"], "region.polygon.depot"))
    except GeometryError as exc:
        raise ConfigError(f"region: {exc}") from None


def _sample_polygon(region: PolygonRegion, n: int, on_boundary: bool, rng) -> tuple[Point2, ...]:
    if on_boundary:
        edges = list(region.edges)
        lengths = np.array([math.dist(a, b) for a, b in edges])
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        out = []
        while len(out) < n:
            s = rng.uniform(0.0, cum[-1])
            i = min(int(np.searchsorted(cum, s, side="right")) - 1, len(edges) - 1)
            (ax, ay), (bx, by) = edges[i]
            f = (s - cum[i]) / lengths[i]
            q = Point2(float(ax + f * (bx - ax)), float(ay + f * (by - ay)))
            if q != region.depot:
                out.append(q)
        return tuple(out)
    xmin, ymin, xmax, ymax = region.bbox
    out = []
    while len(out) < n:
        q = Point2(float(rng.uniform(xmin, xmax)), float(rng.uniform(ymin, ymax)))
        if region.interior(q, 1e-6) and q != region.depot:
            out.append(q)
    return tuple(out)


def config_from_dict(doc: dict, seed: int | None = None) -> SimConfig:
    doc = _obj(doc, "scenario", _TOP)
    if "region" not in doc:
        raise ConfigError("region: required")
    region = _region(doc["region"])
    seed = int(doc.get("seed", 0)) if seed is None else int(seed)

    houses = doc.get("houses")
    house_pts = house_count = None
    if isinstance(houses, list):
        house_pts = tuple(_point(h, f"houses[{i}]") for i, h in enumerate(houses))
        if not house_pts:
            raise ConfigError("houses: empty list")
    elif isinstance(houses, dict):
        h = _obj(houses, "houses", {"count", "boundary_uniform"})
        house_count = _num(h, "count", "houses", integer=True)
        if house_count < 1:
            raise ConfigError("houses.count: must be >= 1")
        on_boundary = h.get("boundary_uniform", True)
        if not isinstance(on_boundary, bool):
            raise ConfigError("houses.boundary_uniform: expected true or false")
        if isinstance(region, AnnularSector):
            if not on_boundary:
                raise ConfigError("houses.boundary_uniform: sector houses sit on the outer arc; must be true")
        else:
            # drawn once here so every policy run on this file sees the same map
            rng = np.random.default_rng(np.random.SeedSequence([seed, 0x686F]))
            house_pts = _sample_polygon(region, house_count, on_boundary, rng)
            house_count = None
    else:
        raise ConfigError("houses: expected a list of [x, y] or {count, boundary_uniform}")

    grid = _obj(doc.get("grid", {}), "grid", {"cell_size_m", "equal_sector_cells"})
    fleet = _obj(doc.get("fleet", {}), "fleet", _FLEET)
    cov = _obj(doc.get("coverage", {}), "coverage", _COVERAGE)
    work = _obj(doc.get("workload", {}), "workload", _WORKLOAD)

    arrivals = work.get("arrivals", "saturated")
    rate = None
    if isinstance(arrivals, dict):
        a = _obj(arrivals, "workload.arrivals", {"poisson"})
        rate = _num(a, "poisson", "workload.arrivals")
    elif arrivals != "saturated":
        raise ConfigError('workload.arrivals: expected "saturated" or {"poisson": rate_per_s}')
    weights = work.get("destination_weights")
    if weights is not None:
        if not isinstance(weights, list) or not all(
            isinstance(w, (int, float)) and not isinstance(w, bool) for w in weights
        ):
            raise ConfigError("workload.destination_weights: expected a list of numbers")
        weights = tuple(float(w) for w in weights)

    policy = doc.get("policy", "ideal")
    dispatch = doc.get("dispatch", "fifo")
    if not isinstance(policy, str):
        raise ConfigError("policy: expected a string")
    if not isinstance(dispatch, str):
        raise ConfigError("dispatch: expected a string")

    return SimConfig(
        region=region,
        drones=_num(fleet, "drones", "fleet", integer=True),
        packages=_num(work, "packages", "workload", integer=True),
        policy=policy,
        houses=house_pts,
        house_count=house_count,
        cell_size=_num(grid, "cell_size_m", "grid", required=False),
        sector_cells=_num(grid, "equal_sector_cells", "grid", required=False, integer=True),
        v_avg=_num(fleet, "v_avg_mps", "fleet", required=False, default=10.0),
        v_min=_num(fleet, "v_min_mps", "fleet", required=False),
        v_max=_num(fleet, "v_max_mps", "fleet", required=False),
        altitude=_num(fleet, "altitude_m", "fleet", required=False, default=0.0),
        p_star=_num(cov, "p_star", "coverage", required=False),
        kappa=_num(cov, "kappa_s", "coverage", required=False, default=1.0),
        dispatch=dispatch,
        poisson_rate=rate,
        destination_weights=weights,
        seed=seed,
        snapshot_interval=_num(doc, "snapshot_interval_s", "scenario", required=False, default=1.0),
        snapshot_mode=doc.get("snapshot_mode", "periodic"),
        late_threshold=_num(doc, "late_threshold_s", "scenario", required=False, default=1800.0),
    )


def load_scenario(path_or_name: str | Path, seed: int | None = None, **overrides) -> SimConfig:
    """Read a scenario file (or shipped scenario name) into a :class:`SimConfig`.

    Keyword overrides are applied to the resulting config and re-validated.
    """
    path = resolve(path_or_name)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {str(path)!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {str(path)!r} is not valid JSON ({exc.msg} at line {exc.lineno})") from None
    cfg = config_from_dict(doc, seed)
    return replace(cfg, **overrides) if overrides else cfg
