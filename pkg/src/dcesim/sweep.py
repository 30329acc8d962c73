"""Parameter sweeps: grids of independent runs with resumable CSV output.

A plan is a run configuration plus ``[sweep]`` and ``[axis NAME]`` sections.
Each axis sets one or more dotted parameters (``path = drive.omega_L,
drive.omega_R`` moves both drive frequencies together). Axis bounds are
either ``min``/``max`` or ``center``/``span`` with ``span`` the fractional
half-width, and may use ``k1..kN`` of the base cavity.

Observables:

* ``N_at``     N_mode at each of ``times`` (the drive runs up to the last time
               unless ``t_F`` says otherwise; each time is read as a switch-off)
* ``history``  N_mode at every recorded time
* ``gaps``     consecutive eigenfrequency gaps of the static cavity
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bogoliubov import particle_number_history
from .cavity import coupling_coefficients
from .config import SCHEMA, Entry, RunConfig, evaluate, load_config
from .dynamics import integrate
from .errors import DceError, DegenerateWidth, PeakAtBoundary, PlanInvalid

OBSERVABLES = ("N_at", "history", "gaps")
STATUS_OK = "ok"


@dataclass(frozen=True)
class Axis:
    name: str
    paths: tuple
    values: np.ndarray = field(compare=False)

    def __len__(self):
        return len(self.values)


@dataclass
class SweepPlan:
    base: RunConfig
    axes: list
    observable: str = "N_at"
    mode: int = 1
    times: tuple = ()
    workers: int = 1
    name: str = "sweep"

    @property
    def shape(self) -> tuple:
        return tuple(len(a) for a in self.axes)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def point(self, index: int) -> dict:
        """Axis values of grid point ``index`` (row-major, first axis slowest)."""
        idx = np.unravel_index(index, self.shape)
        return {a.name: float(a.values[i]) for a, i in zip(self.axes, idx)}

    def overrides(self, index: int) -> dict:
        ov = {}
        for a, v in zip(self.axes, self.point(index).values()):
            for path in a.paths:
                s, key = path.split(".", 1)
                ov[(s, key)] = Entry(repr(v))
        if self.observable != "gaps" and self.times:
            t_end = max(self.times)
            drv = self.base.sections.get("drive", {})
            if "t_F" not in drv:
                ov[("drive", "t_F")] = Entry(repr(t_end))
            if "t_max" not in drv:
                ov[("drive", "t_max")] = Entry(repr(t_end + 1.0))
        return ov

    def columns(self) -> list:
        if self.observable == "N_at":
            return [f"N{self.mode}@{t:g}" for t in self.times]
        if self.observable == "history":
            return ["t_history", f"N{self.mode}_history"]
        return [f"gap_{j}" for j in range(1, self.base.n_modes())]

    def digest(self) -> str:
        """Hash of everything that determines the results."""
        payload = {
            "base": self.base.dump(),
            "axes": [(a.name, list(a.paths), [repr(float(v)) for v in a.values]) for a in self.axes],
            "observable": self.observable, "mode": self.mode,
            "times": [repr(float(t)) for t in self.times], "version": __version__,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def to_dict(self) -> dict:
        return {
            "name": self.name, "observable": self.observable, "mode": self.mode,
            "times": list(self.times), "workers": self.workers, "shape": list(self.shape),
            "axes": [{"name": a.name, "paths": list(a.paths), "values": a.values.tolist()}
                     for a in self.axes],
            "base_config": self.base.dump(),
        }


def _axis_from_entries(cfg: RunConfig, name: str, entries: dict, k) -> Axis:
    def num(key):
        e = entries.get(key)
        if e is None:
            return None
        try:
            return evaluate(str(e.value), k)
        except DceError as exc:
            raise PlanInvalid(f"{cfg.source}:{e.line}: [axis {name}] {key}: {exc}") from None

    def bad(msg, key=None):
        e = entries.get(key) if key else None
        loc = f"{cfg.source}:{e.line}" if e is not None and e.line else cfg.source
        return PlanInvalid(f"{loc}: [axis {name}]{' ' + key if key else ''}: {msg}")

    if "path" not in entries:
        raise bad("missing 'path'")
    paths = tuple(p.strip() for p in str(entries["path"].value).split(",") if p.strip())
    for p in paths:
        s, _, key = p.partition(".")
        if s not in ("cavity", "drive", "integrator") or key not in SCHEMA[s] or key == "checkpoints":
            raise bad(f"unknown parameter path {p!r}", "path")
    lo, hi, c, span = num("min"), num("max"), num("center"), num("span")
    if c is not None or span is not None:
        if c is None or span is None or lo is not None or hi is not None:
            raise bad("give either min/max or center/span")
        if not span > 0:
            raise bad("span must be > 0", "span")
        lo, hi = c * (1 - span), c * (1 + span)
    if lo is None or hi is None:
        raise bad("missing bounds")
    count = 1 if entries.get("count") is None else num("count")
    if count != int(count) or count < 1:
        raise bad("count must be an integer >= 1", "count")
    count = int(count)
    if count > 1 and not lo < hi:
        raise bad(f"need min < max, got {lo} and {hi}")
    scale = str(entries["scale"].value).strip() if "scale" in entries else "linear"
    if scale == "linear":
        values = np.linspace(lo, hi, count) if count > 1 else np.array([lo])
    elif scale == "log":
        if not lo > 0:
            raise bad("log scale needs min > 0")
        values = np.geomspace(lo, hi, count) if count > 1 else np.array([lo])
    else:
        raise bad(f"scale must be 'linear' or 'log', got {scale!r}", "scale")
    return Axis(name, paths, values)


def plan_from_config(cfg: RunConfig) -> SweepPlan:
    """Build and validate a sweep plan; every grid point must resolve."""
    if not cfg.axes:
        raise PlanInvalid(f"{cfg.source}: a sweep plan needs at least one [axis NAME] section")
    try:
        table = cfg.spectrum()
    except DceError as exc:
        raise PlanInvalid(f"{cfg.source}: base configuration invalid: {exc}") from None
    axes = [_axis_from_entries(cfg, name, ent, table.k) for name, ent in cfg.axes.items()]
    observable = cfg.get("sweep", "observable", default="N_at")
    if observable not in OBSERVABLES:
        raise PlanInvalid(f"{cfg.where('sweep', 'observable')}: observable must be one of {OBSERVABLES}")
    times = cfg.get("sweep", "times", table.k, default=())
    if observable == "N_at" and not times:
        raise PlanInvalid(f"{cfg.where('sweep', 'times')}: observable N_at needs [sweep] times")
    if any(not t > 0 for t in times):
        raise PlanInvalid(f"{cfg.where('sweep', 'times')}: times must be > 0")
    plan = SweepPlan(base=cfg, axes=axes, observable=observable,
                     mode=cfg.get("sweep", "mode", default=1), times=tuple(sorted(times)),
                     workers=cfg.get("sweep", "workers", default=1),
                     name=cfg.get("sweep", "name", default=Path(cfg.source).stem or "sweep"))
    if plan.workers < 1:
        raise PlanInvalid(f"{cfg.where('sweep', 'workers')}: workers must be >= 1")
    if not 1 <= plan.mode <= cfg.n_modes():
        raise PlanInvalid(f"{cfg.where('sweep', 'mode')}: mode must be in 1..{cfg.n_modes()}")
    for i in range(plan.size):
        try:
            cfg.resolve(overrides=plan.overrides(i))
        except DceError as exc:
            raise PlanInvalid(f"grid point {i} {plan.point(i)} is invalid: {exc}") from None
    return plan


def load_plan(path) -> SweepPlan:
    return plan_from_config(load_config(path, validate=False))


def evaluate_point(plan: SweepPlan, index: int) -> list:
    """Full pipeline for one grid point; returns the observable values as a list of strings."""
    run = plan.base.resolve(overrides=plan.overrides(index))
    if plan.observable == "gaps":
        return [format(g, ".17g") for g in run.table.gaps()]
    coupling = coupling_coefficients(run.table, run.drive)
    cps = tuple(t for t in plan.times if t < run.drive.t_max)
    traj = integrate(run.table, coupling, run.drive, run.integrator, checkpoints=cps)
    t, N = particle_number_history(traj, run.table, run.convention)
    Nm = N[:, plan.mode - 1]
    if plan.observable == "N_at":
        return [format(Nm[traj.index_of(tt)], ".17g") for tt in plan.times]
    return [";".join(format(x, ".17g") for x in t), ";".join(format(x, ".17g") for x in Nm)]


def _worker(args):
    plan, index = args
    start = time.perf_counter()
    try:
        values, status = evaluate_point(plan, index), STATUS_OK
    except DceError as exc:
        values = [""] * len(plan.columns())
        status = f"{type(exc).__name__}:{exc.exit_code}"
    return index, values, status, time.perf_counter() - start


@dataclass
class SweepResult:
    plan: SweepPlan
    index: np.ndarray
    coords: dict
    values: dict
    status: list
    digest: str
    elapsed: float = 0.0

    def grid(self, column: str) -> np.ndarray:
        """Observable column reshaped to the plan grid (NaN where a point failed)."""
        out = np.full(self.plan.size, np.nan)
        out[self.index] = self.values[column]
        return out.reshape(self.plan.shape)

    @property
    def ok(self) -> bool:
        return all(s == STATUS_OK for s in self.status)


def _read_rows(path: Path, columns):
    rows = {}
    if not path.exists():
        return rows
    with path.open() as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            try:
                rows[int(rec["index"])] = rec
            except (KeyError, ValueError):
                continue
    return rows


def _assemble(plan, rows, digest, elapsed) -> SweepResult:
    idx = np.array(sorted(rows), dtype=int)
    coords = {a.name: np.array([plan.point(i)[a.name] for i in idx]) for a in plan.axes}
    values = {}
    for col in plan.columns():
        if plan.observable == "history":
            values[col] = [rows[i][col] for i in idx]
        else:
            values[col] = np.array([float(rows[i][col]) if rows[i][col] else np.nan for i in idx])
    return SweepResult(plan, idx, coords, values, [rows[i]["status"] for i in idx], digest, elapsed)


def run_sweep(plan: SweepPlan, out_dir, workers: int | None = None, resume: bool = True,
              limit: int | None = None) -> SweepResult:
    """Evaluate every grid point, appending one CSV row per finished point.

    Completed points from an earlier run with the same plan digest are
    skipped. ``limit`` stops after that many new points (used to simulate an
    interrupted run). Results do not depend on the worker count.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, manifest_path = out / f"{plan.name}.csv", out / f"{plan.name}.json"
    digest = plan.digest()
    header = ["index", *[a.name for a in plan.axes], *plan.columns(), "status"]
    rows = {}
    if resume and csv_path.exists():
        old = json.loads(manifest_path.read_text()) if manifest_path.exists() else {}
        if old.get("digest") != digest:
            raise PlanInvalid(f"{csv_path} was written by a different plan; "
                              "remove it or choose another output directory")
        rows = _read_rows(csv_path, plan.columns())
    else:
        with csv_path.open("w", newline="") as fh:
            csv.writer(fh).writerow(header)
    todo = [i for i in range(plan.size) if i not in rows]
    if limit is not None:
        todo = todo[:limit]
    workers = workers or plan.workers
    manifest = {"digest": digest, "code_version": __version__, "plan": plan.to_dict(),
                "csv": csv_path.name, "started": time.strftime("%Y-%m-%dT%H:%M:%S"),
                "workers": workers}
    manifest_path.write_text(json.dumps(manifest, indent=2))
    start = time.perf_counter()
    point_times = []
    with csv_path.open("a", newline="") as fh:
        writer = csv.writer(fh)

        def sink(index, values, status, seconds):
            coords = [format(v, ".17g") for v in plan.point(index).values()]
            row = [index, *coords, *values, status]
            writer.writerow(row)
            fh.flush()
            rows[index] = dict(zip(header, map(str, row)))
            point_times.append(seconds)

        if workers <= 1 or len(todo) <= 1:
            for i in todo:
                sink(*_worker((plan, i)))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_worker, (plan, i)) for i in todo]
                for fut in as_completed(futures):
                    sink(*fut.result())
    elapsed = time.perf_counter() - start
    manifest.update({"finished": time.strftime("%Y-%m-%dT%H:%M:%S"), "elapsed_s": elapsed,
                     "points_evaluated": len(point_times), "points_total": plan.size,
                     "point_seconds_total": float(sum(point_times)),
                     "failed": sum(1 for r in rows.values() if r["status"] != STATUS_OK)})
    manifest_path.write_text(json.dumps(manifest, indent=2))
    return _assemble(plan, rows, digest, elapsed)


def workers_from_env(default: int) -> int:
    """DCE_WORKERS, when set, overrides the requested worker count."""
    env = os.environ.get("DCE_WORKERS")
    if env is None or not env.strip():
        return default
    try:
        w = int(env)
    except ValueError:
        raise PlanInvalid(f"DCE_WORKERS must be an integer, got {env!r}") from None
    if w < 1:
        raise PlanInvalid(f"DCE_WORKERS must be >= 1, got {w}")
    return w


# ---- peak analysis -------------------------------------------------------------

@dataclass(frozen=True)
class PeakProfile:
    x: np.ndarray
    y: np.ndarray
    peak_index: int
    peak_x: float
    fwhm: float

    @property
    def relative_fwhm(self) -> float:
        """FWHM divided by the peak position."""
        return self.fwhm / abs(self.peak_x)


def _crossing(x0, y0, x1, y1, level):
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def profile_fwhm(x, y) -> PeakProfile:
    """Normalize a 1-D profile to its maximum and measure the full width at half maximum."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DegenerateWidth("profile contains non-finite values")
    i = int(np.argmax(y))
    top = y[i]
    if not top > 0:
        raise DegenerateWidth("profile maximum is not positive")
    yn = y / top
    if np.ptp(yn) == 0:
        raise DegenerateWidth("flat profile has no peak")
    if i == 0 or i == len(y) - 1:
        raise PeakAtBoundary(f"maximum at grid edge x = {x[i]:.6g}; widen the sweep")
    left = next((j for j in range(i, 0, -1) if yn[j - 1] < 0.5 <= yn[j]), None)
    right = next((j for j in range(i, len(y) - 1) if yn[j + 1] < 0.5 <= yn[j]), None)
    if left is None or right is None:
        raise DegenerateWidth("profile does not fall to half maximum on both sides")
    xl = _crossing(x[left - 1], yn[left - 1], x[left], yn[left], 0.5)
    xr = _crossing(x[right], yn[right], x[right + 1], yn[right + 1], 0.5)
    return PeakProfile(x=x, y=yn, peak_index=i, peak_x=float(x[i]), fwhm=float(xr - xl))


def peak_profile(result: SweepResult, column: str, along: str) -> PeakProfile:
    """1-D cut through the grid maximum of ``column``.

    ``along`` names an axis (other axes held at the maximum) or is
    ``"diagonal"`` for the main diagonal of a square 2-D grid, in which case
    x is the first axis value.
    """
    g = result.grid(column)
    if np.all(np.isnan(g)):
        raise DegenerateWidth(f"no values in column {column!r}")
    names = [a.name for a in result.plan.axes]
    if along == "diagonal":
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise PlanInvalid("diagonal profiles need a square 2-D grid")
        y = np.diagonal(g)
        x = result.plan.axes[0].values
        return profile_fwhm(x, y)
    if along not in names:
        raise PlanInvalid(f"unknown axis {along!r}; axes are {names}")
    ax = names.index(along)
    top = np.unravel_index(np.nanargmax(g), g.shape)
    sl = list(top)
    sl[ax] = slice(None)
    return profile_fwhm(result.plan.axes[ax].values, g[tuple(sl)])


def argmax_point(result: SweepResult, column: str) -> dict:
    g = result.grid(column)
    idx = np.unravel_index(np.nanargmax(g), g.shape)
    return {a.name: float(a.values[i]) for a, i in zip(result.plan.axes, idx)} | {"index": tuple(map(int, idx))}
