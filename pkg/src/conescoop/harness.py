"""Trial execution, sweeps and result files."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .capture import effective_width, lateral_coverage, scoop_fraction, sweep_depth_for
from .config import ConfigError, RunConfig, _Doc, config_from_doc, merge, parse_yaml
from .engine import (
    ParticleInstability,
    Regions,
    SettleError,
    TraceWriter,
    advance,
    fill_and_settle,
    measure,
    stability_bound,
)
from .sheet import SheetInstability, build_sheet, lip_deflection, place_undeformed
from .trajectory import PlanningError, TrajectoryPlan, plan_scoop, roof_length_limit, sample_poses

RESULT_COLUMNS = [
    "scenario", "container_D_mm", "effector", "effector_d_mm", "material", "trial", "seed",
    "delivered_fraction", "residue_fraction", "spilled_fraction", "carried_end_fraction",
    "lateral_coverage", "aborted", "reason",
    # extras
    "in_plane_delivered", "press_mm", "n_particles", "max_penetration_ratio", "sim_time_s",
]

NOT_INSERTABLE = "not_insertable"
PRESS_SAMPLE_STEPS = 250


def trial_seed(base_seed: int, scenario: str, trial_index: int) -> int:
    """Stable 63-bit seed from (base seed, scenario label, trial index)."""
    h = hashlib.blake2b(f"{base_seed}|{scenario}|{trial_index}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little") >> 1


@dataclass
class ScoopTrialResult:
    trial_index: int
    seed: int
    delivered_fraction: float = 0.0
    residue_fraction: float = 0.0
    spilled_fraction: float = 0.0
    carried_end_fraction: float = 0.0
    lateral_coverage: float = 0.0
    wall_time: float = 0.0
    aborted: bool = False
    reason: str = ""
    in_plane_delivered: float = 0.0
    press_depth: float = 0.0
    n_particles: int = 0
    max_penetration_ratio: float = 0.0
    sim_time: float = 0.0

    @property
    def total(self) -> float:
        return (self.delivered_fraction + self.residue_fraction + self.spilled_fraction
                + self.carried_end_fraction)


def plan_for(config: RunConfig) -> TrajectoryPlan:
    return plan_scoop(config.container, config.cone, config.trajectory,
                      sheet_friction=config.sheet.friction_coefficient)


def skip_reason(config: RunConfig) -> str | None:
    """``not_insertable: ...`` when the tool cannot be planned into the bowl."""
    try:
        plan_for(config)
    except PlanningError as exc:
        return f"{NOT_INSERTABLE}: {exc}"
    return None


def coverage_for(config: RunConfig, press: float) -> float:
    model = config.capture
    tool = config.tool_width if config.sheet.fixed_width is not None else config.cone
    width = effective_width(tool, press, model, max_width=2.0 * config.cone.sheet_radius_R)
    depth = sweep_depth_for(config.container, config.granular, model)
    return lateral_coverage(
        width, config.container, depth, model, tool_width=config.tool_width,
        press_depth=press, grain_diameter=config.granular.grain_diameter,
    )


def _fold(res: ScoopTrialResult, account, press: float, config: RunConfig) -> None:
    """Apply the lateral coverage to an in-plane mass account."""
    cov = coverage_for(config, press)
    res.lateral_coverage = cov
    res.press_depth = press
    res.in_plane_delivered = account.delivered
    res.delivered_fraction = scoop_fraction(min(account.delivered, 1.0), cov)
    res.carried_end_fraction = scoop_fraction(min(account.carried, 1.0), cov)
    res.spilled_fraction = account.spilled
    # what the edge failed to hold falls back into the bowl
    res.residue_fraction = max(0.0, 1.0 - res.delivered_fraction - res.carried_end_fraction
                               - res.spilled_fraction)


def run_trial(config: RunConfig, trial_index: int, trace_path=None) -> ScoopTrialResult:
    """Fill, plan, simulate, measure and apply the coverage model for one trial."""
    t0 = time.perf_counter()
    seed = trial_seed(config.base_seed, config.scenario, trial_index)
    res = ScoopTrialResult(trial_index=trial_index, seed=seed)
    sim = config.simulation
    if config.granular.total_mass <= 0:
        res.wall_time = time.perf_counter() - t0
        return res

    world = None
    press = 0.0
    writer = TraceWriter(trace_path) if trace_path is not None else None
    try:
        plan = plan_for(config)
        world = fill_and_settle(config.container, config.granular, seed,
                                max_particles=sim.max_particles)
        world.speed_limit = sim.speed_limit
        if sim.dt is not None:
            bound = stability_bound(world.mass, world.contact.kn)
            if sim.dt > bound:
                raise ConfigError(f"dt {sim.dt:.3g} s exceeds the stability bound {bound:.3g} s",
                                  "simulation.dt_s")
            world.dt = sim.dt
        res.n_particles = world.n_particles
        cone = config.cone
        roof = roof_length_limit(plan, config.container, cone)
        sheet = build_sheet(config.sheet, cone, segments=sim.sheet_segments,
                            c_aniso=sim.c_aniso, roof_fraction=roof / cone.slant_length)
        place_undeformed(sheet, plan.phases[0].waypoints[0])
        world.sheet = sheet
        world.static_segments = plan.plate.segments()
        world.static_mu = np.full(len(world.static_segments), config.granular.friction_coefficient)
        regions = Regions(config.container, plan.plate.box())

        poses = sample_poses(plan, world.dt)
        sweep = next(ph for ph in plan.phases if ph.label == "sweep")
        s0 = int(sweep.times[0] / world.dt)
        s1 = int(math.ceil(sweep.times[-1] / world.dt))
        step_every = sim.trace_every if writer else None
        k = 0
        if writer:
            writer.frame(world)
        while k < len(poses):
            # stops fall on absolute step multiples so sampling ignores chunking
            n = sim.chunk_steps - k % sim.chunk_steps
            if s0 - PRESS_SAMPLE_STEPS <= k < s1:
                n = min(n, PRESS_SAMPLE_STEPS - k % PRESS_SAMPLE_STEPS)
            if step_every:
                n = min(n, step_every - k % step_every)
            advance(world, poses[k:k + n])
            k += n
            if s0 <= k <= s1 and k % PRESS_SAMPLE_STEPS == 0:
                press = max(press, lip_deflection(sheet))
            if writer and k % step_every == 0:
                writer.frame(world)
            if time.perf_counter() - t0 > sim.timeout:
                raise TimeoutError(f"trial exceeded {sim.timeout:.0f} s of wall time")
        settle = int(round(sim.settle_time / world.dt))
        while settle > 0:
            n = min(settle, sim.chunk_steps)
            advance(world, n_steps=n)
            settle -= n
        if writer:
            writer.frame(world)
        _fold(res, measure(world, regions), press, config)
    except (ParticleInstability, SheetInstability, SettleError, PlanningError, TimeoutError,
            ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        res.aborted = True
        res.reason = f"{type(exc).__name__}: {exc}"
        if world is not None and world.sheet is not None:
            _fold(res, measure(world, Regions(config.container, plan.plate.box())), press, config)
        else:
            res.residue_fraction = 1.0
    finally:
        if writer:
            writer.close()
    if world is not None:
        res.max_penetration_ratio = float(world.stats[0])
        res.sim_time = world.sim_time
    res.wall_time = time.perf_counter() - t0
    return res


# ------------------------------------------------------------------ sweeps

@dataclass
class CellResult:
    config: RunConfig
    trials: list[ScoopTrialResult] = field(default_factory=list)
    skipped: str | None = None

    def ok(self) -> list[ScoopTrialResult]:
        return [t for t in self.trials if not t.aborted]

    def stats(self, name: str = "delivered_fraction") -> tuple[float, float]:
        vals = [getattr(t, name) for t in self.ok()]
        if not vals:
            return math.nan, math.nan
        sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
        return statistics.fmean(vals), sd


@dataclass
class SweepResult:
    cells: list[CellResult]

    def cell(self, D: float, effector: str, d: float | None = None,
             material: str | None = None) -> CellResult:
        for c in self.cells:
            cfg = c.config
            if cfg.container.inner_diameter_D != D or cfg.effector != effector:
                continue
            if d is not None and abs(cfg.tool_width - d) > 0.05:
                continue
            if material is not None and cfg.granular.material_name != material:
                continue
            return c
        raise KeyError(f"no cell D={D} effector={effector} d={d} material={material}")


def _trial_task(args):
    config, trial = args
    return run_trial(config, trial)


def run_sweep(configs: list[RunConfig], jobs: int = 1, progress=None) -> SweepResult:
    """Run every trial of every runnable cell; results are ordered by cell then trial."""
    cells = [CellResult(cfg, skipped=skip_reason(cfg)) for cfg in configs]
    tasks = [(i, t) for i, c in enumerate(cells) if c.skipped is None
             for t in range(c.config.trials)]
    payload = [(cells[i].config, t) for i, t in tasks]
    if jobs <= 1:
        results = []
        for p in payload:
            results.append(_trial_task(p))
            if progress:
                progress(p[0], results[-1])
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = []
            for p, r in zip(payload, pool.map(_trial_task, payload)):
                results.append(r)
                if progress:
                    progress(p[0], r)
    for (i, _), r in zip(tasks, results):
        cells[i].trials.append(r)
    return SweepResult(cells)


# ------------------------------------------------------------------ presets and matrices

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def load_matrix_text(text: str, source: str | None = None) -> list[RunConfig]:
    """Configs from a matrix document: shared keys, ``defaults`` and a ``cells`` list."""
    doc = parse_yaml(text, source)
    data = doc.data
    if not isinstance(data, dict) or "cells" not in data:
        raise ConfigError("matrix needs a 'cells' list", "cells", 1, source)
    cells = data["cells"]
    if not isinstance(cells, list) or not cells:
        raise doc.error("must be a non-empty list", "cells")
    defaults = data.get("defaults") or {}
    if not isinstance(defaults, dict):
        raise doc.error("must be a mapping", "defaults")
    shared = {k: v for k, v in data.items() if k not in ("cells", "defaults")}
    out = []
    for i, cell in enumerate(cells):
        if not isinstance(cell, dict):
            raise doc.error("must be a mapping", f"cells[{i}]")
        merged = merge(merge(shared, defaults), cell)
        lines = {}
        for prefix in ("", "defaults.", f"cells[{i}]."):
            for key, line in doc.lines.items():
                if prefix and key.startswith(prefix):
                    lines[key[len(prefix):]] = line
                elif not prefix and not key.startswith(("cells", "defaults")):
                    lines[key] = line
        out.append(config_from_doc(_Doc(merged, lines, source)))
    return out


def load_matrix(path) -> list[RunConfig]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError("matrix file not found", source=str(path)) from None
    return load_matrix_text(text, str(path))


def experiment_configs(number: int, trials: int | None = None) -> list[RunConfig]:
    """Shipped presets for experiments 1 to 3."""
    if number not in (1, 2, 3):
        raise ValueError("experiment must be 1, 2 or 3")
    name = f"experiment{number}.yaml"
    text = resources.files("conescoop").joinpath("experiments", name).read_text("utf-8")
    if trials is not None:
        data = yaml.safe_load(text)
        data["trials"] = trials
        text = yaml.safe_dump(data, sort_keys=False)
    return load_matrix_text(text, name)


# ------------------------------------------------------------------ output files

def result_rows(sweep: SweepResult) -> list[dict]:
    rows = []
    for c in sweep.cells:
        cfg = c.config
        head = {
            "scenario": cfg.scenario,
            "container_D_mm": _fmt(cfg.container.inner_diameter_D),
            "effector": cfg.effector,
            "effector_d_mm": _fmt(round(cfg.tool_width, 2)),
            "material": cfg.granular.material_name,
        }
        if c.skipped is not None:
            row = dict.fromkeys(RESULT_COLUMNS, "")
            row.update(head, aborted="true", reason=c.skipped)
            rows.append(row)
            continue
        for t in c.trials:
            rows.append({
                **head,
                "trial": t.trial_index,
                "seed": t.seed,
                "delivered_fraction": _fmt(t.delivered_fraction),
                "residue_fraction": _fmt(t.residue_fraction),
                "spilled_fraction": _fmt(t.spilled_fraction),
                "carried_end_fraction": _fmt(t.carried_end_fraction),
                "lateral_coverage": _fmt(t.lateral_coverage),
                "aborted": _fmt(t.aborted),
                "reason": t.reason,
                "in_plane_delivered": _fmt(t.in_plane_delivered),
                "press_mm": _fmt(t.press_depth),
                "n_particles": t.n_particles,
                "max_penetration_ratio": _fmt(t.max_penetration_ratio),
                "sim_time_s": _fmt(t.sim_time),
            })
    return rows


def results_csv_text(sweep: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=RESULT_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(result_rows(sweep))
    return buf.getvalue()


def summary_records(sweep: SweepResult) -> list[dict]:
    out = []
    for c in sweep.cells:
        cfg = c.config
        rec = {
            "scenario": cfg.scenario,
            "container_D_mm": cfg.container.inner_diameter_D,
            "effector": cfg.effector,
            "effector_d_mm": round(cfg.tool_width, 2),
            "material": cfg.granular.material_name,
            "status": "skipped" if c.skipped else "run",
            "reason": c.skipped or "",
            "n_trials": len(c.trials),
            "n_aborted": len(c.trials) - len(c.ok()),
        }
        for name in ("delivered_fraction", "residue_fraction", "spilled_fraction",
                     "carried_end_fraction", "lateral_coverage"):
            m, s = c.stats(name) if not c.skipped else (math.nan, math.nan)
            rec[f"{name}_mean"] = None if math.isnan(m) else m
            rec[f"{name}_std"] = None if math.isnan(s) else s
        out.append(rec)
    return out


def summary_markdown(sweep: SweepResult) -> str:
    lines = [
        "| scenario | D (mm) | effector | d (mm) | material | delivered mean | delivered std "
        "| residue mean | spilled mean | coverage mean | trials | aborted | note |",
        "|---|---|---|---|---|---|---|---|---|---|---|---|---|",
    ]
    for r in summary_records(sweep):
        def f(v):
            return "" if v is None else f"{v:.4f}"
        lines.append(
            f"| {r['scenario']} | {r['container_D_mm']:g} | {r['effector']} | "
            f"{r['effector_d_mm']:g} | {r['material']} | {f(r['delivered_fraction_mean'])} | "
            f"{f(r['delivered_fraction_std'])} | {f(r['residue_fraction_mean'])} | "
            f"{f(r['spilled_fraction_mean'])} | {f(r['lateral_coverage_mean'])} | "
            f"{r['n_trials']} | {r['n_aborted']} | {r['reason']} |"
        )
    return "\n".join(lines) + "\n"


def write_outputs(sweep: SweepResult, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "results": out / "results.csv",
        "summary": out / "summary.md",
        "summary_json": out / "summary.json",
    }
    paths["results"].write_text(results_csv_text(sweep), encoding="utf-8")
    paths["summary"].write_text(summary_markdown(sweep), encoding="utf-8")
    paths["summary_json"].write_text(
        json.dumps(summary_records(sweep), indent=2) + "\n", encoding="utf-8"
    )
    return paths
