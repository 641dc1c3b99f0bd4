"""Command line entry point: ``conescoop {cone,run,sweep,export-plan}``."""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from pathlib import Path

from .cone import DEFAULT_PHI_MIN, ConeDomainError, design_table
from .config import ConfigError, load_config
from .harness import (
    CellResult,
    SweepResult,
    experiment_configs,
    load_matrix,
    plan_for,
    run_sweep,
    run_trial,
    skip_reason,
    write_outputs,
)
from .trajectory import PlanningError, export_plan_csv

OUTPUT_ENV = "CONESCOOP_OUTPUT_DIR"
DEFAULT_OUTPUT = "conescoop_out"


def output_dir(flag: str | None) -> Path:
    """``--out`` wins over the environment variable, which wins over the default."""
    return Path(flag or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def _cmd_cone(args) -> int:
    rows = design_table(
        args.sheet_radius_mm,
        container_D=args.container_diameter_mm,
        phi_min=math.radians(args.phi_min_deg),
        slide_angles_deg=tuple(args.slide_angles_deg),
    )
    header = ["d_mm", "theta_deg", "phi_deg"]
    table = [[f"{r.d:.2f}", f"{r.theta_deg:.1f}", f"{r.phi_deg:.1f}"] for r in rows]
    if args.container_diameter_mm is not None:
        header += ["rigid_insertable", "min_slide_angle_deg"]
        for cells, r in zip(table, rows):
            cells += ["yes" if r.rigid_insertable else "no", f"{r.min_slide_angle_deg:.1f}"]
    widths = [max(len(h), *(len(c[i]) for c in table)) for i, h in enumerate(header)]
    for line in [header, *table]:
        print("  ".join(c.rjust(w) for c, w in zip(line, widths)))
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, base_seed=args.seed)
    cell = CellResult(cfg, skipped=skip_reason(cfg))
    if cell.skipped is None:
        cell.trials.append(run_trial(cfg, args.trial, trace_path=args.trace))
    paths = write_outputs(SweepResult([cell]), output_dir(args.out))
    if cell.skipped:
        print(f"skipped: {cell.skipped}")
    else:
        t = cell.trials[0]
        print(
            f"delivered {t.delivered_fraction:.4f}  residue {t.residue_fraction:.4f}  "
            f"spilled {t.spilled_fraction:.4f}  carried {t.carried_end_fraction:.4f}  "
            f"coverage {t.lateral_coverage:.4f}"
            + (f"  ABORTED ({t.reason})" if t.aborted else "")
        )
    print(f"results: {paths['results']}")
    return 0


def _cmd_sweep(args) -> int:
    if args.matrix:
        configs = load_matrix(args.matrix)
        if args.trials is not None:
            configs = [dataclasses.replace(c, trials=args.trials) for c in configs]
    else:
        configs = experiment_configs(args.experiment, trials=args.trials)

    def progress(cfg, res):
        if args.verbose:
            print(
                f"{cfg.scenario} D={cfg.container.inner_diameter_D:g} {cfg.effector} "
                f"d={cfg.tool_width:.2f} {cfg.granular.material_name} trial {res.trial_index}: "
                f"{res.delivered_fraction:.4f}",
                file=sys.stderr,
            )

    sweep = run_sweep(configs, jobs=args.jobs, progress=progress)
    paths = write_outputs(sweep, output_dir(args.out))
    print(paths["summary"].read_text(), end="")
    print(f"results: {paths['results']}")
    return 0


def _cmd_export_plan(args) -> int:
    cfg = load_config(args.config)
    plan = plan_for(cfg)
    out = Path(args.output) if args.output else output_dir(args.out) / "plan.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    export_plan_csv(plan, out)
    print(f"plan: {out} ({plan.total_duration:.3f} s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conescoop", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cone", help="cone design calculator")
    c.add_argument("--sheet-radius-mm", type=float, default=50.0)
    c.add_argument("--container-diameter-mm", type=float)
    c.add_argument("--slide-angles-deg", type=float, nargs="+", default=[0.0, 36.0, 72.0, 105.0])
    c.add_argument("--phi-min-deg", type=float, default=math.degrees(DEFAULT_PHI_MIN))
    c.set_defaults(func=_cmd_cone)

    r = sub.add_parser("run", help="one trial from a run config")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int, help="override the config's base seed")
    r.add_argument("--trial", type=int, default=0)
    r.add_argument("--trace", help="write particle and sheet frames to this CSV")
    r.add_argument("--out", help=f"output directory (else ${OUTPUT_ENV}, else ./{DEFAULT_OUTPUT})")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("sweep", help="run an experiment preset or a matrix file")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--experiment", type=int, choices=(1, 2, 3))
    g.add_argument("--matrix")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--trials", type=int, help="override the trial count")
    s.add_argument("--out")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=_cmd_sweep)

    e = sub.add_parser("export-plan", help="write the planned tool poses as CSV")
    e.add_argument("--config", required=True)
    e.add_argument("--output", help="CSV path (default <out>/plan.csv)")
    e.add_argument("--out")
    e.set_defaults(func=_cmd_export_plan)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ConeDomainError, PlanningError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
