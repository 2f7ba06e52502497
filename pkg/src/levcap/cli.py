"""levcap command line: solve | value | two-stage | sweep | validate."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys

import numpy as np

from . import valuation as val
from .config import ConfigError, RunConfig, load_config
from .levy_model import LevyModelError
from .mc_oracle import simulate_functionals
from .solver import (
    SolverError,
    SWEEP_COLUMNS,
    find_root_K1,
    solve_bankruptcy_level,
    solve_two_stage,
    sweep_scale_effects,
)

SCHEMA = "levcap/1"
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VALIDATION = 0, 2, 3, 4

log = logging.getLogger("levcap")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return f"{float(v):.12g}"


def write_csv(rows: list[dict], columns, out: str | None, stream=None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    text = buf.getvalue()
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        (stream or sys.stdout).write(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def emit_json(obj: dict) -> None:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        if isinstance(v, dict):
            return {k: clean(u) for k, u in v.items()}
        if isinstance(v, list):
            return [clean(u) for u in v]
        return v

    sys.stdout.write(json.dumps(clean({"schema": SCHEMA, **obj}), default=_json_default, sort_keys=False) + "\n")


def parse_range(text: str) -> np.ndarray:
    try:
        lo, hi, steps = text.split(":")
        lo, hi, n = float(lo), float(hi), int(steps)
    except ValueError:
        raise ConfigError(f"--range: expected lo:hi:steps, got {text!r}") from None
    if n < 1:
        raise ConfigError("--range: steps must be >= 1")
    return np.linspace(lo, hi, n) if n > 1 else np.array([lo])


def _P_grid(cfg: RunConfig) -> np.ndarray:
    lo, hi, step = cfg.P_grid
    return np.arange(lo, hi + 0.5 * step, step)


# ---------------------------------------------------------------- commands


def cmd_solve(cfg: RunConfig, args) -> int:
    inst = cfg.instance()
    res = solve_bankruptcy_level(inst, cfg.x)
    v = res.values
    emit_json(
        {
            "command": "solve",
            "P": inst.debt.P,
            "V0": cfg.V0,
            "B_star": res.B_star,
            "bankruptcy_asset_level": res.bankruptcy_asset_level,
            "K1_residual": res.K1_residual,
            "optimality_flag": res.status,
            "conditions": {
                "K1_monotone_on_grid": res.K1_monotone_on_grid,
                "K2_nonneg_above_root": res.K2_nonneg_above_root,
            },
            "equity": v.equity,
            "debt": v.debt,
            "firm": v.firm,
        }
    )
    if args.out and res.B_star is not None:
        grid = np.linspace(res.B_star - 5.0, res.B_star + 5.0, 201)
        rows = [{"B": B, "K1": val.K1(inst, B), "K2": val.K2(inst, B)} for B in grid]
        write_csv(rows, ("B", "K1", "K2"), args.out)
    return EXIT_OK


def value_rows(cfg: RunConfig, inst, B_levels) -> list[dict]:
    rows = []
    for B in B_levels:
        if not math.exp(B) < cfg.value_V_max:
            continue
        V_grid = np.exp(np.linspace(B, math.log(cfg.value_V_max), cfg.value_points + 1)[1:])
        for V0 in V_grid:
            x = math.log(V0)
            if not x > B:
                continue
            rows.append(
                {
                    "B": B,
                    "V0": V0,
                    "equity": val.equity(inst, x, B),
                    "debt": val.debt(inst, x, B),
                    "firm": val.firm(inst, x, B),
                }
            )
    return rows


def cmd_value(cfg: RunConfig, args) -> int:
    inst = cfg.instance()
    if args.B is not None or cfg.value_B is not None:
        levels = [args.B if args.B is not None else cfg.value_B]
    else:
        if inst.debt.P == 0:
            raise ConfigError("value: P = 0 has no bankruptcy level; give --B")
        B_star = find_root_K1(inst, center=cfg.x)
        levels = [B_star + off for off in cfg.value_offsets]
    write_csv(value_rows(cfg, inst, levels), ("B", "V0", "equity", "debt", "firm"), args.out)
    return EXIT_OK


def cmd_two_stage(cfg: RunConfig, args) -> int:
    inst = cfg.instance()
    res = solve_two_stage(inst, cfg.x, _P_grid(cfg))
    emit_json(
        {
            "command": "two-stage",
            "V0": cfg.V0,
            "P_star": res.P_star,
            "B_star": res.B_star_at_P_star,
            "firm": res.firm_value,
            "equity": res.equity_value,
            "debt": res.debt_value,
            "failures": [{"P": P, "error": e} for P, e in res.failures],
        }
    )
    if args.out:
        rows = [{"P": P, "B_star": B, "firm": V} for P, B, V in res.sweep]
        write_csv(rows, ("P", "B_star", "firm"), args.out)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    if args.knob is None or args.range is None:
        raise ConfigError("sweep: --knob and --range are required")
    values = parse_range(args.range)
    threads = int(os.environ.get("LEVCAP_THREADS", "0") or 0)
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    rows = sweep_scale_effects(
        cfg.instance(), cfg.x, args.knob, values, mode=args.mode, P_grid=_P_grid(cfg), workers=workers
    )
    for row in rows:
        if "error" in row:
            log.warning("sweep point %s=%g failed: %s", args.knob, row["knob"], row["error"])
    write_csv(rows, SWEEP_COLUMNS + ("error",), args.out)
    return EXIT_OK


def closed_form_functionals(inst, x: float, B: float) -> dict[str, float]:
    r, rm = inst.market.r, inst.market.r + inst.debt.m
    return {
        "Lambda_r": val.lambda_fn(inst, r, x, B),
        "Lambda_rm": val.lambda_fn(inst, rm, x, B),
        "M1_rm": val.M_fn(inst, rm, 1, x, B),
        "M2_r": val.M_fn(inst, r, 2, x, B),
        "Gamma_term": val.gamma_term(inst, x, B),
        "Equity": val.equity(inst, x, B),
        "Debt": val.debt(inst, x, B),
        "Firm": val.firm(inst, x, B),
    }


def cmd_validate(cfg: RunConfig, args, z_max: float = 3.0) -> int:
    inst = cfg.instance()
    mc_cfg = cfg.mc
    if args.seed is not None:
        mc_cfg = dataclasses.replace(mc_cfg, seed=args.seed)
    if args.paths is not None:
        mc_cfg = dataclasses.replace(mc_cfg, n_paths=args.paths)
    B = cfg.validate_B
    if B is None:
        B = find_root_K1(inst, center=cfg.x)
    x = cfg.x
    closed = closed_form_functionals(inst, x, B)
    mc = simulate_functionals(inst, x, B, mc_cfg)
    report, failed = {}, []
    for name, cf in closed.items():
        est = mc[name]
        z = est.z_score(cf)
        ok = abs(z) <= z_max
        if not ok:
            failed.append(name)
        report[name] = {"closed_form": cf, "mc_mean": est.mean, "mc_std_error": est.std_error, "z": z, "pass": ok}
    emit_json(
        {
            "command": "validate",
            "V0": cfg.V0,
            "B": B,
            "mc": dataclasses.asdict(mc_cfg),
            "functionals": report,
            "failed": failed,
            "status": "FAIL" if failed else "PASS",
        }
    )
    if failed:
        sys.stderr.write(f"validation failed for: {', '.join(failed)}\n")
        return EXIT_VALIDATION
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "value": cmd_value,
    "two-stage": cmd_two_stage,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levcap", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON config path or bundled fixture name (default: $LEVCAP_CONFIG)")
    p.add_argument("--out", help="CSV output path (default: stdout for CSV-only commands)")
    p.add_argument("--seed", type=int, help="Monte Carlo seed override")
    p.add_argument("--paths", type=int, help="Monte Carlo path count override")
    p.add_argument("--P", type=float, help="face value override")
    p.add_argument("--B", type=float, help="bankruptcy level (log asset) for `value`")
    p.add_argument("--V0", type=float, help="initial asset value override")
    p.add_argument("--knob", choices=("a", "c"), help="sweep parameter")
    p.add_argument("--range", help="sweep values lo:hi:steps")
    p.add_argument("--mode", choices=("fixed_P", "two_stage"), default="fixed_P")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.P is not None:
            if args.P < 0:
                raise ConfigError("--P: must be >= 0")
            cfg.debt = val.DebtSpec(P=args.P, m=cfg.debt.m)
        if args.V0 is not None:
            if not args.V0 > 0:
                raise ConfigError("--V0: must be > 0")
            cfg.V0 = args.V0
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except (SolverError, LevyModelError) as exc:
        sys.stderr.write(f"solver error: {exc}\n")
        return EXIT_SOLVER


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
