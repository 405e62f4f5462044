"""Command-line entry points: ``fit``, ``simulate`` and ``schedule``.

Every option can come from a flat ``key = value`` file given by ``--config``;
flags given on the command line override the file.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 an estimate was
still not identifiable at the final step, 5 the input held no observations.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import resource
import sys

import numpy as np

from .config import HYPER_KEYS, Hyperparameters, hyperparameters_from_mapping, read_kv_config
from .engine import AdlEngine
from .errors import ConfigError, DataError
from .glm_family import FAMILY_KINDS
from .simulate import SimConfig, run_study

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_DEGENERATE, EXIT_EMPTY = 0, 2, 3, 4, 5

DEFAULTS = {
    "family": "logistic",
    "j": "",
    "alpha": "0.05",
    "emit_every": "1",
    "seed": "0",
    "input": "-",
    "output": "-",
    "libsvm": "false",
    "p": "",
    "horizon": "1000000",
    "n": "200",
    "s0": "6",
    "rho": "0.5",
    "sigma2": "1.0",
    "replications": "500",
    "checkpoints": "80,140,200",
    "per_category": "3",
    "plugin": "false",
    "trace": "",
    "trace_replications": "1",
    "timing": "false",
    "report_memory": "false",
}


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _int(text, name):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {text!r}") from None


def _float(text, name):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {text!r}") from None


def _int_list(text, name) -> list[int]:
    if isinstance(text, list):
        return [_int(v, name) for v in text]
    return [_int(v, name) for v in str(text).split(",") if v.strip()]


def _add_hyper_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("schedule overrides")
    for key in HYPER_KEYS:
        g.add_argument("--" + key.replace("_", "-"), dest=key, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adlstream", description="Streaming debiased-lasso inference.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="key = value file; flags override it")
        p.add_argument("--family", choices=FAMILY_KINDS, default=None)
        p.add_argument("--alpha", default=None)
        p.add_argument("--seed", default=None)
        _add_hyper_flags(p)

    fit = sub.add_parser("fit", help="stream a data file and emit JSON-lines estimates")
    common(fit)
    fit.add_argument("input", nargs="?", default=None, help="CSV with header, response first ('-' = stdin)")
    fit.add_argument("--j", action="append", default=None, help="tracked 0-based feature index (repeatable)")
    fit.add_argument("--emit-every", dest="emit_every", default=None)
    fit.add_argument("--libsvm", action="store_const", const="true", default=None,
                     help="read sparse 'label idx:value' rows (1-based indices); needs --p")
    fit.add_argument("--p", default=None, help="dimension for --libsvm input")
    fit.add_argument("--horizon", default=None, help="stream length covered by listed epochs")
    fit.add_argument("--output", "-o", default=None)

    sim = sub.add_parser("simulate", help="replication study on AR(1) Gaussian designs")
    common(sim)
    for key in ("n", "p", "s0", "rho", "sigma2", "replications", "checkpoints", "trace"):
        sim.add_argument("--" + key, default=None)
    sim.add_argument("--per-category", dest="per_category", default=None)
    sim.add_argument("--trace-replications", dest="trace_replications", default=None)
    sim.add_argument("--plugin", action="store_const", const="true", default=None,
                     help="also report the first-order plug-in ablation")
    sim.add_argument("--timing", action="store_const", const="true", default=None,
                     help="add a mean wall-time column (makes the CSV non-reproducible)")
    sim.add_argument("--report-memory", dest="report_memory", action="store_const", const="true", default=None)
    sim.add_argument("--output", "-o", default=None)

    sch = sub.add_parser("schedule", help="print the resolved epoch schedules and start indices")
    common(sch)
    sch.add_argument("--n", default=None, help="stream length to list epochs for")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the optional config file and explicit flags (flags win)."""
    values = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            values.update(read_kv_config(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    for key, v in vars(args).items():
        if key in ("config", "command") or v is None:
            continue
        values[key] = v
    return values


def _hyper(values: dict) -> Hyperparameters:
    return hyperparameters_from_mapping({k: v for k, v in values.items() if k in HYPER_KEYS})


# -- input readers ------------------------------------------------------------------------------


def _open_in(path):
    return sys.stdin if path in ("-", "") else open(path, newline="", encoding="utf-8")


def _open_out(path):
    return sys.stdout if path in ("-", "") else open(path, "w", newline="", encoding="utf-8")


def iter_csv_rows(fh):
    """Yield (line number, x, y) one row at a time; the header fixes p."""
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None:
        return
    p = len(header) - 1
    if p < 1:
        raise DataError("header must list the response and at least one feature")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != p + 1:
            raise DataError(f"row {lineno}: expected {p + 1} fields, got {len(row)}")
        try:
            vals = np.array([float(v) for v in row])
        except ValueError:
            raise DataError(f"row {lineno}: non-numeric field") from None
        if not np.all(np.isfinite(vals)):
            raise DataError(f"row {lineno}: non-finite field")
        yield lineno, vals[1:], float(vals[0])


def iter_libsvm_rows(fh, p: int):
    """Yield dense rows from sparse ``label idx:value`` lines (1-based indices)."""
    for lineno, line in enumerate(fh, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            y = float(parts[0])
            x = np.zeros(p)
            pairs = [tok.split(":", 1) for tok in parts[1:]]
            pairs = [(int(idx), float(val)) for idx, val in pairs]
        except ValueError:
            raise DataError(f"line {lineno}: malformed libsvm record") from None
        for idx, val in pairs:
            if not 1 <= idx <= p:
                raise DataError(f"line {lineno}: feature index {idx} outside [1, {p}]")
            x[idx - 1] = float(val)
        if not (math.isfinite(y) and np.all(np.isfinite(x))):
            raise DataError(f"line {lineno}: non-finite field")
        yield lineno, x, y


def _check_response(y: float, family: str, lineno: int) -> float:
    if family == "logistic":
        if y == -1.0:
            return 0.0
        if y not in (0.0, 1.0):
            raise DataError(f"row {lineno}: logistic response must be 0/1 (or -1/+1), got {y}")
    return y


# -- commands -----------------------------------------------------------------------------------


def _record(m, j, est):
    if est is None:
        return {"m": m, "j": j, "point": None, "stderr": None, "ci_low": None, "ci_high": None,
                "status": "not yet identifiable"}
    return est.to_record()


def _emit(out, engine, alpha):
    for k, j in enumerate(engine.targets):
        out.write(json.dumps(_record(engine.m, j, engine.estimate(k, alpha))) + "\n")


def cmd_fit(values: dict, out=None) -> int:
    """Stream rows through the engine, emitting every ``emit_every`` steps after n_l.

    Records are written at m = n_l + k * emit_every (k >= 1) and once more at the
    final observation if that step was not already emitted.
    """
    family = values["family"]
    if family not in FAMILY_KINDS:
        raise ConfigError(f"unknown family {family!r}")
    targets = _int_list(values["j"], "j")
    if not targets:
        raise ConfigError("at least one --j index is required")
    alpha = _float(values["alpha"], "alpha")
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    cadence = _int(values["emit_every"], "emit_every")
    if cadence < 1:
        raise ConfigError("emit_every must be >= 1")
    horizon = _int(values["horizon"], "horizon")
    settings = _hyper(values).engine_settings(horizon)
    libsvm = _bool(values["libsvm"])

    fh = _open_in(values["input"])
    close_out = out is None
    out = out or _open_out(values["output"])
    try:
        if libsvm:
            if not values["p"]:
                raise ConfigError("--libsvm input needs --p")
            rows = iter_libsvm_rows(fh, _int(values["p"], "p"))
        else:
            rows = iter_csv_rows(fh)
        engine, emitted = None, 0
        for lineno, x, y in rows:
            if engine is None:
                engine = AdlEngine(x.size, family, targets, settings)
            y = _check_response(y, family, lineno)
            engine.observe(x, y)
            m = engine.m
            if m > engine.n_l and (m - engine.n_l) % cadence == 0:
                _emit(out, engine, alpha)
                emitted = m
        if engine is None:
            return EXIT_EMPTY
        if emitted != engine.m:
            _emit(out, engine, alpha)
        out.flush()
        if any(e is None for e in engine.estimates(alpha)):
            return EXIT_DEGENERATE
        return EXIT_OK
    finally:
        if fh is not sys.stdin:
            fh.close()
        if close_out and out is not sys.stdout:
            out.close()


def sim_config(values: dict) -> SimConfig:
    return SimConfig(
        n=_int(values["n"], "n"),
        p=_int(values["p"] or 500, "p"),
        s0=_int(values["s0"], "s0"),
        rho=_float(values["rho"], "rho"),
        sigma2=_float(values["sigma2"], "sigma2"),
        family_kind=values["family"],
        replications=_int(values["replications"], "replications"),
        seed=_int(values["seed"], "seed"),
        alpha=_float(values["alpha"], "alpha"),
        checkpoints=tuple(_int_list(values["checkpoints"], "checkpoints")),
        per_category=_int(values["per_category"], "per_category"),
        hyper=_hyper(values),
        plugin=_bool(values["plugin"]),
    )


def peak_rss_bytes() -> int:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def cmd_simulate(values: dict, out=None) -> int:
    config = sim_config(values)
    trace_path = values["trace"]
    trace = open(trace_path, "w", encoding="utf-8") if trace_path else None
    try:
        table = run_study(config, trace, _int(values["trace_replications"], "trace_replications"))
    finally:
        if trace is not None:
            trace.close()
    text = table.to_csv(include_timing=_bool(values["timing"]))
    if out is None:
        with _open_out(values["output"]) as fh:
            fh.write(text)
    else:
        out.write(text)
    print(f"replications={config.replications} failures={table.failures} "
          f"mean_wall_time={table.mean_wall_time:.3f}s", file=sys.stderr)
    if _bool(values["report_memory"]):
        scalars = table.max_state_scalars
        print(f"state_scalars={scalars} per_p={scalars / config.p:.2f} "
              f"peak_rss_mb={peak_rss_bytes() / 2**20:.1f}", file=sys.stderr)
    return EXIT_OK


def schedule_text(values: dict) -> str:
    hyper = _hyper(values)
    n = _int(values["n"], "n")
    settings = hyper.engine_settings(n)
    lasso, node = settings.lasso_schedule, settings.nodewise_schedule
    n_l = AdlEngine(1, "gaussian", [0], settings).n_l
    lines = ["lasso epochs (k, T_k, lambda_k, R_k, n_k):"]
    for k, (t, lam, r, b) in enumerate(zip(lasso.epoch_lengths, lasso.lambdas, lasso.radii, lasso.boundaries()), 1):
        lines.append(f"  {k:3d} {t:8d} {lam:.6g} {r:.6g} {b}")
    lines.append(f"nodewise epochs (start {node.start}; k, T'_k, lambda'_k, R'_k, n'_k):")
    for k, (t, lam, r, b) in enumerate(zip(node.epoch_lengths, node.lambdas, node.radii, node.boundaries()), 1):
        lines.append(f"  {k:3d} {t:8d} {lam:.6g} {r:.6g} {b}")
    lines.append(f"prox strength {settings.strength:g} (nodewise {settings.nodewise_strength:g}), "
                 f"epoch output {settings.epoch_output}")
    lines.append(f"n_1 = {lasso.boundary(0)}")
    lines.append(f"n'_1 = {node.boundary(0)}")
    lines.append(f"n_l = {n_l}")
    return "\n".join(lines) + "\n"


def cmd_schedule(values: dict, out=None) -> int:
    (out or sys.stdout).write(schedule_text(values))
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "schedule": cmd_schedule}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        values = resolve(args)
        return COMMANDS[args.command](values)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
