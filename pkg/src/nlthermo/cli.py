"""Command line interface.

    nlthermo SUBCOMMAND --config PATH [--out PATH] [options]

Records are written as one JSON object per line, grids as CSV.  Floats are
rounded to 12 significant digits so identical configs give byte-identical
output.  Exit codes: 0 success, 2 config error, 3 numeric or domain error,
4 cap exceeded.
"""

import argparse
import contextlib
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .cohomology import periodic_obstruction_test
from .config import read_config
from .exceptions import ConfigError, NLTError
from .nonlinear import Objective, default_resolution, direct_estimate, find_maximizers
from .pressure import family_pressure
from .spectrum import SpectrumTable, rotation_set


def _round(x):
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, np.ndarray):
        return _round(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(f"{x:.12g}") if math.isfinite(x) else None
    return x


def _record(obj):
    return json.dumps(_round(obj)) + "\n"


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _task(cfg, args, key, default=None):
    val = getattr(args, key, None)
    return val if val is not None else cfg.task.get(key, default)


def _resolution(cfg, args):
    return _task(cfg, args, "resolution") or default_resolution(cfg.family.d)


@contextlib.contextmanager
def _caps(cfg):
    """Expose config caps through the environment for the duration of one command."""
    saved = {}
    for key, var in (("cap_words", "NLP_CAP_WORDS"), ("cap_states", "NLP_CAP_STATES")):
        if key in cfg.task:
            saved[var] = os.environ.get(var)
            os.environ[var] = str(cfg.task[key])
    try:
        yield
    finally:
        for var, old in saved.items():
            if old is None:
                os.environ.pop(var, None)
            else:
                os.environ[var] = old


def cmd_pressure(cfg, args):
    q = cfg.task.get("q")
    if q is None:
        if cfg.family.d != 1:
            raise ConfigError("field task/q: needed to combine more than one potential")
        q = [1.0]
    if len(q) != cfg.family.d:
        raise ConfigError(f"field task/q: expected {cfg.family.d} coefficients")
    return _record({"pressure": family_pressure(cfg.family, q) / math.log(cfg.log_base)})


def cmd_rotation_set(cfg, args):
    return _record(rotation_set(cfg.system, cfg.family).as_dict())


def cmd_spectrum(cfg, args):
    d = cfg.family.d
    table = SpectrumTable(cfg.system, cfg.family, _resolution(cfg, args))
    scale = math.log(cfg.log_base)
    zs = [f"z{i}" for i in range(1, d + 1)] if d > 1 else ["z"]
    qs = [f"q{i}" for i in range(1, d + 1)] if d > 1 else ["q"]
    rows = [[*p.z, p.h / scale, *p.q, p.boundary_flag] for p in table.points]
    return _csv([*zs, "h", *qs, "boundary_flag"], rows)


def cmd_nlpressure(cfg, args):
    f, params = cfg.expression()
    mode = _task(cfg, args, "mode", "both")
    out = {"mode": mode}
    if mode in ("direct", "both"):
        n_max = _task(cfg, args, "n_max", 12)
        threads = _task(cfg, args, "threads", 1)
        est = direct_estimate(cfg.system, cfg.family, f, n_max, params, cfg.log_base, threads=threads)
        out["direct"] = est.as_dict()
    if mode in ("variational", "both"):
        rep = find_maximizers(cfg.system, cfg.family, f, _resolution(cfg, args), params, cfg.log_base)
        out["variational"] = rep.variational_value
    if mode == "both":
        out["gap"] = abs(est.last - out["variational"])
    return _record(out)


def cmd_equilibria(cfg, args):
    f, params = cfg.expression()
    rep = find_maximizers(cfg.system, cfg.family, f, _resolution(cfg, args), params, cfg.log_base)
    return _record(rep.as_dict())


def cmd_cohomology(cfg, args):
    i, j = cfg.task.get("pair", [0, 1])
    if max(i, j) >= cfg.family.d:
        raise ConfigError("field task/pair: refers to a missing potential")
    depth = cfg.family.depth
    max_period = cfg.task.get("max_period", max(12, 2 * depth))
    verdict = periodic_obstruction_test(cfg.system, cfg.family[i], cfg.family[j], max_period)
    return _record(verdict.as_dict())


def cmd_emit_plot(cfg, args):
    f, params = cfg.expression()
    d = cfg.family.d
    table = SpectrumTable(cfg.system, cfg.family, _resolution(cfg, args))
    obj = Objective(table, f, params, cfg.log_base)
    hb = table.h / obj.scale
    fv = f.evaluate(table.z, params, hb if f.uses_h else None)
    zs = [f"z{i}" for i in range(1, d + 1)] if d > 1 else ["z"]
    rows = [[*z, h, fz, h + fz] for z, h, fz in zip(table.z.tolist(), hb, fv)]
    return _csv([*zs, "h", "F", "E"], rows)


COMMANDS = {
    "pressure": cmd_pressure,
    "spectrum": cmd_spectrum,
    "rotation-set": cmd_rotation_set,
    "nlpressure": cmd_nlpressure,
    "equilibria": cmd_equilibria,
    "cohomology": cmd_cohomology,
    "emit-plot": cmd_emit_plot,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="nlthermo", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="config file (or name of a bundled config)")
    parser.add_argument("--out", help="write output here instead of stdout")
    parser.add_argument("--mode", choices=["direct", "variational", "both"])
    parser.add_argument("--threads", type=int)
    parser.add_argument("--resolution", type=int)
    parser.add_argument("--n-max", dest="n_max", type=int)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = read_config(args.config)
        with _caps(cfg):
            text = COMMANDS[args.command](cfg, args)
    except NLTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
