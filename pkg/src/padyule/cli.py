"""Command-line interface.

Every command writes one CSV table or one JSON document to ``--out`` (or
stdout).  Failures print a single JSON object ``{"code", "message"}`` to
stderr and exit nonzero: 2 for invalid arguments, 1 otherwise.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__
from . import analysis, graph_process, limit_dist, yule_process
from .errors import DomainError, PadyuleError
from .params import ModelParams

EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(PadyuleError, ValueError):
    code = "usage_error"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(x: float) -> str:
    """CSV number: 17 significant digits, so the value round-trips exactly."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".17g")


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
    return v


def _dump_json(doc) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _params(args) -> ModelParams:
    return ModelParams(args.lambda1, args.lambda2, args.mu2)


def _nonneg_int(name, value):
    if value is None:
        return None
    if value < 0:
        raise DomainError(f"--{name} must be >= 0, got {value}")
    return value


def _positive_int(name, value):
    if value is None:
        return None
    if value < 1:
        raise DomainError(f"--{name} must be >= 1, got {value}")
    return value


# command handlers return the text to write


def cmd_pmf(args) -> str:
    p = _params(args)
    _positive_int("jmax", args.jmax)
    if not args.tol > 0:
        raise DomainError("--tol must be positive")
    pmf = limit_dist.limit_pmf(p, args.jmax, tol=args.tol)
    if args.format == "json":
        return _dump_json({
            "params": p.as_dict(),
            "regime": p.regime.value,
            "j_max": pmf.j_max,
            "tail_mass": pmf.tail_mass,
            "p": pmf.values.tolist(),
        })
    return _csv_text(["j", "p_j"], pmf.rows())


def cmd_tail(args) -> str:
    p = _params(args)
    _positive_int("jmax", args.jmax)
    asym = limit_dist.tail_asymptotic(p)
    doc = {
        "params": p.as_dict(),
        "regime": p.regime.value,
        "constant": asym.constant,
        "log_constant": asym.log_constant,
        "power_exponent": asym.power_exponent,
        "geometric_ratio": asym.geometric_ratio,
    }
    if args.jmax is not None:
        doc["j_max"] = args.jmax
        doc["tail_mass_bound"] = limit_dist.tail_mass(p, args.jmax)
    if args.format == "csv":
        keys = sorted(k for k in doc if k not in ("params", "regime"))
        return _csv_text(keys, [[doc[k] for k in keys]])
    return _dump_json(doc)


def cmd_moments(args) -> str:
    p = _params(args)
    doc = {
        "params": p.as_dict(),
        "regime": p.regime.value,
        "mean": limit_dist.expectation(p),
        "variance": limit_dist.variance(p),
    }
    if args.summed:
        m, v = limit_dist.summed_moments(p)
        doc["summed_mean"] = m
        doc["summed_variance"] = v
    if args.format == "csv":
        keys = ["mean", "variance"] + (["summed_mean", "summed_variance"] if args.summed else [])
        return _csv_text(keys, [[doc[k] for k in keys]])
    return _dump_json(doc)


def _write_side(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def cmd_simulate(args) -> str:
    p = _params(args)
    _nonneg_int("steps", args.steps)
    _positive_int("runs", args.runs)
    if args.events and args.runs != 1:
        raise DomainError("--events needs --runs 1")
    if args.runs == 1:
        res = graph_process.simulate(p, args.steps, args.seed, record_events=bool(args.events))
        if args.events:
            buf = io.StringIO()
            graph_process.write_event_log(res.events, buf)
            _write_side(args.events, buf.getvalue())
        masses = graph_process.empirical_distribution(res.state).masses()
        extra = {"num_vertices": res.state.num_vertices, "total_degree": res.state.total_degree}
    else:
        spec = analysis.EnsembleSpec(p, args.steps, args.runs, args.seed)
        ens = analysis.ensemble_degree_distribution(spec, workers=args.workers)
        masses = ens.masses
        extra = {"num_runs": args.runs}
    if args.format == "json":
        return _dump_json({"params": p.as_dict(), "steps": args.steps, "seed": args.seed,
                           "mass": masses.tolist(), **extra})
    return _csv_text(["j", "mass"], enumerate(masses.tolist()))


def cmd_yule(args) -> str:
    p = _params(args)
    _positive_int("censuses", args.censuses)
    log = yule_process.simulate_censuses(p, args.censuses, args.seed)
    if args.format == "json":
        final = log.state_at(len(log) - 1)
        return _dump_json({
            "params": p.as_dict(),
            "censuses": args.censuses,
            "seed": args.seed,
            "clock": final.clock,
            "num_households": final.num_households,
            "population": final.population,
            "sizes": final.sizes.tolist(),
            "formation_times": log.formation_times.tolist(),
        })
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["census_index", "clock", "kind", "household"])
    for e, clock in zip(log.events(), log.clocks.tolist()):
        w.writerow([e.step, fmt(clock), e.kind.value, e.vertex])
    return buf.getvalue()


def cmd_verify_embedding(args) -> str:
    p = _params(args)
    _nonneg_int("t", args.t)
    if args.samples < analysis.MIN_EMBEDDING_SAMPLES:
        raise DomainError(
            f"--samples must be >= {analysis.MIN_EMBEDDING_SAMPLES}, got {args.samples}"
        )
    yule_params = None
    if any(v is not None for v in (args.yule_lambda1, args.yule_lambda2, args.yule_mu2)):
        yule_params = ModelParams(
            p.lambda1 if args.yule_lambda1 is None else args.yule_lambda1,
            p.lambda2 if args.yule_lambda2 is None else args.yule_lambda2,
            p.mu2 if args.yule_mu2 is None else args.yule_mu2,
        )
    rep = analysis.embedding_equivalence_test(p, args.t, args.samples, args.seed,
                                              yule_params=yule_params)
    doc = {"params": p.as_dict(), "t": args.t, "samples": args.samples, "seed": args.seed,
           "report": rep.to_dict()}
    if yule_params is not None:
        doc["yule_params"] = yule_params.as_dict()
    return _dump_json(doc)


def _read_masses(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["j", "mass"]:
        raise DomainError(f"{path}: expected a CSV with header j,mass")
    pairs = [(int(r[0]), float(r[1])) for r in rows[1:] if r]
    if not pairs or any(j < 0 for j, _ in pairs):
        raise DomainError(f"{path}: no valid rows")
    out = np.zeros(max(j for j, _ in pairs) + 1)
    for j, m in pairs:
        out[j] = m
    return out


def cmd_compare(args) -> str:
    p = _params(args)
    pmf = limit_dist.limit_pmf(p, args.jmax)
    if args.input:
        other = _read_masses(args.input)
        source = {"input": args.input}
    else:
        _nonneg_int("steps", args.steps)
        _positive_int("runs", args.runs)
        spec = analysis.EnsembleSpec(p, args.steps, args.runs, args.seed)
        other = analysis.ensemble_degree_distribution(spec, workers=args.workers)
        source = {"steps": args.steps, "runs": args.runs, "seed": args.seed}
    rep = analysis.compare_distributions(other, pmf, tv_threshold=args.tv_threshold)
    return _dump_json({"params": p.as_dict(), "j_max": pmf.j_max, **source,
                       "report": rep.to_dict()})


def cmd_critical_decay(args) -> str:
    p = _params(args)
    jmax = _positive_int("jmax", args.jmax)
    kmin = args.kmin
    if kmin < 0 or 2 ** kmin > jmax:
        raise DomainError("--kmin must satisfy 0 <= kmin and 2**kmin <= jmax")
    grid = [2 ** k for k in range(kmin, int(math.log2(jmax)) + 1)]
    recs = limit_dist.evaluate_critical_decay(p, grid, m=args.m, eps=args.eps)
    if args.format == "json":
        return _dump_json({
            "params": p.as_dict(), "m": args.m, "eps": args.eps,
            "records": [{"j": r.j, "power_scaled": r.power_scaled,
                         "exp_scaled": r.exp_scaled, "log_p": r.log_p} for r in recs],
        })
    return _csv_text(["j", "power_scaled", "exp_scaled", "log_p"],
                     [(r.j, r.power_scaled, r.exp_scaled, r.log_p) for r in recs])


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("model and output")
    g.add_argument("--lambda1", type=float, default=1.0, help="vertex formation rate (default 1)")
    g.add_argument("--lambda2", type=float, default=1.0, help="attachment rate (default 1)")
    g.add_argument("--mu2", type=float, default=0.0, help="detachment rate (default 0)")
    g.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    g.add_argument("--out", help="output file (default stdout)")

    def fmt_arg(sp, default, choices=("csv", "json")):
        sp.add_argument("--format", choices=choices, default=default,
                        help=f"output format (default {default})")

    parser = _Parser(prog="padyule", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("pmf", parents=[common], help="limit degree distribution")
    fmt_arg(sp, "csv")
    sp.add_argument("--jmax", type=int, help="truncation index (default: certified by --tol)")
    sp.add_argument("--tol", type=float, default=1e-6, help="tail mass target (default 1e-6)")
    sp.set_defaults(func=cmd_pmf)

    sp = sub.add_parser("tail", parents=[common], help="tail asymptote constants")
    fmt_arg(sp, "json")
    sp.add_argument("--jmax", type=int, help="also report the tail bound beyond this index")
    sp.set_defaults(func=cmd_tail)

    sp = sub.add_parser("moments", parents=[common], help="mean and variance of the limit law")
    fmt_arg(sp, "json")
    sp.add_argument("--summed", action="store_true", help="add moments summed from the pmf")
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("simulate", parents=[common], help="simulate the degree chain")
    fmt_arg(sp, "csv")
    sp.add_argument("--steps", type=int, default=1000, help="steps per run (default 1000)")
    sp.add_argument("--runs", type=int, default=1, help="runs averaged (default 1)")
    sp.add_argument("--workers", type=int, default=1, help="threads for ensembles (default 1)")
    sp.add_argument("--events", help="write the step,kind,vertex event log here (single run)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("yule", parents=[common], help="simulate the household model")
    fmt_arg(sp, "csv")
    sp.add_argument("--censuses", type=int, default=1000, help="number of events (default 1000)")
    sp.set_defaults(func=cmd_yule)

    sp = sub.add_parser("verify-embedding", parents=[common],
                        help="two-sample test of graph degrees against household sizes")
    fmt_arg(sp, "json", ("json",))
    sp.add_argument("--t", type=int, default=500, help="step / census index (default 500)")
    sp.add_argument("--samples", type=int, default=20000, help="draws per side (default 20000)")
    sp.add_argument("--yule-lambda1", type=float, help="household-side override (negative control)")
    sp.add_argument("--yule-lambda2", type=float, help="household-side override (negative control)")
    sp.add_argument("--yule-mu2", type=float, help="household-side override (negative control)")
    sp.set_defaults(func=cmd_verify_embedding)

    sp = sub.add_parser("compare", parents=[common],
                        help="distance between an ensemble (or a j,mass CSV) and the limit law")
    fmt_arg(sp, "json", ("json",))
    sp.add_argument("--input", help="CSV with header j,mass to compare instead of simulating")
    sp.add_argument("--steps", type=int, default=1000, help="steps per run (default 1000)")
    sp.add_argument("--runs", type=int, default=100, help="runs averaged (default 100)")
    sp.add_argument("--workers", type=int, default=1, help="threads for ensembles (default 1)")
    sp.add_argument("--jmax", type=int, help="limit law truncation (default: certified)")
    sp.add_argument("--tv-threshold", type=float, default=0.05,
                    help="total variation budget for the verdict (default 0.05)")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("critical-decay", parents=[common],
                        help="j^m p_j and exp(eps j) p_j on powers of two (critical regime)")
    fmt_arg(sp, "csv")
    sp.add_argument("--jmax", type=int, default=8192, help="largest grid point (default 8192)")
    sp.add_argument("--kmin", type=int, default=7, help="smallest exponent of two (default 7)")
    sp.add_argument("--m", type=float, default=3.0, help="power (default 3)")
    sp.add_argument("--eps", type=float, default=0.05, help="exponential rate (default 0.05)")
    sp.set_defaults(func=cmd_critical_decay)
    return parser


def _emit_error(exc: PadyuleError) -> None:
    sys.stderr.write(json.dumps({"code": exc.code, "message": str(exc)}, sort_keys=True) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.seed < 0:
            raise DomainError(f"--seed must be >= 0, got {args.seed}")
        text = args.func(args)
        if args.out:
            _write_side(args.out, text)
        else:
            sys.stdout.write(text)
    except UsageError as exc:
        _emit_error(exc)
        return EXIT_USAGE
    except PadyuleError as exc:
        _emit_error(exc)
        return EXIT_FAILURE
    except (OSError, ValueError) as exc:
        sys.stderr.write(json.dumps({"code": "invalid_input", "message": str(exc)},
                                    sort_keys=True) + "\n")
        return EXIT_FAILURE
    return 0


if __name__ == "__main__":
    sys.exit(main())
