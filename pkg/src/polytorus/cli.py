"""Command-line entry point.

Exit status: 0 on success, 1 on invalid input, 2 when an experiment's
verdict is FAIL.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import __version__
from .convergence import geometric_weight_sum, root_test
from .dirichlet import DirichletPolynomial, bohr_lift
from .experiments import ExperimentConfig, run_experiment
from .families import FAMILIES, family_series
from .monomial import weight_graded_indices
from .randomizer import RandomModel, draw, randomize
from .rng import SeedStreams
from .series import series_from_json, series_to_json
from .torus import norm_profile, profile_to_csv
from .validation import IndexOverflowError, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_FAIL = 0, 1, 2


def _load_json(text_or_path: str):
    """Parse inline JSON, or read it from a file path."""
    if os.path.isfile(text_or_path):
        with open(text_or_path) as fh:
            return json.load(fh)
    try:
        return json.loads(text_or_path)
    except json.JSONDecodeError:
        raise ValidationError(f"{text_or_path!r} is neither a file nor valid JSON") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _model(text: str | None) -> dict | None:
    if text is None:
        return None
    if text in ("bernoulli", "steinhaus", "gaussian_iid"):
        return {"kind": text}
    obj = _load_json(text)
    RandomModel.from_json(obj)
    return obj


def _require_seed(args) -> int:
    if args.seed is None:
        raise ValidationError("--seed is required for stochastic commands")
    return args.seed


def _series(args):
    if args.input is not None:
        return series_from_json(_load_json(args.input))
    if args.family is not None:
        return family_series(args.family, (args.truncation or ["max_index:100"])[-1])
    raise ValidationError("give a series JSON file or --family")


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _dict_csv(obj: dict) -> str:
    return _rows_csv(("key", "value"), sorted((k, json.dumps(v)) for k, v in obj.items()))


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def cmd_lift(args) -> int:
    if args.input is None:
        raise ValidationError("lift needs a Dirichlet polynomial JSON file or string")
    F = bohr_lift(DirichletPolynomial.from_json(_load_json(args.input)))
    obj = series_to_json(F)
    if args.format == "csv":
        _emit(args, _rows_csv(("n", "re", "im"), obj["coeffs"]))
    else:
        _emit(args, _dump(obj))
    return EXIT_OK


def cmd_norm(args) -> int:
    F = _series(args)
    seed = _require_seed(args)
    ladder = args.ladder if args.command == "profile" else [args.r]
    est = norm_profile(F, args.p, ladder, args.samples or 10_000, SeedStreams(seed))
    if args.format == "csv":
        _emit(args, profile_to_csv(est))
    elif args.command == "norm":
        _emit(args, _dump(est[0].to_json()))
    else:
        _emit(args, _dump([e.to_json() for e in est]))
    return EXIT_OK


def cmd_randomize(args) -> int:
    F = _series(args)
    seed = _require_seed(args)
    model = RandomModel.from_json(_model(args.model) or {"kind": "bernoulli"})
    X = draw(model, int(F.indices[-1]) if len(F) else 1, SeedStreams(seed).spawn("realization"), args.index)
    RF = randomize(F, X)
    obj = {"series": series_to_json(RF), "model": model.to_json(), "seed": seed, "index": args.index}
    if args.format == "csv":
        _emit(args, _rows_csv(("n", "re", "im"), obj["series"]["coeffs"]))
    else:
        _emit(args, _dump(obj))
    return EXIT_OK


def cmd_experiment(args) -> int:
    overrides = {
        "experiment": args.command,
        "seed": args.seed,
        "family": args.family,
        "model": _model(args.model),
        "p": args.p,
        "p_values": args.p_values,
        "r": args.r,
        "ladder": args.ladder,
        "truncations": args.truncation,
        "samples": args.samples,
        "outer": args.outer,
        "inner": args.inner,
        "realizations": args.realizations,
        "T_ladder": args.T_ladder,
        "series": args.input if args.command != "bohr" else None,
        "dirichlet": args.input if args.command == "bohr" else None,
        "format": args.format,
    }
    if args.config:
        config = ExperimentConfig.load(args.config, **overrides)
    else:
        config = ExperimentConfig.from_dict({k: v for k, v in overrides.items() if v is not None})
    report = run_experiment(config)
    _emit(args, report.to_csv() if args.format == "csv" else report.to_json())
    if args.gnuplot:
        with open(args.gnuplot, "w") as fh:
            fh.write(report.to_gnuplot())
    return EXIT_FAIL if report.passed is False else EXIT_OK


def cmd_root_test(args) -> int:
    if args.input is not None:
        data = _load_json(args.input)
        items = data.items() if isinstance(data, dict) else data
        x = {int(n): float(v) for n, v in items}
    elif args.beta is not None:
        W = args.max_weight
        ns, ws = weight_graded_indices(W)
        x = {int(n): args.beta ** int(w) for n, w in zip(ns.tolist(), ws.tolist()) if n > 1}
    else:
        raise ValidationError("root-test needs a JSON map n -> x_n, or --beta with --max-weight")
    report = root_test(x, margin=args.margin)
    obj = report.to_json()
    _emit(args, _dict_csv(obj) if args.format == "csv" else _dump(obj))
    return EXIT_OK


def cmd_identity(args) -> int:
    if args.beta is None:
        raise ValidationError("identity needs --beta")
    report = geometric_weight_sum(args.beta, args.max_weight)
    obj = report.to_json()
    _emit(args, _dict_csv(obj) if args.format == "csv" else _dump(obj))
    return EXIT_OK if report.agrees else EXIT_FAIL


class _Parser(argparse.ArgumentParser):
    # usage errors are invalid input (1); argparse's default 2 means FAIL here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit); required for stochastic commands")
    common.add_argument("--config", help="experiment config JSON; command-line flags override it")
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--samples", type=int, help="torus samples per estimate")
    common.add_argument("--outer", type=int, help="random draws for nested estimates")
    common.add_argument("--inner", type=int, help="torus samples per draw for nested estimates")
    common.add_argument(
        "--truncation",
        action="append",
        help="max_index:N or max_weight:W; repeat to give a truncation ladder",
    )

    parser = _Parser(prog="polytorus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, input_help=None):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        if input_help:
            p.add_argument("input", nargs="?", help=input_help)
        p.set_defaults(func=func)
        return p

    add("lift", cmd_lift, "lift a Dirichlet polynomial to a torus series", "Dirichlet JSON file or string")
    for name, help_ in (("norm", "Monte Carlo p-norm at one radius"), ("profile", "p-norm profile over a radius ladder")):
        p = add(name, cmd_norm, help_, "series JSON file")
        p.add_argument("--family", choices=sorted(FAMILIES))
        p.add_argument("--p", type=float, default=2.0)
        p.add_argument("--r", type=float, default=1.0)
        p.add_argument("--ladder", type=_floats, default=[0.5, 0.7, 0.9, 0.95, 0.99])
    p = add("randomize", cmd_randomize, "multiply coefficients by one random draw", "series JSON file")
    p.add_argument("--family", choices=sorted(FAMILIES))
    p.add_argument("--model", help="bernoulli, steinhaus, gaussian_iid, or a model JSON file/string")
    p.add_argument("--index", type=int, default=0, help="which draw of the realization stream")

    for name, help_, input_help in (
        ("dichotomy", "bounded versus divergent randomized profiles", "series JSON file"),
        ("khintchine", "moment ratios over a probe family", "extra probe series JSON file"),
        ("mean-shift", "deterministic plus centered decomposition", "series JSON file"),
        ("bohr", "time average versus torus mean", "Dirichlet JSON file"),
    ):
        p = add(name, cmd_experiment, help_, input_help)
        p.add_argument("--family", choices=sorted(FAMILIES))
        p.add_argument("--model", help="bernoulli, steinhaus, gaussian_iid, or a model JSON file/string")
        p.add_argument("--p", type=float)
        p.add_argument("--p-values", dest="p_values", type=_floats)
        p.add_argument("--r", type=float)
        p.add_argument("--ladder", type=_floats)
        p.add_argument("--T-ladder", dest="T_ladder", type=_floats)
        p.add_argument("--realizations", type=int)
        p.add_argument("--gnuplot", help="also write profile data for gnuplot here")

    p = add("root-test", cmd_root_test, "weighted root test on a finite window", "JSON map n -> x_n")
    p.add_argument("--beta", type=float, help="test x_n = beta**weight(n) instead of reading a file")
    p.add_argument("--max-weight", dest="max_weight", type=int, default=20)
    p.add_argument("--margin", type=float, default=0.05)
    p = add("identity", cmd_identity, "weight-graded sum against the Euler product")
    p.add_argument("--beta", type=float)
    p.add_argument("--max-weight", dest="max_weight", type=int, default=40)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, IndexOverflowError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
