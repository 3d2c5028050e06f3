"""Command-line driver: solve, reduce, certify, check-arith and corpus."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

import mpmath

from .analyzer import bruno_check, certify, diophantine_check, siegel_check
from .dsl import Document, _Scope, parse_document, parse_expression
from .errors import ComputationError, GSeriesError, ValidationError
from .lattice import certify as certify_lattice
from .numbers import from_json, is_exact, to_json, to_mpc, to_mpf, working_precision
from .series import INF, GSeries
from .solver import reduce_equation, solve, solve_boettcher, solve_schroeder, solve_taylor

EXIT_OK, EXIT_VALIDATION, EXIT_COMPUTATION, EXIT_MISMATCH = 0, 1, 2, 3
DEFAULT_TOLERANCE = "1e-30"


@dataclass
class RunConfig:
    precision_bits: int = 192
    depth: int = 6
    trunc_re: object = None
    scan_bound: int = 40
    sector_center: object = 0
    output_path: str | None = None

    def __post_init__(self):
        if self.precision_bits < 64:
            raise ValidationError("precision must be at least 64 bits")
        if self.depth < 1:
            raise ValidationError("depth must be at least 1")


# ----------------------------------------------------------------------------
# tasks shared by the subcommands and the corpus runner


def solve_document(doc: Document, depth: int):
    if doc.equation is None:
        raise ValidationError("the document has no equation")
    if not doc.lattice:
        init = {k[0]: v for k, v in doc.init.items()} or None
        return solve_taylor(doc.equation, depth, init)
    sg = certify_lattice(doc.lattice)
    if not doc.init:
        raise ValidationError("a lattice solve needs init lines for the leading coefficients")
    return solve(doc.equation, sg, doc.init, depth)


def _clip(phi: GSeries, trunc_re):
    if trunc_re is None:
        return phi
    bound = Fraction(trunc_re) if phi.sg.exact else to_mpf(trunc_re)
    terms = {m: c for m, c in phi.terms.items() if phi.sg.re_value(m) <= bound}
    limit = bound if phi.trunc_re == INF else min(phi.trunc_re, bound)
    return GSeries(phi.sg, terms, limit, phi.trunc_deg)


def _coefficients(phi: GSeries) -> dict:
    return {",".join(map(str, m)): to_json(c) for m, c in phi.items()}


def task_solve(doc, config, options):
    phi, transcript = solve_document(doc, options.get("depth", config.depth))
    phi = _clip(phi, config.trunc_re)
    report = {"series": phi.to_json(), "transcript": transcript.to_json()}
    return report, {"coefficients": _coefficients(phi)}


def task_reduce(doc, config, options):
    phi, _ = solve_document(doc, options.get("prefix", config.depth))
    red = reduce_equation(doc.equation, phi, options.get("N"))
    return red.to_json(), {"N": red.N, "L": [to_json(a) for a in red.L]}


def task_certify(doc, config, options):
    depth = options.get("depth", config.depth)
    phi, _ = solve_document(doc, options.get("prefix", depth))
    cert = certify(doc.equation, phi, depth=depth, scan_bound=options.get("scan_bound", config.scan_bound))
    out = cert.to_json()
    return out, {"theorem": cert.theorem, "verdict": cert.verdict, "reason": cert.reason}


def _conjugator(doc, config, options, kind):
    if doc.germ is None:
        raise ValidationError(f"{kind} needs a map line")
    depth = options.get("depth", config.depth)
    if kind == "schroeder":
        y, transcript = solve_schroeder(doc.germ, depth)
    else:
        ell = options.get("ell", doc.names.get("ell"))
        if ell is None:
            raise ValidationError("boettcher needs ell")
        y, transcript = solve_boettcher(doc.germ, int(ell), depth)
    report = {"series": y.to_json(), "transcript": transcript.to_json()}
    return report, {"coefficients": _coefficients(y)}


def _arith_facts(report):
    facts = {"verdict": report.verdict}
    if report.witness:
        for key in ("m_vector", "m", "k", "j", "q_j"):
            if key in report.witness:
                facts[f"witness.{key}"] = report.witness[key]
    if report.fitted:
        facts["fitted.gamma"] = str(report.fitted["gamma"])
    return report.to_json(), facts


def _scalar_option(options, names, key, default=None):
    if key not in options:
        return default
    value = options[key]
    return _Scope(names).scalar(parse_expression(str(value))) if isinstance(value, str) else Fraction(value)


def task_siegel(doc, config, options):
    names = doc.names
    q = _rotation(names, options)
    report = siegel_check(q, _scalar_option(options, names, "c", Fraction(1)),
                          _scalar_option(options, names, "nu", Fraction(1)),
                          options.get("bound", 10_000))
    return _arith_facts(report)


def _rotation(names, options):
    if "q" in options or "q" in names:
        return _scalar_option(options, names, "q") if "q" in options else names["q"]
    if "omega" in options or "omega" in names:
        omega = _scalar_option(options, names, "omega") if "omega" in options else names["omega"]
        return mpmath.expj(2 * mpmath.pi * to_mpf(mpmath.re(to_mpc(omega))))
    raise ValidationError("give q or omega")


def task_bruno(doc, config, options):
    names = doc.names
    omega = _scalar_option(options, names, "omega") if "omega" in options else names.get("omega")
    if omega is None:
        raise ValidationError("bruno needs omega")
    if not is_exact(omega):
        omega = mpmath.re(to_mpc(omega))
    return _arith_facts(bruno_check(omega, options.get("depth", 40)))


def task_diophantine(doc, config, options):
    names = doc.names
    if not doc.lattice:
        raise ValidationError("diophantine needs a lattice line")
    sg = certify_lattice(doc.lattice)
    q = _scalar_option(options, names, "q") if "q" in options else names.get("q")
    if q is None:
        raise ValidationError("diophantine needs q")
    roots = [names[r] for r in str(options.get("roots", "")).split(",") if r]
    c = _scalar_option(options, names, "c")
    gamma = _scalar_option(options, names, "gamma")
    report = diophantine_check(sg, q, roots, c, gamma, options.get("bound", config.scan_bound),
                               shift=_scalar_option(options, names, "shift", 0),
                               unit_root=str(options.get("unit_root", "yes")) != "no",
                               start=options.get("start", 1))
    return _arith_facts(report)


TASKS = {
    "solve": task_solve,
    "reduce": task_reduce,
    "certify": task_certify,
    "schroeder": lambda d, c, o: _conjugator(d, c, o, "schroeder"),
    "boettcher": lambda d, c, o: _conjugator(d, c, o, "boettcher"),
    "siegel": task_siegel,
    "bruno": task_bruno,
    "diophantine": task_diophantine,
}


def run_task(doc: Document, config: RunConfig, task: str | None = None, options: dict | None = None):
    name = task or doc.task
    if name not in TASKS:
        raise ValidationError(f"unknown task {name!r}")
    opts = dict(doc.options if task in (None, doc.task) else {})
    opts.update(options or {})
    with working_precision(config.precision_bits):
        return TASKS[name](doc, config, opts)


# ----------------------------------------------------------------------------
# corpus


def corpus_dir() -> Path:
    return Path(str(resources.files("gpseries") / "corpus"))


def corpus_entries(directory: Path | None = None) -> list:
    directory = directory or corpus_dir()
    return sorted(directory.glob("*.eq"))


def _close(actual: dict, expected: dict, tol) -> bool:
    a, e = from_json(actual), from_json(expected)
    if is_exact(a) and is_exact(e):
        return a == e
    return abs(to_mpc(a) - to_mpc(e)) <= tol * max(1, abs(to_mpc(e)))


def compare_facts(facts: dict, expect: dict, tol) -> list:
    """Mismatch descriptions; empty when every expected fact holds."""
    problems = []
    for key, want in expect.items():
        if key == "coefficients":
            have = facts.get("coefficients", {})
            for m, value in want.items():
                if m not in have:
                    problems.append(f"coefficient {m} missing")
                elif not _close(have[m], value, tol):
                    problems.append(f"coefficient {m}: {have[m]} != {value}")
        elif key == "reason_contains":
            if want not in (facts.get("reason") or ""):
                problems.append(f"reason {facts.get('reason')!r} lacks {want!r}")
        elif facts.get(key) != want:
            problems.append(f"{key}: {facts.get(key)!r} != {want!r}")
    return problems


def run_corpus(directory: Path | None = None, config: RunConfig | None = None, out=sys.stdout) -> int:
    """Run every bundled entry; with ``config.output_path`` set, write one JSON report per entry there."""
    config = config or RunConfig()
    report_dir = Path(config.output_path) if config.output_path else None
    if report_dir is not None:
        report_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for path in corpus_entries(directory):
        expect_path = path.with_suffix(".expect.json")
        expected = json.loads(expect_path.read_text())
        doc = parse_document(path.read_text())
        try:
            report, facts = run_task(doc, config)
            if report_dir is not None:
                text = json.dumps(report, indent=2, sort_keys=True, default=str)
                (report_dir / f"{path.stem}.json").write_text(text + "\n")
            tol = mpmath.mpf(expected.get("tolerance", DEFAULT_TOLERANCE))
            problems = compare_facts(json.loads(json.dumps(facts, default=str)), expected["expect"], tol)
        except GSeriesError as exc:
            problems = [f"{type(exc).__name__}: {exc}"]
        status = "ok" if not problems else "MISMATCH"
        print(f"{path.stem:32s} {status}", file=out)
        for p in problems:
            print(f"    {p}", file=out)
        failures += bool(problems)
    return EXIT_MISMATCH if failures else EXIT_OK


# ----------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _common(p):
    p.add_argument("--eq", help="equation file")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--depth", type=int)
    p.add_argument("--precision", type=int, default=192)
    p.add_argument("--trunc-re")
    p.add_argument("--scan-bound", type=int)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true", help="print the full JSON report")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gpseries", description="Formal generalized power series solutions and convergence checks")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("solve", "reduce", "certify"):
        _common(sub.add_parser(name))
    arith = sub.add_parser("check-arith")
    _common(arith)
    arith.add_argument("--kind", choices=["siegel", "bruno", "diophantine"], required=True)
    for flag in ("--omega", "--q", "--c", "--nu", "--gamma", "--shift", "--roots"):
        arith.add_argument(flag)
    arith.add_argument("--bound", type=int)
    arith.add_argument("--start", type=int)
    arith.add_argument("--lattice")
    corpus = sub.add_parser("corpus")
    corpus.add_argument("--dir")
    corpus.add_argument("--precision", type=int, default=192)
    corpus.add_argument("--out", help="directory for per-entry JSON reports")
    return parser


def _params(items) -> dict:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise ValidationError(f"expected NAME=VALUE, found {item!r}")
        out[name.strip()] = value.strip()
    return out


def _config(args) -> RunConfig:
    cfg = RunConfig(precision_bits=args.precision)
    if getattr(args, "depth", None) is not None:
        cfg.depth = args.depth
    if getattr(args, "scan_bound", None) is not None:
        cfg.scan_bound = args.scan_bound
    if getattr(args, "trunc_re", None) is not None:
        cfg.trunc_re = Fraction(args.trunc_re)
    cfg.output_path = getattr(args, "out", None)
    cfg.__post_init__()
    return cfg


def _load(args, precision: int) -> Document:
    params = _params(args.param)
    with working_precision(precision):
        if args.eq:
            try:
                text = Path(args.eq).read_text()
            except OSError as exc:
                raise ValidationError(f"cannot read {args.eq}: {exc.strerror}") from None
            return parse_document(text, params)
        doc = parse_document("", params)
        if getattr(args, "lattice", None):
            doc.lattice = [doc_value(doc, e) for e in args.lattice.split(",")]
        return doc


def doc_value(doc, text):
    return _Scope(doc.names).scalar(parse_expression(text.strip()))


def _emit(report, facts, args, cfg, out):
    text = json.dumps(report, indent=2, sort_keys=True, default=str)
    if cfg.output_path:
        Path(cfg.output_path).write_text(text + "\n")
    if args.json or not cfg.output_path:
        print(text if args.json else json.dumps(facts, indent=2, sort_keys=True, default=str), file=out)


def main(argv=None, out=sys.stdout, err=sys.stderr) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "corpus":
            directory = Path(args.dir) if args.dir else None
            return run_corpus(directory, RunConfig(precision_bits=args.precision, output_path=args.out), out)
        cfg = _config(args)
        doc = _load(args, cfg.precision_bits)
        options = {}
        if args.command == "check-arith":
            task = args.kind
            for key in ("omega", "q", "c", "nu", "gamma", "shift", "roots", "bound", "start"):
                value = getattr(args, key)
                if value is not None:
                    options[key] = value
            if args.depth is not None:
                options["depth"] = args.depth
            if args.scan_bound is not None and "bound" not in options:
                options["bound"] = args.scan_bound
        else:
            task = args.command
            if args.depth is not None:
                options["depth"] = args.depth
        report, facts = run_task(doc, cfg, task, options)
        if args.command == "check-arith":
            facts = report
        _emit(report, facts, args, cfg, out)
        return EXIT_OK
    except ValidationError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_VALIDATION
    except (ComputationError, GSeriesError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_COMPUTATION


run_command = main


if __name__ == "__main__":
    sys.exit(main())
