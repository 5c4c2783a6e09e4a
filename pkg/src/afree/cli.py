"""Command-line front end.

Exit codes: 0 success, 2 input/parse/config error, 3 no positive homogeneity
weights, 4 measure not A-free, 5 uniform singularity certificate failed,
6 a theorem clause failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .blowup import (FourierGrid, MollifierSpec, MultiplierSpec, default_psi_family, multiplier_test_function,
                     normalized_limit, verify_theorem)
from .cones import intersection_cone_exact, intersection_cone_sampled, principal_angles
from .config import RunConfig
from .dsl import parse_operator, serialize_operator
from .errors import CertificateFailed, NotAFree, ParseError, WeightsError
from .measures import check_afree, check_uniform_singularity, load_measure
from .symbols import principal_part, solve_weights

EXIT_OK, EXIT_INPUT, EXIT_WEIGHTS, EXIT_NOT_AFREE, EXIT_CERT, EXIT_CLAUSE = 0, 2, 3, 4, 5, 6


class InputError(Exception):
    pass


def _load_operator(cfg):
    if not cfg.operator:
        raise InputError("no operator file given")
    try:
        text = Path(cfg.operator).read_text()
    except OSError as exc:
        raise InputError(f"cannot read operator file: {exc}") from exc
    return parse_operator(text)


def _load_measure(cfg):
    if not cfg.measure:
        raise InputError("no measure file given")
    try:
        return load_measure(cfg.measure)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot read measure file {cfg.measure}: {exc}") from exc


def _fmt_set(indices):
    return "{" + ", ".join(str(tuple(a.exponents)) for a in indices) + "}"


def _fmt_beta(beta):
    return "(" + ", ".join(str(b) for b in beta) + ")"


def _points(cfg, d):
    return cfg.points or [[0.0] * d]


def cmd_parse(cfg, out):
    op = _load_operator(cfg)
    text = serialize_operator(op)
    out.write(text)
    return {"d": op.d, "m": op.m, "n": op.n, "normalized": text,
            "index_sets": [[list(a.exponents) for a in op.index_set(j)] for j in range(op.n)]}


def cmd_symbol(cfg, out):
    op = _load_operator(cfg)
    pp = principal_part(op)
    section = {"d": op.d, "m": op.m, "n": op.n, "equations": []}
    for j in range(op.n):
        section["equations"].append({"I": [list(a.exponents) for a in op.index_set(j)],
                                     "I_principal": [list(a.exponents) for a in pp.dominating_set(j)]})
        out.write(f"equation {j + 1}: I = {_fmt_set(op.index_set(j))}\n")
        out.write(f"equation {j + 1}: I' = {_fmt_set(pp.dominating_set(j))}\n")
    weights = solve_weights(pp)
    for j, (beta, frame) in enumerate(zip(weights.rows, weights.frames())):
        section["equations"][j]["beta"] = [str(b) for b in beta]
        section["equations"][j]["manifold"] = frame.describe()
        out.write(f"equation {j + 1}: beta = {_fmt_beta(beta)}\n")
        out.write(f"equation {j + 1}: {frame.describe()}\n")
    return section


def cmd_wavecone(cfg, out):
    op = _load_operator(cfg)
    pp = principal_part(op)
    frames = solve_weights(pp).frames()
    results = []
    for z in _points(cfg, op.d):
        entry = {"x": z}
        cones = {}
        if cfg.method in ("exact", "both"):
            cones["exact"] = intersection_cone_exact(pp, z)
        if cfg.method in ("sampled", "both"):
            cones["sampled"] = intersection_cone_sampled(pp, frames, z, cfg.samples, cfg.seed)
        for name, cone in cones.items():
            entry[name] = cone.to_dict()
            basis = np.round(cone.basis, 12) + 0.0
            out.write(f"x = {tuple(z)} [{name}] dimension {cone.dimension}, basis {basis.tolist()}\n")
        if len(cones) == 2:
            angle = principal_angles(cones["exact"], cones["sampled"])
            entry["principal_angle"] = angle
            out.write(f"x = {tuple(z)} principal angle exact vs sampled: {angle:.3e}\n")
        results.append(entry)
    return {"method": cfg.method, "points": results}


def cmd_check_afree(cfg, out):
    op = _load_operator(cfg)
    mu = _load_measure(cfg)
    rep = check_afree(op, mu, cfg.afree_resolution, cfg.residual_tol)
    out.write(f"weak residual {rep.residual:.3e} ({'A-free' if rep.passed else 'NOT A-free'}, tol {rep.tol:.1e})\n")
    if not rep.passed:
        raise NotAFree(f"weak residual {rep.residual:.3e} exceeds {cfg.residual_tol:.1e}", rep)
    return rep.to_dict()


def cmd_check_singularity(cfg, out, csv_rows):
    mu = _load_measure(cfg)
    certs = []
    failed = None
    for z in _points(cfg, mu.d):
        cert = check_uniform_singularity(mu, z, cfg.p, cfg.q, cfg.strategy, cfg.epsilons, cfg.certificate_tol)
        certs.append(cert.to_dict())
        csv_rows.extend(cert.csv_rows())
        out.write(f"x = {tuple(z)}: {'pass' if cert.verdict else 'fail'}"
                  f" ratios {[float(f'{r:.4g}') for r in cert.ratios]}\n")
        if not cert.verdict and failed is None:
            failed = cert
    if failed is not None:
        raise CertificateFailed(f"uniform singularity fails at {failed.point}: {failed.reason}", failed)
    return {"certificates": certs}


def cmd_blowup(cfg, out, csv_rows):
    op = _load_operator(cfg)
    mu = _load_measure(cfg)
    pp = principal_part(op)
    frames = solve_weights(pp).frames()
    mollifier = MollifierSpec()
    fgrid = FourierGrid(op.d, cfg.resolution, cfg.padding)
    reports = []
    for z in _points(cfg, op.d):
        cert = check_uniform_singularity(mu, z, cfg.p, cfg.q, cfg.strategy, cfg.epsilons, cfg.certificate_tol)
        if not cert.verdict:
            raise CertificateFailed(f"uniform singularity fails at {tuple(z)}: {cert.reason}", cert)
        for psi in default_psi_family(op.d):
            phis = [multiplier_test_function(MultiplierSpec(psi, fr), mollifier, fgrid) for fr in frames]
            rep = normalized_limit(op, pp, frames, mu, z, phis, cert, mollifier=mollifier, label=psi.__name__)
            reports.append(rep.to_dict())
            csv_rows.extend(rep.csv_rows())
            out.write(f"x = {tuple(z)} psi = {psi.__name__}: gap {rep.gap:.3e}\n")
    return {"reports": reports}


def cmd_verify(cfg, out):
    op = _load_operator(cfg)
    mu = _load_measure(cfg)
    table = verify_theorem(op, mu, _points(cfg, op.d), cfg.verify_config())
    for row in table.rows:
        status = ", ".join(f"{k}={'pass' if v['passed'] else 'FAIL'}" for k, v in row.clauses.items())
        out.write(f"z = {row.z}: {status}\n")
    return table.to_dict()


COMMANDS = ("parse", "symbol", "wavecone", "check-afree", "check-singularity", "blowup", "verify")


def build_parser():
    ap = argparse.ArgumentParser(prog="afree", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"afree {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--operator", help="operator file (overrides config)")
        sp.add_argument("--measure", help="measure JSON file (overrides config)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--method", choices=("exact", "sampled", "both"))
        sp.add_argument("--out", help="write the JSON report here")
        sp.add_argument("--csv", help="write epsilon tables as CSV here")
    return ap


def _make_config(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.operator:
        cfg.operator = args.operator
    if args.measure:
        cfg.measure = args.measure
    if args.seed is not None:
        cfg.seed = args.seed
    if args.method:
        cfg.method = args.method
    return cfg.validate()


def run(argv=None, stdout=None):
    """Entry point returning ``(exit_code, report)``."""
    out = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    report = {"version": __version__, "command": args.command}
    csv_rows: list = []
    start = time.perf_counter()
    code = EXIT_OK
    try:
        cfg = _make_config(args)
        report["config"] = cfg.echo()
        if args.command == "parse":
            report["result"] = cmd_parse(cfg, out)
        elif args.command == "symbol":
            report["result"] = cmd_symbol(cfg, out)
        elif args.command == "wavecone":
            report["result"] = cmd_wavecone(cfg, out)
        elif args.command == "check-afree":
            report["result"] = cmd_check_afree(cfg, out)
        elif args.command == "check-singularity":
            report["result"] = cmd_check_singularity(cfg, out, csv_rows)
        elif args.command == "blowup":
            report["result"] = cmd_blowup(cfg, out, csv_rows)
        else:
            report["result"] = cmd_verify(cfg, out)
            if not report["result"]["passed"]:
                code = EXIT_CLAUSE
    except (InputError, ParseError, OSError, ValueError, json.JSONDecodeError) as exc:
        code, report["error"] = EXIT_INPUT, f"{type(exc).__name__}: {exc}"
    except WeightsError as exc:
        code, report["error"] = EXIT_WEIGHTS, str(exc)
        report["infeasible_system"] = [{"alpha": list(a), "rhs": r} for a, r in (exc.system or [])]
        out.write(f"error: {exc}\n")
        for a, r in exc.system or []:
            out.write(f"  <{tuple(a)}, beta> = {r}\n")
    except NotAFree as exc:
        code, report["error"] = EXIT_NOT_AFREE, str(exc)
        if exc.report is not None:
            report["afree"] = exc.report.to_dict()
    except CertificateFailed as exc:
        code, report["error"] = EXIT_CERT, str(exc)
        if exc.certificate is not None:
            report["certificate"] = exc.certificate.to_dict()
            csv_rows.extend(exc.certificate.csv_rows())
    report["exit_code"] = code
    report["timing"] = {"seconds": time.perf_counter() - start}
    if code != EXIT_OK and "error" in report and code != EXIT_WEIGHTS:
        print(f"error: {report['error']}", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True, default=_default))
    if args.csv and csv_rows:
        with open(args.csv, "w", newline="") as fh:
            csv.writer(fh).writerows(csv_rows)
    return code, report


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def main(argv=None):
    code, _ = run(argv)
    sys.exit(code)


if __name__ == "__main__":
    main()
