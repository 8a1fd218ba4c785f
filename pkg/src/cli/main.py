"""
Command-line front end
Subcommands validate, classify, moments, laplace, sample, oracle and verify
"""

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from typing import List, Optional

import numpy as np
import pandas as pd

from db.models import RunRecord
from db.repository import dump_json, load_spec, save_run, write_samples
from src.chaos_oracle.oracle_service import (build_chaos_basis, build_operators, check_axioms,
                                             check_n_meixner)
from src.classify3.classify_service import Rejected, classify, marginal_params_1d
from src.config import settings
from src.config.settings import VerifyConfig
from src.core.errors import InvalidParam, MeixnerError, MeixnerInputError
from src.core.tensor import canonical_tensor, validate_lcc
from src.dist3.distribution import (CanonicalGamma3, case2_laplace, in_domain,
                                    laplace_closed_form)
from src.dist3.samplers import iter_samples
from src.integrability.integrability_service import necessary_conditions
from src.logging.log_service import (configure_file_logging, log_audit_event, logger,
                                     set_console_level)
from src.moments.moment_service import MomentTable
from src.utils.helpers import ensure_finite, parse_float_list, parse_index_list, parse_seed
from src.verify.verify_service import full_suite

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_INPUT = 3

TENSOR_SCHEMA_HELP = """\
tensor JSON schema:
  {
    "dimension": d,
    "alpha": [{"index": [i, j, k], "value": x}, ...],
    "beta": [[...], ...],      optional, default identity
    "mean": [...]              optional, default zeros
  }
  Indices are 0-based; unlisted triples are 0; permutations of one triple
  may repeat only with equal values. NaN and Infinity are rejected.

exit codes: 0 success, 1 failed check or numerical error, 2 usage error,
3 input error. Errors are written to stderr as {"error": ..., "message": ...}.
The default seed is %d.
""" % settings.DEFAULT_SEED


class UsageError(Exception):
    pass


class _JsonArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of printing and exiting."""

    def error(self, message):
        raise UsageError(message)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    parser.add_argument("--log-dir", help="also write meixner.log and audit.log here")
    parser.add_argument("--out", help="write the JSON result to this file instead of stdout")


def _add_seed(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=parse_seed, default=settings.DEFAULT_SEED,
                        help=f"unsigned 64-bit seed (default {settings.DEFAULT_SEED})")


def build_parser() -> argparse.ArgumentParser:
    parser = _JsonArgumentParser(
        prog="meixner",
        description="Validate, compute moments of, classify, sample and verify 1-Meixner tensors.",
        epilog=TENSOR_SCHEMA_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", parser_class=_JsonArgumentParser)
    sub.required = True

    p = sub.add_parser("validate", help="consistency conditions and integrability obstructions",
                       epilog=TENSOR_SCHEMA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--input", required=True)
    p.add_argument("--tol", type=float, default=settings.OBSTRUCTION_TOL)
    _add_common(p)

    p = sub.add_parser("classify", help="d = 3 classification",
                       epilog=TENSOR_SCHEMA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--input", required=True)
    p.add_argument("--tol", type=float, default=settings.CLASSIFY_TOL)
    _add_common(p)

    p = sub.add_parser("moments", help="exact joint moments",
                       epilog=TENSOR_SCHEMA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--input", required=True)
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--index", help="multi-index counts, e.g. 2,0,1")
    which.add_argument("--max-degree", type=int, help="every moment of total degree <= N")
    p.add_argument("--exact", action="store_true", help="rational arithmetic")
    p.add_argument("--pivot", choices=settings.PIVOT_POLICIES, default="lowest-index")
    p.add_argument("--format", choices=("json", "jsonl", "csv"), default="json")
    _add_common(p)

    p = sub.add_parser("laplace", help="closed-form Laplace transform")
    law = p.add_mutually_exclusive_group(required=True)
    law.add_argument("--a", type=float, help="canonical parameter")
    law.add_argument("--case2", help="component parameters b1,b2,b3")
    p.add_argument("--at", required=True, help="s1,s2,s3")
    _add_common(p)

    p = sub.add_parser("sample", help="exact samples, one point per row")
    law = p.add_mutually_exclusive_group(required=True)
    law.add_argument("--a", type=float, help="canonical parameter, 0 < a <= 1")
    law.add_argument("--case2", help="component parameters b1,b2,b3")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--workers", type=int, default=settings.SAMPLE_WORKERS)
    _add_seed(p)
    _add_common(p)

    p = sub.add_parser("oracle", help="operators reconstructed from moments",
                       epilog=TENSOR_SCHEMA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--input", required=True)
    p.add_argument("--degree", type=int, default=settings.DEFAULT_CHAOS_DEGREE)
    p.add_argument("--mode", choices=("float", "exact"), default="float")
    p.add_argument("--check", choices=("axioms", "meixner1", "meixner2"), default="axioms")
    _add_common(p)

    p = sub.add_parser("verify", help="run the verification suite",
                       epilog=TENSOR_SCHEMA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--input")
    target.add_argument("--a", type=float)
    p.add_argument("--profile", choices=("quick", "full"), default="quick")
    p.add_argument("--timings", action="store_true", help="include wall times in the report")
    _add_seed(p)
    _add_common(p)
    return parser


def _emit(args, payload):
    args.payload = payload
    dump_json(payload, path=args.out)


def _finite_arg(value: Optional[float], what: str) -> Optional[float]:
    return None if value is None else ensure_finite([value], what)[0]


def cmd_validate(args) -> int:
    spec = load_spec(args.input)
    lcc = validate_lcc(spec)
    report = necessary_conditions(spec.alpha, tol=args.tol)
    payload = {'lcc': lcc.to_dict(), 'obstructions': report.to_dict(),
               'passed': lcc.passed and report.passed}
    _emit(args, payload)
    return EXIT_OK if payload['passed'] else EXIT_CHECK_FAILED


def cmd_classify(args) -> int:
    spec = load_spec(args.input)
    if not validate_lcc(spec).passed:
        raise InvalidParam("classify expects a normalized spec (beta = I, mean = 0)")
    result = classify(spec.alpha, tol=args.tol)
    _emit(args, result.to_dict())
    return EXIT_CHECK_FAILED if isinstance(result, Rejected) else EXIT_OK


def _moment_row(idx, value):
    row = {'index': list(idx), 'value': float(value)}
    if isinstance(value, Fraction):
        row['exact'] = f"{value.numerator}/{value.denominator}"
    return row


def cmd_moments(args) -> int:
    spec = load_spec(args.input)
    tbl = MomentTable(spec, exact=args.exact, pivot=args.pivot)
    if args.index is not None:
        idx = parse_index_list(args.index)
        rows = [_moment_row(idx, tbl.moment(idx))]
    else:
        if args.max_degree < 0:
            raise InvalidParam(f"max degree must be non-negative, got {args.max_degree}")
        rows = [_moment_row(idx, value)
                for n in range(args.max_degree + 1)
                for idx, value in tbl.moments_of_degree(n).items()]

    if args.format == "json":
        _emit(args, {'dimension': spec.dimension, 'exact': args.exact, 'moments': rows})
        return EXIT_OK
    stream = open(args.out, 'w') if args.out else sys.stdout
    try:
        if args.format == "jsonl":
            for row in rows:
                stream.write(json.dumps(row, sort_keys=True) + "\n")
        else:
            frame = pd.DataFrame({'index': [",".join(map(str, r['index'])) for r in rows],
                                  'value': [r['value'] for r in rows]})
            frame.to_csv(stream, index=False, float_format='%.17g')
    finally:
        if stream is not sys.stdout:
            stream.close()
    return EXIT_OK


def _components(text: str):
    return [marginal_params_1d(b) for b in parse_float_list(text, "case2", length=3)]


def cmd_laplace(args) -> int:
    s = np.array(parse_float_list(args.at, "at", length=3))
    if args.a is not None:
        a = _finite_arg(args.a, "a")
        g = CanonicalGamma3(a)
        inside = in_domain(a, s)
        value = laplace_closed_form(g, s) if inside else None
        payload = {'law': 'canonical', 'a': a, 'at': s.tolist(), 'in_domain': inside, 'value': value}
    else:
        components = _components(args.case2)
        value = case2_laplace(components, np.eye(3), s)
        inside = bool(np.isfinite(value))
        payload = {'law': 'case2', 'components': [c.to_dict() for c in components], 'at': s.tolist(),
                   'in_domain': inside, 'value': value if inside else None}
    _emit(args, payload)
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.n < 0:
        raise InvalidParam(f"sample count must be non-negative, got {args.n}")
    if args.workers < 1:
        raise InvalidParam(f"workers must be positive, got {args.workers}")
    if args.a is not None:
        blocks = iter_samples(args.n, args.seed, a=_finite_arg(args.a, "a"), workers=args.workers)
    else:
        blocks = iter_samples(args.n, args.seed, components=_components(args.case2), workers=args.workers)
    stream = open(args.out, 'w') if args.out else sys.stdout
    try:
        write_samples(blocks, args.format, stream)
    finally:
        if stream is not sys.stdout:
            stream.close()
    return EXIT_OK


def cmd_oracle(args) -> int:
    spec = load_spec(args.input)
    exact = args.mode == "exact"
    tbl = MomentTable(spec, exact=exact)
    basis = build_chaos_basis(tbl, args.degree)
    ops = build_operators(basis, tbl)
    tol = settings.Tolerances()
    if args.check == "axioms":
        report = check_axioms(ops, tol=tol.axiom_residual)
        payload, passed = report.to_dict(), report.passed
    elif args.check == "meixner1":
        report = check_n_meixner(ops, 1)
        deviation = report.alpha_deviation(spec.alpha, spec.beta)
        passed = max(deviation, report.max_residual) <= tol.operator_residual
        payload = dict(report.to_dict(), alpha_deviation=deviation, passed=passed)
    else:
        report = check_n_meixner(ops, 2)
        passed = report.max_residual <= tol.operator_residual
        payload = dict(report.to_dict(), passed=passed)
    payload.update(mode=args.mode, degree=args.degree,
                   min_gram_eigenvalues=[float(v) for v in basis.min_gram_eigenvalues])
    _emit(args, payload)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_verify(args) -> int:
    config = VerifyConfig.for_profile(args.profile, args.seed)
    target = load_spec(args.input) if args.input else _finite_arg(args.a, "a")
    if args.input is None and not 0.0 < abs(target) <= 1.0:
        raise InvalidParam(f"canonical parameter must satisfy 0 < |a| <= 1, got {target}")
    if args.input is None:
        target = canonical_tensor(target)
    report = full_suite(target, config)
    _emit(args, report.to_dict(include_timings=args.timings))
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


COMMANDS = {
    'validate': cmd_validate,
    'classify': cmd_classify,
    'moments': cmd_moments,
    'laplace': cmd_laplace,
    'sample': cmd_sample,
    'oracle': cmd_oracle,
    'verify': cmd_verify,
}


def _error(name: str, message: str):
    sys.stderr.write(json.dumps({'error': name, 'message': message}) + "\n")


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv, dispatch to the subcommand and map errors to exit codes

    Args:
        argv: Arguments without the program name

    Returns:
        Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        _error("UsageError", str(e))
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    if args.verbose:
        set_console_level(logging.INFO)
    if args.log_dir:
        configure_file_logging(args.log_dir)
    log_audit_event("CLI_RUN", {'command': args.command, 'argv': list(argv or [])})

    try:
        code = COMMANDS[args.command](args)
        if args.log_dir:
            record = RunRecord(command=args.command, seed=getattr(args, 'seed', None),
                               passed=code == EXIT_OK, result=getattr(args, 'payload', {}))
            save_run(record, os.path.join(args.log_dir, "runs"))
        return code
    except MeixnerInputError as e:
        logger.error(f"Input error in {args.command}: {e}")
        _error(type(e).__name__, str(e))
        return EXIT_INPUT
    except MeixnerError as e:
        logger.error(f"{args.command} failed: {e}")
        _error(type(e).__name__, str(e))
        return EXIT_CHECK_FAILED
    except OSError as e:
        logger.error(f"I/O error in {args.command}: {e}")
        _error("InputError", str(e))
        return EXIT_INPUT


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
