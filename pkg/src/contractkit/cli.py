"""Command-line front end.

    contractkit solve FILE --mode optimal|linear|monotone|debt|single-payment
    contractkit generate --family NAME [--n N] [--m M] [--eps E] ...
    contractkit audit [FILE ...] | --family NAME --n 2..6 ...
    contractkit robust FILE [--samples K] [--seed S] [--trace]

Rationals travel as strings ("3/8", "1.1", "7").  Every report carries
the exact value and a decimal rendering; the decimals are never read back.

Exit codes: 0 success, 1 bad input, 2 a precondition or implementability
failure, 3 a size limit, 4 an audit bound failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import List, Optional

from .core import (
    AssumptionViolated,
    Contract,
    ContractError,
    Instance,
    MalformedInstance,
    PreconditionFailed,
    agent_best_response,
    build_instance,
    expected_payment,
    to_rational,
)
from .contracts import (
    NoImplementableAction,
    best_debt,
    best_linear,
    best_monotone,
    optimal_contract,
    single_payment_contract,
    upper_envelope,
)
from .families import (
    EXAMPLES,
    BadParams,
    UnknownName,
    audit_ratio,
    gen_appendixE,
    gen_appendixF,
    gen_example,
    gen_random_spanning,
    gen_thm52,
    random_corpus,
)
from .lp import DualCertificate, min_payment_contract, min_payment_monotone
from .robust import (
    NotAmbiguous,
    SizeLimit,
    check_ambiguous,
    lemma42_construct,
    linear_worst_case,
    sample_contracts,
    two_point_adversary,
)

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION, EXIT_SIZE, EXIT_BOUND = 0, 1, 2, 3, 4

CSV_COLUMNS = ["instance", "n", "m", "N", "K", "L", "opt", "alg_linear", "alg_monotone", "rho",
               "le_N", "le_2K", "le_4L", "le_welfare", "sparse_ok"]

FAMILIES = ["thm52", "appendixE", "appendixF", "random-spanning"] + sorted(EXAMPLES)


class ParseError(ContractError, ValueError):
    pass


class Failure(Exception):
    """Carries an exit code and a JSON payload for stderr."""

    def __init__(self, code: int, payload: dict):
        super().__init__(payload.get("message", ""))
        self.code = code
        self.payload = payload


# ---------------------------------------------------------------------------
# rendering


def exact(q) -> Optional[str]:
    return None if q is None else str(Fraction(q))


def decimal(q, precision: int) -> Optional[str]:
    if q is None:
        return None
    q = Fraction(q)
    with localcontext() as ctx:
        ctx.prec = precision + 40
        value = Decimal(q.numerator) / Decimal(q.denominator)
        return str(value.quantize(Decimal(1).scaleb(-precision)))


def both(q, precision: int) -> dict:
    return {"exact": exact(q), "decimal": decimal(q, precision)}


def vector(values, precision: int) -> dict:
    return {"exact": [exact(v) for v in values], "decimal": [decimal(v, precision) for v in values]}


def instance_document(instance: Instance, metadata: Optional[dict] = None) -> dict:
    doc = {
        "outcomes": [exact(x) for x in instance.outcomes],
        "actions": [{"probs": [exact(p) for p in a.probs], "cost": exact(a.cost)} for a in instance.actions],
    }
    if metadata:
        doc["metadata"] = metadata
    return doc


def parse_instance_document(doc) -> Instance:
    try:
        outcomes = doc["outcomes"]
        actions = [(a["probs"], a["cost"]) for a in doc["actions"]]
        _check_literals(outcomes)
        for probs, cost in actions:
            _check_literals(probs)
            _check_literals([cost])
        return build_instance(outcomes, actions, require_support=False)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed instance document: {exc}") from exc


def _check_literals(values):
    for v in values:
        if isinstance(v, float):
            raise ParseError("numbers must be written as strings or integers, not floats")


def _load_json(path: str):
    try:
        with (sys.stdin if path == "-" else open(path, encoding="utf-8")) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc


def load_instance(path: str) -> Instance:
    return parse_instance_document(_load_json(path))


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(payload) -> str:
    return json.dumps(payload, indent=2) + "\n"


def certificate_payload(cert: DualCertificate, precision: int) -> dict:
    out = {
        "action": cert.action,
        "kind": cert.kind,
        "lambdas": {str(k): both(v, precision) for k, v in sorted(cert.lambdas.items())},
    }
    if cert.mus is not None:
        out["mus"] = vector(cert.mus, precision)
    return out


# ---------------------------------------------------------------------------
# solve


def _contract_report(instance: Instance, contract: Contract, precision: int) -> dict:
    br = agent_best_response(instance, contract)
    return {
        "action": br.choice,
        "payments": vector(contract.payments, precision),
        "expected_payment": both(expected_payment(instance, br.choice, contract), precision)
        if br.choice is not None else None,
        "payoff": both(br.principal_payoff, precision),
        "positive_payments": contract.positive_count(),
        "monotone": contract.is_monotone(),
    }


def cmd_solve(args) -> int:
    instance = load_instance(args.file)
    p = args.precision
    report = {"mode": args.mode}
    if args.action is not None:
        if not 0 <= args.action < instance.n:
            raise Failure(EXIT_INPUT, {"error": "BadParams", "message": f"no action {args.action}"})
        if args.mode not in ("optimal", "monotone"):
            raise Failure(EXIT_INPUT, {"error": "BadParams",
                                       "message": "--action applies to optimal and monotone modes"})
        solver = min_payment_contract if args.mode == "optimal" else min_payment_monotone
        res = solver(instance, args.action)
        if isinstance(res, DualCertificate):
            raise Failure(EXIT_PRECONDITION, {"error": "NotImplementable",
                                              "message": f"action {args.action} is not implementable",
                                              "certificate": certificate_payload(res, p)})
        report["target"] = args.action
        report.update(_contract_report(instance, res, p))
    elif args.mode in ("optimal", "monotone"):
        res = optimal_contract(instance) if args.mode == "optimal" else best_monotone(instance)
        report.update(_contract_report(instance, res.contract, p))
        solver = min_payment_contract if args.mode == "optimal" else min_payment_monotone
        certs = []
        for a in range(instance.n):
            r = solver(instance, a)
            if isinstance(r, DualCertificate):
                certs.append(certificate_payload(r, p))
        report["certificates"] = certs
    elif args.mode == "linear":
        res = best_linear(instance)
        env = upper_envelope(instance)
        report.update({
            "alpha": both(res.alpha, p),
            "action": res.action,
            "payoff": both(res.payoff, p),
            "breakpoints": vector(env.breakpoints, p),
            "implementable": list(env.implementable),
        })
    elif args.mode == "debt":
        res = best_debt(instance)
        report.update({"cut": res.cut, "alpha": both(res.alpha, p), "action": res.action,
                       "payoff": both(res.payoff, p),
                       "payments": vector(res.contract(instance).payments, p)})
    elif args.mode == "single-payment":
        report.update(_contract_report(instance, single_payment_contract(instance), p))
    _emit(_dump(report), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# generate


def _need(value, flag):
    if value is None:
        raise BadParams(f"{flag} is required for this family")
    return value


def _single_n(text) -> int:
    lo, hi = parse_range(text)
    if lo != hi:
        raise BadParams("--n must be a single integer here")
    return lo


def parse_range(text) -> tuple:
    """'4' -> (4, 4); '2..6' -> (2, 6), inclusive."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError as exc:
        raise BadParams(f"bad range {text!r}") from exc
    if lo > hi:
        raise BadParams(f"empty range {text!r}")
    return lo, hi


def _rational_flag(text, flag):
    if text is None:
        return None
    try:
        return to_rational(text)
    except (MalformedInstance, TypeError) as exc:
        raise BadParams(f"{flag}: {exc}") from exc


def generate_family(family: str, n: Optional[int], m: Optional[int], eps, delta, gamma, seed) -> Instance:
    if family == "thm52":
        return gen_thm52(_need(n, "--n"), _need(eps, "--eps"))
    if family == "appendixE":
        return gen_appendixE(_need(n, "--n"), _need(eps, "--eps"), _need(delta, "--delta"))
    if family == "appendixF":
        return gen_appendixF(_need(n, "--n"), _need(eps, "--eps"), _need(delta, "--delta"),
                             _need(gamma, "--gamma"))
    if family == "random-spanning":
        return gen_random_spanning(_need(n, "--n"), _need(m, "--m"), seed)
    return gen_example(family)


def _family_metadata(args, n) -> dict:
    meta = {"name": args.family, "source": "contractkit generate"}
    for key in ("eps", "delta", "gamma"):
        if getattr(args, key) is not None:
            meta[key] = getattr(args, key)
    if n is not None:
        meta["n"] = n
    if args.family == "random-spanning":
        meta["m"] = args.m
        meta["seed"] = args.seed
    return meta


def cmd_generate(args) -> int:
    n = _single_n(args.n) if args.n is not None else None
    inst = generate_family(args.family, n, args.m, _rational_flag(args.eps, "--eps"),
                           _rational_flag(args.delta, "--delta"), _rational_flag(args.gamma, "--gamma"),
                           args.seed)
    _emit(_dump(instance_document(inst, _family_metadata(args, n))), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# audit


def _flag(value) -> str:
    return "NA" if value is None else ("pass" if value else "fail")


def audit_row(name: str, instance: Instance) -> dict:
    rep = audit_ratio(instance)
    return {
        "instance": name, "n": rep.n, "m": rep.m,
        "N": "NA" if rep.N is None else rep.N,
        "K": "NA" if rep.K is None else rep.K,
        "L": "NA" if rep.L is None else rep.L,
        "opt": exact(rep.opt),
        "alg_linear": exact(rep.linear) or "NA",
        "alg_monotone": exact(rep.monotone),
        "rho": exact(rep.rho) or "NA",
        "le_N": _flag(rep.le_N), "le_2K": _flag(rep.le_2K), "le_4L": _flag(rep.le_4L),
        "le_welfare": _flag(rep.le_welfare), "sparse_ok": _flag(rep.sparse_ok),
        "_report": rep,
    }


def _audit_targets(args) -> List[tuple]:
    targets = [(path, load_instance(path)) for path in args.files]
    if args.family:
        eps = _rational_flag(args.eps, "--eps")
        delta = _rational_flag(args.delta, "--delta")
        gamma = _rational_flag(args.gamma, "--gamma")
        if args.family == "random-spanning":
            if args.count is None:
                raise BadParams("--count is required for random-spanning sweeps")
            lo, hi = parse_range(args.n) if args.n else (2, 6)
            m_lo, m_hi = parse_range(args.m_range) if args.m_range else (2, 6)
            targets += random_corpus(args.count, args.seed, (lo, hi), (m_lo, m_hi))
        elif args.family in EXAMPLES:
            targets.append((args.family, gen_example(args.family)))
        else:
            lo, hi = parse_range(_need(args.n, "--n"))
            for n in range(lo, hi + 1):
                targets.append((f"{args.family}-n{n}",
                                generate_family(args.family, n, None, eps, delta, gamma, args.seed)))
    if not targets:
        raise BadParams("nothing to audit: pass instance files or --family")
    return targets


def cmd_audit(args) -> int:
    rows = [audit_row(name, inst) for name, inst in _audit_targets(args)]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    _emit(buf.getvalue(), args.out)
    failures = [row["instance"] for row in rows if not row["_report"].ok]
    summary = {"instances": len(rows), "failures": failures,
               "le_4L_with_free_bucket": [_flag(r["_report"].le_4L_all) for r in rows]}
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            fh.write(_dump(summary))
    else:
        sys.stderr.write(json.dumps(summary) + "\n")
    return EXIT_BOUND if failures else EXIT_OK


# ---------------------------------------------------------------------------
# robust


def load_ambiguous(path: str):
    doc = _load_json(path)
    try:
        outcomes = doc["outcomes"]
        actions = [(a["reward"], a["cost"]) for a in doc["ambiguous_actions"]]
        _check_literals(outcomes)
        for pair in actions:
            _check_literals(pair)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed ambiguous instance: {exc}") from exc
    return check_ambiguous(outcomes, actions)


def cmd_robust(args) -> int:
    amb = load_ambiguous(args.file)
    p = args.precision
    lin = linear_worst_case(amb)
    report = {
        "linear": {"alpha": both(lin.alpha, p), "action": lin.action, "payoff": both(lin.payoff, p)},
        "samples": [],
    }
    verdict = True
    for contract in sample_contracts(amb, args.samples, args.seed):
        adv = two_point_adversary(amb, contract)
        row = {"payments": [exact(t) for t in contract.payments],
               "adversary_payoff": both(adv.payoff, p),
               "best_response": adv.best_response,
               "ok": adv.payoff <= lin.payoff}
        if amb.has_free_action:
            cons = lemma42_construct(amb, contract)
            row["affine"] = {"alpha0": exact(cons.affine.alpha0), "alpha1": exact(cons.affine.alpha1),
                             "payoff": both(cons.affine_payoff, p)}
            if args.trace:
                tr = cons.trace()
                row["trace"] = {
                    "case": tr["case"], "pivot": tr["pivot"],
                    "l1": [exact(v) for v in tr["l1"]] if tr["l1"] else None,
                    "l2": [exact(v) for v in tr["l2"]] if tr["l2"] else None,
                    "l3": [exact(v) for v in tr["l3"]] if tr["l3"] else None,
                    "distributions": [[lo, hi, exact(q)] for lo, hi, q in tr["distributions"]],
                    "contract_payoff": exact(tr["contract_payoff"]),
                }
        verdict = verdict and row["ok"]
        report["samples"].append(row)
    report["linear_is_best"] = verdict
    _emit(_dump(report), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contractkit", description="Exact contract design toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write the result here instead of stdout")
        p.add_argument("--precision", type=int, default=6, help="decimal digits in renderings (default 6)")

    s = sub.add_parser("solve", help="compute a contract for an instance file")
    s.add_argument("file")
    s.add_argument("--mode", choices=["optimal", "linear", "monotone", "debt", "single-payment"],
                   default="optimal")
    s.add_argument("--action", type=int, help="target action (0-based) for optimal/monotone modes")
    common(s)
    s.set_defaults(func=cmd_solve)

    def family_flags(p):
        p.add_argument("--family", choices=FAMILIES)
        p.add_argument("--n", help="number of actions; audit sweeps accept ranges like 2..6")
        p.add_argument("--eps")
        p.add_argument("--delta")
        p.add_argument("--gamma")
        p.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("generate", help="emit an instance document")
    family_flags(g)
    g.add_argument("--m", type=int, help="number of outcomes (random-spanning)")
    common(g)
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("audit", help="approximation-ratio audit as CSV")
    a.add_argument("files", nargs="*")
    family_flags(a)
    a.add_argument("--m", dest="m_range", help="outcome-count range for random-spanning sweeps")
    a.add_argument("--count", type=int, help="number of random-spanning instances")
    a.add_argument("--summary", help="write the JSON summary here instead of stderr")
    common(a)
    a.set_defaults(func=cmd_audit)

    r = sub.add_parser("robust", help="worst-case check for an ambiguous instance")
    r.add_argument("file")
    r.add_argument("--samples", type=int, default=200)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--trace", action="store_true", help="include the affine-construction trace")
    common(r)
    r.set_defaults(func=cmd_robust)
    return parser


def _error_code(exc: Exception) -> int:
    if isinstance(exc, SizeLimit):
        return EXIT_SIZE
    if isinstance(exc, (PreconditionFailed, NotAmbiguous, NoImplementableAction, AssumptionViolated)):
        return EXIT_PRECONDITION
    return EXIT_INPUT


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate" and args.family is None:
            raise BadParams("--family is required")
        return args.func(args)
    except Failure as exc:
        sys.stderr.write(json.dumps(exc.payload) + "\n")
        return exc.code
    except (ContractError, ValueError, TypeError) as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, AssumptionViolated):
            payload["assumptions"] = list(exc.names)
        sys.stderr.write(json.dumps(payload) + "\n")
        return _error_code(exc)
