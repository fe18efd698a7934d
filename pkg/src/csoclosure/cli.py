"""Command-line entry point: ``csoclosure <command> [options]``.

Exit codes: 0 success, 2 bad input, 3 search or convergence failure,
4 certificate rejected.  Structured output is JSON with sorted keys, so
reruns with the same options (and seed) are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import approxkak, audit, csofit, shiftcore, sstdemo, weightgen
from .errors import CSOError, DomainError
from .exact import parse_exact, to_str

OUT_DIR_ENV = "CSOCLOSURE_OUT_DIR"


def _rational(text: str) -> Fraction:
    try:
        v = parse_exact(text)
    except ValueError:
        raise DomainError(f"not an exact rational: {text!r}") from None
    return Fraction(v)


def _positive(text: str) -> Fraction:
    v = _rational(text)
    if v <= 0:
        raise DomainError(f"epsilon must be positive, got {text}")
    return v


def _count(value: int, what: str) -> int:
    if value < 1:
        raise DomainError(f"{what} must be >= 1, got {value}")
    return value


def _render(x, notation: str) -> str:
    if isinstance(x, float):
        return repr(x)
    return to_str(x, notation=notation)


def _out_path(out: str | None) -> Path | None:
    if out is None:
        return None
    path = Path(out)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _emit(args, text: str) -> None:
    path = _out_path(args.out)
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _emit_json(args, doc) -> None:
    _emit(args, json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _rows_csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(str(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


# -- commands ---------------------------------------------------------------


def cmd_weights(args) -> None:
    seq = weightgen.resolve_sequence(args.seq)
    n = _count(args.n, "--n")
    values = [_render(w, args.notation) for w in seq.prefix(n)]
    if args.format == "csv":
        _emit(args, _rows_csv(["n", "weight"], enumerate(values, 1)))
    else:
        _emit_json(args, {"sequence": seq.name, "weights": values})


def cmd_truncate(args) -> None:
    seq = weightgen.resolve_sequence(args.seq)
    eps = _positive(args.eps)
    n = _count(args.n, "--n")
    prefix = seq.prefix(n)
    beta = shiftcore.truncate_by_threshold(seq, eps, n)
    d = shiftcore.decompose(beta)
    doc = {
        "sequence": seq.name,
        "epsilon": to_str(eps),
        "truncated": [_render(w, args.notation) for w in beta],
        "decomposition": d.to_dict(),
        "palindromic": shiftcore.is_cso_truncation(d),
        "distance": _render(shiftcore.shift_distance(prefix, beta), args.notation),
    }
    if args.format == "csv":
        _emit(args, _rows_csv(["n", "weight", "truncated"], (
            (i, _render(a, args.notation), _render(b, args.notation))
            for i, (a, b) in enumerate(zip(prefix, beta), 1)
        )))
    else:
        _emit_json(args, doc)


def cmd_approximate(args) -> None:
    seq = weightgen.resolve_sequence(args.seq)
    eps = _positive(args.eps)
    K = _count(args.rounds, "--rounds")
    oracle = approxkak.make_oracle(args.oracle, seq, search_limit=args.search_limit)
    cert = approxkak.certify(seq, eps, K, oracle=oracle, n_cap=args.n_cap)
    _emit_json(args, cert.to_dict())


def cmd_verify(args) -> None:
    doc = audit.load_certificate(args.certificate)
    seq = weightgen.resolve_sequence(args.seq or doc.get("sequence", ""))
    _emit_json(args, audit.verify_certificate(doc, seq))


def cmd_spectrum(args) -> None:
    seq = weightgen.resolve_sequence(args.seq)
    rep = weightgen.accumulation_analysis(seq, _count(args.n, "--n"), args.tol)
    rows = [
        (_render(c, args.notation), k, flag)
        for c, k, flag in zip(rep.cluster_centers, rep.multiplicities_in_prefix, rep.accumulating)
    ]
    if args.format == "csv":
        _emit(args, _rows_csv(["center", "multiplicity", "accumulating"], rows))
    else:
        _emit_json(args, {
            "sequence": seq.name,
            "prefix_len": rep.prefix_len,
            "tolerance": rep.tolerance,
            "clusters": [
                {"center": c, "multiplicity": k, "accumulating": f} for c, k, f in rows
            ],
        })


def cmd_corollary(args) -> None:
    seq = weightgen.resolve_sequence(args.seq)
    rows = weightgen.corollary_check(seq, _count(args.n, "--n"), max_index=args.max_index)
    out = [(r.n, _render(r.weight_at_power, args.notation), _render(r.symmetry_defect, args.notation)) for r in rows]
    if args.format == "csv":
        _emit(args, _rows_csv(["n", "alpha_2^n", "A_n"], out))
    else:
        _emit_json(args, {
            "sequence": seq.name,
            "rows": [{"n": n, "alpha_power": a, "defect": d} for n, a, d in out],
        })


def cmd_distinct(args) -> None:
    seq = weightgen.resolve_sequence(args.seq)
    rep = weightgen.check_distinct(seq, _count(args.n, "--n"))
    _emit_json(args, {
        "sequence": seq.name,
        "prefix_len": args.n,
        "distinct": rep.distinct,
        "witness": list(rep.witness) if rep.witness else None,
    })


def _load_matrix(args) -> np.ndarray:
    if args.matrix:
        return sstdemo.read_matrix(Path(args.matrix))
    if args.weights:
        try:
            weights = [parse_exact(t.strip()) for t in args.weights.split(",")]
        except ValueError as exc:
            raise DomainError(str(exc)) from None
        return shiftcore.shift_matrix(weights, dtype=complex)
    dim = _count(args.dim, "--dim")
    rng = np.random.default_rng(args.seed)
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def cmd_sst(args) -> None:
    T = _load_matrix(args)
    D = T.shape[0]
    grid = sstdemo.residual_grid(T, adjoint=args.adjoint)
    if args.format == "csv":
        _emit(args, sstdemo.grid_to_csv(grid))
        return
    norm_T = shiftcore.operator_norm(T)
    rows = []
    for n in range(1, D + 1):
        A = sstdemo.principal_submatrix(T, n)
        Tn = sstdemo.sst_approximant(A)
        rows.append({
            "n": n,
            "norm": shiftcore.operator_norm(Tn),
            "witness_defect": sstdemo.approximant_defect(A),
        })
    _emit_json(args, {
        "dimension": D,
        "norm_T": norm_T,
        "approximants": rows,
        "residuals": [[None if np.isnan(x) else float(x) for x in row] for row in grid],
    })


def cmd_fit(args) -> None:
    T = _load_matrix(args)
    res = csofit.fit(T, restarts=args.restarts, max_iters=args.max_iters, tol=args.tol, seed=args.seed)
    _emit_json(args, res.to_dict())
    if not res.converged:
        raise _Unconverged(f"optimizer did not converge; best residual {res.residual!r}")


class _Unconverged(CSOError):
    exit_code = 3


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csoclosure", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seq=True, fmt=True):
        if seq:
            sp.add_argument("--seq", default="kakutani", help="kakutani, example, constant:<v> or file:<path>")
        if fmt:
            sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--out", help=f"output file (relative paths resolve under ${OUT_DIR_ENV})")
        sp.add_argument("--notation", choices=("auto", "fraction", "triadic"), default="auto")

    sp = sub.add_parser("weights", help="print the first n weights")
    common(sp)
    sp.add_argument("--n", type=int, default=16)
    sp.set_defaults(func=cmd_weights)

    sp = sub.add_parser("truncate", help="zero the weights <= eps and test palindromy")
    common(sp)
    sp.add_argument("--eps", required=True)
    sp.add_argument("--n", type=int, default=15)
    sp.set_defaults(func=cmd_truncate)

    sp = sub.add_parser("approximate", help="certify a complex symmetric eps-approximant")
    common(sp, fmt=False)
    sp.add_argument("--eps", required=True)
    sp.add_argument("--rounds", type=int, default=2)
    sp.add_argument("--oracle", choices=("dyadic", "kakutani", "scan"), default="dyadic")
    sp.add_argument("--search-limit", type=int, default=10**6)
    sp.add_argument("--n-cap", type=int, default=approxkak.DEFAULT_N_CAP)
    sp.set_defaults(func=cmd_approximate)

    sp = sub.add_parser("verify", help="audit a certificate against its sequence")
    sp.add_argument("certificate")
    sp.add_argument("--seq", help="defaults to the sequence named in the certificate")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("spectrum", help="cluster the weight values")
    common(sp)
    sp.add_argument("--n", type=int, default=1024)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("corollary", help="alpha_{2^n} and the symmetry defect A_n")
    common(sp)
    sp.add_argument("--n", type=int, default=5)
    sp.add_argument("--max-index", type=int, default=1 << 22)
    sp.set_defaults(func=cmd_corollary)

    sp = sub.add_parser("distinct", help="check that the first n weights are distinct")
    common(sp, fmt=False)
    sp.add_argument("--n", type=int, default=4096)
    sp.set_defaults(func=cmd_distinct)

    for name, func, helptext in (
        ("sst", cmd_sst, "strong-* approximants and residual grid"),
        ("fit", cmd_fit, "fit a conjugation to a small matrix"),
    ):
        sp = sub.add_parser(name, help=helptext)
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--matrix", help="complex matrix text file")
        src.add_argument("--weights", help="comma-separated shift weights, e.g. 1,1/2")
        sp.add_argument("--dim", type=int, default=8, help="random matrix size when no input is given")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out")
        if name == "sst":
            sp.add_argument("--format", choices=("json", "csv"), default="json")
            sp.add_argument("--adjoint", action="store_true")
        else:
            sp.add_argument("--restarts", type=int, default=20)
            sp.add_argument("--max-iters", type=int, default=500)
            sp.add_argument("--tol", type=float, default=1e-10)
        sp.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except CSOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        best = getattr(exc, "best", None)
        if best:
            print(f"closest miss: {best}", file=sys.stderr)
        for f in getattr(exc, "failures", [])[1:]:
            print(f"  also: {f}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
