"""Command-line interface: ``tavis-qdm {matrix,evolve,qdm,verify}``.

Exit status is 0 on success, 1 when a verification check fails and 2 on a
usage error (bad flags, malformed state spec, unsupported mode/j, or a field
state that does not fit the cutoff).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from collections.abc import Sequence
from fractions import Fraction

import numpy as np

from . import evolve, fock, model, qdm, verify
from .opalg import QuantumMatrix

__all__ = ["main", "build_parser", "UsageError"]

PER_LEVEL_MAX_J = Fraction(4)


class UsageError(Exception):
    """Invalid command-line input; reported with exit status 2."""


# ----------------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------------


def _dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False) + "\n"


def _dump_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _complex_parts(M: np.ndarray) -> dict:
    return {"real": np.real(M).tolist(), "imag": np.imag(M).tolist()}


def _matrix_payload(M: QuantumMatrix | np.ndarray, realize: bool, cutoff: int) -> dict:
    if isinstance(M, np.ndarray):
        return {"kind": "scalar", "shape": list(M.shape), "entries": M.tolist()}
    if realize:
        R = fock.realize(M, cutoff)
        return {"kind": "realized", "cutoff": cutoff, "blockdim": M.dim, "shape": list(R.matrix.shape),
                **_complex_parts(R.matrix), "truncation_loss": R.truncation_loss}
    return {"kind": "symbolic", "dim": M.dim, "entries": M.to_strings()}


def _matrix_csv(payload: dict) -> str:
    if payload["kind"] == "realized":
        re, im = np.array(payload["real"]), np.array(payload["imag"])
        rows = [[repr(complex(a, b)) for a, b in zip(r1, r2)] for r1, r2 in zip(re, im)]
    else:
        rows = payload["entries"]
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

_ATOM_OBJECTS = ("A", "T", "blocks", "propagator")
_BLOCK_OBJECTS = ("B", "U", "D", "U1", "R", "propagator")


def _spin_from_arg(text: str) -> Fraction:
    try:
        return model.parse_spin(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(str(exc)) from None


def cmd_matrix(args) -> str:
    if (args.atoms is None) == (args.block_j is None):
        raise UsageError("give exactly one of --atoms or --block-j")
    if args.atoms is not None:
        obj = args.object or "A"
        if obj not in _ATOM_OBJECTS:
            raise UsageError(f"--object {obj!r} is not available with --atoms; choose from {_ATOM_OBJECTS}")
        n = args.atoms
        head = {"object": obj, "atoms": n}
        if obj == "A":
            payload = _matrix_payload(model.build_A(n), args.realize, args.cutoff)
        elif obj == "T":
            if n == 1:
                raise UsageError("one atom needs no intertwiner T")
            payload = _matrix_payload(model.build_decomposition(n).T, False, args.cutoff)
        elif obj == "blocks":
            if n == 1:
                raise UsageError("one atom has the single block B_1/2; use --block-j 0.5")
            dec = model.build_decomposition(n)
            payload = {"kind": "blocks", "j": [str(b.j) for b in dec.blocks], "offsets": dec.offsets,
                       "entries": dec.block_matrix().to_strings()}
        else:
            head.update(t=args.t, g=args.g, omega=args.omega)
            if args.realize:
                R = evolve.full_propagator(n, args.t, args.g, args.omega).realize(args.cutoff)
                payload = {"kind": "realized", "cutoff": args.cutoff, "blockdim": R.blockdim,
                           "shape": list(R.matrix.shape), **_complex_parts(R.matrix)}
            else:
                payload = _matrix_payload(evolve.evolution(n, args.t, args.g), False, args.cutoff)
    else:
        spin = _spin_from_arg(args.block_j)
        obj = args.object or "B"
        if obj not in _BLOCK_OBJECTS:
            raise UsageError(f"--object {obj!r} is not available with --block-j; choose from {_BLOCK_OBJECTS}")
        head = {"object": obj, "j": str(spin)}
        if obj == "B":
            M = model.build_spin_block(spin).B
        elif obj == "propagator":
            head.update(t=args.t, g=args.g)
            M = _diagonalization(spin, args.mode).exponential(args.t * args.g)
        else:
            res = _diagonalization(spin, args.mode)
            M = {"U": res.U, "D": res.D, "U1": res.U1, "R": res.R.R}[obj]
        payload = _matrix_payload(M, args.realize, args.cutoff)
    out = {**head, **payload}
    if args.format == "csv":
        return _matrix_csv(payload)
    return _dump_json(out)


def _diagonalization(spin: Fraction, mode: str) -> qdm.DiagonalizationResult:
    try:
        mode = qdm.normalize_mode(mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if mode == "closed_form" and spin not in qdm.CLOSED_FORM_SPINS:
        raise UsageError(f"closed-form mode supports j in {{1/2, 1, 3/2}}, not {spin}; use --mode per-level")
    if mode == "per_level" and spin > PER_LEVEL_MAX_J:
        raise UsageError(f"per-level mode supports j <= {PER_LEVEL_MAX_J}, not {spin}")
    return qdm.diagonalize(spin, mode)


def _times(args) -> np.ndarray:
    if args.t_max is None:
        return np.array([args.t])
    if args.t_max <= 0:
        raise UsageError("--t-max must be positive")
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    return np.linspace(0.0, args.t_max, args.steps + 1)


def cmd_evolve(args) -> str:
    if args.state is None:
        raise UsageError("--state is required")
    try:
        state = evolve.parse_state(args.state)
    except ValueError as exc:
        raise UsageError(f"malformed state spec: {exc}") from None
    n = args.atoms if args.atoms is not None else state.n_atoms
    model.check_atoms(n)
    if state.n_atoms != n:
        raise UsageError(f"state describes {state.n_atoms} atoms but --atoms is {n}")
    times = _times(args)
    margin = max(args.margin, n)
    try:
        series = evolve.evolve_state(evolve.full_propagator(n, 0.0, args.g, args.omega), state, times,
                                     args.cutoff, margin)
    except (evolve.TruncationMassError, fock.TruncationError) as exc:
        raise UsageError(str(exc)) from None
    fmt = args.format or "csv"
    if fmt == "csv":
        header = ["t", *[f"P_e_{k + 1}" for k in range(n)], "mean_photons", "norm"]
        rows = [[t, *series.excited[i], series.mean_photons[i], series.norm[i]] for i, t in enumerate(times)]
        return _dump_csv(header, rows)
    return _dump_json({
        "atoms": n, "state": args.state, "g": args.g, "omega": args.omega, "cutoff": args.cutoff,
        "margin": margin, "basis": "index = component * (cutoff + 1) + n",
        "times": times.tolist(), "excited": series.excited.tolist(),
        "mean_photons": series.mean_photons.tolist(), "norm": series.norm.tolist(),
        "amplitudes": _complex_parts(series.amplitudes),
    })


def cmd_qdm(args) -> str:
    if args.j is None:
        raise UsageError("--j is required")
    spin = _spin_from_arg(args.j)
    res = _diagonalization(spin, args.mode)
    cut = args.cutoff
    if 2 * args.margin >= cut:
        raise UsageError(f"cutoff {cut} must exceed twice the margin {args.margin}")
    table = res.diagonal_table(cut)
    rec = fock.masked_compare(fock.realize(res.reconstruct(), cut), fock.realize(model.build_spin_block(spin).B, cut),
                              res.range, args.margin)
    fmt = args.format or "json"
    if fmt == "csv":
        header = ["n", *[f"d{i + 1}" for i in range(res.J)]]
        return _dump_csv(header, [[n, *row] for n, row in enumerate(table)])
    U = fock.realize(res.U, cut)
    return _dump_json({
        "j": str(spin), "mode": res.mode, "cutoff": cut, "margin": args.margin,
        "domain": list(res.domain), "range": list(res.range),
        "D": {"n": list(range(cut + 1)), "diagonal": table.tolist()},
        "U": {"symbolic": res.U.to_strings() if spin in qdm.CLOSED_FORM_SPINS and res.mode == "closed_form"
              else None, "realized": _complex_parts(U.matrix)},
        "reconstruction_residual": rec,
    })


def cmd_verify(args) -> tuple[str, int]:
    only = None
    if args.only:
        only = tuple(x.strip() for item in args.only for x in item.split(",") if x.strip())
    cfg = verify.SuiteConfig(cutoff=args.cutoff, margin=args.margin, tolerance=args.tolerance, only=only,
                             seed=args.seed, threads=args.threads)
    try:
        report = verify.run_suite(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "csv":
        rows = [[c.name, verify.format_residual(c.residual), repr(c.tolerance), c.passed, c.cutoff, c.margin]
                for c in report.checks]
        text = _dump_csv(["name", "residual", "tolerance", "pass", "cutoff", "margin"], rows)
    else:
        text = report.to_json()
    return text, 0 if report.passed else 1


# ----------------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, fmt_default: str | None = None) -> None:
    p.add_argument("--cutoff", type=int, default=40, help="Fock cutoff N_max (default 40)")
    p.add_argument("--margin", type=int, default=6, help="interior margin (default 6)")
    p.add_argument("--format", choices=("json", "csv"), default=fmt_default)
    p.add_argument("--threads", type=int, default=1, help="worker threads; 1 gives deterministic output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tavis-qdm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("matrix", help="print A_n, B_j, T, propagators or QDM factors")
    p.add_argument("--atoms", type=int, choices=model.SUPPORTED_ATOMS)
    p.add_argument("--block-j", dest="block_j", help="spin of the block B_j, e.g. 1.5 or 3/2")
    p.add_argument("--object", help=f"with --atoms: {', '.join(_ATOM_OBJECTS)}; "
                                    f"with --block-j: {', '.join(_BLOCK_OBJECTS)}")
    p.add_argument("--realize", action="store_true", help="emit the dense truncated matrix")
    p.add_argument("--mode", default="closed-form", help="closed-form or per-level (QDM objects)")
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=1.0)
    _add_common(p, "json")

    p = sub.add_parser("evolve", help="evolve an atom-field product state")
    p.add_argument("--atoms", type=int, choices=model.SUPPORTED_ATOMS)
    p.add_argument("--state", help="atoms=<e/g string>;field=fock:<m>|coherent:<re>,<im>")
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--t", type=float, default=0.0, help="single time (ignored with --t-max)")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--steps", type=int, default=100)
    _add_common(p)

    p = sub.add_parser("qdm", help="run the quantum diagonalization for B_j")
    p.add_argument("--j", help="spin j, e.g. 0.5, 1, 3/2")
    p.add_argument("--mode", default="closed-form", help="closed-form (j <= 3/2) or per-level (j <= 4)")
    _add_common(p, "json")

    p = sub.add_parser("verify", help="run the identity suite and print the report")
    p.add_argument("--only", action="append", help=f"restrict to groups: {', '.join(verify.GROUPS)}")
    p.add_argument("--tolerance", type=float, help="override every tolerance")
    p.add_argument("--seed", type=int, default=verify.SuiteConfig.seed)
    _add_common(p, "json")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.cutoff < fock.MIN_CUTOFF:
            raise UsageError(f"--cutoff must be at least {fock.MIN_CUTOFF}")
        # matrix output never compares on an interior, so only the other commands need a margin
        if args.command != "matrix" and (args.margin < 0 or 2 * args.margin >= args.cutoff):
            raise UsageError(f"need 0 <= margin and cutoff > 2*margin (cutoff {args.cutoff}, margin {args.margin})")
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        status = 0
        if args.command == "matrix":
            text = cmd_matrix(args)
        elif args.command == "evolve":
            text = cmd_evolve(args)
        elif args.command == "qdm":
            text = cmd_qdm(args)
        else:
            text, status = cmd_verify(args)
    except UsageError as exc:
        print(f"tavis-qdm: error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(text)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
