"""Command-line interface: analyze state files and verify the cross-module identities.

State files are UTF-8 JSON documents with keys ``dims`` (integers >= 2),
``amplitudes`` (pairs [re, im], row-major over dims) and an optional ``label``.
Reports go to standard output, human-readable by default or as a JSON envelope
with --json; diagnostics go to standard error. Exit codes: 0 success,
1 invariant violation from verify, 2 usage or parse error, 3 convergence
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from typing import Any, TextIO

import numpy as np

from . import __version__
from .tensor_state import StateVector, SubsystemSplit, inner_product
from .schmidt_core import (
    hermitian_eig,
    qubit_split_closed_form,
    reduced_density_matrix,
    schmidt_decompose,
)
from .geometric_nearest import (
    ConvergenceError,
    GeometricResult,
    SolverConfig,
    bipartite_closed_form,
    nearest_product_state,
    normalized_variant,
)
from .partovi_chain import minimize_over_orderings


class ParseError(ValueError):
    """A state file could not be parsed; the message carries field context."""


@dataclass(frozen=True)
class StateFile:
    dims: tuple[int, ...]
    amps: np.ndarray
    label: str | None


def read_state_file(stream: TextIO, source: str = "<stream>") -> StateFile:
    """Parse and validate a state-file document from a text stream."""
    try:
        doc = json.load(stream)
    except json.JSONDecodeError as e:
        raise ParseError(f"{source}: line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top level must be a JSON object")
    for key in ("dims", "amplitudes"):
        if key not in doc:
            raise ParseError(f"{source}: missing required key {key!r}")
    dims = doc["dims"]
    if not isinstance(dims, list) or not dims or not all(
        isinstance(d, int) and not isinstance(d, bool) and d >= 2 for d in dims
    ):
        raise ParseError(f"{source}: dims: expected a non-empty array of integers >= 2")
    raw = doc["amplitudes"]
    if not isinstance(raw, list):
        raise ParseError(f"{source}: amplitudes: expected an array")
    expected = math.prod(dims)
    if len(raw) != expected:
        raise ParseError(
            f"{source}: amplitudes: got {len(raw)} entries, "
            f"dims {dims} require {expected}"
        )
    amps = np.empty(expected, dtype=complex)
    for i, pair in enumerate(raw):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
        ):
            raise ParseError(f"{source}: amplitudes[{i}]: expected a pair [re, im]")
        if not all(math.isfinite(x) for x in pair):
            raise ParseError(f"{source}: amplitudes[{i}]: non-finite value")
        amps[i] = complex(pair[0], pair[1])
    if not np.any(amps):
        raise ParseError(f"{source}: zero state")
    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        raise ParseError(f"{source}: label: expected a string")
    return StateFile(tuple(dims), amps, label)


def _read_source(source: str) -> StateFile:
    if source == "-":
        return read_state_file(sys.stdin, "<stdin>")
    try:
        with open(source, encoding="utf-8") as fh:
            return read_state_file(fh, source)
    except OSError as e:
        raise ParseError(f"{source}: {e.strerror}") from None


def _to_state(sf: StateFile, normalize: bool) -> StateVector:
    psi = StateVector(sf.dims, sf.amps)
    if normalize:
        return psi.normalized()
    if not psi.is_normalized():
        raise ParseError(
            f"state norm^2 is {psi.norm_sq():.12g}, outside 1 +- 1e-8 "
            "(pass --normalize to rescale)"
        )
    return psi


def parse_state_file(source: str | TextIO, normalize: bool = False) -> StateVector:
    """Load a state file from a path, '-' (standard input), or a stream."""
    sf = _read_source(source) if isinstance(source, str) else read_state_file(source)
    return _to_state(sf, normalize)


def _load(args) -> tuple[StateVector, str | None]:
    sf = _read_source(args.file)
    return _to_state(sf, args.normalize), sf.label


def parse_split(spec: str) -> list[tuple[int, ...]]:
    """Parse a split like '0,1|2': groups of subsystem indices, '|' between factors."""
    groups = []
    for part in spec.split("|"):
        try:
            group = tuple(int(tok) for tok in part.split(",") if tok.strip() != "")
        except ValueError:
            raise ParseError(f"--split: {part!r} is not a comma-separated index list") from None
        if not group:
            raise ParseError("--split: empty factor group")
        groups.append(group)
    return groups  # coverage and dimensions validated by SubsystemSplit


def _resolve_split(args, psi: StateVector) -> SubsystemSplit:
    if args.split is None:
        if len(psi.dims) < 2:
            raise ParseError(
                "the state declares a single subsystem; pass --split or declare more dims"
            )
        groups = [(s,) for s in range(len(psi.dims))]
    else:
        groups = parse_split(args.split)
    return SubsystemSplit(psi.dims, groups)


def _split_spec(split: SubsystemSplit) -> str:
    return "|".join(",".join(str(s) for s in g) for g in split.groups)


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _complex_pairs(vec: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in vec]


def _geometric_results(res: GeometricResult) -> dict[str, Any]:
    return {
        "variant": res.variant,
        "lambda": res.lam,
        "cos_theta_c": res.cos_theta_c,
        "sin2_theta_c": res.sin2_theta_c,
        "norm_product": res.product_state.norm_product,
        "factor_norms": list(res.product_state.factor_norms),
        "d2_unnormalized": res.d2_unnormalized,
        "d2_normalized": res.d2_normalized,
        "critical_values": list(res.critical_values),
        "closest_product_factors": [_complex_pairs(f) for f in res.product_state.factors],
    }


def _geometric_diagnostics(res: GeometricResult) -> dict[str, Any]:
    return {
        "residual": res.residual,
        "sweeps": res.sweeps,
        "starts_used": res.starts_used,
        "starts_converged": res.starts_converged,
        "converged": res.converged,
        "warnings": list(res.warnings),
    }


def _geometric_lines(res: GeometricResult) -> list[str]:
    lines = [
        f"variant              {res.variant}",
        f"lambda               {_fmt(res.lam)}",
        f"cos theta_C          {_fmt(res.cos_theta_c)}",
        f"sin^2 theta_C        {_fmt(res.sin2_theta_c)}",
        f"norm product         {_fmt(res.product_state.norm_product)}",
        f"factor norms         {', '.join(_fmt(n) for n in res.product_state.factor_norms)}",
        f"D^2 (unnormalized)   {_fmt(res.d2_unnormalized)}",
        f"D_N^2 (normalized)   {_fmt(res.d2_normalized)}",
        f"critical values      {', '.join(_fmt(v) for v in res.critical_values)}",
        f"residual             {_fmt(res.residual)}   sweeps {res.sweeps}   "
        f"starts {res.starts_converged}/{res.starts_used} converged",
    ]
    lines += [f"warning: {w}" for w in res.warnings]
    return lines


def _run_schmidt(psi, split, args) -> tuple[list[str], dict, dict]:
    sr = schmidt_decompose(psi, split)
    results: dict[str, Any] = {
        "coefficients": [float(p) for p in sr.coefficients],
        "entropy_bits": sr.entropy_bits,
        "entropy_nats": sr.entropy_nats,
        "participation": sr.participation,
        "rank": sr.rank,
        "left_basis": [_complex_pairs(sr.left_basis[:, k]) for k in range(sr.left_basis.shape[1])],
        "right_basis": [_complex_pairs(sr.right_basis[:, k]) for k in range(sr.right_basis.shape[1])],
    }
    lines = [
        f"schmidt coefficients {', '.join(_fmt(p) for p in sr.coefficients)}",
        f"entropy (bits)       {_fmt(sr.entropy_bits)}",
        f"entropy (nats)       {_fmt(sr.entropy_nats)}",
        f"participation K      {_fmt(sr.participation)}",
        f"schmidt rank         {sr.rank}",
    ]
    diagnostics: dict[str, Any] = {"warnings": []}
    if split.factor_dims[0] == 2:
        q = qubit_split_closed_form(psi, split)
        results["qubit_closed_form"] = {
            "concurrence_sq": q.concurrence_sq,
            "mu_plus": q.mu_plus,
            "mu_minus": q.mu_minus,
            "theta_max": q.theta_max,
            "theta_max_amplitude": q.theta_max_amplitude,
            "theta_convention": "cos(theta_max) = mu_plus; "
            "theta_max_amplitude uses cos(theta) = sqrt(mu_plus)",
        }
        lines += [
            f"concurrence^2 C      {_fmt(q.concurrence_sq)}",
            f"mu_plus, mu_minus    {_fmt(q.mu_plus)}, {_fmt(q.mu_minus)}",
            f"theta_max            {_fmt(q.theta_max)} rad (cos theta_max = mu_plus; "
            f"amplitude convention: {_fmt(q.theta_max_amplitude)} rad)",
        ]
    return lines, results, diagnostics


def _run_geometric(psi, split, args) -> tuple[list[str], dict, dict]:
    cfg = SolverConfig(starts=args.starts, max_sweeps=args.max_sweeps, tol=args.tol, seed=args.seed)
    if args.closed_form:
        res = bipartite_closed_form(psi, split)
    elif args.normalized_variant:
        res = normalized_variant(psi, split, cfg)
    else:
        res = nearest_product_state(psi, split, cfg)
    return _geometric_lines(res), _geometric_results(res), _geometric_diagnostics(res)


def _run_partovi(psi, split, args) -> tuple[list[str], dict, dict]:
    best, table = minimize_over_orderings(psi, split)
    results = {
        "best_ordering": list(best.ordering),
        "chain_cos_theta": best.chain_cos_theta,
        "chain_sin2_theta": best.chain_sin2_theta,
        "reconstruction_fidelity": best.reconstruction_fidelity,
        "joint_coefficients": [
            {"branch": list(b), "value": p} for b, p in sorted(best.joint_coefficients.items())
        ],
        "ordering_table": [
            {"ordering": list(o), "chain_sin2_theta": s} for o, s in table
        ],
        "product_state_rule": "largest-coefficient branch at every stage",
    }
    lines = [
        f"best ordering        {''.join(best.ordering)}",
        f"chain cos theta      {_fmt(best.chain_cos_theta)}",
        f"chain sin^2 theta    {_fmt(best.chain_sin2_theta)}",
        f"reconstruction fid.  {_fmt(best.reconstruction_fidelity)}",
        "ordering table:",
    ]
    lines += [f"  {''.join(o):<8} {_fmt(s)}" for o, s in table]
    return lines, results, {"warnings": []}


_CHECK_TOLS = {
    "overlap_equals_norm_product": 1e-9,
    "d2_equals_one_minus_norm_product": 1e-9,
    "d2_normalized_equals_two_one_minus_lambda": 1e-9,
    "norm_product_within_bound": 1e-10,
    "marginal_spectra_agree": 1e-10,
    "norm_product_equals_top_marginal_eigenvalue": 1e-8,
    "qubit_quadratic_matches_marginal_spectrum": 1e-10,
}


def _run_verify(psi, split, args) -> tuple[list[str], dict, dict, bool]:
    cfg = SolverConfig(starts=args.starts, max_sweeps=args.max_sweeps, tol=args.tol, seed=args.seed)
    res = nearest_product_state(psi, split, cfg)
    checks: list[dict[str, Any]] = []

    def check(name: str, deviation: float, tol: float | None = None) -> None:
        tol = _CHECK_TOLS[name] if tol is None else tol
        checks.append(
            {"check": name, "deviation": float(deviation), "tolerance": tol,
             "passed": bool(deviation <= tol)}
        )

    phi = res.product_state.assemble(split)
    pn = res.product_state.norm_product
    overlap = inner_product(phi, psi)
    check("overlap_equals_norm_product", abs(overlap - pn))
    check("d2_equals_one_minus_norm_product", abs(res.d2_unnormalized - (1.0 - pn)))
    check(
        "d2_normalized_equals_two_one_minus_lambda",
        abs(res.d2_normalized - 2.0 * (1.0 - math.sqrt(max(pn, 0.0)))),
    )
    check("norm_product_within_bound", max(pn - 1.0, 0.0))

    for f in range(split.num_factors):
        rest = tuple(s for j, g in enumerate(split.groups) if j != f for s in g)
        bsplit = SubsystemSplit(psi.dims, (split.groups[f], rest))
        ev_a, _ = hermitian_eig(reduced_density_matrix(psi, bsplit, "A"))
        ev_b, _ = hermitian_eig(reduced_density_matrix(psi, bsplit, "B"))
        k = max(len(ev_a), len(ev_b))
        pad_a = np.zeros(k); pad_a[: len(ev_a)] = ev_a
        pad_b = np.zeros(k); pad_b[: len(ev_b)] = ev_b
        check("marginal_spectra_agree", float(np.max(np.abs(pad_a - pad_b))))
        if bsplit.factor_dims[0] == 2:
            q = qubit_split_closed_form(psi, bsplit)
            # The quadratic's root extraction is singular at a degenerate
            # spectrum: an O(eps) error in the minor sum moves the roots by
            # O(sqrt(eps)) when 1 - 4C ~ 0, so the comparison tolerance must
            # widen there. Away from degeneracy the module tolerance applies.
            eps_c = 64.0 * np.finfo(float).eps
            gap = math.sqrt(max(1.0 - 4.0 * q.concurrence_sq, 0.0))
            mu_tol = max(1e-10, 2.0 * eps_c / max(gap, math.sqrt(eps_c)))
            check(
                "qubit_quadratic_matches_marginal_spectrum",
                max(abs(q.mu_plus - ev_a[0]), abs(q.mu_minus - ev_a[1])),
                tol=mu_tol,
            )
        if split.num_factors == 2 and f == 0:
            check("norm_product_equals_top_marginal_eigenvalue", abs(pn - float(ev_a[0])))

    ok = all(c["passed"] for c in checks)
    lines = [
        f"{'PASS' if c['passed'] else 'FAIL'}  {c['check']:<46} "
        f"deviation {_fmt(c['deviation'])} (tol {_fmt(c['tolerance'])})"
        for c in checks
    ]
    lines.append(f"verify: {'all checks passed' if ok else 'VIOLATIONS FOUND'}")
    results = {"checks": checks, "all_passed": ok}
    return lines, results, _geometric_diagnostics(res), ok


def _envelope(args, label, split, results, diagnostics) -> dict[str, Any]:
    return {
        "tool_version": __version__,
        "input_label": label,
        "command": args.command,
        "parameters": {
            "split": _split_spec(split),
            "tol": args.tol,
            "starts": args.starts,
            "max_sweeps": args.max_sweeps,
            "seed": args.seed,
            "normalize": bool(args.normalize),
            "normalized_variant": bool(getattr(args, "normalized_variant", False)),
            "closed_form": bool(getattr(args, "closed_form", False)),
            "ordering_policy": "exhaustive, minimum chain sin^2, lexicographic ties",
        },
        "results": results,
        "diagnostics": diagnostics,
    }


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entangle",
        description="Entanglement measures of pure states from JSON state files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("schmidt", "bipartite Schmidt decomposition, entropy, participation"),
        ("geometric", "nearest product state and the geometric measure"),
        ("partovi", "sequential decomposition chain over all factor orderings"),
        ("summary", "all analyses applicable to the split"),
        ("verify", "run the identity suite; nonzero exit on any violation"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("file", help="state file path, or - for standard input")
        p.add_argument("--split", default=None, metavar="SPEC",
                       help="factor groups of subsystem indices, e.g. 0,1|2 "
                            "(default: one factor per subsystem)")
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--starts", type=int, default=16)
        p.add_argument("--max-sweeps", type=int, default=10_000, dest="max_sweeps")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--normalize", action="store_true",
                       help="rescale the input to unit norm")
        p.add_argument("--json", action="store_true", dest="as_json",
                       help="emit a machine-readable report envelope")
        if name in ("geometric", "summary"):
            p.add_argument("--normalized-variant", action="store_true",
                           dest="normalized_variant",
                           help="iterate with unit-norm factors")
            p.add_argument("--closed-form", action="store_true", dest="closed_form",
                           help="bipartite eigenvalue route instead of iteration")
    return parser


def run_command(argv: list[str] | None = None) -> int:
    """Dispatch a CLI invocation; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else int(e.code or 0)
    try:
        psi, label = _load(args)
        split = _resolve_split(args, psi)
        exit_code = 0
        if args.command == "schmidt":
            lines, results, diagnostics = _run_schmidt(psi, split, args)
        elif args.command == "geometric":
            lines, results, diagnostics = _run_geometric(psi, split, args)
        elif args.command == "partovi":
            lines, results, diagnostics = _run_partovi(psi, split, args)
        elif args.command == "verify":
            lines, results, diagnostics, ok = _run_verify(psi, split, args)
            exit_code = 0 if ok else 1
        else:  # summary
            lines, results, diagnostics = [], {}, {"warnings": []}
            sections: list[tuple[str, Any]] = []
            if split.num_factors == 2:
                sections.append(("schmidt", _run_schmidt))
            sections.append(("geometric", _run_geometric))
            if split.num_factors <= 8:
                sections.append(("partovi", _run_partovi))
            for section, runner in sections:
                s_lines, s_results, s_diag = runner(psi, split, args)
                lines += [f"[{section}]"] + s_lines + [""]
                results[section] = s_results
                diagnostics[section] = s_diag
    except ParseError as e:
        print(f"entangle: parse error: {e}", file=sys.stderr)
        return 2
    except ConvergenceError as e:
        print(f"entangle: convergence failure: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"entangle: {e}", file=sys.stderr)
        return 2

    if args.as_json:
        print(json.dumps(_envelope(args, label, split, results, diagnostics)))
        for w in _collect_warnings(diagnostics):
            print(f"entangle: warning: {w}", file=sys.stderr)
    else:
        header = f"state: {label}" if label else None
        intro = [header] if header else []
        intro.append(f"split: {_split_spec(split)}  (factor dims "
                     f"{'x'.join(str(d) for d in split.factor_dims)})")
        print("\n".join(intro + lines))
        for w in _collect_warnings(diagnostics):
            print(f"entangle: warning: {w}", file=sys.stderr)
    return exit_code


def _collect_warnings(diagnostics: dict[str, Any]) -> list[str]:
    if "warnings" in diagnostics:
        return list(diagnostics.get("warnings", ()))
    out: list[str] = []
    for section in diagnostics.values():
        if isinstance(section, dict):
            out += list(section.get("warnings", ()))
    return out


def console_main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    console_main()
