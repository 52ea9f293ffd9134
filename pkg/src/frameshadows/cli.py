"""Command-line front end.

Subcommands: ``povm`` builds and validates measurements, ``analyze`` emits a
variance report, ``simulate`` runs shot simulations (with optional repeated
realizations and a sample-variance growth curve), ``scan`` sweeps MUB
measurements over a dimension grid. JSON carries structured reports, CSV
carries plot-ready series; every artifact embeds the tool version, the full
config echo, the seed, and the POVM content hash, and is byte-stable across
reruns with the same config. Exit codes: 0 success, 3 validation failure,
4 math-domain error (non-IC strict mode, degenerate prior), 5 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .operators import require_density, require_hermitian, spectrum_with_purity
from .povms import (
    CovariantSampler,
    Povm,
    PovmValidationError,
    is_2design,
    is_3design,
    mub_povm,
    random_rank1,
    toy_qubit_povm,
    validate,
)
from .frames import (
    DegeneratePriorError,
    NotInformationallyCompleteError,
    canonical_dual,
    canonical_estimator,
    is_informationally_complete,
    is_tight,
    min_variance_dual,
)
from .variance import (
    _traceless_inverse_form,  # scan cross-check column
    averaged_second_moment,
    build_variance_report,
    variance_minmax,
)
from .frames import canonical_frame_superop
from .shots import covariant_values, evaluate_estimator, histogram_export, sample_outcomes, summarize
from .serialize import (
    dual_elements_to_json,
    dump_json,
    load_json,
    operator_from_json,
    povm_digest,
    povm_from_dict,
    povm_to_dict,
)

EXIT_OK = 0
EXIT_VALIDATION = 3
EXIT_MATH = 4
EXIT_IO = 5

OUTDIR_ENV = "FRAMESHADOWS_OUTDIR"

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _out_path(path: str) -> str:
    base = os.environ.get(OUTDIR_ENV)
    if base and not os.path.isabs(path):
        os.makedirs(base, exist_ok=True)
        return os.path.join(base, path)
    return path


def build_povm(args) -> Povm:
    if args.povm_json:
        return povm_from_dict(load_json(args.povm_json))
    name = args.builtin
    if name == "mub":
        return mub_povm(args.dim)
    if name == "random-rank1":
        if args.outcomes is None:
            raise ValueError("--outcomes is required for random-rank1")
        return random_rank1(args.dim, args.outcomes, np.random.default_rng(args.seed))
    return toy_qubit_povm(name)


def parse_state(spec: str, d: int) -> np.ndarray:
    """State specs: 'pure:k' (basis projector), 'mixed', 'purity:p', or 'json:PATH'."""
    if spec == "mixed":
        return np.eye(d, dtype=complex) / d
    head, _, tail = spec.partition(":")
    if head == "pure":
        k = int(tail)
        rho = np.zeros((d, d), dtype=complex)
        rho[k, k] = 1.0
        return rho
    if head == "json":
        return require_density(operator_from_json(load_json(tail)))
    raise ValueError(f"unknown state spec {spec!r}")


def random_traceless_normalized(d: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian Hermitian, trace removed, scaled to tr(O^2) = 1."""
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    o = (g + g.conj().T) / 2
    o -= np.trace(o) / d * np.eye(d)
    return o / np.sqrt(np.einsum("ij,ji->", o, o).real)


def parse_observable(spec: str, d: int) -> np.ndarray:
    """Observable specs: 'pauli:XZ...', 'random:SEED', or 'json:PATH'."""
    head, _, tail = spec.partition(":")
    if head == "pauli":
        op = np.array([[1.0]], dtype=complex)
        for letter in tail:
            op = np.kron(op, _PAULI[letter.upper()])
        if op.shape[0] != d:
            raise ValueError(f"Pauli string {tail!r} acts on dim {op.shape[0]}, expected {d}")
        return op
    if head == "random":
        return random_traceless_normalized(d, np.random.default_rng(int(tail)))
    if head == "json":
        return require_hermitian(operator_from_json(load_json(tail)), what="observable")
    raise ValueError(f"unknown observable spec {spec!r}")


def build_dual(povm: Povm, kind: str, prior_spec: str | None):
    if kind == "canonical-estimator":
        return canonical_estimator(povm)
    if kind == "canonical-dual":
        return canonical_dual(povm)
    if kind == "min-variance":
        if prior_spec is None:
            raise ValueError("--prior is required for the min-variance dual")
        return min_variance_dual(povm, parse_state(prior_spec, povm.dim))
    raise ValueError(f"unknown dual kind {kind!r}")


def _config_echo(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _provenance(args, povm: Povm | None) -> dict:
    doc = {"tool_version": __version__, "config": _config_echo(args), "seed": getattr(args, "seed", None)}
    if povm is not None:
        doc["povm_hash"] = povm_digest(povm)
    return doc


def _write_csv(path: str, header_meta: dict, columns: list[str], rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        for key, value in sorted(header_meta.items()):
            fh.write(f"# {key}={json.dumps(value, sort_keys=True)}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def cmd_povm(args) -> int:
    povm = build_povm(args)
    report = validate(povm)
    analysis = {
        "validation": report.to_dict(),
        "informationally_complete": is_informationally_complete(povm),
        "tightness": is_tight(povm).to_dict(),
    }
    if povm.has_rank1_form:
        flag2, res2 = is_2design(povm)
        flag3, res3 = is_3design(povm)
        analysis["design_2"] = {"passes": flag2, "residual": res2}
        analysis["design_3"] = {"passes": flag3, "residual": res3}
    # schema keys stay at top level so the file round-trips into every other command
    doc = {**povm_to_dict(povm), "provenance": _provenance(args, povm), "report": analysis}
    dump_json(doc, _out_path(args.out))
    if not report.passed:
        raise PovmValidationError(f"POVM failed validation: {report.to_dict()}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    povm = build_povm(args)
    dual = build_dual(povm, args.dual, args.prior)
    observable = parse_observable(args.observable, povm.dim)
    rho = parse_state(args.state, povm.dim) if args.state else None
    purity = args.purity if args.purity is not None else (
        float(np.trace(rho @ rho).real) if rho is not None else 1.0
    )
    report = build_variance_report(
        povm,
        dual,
        observable,
        purity,
        rho=rho,
        rng=np.random.default_rng(args.seed),
        context={"observable": args.observable, "state": args.state, "prior": args.prior},
    )
    frame = canonical_frame_superop(povm)
    doc = {
        "provenance": _provenance(args, povm),
        "report": report.to_dict(),
        "frame_spectrum": [float(x) for x in frame.eigenvalues],
        "tightness": is_tight(povm).to_dict(),
    }
    if args.include_dual:
        doc["dual_elements"] = dual_elements_to_json(dual.elements)
    dump_json(doc, _out_path(args.out))
    return EXIT_OK


def _simulate_values(args, povm: Povm | None, rng: np.random.Generator, n: int) -> np.ndarray:
    if args.covariant:
        rho = parse_state(args.state, args.dim)
        observable = parse_observable(args.observable, args.dim)
        return covariant_values(args.dim, rho, observable, n, rng)
    dual = build_dual(povm, args.dual, args.prior)
    rho = parse_state(args.state, povm.dim)
    observable = parse_observable(args.observable, povm.dim)
    outcomes = sample_outcomes(povm, rho, n, rng)
    return evaluate_estimator(dual, observable, outcomes)


def cmd_simulate(args) -> int:
    povm = None if args.covariant else build_povm(args)
    rng = np.random.default_rng(args.seed)
    meta = _provenance(args, povm)

    if args.realizations:
        means = np.empty(args.realizations)
        for r in range(args.realizations):
            means[r] = _simulate_values(args, povm, rng, args.shots).mean()
        summary = summarize(means, args.mom_groups, seed=args.seed)
        values_for_hist = means
        doc_extra = {"mode": "realization_means", "realizations": args.realizations}
    else:
        values = _simulate_values(args, povm, rng, args.shots)
        summary = summarize(values, args.mom_groups, seed=args.seed)
        values_for_hist = values
        doc_extra = {"mode": "single_run"}

    doc = {"provenance": meta, "summary": summary.to_dict(), **doc_extra}
    dump_json(doc, _out_path(args.out_prefix + ".summary.json"))

    hist = histogram_export(values_for_hist, args.bins)
    _write_csv(
        _out_path(args.out_prefix + ".hist.csv"),
        meta,
        ["low", "high", "count", "density"],
        hist.rows(),
    )

    if args.curve_points:
        values = values_for_hist if not args.realizations else _simulate_values(args, povm, rng, args.shots)
        checkpoints = np.unique(np.geomspace(2, len(values), args.curve_points).astype(int))
        rows = [
            (int(n), float(values[:n].mean()), float(values[:n].var(ddof=1)))
            for n in checkpoints
        ]
        _write_csv(
            _out_path(args.out_prefix + ".curve.csv"),
            meta,
            ["n", "running_mean", "running_sample_variance"],
            rows,
        )
    return EXIT_OK


def cmd_scan(args) -> int:
    dims = [int(tok) for tok in args.dims.split(",") if tok]
    rows = []
    seeds = np.random.SeedSequence(args.seed).spawn(len(dims))
    for d, seed in zip(dims, seeds):
        povm = mub_povm(d)
        dual = canonical_estimator(povm)
        observable = random_traceless_normalized(d, np.random.default_rng(seed))
        a_min, a_max = variance_minmax(povm, dual, observable)
        frame = canonical_frame_superop(povm)
        quad = _traceless_inverse_form(frame, observable) + np.trace(observable).real ** 2 / d**2
        rows.append((d, a_min, a_max, averaged_second_moment(povm, dual, observable), quad))
    meta = {"tool_version": __version__, "config": _config_echo(args), "seed": args.seed}
    _write_csv(
        _out_path(args.out),
        meta,
        ["dim", "lambda_min_A", "A_op_norm", "trace_A_over_d", "obs_quadratic_form"],
        rows,
    )
    return EXIT_OK


def _add_povm_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--builtin", choices=["projective", "non-ic-4", "ic-4", "mub", "random-rank1"],
                     help="measurement family to construct")
    src.add_argument("--povm-json", help="path to a POVM JSON file")
    p.add_argument("--dim", type=int, default=2, help="Hilbert space dimension")
    p.add_argument("--outcomes", type=int, help="outcome count for random-rank1")
    p.add_argument("--seed", type=int, default=0, help="root RNG seed, recorded in every artifact")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frameshadows",
                                     description="shadow tomography on general measurement frames")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("povm", help="build a POVM, validate it, and write it with a structure report")
    _add_povm_source(p)
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=cmd_povm)

    p = sub.add_parser("analyze", help="frame spectrum, variances, and bounds for one configuration")
    _add_povm_source(p)
    p.add_argument("--dual", default="canonical-estimator",
                   choices=["canonical-estimator", "canonical-dual", "min-variance"])
    p.add_argument("--prior", help="prior state spec for the min-variance dual (pure:k | mixed | json:PATH)")
    p.add_argument("--state", help="state for the exact variance (pure:k | mixed | json:PATH)")
    p.add_argument("--observable", required=True, help="pauli:XZ.. | random:SEED | json:PATH")
    p.add_argument("--purity", type=float, help="purity for averaged figures (default: from --state, else 1)")
    p.add_argument("--include-dual", action="store_true", help="embed dual-frame elements in the report")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="sample shots and summarize: mean, sample variance, median-of-means")
    _add_povm_source(p)
    p.add_argument("--covariant", action="store_true",
                   help="use the covariant (Haar unitary) measurement instead of a finite POVM")
    p.add_argument("--dual", default="canonical-estimator",
                   choices=["canonical-estimator", "canonical-dual", "min-variance"])
    p.add_argument("--prior", help="prior spec for the min-variance dual")
    p.add_argument("--state", required=True, help="input state spec")
    p.add_argument("--observable", required=True, help="observable spec")
    p.add_argument("-N", "--shots", type=int, required=True)
    p.add_argument("--mom-groups", type=int, help="median-of-means group count K")
    p.add_argument("--realizations", type=int,
                   help="repeat R times and histogram the R sample means")
    p.add_argument("--bins", type=int, default=60)
    p.add_argument("--curve-points", type=int,
                   help="also write a running sample-variance growth curve with this many checkpoints")
    p.add_argument("--out-prefix", required=True, help="artifacts: PREFIX.summary.json, PREFIX.hist.csv[, PREFIX.curve.csv]")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scan", help="MUB scan over a dimension grid: lambda_min(A), ||A||_op, tr(A)/d")
    p.add_argument("--dims", default="2,3,5,7,11,13", help="comma-separated prime dimensions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except PovmValidationError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NotInformationallyCompleteError, DegeneratePriorError) as exc:
        print(f"math-domain error: {exc}", file=sys.stderr)
        return EXIT_MATH
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
