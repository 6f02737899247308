"""Command-line front end for DecoLab

Reports go to stdout (or --output), logs to stderr. Exit status: 0 on
success, 1 on validation errors, 2 when a certificate proves that
environment-assisted recovery is impossible.
"""

import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional

import numpy as np

from DecoLab import channel, decompose, dilation, entropy, matrix_io, numerics, reports
from DecoLab.decolab_config import DecolabConfig
from DecoLab.decolab_enums import ExitCode, FailureReason, OutputFormat
from DecoLab.exceptions import DecolabError, DimensionMismatchError, InvalidParameterError
from DecoLab.reference_suite import SuiteSettings, suite_report

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace, DecolabConfig, int], reports.RunReport]


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--xi", metavar="FILE", help="Correlation matrix file.")
    common.add_argument("--state", metavar="FILE", help="Density matrix file (default: maximally mixed).")
    common.add_argument("--seed", type=lambda s: int(s, 0), default=None, help="Master seed (overrides DECOLAB_SEED).")
    common.add_argument("--tol", type=float, default=None, help="PSD validation tolerance.")
    common.add_argument("--shots", type=int, default=None, help="Sampled measurement shots.")
    common.add_argument("--restarts", type=int, default=None, help="Recovery optimizer restarts.")
    common.add_argument("--outcomes", type=int, default=None, help="Recovery measurement outcome count.")
    common.add_argument("--steps", type=int, default=5, help="Iterations for iterate-recover. Default: 5.")
    common.add_argument("--n-max", type=int, default=10, help="Largest iteration in decay tables. Default: 10.")
    common.add_argument("--config", metavar="FILE", default=None, help="Alternative config.yaml.")
    common.add_argument("--output", metavar="FILE", default=None, help="Write the report here instead of stdout.")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const=OutputFormat.JSON)
    fmt.add_argument("--csv", dest="fmt", action="store_const", const=OutputFormat.CSV)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decolab",
        description="Decoherence maps as Schur multipliers: validation, decompositions and recovery.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()
    helps = {
        "validate": "Check that --xi is a correlation matrix and classify the map.",
        "kraus": "Canonical diagonal Kraus operators.",
        "extremal": "Extremality certificate.",
        "decompose": "Search for a random-unitary decomposition.",
        "dilate": "Environment vectors of the dilation.",
        "recover": "Environment readout and feedback correction.",
        "iterate-recover": "Repeated decoherence corrected from outcome counts.",
        "entropy": "Entropy exchange by every available route.",
        "bounds": "Entropy-production and classical-information bounds.",
        "decay": "Coherence decay table.",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    sub.add_parser(
        "reference-suite",
        aliases=["paper-suite"],
        parents=[common],
        help="Run the regression suite over the embedded matrices.",
    )
    return parser


def _load_channel(args: argparse.Namespace, cfg: DecolabConfig) -> channel.SchurChannel:
    if not args.xi:
        raise DecolabError("--xi is required for this command")
    xi = matrix_io.read_matrix(args.xi)
    return channel.make_channel(
        xi,
        tol=cfg.psd_tol,
        strict_margin=cfg.strict_margin,
        rank_tol=cfg.rank_tol,
        hermitian_tol=cfg.hermitian_tol,
    )


def _load_state(args: argparse.Namespace, ch: channel.SchurChannel, cfg: DecolabConfig) -> np.ndarray:
    if not args.state:
        return numerics.unit_trace_maximally_mixed(ch.dim)
    rho = channel.density_matrix(matrix_io.read_matrix(args.state), cfg.psd_tol, cfg.trace_tol).rho
    if rho.shape != (ch.dim, ch.dim):
        raise DimensionMismatchError(f"State dimension {rho.shape[0]} does not match channel dimension {ch.dim}")
    return rho


def _report(args: argparse.Namespace, cfg: DecolabConfig, seed: int, **kwargs) -> reports.RunReport:
    return reports.RunReport(command=args.command, seed=seed, tolerances=cfg.tolerances(), **kwargs)


def _search(ch: channel.SchurChannel, cfg: DecolabConfig, seed: int) -> decompose.SearchResult:
    return decompose.ru_decompose_search(ch, decompose.SearchConfig.from_config(cfg, seed))


def cmd_validate(args, cfg, seed):
    ch = _load_channel(args, cfg)
    verdict = "strict decoherence" if ch.strict else "border map"
    spectrum = numerics.hermitian_eig(ch.xi)
    return _report(
        args,
        cfg,
        seed,
        results={"dim": ch.dim, "rank": ch.rank, "strict": ch.strict, "verdict": verdict, "eigenvalues": spectrum.eigenvalues},
        passed=True,
    )


def cmd_kraus(args, cfg, seed):
    ch = _load_channel(args, cfg)
    ks = channel.canonical_kraus(ch, cfg.rank_tol)
    return _report(
        args,
        cfg,
        seed,
        results={"rank": len(ks.operators), "diagonals": [row for row in ks.diagonals], "completeness_error": ks.completeness_error()},
        passed=True,
    )


def cmd_extremal(args, cfg, seed):
    ch = _load_channel(args, cfg)
    certificate = decompose.extremality_test(ch)
    code = ExitCode.IMPOSSIBLE if certificate.not_random_unitary else ExitCode.SUCCESS
    return _report(args, cfg, seed, results={"certificate": certificate.to_dict()}, passed=True, exit_code=code)


def _failure_report(args, cfg, seed, failure: decompose.SearchFailure, extra: Optional[dict] = None):
    results = {"search": failure.to_dict()}
    results.update(extra or {})
    impossible = failure.reason is FailureReason.NOT_RANDOM_UNITARY
    return _report(
        args,
        cfg,
        seed,
        results=results,
        passed=False,
        exit_code=ExitCode.IMPOSSIBLE if impossible else ExitCode.SUCCESS,
    )


def cmd_decompose(args, cfg, seed):
    ch = _load_channel(args, cfg)
    result = _search(ch, cfg, seed)
    if isinstance(result, decompose.SearchFailure):
        return _failure_report(args, cfg, seed, result)
    verification = decompose.verify_decomposition(result, ch)
    return _report(
        args,
        cfg,
        seed,
        results={
            "decomposition": result.to_dict(),
            "verification": verification.to_dict(),
            "orthogonal": decompose.orthogonality_check(result),
        },
        passed=True,
    )


def cmd_dilate(args, cfg, seed):
    ch = _load_channel(args, cfg)
    model = dilation.build_dilation(ch)
    results = {
        "env_dim": model.env_dim,
        "env_vectors": [model.env_vectors[:, k] for k in range(model.sys_dim)],
        "gram_error": float(np.max(np.abs(model.gram() - ch.xi))),
        "isometry_error": model.isometry_error(),
    }
    if args.state:
        rho = _load_state(args, ch, cfg)
        out = dilation.dilation_channel_output(model, rho).rho
        results["output_error"] = float(np.max(np.abs(out - channel.apply_schrodinger(ch, rho).rho)))
        results["env_entropy"] = entropy.entropy_exchange_via_dilation(model, rho)
    return _report(args, cfg, seed, results=results, passed=True)


def _optimize(args, cfg, seed, ch):
    # only reached after the configured search failed, so there is nothing to warm-start from
    return dilation.optimize_recovery_measurement(
        ch,
        outcomes=args.outcomes,
        restarts=args.restarts if args.restarts is not None else cfg.optimizer_restarts,
        seed=seed,
        maxiter=cfg.optimizer_maxiter,
        workers=cfg.workers,
        search=False,
    )


def cmd_recover(args, cfg, seed):
    ch = _load_channel(args, cfg)
    rho = _load_state(args, ch, cfg)
    result = _search(ch, cfg, seed)
    if isinstance(result, decompose.SearchFailure):
        best = _optimize(args, cfg, seed, ch)
        return _failure_report(args, cfg, seed, result, {"best_recovery": best.to_dict()})
    shots = args.shots if args.shots is not None else cfg.shots
    recovery = dilation.simulate_feedback_recovery(ch, result, rho, shots=shots, seed=seed, residual_tol=cfg.residual_tol)
    return _report(
        args,
        cfg,
        seed,
        results={
            "decomposition": result.to_dict(),
            "recovery": recovery.to_dict(),
            "fidelity": recovery.worst_case_fidelity,
            "classical_info_bits": recovery.classical_info_bits,
        },
        passed=True,
    )


def cmd_iterate_recover(args, cfg, seed):
    ch = _load_channel(args, cfg)
    rho = _load_state(args, ch, cfg)
    result = _search(ch, cfg, seed)
    if isinstance(result, decompose.SearchFailure):
        return _failure_report(args, cfg, seed, result)
    recovery = dilation.iterated_recovery(ch, result, args.steps, rho, seed=seed, residual_tol=cfg.residual_tol)
    return _report(
        args,
        cfg,
        seed,
        results={"steps": args.steps, "recovery": recovery.to_dict(), "fidelity": recovery.worst_case_fidelity},
        passed=True,
    )


def cmd_entropy(args, cfg, seed):
    ch = _load_channel(args, cfg)
    rho = _load_state(args, ch, cfg)
    results = {
        "s_ex": entropy.entropy_exchange(ch, rho),
        "s_ex_dilation": entropy.entropy_exchange_via_dilation(dilation.build_dilation(ch), rho),
    }
    result = _search(ch, cfg, seed)
    if isinstance(result, decompose.RandomUnitaryDecomposition):
        results["s_ex_random_unitary"] = entropy.entropy_exchange_ru(result, rho)
    frame = entropy.reference_frame_state(ch, np.real(np.diag(rho)))
    results["reference_frame"] = frame.to_dict()
    return _report(args, cfg, seed, results=results, passed=True)


def cmd_bounds(args, cfg, seed):
    ch = _load_channel(args, cfg)
    rho = _load_state(args, ch, cfg)
    result = _search(ch, cfg, seed)
    dec = result if isinstance(result, decompose.RandomUnitaryDecomposition) else None
    info = entropy.check_bounds(ch, rho, dec)
    passed = info.entropy_production <= info.s_ex + 1e-9 and (info.bound_gap is None or info.bound_gap >= -1e-9)
    return _report(args, cfg, seed, results={"bounds": info.to_dict()}, passed=passed)


def cmd_decay(args, cfg, seed):
    ch = _load_channel(args, cfg)
    rho = _load_state(args, ch, cfg)
    rows = reports.decay_curve(ch, rho, args.n_max)
    worst = max((abs(r.observed - r.predicted) for r in rows), default=0.0)
    return _report(
        args,
        cfg,
        seed,
        results={"rows": [r.as_tuple() for r in rows], "max_error": worst},
        passed=worst <= 1e-10,
        table=rows,
    )


def cmd_reference_suite(args, cfg, seed):
    settings = SuiteSettings(
        seed=seed,
        restarts=args.restarts if args.restarts is not None else cfg.optimizer_restarts,
        shots=args.shots if args.shots is not None else 1000,
        workers=cfg.workers,
    )
    return suite_report(settings, cfg)


COMMANDS: Dict[str, Handler] = {
    "validate": cmd_validate,
    "kraus": cmd_kraus,
    "extremal": cmd_extremal,
    "decompose": cmd_decompose,
    "dilate": cmd_dilate,
    "recover": cmd_recover,
    "iterate-recover": cmd_iterate_recover,
    "entropy": cmd_entropy,
    "bounds": cmd_bounds,
    "decay": cmd_decay,
    "reference-suite": cmd_reference_suite,
    "paper-suite": cmd_reference_suite,
}


def _emit(report: reports.RunReport, args: argparse.Namespace) -> None:
    rows = report.table
    fmt = args.fmt or (OutputFormat.CSV if rows is not None else OutputFormat.JSON)
    stream = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        if fmt is OutputFormat.CSV and rows is not None:
            reports.write_csv(rows, stream)
        else:
            report.write(stream)
    finally:
        if args.output:
            stream.close()


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = DecolabConfig.from_yaml(args.config)
    cfg.configure_logging()
    if args.tol is not None:
        cfg.psd_tol = args.tol
    seed = cfg.resolve_seed(args.seed)
    logger.debug("Running %s with seed %d", args.command, seed)

    try:
        if seed < 0:
            raise InvalidParameterError(f"Seed must be nonnegative, got {seed}")
        report = COMMANDS[args.command](args, cfg, seed)
    except DecolabError as e:
        logger.error("%s: %s", type(e).__name__, e)
        results = {"error": type(e).__name__, "message": str(e)}
        position = getattr(e, "position", None)
        if position:
            results["position"] = position
        report = _report(args, cfg, seed, results=results, passed=False, exit_code=ExitCode.VALIDATION_ERROR)
    _emit(report, args)
    return int(report.exit_code)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
