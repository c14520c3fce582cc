"""Command-line interface.

Subcommands: decompose, cost, metrics, random-unitary, predict-time.
Exit codes: 0 success, 1 usage error, 2 convergence failure, 3 I/O or
format error.  Machine-readable output goes to stdout, diagnostics to
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .compressor import (
    AnsatzSpec,
    CompressionConfig,
    FailedToConverge,
    adaptive_compress,
    finalize,
)
from .dfe import DfeConfig, predict_time, run_chain
from .optimizer import OptimizerConfig
from .simulator import cost as simulator_cost
from .toolkit import (
    UnitaryFormatError,
    QasmError,
    cx_count,
    depth,
    export_qasm,
    haar_random_unitary,
    import_qasm,
    metrics_report,
    read_unitary,
    write_unitary,
)

USAGE_ERROR = 1
CONVERGENCE_ERROR = 2
IO_ERROR = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage problems; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _add_dfe_flags(p):
    p.add_argument("--chain", type=int, default=108, help="gate blocks per pass")
    p.add_argument("--lanes", type=int, default=4, help="parallel stream lanes")
    p.add_argument("--clock", type=float, default=3.5e8, help="clock rate in Hz")
    p.add_argument("--t0", type=float, default=1e-3, help="fixed overhead in seconds")


def _dfe_config(args) -> DfeConfig:
    return DfeConfig(
        chain_length=args.chain,
        lanes=args.lanes,
        clock_hz=args.clock,
        overhead_seconds=args.t0,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gateforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="synthesize a circuit for a UMAT unitary")
    p.add_argument("--unitary", required=True, help="input UMAT file")
    p.add_argument("--layers", type=int, required=True, help="initial ansatz layers")
    p.add_argument("--tolerance", type=float, default=1e-4, help="target cost")
    p.add_argument("--backend", choices=("reference", "dfe"), default="reference")
    p.add_argument("--seed", type=int, default=0, help="optimizer seed")
    p.add_argument("--max-rounds", type=int, default=64, help="compression budget")
    p.add_argument("--max-iters", type=int, default=10000, help="iterations per run")
    p.add_argument("--out", required=True, help="output OPENQASM file")
    p.add_argument("--report", help="optional JSON report file")
    _add_dfe_flags(p)

    p = sub.add_parser("cost", help="evaluate a circuit against a unitary")
    p.add_argument("--unitary", required=True, help="UMAT file")
    p.add_argument("--circuit", required=True, help="OPENQASM file")
    p.add_argument("--backend", choices=("reference", "dfe"), default="reference")
    _add_dfe_flags(p)

    p = sub.add_parser("metrics", help="print circuit shape metrics")
    p.add_argument("--circuit", required=True, help="OPENQASM file")

    p = sub.add_parser("random-unitary", help="write a Haar-random UMAT file")
    p.add_argument("-n", "--qubits", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output UMAT file")

    p = sub.add_parser("predict-time", help="predicted seconds per evaluation")
    p.add_argument("-n", "--qubits", type=int, required=True)
    p.add_argument("--params", type=int, required=True, help="free parameter count")
    p.add_argument("--gates", type=int, required=True, help="chain gate count")
    _add_dfe_flags(p)

    return parser


def _cmd_decompose(args) -> int:
    u = read_unitary(args.unitary)
    # aim below the acceptance tolerance so gate removal has slack to spend
    opt = OptimizerConfig(
        max_iters=args.max_iters,
        target_cost=0.1 * args.tolerance,
        rng_seed=args.seed,
    )
    config = CompressionConfig(
        tolerance=args.tolerance, max_rounds=args.max_rounds, optimizer=opt
    )
    spec = AnsatzSpec(u.n_qubits, args.layers)
    try:
        circuit, params, trace = adaptive_compress(u, spec, config, args.backend)
    except FailedToConverge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONVERGENCE_ERROR
    final_circuit, final_params = finalize(circuit, params)
    export_qasm(final_circuit, final_params, args.out)

    report = simulator_cost(u, final_circuit, final_params)
    summary = {
        "metrics": metrics_report(final_circuit, report).to_dict(),
        "optimize": {
            "iterations": trace.iterations,
            "escapes": trace.escapes,
            "expansions": trace.expansions,
            "final_cost": trace.final_cost,
            "wall_seconds": trace.wall_seconds,
        },
        "backend": args.backend,
        "seed": args.seed,
        "layers": args.layers,
        "tolerance": args.tolerance,
    }
    if args.backend == "dfe":
        _, _, cycles = run_chain(
            u, final_circuit, final_params, _dfe_config(args), want_gradient=False
        )
        summary["dfe"] = {
            "passes": cycles.passes,
            "cycles": cycles.cycles,
            "elements_streamed": cycles.elements_streamed,
            "predicted_seconds": cycles.predicted_seconds,
            "approximate": cycles.approximate,
        }
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(json.dumps(summary["metrics"], sort_keys=True))
    return 0


def _cmd_cost(args) -> int:
    u = read_unitary(args.unitary)
    circuit, params = import_qasm(args.circuit)
    if args.backend == "dfe":
        report, _, _ = run_chain(u, circuit, params, _dfe_config(args), want_gradient=False)
    else:
        report = simulator_cost(u, circuit, params)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def _cmd_metrics(args) -> int:
    circuit, _ = import_qasm(args.circuit)
    print(json.dumps({"cx_count": cx_count(circuit), "depth": depth(circuit)},
                     separators=(",", ":"), sort_keys=True))
    return 0


def _cmd_random_unitary(args) -> int:
    if args.qubits < 1:
        print("error: need at least one qubit", file=sys.stderr)
        return USAGE_ERROR
    write_unitary(haar_random_unitary(args.qubits, args.seed), args.out)
    return 0


def _cmd_predict_time(args) -> int:
    if args.qubits < 1 or args.params < 0 or args.gates < 0:
        print("error: bad problem shape", file=sys.stderr)
        return USAGE_ERROR
    seconds = predict_time(args.qubits, args.params, args.gates, _dfe_config(args))
    print(f"{seconds:.6e}")
    return 0


_COMMANDS = {
    "decompose": _cmd_decompose,
    "cost": _cmd_cost,
    "metrics": _cmd_metrics,
    "random-unitary": _cmd_random_unitary,
    "predict-time": _cmd_predict_time,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse raises for --version (code 0) and usage errors (code 1
        # after the override above); fold both into the return contract
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        return _COMMANDS[args.command](args)
    except (UnitaryFormatError, QasmError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return IO_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return IO_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
