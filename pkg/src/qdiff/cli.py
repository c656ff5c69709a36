"""Command-line entry point: ``qdiff <subcommand> [options]``.

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import assembler as asm
from . import bench, solvers
from .config import ConfigError, ProblemConfig, Scheme, apply_step_policy
from .hhl import HHLError, solve_dilated
from .sparse import save_vector
from .spectra import DENSE_CAP, HypothesisError, spectral_report

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


def _load(args) -> ProblemConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = ProblemConfig.from_json(args.config)
    return apply_step_policy(cfg) if getattr(args, "policy", False) else cfg


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_assemble(args) -> int:
    cfg = _load(args)
    system = asm.assemble(cfg)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    header = f"scheme {system.scheme}\nblock_size {system.block_size} n_steps {system.n_steps} n_fields {system.n_fields}"
    system.L.save_text(out / "matrix.txt", header=header)
    save_vector(out / "rhs.txt", system.F, header=f"scheme {system.scheme}")
    meta = {"scheme": system.scheme, "order": system.order, "nnz": system.L.nnz, "sparsity": system.L.sparsity(),
            "block_size": system.block_size, "n_steps": system.n_steps, "n_fields": system.n_fields,
            "variable_scaling": system.variable_scaling, "config": cfg.to_dict()}
    (out / "system.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(json.dumps({"order": system.order, "nnz": system.L.nnz, "out": str(out)}))
    return EXIT_OK


def cmd_spectra(args) -> int:
    cfg = _load(args)
    system = asm.assemble(cfg)
    rep = spectral_report(system.L, dense_cap=args.dense_cap, intervals=args.intervals)
    _write(rep.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _load(args)
    if args.method == "direct":
        system = asm.assemble(cfg)
        S = solvers.solve_spacetime_direct(system, order_cap=args.dense_cap)
        parts = system.unscale(S)
        if args.format == "json":
            _write(json.dumps({"fields": system.field_names, "solution": [p.tolist() for p in parts]}) + "\n", args.out)
        else:
            lines = ["step,node," + ",".join(system.field_names)]
            for n in range(system.n_steps):
                for j in range(system.block_size):
                    lines.append(f"{n + 1},{j}," + ",".join(repr(float(p[n, j])) for p in parts))
            _write("\n".join(lines) + "\n", args.out)
        return EXIT_OK
    kw = {"force": args.force} if cfg.scheme == Scheme.EXPLICIT_MULTISCALE else {}
    res = solvers.march(cfg, **kw)
    if args.format == "json":
        body = {"times": res.times.tolist(), "u": res.u.tolist(), "v": None if res.v is None else res.v.tolist(),
                "final_error_inf": res.final_error_inf, "ops": res.ops.total()}
        _write(json.dumps(body) + "\n", args.out)
    elif args.out:
        res.to_csv(args.out)
    else:
        sys.stdout.write(res.csv_text())
    return EXIT_OK


def cmd_hhl(args) -> int:
    cfg = _load(args)
    system = asm.assemble(cfg)
    if args.pad:
        system = asm.pad_history_state(system)
    if 2 * system.order > 1024:
        raise HHLError(f"dilated order {2 * system.order} exceeds the statevector cap 1024")
    res = solve_dilated(system, n_t=args.clock_qubits)
    summary = {"fidelity": res.fidelity, "success_probability": res.success_probability,
               "params": res.params.to_dict(), "checks": res.checks}
    if args.out:
        res.output_state.dump(args.out)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args) if args.config else None
    if not args.values:
        raise ConfigError("--values is required")
    values = [float(v) for v in args.values.split(",")]
    if args.vary == "epsilon":
        base = cfg or ProblemConfig.from_dict({"equation": "Telegraph", "scheme": "PreconditionedIMEX"})
        tau = base.tau if cfg else 0.05
        h = base.h if cfg else 0.5
        recs = bench.sweep_epsilon(base.scheme.value, values, tau=tau, h=h, base=base,
                                   ops=not args.no_ops, dense_cap=args.dense_cap, force=args.force)
    else:
        if cfg is None:
            raise ConfigError("--vary nx needs --config")
        recs = bench.sweep_resolution(cfg, [int(v) for v in values], ops=not args.no_ops,
                                      dense_cap=args.dense_cap, force=args.force)
    bench.emit_report(recs, args.format, args.out)
    if not args.out:
        sys.stdout.write(bench.render_report(recs, args.format))
    return EXIT_OK


def cmd_report(args) -> int:
    if args.input:
        rows = _read_rows(Path(args.input))
        fit = bench.fit_scaling_exponent([(float(r[args.x]), float(r[args.y])) for r in rows], args.x, args.y)
        _write(json.dumps(fit.to_dict(), indent=2) + "\n", args.out)
        return EXIT_OK
    rows = bench.sharp_bound_rows(dense_cap=args.dense_cap)
    _write(bench.render_report(rows, args.format), args.out)
    return EXIT_OK


def _read_rows(path: Path) -> list[dict]:
    text = path.read_text()
    if text.lstrip().startswith("["):
        return json.loads(text)
    import csv
    return list(csv.DictReader(text.splitlines()))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="problem configuration (JSON)")
    common.add_argument("--out", help="output path (directory for assemble)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--dense-cap", type=int, default=DENSE_CAP)
    common.add_argument("--force", action="store_true", help="lift the explicit-scheme step cap")
    common.add_argument("--policy", action="store_true", help="apply the scheme's step-size policy first")

    p = argparse.ArgumentParser(prog="qdiff", description="Space-time linear systems for evolution equations.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("assemble", parents=[common], help="write L and F as text").set_defaults(fn=cmd_assemble)
    sp_ = sub.add_parser("spectra", parents=[common], help="singular-value report (JSON)")
    sp_.add_argument("--intervals", action="store_true", help="include Gershgorin intervals")
    sp_.set_defaults(fn=cmd_spectra)
    so = sub.add_parser("solve", parents=[common], help="march or solve the space-time system")
    so.add_argument("--method", choices=("march", "direct"), default="march")
    so.set_defaults(fn=cmd_solve)
    hh = sub.add_parser("hhl", parents=[common], help="simulate HHL on the dilated system")
    hh.add_argument("--clock-qubits", type=int, default=10)
    hh.add_argument("--pad", action="store_true", help="append the final-state copies first")
    hh.set_defaults(fn=cmd_hhl)
    sw = sub.add_parser("sweep", parents=[common], help="epsilon or resolution sweep")
    sw.add_argument("--vary", choices=("epsilon", "nx"), required=True)
    sw.add_argument("--values", required=True, help="comma-separated list")
    sw.add_argument("--no-ops", action="store_true", help="skip the counted march")
    sw.set_defaults(fn=cmd_sweep)
    rp = sub.add_parser("report", parents=[common], help="sharp-bound table or a scaling fit of a sweep file")
    rp.add_argument("--input", help="sweep output to fit")
    rp.add_argument("--x", default="n_x")
    rp.add_argument("--y", default="kappa")
    rp.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    np.random.seed(args.seed)
    try:
        return args.fn(args)
    except (solvers.NumericalError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, HypothesisError, HHLError, ValueError, KeyError, TypeError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
