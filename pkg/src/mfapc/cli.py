"""``mfapc`` command line.

Exit codes: 0 success (a diverged run still counts), 1 non-convergence,
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, dumps, read_config
from .edlm import PseudoJacobianMatrix
from .errors import DegenerateSystemError, MFAPCError, NonConvergenceError
from .estimators import save_checkpoint
from .estimators.gradcheck import FAMILIES, gradcheck
from .plots import write_plots
from .scenarios import PRESETS, build_network, build_plant, execute, train_network
from .simkit.plants import PLANTS, make_plant
from .stability import characteristic_matrix, closed_loop_poles, stability_margin

EXIT_OK, EXIT_NONCONVERGED, EXIT_USAGE = 0, 1, 2
GRADCHECK_TOL = 1e-5


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    return repr(float(x))


def parse_sweep(text: str) -> np.ndarray:
    """``lo:hi:step`` with ``hi`` included when it lies on the grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--lambda-sweep expects lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--lambda-sweep has a non-numeric field: {text!r}") from None
    if not all(math.isfinite(v) for v in (lo, hi, step)) or step <= 0 or hi < lo:
        raise UsageError(f"--lambda-sweep needs finite lo <= hi and step > 0, got {text!r}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    # rounding keeps grid points like -0.4 from printing as -0.39999999999999997
    return np.round(lo + step * np.arange(n), 12)


def _summary(cfg: RunConfig, result) -> str:
    tr = result.trace
    lines = [
        f"plant={result.plant.name}",
        f"steps={tr.steps}",
        f"diverged={'true' if tr.diverged else 'false'}",
        f"diverged_at={tr.diverged_at if tr.diverged else ''}",
        f"rms_error={_fmt(tr.rms_error(skip=min(100, tr.steps // 2)))}",
        f"max_abs_error={_fmt(tr.max_abs_error())}",
        f"max_abs_y={_fmt(tr.max_abs_y())}",
    ]
    if result.training is not None:
        lines.append(f"training_epochs={result.training[0]}")
        lines.append(f"training_final_error={_fmt(result.training[1])}")
    lam = cfg.controller_config().uniform_lambda
    if lam is not None and not cfg.tuner.enabled and tr.steps:
        # analyse the loop around the last PJM the controller used
        pjm = PseudoJacobianMatrix(tr.pjm_blocks()[-1])
        c = cfg.controller
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                rep = stability_margin(characteristic_matrix(pjm, c.N, c.Nu, lam))
                lines.append(f"stability_verdict={rep.verdict}")
                lines.append(f"stability_max_root_modulus={_fmt(rep.max_modulus)}")
            except DegenerateSystemError:
                lines.append("stability_verdict=degenerate")
            exact = closed_loop_poles(pjm, c.N, c.Nu, lam)
        lines.append(f"closed_loop_verdict={exact.verdict}")
        lines.append(f"closed_loop_max_modulus={_fmt(exact.max_modulus)}")
    for note in tr.notes:
        lines.append(f"note={note}")
    return "\n".join(lines) + "\n"


def _write_run(cfg: RunConfig, out: Path, label: str) -> int:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.echo").write_text(dumps(cfg))
    try:
        result = execute(cfg)
    except NonConvergenceError as exc:
        print(f"{label}: estimator training did not converge: epochs={exc.epochs} final_error={exc.final_error!r}")
        return EXIT_NONCONVERGED
    tr = result.trace
    tr.to_csv(out / "trace.csv")
    write_plots(tr, out, include_lambda=cfg.tuner.enabled)
    (out / "summary.txt").write_text(_summary(cfg, result))
    if tr.diverged:
        print(f"warning: {label} diverged at k={tr.diverged_at} ({'; '.join(tr.notes)})")
    print(f"{label}: {tr.steps} steps written to {out}")
    return EXIT_OK


def cmd_run_example(args) -> int:
    cfg = PRESETS[args.example_id]
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = Path(args.out) if args.out else Path("runs") / args.example_id
    return _write_run(cfg, out, f"example {args.example_id}")


def cmd_run(args) -> int:
    cfg = read_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = Path(args.out) if args.out else Path("runs") / Path(args.config).stem
    return _write_run(cfg, out, str(args.config))


def cmd_show_config(args) -> int:
    sys.stdout.write(dumps(PRESETS[args.example_id]))
    return EXIT_OK


def _load_pjm(args) -> PseudoJacobianMatrix:
    if args.pjm:
        try:
            data = json.loads(Path(args.pjm).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read PJM file {args.pjm}: {exc}") from None
        blocks = data["blocks"] if isinstance(data, dict) else data
        arr = np.array(blocks, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(-1, 1, 1)  # SISO coefficients phi_1..phi_L
        pjm = PseudoJacobianMatrix(arr)
        return pjm.truncated(args.L) if args.L else pjm
    plant = make_plant(args.plant)
    L = args.L or plant.n_u + 1
    return plant.true_pjm(np.zeros((L, plant.Mu)), np.zeros((plant.n_y + 1, plant.My)), L)


def cmd_stability(args) -> int:
    pjm = _load_pjm(args)
    lams = parse_sweep(args.lambda_sweep) if args.lambda_sweep else np.array([args.lam])
    rows = []
    for lam in lams:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rep = stability_margin(characteristic_matrix(pjm, args.N, args.Nu, lam))
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        exact = closed_loop_poles(pjm, args.N, args.Nu, lam)
        rows.append((float(lam), rep, exact))
    if args.lambda_sweep:
        print("lambda,max_root_modulus,verdict,closed_loop_max_modulus,closed_loop_verdict")
        for lam, rep, exact in rows:
            print(f"{lam!r},{rep.max_modulus!r},{rep.verdict},{exact.max_modulus!r},{exact.verdict}")
        return EXIT_OK
    lam, rep, exact = rows[0]
    print(f"lambda={lam!r}")
    print(f"verdict={rep.verdict}")
    print(f"max_root_modulus={rep.max_modulus!r}")
    print(f"zero_roots_removed={rep.zero_roots_removed}")
    for r in rep.roots:
        print(f"root={float(r.real)!r}{float(r.imag):+}j modulus={float(abs(r))!r}")
    print(f"closed_loop_verdict={exact.verdict}")
    print(f"closed_loop_max_modulus={exact.max_modulus!r}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    rep = gradcheck(args.family, args.trials, seed=args.seed)
    ok = rep.passed(GRADCHECK_TOL)
    print(f"family={rep.family} trials={rep.trials} worst_relative_error={rep.worst!r} {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NONCONVERGED


def cmd_train(args) -> int:
    cfg = read_config(args.config)
    if not cfg.estimator.kind.startswith("mlp"):
        raise ConfigError("train needs estimator.kind = mlp-offline or mlp-online", ("estimator.kind",))
    plant = build_plant(cfg)
    net = build_network(cfg, plant)
    try:
        net, epochs, err = train_network(cfg, plant, net)
    except NonConvergenceError as exc:
        print(f"epochs={exc.epochs} final_error={exc.final_error!r} (epoch cap reached, not converged)")
        return EXIT_NONCONVERGED
    save_checkpoint(args.out, net)
    print(f"epochs={epochs} final_error={err!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfapc", description="Model-free adaptive predictive control toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run-example", help="run a built-in example scenario")
    s.add_argument("example_id", choices=sorted(PRESETS))
    s.add_argument("--out", help="output directory (default runs/<id>)")
    s.add_argument("--seed", type=int, help="override the preset seed")
    s.set_defaults(func=cmd_run_example)

    s = sub.add_parser("run", help="run a scenario from a config file")
    s.add_argument("config")
    s.add_argument("--seed", type=int, help="override run.seed")
    s.add_argument("--out", help="output directory (default runs/<config stem>)")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("show-config", help="print a built-in example's config")
    s.add_argument("example_id", choices=sorted(PRESETS))
    s.set_defaults(func=cmd_show_config)

    s = sub.add_parser("stability", help="closed-loop root analysis for a frozen PJM")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--pjm", help="JSON file: list of My x Mu blocks, or {'blocks': [...]}")
    src.add_argument("--plant", choices=sorted(PLANTS), help="use a built-in plant's PJM at the origin")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--Nu", type=int, required=True)
    s.add_argument("--L", type=int, help="pseudo order (truncates the PJM)")
    lam = s.add_mutually_exclusive_group(required=True)
    lam.add_argument("--lambda", dest="lam", type=float)
    lam.add_argument("--lambda-sweep", help="lo:hi:step")
    s.set_defaults(func=cmd_stability)

    s = sub.add_parser("gradcheck", help="network Jacobians against finite differences")
    s.add_argument("--family", choices=FAMILIES, required=True)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_gradcheck)

    s = sub.add_parser("train", help="offline MLP training from a config's [training] section")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default="checkpoint.npz", help="checkpoint path")
    s.set_defaults(func=cmd_train)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, MFAPCError, ValueError, OSError) as exc:
        parser.exit(EXIT_USAGE, f"mfapc {args.command}: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
