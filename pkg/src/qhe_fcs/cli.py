"""Command-line front end: ``qhe-fcs {point,sweep,generate,train,eval,verify}``."""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

from . import __version__
from .ann import NetworkModel, TrainConfig, metrics, train
from .dataset import distribution_stats, generate, load_dataset, save_dataset, split_arrays
from .engine import EngineParams
from .errors import QheError
from .fcs import FcsConfig, cumulants
from .sweep import Axis, SweepSpec, run_sweep, write_grid
from .verify import format_table, run_suite

SPLIT_LABELS = (("train", "training"), ("validation", "validation"), ("test", "test"))


def read_config(path):
    """Split a key=value file into FcsConfig and TrainConfig keyword dicts."""
    fcs_kw, train_kw = {}, {}
    if not path:
        return fcs_kw, train_kw
    fcs_fields = {f.name: f for f in dataclasses.fields(FcsConfig)}
    train_fields = {f.name: f for f in dataclasses.fields(TrainConfig)}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, raw = (s.strip() for s in line.partition("="))
        if key in fcs_fields:
            fcs_kw[key] = _coerce(getattr(FcsConfig(), key), raw)
        elif key in train_fields:
            train_kw[key] = _coerce(getattr(TrainConfig(), key), raw)
        else:
            raise SystemExit(f"{path}:{lineno}: unknown config key {key!r}")
    return fcs_kw, train_kw


def _coerce(default, raw):
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, tuple):
        return tuple(int(x) for x in raw.split(",") if x.strip())
    return type(default)(float(raw)) if isinstance(default, int) else type(default)(raw)


def _add_engine_flags(p, T_l=0.7, p_c=0.0):
    p.add_argument("--Tc0", type=float, default=0.6)
    p.add_argument("--Th0", type=float, default=1.6)
    p.add_argument("--Tl", type=float, default=T_l)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--ph", type=float, default=0.0)
    p.add_argument("--pc", type=float, default=p_c)
    p.add_argument("--A0", type=float, default=0.007)
    p.add_argument("--omega", type=float, default=0.7)
    p.add_argument("--r", type=float, default=5.0)
    p.add_argument("--g", type=float, default=10.0)


def _engine_kwargs(args):
    return dict(T_c0=args.Tc0, T_h0=args.Th0, T_l=args.Tl, phi=args.phi, p_h=args.ph, p_c=args.pc,
                A0=args.A0, omega=args.omega, r=args.r, g=args.g)


def _axis(text):
    try:
        name, lo, hi, steps = text.split(":")
        return Axis(name, float(lo), float(hi), int(steps))
    except ValueError:
        raise argparse.ArgumentTypeError(f"axis must be name:min:max:steps, got {text!r}")


def _fmt(v):
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else (f"{v:.17g}" if isinstance(v, float) else str(v))


def cmd_point(args, fcs_cfg, _):
    params = EngineParams(**_engine_kwargs(args))
    cs = cumulants(params, fcs_cfg, allow_zero_flux=True)
    for key, value in cs.as_dict().items():
        print(f"{key}={_fmt(value)}")
    print(f"entropy_production={_fmt(cs.entropy_production)}")
    for key, value in dataclasses.asdict(fcs_cfg).items():
        print(f"fcs.{key}={_fmt(value)}")
    return 0


def cmd_sweep(args, fcs_cfg, _):
    fixed = _engine_kwargs(args)
    for ax in (args.x, args.y):
        fixed.pop(ax.name, None)
    spec = SweepSpec(args.x, args.y, fixed, args.quantity, args.backend, args.model)
    rows = run_sweep(spec, fcs_cfg)
    write_grid(args.out, spec, rows, fcs_cfg)
    failed = sum(s != "ok" for *_, s in rows)
    print(f"wrote {len(rows)} cells to {args.out} ({failed} failed)")
    return 0


def cmd_generate(args, fcs_cfg, _):
    records, manifest = generate(args.count, args.seed, fcs_cfg, threads=args.threads)
    save_dataset(args.out, records, manifest)
    stats = distribution_stats(records)
    print(f"records={len(records)} ok={stats.count} digest={manifest.digest}")
    print(f"mean={stats.mean:.6g} mode={stats.mode:.6g} frac_above={stats.frac_above:.4f} "
          f"frac_below={stats.frac_below:.4f} frac_near={stats.frac_near:.4f}")
    return 0


def _print_table(per_split):
    print(f"{'':8s}" + "".join(f"{label:>14s}" for _, label in SPLIT_LABELS))
    for name, attr in (("MAE", "mae"), ("MAPE(%)", "mape"), ("RMSE", "rmse"), ("R^2", "r2"), ("MSE", "mse")):
        print(f"{name:8s}" + "".join(f"{getattr(per_split[s], attr):14.6f}" for s, _ in SPLIT_LABELS))


def cmd_train(args, _, train_kw):
    records, manifest = load_dataset(args.data)
    cfg = TrainConfig(**{**train_kw, "seed": args.seed if args.seed is not None else train_kw.get("seed", 0)})
    model, report = train(records, cfg, manifest_digest=manifest.digest)
    model.save(args.out)
    if args.report:
        lines = ["epoch train_mse val_mse"]
        lines += [f"{i + 1} {a:.17g} {b:.17g}" for i, (a, b) in enumerate(zip(report.train_mse, report.val_mse))]
        lines.append("# steps: epoch sigma accepted train_mse")
        lines += [f"# {e} {s:.3g} {int(a)} {m:.17g}" for e, s, a, m in report.steps]
        Path(args.report).write_text("\n".join(lines) + "\n")
    print(f"epochs={len(report.train_mse)} best_epoch={report.best_epoch} stop={report.stop_reason}")
    _print_table(report.metrics)
    return 0


def cmd_eval(args, _, __):
    records, _ = load_dataset(args.data)
    model = NetworkModel.load(args.model)
    _print_table({s: metrics(model, *split_arrays(records, s)) for s, _ in SPLIT_LABELS})
    return 0


def cmd_verify(args, _, __):
    results = run_suite(args.only or None)
    print(format_table(results))
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file with FcsConfig / TrainConfig fields")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out")
    common.add_argument("--backend", choices=("exact", "model"), default="exact")
    common.add_argument("--model")
    common.add_argument("--threads", type=int, default=1)

    parser = argparse.ArgumentParser(prog="qhe-fcs", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("point", parents=[common], help="cumulants at one parameter point")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_point)

    p = sub.add_parser("sweep", parents=[common], help="two-parameter grid of one quantity")
    _add_engine_flags(p)
    p.add_argument("--x", type=_axis, default=Axis("phi", 0.0, 2 * math.pi, 20))
    p.add_argument("--y", type=_axis, default=Axis("p_h", 0.0, 1.0, 20))
    p.add_argument("--quantity", default="F")
    p.set_defaults(func=cmd_sweep, out="sweep.txt")

    p = sub.add_parser("generate", parents=[common], help="labelled dataset")
    p.add_argument("--count", type=int, default=3000)
    p.set_defaults(func=cmd_generate, out="dataset.csv")

    p = sub.add_parser("train", parents=[common], help="Levenberg-Marquardt training")
    p.add_argument("--data", required=True)
    p.add_argument("--report", help="optional per-epoch log file")
    p.set_defaults(func=cmd_train, out="model.txt")

    p = sub.add_parser("eval", parents=[common], help="metrics of a trained model on all splits")
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    p.add_argument("--only", nargs="*", help="restrict to the named invariants")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fcs_kw, train_kw = read_config(args.config)
    if args.command == "generate" and args.seed is None:
        args.seed = 1
    if args.command == "eval" and not args.model:
        raise SystemExit("eval needs --model")
    try:
        return args.func(args, FcsConfig(**fcs_kw), train_kw)
    except QheError as exc:
        print(f"error={exc.name} {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
