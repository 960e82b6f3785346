"""Command-line entry point.

Every subcommand is a deterministic wrapper over one library module:
identical invocations produce byte-identical outputs. File outputs go to
explicit ``--out`` paths; stdin is never read. Numeric CSV output uses 9
significant digits. Exit codes: 0 success, 1 usage error (including
invalid parameter combinations), 2 runtime error (I/O failures, bad
input files, diverged training).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import aggregate as agg
from . import meshmc, sweep, toytrain
from .bound import BoundParams, bound_envelope, image_bound
from .plg import PLGError, read_logits, write_logits

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def __init__(self, *args, **kwargs):
        kwargs.setdefault("formatter_class",
                          argparse.ArgumentDefaultsHelpFormatter)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(part)) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")


def _add_dataset_args(parser: _Parser, with_patch: bool) -> None:
    parser.add_argument("--preset", choices=sorted(sweep.DATASET_PRESETS),
                        help="fill --n/--k/--h/--w/--c from a dataset preset")
    parser.add_argument("--n", type=int, help="training image count")
    parser.add_argument("--k", type=int, help="class count")
    parser.add_argument("--h", type=int, help="image height in pixels")
    parser.add_argument("--w", type=int, help="image width in pixels")
    parser.add_argument("--c", type=int, help="channel count")
    if with_patch:
        parser.add_argument("--ht", type=int, required=True, help="patch height")
        parser.add_argument("--wt", type=int, required=True, help="patch width")
    parser.add_argument("--stride", type=int, default=4,
                        help="stride for the effective patch count")
    parser.add_argument("--alpha", type=float, default=3.0,
                        help="effective-dimension divisor")
    parser.add_argument("--c4", type=float, default=0.5,
                        help="label-noise coefficient")
    parser.add_argument("--c6", type=float, default=1.0,
                        help="mesh coefficient")


def _resolve_dataset(parser: _Parser, args, patch_height: int,
                     patch_width: int) -> BoundParams:
    fields = dict(n=args.n, k=args.k, h=args.h, w=args.w, c=args.c)
    if args.preset is not None:
        preset = dict(zip("nkhwc", sweep.DATASET_PRESETS[args.preset]))
        for name, value in fields.items():
            if value is None:
                fields[name] = preset[name]
    missing = [f"--{name}" for name, value in fields.items() if value is None]
    if missing:
        parser.error(f"missing {', '.join(missing)} (or use --preset)")
    return BoundParams(n_train=fields["n"], n_classes=fields["k"],
                       height=fields["h"], width=fields["w"],
                       channels=fields["c"], patch_height=patch_height,
                       patch_width=patch_width, stride_h=args.stride,
                       stride_w=args.stride, alpha=args.alpha,
                       c4=args.c4, c6=args.c6)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _note_vacuous(k: int) -> None:
    if k == 1:
        print("note: n_classes=1 is a vacuous classification task",
              file=sys.stderr)


def _cmd_bound(parser: _Parser, args) -> int:
    params = _resolve_dataset(parser, args, args.ht, args.wt)
    _note_vacuous(params.n_classes)
    b = image_bound(params)
    text = ("t_eff,d_t,mesh_term,roughness,noise_term,total\n"
            + ",".join([_fmt(b.t_eff), str(b.d_t), _fmt(b.mesh_term),
                        _fmt(b.roughness), _fmt(b.noise_term), _fmt(b.total)])
            + "\n")
    _emit(text, args.out)
    return 0


def _cmd_sweep(parser: _Parser, args) -> int:
    if args.vary != "patch_size" and not args.patch_grid:
        parser.error("--patch-grid is required unless --vary patch_size")
    base = _resolve_dataset(parser, args, args.h if args.h else 1, 1)
    # base patch fields are placeholders; substitution sets them per row
    base = replace(base, patch_height=base.height, patch_width=base.width)
    _note_vacuous(base.n_classes)
    spec = sweep.SweepSpec(base=base, vary=args.vary,
                           values=tuple(args.values),
                           patch_grid=tuple(args.patch_grid or ()))
    _emit(sweep.sweep_csv(sweep.run_sweep(spec)), args.out)
    return 0


def _cmd_envelope(parser: _Parser, args) -> int:
    params = _resolve_dataset(parser, args, 1, 1)
    params = replace(params, patch_height=params.height, patch_width=params.width)
    max_patch = args.max_patch
    if max_patch is None:
        max_patch = min(params.height, params.width)
    rows = bound_envelope(params, max_patch=max_patch, min_patch=args.min_patch)
    lines = ["patch_size,envelope"]
    lines += [f"{t},{_fmt(v)}" for t, v in rows]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_compare(parser: _Parser, args) -> int:
    rows = sweep.compare_dataset(args.dataset, stride=args.stride,
                                 alpha=args.alpha, c4=args.c4, c6=args.c6)
    _emit(sweep.compare_csv(rows), args.out)
    return 0


def _cmd_fixtures(parser: _Parser, args) -> int:
    _emit(sweep.fixtures_csv(), args.out)
    return 0


def _cmd_meshnorm(parser: _Parser, args) -> int:
    experiment = meshmc.MeshExperiment(dimension=args.dim,
                                       sample_counts=tuple(args.ns),
                                       queries=args.queries,
                                       trials=args.trials, seed=args.seed)
    rows, redraws = meshmc.run_experiment(experiment)
    fit = meshmc.fit_scaling_exponent(experiment, rows)
    fit = replace(fit, redraws=redraws)
    if args.out is not None:
        Path(args.out).write_text(meshmc.measurements_csv(rows), encoding="utf-8")
    _emit(meshmc.fit_csv(args.dim, fit), args.fit_out)
    return 0


def _cmd_train_toy(parser: _Parser, args) -> int:
    task = toytrain.SyntheticTask(
        n_classes=args.classes, height=args.height, width=args.width,
        channels=args.channels, class_fraction=args.rho, texture=args.texture,
        texture_std=args.texture_std, layout_amplitude=args.layout_amplitude,
        seed=args.task_seed)
    train_set, test_set = toytrain.generate_dataset(task, args.n_train, args.n_test)
    settings = toytrain.TrainSettings(patch_size=args.patch,
                                      learning_rate=args.lr, steps=args.steps,
                                      batch_size=args.batch, seed=args.train_seed)
    result = toytrain.train(train_set, settings)
    patch_avg, single = toytrain.evaluate(result.model, test_set,
                                          seed=args.eval_seed)
    if args.checkpoint is not None:
        toytrain.save_model(result.model, args.checkpoint)
    if args.log is not None:
        Path(args.log).write_text(toytrain.training_log_csv(result.losses),
                                  encoding="utf-8")
    if args.logits_out is not None:
        logit_set = toytrain.export_logits(result.model, test_set,
                                           stride=args.logits_stride)
        write_logits(logit_set, args.logits_out)
    _emit("patch_avg_accuracy,single_patch_accuracy\n"
          f"{_fmt(patch_avg)},{_fmt(single)}\n", args.out)
    return 0


def _cmd_aggregate(parser: _Parser, args) -> int:
    logit_set = read_logits(args.logits)
    table = agg.predictions_csv(logit_set)
    if args.out is None:
        sys.stdout.write(table)
    else:
        Path(args.out).write_text(table, encoding="utf-8")
        if all(e.label is not None for e in logit_set.images) and logit_set.n_images:
            accuracy = agg.patchwise_accuracy(logit_set)
            sys.stdout.write(f"patchwise_accuracy_percent,{_fmt(accuracy)}\n")
    return 0


def _cmd_heatmap(parser: _Parser, args) -> int:
    logit_set = read_logits(args.logits)
    heat_map = agg.build_heatmap(logit_set, args.image, args.class_index)
    agg.render_heatmap(heat_map, args.out)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="patchbound",
                     description="Error-bound numerics and patch-inference "
                                 "tooling for patch-trained classifiers.")
    sub = parser.add_subparsers(dest="command", required=True,
                            parser_class=_Parser)

    p = sub.add_parser("bound", parents=[], help="evaluate the error bound once")
    _add_dataset_args(p, with_patch=True)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("sweep", help="bound values over a parameter sweep")
    _add_dataset_args(p, with_patch=False)
    p.add_argument("--vary", required=True, choices=sweep.VARY_CHOICES,
                   help="parameter substituted per row")
    p.add_argument("--values", required=True, type=_float_list,
                   help="comma-separated varied values, strictly increasing")
    p.add_argument("--patch-grid", type=_int_list, default=None,
                   help="comma-separated square patch sizes")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("envelope", help="running-minimum bound over patch sizes")
    _add_dataset_args(p, with_patch=False)
    p.add_argument("--min-patch", type=int, default=3,
                   help="smallest square patch size swept")
    p.add_argument("--max-patch", type=int, default=None,
                   help="largest square patch size swept; min(height, width) when omitted")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=_cmd_envelope)

    p = sub.add_parser("compare",
                       help="empirical error vs. bound envelope for a dataset")
    p.add_argument("--dataset", required=True,
                   help="fixture dataset name (e.g. cifar10)")
    p.add_argument("--stride", type=int, default=4,
                   help="stride for the effective patch count")
    p.add_argument("--alpha", type=float, default=3.0,
                   help="effective-dimension divisor")
    p.add_argument("--c4", type=float, default=0.5,
                   help="label-noise coefficient")
    p.add_argument("--c6", type=float, default=1.0,
                   help="mesh coefficient")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("fixtures", help="export the built-in accuracy records")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=_cmd_fixtures)

    p = sub.add_parser("meshnorm",
                       help="nearest-distance scaling experiment and fit")
    p.add_argument("--dim", type=int, required=True,
                   help="cube dimension")
    p.add_argument("--ns", type=_int_list, required=True,
                   help="comma-separated sample counts, strictly increasing")
    p.add_argument("--trials", type=int, default=20,
                   help="independent repetitions per sample count")
    p.add_argument("--queries", type=int, default=100,
                   help="query points per trial")
    p.add_argument("--seed", type=int, default=0,
                   help="master seed")
    p.add_argument("--out", help="write per-trial measurements CSV here")
    p.add_argument("--fit-out", help="write the fit CSV here instead of stdout")
    p.set_defaults(func=_cmd_meshnorm)

    p = sub.add_parser("train-toy",
                       help="train the synthetic-task patch classifier")
    p.add_argument("--classes", type=int, default=4, help="class count")
    p.add_argument("--height", type=int, default=32, help="image height")
    p.add_argument("--width", type=int, default=32, help="image width")
    p.add_argument("--channels", type=int, default=3, help="channel count")
    p.add_argument("--rho", type=float, default=0.3,
                   help="class-texture area fraction")
    p.add_argument("--texture", choices=("iid", "layout"), default="iid",
                   help="class texture family")
    p.add_argument("--texture-std", type=float, default=25.0,
                   help="pixel spread inside the class region")
    p.add_argument("--layout-amplitude", type=float, default=40.0,
                   help="bright/dark offset of layout textures")
    p.add_argument("--task-seed", type=int, default=0,
                   help="dataset generation seed")
    p.add_argument("--n-train", type=int, default=5000,
                   help="training image count")
    p.add_argument("--n-test", type=int, default=1000,
                   help="test image count")
    p.add_argument("--patch", type=int, default=8,
                   help="square training patch size")
    p.add_argument("--lr", type=float, default=0.05,
                   help="SGD learning rate")
    p.add_argument("--steps", type=int, default=20000,
                   help="SGD steps")
    p.add_argument("--batch", type=int, default=64,
                   help="mini-batch size")
    p.add_argument("--train-seed", type=int, default=0,
                   help="patch sampling seed")
    p.add_argument("--eval-seed", type=int, default=0,
                   help="single-patch evaluation seed")
    p.add_argument("--checkpoint", help="write the model checkpoint here")
    p.add_argument("--log", help="write the step,loss training log here")
    p.add_argument("--logits-out", help="write test-set logits (PLG1) here")
    p.add_argument("--logits-stride", type=int, default=1,
                   help="grid stride of the exported logits")
    p.add_argument("--out", help="write the accuracy CSV here instead of stdout")
    p.set_defaults(func=_cmd_train_toy)

    p = sub.add_parser("aggregate",
                       help="averaged predictions from a PLG1 logit file")
    p.add_argument("--logits", required=True, help="PLG1 input path")
    p.add_argument("--out",
                   help="write the predictions CSV here; stdout then carries "
                        "the accuracy when every image is labeled")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("heatmap", help="render one class heat map as PGM")
    p.add_argument("--logits", required=True, help="PLG1 input path")
    p.add_argument("--image", type=int, required=True, help="image id")
    p.add_argument("--class", dest="class_index", type=int, required=True,
                   help="class index of the rendered map")
    p.add_argument("--out", required=True, help="PGM output path")
    p.set_defaults(func=_cmd_heatmap)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(parser, args)
    except PLGError as exc:
        print(f"patchbound: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        name = getattr(exc, "filename", None)
        detail = exc.strerror or str(exc)
        print(f"patchbound: error: {name or 'I/O'}: {detail}", file=sys.stderr)
        return 2
    except toytrain.TrainingDiverged as exc:
        print(f"patchbound: error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"patchbound: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"patchbound: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
