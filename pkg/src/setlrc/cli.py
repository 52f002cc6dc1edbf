"""Command-line interface: ``setlrc {synth,build-gallery,classify,benchmark}``.

Any option can also be given in a JSON file passed with ``--config``; keys
are option names with dashes replaced by underscores, and explicit flags
win over the file.
"""

import argparse
import json
import logging
import sys
from collections import OrderedDict

from setlrc import gallery_io
from setlrc.classifier import STRATEGIES, TestSet, VoteConfig, classify_set, form_gallery
from setlrc.errors import SetLRCError
from setlrc.harness.dataset import ingest_dataset, load_image_dir, load_raster
from setlrc.harness.protocol import MODES, PRESETS, ProtocolConfig, preset, run_protocol
from setlrc.harness.report import emit_report
from setlrc.harness.synth import SynthParams, generate_synthetic
from setlrc.preprocess import PreprocessConfig, preprocess_pipeline

log = logging.getLogger("setlrc")


def parse_dims(text):
    try:
        a, b = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected AxB (e.g. 32x32), got {text!r}")
    if a < 1 or b < 1:
        raise argparse.ArgumentTypeError("dims must be positive")
    return (a, b)


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def cmd_synth(args):
    p = SynthParams(
        classes=args.classes,
        sets_per_class=args.sets,
        images_per_set=args.images,
        dims=args.dims,
        rank=args.rank,
        sigma=args.sigma,
        seed=args.seed,
        amplitude=args.amplitude,
    )
    truth = generate_synthetic(p, args.out)
    print(f"wrote {len(truth['sets'])} sets x {p.images_per_set} images to {args.out}")
    return 0


def cmd_build_gallery(args):
    manifest = ingest_dataset(args.data)
    cfg = PreprocessConfig(args.dims, args.equalize, args.standardize)
    sets = OrderedDict()
    for c in manifest.classes:
        sets[c.label] = [load_raster(p) for s in c.sets for p in s.paths]
    gallery = form_gallery(
        list(sets.items()), cfg, gallery_size=args.gallery_images, seed=args.seed,
        remedy=args.remedy,
    )
    gallery_io.save_gallery(gallery, args.out)
    fixed = sum(r.perturbed or r.pinv is None for r in gallery.regressors)
    print(
        f"gallery: {gallery.C} classes, T={gallery.T}, "
        f"N={[r.N for r in gallery.regressors]}, {fixed} repaired -> {args.out}"
    )
    return 0


def cmd_classify(args):
    gallery = gallery_io.load_gallery(args.gallery)
    alpha = args.alpha if args.strategy == "exponential" else None
    vote = VoteConfig(args.strategy, alpha=alpha, k=args.k)
    paths = load_image_dir(args.set)
    cfg = gallery.preprocess_cfg
    vectors = [preprocess_pipeline(load_raster(p), cfg) for p in paths]
    test = TestSet.from_vectors(vectors, set_id=args.set_id or args.set)
    result = classify_set(gallery, test, vote)
    if args.json:
        print(json.dumps(result.to_dict(gallery.labels, verbose=args.verbose), indent=2))
    else:
        tie = " (tie)" if result.tie else ""
        print(f"{test.set_id}: {gallery.labels[result.predicted]}{tie}")
    return 0


_CUSTOM_FIELDS = (
    "dims", "alpha", "strategy", "k", "remedy", "equalize", "standardize",
    "gallery_sets", "gallery_images", "folds",
)


def protocol_from_args(args):
    overrides = {"seed": args.seed}
    if args.repeats is not None:
        overrides["repeats"] = args.repeats
    for name in _CUSTOM_FIELDS:
        value = getattr(args, name)
        if value is None:
            continue
        key = {"gallery_sets": "gallery_sets_per_class",
               "gallery_images": "gallery_images_per_set"}.get(name, name)
        overrides[key] = value
    if args.preset == "custom":
        return ProtocolConfig(**overrides)
    return preset(args.preset, **overrides)


def cmd_benchmark(args):
    cfg = protocol_from_args(args)
    manifest = ingest_dataset(args.data)
    report = run_protocol(manifest, cfg, mode=args.mode)
    emit_report(report, args.format, args.report)
    print(
        f"{args.preset}/{args.mode}: accuracy {100 * report.mean_accuracy:.2f} "
        f"+/- {100 * report.std_accuracy:.2f} over {cfg.repeats} repeats; "
        f"{report.mean_set_seconds:.6f} s per set -> {args.report}"
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="setlrc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose-log", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON file with option defaults")
        sp.set_defaults(func=func)
        return sp

    sp = add("synth", cmd_synth, "generate a synthetic subspace corpus")
    sp.add_argument("--classes", type=int, required=True)
    sp.add_argument("--sets", type=int, required=True)
    sp.add_argument("--images", type=int, required=True)
    sp.add_argument("--dims", type=parse_dims, required=True)
    sp.add_argument("--rank", type=int, required=True)
    sp.add_argument("--sigma", type=float, default=0.0)
    sp.add_argument("--amplitude", type=float, default=25.0)
    sp.add_argument("--seed", type=_nonneg_int, default=0)
    sp.add_argument("--out", required=True)

    sp = add("build-gallery", cmd_build_gallery, "form and serialize a gallery")
    sp.add_argument("--data", required=True)
    sp.add_argument("--dims", type=parse_dims, required=True)
    sp.add_argument("--gallery-images", type=int, default=None)
    sp.add_argument("--remedy", choices=("perturb", "qr"), default="perturb")
    sp.add_argument("--equalize", action="store_true", default=False)
    sp.add_argument("--standardize", action="store_true", default=False)
    sp.add_argument("--seed", type=_nonneg_int, default=0)
    sp.add_argument("--out", required=True)

    sp = add("classify", cmd_classify, "classify one image set against a gallery")
    sp.add_argument("--gallery", required=True)
    sp.add_argument("--set", required=True, help="directory holding the set's images")
    sp.add_argument("--set-id", default=None)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--strategy", choices=STRATEGIES, default="exponential")
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--json", action="store_true", default=False)
    sp.add_argument("--verbose", action="store_true", default=False,
                    help="include the full distance matrix in JSON output")

    sp = add("benchmark", cmd_benchmark, "run a split-and-repeat protocol and write a report")
    sp.add_argument("--data", required=True)
    sp.add_argument("--preset", choices=sorted(PRESETS) + ["custom"], default="custom")
    sp.add_argument("--mode", choices=MODES, default="fast")
    sp.add_argument("--repeats", type=int, default=None)
    sp.add_argument("--seed", type=_nonneg_int, default=0)
    sp.add_argument("--report", required=True)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--dims", type=parse_dims, default=None)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--strategy", choices=STRATEGIES, default=None)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--remedy", choices=("perturb", "qr"), default=None)
    sp.add_argument("--equalize", action="store_true", default=None)
    sp.add_argument("--standardize", action="store_true", default=None)
    sp.add_argument("--gallery-sets", type=int, default=None)
    sp.add_argument("--gallery-images", type=int, default=None)
    sp.add_argument("--folds", type=int, default=None)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        with open(known.config) as fh:
            defaults = json.load(fh)
        if isinstance(defaults.get("dims"), str):
            defaults["dims"] = parse_dims(defaults["dims"])
        elif "dims" in defaults:
            defaults["dims"] = tuple(defaults["dims"])
        subparsers = parser._subparsers._group_actions[0].choices
        for sp in subparsers.values():
            own = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in defaults.items() if k in own})
            for action in sp._actions:
                if action.dest in defaults:
                    action.required = False
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose_log else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (SetLRCError, OSError, ValueError) as exc:
        print(f"setlrc {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
