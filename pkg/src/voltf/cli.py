"""voltf command line: phantom, histogram, lut, train, predict, render,
curve, serve.

Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go to
stderr; file outputs go where --out points.
"""

import argparse
import json
import sys
from pathlib import Path

from PIL import Image

from . import autoplace, histogram, neural, renderer, transfer_function, volume
from .errors import VoltfError

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(USAGE_ERROR)


def _load_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise VoltfError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise VoltfError(f"{path} is not valid JSON: {exc}") from exc


def _read_volume(prefix):
    try:
        return volume.read_volume(prefix)
    except FileNotFoundError as exc:
        raise VoltfError(f"cannot read volume {prefix!r}: {exc}") from exc


def _save_png(array, path):
    Image.fromarray(array).save(path, format="PNG")


def cmd_phantom(args):
    spec = volume.phantom_spec_from_json(_load_json(args.spec))
    volume.write_volume(args.out, volume.make_phantom(spec))
    return 0


def cmd_histogram(args):
    v = _read_volume(args.volume)
    h = histogram.joint_histogram(v, volume.gradient_magnitude(v))
    Path(args.out).write_text(json.dumps(histogram.histogram_to_json(h)),
                              encoding="utf-8")
    if args.image:
        _save_png(histogram.render_histogram_image(h), args.image)
    return 0


def cmd_lut(args):
    filters = transfer_function.filters_from_json(_load_json(args.filters))
    lut = transfer_function.rasterize(filters)
    _save_png(transfer_function.lut_to_image(lut), args.out)
    return 0


def cmd_train(args):
    samples = autoplace.load_samples(args.data)
    if not samples:
        raise VoltfError(f"no training samples in {args.data!r}")
    pairs = [(s.input.values, s.target) for s in samples]
    if args.resume:
        net = neural.load_model(Path(args.resume).read_bytes())
    else:
        in_size = samples[0].input.values.size
        out_size = samples[0].target.size
        net = neural.MlpNetwork.random([in_size, args.hidden, out_size],
                                       seed=args.seed)
    cfg = neural.TrainConfig(learning_rate=args.lr, mode=args.mode,
                             max_epochs=args.epochs,
                             error_limit=args.error_limit,
                             shuffle_seed=args.seed, init_seed=args.seed)
    net, report = neural.train(net, pairs, cfg)
    Path(args.out).write_bytes(neural.save_model(net))
    print(f"epochs={report.epochs_run} mse={report.epoch_mse[-1]:.3e} "
          f"stop={report.stop_reason}", file=sys.stderr)
    return 0


def cmd_predict(args):
    net = neural.load_model(Path(args.model).read_bytes())
    v = _read_volume(args.volume)
    h = histogram.joint_histogram(v, volume.gradient_magnitude(v))
    geoms = autoplace.predict_filters(net, h)
    filters = transfer_function.heart_preset(geoms)
    Path(args.out).write_text(
        json.dumps(transfer_function.filters_to_json(filters)), encoding="utf-8")
    return 0


def cmd_render(args):
    v = _read_volume(args.volume)
    g = volume.gradient_magnitude(v)
    filters = transfer_function.filters_from_json(_load_json(args.filters))
    lut = transfer_function.rasterize(filters)
    cam = renderer.camera_from_json(_load_json(args.camera))
    settings = renderer.RenderSettings(step_size=args.step, shading=args.shading)
    image = renderer.render(v, g, lut, cam, settings)
    _save_png(renderer.image_to_uint8(image), args.out)
    return 0


def cmd_curve(args):
    samples = autoplace.load_samples(args.data)
    cfg = neural.TrainConfig(learning_rate=args.lr, mode=args.mode,
                             max_epochs=args.epochs,
                             error_limit=args.error_limit,
                             shuffle_seed=args.seed, init_seed=args.seed)
    autoplace.learning_curve(samples, cfg, csv_path=args.out,
                             plot_path=args.plot)
    return 0


def cmd_serve(args):
    from .service import serve_forever
    serve_forever(port=args.port, data_dir=args.data,
                  max_voxels=args.max_voxels, static_dir=args.static)
    return 0


def build_parser():
    parser = _Parser(prog="voltf",
                     description="2D transfer functions for scalar volumes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="rasterize a synthetic test volume")
    p.add_argument("--spec", required=True, help="phantom description JSON")
    p.add_argument("--out", required=True, help="output prefix (.json/.raw pair)")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("histogram", help="joint attenuation/gradient histogram")
    p.add_argument("--volume", required=True, help="volume prefix")
    p.add_argument("--out", required=True, help="histogram JSON path")
    p.add_argument("--image", help="optional grayscale PNG")
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("lut", help="rasterize filters to an RGBA LUT PNG")
    p.add_argument("--filters", required=True, help="filter list JSON")
    p.add_argument("--out", required=True, help="output PNG")
    p.set_defaults(func=cmd_lut)

    p = sub.add_parser("train", help="train a filter-placement network")
    p.add_argument("--data", required=True, help="directory of sample JSONs")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--lr", type=float, default=0.2)
    p.add_argument("--mode", choices=("online", "batch"), default="online")
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--error-limit", type=float, default=None, dest="error_limit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--resume", help="existing model to train further")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="place filters on a volume with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--volume", required=True, help="volume prefix")
    p.add_argument("--out", required=True, help="filter list JSON path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("render", help="raycast a volume through a filter LUT")
    p.add_argument("--volume", required=True, help="volume prefix")
    p.add_argument("--filters", required=True, help="filter list JSON")
    p.add_argument("--camera", required=True, help="camera JSON")
    p.add_argument("--out", required=True, help="output PNG")
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--shading", choices=("none", "lambert"), default="none")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("curve", help="learning-curve experiment over 2..10 samples")
    p.add_argument("--data", required=True, help="directory of sample JSONs")
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--plot", help="curve PNG path")
    p.add_argument("--lr", type=float, default=0.2)
    p.add_argument("--mode", choices=("online", "batch"), default="online")
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--error-limit", type=float, default=None, dest="error_limit")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("serve", help="HTTP service for the browser editor")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--data", default=None, help="persistent data dir "
                   "(fallback: VOLTF_DATA env)")
    p.add_argument("--max-voxels", type=int, default=512 ** 3,
                   dest="max_voxels")
    p.add_argument("--static", default=None, help="editor static files dir")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (VoltfError, OSError, ValueError) as exc:
        print(f"voltf: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
