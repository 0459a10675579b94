"""Command line: ``percscan detect`` and ``percscan bench``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bench
from .detect import DetectionConfig, detect_particles, threshold_image
from .errors import ConfigError, DegenerateContrast, InvalidArgument, PgmError
from .grid import BinaryImage, LatticeKind
from .pgm import downsample2x, normalize, read_pgm, write_pgm
from .scan import default_window_side
from .synth import add_noise, load_scene, render_clean

log = logging.getLogger("percscan")

EXIT_OK = 0
EXIT_USAGE = 2  # argparse's own code
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_CONTRAST = 5
EXIT_INVALID = 6


def _positive_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="percscan", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="detect particles in a PGM micrograph or a scene file")
    d.add_argument("input", help="P2/P5 PGM image, or a .json scene description")
    d.add_argument("--phi0", type=int, help="background window side (default ceil(2 ln n))")
    d.add_argument("--phi1", type=int, help="object window side (default ceil(2 ln n))")
    d.add_argument("--min-cluster", type=int, help="significance size (default phi1)")
    d.add_argument("--lattice", choices=["square", "tri"], default="tri")
    d.add_argument("--downsample", type=int, default=0, metavar="K",
                   help="apply K successive 2x2 block-mean reductions (PGM input)")
    d.add_argument("--theta", type=float, help="fixed threshold; skips the scan estimators")
    d.add_argument("--out", default=".", help="output directory")
    d.add_argument("--seed", type=int, default=0, help="noise seed for scene input")
    d.add_argument("--no-pixels", action="store_true", help="omit cluster pixel lists from the report")

    b = sub.add_parser("bench", help="run a Monte Carlo experiment and write CSV")
    b.add_argument("--experiment", required=True, choices=[e.value for e in bench.Experiment])
    b.add_argument("--n", type=_positive_list, help="comma-separated image sides")
    b.add_argument("--seeds", type=int)
    b.add_argument("--out", help="CSV path (default stdout)")
    b.add_argument("--deterministic-header", action="store_true",
                   help="omit the timestamp comment line")
    b.add_argument("--jobs", type=int, default=1)
    return p


def _load_image(args) -> np.ndarray:
    path = Path(args.input)
    if path.suffix.lower() == ".json":
        scene = load_scene(path)
        return add_noise(render_clean(scene), scene.noise, args.seed)
    img = normalize(read_pgm(path.read_bytes()))
    for _ in range(args.downsample):
        img = downsample2x(img)
    return img


def cmd_detect(args) -> int:
    if not os.path.isfile(args.input):
        log.error("input file not found: %s", args.input)
        return EXIT_IO
    y = _load_image(args)
    side = min(y.shape)
    phi1 = args.phi1 or default_window_side(side)
    cfg = DetectionConfig(
        phi0=args.phi0 or default_window_side(side),
        phi1=phi1,
        significance_size=args.min_cluster,
        lattice=LatticeKind(args.lattice),
        threshold_override=args.theta,
    )
    report = detect_particles(y, cfg)

    filtered = np.zeros(y.shape, dtype=bool)
    for c in report.clusters:
        filtered[c.pixels[:, 0], c.pixels[:, 1]] = True
    outputs = {
        "report.json": report.to_json(pixels=not args.no_pixels).encode("utf-8"),
        "thresholded.pgm": write_pgm(threshold_image(y, report.theta, cfg.lattice)),
        "filtered.pgm": write_pgm(BinaryImage(filtered, cfg.lattice)),
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, data in outputs.items():
        (out / name).write_bytes(data)

    if report.overridden:
        print(f"theta={report.theta:.6g} (override)")
    else:
        print(f"a_hat={report.a_hat.value:.6g} b_hat={report.b_hat.value:.6g} theta={report.theta:.6g}")
    print(f"{report.decision}: {report.count} significant of {report.n_clusters} clusters")
    return EXIT_OK


def cmd_bench(args) -> int:
    overrides = {"jobs": args.jobs}
    if args.n:
        overrides["n_values"] = args.n
    if args.seeds is not None:
        overrides["seeds"] = args.seeds
    cfg = bench.default_config(args.experiment, **overrides)
    text = bench.rows_to_csv(bench.run_experiment(cfg), args.deterministic_header)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    handler = cmd_detect if args.command == "detect" else cmd_bench
    try:
        return handler(args)
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except PgmError as exc:
        log.error("bad PGM input: %s", exc)
        return EXIT_FORMAT
    except DegenerateContrast as exc:
        log.error("%s", exc)
        return EXIT_CONTRAST
    except (InvalidArgument, ConfigError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
