"""Regenerate the golden scene and its expected CLI outputs under tests/data/.

Only rerun this after an intentional change to the detection output format;
the test suite compares against the checked-in bytes.
"""
import shutil
import tempfile
from pathlib import Path

import numpy as np

from percscan.cli import main
from percscan.synth import NoiseModel, SceneSpec, disc_mask, save_scene, square_mask

DATA = Path(__file__).resolve().parents[1] / "tests" / "data"
ARGS = ["--seed", "7", "--phi0", "8", "--phi1", "5", "--min-cluster", "20"]


def golden_scene() -> SceneSpec:
    ell = np.concatenate([square_mask(40, 6, 4, 16), square_mask(52, 10, 12, 4)])
    return SceneSpec(
        n=64, a=0.2, b=0.8,
        particles=[square_mask(6, 8, 12), disc_mask(16.0, 44.0, 7.0, 64), ell],
        noise=NoiseModel.uniform(0.3),
    )


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    save_scene(golden_scene(), DATA / "golden_scene.json")
    with tempfile.TemporaryDirectory() as tmp:
        main(["detect", str(DATA / "golden_scene.json"), *ARGS, "--out", tmp])
        for name in ("report.json", "thresholded.pgm", "filtered.pgm"):
            shutil.copy(Path(tmp) / name, DATA / f"golden_{name}")
    print("wrote", sorted(p.name for p in DATA.iterdir()))
