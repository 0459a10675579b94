import json

import numpy as np
import pytest

from conftest import DATA
from percscan.cli import EXIT_CONTRAST, EXIT_FORMAT, EXIT_IO, EXIT_OK, main
from percscan.pgm import PgmImage, encode_pgm, read_pgm

GOLDEN_ARGS = ["--seed", "7", "--phi0", "8", "--phi1", "5", "--min-cluster", "20"]
OUTPUTS = ("report.json", "thresholded.pgm", "filtered.pgm")


def step_pgm(path, n=32):
    samples = np.full((n, n), 40, dtype=np.int64)
    samples[4:14, 4:14] = 220
    samples[20:28, 18:30] = 220
    path.write_bytes(encode_pgm(PgmImage(n, n, 255, samples)))
    return path


def test_detect_pgm(tmp_path, capsys):
    src = step_pgm(tmp_path / "in.pgm")
    assert main(["detect", str(src), "--phi0", "4", "--phi1", "4", "--lattice", "square",
                 "--out", str(tmp_path / "out")]) == EXIT_OK
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["schema"] == "percscan.report/1"
    assert report["decision"] == {"kind": "ParticlesFound", "count": 2}
    assert sorted(c["size"] for c in report["clusters"]) == [96, 100]
    filtered = read_pgm((tmp_path / "out" / "filtered.pgm").read_bytes())
    assert (filtered.samples == 0).sum() == 196
    assert "ParticlesFound" in capsys.readouterr().out


def test_detect_downsample(tmp_path):
    src = step_pgm(tmp_path / "in.pgm", 64)
    assert main(["detect", str(src), "--downsample", "1", "--phi0", "4", "--phi1", "4",
                 "--out", str(tmp_path)]) == EXIT_OK
    assert json.loads((tmp_path / "report.json").read_text())["shape"] == [32, 32]


def test_detect_scene(tmp_path):
    assert main(["detect", str(DATA / "golden_scene.json"), *GOLDEN_ARGS, "--out", str(tmp_path)]) == EXIT_OK
    assert all((tmp_path / name).is_file() for name in OUTPUTS)


def test_missing_input_writes_nothing(tmp_path):
    out = tmp_path / "out"
    assert main(["detect", str(tmp_path / "nope.pgm"), "--out", str(out)]) == EXIT_IO
    assert not out.exists()


def test_bad_pgm(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
    assert main(["detect", str(bad), "--out", str(tmp_path / "o")]) == EXIT_FORMAT
    bad.write_bytes(b"P5\n4 4\n255\n\x00")
    assert main(["detect", str(bad), "--out", str(tmp_path / "o")]) == EXIT_FORMAT


def test_flat_image_is_degenerate(tmp_path):
    flat = tmp_path / "flat.pgm"
    flat.write_bytes(encode_pgm(PgmImage(8, 8, 255, np.full((8, 8), 100))))
    assert main(["detect", str(flat), "--phi0", "3", "--phi1", "3", "--out", str(tmp_path)]) == EXIT_CONTRAST


def test_theta_override_and_no_pixels(tmp_path):
    src = step_pgm(tmp_path / "in.pgm")
    assert main(["detect", str(src), "--theta", "0.5", "--no-pixels", "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["a_hat"] == "overridden" and report["b_hat"] == "overridden"
    assert report["theta"] == 0.5
    assert all("pixels" not in c for c in report["clusters"])


def test_bench_to_stdout(capsys):
    assert main(["bench", "--experiment", "percolation", "--n", "64", "--seeds", "1",
                 "--deterministic-header"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "experiment,n,seed,metric,value"
    assert [ln.split(",")[3] for ln in lines[1:]] == ["largest_p0.4", "largest_p0.6"]


def test_bench_bytes_reproducible(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["bench", "--experiment", "consistency", "--n", "64,128", "--seeds", "2",
                     "--deterministic-header", "--out", str(p)]) == EXIT_OK
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert b"\r" not in paths[0].read_bytes()


def test_unknown_experiment():
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--experiment", "bogus"])
    assert exc.value.code == 2


def test_golden_outputs_match(tmp_path):
    assert main(["detect", str(DATA / "golden_scene.json"), *GOLDEN_ARGS, "--out", str(tmp_path)]) == EXIT_OK
    for name in OUTPUTS:
        assert (tmp_path / name).read_bytes() == (DATA / f"golden_{name}").read_bytes(), name
