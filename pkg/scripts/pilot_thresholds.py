"""Pilot runs that freeze the Monte Carlo pass thresholds.

Uses seeds 1000-1099, disjoint from the 0-99 range the test suite uses, and
writes src/percscan/data/thresholds.json.
"""
import json
from pathlib import Path

import numpy as np

from percscan import bench
from percscan.detect import detect_particles
from percscan.synth import add_noise, render_clean

PILOT_OFFSET = 1000
PILOT_SEEDS = 100
OUT = Path(__file__).resolve().parents[1] / "src" / "percscan" / "data" / "thresholds.json"


def percolation():
    cfg = bench.default_config("percolation", seeds=PILOT_SEEDS, seed_offset=PILOT_OFFSET)
    rows = bench.run_experiment(cfg)
    low = bench.metric_values(rows, "largest_p0.4")
    high = bench.metric_values(rows, "largest_p0.6")
    return {
        "n": 512,
        "p_low": 0.4,
        "p_high": 0.6,
        # largest subcritical cluster seen in the pilot
        "largest_bound_p_low": int(low.max()),
        "pilot_median_p_low": float(np.median(low)),
        "pilot_median_p_high": float(np.median(high)),
    }


NOMINAL_SIGNIFICANCE = "4*ceil(2*ln(n))"


def false_alarm():
    cfg = bench.default_config("error-rates", empty_significance_rule=NOMINAL_SIGNIFICANCE)
    n = 512
    det = cfg.detection(n, empty=True)
    scene = cfg.scene(n, empty=True)
    clean = render_clean(scene)
    largest = []
    for s in range(PILOT_OFFSET, PILOT_OFFSET + PILOT_SEEDS):
        y = add_noise(clean, scene.noise, bench.trial_seed(cfg.experiment, n, s, 1))
        largest.append(detect_particles(y, det).largest_cluster)
    largest = np.array(largest)
    return {
        "n": n,
        "phi0": det.phi0,
        "phi1": det.phi1,
        # smallest significance size without a single pilot false alarm
        "significance_size": int(largest.max()) + 1,
        "pilot_median_largest": float(np.median(largest)),
        "nominal_significance_size": det.min_cluster,
        "pilot_false_alarms_at_nominal": int((largest >= det.min_cluster).sum()),
    }


def power():
    cfg = bench.default_config("error-rates", seeds=PILOT_SEEDS, seed_offset=PILOT_OFFSET)
    rows = bench.run_experiment(cfg)
    return {"n": 512, "pilot_missed_runs": int(bench.metric_values(rows, "missed").sum()),
            "min_detected_runs": 95}


if __name__ == "__main__":
    data = {
        "pilot_seeds": [PILOT_OFFSET, PILOT_OFFSET + PILOT_SEEDS - 1],
        "percolation": percolation(),
        "false_alarm": false_alarm(),
        "power": power(),
    }
    OUT.write_text(json.dumps(data, indent=1) + "\n")
    print(json.dumps(data, indent=1))
