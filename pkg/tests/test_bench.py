import math

import numpy as np
import pytest

from percscan import bench
from percscan.bench import default_config, eval_rule, metric_values, run_experiment
from percscan.errors import ConfigError
from percscan.synth import NoiseModel


def test_window_rules():
    assert [eval_rule("ceil(2*ln(n))", n) for n in (64, 128, 256, 512)] == [9, 10, 12, 13]
    assert eval_rule("n // 8", 512) == 64
    assert eval_rule(13, 512) == 13
    assert eval_rule("4*ceil(2*ln(n))", 512) == 52
    for bad in ("__import__('os')", "n.bit_length()", "n/3", "0*n", "ceil("):
        with pytest.raises(ConfigError):
            eval_rule(bad, 512)


def test_config_validation():
    with pytest.raises(ConfigError):
        default_config("consistency", n_values=(256, 128))
    with pytest.raises(ConfigError):
        default_config("consistency", seeds=0)
    with pytest.raises(ValueError):
        default_config("nope")


def test_quarter_layout_fraction():
    for n in (64, 128, 512):
        assert default_config("naive-vs-scan").scene(n).particle_fraction() == 0.25


def test_consistency_row_count():
    rows = run_experiment(default_config("consistency", n_values=(64,), seeds=1))
    assert [r.metric for r in rows] == ["a_abs_err", "b_abs_err", "sigma2_abs_err", "F_sup_err"]
    assert all(math.isfinite(r.value) for r in rows)


def test_consistency_without_noise_is_exact():
    rows = run_experiment(default_config("consistency", n_values=(64, 128), seeds=2,
                                         noise=NoiseModel.uniform(0.0)))
    assert [r.value for r in rows] == [0.0] * 16


def test_consistency_requires_background_square():
    cfg = default_config("consistency", n_values=(64,), seeds=1, phi0_rule="n // 2")
    with pytest.raises(ConfigError):
        run_experiment(cfg)


def test_naive_vs_scan_noiseless():
    rows = run_experiment(default_config("naive-vs-scan", n_values=(64,), seeds=1,
                                         noise=NoiseModel.uniform(0.0)))
    assert metric_values(rows, "naive_abs_err").tolist() == [0.25]
    assert metric_values(rows, "scan_abs_err").tolist() == [0.0]


def test_naive_vs_scan_without_particles():
    rows = run_experiment(default_config("naive-vs-scan", n_values=(128,), seeds=3, layout="none",
                                         noise=NoiseModel.uniform(0.2)))
    assert metric_values(rows, "naive_abs_err").max() < 0.01
    assert metric_values(rows, "scan_abs_err").max() < 0.05


def test_error_rates_with_high_override():
    cfg = default_config("error-rates", n_values=(64,), seeds=3, particle_side=10, theta_override=10.0)
    rows = run_experiment(cfg)
    assert metric_values(rows, "false_alarm_freq").tolist() == [0.0]
    assert metric_values(rows, "miss_freq").tolist() == [1.0]


def test_error_rate_frequencies_in_unit_interval():
    cfg = default_config("error-rates", n_values=(96,), seeds=4, particle_side=20,
                         phi0_rule=8, phi1_rule=6, significance_rule=20, empty_significance_rule=20)
    rows = run_experiment(cfg)
    for metric in ("miss_freq", "false_alarm_freq"):
        (v,) = metric_values(rows, metric)
        assert 0.0 <= v <= 1.0
    assert metric_values(rows, "rate_bound_C1_0.1").tolist() == [pytest.approx(math.exp(3 * math.log(2) - 0.6))]


def test_complexity_single_window_edge():
    cfg = default_config("complexity", n_values=(8,), widths=(8,), timing=False, include_detect=False)
    rows = run_experiment(cfg)
    assert len(rows) == 1 and rows[0].metric == "sws_ops_w8"


def test_complexity_ratios():
    cfg = default_config("complexity", n_values=(256, 512), widths=(8, 64), timing=False)
    rows = run_experiment(cfg)
    (growth,) = metric_values(rows, "sws_ops_ratio_over_n256_w8")
    assert 3.8 <= growth <= 4.2
    (detect_growth,) = metric_values(rows, "detect_ops_ratio_over_n256_w8")
    assert 3.8 <= detect_growth <= 4.2
    assert len(metric_values(rows, "sws_ops_ratio_w64_over_w8")) == 2


def test_percolation_extremes():
    rows = run_experiment(default_config("percolation", n_values=(32,), seeds=2, p_values=(0.0, 1.0)))
    assert metric_values(rows, "largest_p0").tolist() == [0, 0]
    assert metric_values(rows, "largest_p1").tolist() == [1024, 1024]


def test_csv_format():
    rows = [bench.ExperimentRow("percolation", 64, 0, "largest_p0.4", 1 / 3)]
    text = bench.rows_to_csv(rows, deterministic_header=True)
    assert text == "experiment,n,seed,metric,value\npercolation,64,0,largest_p0.4,0.333333333333\n"
    assert bench.rows_to_csv(rows).startswith("# generated ")


def test_reproducible_bytes():
    cfg = default_config("consistency", n_values=(64, 128), seeds=3)
    one = bench.rows_to_csv(run_experiment(cfg), deterministic_header=True)
    assert one == bench.rows_to_csv(run_experiment(cfg), deterministic_header=True)


def test_trials_do_not_depend_on_each_other():
    full = run_experiment(default_config("percolation", n_values=(48, 64), seeds=4))
    part = run_experiment(default_config("percolation", n_values=(64,), seeds=2, seed_offset=2))
    expected = [r for r in full if r.n == 64 and r.seed >= 2]
    assert part == expected


def test_parallel_matches_serial():
    cfg = default_config("naive-vs-scan", n_values=(64, 128), seeds=3)
    assert run_experiment(cfg) == run_experiment(default_config("naive-vs-scan", n_values=(64, 128),
                                                                seeds=3, jobs=2))


def test_selection_setup_geometry():
    setup = bench.SelectionSetup(
        n=16, side=4, b_minus_a=1.0, noise=NoiseModel.uniform(1.0),
        particles=((0, 8, 16, 8),), reference=(0, 0), competitors=((0, 5), (0, 2)))
    params = setup.bound_params()
    assert params.windows == [(1 * 4, 16), (0, 8)]
    with pytest.raises(ConfigError):
        bench.SelectionSetup(16, 4, 1.0, NoiseModel.uniform(1.0), ((0, 2, 4, 4),), (0, 0), ()).bound_params()


def test_thresholds_file():
    t = bench.load_thresholds()
    assert t["pilot_seeds"] == [1000, 1099]
    assert t["false_alarm"]["significance_size"] > t["false_alarm"]["nominal_significance_size"]


@pytest.mark.slow
def test_consistency_with_linear_window_rule():
    # with a window growing like n the selection bias shrinks visibly at these sizes
    rows = run_experiment(default_config("consistency", phi0_rule="n // 16", phi1_rule="n // 16"))
    for metric in ("a_abs_err", "b_abs_err", "sigma2_abs_err"):
        med = [np.median(metric_values(rows, metric, n)) for n in (128, 256, 512)]
        assert med[0] > med[1] > med[2]
