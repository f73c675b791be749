import math

import numpy as np
import pytest

from gp_lab.errors import ConfigError, DomainError
from gp_lab.experiments import (
    CellSummary,
    RunRow,
    SweepConfig,
    bloat_report,
    fit_scaling,
    flagged_cells,
    plot_sweep,
    read_raw_csv,
    read_summary_csv,
    resolve_workers,
    summarize,
    sweep,
    t_min_scale,
    write_raw_csv,
    write_summary_csv,
)


def tiny_sweep_config(**overrides):
    base = dict(
        problem="majority",
        bloat_control=False,
        k_dist="constant-one",
        init_kind="all_neg",
        n_grid=(1, 2),
        t_init_grid=(2, 4),
        reps=5,
        master_seed=99,
    )
    base.update(overrides)
    return SweepConfig(**base)


def test_sweep_shape_and_cells():
    result = sweep(tiny_sweep_config())
    assert len(result.rows) == 2 * 2 * 5
    assert len(result.cells) == 4
    assert [r.run_id for r in result.rows] == list(range(20))
    assert all(c.reps == 5 for c in result.cells)


def test_sweep_deterministic_across_worker_counts(tmp_path):
    a = sweep(tiny_sweep_config(workers=1))
    b = sweep(tiny_sweep_config(workers=4))
    pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
    write_raw_csv(a.rows, pa)
    write_raw_csv(b.rows, pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_sweep_respects_thread_env(monkeypatch):
    monkeypatch.setenv("GP_LAB_THREADS", "1")
    assert resolve_workers(8) == 1
    monkeypatch.setenv("GP_LAB_THREADS", "junk")
    with pytest.raises(ConfigError):
        resolve_workers(8)
    monkeypatch.delenv("GP_LAB_THREADS")
    assert resolve_workers(3) == 3


def test_trivial_grid_zero_iterations():
    # n=1 with an explicit-positive start is impossible through SweepConfig
    # (init kinds are random/all_neg), so check the all-expressed case via n=1
    # random init where some runs start optimal; instead assert determinism
    a = sweep(tiny_sweep_config(master_seed=5))
    b = sweep(tiny_sweep_config(master_seed=5))
    assert a.rows == b.rows


def test_raw_csv_roundtrip(tmp_path):
    result = sweep(tiny_sweep_config())
    path = tmp_path / "runs.csv"
    write_raw_csv(result.rows, path)
    header = path.read_text().splitlines()[0]
    assert header == (
        "run_id,problem,bloat_control,k_dist,n,t_init,seed,iterations,"
        "exhausted,max_size,final_size,final_fitness,wall_ns"
    )
    assert read_raw_csv(path) == result.rows


def test_summary_csv_roundtrip(tmp_path):
    result = sweep(tiny_sweep_config())
    path = tmp_path / "summary.csv"
    write_summary_csv(result.cells, path)
    assert read_summary_csv(path) == result.cells


def test_wall_ns_zero_without_timing_flag():
    result = sweep(tiny_sweep_config())
    assert all(r.wall_ns == 0 for r in result.rows)
    timed = sweep(tiny_sweep_config(include_timing=True))
    assert any(r.wall_ns > 0 for r in timed.rows)


def test_summarize_and_flags():
    rows = [
        RunRow(i, "majority", False, "constant-one", 2, 4, 7, iterations=10 + i,
               exhausted=(i == 3), max_size=6, final_size=4, final_fitness=2, wall_ns=0)
        for i in range(4)
    ]
    (cell,) = summarize(rows)
    assert cell.mean_iterations == pytest.approx(11.5)
    assert cell.median_iterations == pytest.approx(11.5)
    assert cell.success_rate == pytest.approx(0.75)
    assert flagged_cells(rows) == [(2, 4, 0.75)]


def test_t_min_scale():
    assert t_min_scale(1, 100) == 100.0
    n = 8
    assert t_min_scale(n, 2) == pytest.approx(n * math.log(n) ** 2)


# -- scaling fits ----------------------------------------------------------------


def _cells(pairs):
    return [
        CellSummary(n=n, t_init=t, reps=1, t_min=t_min_scale(n, t),
                    mean_iterations=y, median_iterations=y, stddev_iterations=0.0,
                    mean_max_size=0.0, max_max_size=0, success_rate=1.0)
        for (n, t, y) in pairs
    ]


def test_power_fit_recovers_slope_and_coefficient():
    cells = _cells([(1, x, 5.0 * x) for x in (10, 30, 100, 300, 1000, 3000, 10_000)])
    fit = fit_scaling(cells, "power")
    assert fit.slope == pytest.approx(1.0, abs=1e-9)
    assert fit.coefficients[0] == pytest.approx(5.0, rel=1e-9)
    lo, hi = fit.slope_ci95()
    assert hi - lo < 0.02
    assert not fit.flagged


def test_sum_model_ratios_near_one():
    cells = _cells(
        [(n, t, t + n * math.log(n)) for n in (4, 8, 16) for t in (16, 64, 256, 1024)]
    )
    fit = fit_scaling(cells, "size-plus-nlogn")
    for r in fit.ratios:
        assert r.ratio == pytest.approx(1.0, rel=1e-9)
    assert fit.ratio_spread == pytest.approx(1.0, rel=1e-9)


def test_quadratic_data_flagged_by_linear_model():
    cells = _cells([(1, x, float(x) ** 2) for x in (10, 30, 100, 300, 1000)])
    fit = fit_scaling(cells, "size-plus-nlogn", spread_threshold=3.0)
    assert fit.flagged
    assert fit.ratio_spread > 3.0


def test_two_term_model_recovers_coefficients():
    cells = _cells(
        [
            (n, t, 3.0 * t * math.log(t) + 7.0 * n * math.log(n + 1) ** 3)
            for n in (4, 16, 64)
            for t in (64, 256, 1024, 8192)
        ]
    )
    fit = fit_scaling(cells, "sizelog-plus-nlog3")
    assert fit.coefficients[0] == pytest.approx(3.0, rel=1e-6)
    assert fit.coefficients[1] == pytest.approx(7.0, rel=1e-6)


def test_degenerate_grid_rejected():
    cells = _cells([(1, x, 2.0 * x) for x in (10, 20)])
    with pytest.raises(DomainError):
        fit_scaling(cells, "power")
    cells = _cells([(1, x, 2.0 * x) for x in (10, 12, 15)])  # < one decade
    with pytest.raises(DomainError):
        fit_scaling(cells, "power")
    with pytest.raises(DomainError):
        fit_scaling(_cells([(1, x, 5.0 * x) for x in (10, 100, 1000)]), "cubic")


# -- bloat report ------------------------------------------------------------------


def test_bloat_report_quantiles():
    rows = [
        RunRow(i, "majority", False, "constant-one", 1, 100, 7, iterations=5,
               exhausted=False, max_size=ms, final_size=50, final_fitness=1, wall_ns=0)
        for i, ms in enumerate([100, 110, 120, 400])
    ]
    (cell,) = bloat_report(rows)
    assert cell.t_min == 100.0
    assert cell.q100 == pytest.approx(4.0)
    assert cell.q50 == pytest.approx(1.15)


def test_bloat_report_no_insertions_means_ratio_at_most_one():
    # a run that never accepts an insertion keeps max_size == t_init
    rows = [
        RunRow(0, "majority", True, "constant-one", 1, 64, 7, iterations=5,
               exhausted=False, max_size=64, final_size=1, final_fitness=1, wall_ns=0)
    ]
    (cell,) = bloat_report(rows)
    assert cell.q100 <= 1.0


# -- plots --------------------------------------------------------------------------


def test_plot_sweep_writes_svg(tmp_path):
    result = sweep(tiny_sweep_config())
    paths = plot_sweep(result.cells, tmp_path)
    assert [p.name for p in paths] == ["iterations_vs_t_init.svg", "iterations_vs_n.svg"]
    for p in paths:
        content = p.read_text()
        assert content.lstrip().startswith("<?xml")


def test_explicit_init_sweep_all_cells_zero_iterations():
    cfg = SweepConfig(
        problem="order", bloat_control=True, k_dist="one-plus-poisson",
        init_kind="explicit", init_leaves="x1", n_grid=(1,), t_init_grid=(1,),
        reps=5, master_seed=4,
    )
    result = sweep(cfg)
    assert all(r.iterations == 0 for r in result.rows)
    assert result.cells[0].mean_iterations == 0.0


def test_explicit_init_requires_matching_t_init():
    with pytest.raises(ConfigError):
        SweepConfig(
            problem="order", bloat_control=False, k_dist="constant-one",
            init_kind="explicit", init_leaves="x1 x1", n_grid=(1,),
            t_init_grid=(3,), reps=1, master_seed=0,
        )
    with pytest.raises(ConfigError):
        SweepConfig(
            problem="order", bloat_control=False, k_dist="constant-one",
            init_kind="random", init_leaves="x1", n_grid=(1,),
            t_init_grid=(1,), reps=1, master_seed=0,
        )


def test_reps_default_is_50():
    cfg = SweepConfig(
        problem="order", bloat_control=False, k_dist="constant-one",
        init_kind="random", n_grid=(1,), t_init_grid=(2,),
    )
    assert cfg.reps == 50


def test_bloat_control_g_zero_stops_at_minimal_size():
    cfg = SweepConfig(
        problem="majority", bloat_control=True, k_dist="one-plus-poisson",
        init_kind="random", n_grid=(4,), t_init_grid=(32,), reps=10,
        master_seed=77, stop_mode="g-zero",
    )
    for row in sweep(cfg).rows:
        assert not row.exhausted
        assert row.final_size == 4 and row.final_fitness == 4
