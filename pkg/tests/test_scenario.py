import filecmp
import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest

from zenotrap import (
    CoherentState,
    FockState,
    ReducedJCM,
    ThermalState,
    TruncationError,
    ZenotrapError,
    compare_documents,
    kappa_crit,
    loads,
    rabi_table,
    run_scenario,
    sweep_kappa,
)
from zenotrap.scenario import (
    NOT_CHECKED,
    PASS,
    SWEEP_COLUMNS,
    format_reference_numbers,
    load_series_document,
    pick_dim,
    reference_numbers,
    run_document,
    time_grid,
    write_sweep_csv,
)

BASE = """\
name    = unit-run
omega   = 2pi*11.2e6 rad/s
omega21 = 2pi*1.25e9 rad/s
omega0  = 2.9745e6 rad/s
eta     = 0.2
phi     = -pi/2 rad
k       = 1
kappa   = 1.1662e5 1/s
initial = fock(0)
dim     = 8
t_final = 2e-5 s
samples = 64
"""


def config_from(text=BASE, **replacements):
    cfg_text = text
    for key, value in replacements.items():
        lines = [
            f"{key} = {value}" if line.split("=")[0].strip() == key else line
            for line in cfg_text.splitlines()
        ]
        cfg_text = "\n".join(lines) + "\n"
    return loads(cfg_text)


# ---------------------------------------------------------------------------
# grid and dimension selection
# ---------------------------------------------------------------------------


def test_pick_dim_prefers_explicit_value():
    assert pick_dim(config_from()) == 8
    auto = loads(BASE.replace("dim     = 8\n", ""))
    assert pick_dim(auto) >= 32  # documented floor of the automatic choice


def test_time_grid_honours_t_final():
    cfg = config_from()
    grid = time_grid(cfg, rabi_table(cfg.params, 8))
    assert len(grid) == 64
    assert grid[0] == 0.0
    assert grid[-1] == pytest.approx(2e-5)


def test_time_grid_default_covers_rabi_and_envelope():
    cfg = loads(BASE.replace("t_final = 2e-5 s\n", ""))
    table = rabi_table(cfg.params, 8)
    grid = time_grid(cfg, table)
    want = max(10 * 2 * math.pi / abs(table.values[0]), 40.0 / cfg.params.kappa)
    assert grid[-1] == pytest.approx(want)


# ---------------------------------------------------------------------------
# run_scenario outputs
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def fock_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fock-run")
    cfg = config_from()
    return run_scenario(cfg, out_dir=out), out


def test_run_artifacts_and_verdicts(fock_run):
    result, out = fock_run
    assert result.passed
    names = {Path(f).name for f in result.files}
    assert names == {"unit-run_series.csv", "unit-run_analytic.csv", "unit-run_report.json"}
    by_channel = {c.channel: c for c in result.report.channels}
    assert by_channel["P_down"].verdict == PASS
    assert by_channel["P_down"].max_abs_dev <= 1e-6
    assert by_channel["mean_energy"].verdict == PASS
    assert by_channel["mean_position"].verdict == PASS
    assert result.diagnostics.passed
    assert result.equipartition is not None  # kappa > 0


def test_csv_round_trips_at_17_digits(fock_run):
    result, out = fock_run
    path = out / "unit-run_series.csv"
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    assert header[0] == "t_seconds"
    assert header[1] == "P_down[1]"
    assert "mean_energy[hbar*omega]" in header
    assert len(lines) == 1 + 64
    # every stored number reproduces the in-memory double exactly
    for i, line in enumerate(lines[1:4]):
        cells = line.split(",")
        assert float(cells[0]) == result.series.times[i]
        assert float(cells[1]) == result.series.channels["P_down"][i]


def test_json_report_round_trips_config_hash(fock_run):
    result, out = fock_run
    doc = json.loads((out / "unit-run_report.json").read_text())
    flat = doc["config"]
    text = "\n".join(f"{key}={flat[key]}" for key in sorted(flat))
    recomputed = hashlib.sha256(text.encode("utf-8")).hexdigest()
    assert doc["config_hash"] == recomputed == result.config.config_hash()
    assert doc["comparison"]["passed"] is True
    assert doc["final_diagnostics"]["passed"] is True
    assert doc["error"] is None
    # the canonical config reparses to the identical scenario
    from zenotrap import dumps

    assert loads(dumps(result.config)) == result.config


def test_runs_are_byte_identical(tmp_path):
    cfg = config_from()
    a, b = tmp_path / "a", tmp_path / "b"
    run_scenario(cfg, out_dir=a)
    run_scenario(cfg, out_dir=b)
    for name in ("unit-run_series.csv", "unit-run_analytic.csv", "unit-run_report.json"):
        assert filecmp.cmp(a / name, b / name, shallow=False), name


def test_emit_csv_only(tmp_path):
    cfg = loads(BASE + "emit = csv\n")
    result = run_scenario(cfg, out_dir=tmp_path)
    names = {Path(f).name for f in result.files}
    assert names == {"unit-run_series.csv", "unit-run_analytic.csv"}
    assert not (tmp_path / "unit-run_report.json").exists()


def test_position_comparison_not_checked_off_first_sideband(tmp_path):
    cfg = config_from(k="2", initial="fock(0)")
    result = run_scenario(cfg, out_dir=None)
    by_channel = {c.channel: c for c in result.report.channels}
    assert by_channel["mean_position"].verdict == NOT_CHECKED
    assert by_channel["P_down"].verdict == PASS


def test_full_mode_skips_analytic_comparison():
    cfg = loads(BASE.replace("samples = 64", "samples = 24") + "mode = full(1)\n")
    cfg = cfg.with_overrides(t_final=2e-6)
    result = run_scenario(cfg)
    assert result.analytic_series is None
    assert result.report.channels == []
    assert result.passed  # vacuously: nothing failed


def test_envelope_fit_dispatch_fock_vs_coherent(tmp_path):
    fock = loads(
        BASE.replace("t_final = 2e-5 s", "t_final = 1.5e-4 s").replace("samples = 64", "samples = 1200")
        + "envelope_rate_tol = 0.01\n"
    )
    res = run_scenario(fock)
    assert res.report.envelope is not None
    assert res.report.envelope.method == "peak-ratio"
    assert res.report.envelope.channel == "P_down"
    assert res.report.envelope.verdict == PASS
    assert res.report.envelope.rel_error <= 0.01

    coh = config_from(initial="coherent(0.7)", kappa="2.9745e5", dim="14")
    coh = loads(dumps_with(coh, envelope_rate_tol="0.01", samples="400", t_final="4e-5 s"))
    res = run_scenario(coh)
    assert res.report.envelope.method == "model-fit"
    assert res.report.envelope.channel == "mean_position"
    assert res.report.envelope.verdict == PASS


def dumps_with(cfg, **extra):
    from zenotrap import dumps

    text = dumps(cfg)
    for key, value in extra.items():
        lines = [line for line in text.splitlines() if line.split("=")[0].strip() != key]
        lines.append(f"{key} = {value}")
        text = "\n".join(lines) + "\n"
    return text


def test_energy_drift_check_on_carrier(tmp_path):
    cfg = loads(
        BASE.replace("k       = 1", "k       = 0")
        .replace("phi     = -pi/2 rad", "phi     = 0 rad")
        .replace("initial = fock(0)", "initial = coherent(1.0)")
        .replace("dim     = 8", "dim     = 14")
        + "energy_drift_tol = 1e-8\n"
    )
    result = run_scenario(cfg)
    drift = result.report.energy_drift
    assert drift is not None
    assert drift.verdict == PASS
    assert drift.max_abs_drift <= 1e-8


def test_partial_output_flushed_on_truncation(tmp_path):
    cfg = config_from(initial="fock(2)", dim="5", name="will-truncate")
    with pytest.raises(TruncationError):
        run_scenario(cfg, out_dir=tmp_path)
    series_path = tmp_path / "will-truncate_partial_series.csv"
    report_path = tmp_path / "will-truncate_partial_report.json"
    assert series_path.exists() and report_path.exists()
    doc = json.loads(report_path.read_text())
    assert doc["error"]["type"] == "TruncationError"
    assert doc["error"]["partial"] is True
    assert "budget" in doc["error"]["message"]
    n_rows = len(series_path.read_text().splitlines()) - 1
    assert n_rows == len(doc["series"]["times"]) >= 1
    assert doc["comparison"] is None


# ---------------------------------------------------------------------------
# decay-rate estimators on synthetic signals
# ---------------------------------------------------------------------------


def test_peak_decay_rate_exact_on_damped_cosine():
    from zenotrap import peak_decay_rate

    rate0, w = 3.0, 40.0
    t = np.linspace(0.0, 5.0, 4000)
    y = np.exp(-rate0 * t) * (np.cos(w * t) + (rate0 / w) * np.sin(w * t))
    rate, ci, n = peak_decay_rate(t, y, floor_frac=1e-12)
    assert n >= 20
    assert rate == pytest.approx(rate0, rel=1e-6)
    assert ci <= 1e-4 * rate0


def test_peak_decay_rate_needs_three_peaks():
    from zenotrap import peak_decay_rate

    t = np.linspace(0.0, 1.0, 100)
    with pytest.raises(ZenotrapError, match="3 oscillation peaks"):
        peak_decay_rate(t, np.exp(-t))


def test_model_decay_rate_recovers_planted_kappa():
    from zenotrap import model_decay_rate

    t = np.linspace(0.0, 2.0, 500)
    kappa_true = 1.8

    def rebuild(kappa):
        return np.exp(-kappa * t / 4.0) * np.cos(5.0 * t)

    rate, ci, n = model_decay_rate(t, rebuild(kappa_true), rebuild, kappa_guess=1.0)
    assert rate == pytest.approx(kappa_true / 4.0, rel=1e-8)
    assert n == 500


# ---------------------------------------------------------------------------
# kappa sweep
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def sweep_rows():
    cfg = config_from(samples="800")  # the fit window needs dense peaks
    table = rabi_table(cfg.params, 8)
    crit = kappa_crit(table, 0)
    grid = np.array([0.0, 0.3 * crit, 0.9 * crit, 1.5 * crit, 3.0 * crit])
    return cfg, table, crit, sweep_kappa(cfg, grid)


def test_sweep_row_contents(sweep_rows):
    cfg, table, crit, rows = sweep_rows
    assert [r.branch for r in rows] == [
        "oscillatory", "oscillatory", "oscillatory", "hyperbolic", "hyperbolic"
    ]
    for row in rows[:3]:
        assert row.error == ""
        assert row.fitted_rate == pytest.approx(row.expected_rate, abs=max(1e-10 * crit, 1e-4 * row.expected_rate))
        assert row.crossing_count > 0
        assert math.isfinite(row.t_first_crossing)
    for row in rows[3:]:
        assert row.error == "no oscillatory envelope in this branch"
        assert math.isnan(row.fitted_rate)
        assert row.crossing_count == 0
    assert rows[0].expected_rate == 0.0
    assert rows[1].kappa_over_crit == pytest.approx(0.3)


def test_sweep_crossings_decrease_with_kappa(sweep_rows):
    _, _, _, rows = sweep_rows
    counts = [r.crossing_count for r in rows]
    assert counts == sorted(counts, reverse=True)


def test_sweep_parallel_matches_serial(sweep_rows):
    cfg, _, crit, rows = sweep_rows
    grid = np.array([0.0, 0.3 * crit, 0.9 * crit, 1.5 * crit, 3.0 * crit])
    parallel = sweep_kappa(cfg, grid, jobs=3)
    assert [r.cells() for r in parallel] == [r.cells() for r in rows]


def test_sweep_grid_validation():
    cfg = config_from()
    with pytest.raises(ZenotrapError, match="non-empty"):
        sweep_kappa(cfg, np.array([]))
    with pytest.raises(ZenotrapError, match="ascending"):
        sweep_kappa(cfg, np.array([2.0, 1.0]))
    with pytest.raises(ZenotrapError, match="ascending"):
        sweep_kappa(cfg, np.array([-1.0, 1.0]))


def test_sweep_csv_layout(tmp_path, sweep_rows):
    _, _, _, rows = sweep_rows
    path = tmp_path / "rows.csv"
    write_sweep_csv(path, rows)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    assert len(lines) == 1 + len(rows)
    assert lines[1].split(",")[2] == "oscillatory"


# ---------------------------------------------------------------------------
# published-example arithmetic
# ---------------------------------------------------------------------------


def test_reference_numbers_roundtrip_and_tau_flag():
    report = reference_numbers()
    derived = report["derived"]
    agreement = report["agreement"]
    assert derived["omega01_implied[1/s]"] == pytest.approx(4.9e4 / (4 * 2.1e-2))
    assert derived["kappa_crit[1/s]"] == pytest.approx(4 * derived["omega01_implied[1/s]"])
    assert agreement["ratio_roundtrip_ok"] is True
    assert agreement["omega01_matches_stated_3sf"] is True
    assert agreement["tau_statement_consistent"] is False
    assert agreement["tau_factor"] == pytest.approx(10.0, rel=0.01)
    assert derived["tau_4_over_kappa[s]"] == pytest.approx(81.6e-6, rel=1e-3)


def test_reference_numbers_formatting_reports_both_taus():
    text = format_reference_numbers(reference_numbers())
    assert "81.6" in text
    assert "816" in text
    assert "tau_statement_consistent" in text
    assert "NO" in text  # the inconsistent item is visibly flagged


# ---------------------------------------------------------------------------
# document comparison
# ---------------------------------------------------------------------------


def make_doc(times, **channels):
    return {
        "series": {
            "times": list(times),
            "channels": {k: list(v) for k, v in channels.items()},
            "units": {k: "1" for k in channels},
        }
    }


def test_compare_documents_verdicts():
    t = [0.0, 1.0, 2.0]
    a = make_doc(t, P_down=[1.0, 0.5, 0.2], extra=[0.0, 0.0, 0.0])
    b = make_doc(t, P_down=[1.0, 0.5, 0.2 + 5e-7], other=[1.0, 1.0, 1.0])
    outcome = compare_documents(a, b, tol=1e-6)
    assert outcome.passed
    assert [c.channel for c in outcome.channels] == ["P_down"]  # only shared channels
    assert outcome.channels[0].max_abs_dev == pytest.approx(5e-7)

    tight = compare_documents(a, b, tol=1e-8)
    assert not tight.passed
    loose = compare_documents(a, b, tol=1e-8, channel_tols={"P_down": 1e-5})
    assert loose.passed


def test_compare_documents_rejects_grid_mismatch():
    a = make_doc([0.0, 1.0], P_down=[1.0, 0.5])
    b = make_doc([0.0, 2.0], P_down=[1.0, 0.5])
    with pytest.raises(ZenotrapError, match="time grids differ"):
        compare_documents(a, b, tol=1e-6)
    c = make_doc([0.0, 1.0], other=[0.0, 0.0])
    with pytest.raises(ZenotrapError, match="share no channels"):
        compare_documents(a, c, tol=1e-6)


def test_load_series_document_validates(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(make_doc([0.0], P_down=[1.0])))
    assert load_series_document(good)["series"]["channels"]["P_down"] == [1.0]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"not": "a run"}))
    with pytest.raises(ZenotrapError, match="missing series"):
        load_series_document(bad)


def test_run_document_shape(fock_run):
    result, _ = fock_run
    doc = run_document(result)
    assert set(doc) == {
        "name", "config", "config_hash", "series", "analytic",
        "comparison", "equipartition", "final_diagnostics", "error",
    }
    assert doc["name"] == "unit-run"
    assert len(doc["series"]["times"]) == 64
    assert doc["analytic"]["provenance"] == "analytic"
