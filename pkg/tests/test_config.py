import math

import pytest

from zenotrap import (
    CHANNEL_UNITS,
    CoherentState,
    ConfigError,
    FockState,
    FullCoupling,
    ReducedJCM,
    ThermalState,
    dumps,
    load,
    loads,
    parse_mode,
    parse_state,
)

MINIMAL = """\
omega   = 2pi*11.2e6 rad/s
omega0  = 2.9745e6 rad/s
eta     = 0.2
kappa   = 4.9e4 1/s
initial = fock(0)
"""

FULL_TEXT = """\
# a fully spelled-out scenario
name    = everything
omega   = 2pi*11.2e6 rad/s
omega21 = 2pi*1.25e9 rad/s
omega0  = 2.9745e6 rad/s
eta     = 0.2
phi     = -pi/2 rad
k       = 1
kappa   = 1.1662e5 1/s
initial = coherent(1.0)
internal = down
mode    = jcm
dim     = 16
t_final = 240e-6 s
samples = 1200
method  = adaptive
rel_tol = 1e-10
abs_tol = 1e-13
max_step = 1e-7 s
tail_budget = 1e-9
channels = P_down, mean_position, mean_energy
emit    = csv
compare_tol_pdown    = 1e-6
compare_tol_energy   = 1e-6
compare_tol_position = 1e-5
envelope_rate_tol    = 0.01
"""


def expect_error(text: str, fragment: str, *, line_no=None, key=None):
    with pytest.raises(ConfigError) as err:
        loads(text)
    assert fragment in str(err.value), str(err.value)
    if line_no is not None:
        assert err.value.line_no == line_no
    if key is not None:
        assert err.value.key == key
    return err.value


# ---------------------------------------------------------------------------
# happy paths
# ---------------------------------------------------------------------------


def test_minimal_config_fills_documented_defaults():
    cfg = loads(MINIMAL)
    assert cfg.name == "scenario"
    assert cfg.params.omega == pytest.approx(2 * math.pi * 11.2e6)
    assert cfg.params.phi == 0.0
    assert cfg.params.k_sideband == 1
    assert cfg.initial == FockState(0)
    assert cfg.internal == "down"
    assert isinstance(cfg.mode, ReducedJCM)
    assert cfg.dim_fock is None and cfg.t_final is None
    assert cfg.samples == 2000
    assert cfg.method == "adaptive"
    assert cfg.channels == tuple(CHANNEL_UNITS)
    assert cfg.emit == ("csv", "json")
    assert cfg.tolerances["compare_tol_pdown"] == 1e-6
    assert cfg.tolerances["envelope_rate_tol"] is None
    assert math.isinf(cfg.max_step)


def test_full_config_parses_every_field():
    cfg = loads(FULL_TEXT)
    assert cfg.name == "everything"
    assert cfg.params.kappa == pytest.approx(1.1662e5)
    assert cfg.initial == CoherentState(1.0 + 0j)
    assert cfg.dim_fock == 16
    assert cfg.t_final == pytest.approx(240e-6)
    assert cfg.samples == 1200
    assert cfg.max_step == pytest.approx(1e-7)
    assert cfg.channels == ("P_down", "mean_position", "mean_energy")
    assert cfg.emit == ("csv",)
    assert cfg.tolerances["envelope_rate_tol"] == pytest.approx(0.01)
    assert cfg.tolerances["energy_drift_tol"] is None


def test_pi_shorthand_variants():
    base = MINIMAL.replace("eta     = 0.2", "eta     = 0.2").replace(
        "omega   = 2pi*11.2e6 rad/s", "omega   = 2pi * 11.2e6 rad/s"
    )
    assert loads(base).params.omega == pytest.approx(2 * math.pi * 11.2e6)
    cfg = loads(MINIMAL + "phi = -pi/2 rad\n")
    assert cfg.params.phi == pytest.approx(-math.pi / 2)
    cfg = loads(MINIMAL + "phi = 0.5pi rad\n")
    assert cfg.params.phi == pytest.approx(0.5 * math.pi)


def test_arithmetic_expressions_in_values():
    cfg = loads(MINIMAL + "t_final = 3*4e-6 s\n")
    assert cfg.t_final == pytest.approx(12e-6)
    cfg = loads(MINIMAL.replace("kappa   = 4.9e4 1/s", "kappa   = 4.9e4/2 1/s"))
    assert cfg.params.kappa == pytest.approx(2.45e4)
    cfg = loads(MINIMAL.replace("omega0  = 2.9745e6 rad/s", "omega0  = 2.9745e6*1e-2**0 rad/s"))
    assert cfg.params.omega0 == pytest.approx(2.9745e6)


def test_state_families():
    assert parse_state("fock(3)") == FockState(3)
    assert parse_state("coherent(1.5)") == CoherentState(1.5 + 0j)
    assert parse_state("coherent(0.5+0.5j)") == CoherentState(0.5 + 0.5j)
    assert parse_state("thermal(0.5)") == ThermalState(0.5)
    assert parse_state("Thermal( 2 )") == ThermalState(2.0)


def test_mode_spellings():
    assert isinstance(parse_mode("jcm"), ReducedJCM)
    assert parse_mode("full") == FullCoupling(sideband_cutoff=None)
    assert parse_mode("full(6)") == FullCoupling(sideband_cutoff=6)
    assert parse_mode("FULL(2)") == FullCoupling(sideband_cutoff=2)


def test_strong_drive_warns_at_parse_time():
    text = MINIMAL.replace("omega0  = 2.9745e6 rad/s", "omega0  = 2pi*2e6 rad/s")
    with pytest.warns(UserWarning, match="omega0/omega"):
        loads(text)


# ---------------------------------------------------------------------------
# canonical form, hashing, overrides
# ---------------------------------------------------------------------------


def test_dumps_round_trip_is_exact():
    for text in (MINIMAL, FULL_TEXT):
        cfg = loads(text)
        again = loads(dumps(cfg))
        assert again.normalized() == cfg.normalized()
        assert again.config_hash() == cfg.config_hash()
        assert again == cfg


def test_hash_tracks_content_not_formatting():
    spaced = MINIMAL.replace("eta     = 0.2", "eta=0.2   # compact")
    assert loads(spaced).config_hash() == loads(MINIMAL).config_hash()
    changed = MINIMAL.replace("kappa   = 4.9e4 1/s", "kappa   = 4.9001e4 1/s")
    assert loads(changed).config_hash() != loads(MINIMAL).config_hash()


def test_with_overrides_and_frozen():
    cfg = loads(MINIMAL)
    bumped = cfg.with_overrides(samples=500)
    assert bumped.samples == 500 and cfg.samples == 2000
    with pytest.raises(AttributeError):
        cfg.samples = 7


def test_dumps_skips_auto_fields():
    text = dumps(loads(MINIMAL))
    assert "dim" not in text
    assert "t_final" not in text
    assert "max_step" not in text  # infinity is the implicit default
    assert "envelope_rate_tol" not in text
    finite = dumps(loads(MINIMAL + "max_step = 1e-7 s\n"))
    assert "max_step = 1e-07 s" in finite


# ---------------------------------------------------------------------------
# rejection paths
# ---------------------------------------------------------------------------


def test_unknown_key_suggests_nearest():
    err = expect_error(MINIMAL + "omga = 1.0\n", "did you mean 'omega'", line_no=6, key="omga")
    assert "omga" in str(err)


def test_duplicate_key_rejected():
    expect_error(MINIMAL + "eta = 0.3\n", "duplicate key 'eta'", line_no=6, key="eta")


def test_missing_required_key():
    text = MINIMAL.replace("kappa   = 4.9e4 1/s\n", "")
    expect_error(text, "missing required key 'kappa'", key="kappa")


def test_negative_kappa_names_the_key():
    text = MINIMAL.replace("kappa   = 4.9e4 1/s", "kappa   = -1 1/s")
    err = expect_error(text, "kappa must be >= 0", key="kappa")
    assert err.line_no == 4


def test_unit_mismatch_lists_allowed_units():
    text = MINIMAL.replace("omega   = 2pi*11.2e6 rad/s", "omega   = 2pi*11.2e6 s")
    expect_error(text, "omega takes rad/s, 1/s", line_no=1, key="omega")


def test_unit_on_dimensionless_key():
    expect_error(MINIMAL.replace("eta     = 0.2", "eta     = 0.2 rad"), "eta is dimensionless", key="eta")


def test_malformed_lines():
    expect_error(MINIMAL + "just words\n", "expected key = value", line_no=6)
    expect_error(MINIMAL.replace("eta     = 0.2", "eta     ="), "empty value", key="eta")


def test_expression_whitelist():
    expect_error(MINIMAL.replace("eta     = 0.2", "eta     = tau"), "only numbers, pi")
    expect_error(
        MINIMAL.replace("eta     = 0.2", "eta     = __import__('os').getcwd()"), "only numbers, pi"
    )
    expect_error(MINIMAL.replace("eta     = 0.2", "eta     = (0.2"), "cannot parse")
    expect_error(MINIMAL.replace("eta     = 0.2", "eta     = 1/0"), "division by zero")
    expect_error(MINIMAL.replace("eta     = 0.2", "eta     = 1+2j"), "expected a real number")


def test_bad_states():
    expect_error(MINIMAL.replace("fock(0)", "fock(1.5)"), "non-negative integer")
    expect_error(MINIMAL.replace("fock(0)", "thermal(-1)"), "must be >= 0")
    expect_error(MINIMAL.replace("fock(0)", "squeezed(1)"), "expected fock(n), coherent(alpha)")


def test_bad_mode_internal_method_name():
    expect_error(MINIMAL + "mode = exact\n", "expected jcm, full, or full(cutoff)", key="mode")
    expect_error(MINIMAL + "internal = sideways\n", "expected down or up", key="internal")
    expect_error(MINIMAL + "method = euler\n", "expected adaptive or rk4", key="method")
    expect_error(MINIMAL + "name = two words\n", "letters, digits", key="name")


def test_bad_channels_and_emit():
    err = expect_error(MINIMAL + "channels = P_dwn\n", "did you mean 'P_down'", key="channels")
    assert err.line_no == 6
    expect_error(MINIMAL + "channels = ,\n", "at least one channel", key="channels")
    expect_error(MINIMAL + "emit = yaml\n", "expected csv and/or json", key="emit")


def test_bad_numeric_ranges():
    expect_error(MINIMAL + "samples = 1\n", "integer >= 2", key="samples")
    expect_error(MINIMAL + "samples = 2.5\n", "integer >= 2", key="samples")
    expect_error(MINIMAL + "dim = 1\n", "integer >= 2", key="dim")
    expect_error(MINIMAL + "t_final = -1e-6 s\n", "must be positive", key="t_final")
    expect_error(MINIMAL + "k = 2.5\n", "non-negative integer", key="k")
    expect_error(MINIMAL + "k = -1\n", "non-negative integer", key="k")
    expect_error(MINIMAL + "rel_tol = 0\n", "must be positive", key="rel_tol")
    expect_error(MINIMAL + "max_step = -1 s\n", "must be positive", key="max_step")
    expect_error(MINIMAL + "tail_budget = 0\n", "must be positive", key="tail_budget")
    expect_error(MINIMAL + "compare_tol_pdown = -1\n", "must be positive", key="compare_tol_pdown")
    expect_error(MINIMAL + "envelope_rate_tol = 0\n", "must be positive", key="envelope_rate_tol")


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def test_load_reads_files_and_tags_path(tmp_path):
    good = tmp_path / "ok.cfg"
    good.write_text(MINIMAL)
    assert load(good) == loads(MINIMAL)

    bad = tmp_path / "bad.cfg"
    bad.write_text(MINIMAL + "omga = 1\n")
    with pytest.raises(ConfigError) as err:
        load(bad)
    assert err.value.path == str(bad)
    assert err.value.line_no == 6

    with pytest.raises(ConfigError, match="cannot read"):
        load(tmp_path / "missing.cfg")
