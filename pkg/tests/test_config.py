# project
from app.core.config import (
    Settings,
    apply_overrides,
    dump_config,
    flatten_config,
    load_config,
    parse_config_text,
    preset_config,
    validate_config,
)
from app.core.errors import ConfigError
from app.schemas.ensemble import InitialStateKind
from app.schemas.experiment import Preset
from app.schemas.measurement import Scheme

# 3rd party
import pytest


@pytest.mark.parametrize("preset", list(Preset))
def test_dump_parses_back_to_the_same_config(preset):
    cfg = preset_config(preset)
    assert parse_config_text(dump_config(cfg)) == cfg


def test_dump_keeps_full_float_precision():
    cfg = apply_overrides(preset_config("fig1"), {"physics.epsilon": 0.1 + 1e-15})
    assert parse_config_text(dump_config(cfg)).physics.epsilon == 0.1 + 1e-15


def test_presets():
    fig3a = preset_config("fig3a")
    assert fig3a.physics.tau_steps == 1400
    assert fig3a.feedback.enabled and fig3a.feedback.f == 3.0
    assert preset_config(Preset.FIG3B).physics.tau_steps == 2500

    heat = preset_config("heat")
    assert heat.physics.g == 0.0
    assert heat.run.initial == InitialStateKind.EXPLICIT
    assert heat.sweep.delta_i == [5.0, 10.0, 20.0]

    jarzynski = preset_config("jarzynski")
    assert jarzynski.sweep.tau_steps == [1400, 2500]
    assert jarzynski.run.scheme == Scheme.BAYESIAN


def test_default_caption_ratios():
    ratios = preset_config("fig2").physics.caption_ratios()
    assert ratios["s0_over_delta_i2"] == pytest.approx(250000.0)
    assert ratios["hbar_over_g"] == pytest.approx(160.0)
    assert ratios["hbar_over_epsilon"] == pytest.approx(1000.0)
    assert ratios["tau"] == 3000.0


def test_unknown_preset():
    with pytest.raises(ConfigError) as info:
        preset_config("fig9")
    assert info.value.key_paths == ["preset"]


@pytest.mark.parametrize(
    "flat, path",
    [
        ({"preset": "fig1", "run.n_traj": 0}, "run.n_traj"),
        ({"preset": "fig1", "physics.bogus": 1}, "physics.bogus"),
        ({"preset": "fig1", "run.scheme": "rk4"}, "run.scheme"),
        ({"preset": "fig1", "feedback.f": -2.0}, "feedback.f"),
    ],
)
def test_invalid_values_name_their_key(flat, path):
    with pytest.raises(ConfigError) as info:
        validate_config(flat)
    assert path in info.value.key_paths
    assert path in str(info.value)


def test_stride_must_divide_every_grid():
    with pytest.raises(ConfigError):
        validate_config({"preset": "jarzynski", "run.record_stride": 300, "sweep.tau_steps": [1400]})


def test_explicit_initial_state_needs_coords():
    with pytest.raises(ConfigError):
        validate_config({"preset": "fig1", "run.initial": "explicit"})


def test_config_text_errors():
    with pytest.raises(ConfigError):
        parse_config_text("preset = fig1\nrun.seed = 1\nrun.seed = 2\n")
    with pytest.raises(ConfigError):
        parse_config_text("preset = fig1\nrun.seed\n")
    with pytest.raises(ConfigError):
        parse_config_text("preset = fig1\nrun = 3\nrun.seed = 1\n")


def test_config_text_comments_and_types():
    cfg = parse_config_text(
        "# quick look\n"
        "preset = heat\n"
        "\n"
        "run.initial = explicit\n"
        "run.initial_coords = [0.5, 0.5, 0.0]\n"
        "sweep.delta_i = [5, 10]\n"
        "feedback.enabled = false\n"
    )
    assert cfg.preset == Preset.HEAT
    assert cfg.run.initial_coords == (0.5, 0.5, 0.0)
    assert cfg.sweep.delta_i == [5.0, 10.0]


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("preset = fig2\nrun.n_traj = 12\n", encoding="utf-8")
    cfg = load_config(path)
    assert cfg.preset == Preset.FIG2
    assert cfg.run.n_traj == 12

    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_overrides_skip_unset_values():
    cfg = apply_overrides(preset_config("fig1"), {"run.seed": 5, "run.n_traj": None})
    assert cfg.run.seed == 5
    assert cfg.run.n_traj == 1
    assert ("run.seed", 5) in flatten_config(cfg)


def test_settings_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("TRAJTHERMO_WORKERS", "3")
    settings = Settings()
    assert settings.workers == 3
    assert settings.output_dir == tmp_path / "results"
