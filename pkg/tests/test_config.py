import math

import pytest

from conescoop.config import ConfigError, config_from_text, load_config, merge

GOOD = """\
scenario: demo
trials: 3
base_seed: 11
container:
  diameter_mm: 110
effector:
  preset: pp
  bottom_diameter_mm: 90
granular:
  preset: rice
  total_mass_g: 8
trajectory:
  penetration_offset_mm: 1.5
  tool_angle_deg: 40
simulation:
  settle_time_s: 0.1
"""


def error_for(text):
    with pytest.raises(ConfigError) as info:
        config_from_text(text, "cfg.yaml")
    return info.value


def test_good_config_converts_units():
    cfg = config_from_text(GOOD)
    assert cfg.scenario == "demo" and cfg.trials == 3 and cfg.base_seed == 11
    assert cfg.container.inner_diameter_D == 110.0
    assert cfg.cone.bottom_diameter_d == pytest.approx(90.0)
    assert cfg.granular.material_name == "rice"
    assert cfg.granular.total_mass == 8.0
    assert cfg.trajectory.tool_angle == pytest.approx(math.radians(40))
    assert cfg.trajectory.penetration_offset_delta == 1.5
    assert cfg.simulation.settle_time == 0.1
    assert cfg.tool_width == pytest.approx(90.0)


def test_slide_angle_form():
    cfg = config_from_text(GOOD.replace("bottom_diameter_mm: 90", "slide_angle_deg: 72"))
    assert cfg.cone.bottom_diameter_d == pytest.approx(80.0)


def test_ladle_has_a_fixed_width():
    cfg = config_from_text(GOOD.replace("preset: pp\n  bottom_diameter_mm: 90", "preset: ladle"))
    assert cfg.effector == "ladle"
    assert cfg.tool_width == cfg.sheet.fixed_width


def test_unknown_preset_lists_alternatives():
    err = error_for(GOOD.replace("preset: rice", "preset: sand"))
    assert err.line == 10 and err.field == "granular.preset"
    assert "flour" in str(err) and "coffee" in str(err)
    err = error_for(GOOD.replace("preset: pp", "preset: wood"))
    assert err.line == 7
    assert "sus304" in str(err) and "ladle" in str(err)


def test_unknown_key_names_the_field_and_line():
    err = error_for(GOOD.replace("tool_angle_deg", "tool_angel_deg"))
    assert err.field == "trajectory.tool_angel_deg"
    assert err.line == 14
    assert str(err).startswith("cfg.yaml:line 14: field 'trajectory.tool_angel_deg'")
    assert "tool_angle_deg" in str(err)


def test_non_number():
    err = error_for(GOOD.replace("diameter_mm: 110", "diameter_mm: big"))
    assert err.field == "container.diameter_mm" and err.line == 5
    assert "expected a number" in str(err)


def test_yaml_syntax_error_has_a_line():
    err = error_for(GOOD.replace("  tool_angle_deg: 40", "  tool_angle_deg: [40"))
    assert err.line is not None and err.line >= 14
    assert "YAML" in str(err)


def test_missing_section():
    text = "\n".join(line for line in GOOD.splitlines() if "container" not in line
                     and "diameter_mm: 110" not in line)
    err = error_for(text)
    assert err.field == "container"


def test_domain_errors_are_reported_against_the_section():
    err = error_for(GOOD.replace("diameter_mm: 110", "diameter_mm: -3"))
    assert err.field == "container" and err.line == 4
    err = error_for(GOOD.replace("bottom_diameter_mm: 90", "bottom_diameter_mm: 120"))
    assert err.field == "effector.bottom_diameter_mm"


@pytest.mark.parametrize("old, new", [
    ("trials: 3", "trials: 0"),
    ("trials: 3", "trials: 2.5"),
    ("settle_time_s: 0.1", "chunk_steps: 0"),
    ("scenario: demo", "scenario: ''"),
    ("scenario: demo", "scenarios: demo"),
])
def test_other_rejections(old, new):
    error_for(GOOD.replace(old, new))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.yaml")


def test_merge_is_recursive():
    a = {"x": {"y": 1, "z": 2}, "w": 0}
    assert merge(a, {"x": {"y": 5}}) == {"x": {"y": 5, "z": 2}, "w": 0}
    assert a["x"]["y"] == 1
