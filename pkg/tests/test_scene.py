import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from conescoop.scene import (
    GRANULAR_PRESETS,
    PP_SHEET,
    ContainerSpec,
    GranularSpec,
    SheetSpec,
    cap_depth_for_volume,
    container_sdf,
    granular_preset,
    sheet_preset,
)

BOWL = ContainerSpec(110.0)
coords = st.floats(-80.0, 80.0)


def test_centre_is_half_diameter_deep():
    d, n = container_sdf(BOWL, (0.0, 0.0))
    assert d == pytest.approx(55.0, abs=1e-12)


def test_inner_surface_along_axis_is_zero():
    p = -BOWL.axis * BOWL.radius
    d, n = container_sdf(BOWL, p)
    assert abs(d) < 1e-9
    assert n == pytest.approx(BOWL.axis, abs=1e-9)


def test_wall_interior_is_negative():
    p = -BOWL.axis * (BOWL.radius + 1.0)
    assert container_sdf(BOWL, p)[0] == pytest.approx(-1.0, abs=1e-9)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    h = 1e-6
    checked = 0
    while checked < 100:
        p = rng.uniform(-55, 55, 2)
        if not BOWL.inside_bowl(p)[0]:
            continue
        d, n = container_sdf(BOWL, p)
        fd = np.array([
            (container_sdf(BOWL, p + (h, 0))[0] - container_sdf(BOWL, p - (h, 0))[0]) / (2 * h),
            (container_sdf(BOWL, p + (0, h))[0] - container_sdf(BOWL, p - (0, h))[0]) / (2 * h),
        ])
        assert n == pytest.approx(fd, abs=1e-6)
        checked += 1


@settings(max_examples=300)
@given(coords, coords, coords, coords)
def test_sdf_is_lipschitz(ax, ay, bx, by):
    da = container_sdf(BOWL, (ax, ay))[0]
    db = container_sdf(BOWL, (bx, by))[0]
    assert abs(da - db) <= math.hypot(ax - bx, ay - by) + 1e-9


@given(coords, coords)
@example(5e-324, -5e-324)
def test_normal_is_unit(x, y):
    _, n = container_sdf(BOWL, (x, y))
    assert np.linalg.norm(n) == pytest.approx(1.0, abs=1e-9)


def test_rim_geometry_of_tilted_hemisphere():
    lo, hi = BOWL.rim_points()
    s = 55.0 / math.sqrt(2)
    assert lo == pytest.approx([s, -s], abs=1e-9)
    assert hi == pytest.approx([-s, s], abs=1e-9)
    assert BOWL.rim_height == pytest.approx(s)


def test_cap_depth_inverts_cap_volume():
    r, h = 55.0, 12.0
    vol = math.pi * h * h * (3 * r - h) / 3
    assert cap_depth_for_volume(r, vol) == pytest.approx(h, abs=1e-9)
    assert cap_depth_for_volume(r, 0.0) == 0.0


@pytest.mark.parametrize("kwargs", [
    {"inner_diameter_D": 0.0},
    {"inner_diameter_D": 80.0, "tilt_angle": math.pi / 2},
    {"inner_diameter_D": 80.0, "rim_depth": 41.0},
    {"inner_diameter_D": 80.0, "wall_thickness": 0.0},
])
def test_container_validation(kwargs):
    with pytest.raises(ValueError):
        ContainerSpec(**kwargs)


def test_granular_validation():
    base = GRANULAR_PRESETS["flour"]
    for bad in ({"particle_radius_mean": 0.0}, {"particle_radius_spread": 0.5},
                {"friction_coefficient": -0.1}, {"total_mass": -1.0}):
        with pytest.raises(ValueError):
            GranularSpec(**{**base.__dict__, **bad})


def test_presets_keep_grain_size_order():
    r = [granular_preset(m).particle_radius_mean for m in ("flour", "coffee", "rice")]
    assert r == sorted(r)


def test_unknown_presets_list_alternatives():
    with pytest.raises(KeyError, match="coffee"):
        granular_preset("sand")
    with pytest.raises(KeyError, match="sus304"):
        sheet_preset("wood")


def test_preset_aliases_and_overrides():
    assert sheet_preset("pp") is PP_SHEET
    assert sheet_preset("pp_sheet") is PP_SHEET
    assert granular_preset("flour", total_mass=5.0).total_mass == 5.0


def test_rigid_sheet_floor():
    sus = sheet_preset("sus304")
    raw = sus.material_EI / PP_SHEET.material_EI
    assert raw == pytest.approx(193 / 1.5 * 0.5**3)  # E t^3 alone falls short of 100x
    assert sus.base_bending_stiffness_EI >= 100 * PP_SHEET.base_bending_stiffness_EI


def test_sheet_validation():
    with pytest.raises(ValueError):
        SheetSpec("x", thickness=0.0, elastic_modulus=1e9)
    with pytest.raises(ValueError):
        SheetSpec("x", thickness=0.1, elastic_modulus=0.0)
