import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conescoop.capture import (
    CoverageModel,
    compliance,
    conformance,
    cross_width,
    effective_width,
    lateral_coverage,
    oversize_factor,
    scoop_fraction,
    sweep_depth_for,
)
from conescoop.cone import ConeConfig
from conescoop.scene import ContainerSpec, granular_preset

MODEL = CoverageModel()
BOWL = ContainerSpec(110.0)
cones = st.floats(70.71, 100.0).map(lambda d: ConeConfig.from_diameter(50.0, d))
press = st.floats(0.0, 20.0)


def test_widening_examples():
    c80 = ConeConfig.from_diameter(50.0, 80.0)
    assert effective_width(c80, 0.0, MODEL) == 80.0
    assert effective_width(c80, 2.0, MODEL) == pytest.approx(84.0, abs=1e-12)
    assert effective_width(c80, 50.0, MODEL) == 100.0  # capped at 2R
    assert effective_width(60.0, 3.0, MODEL) == 66.0
    assert effective_width(60.0, 3.0, MODEL, max_width=62.0) == 62.0
    with pytest.raises(ValueError):
        effective_width(c80, -0.1, MODEL)


@given(cones, press, press)
def test_width_is_monotone_in_press(cone, a, b):
    lo, hi = sorted((a, b))
    assert effective_width(cone, hi, MODEL) >= effective_width(cone, lo, MODEL) >= cone.bottom_diameter_d - 1e-12


def test_cross_width_is_the_chord():
    assert cross_width(BOWL, 55.0) == pytest.approx(110.0)
    assert cross_width(BOWL, 10.0) == pytest.approx(2 * math.sqrt(55**2 - 45**2))
    for bad in (0.0, -1.0, 56.0):
        with pytest.raises(ValueError):
            cross_width(BOWL, bad)


def test_coverage_examples():
    depth = 20.0
    wc = cross_width(BOWL, depth)
    assert lateral_coverage(wc, BOWL, depth) == 1.0
    assert lateral_coverage(2 * wc, BOWL, depth) == 1.0
    assert lateral_coverage(0.0, BOWL, depth) == 0.0
    assert lateral_coverage(wc / 2, BOWL, depth) == pytest.approx(0.5, abs=1e-15)


@given(st.floats(0.0, 200.0), st.floats(0.1, 55.0), st.floats(50.0, 150.0), press,
       st.floats(0.0, 10.0))
def test_coverage_is_a_fraction(width, depth, tool, p, grain):
    c = lateral_coverage(width, BOWL, depth, MODEL, tool_width=tool, press_depth=p,
                         grain_diameter=grain)
    assert 0.0 <= c <= 1.0


@given(st.floats(0.1, 55.0), st.floats(0.0, 109.9))
def test_full_coverage_needs_the_full_chord(depth, short):
    wc = cross_width(BOWL, depth)
    assert lateral_coverage(min(short, wc * 0.999), BOWL, depth) < 1.0


@given(st.floats(1.0, 1.5), st.floats(0.001, 0.5), press)
def test_oversize_penalty_grows_with_mismatch(ratio, extra, p):
    D = 67.0
    a = oversize_factor(D, D * ratio, p, MODEL)
    b = oversize_factor(D, D * (ratio + extra), p, MODEL)
    assert b < a <= 1.0
    assert oversize_factor(D, D * 0.9, p, MODEL) == 1.0


def test_oversize_penalty_is_milder_for_a_compliant_edge():
    rigid = oversize_factor(67.0, 80.0, 0.0, MODEL)
    soft = oversize_factor(67.0, 80.0, 5.0, MODEL)
    assert rigid == pytest.approx((67 / 80) ** 2)
    assert soft == pytest.approx((67 / 80) ** 0.5)


def test_conformance():
    assert compliance(0.5, MODEL) == 0.5
    assert compliance(7.0, MODEL) == 1.0
    assert conformance(0.0, 0.3, MODEL) == pytest.approx(0.2)
    assert conformance(0.0, 3.0, MODEL) == 1.0  # coarse grains bridge any gap
    assert conformance(2.0, 0.1, MODEL) == 1.0


def test_sweep_depth_is_bounded_by_the_rim():
    for D in (67.0, 80.0, 110.0):
        bowl = ContainerSpec(D)
        depth = sweep_depth_for(bowl, granular_preset("flour"), MODEL)
        assert 0 < depth <= bowl.rim_depth


def test_scoop_fraction():
    assert scoop_fraction(1.0, 1.0) == 1.0
    assert scoop_fraction(0.98, 0.97) == pytest.approx(0.9506)
    with pytest.raises(ValueError):
        scoop_fraction(1.2, 0.5)


@given(st.floats(0.0, 1.0))
def test_zero_coverage_absorbs(x):
    assert scoop_fraction(x, 0.0) == 0.0


@pytest.mark.parametrize("kw", [
    {"widening_gain": -1.0}, {"coverage_exponent": 0.0}, {"press_reference": 0.0},
    {"conform_loss": 1.5}, {"depth_factor": 0.0},
])
def test_model_validation(kw):
    with pytest.raises(ValueError):
        CoverageModel(**kw)
