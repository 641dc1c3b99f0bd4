import csv
import io
import json
import math
import statistics

import pytest

from conescoop.config import config_from_text
from conescoop.harness import (
    NOT_INSERTABLE,
    RESULT_COLUMNS,
    experiment_configs,
    load_matrix_text,
    results_csv_text,
    run_sweep,
    run_trial,
    summary_records,
    trial_seed,
    write_outputs,
)

MATCHED = """\
scenario: harness
base_seed: 5
trials: 1
container: {diameter_mm: 110}
effector: {preset: pp, bottom_diameter_mm: 90}
granular: {preset: flour}
"""

SMALL_MATRIX = """\
scenario: small
trials: 2
base_seed: 3
defaults:
  granular: {preset: rice}
cells:
  - {container: {diameter_mm: 80}, effector: {preset: pp, bottom_diameter_mm: 80}}
  - {container: {diameter_mm: 67}, effector: {preset: pp, bottom_diameter_mm: 90}}
  - {container: {diameter_mm: 67}, effector: {preset: ladle}}
"""


@pytest.fixture(scope="module")
def matched_trial():
    return run_trial(config_from_text(MATCHED), 0)


@pytest.fixture(scope="module")
def small_sweep():
    return run_sweep(load_matrix_text(SMALL_MATRIX), jobs=1)


def test_zero_mass_trial_is_trivial():
    cfg = config_from_text(MATCHED.replace("preset: flour", "preset: flour, total_mass_g: 0"))
    r = run_trial(cfg, 0)
    assert not r.aborted
    assert r.delivered_fraction == 0.0 and r.residue_fraction == 0.0
    assert r.n_particles == 0


def test_matched_trial_is_reproducible(matched_trial):
    again = run_trial(config_from_text(MATCHED), 0)
    a, b = vars(matched_trial).copy(), vars(again).copy()
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b


def test_matched_trial_accounts_for_all_mass(matched_trial):
    r = matched_trial
    assert not r.aborted, r.reason
    assert r.total == pytest.approx(1.0, abs=1e-6)
    for v in (r.delivered_fraction, r.residue_fraction, r.spilled_fraction,
              r.carried_end_fraction, r.lateral_coverage):
        assert 0.0 <= v <= 1.0
    assert r.max_penetration_ratio <= 0.1


def test_small_tool_scoops_less_than_matched(matched_trial):
    cfg = config_from_text(MATCHED.replace("bottom_diameter_mm: 90", "bottom_diameter_mm: 70.71"))
    small = run_trial(cfg, 0)
    assert small.seed == matched_trial.seed  # same fill
    assert small.delivered_fraction < matched_trial.delivered_fraction


def test_seeds_are_stable_and_distinct():
    assert trial_seed(0, "a", 0) == trial_seed(0, "a", 0)
    seeds = {trial_seed(b, s, t) for b in (0, 1) for s in ("a", "b") for t in range(5)}
    assert len(seeds) == 20
    assert all(0 <= s < 2**63 for s in seeds)


def test_csv_schema(small_sweep):
    rows = list(csv.DictReader(io.StringIO(results_csv_text(small_sweep))))
    assert list(rows[0]) == RESULT_COLUMNS
    assert RESULT_COLUMNS[:14] == [
        "scenario", "container_D_mm", "effector", "effector_d_mm", "material", "trial", "seed",
        "delivered_fraction", "residue_fraction", "spilled_fraction", "carried_end_fraction",
        "lateral_coverage", "aborted", "reason",
    ]
    assert len(rows) == 2 + 1 + 2
    for r in rows:
        if r["reason"].startswith(NOT_INSERTABLE):
            continue
        total = sum(float(r[k]) for k in ("delivered_fraction", "residue_fraction",
                                          "spilled_fraction", "carried_end_fraction"))
        assert total == pytest.approx(1.0, abs=1e-6)


def test_impossible_cell_is_marked_not_skipped_silently(small_sweep):
    cell = small_sweep.cell(67.0, "pp", 90.0)
    assert cell.skipped.startswith(NOT_INSERTABLE)
    assert cell.trials == []
    rows = [r for r in csv.DictReader(io.StringIO(results_csv_text(small_sweep)))
            if r["effector_d_mm"] == "90"]
    assert len(rows) == 1 and rows[0]["aborted"] == "true"


def test_summary_matches_the_rows(small_sweep, tmp_path):
    paths = write_outputs(small_sweep, tmp_path)
    rows = list(csv.DictReader(paths["results"].open()))
    summary = json.loads(paths["summary_json"].read_text())
    assert summary == json.loads(json.dumps(summary_records(small_sweep)))
    for rec in summary:
        mine = [r for r in rows if r["container_D_mm"] == f"{rec['container_D_mm']:g}"
                and r["effector"] == rec["effector"] and r["aborted"] == "false"]
        if rec["status"] == "skipped":
            assert rec["delivered_fraction_mean"] is None
            continue
        vals = [float(r["delivered_fraction"]) for r in mine]
        assert rec["delivered_fraction_mean"] == pytest.approx(statistics.fmean(vals), abs=1e-9)
        assert rec["delivered_fraction_std"] == pytest.approx(statistics.stdev(vals), abs=1e-9)
    md = paths["summary"].read_text()
    assert md.count("\n") == 2 + len(summary)


def test_parallel_sweep_is_byte_identical(small_sweep):
    par = run_sweep(load_matrix_text(SMALL_MATRIX), jobs=2)
    assert results_csv_text(par) == results_csv_text(small_sweep)


def test_experiment_presets_have_the_expected_cells():
    e1 = experiment_configs(1, trials=1)
    assert len(e1) == 12
    assert {c.container.inner_diameter_D for c in e1} == {110.0, 93.0, 80.0, 67.0}
    assert all(c.granular.material_name == "flour" for c in e1)
    e2 = experiment_configs(2)
    assert {(c.container.inner_diameter_D, c.effector) for c in e2} == {
        (D, e) for D in (83.0, 67.0) for e in ("pp", "sus304", "ladle")
    }
    assert all(c.trials == 10 for c in e2)
    e3 = experiment_configs(3)
    assert [c.granular.material_name for c in e3] == ["flour", "coffee", "rice"]
    assert all(c.container.inner_diameter_D == 110.0 and math.isclose(c.tool_width, 90.0)
               for c in e3)


def test_matrix_errors_point_at_the_cell():
    from conescoop.config import ConfigError

    bad = SMALL_MATRIX.replace("preset: ladle", "preset: spoon")
    with pytest.raises(ConfigError) as info:
        load_matrix_text(bad, "m.yaml")
    assert info.value.line == 9
    assert "ladle" in str(info.value)
