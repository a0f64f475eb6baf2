import numpy as np
import pytest

import cavens.runner as runner_mod
from cavens.model import Moment, Scenario, SystemParams, preset_params
from cavens.runner import SIGN_ROWS, chi_sweep, run_scenario, table_matrix


def test_zero_parameter_scenario_constant_witnesses():
    sc = Scenario(params=SystemParams(), sample_count=41, t_max=5.0)
    _, series = run_scenario(sc)
    for name in series.column_names():
        col = series.column(name)
        np.testing.assert_allclose(col, col[0], rtol=0, atol=1e-12)


def test_run_scenario_deterministic():
    sc = Scenario(params=preset_params("NA", 0.2), sample_count=101, t_max=4.0)
    (_, s1), (_, s2) = run_scenario(sc), run_scenario(sc)
    for name in ("mandel_A", "hz_e_AB", "steering_CA", "bisep_eprime_AC_B"):
        np.testing.assert_array_equal(s1.column(name), s2.column(name))


def test_series_grid_alignment_and_unknown_column():
    sc = Scenario(params=preset_params("AN", 0.0), sample_count=11, t_max=1.0)
    traj, series = run_scenario(sc)
    assert len(series) == len(traj) == 11
    np.testing.assert_array_equal(series.taus, traj.taus)
    with pytest.raises(KeyError):
        series.column("not_a_witness")


def test_antinode_mode_decays_faster_than_node_mode():
    # the driven ensemble damps quickly at the antinode (AN) and slowly at the node (NA)
    occ = {}
    for cfg in ("AN", "NA"):
        traj, _ = run_scenario(Scenario(params=preset_params(cfg, 0.0),
                                        t_max=2.0, sample_count=21))
        occ[cfg] = traj.states[-1, Moment.AdA].real
    assert occ["AN"] < occ["NA"]


@pytest.fixture(scope="module")
def small_matrix():
    return table_matrix(t_max=5.0, sample_count=251)


def test_table_matrix_shape_and_evidence(small_matrix):
    m = small_matrix
    assert len(m.cells) == 288  # 36 cells per (configuration, chi) column
    per_row = {row: len(keys) for row, keys, _, _ in SIGN_ROWS}
    assert sum(per_row.values()) == 36
    for c in m.cells:
        boundary = 0.25 if c.row.startswith("squeeze") else 0.0
        if np.isnan(c.min_value):
            assert not c.tick
            continue
        assert c.tick == (c.min_value < boundary - m.threshold)
        assert 0.0 < c.argmin_tau <= m.t_max


def test_table_matrix_known_cells(small_matrix):
    # cells that the physical moment dynamics pins down from occupation-only
    # initial data: no spurious dips anywhere near these witnesses
    m = small_matrix
    assert not m.tick("NA", 0.0, "antibunch_pair", "AC")
    assert not m.tick("NA", 0.0, "steering", "AB")
    assert not m.tick("NN", 0.0, "steering", "AB")
    assert not m.tick("NN", 0.0, "steering", "BA")
    for part in ("AB|C", "BC|A", "AC|B"):
        for chi in (0.0, 0.2):
            assert not m.tick("NA", chi, "bisep_e", part)
    with pytest.raises(KeyError):
        m.cell("NA", 0.7, "steering", "AB")


def test_table_matrix_threshold_validation():
    with pytest.raises(ValueError):
        table_matrix(threshold=0.0)


def test_sweep_single_point_matches_run_scenario():
    surface = chi_sweep("AN", [0.2], "var_x_A", t_max=2.0, sample_count=41)
    sc = Scenario(params=preset_params("AN", 0.2), t_max=2.0, sample_count=41)
    _, series = run_scenario(sc)
    np.testing.assert_array_equal(surface.values[0], series.column("var_x_A"))
    assert surface.status == ("ok",)


def test_sweep_permutation_only_permutes_rows():
    fwd = chi_sweep("NA", [0.0, 0.1], "hz_e_AB", t_max=1.5, sample_count=31)
    rev = chi_sweep("NA", [0.1, 0.0], "hz_e_AB", t_max=1.5, sample_count=31)
    np.testing.assert_array_equal(fwd.values[0], rev.values[1])
    np.testing.assert_array_equal(fwd.values[1], rev.values[0])


def test_sweep_min_variance_non_increasing_with_drive():
    surface = chi_sweep("AN", [0.0, 0.1, 0.2], "var_x_A", t_max=10.0, sample_count=501)
    mins = surface.values[:, 1:].min(axis=1)
    assert np.all(np.diff(mins) <= 1e-8)  # slack at integrator accuracy


def test_sweep_validates_input():
    with pytest.raises(KeyError):
        chi_sweep("AN", [0.0], "nope")
    with pytest.raises(ValueError):
        chi_sweep("AN", [], "var_x_A")


def test_sweep_keeps_partial_results(monkeypatch):
    real = runner_mod.run_scenario

    def flaky(scenario):
        if scenario.params.chi == 0.1:
            raise RuntimeError("synthetic failure")
        return real(scenario)

    monkeypatch.setattr(runner_mod, "run_scenario", flaky)
    surface = chi_sweep("AN", [0.0, 0.1], "var_x_A", t_max=1.0, sample_count=11)
    assert surface.status[0] == "ok"
    assert surface.status[1].startswith("error:")
    assert np.all(np.isfinite(surface.values[0]))
    assert np.all(np.isnan(surface.values[1]))
