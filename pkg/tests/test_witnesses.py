import math

import numpy as np
import pytest

from cavens.model import Moment, MomentState, Scenario, initial_state, preset_params
from cavens.runner import run_scenario
from cavens.witnesses import (
    InternalConsistencyError,
    antibunch_inter,
    antibunch_single,
    bisep,
    duan,
    evaluate,
    hz_pair,
    intermodal_quadrature_variances,
    mandel_q,
    quadrature_variances,
    steering,
)
from conftest import make_coherent_state, make_random_state, rotate_mode_a

VACUUM = initial_state(0, 0, 0)
UNIT = initial_state(1, 1, 1)


def test_mandel_values():
    assert mandel_q(make_coherent_state(0.7 - 0.2j, 0, 0), "A") == pytest.approx(0.0, abs=1e-12)
    assert mandel_q(UNIT, "A") == pytest.approx(1.0, abs=1e-14)
    assert math.isnan(mandel_q(VACUUM, "B"))


def test_antibunch_single_values():
    assert antibunch_single(make_coherent_state(1.0, 0, 0), "A") == pytest.approx(0.0, abs=1e-14)
    assert antibunch_single(UNIT, "C") == pytest.approx(1.0, abs=1e-14)


def test_antibunch_identity_with_mandel(rng):
    for _ in range(20):
        s = make_random_state(rng)
        q = mandel_q(s, "A")
        occ = s[Moment.AdA].real
        assert abs(antibunch_single(s, "A") - q * occ) < 1e-12


def test_antibunch_inter_values():
    assert antibunch_inter(UNIT, ("A", "B")) == pytest.approx(0.0, abs=1e-14)
    coh = make_coherent_state(1.0, 1.0, 0.0)
    assert antibunch_inter(coh, ("A", "B")) == pytest.approx(0.0, abs=1e-13)


def test_quadrature_variances_values():
    assert quadrature_variances(VACUUM, "A") == (pytest.approx(0.25), pytest.approx(0.25))
    assert quadrature_variances(UNIT, "B") == (pytest.approx(0.75), pytest.approx(0.75))


def test_intermodal_quadrature_values():
    vx, vy = intermodal_quadrature_variances(VACUUM, ("A", "C"))
    assert (vx, vy) == (pytest.approx(0.25), pytest.approx(0.25))
    vx, vy = intermodal_quadrature_variances(UNIT, ("A", "C"))
    assert (vx, vy) == (pytest.approx(0.75), pytest.approx(0.75))


def test_duan_values():
    assert duan(VACUUM, ("A", "B")) == pytest.approx(0.0, abs=1e-14)
    assert duan(UNIT, ("B", "C")) == pytest.approx(4.0, abs=1e-14)


def test_hz_values():
    coh = make_coherent_state(1.0, 1.0, 1.0)
    e, et = hz_pair(coh, ("A", "B"))
    assert e == pytest.approx(0.0, abs=1e-13)
    assert et == pytest.approx(0.0, abs=1e-13)
    e, et = hz_pair(UNIT, ("A", "B"))
    assert (e, et) == (pytest.approx(1.0), pytest.approx(1.0))


def test_steering_values_and_asymmetry(rng):
    coh = make_coherent_state(1.0, 1.0, 0.0)
    assert steering(coh, ("A", "B")) == pytest.approx(0.5, abs=1e-13)
    assert steering(UNIT, ("B", "A")) == pytest.approx(1.5, abs=1e-14)
    for _ in range(20):
        s = make_random_state(rng)
        lhs = steering(s, ("A", "C")) - steering(s, ("C", "A"))
        rhs = (s[Moment.AdA].real - s[Moment.CdC].real) / 2
        assert abs(lhs - rhs) < 1e-12


def test_bisep_values():
    assert bisep(VACUUM, ("A", "B", "C")) == (pytest.approx(0.0), pytest.approx(0.0))
    e, ep = bisep(UNIT, ("A", "B", "C"))
    assert (e, ep) == (pytest.approx(1.0), pytest.approx(1.0))
    with pytest.raises(ValueError):
        bisep(UNIT, ("A", "B", "B"))


def test_pair_swap_symmetry(rng):
    s = make_random_state(rng)
    assert antibunch_inter(s, ("A", "B")) == pytest.approx(antibunch_inter(s, ("B", "A")), abs=1e-12)
    assert duan(s, ("B", "C")) == pytest.approx(duan(s, ("C", "B")), abs=1e-12)
    assert hz_pair(s, ("A", "C"))[0] == pytest.approx(hz_pair(s, ("C", "A"))[0], abs=1e-12)
    assert hz_pair(s, ("A", "C"))[1] == pytest.approx(hz_pair(s, ("C", "A"))[1], abs=1e-12)


def test_coherent_boundary_full_catalog(rng):
    """On fully factorized coherent data every witness sits at its classical value."""
    for _ in range(25):
        a, b, c = (rng.normal(scale=0.8) + 1j * rng.normal(scale=0.8) for _ in range(3))
        s = make_coherent_state(a, b, c)
        rec = evaluate(s)
        for m in ("A", "B", "C"):
            assert abs(rec.antibunch[m]) < 1e-10
            assert abs(rec.var_x[m] - 0.25) < 1e-10
            assert abs(rec.var_y[m] - 0.25) < 1e-10
            occ = abs((a, b, c)[("A", "B", "C").index(m)]) ** 2
            if occ > 1e-10:
                assert abs(rec.mandel[m]) < 1e-9
        for p in ("AB", "BC", "AC"):
            assert abs(rec.antibunch_pair[p]) < 1e-10
            assert abs(rec.var_x_pair[p] - 0.25) < 1e-10
            assert abs(rec.var_y_pair[p] - 0.25) < 1e-10
            assert abs(rec.duan[p]) < 1e-10
            assert abs(rec.hz_e[p]) < 1e-10
            assert abs(rec.hz_etilde[p]) < 1e-10
        for op in ("AB", "BA", "BC", "CB", "AC", "CA"):
            occ = abs((a, b, c)[("A", "B", "C").index(op[0])]) ** 2
            assert abs(rec.steering[op] - occ / 2) < 1e-10
        for part in ("AB|C", "BC|A", "AC|B"):
            assert abs(rec.bisep_e[part]) < 1e-10
            assert abs(rec.bisep_eprime[part]) < 1e-10


def test_phase_covariance(rng):
    phase_free = ("mandel", "antibunch", "antibunch_pair", "hz_e", "hz_etilde", "steering")
    for _ in range(10):
        s = make_random_state(rng)
        rotated = rotate_mode_a(s, rng.uniform(0, 2 * np.pi))
        r1, r2 = evaluate(s), evaluate(rotated)
        for field in phase_free:
            d1, d2 = getattr(r1, field), getattr(r2, field)
            for key in d1:
                if isinstance(d1[key], float) and math.isnan(d1[key]):
                    assert math.isnan(d2[key])
                else:
                    assert abs(d1[key] - d2[key]) < 1e-10


def test_inconsistent_state_raises():
    v = initial_state(1, 1, 1).values.copy()
    v[Moment.AA] = 0.5j     # break <A2> / <Ad2> conjugacy by a large margin
    v[Moment.AdAd] = 0.5j
    broken = MomentState(v)
    with pytest.raises(InternalConsistencyError):
        quadrature_variances(broken, "A")


def test_duan_bc_nonnegative_in_an_preset():
    _, series = run_scenario(Scenario(params=preset_params("AN", 0.0), sample_count=201))
    assert series.column("duan_BC").min() >= 0.0


def test_intermodal_antibunch_ac_no_dip_in_na_without_drive():
    sc = Scenario(params=preset_params("NA", 0.0), sample_count=201)
    _, series = run_scenario(sc)
    assert series.column("antibunch_AC")[1:].min() >= -sc.threshold


def test_evaluate_record_is_finite_except_mandel():
    rec = evaluate(initial_state(0.3, 0.0, 1.2))
    for name, value in zip(rec.column_names(), rec.column_values()):
        if not name.startswith("mandel_"):
            assert math.isfinite(value), name
