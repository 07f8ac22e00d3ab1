import math

import pytest
from hypothesis import given, settings, strategies as st

from risroute.errors import ParameterError
from risroute.link import (DEFAULT_TABLE, BerModel, ModulationTable, ber, calibrated_models,
                           direct_snr, power_for_ber, select_modulation, slots_for_batch)


@pytest.mark.parametrize("snr,m,rate", [(5, 1, 0), (9.8554, 2, 1), (15.0, 8, 3), (20, 256, 8),
                                        (12.8656, 2, 1), (18.8863, 256, 8)])
def test_table_rows(snr, m, rate):
    assert select_modulation(snr) == (m, rate)


def test_table_validation():
    with pytest.raises(ParameterError):
        ModulationTable(((3.0, 2), (2.0, 4)))
    with pytest.raises(ParameterError):
        ModulationTable(((1.0, 4), (2.0, 2)))
    assert DEFAULT_TABLE.row_for(16).lower_db == 15.8760
    with pytest.raises(ParameterError):
        DEFAULT_TABLE.row_for(3)


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 60), st.floats(0, 10))
def test_rate_monotone_in_snr(a, step):
    assert select_modulation(a)[1] <= select_modulation(a + step)[1]


def test_ber_examples():
    model = BerModel()
    assert ber(0.0, 4, model) == pytest.approx(0.2)
    assert ber(1e6, 4, model) == pytest.approx(0.0, abs=1e-300)
    p = power_for_ber(1e-6, 4, model)
    assert p == pytest.approx(3 * math.log(0.2 / 1e-6) / 1.5)
    assert ber(p, 4, model) == pytest.approx(1e-6, rel=1e-9)
    with pytest.raises(ParameterError):
        ber(1.0, 1, model)


def test_calibrated_models_hit_target_at_bounds():
    for row in DEFAULT_TABLE.rows[1:]:
        model = calibrated_models()[row.m]
        assert ber(10 ** (row.lower_db / 10), row.m, model) == pytest.approx(1e-6, rel=1e-9)


def test_slots_for_batch():
    assert slots_for_batch(1, 8, 8) == 1
    assert slots_for_batch(1, 9, 8) == 2
    assert slots_for_batch(10 ** 6, 1, 3) == 333334
    with pytest.raises(ParameterError):
        slots_for_batch(1, 1, 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10 ** 7), st.floats(0.01, 10.0))
def test_slots_are_minimal(bits, rate):
    n = slots_for_batch(bits, 1, rate)
    assert n * rate >= bits and (n == 1 or (n - 1) * rate < bits)


def test_direct_snr():
    assert direct_snr(1.0, 1.0, 1e-3, 2.0, 10.0, 1e-12) == pytest.approx(1e-5 / 1e-12)
    with pytest.raises(ParameterError):
        direct_snr(1.0, 1.0, 1e-3, 2.0, 0.0, 1.0)
