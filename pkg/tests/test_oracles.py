import math

import numpy as np
import pytest

from mcdm.oracles import (
    OracleKind,
    awgn_bpsk_ber,
    binomial_sigma,
    curve_gap_db,
    oracle_curve,
    qfunc,
    rayleigh_bpsk_ber,
    snr_at_ber,
)


def test_q_function_values():
    assert qfunc(0.0) == 0.5
    # Q(x) = erfc(x / sqrt 2) / 2, checked against the stdlib erfc
    for x in (0.5, 1.0, 3.0, 4.27):
        assert qfunc(x) == pytest.approx(0.5 * math.erfc(x / math.sqrt(2)), rel=1e-12)


def test_awgn_reference_points():
    assert awgn_bpsk_ber(0.0) == 0.5
    assert awgn_bpsk_ber(9.12) == pytest.approx(9.8e-6, rel=0.05)


def test_rayleigh_reference_point():
    assert rayleigh_bpsk_ber(10.0) == pytest.approx(0.02327, abs=5e-6)
    assert rayleigh_bpsk_ber(0.0) == 0.5


@pytest.mark.parametrize("kind", list(OracleKind))
def test_curves_are_monotone_and_bounded(kind):
    curve = oracle_curve(kind, np.arange(-5, 25, 0.5))
    ber = np.array([b for _, b in curve.points])
    assert np.all((ber > 0) & (ber <= 0.5))
    assert np.all(np.diff(ber) <= 0)


def test_qpsk_matches_bpsk_per_bit():
    snr = [0, 4, 8]
    assert oracle_curve("awgn_qpsk", snr).points == oracle_curve("AWGN_BPSK", snr).points


def test_binomial_sigma():
    assert binomial_sigma(0.5, 100) == pytest.approx(0.05)


def test_curve_shift():
    snr = np.arange(0, 20, 2.0)
    ref = rayleigh_bpsk_ber(10 ** (snr / 10))
    shifted = rayleigh_bpsk_ber(10 ** ((snr - 3) / 10))
    assert curve_gap_db(snr, ref, shifted, 1e-2) == pytest.approx(3.0, abs=0.1)
    assert math.isnan(snr_at_ber(snr, ref, 1e-9))
