import numpy as np
import pytest
from scipy import stats

from mcdm.channel import (
    ChannelProfile,
    ChannelRealization,
    add_awgn,
    apply_channel,
    chirp_domain_matrix,
    chirp_domain_response,
    default_profile,
    draw_channel,
    flat_profile,
    frequency_response,
    insert_offset,
    mean_channel,
    noise_variance,
)
from mcdm.chirp import BasebandSignal, ChirpParams, idoct_fast
from mcdm.errors import ConfigError
from mcdm.receiver import demodulate
from mcdm.transmitter import GUARD_DURATION, FrameConfig, PacketLayout

FS = 65280.0


def signal(rng, n=300):
    return BasebandSignal(rng.standard_normal(n) + 1j * rng.standard_normal(n), FS)


def test_default_profile():
    p = default_profile()
    assert p.n_paths == 4
    assert sum(p.mean_powers) == pytest.approx(1.0, abs=1e-12)
    assert p.max_delay < GUARD_DURATION
    np.testing.assert_array_equal(mean_channel(p, FS).delay_samples, [0, 33, 65, 118])


@pytest.mark.parametrize("delays,powers", [
    ((0.001, 0.002), (1, 1)),
    ((0.0, 0.002, 0.001), (1, 1, 1)),
    ((0.0, 0.001), (1, 0)),
    ((0.0,), (1, 2)),
    ((), ()),
])
def test_profile_validation(delays, powers):
    with pytest.raises(ConfigError):
        ChannelProfile(delays, powers)


def test_guard_check():
    p = ChannelProfile((0.0, 3e-3), (1, 1))
    with pytest.raises(ConfigError):
        p.check_guard(GUARD_DURATION)
    default_profile().check_guard(GUARD_DURATION)


def test_single_path_second_moment():
    rng = np.random.default_rng(1)
    g = np.array([draw_channel(flat_profile(), FS, rng).gains[0] for _ in range(100_000)])
    assert np.mean(np.abs(g) ** 2) == pytest.approx(1.0, rel=0.02)


def test_amplitude_is_rayleigh():
    rng = np.random.default_rng(2)
    prof = default_profile()
    g = np.array([draw_channel(prof, FS, rng).gains for _ in range(10_000)])
    for m, p in enumerate(prof.mean_powers):
        scale = np.sqrt(p / 2)
        assert stats.kstest(np.abs(g[:, m]), stats.rayleigh(scale=scale).cdf).pvalue > 0.01


def test_draw_is_deterministic():
    a = draw_channel(default_profile(), FS, np.random.default_rng(9))
    b = draw_channel(default_profile(), FS, np.random.default_rng(9))
    np.testing.assert_array_equal(a.gains, b.gains)
    np.testing.assert_array_equal(a.delay_samples, b.delay_samples)


def test_carrier_phase_uses_exact_delay():
    prof = ChannelProfile((0.0, 0.5e-3), (1, 1), f_c=12_345.0)
    ch = mean_channel(prof, FS)
    expected = np.exp(-2j * np.pi * 12_345.0 * 0.5e-3) * np.sqrt(0.5)
    assert ch.gains[1] == pytest.approx(expected)
    assert ch.delay_samples[1] == 33


def test_identity_channel(rng):
    x = signal(rng)
    np.testing.assert_array_equal(apply_channel(x, ChannelRealization.identity()).samples, x.samples)


def test_single_shifted_tap(rng):
    x = signal(rng)
    y = apply_channel(x, ChannelRealization([5], [1j])).samples
    assert y.size == x.samples.size + 5
    np.testing.assert_array_equal(y[:5], 0)
    np.testing.assert_allclose(y[5:], 1j * x.samples)


def test_taps_match_convolution(rng):
    x = signal(rng)
    ch = ChannelRealization([0, 7], [0.8 - 0.1j, 0.3j])
    np.testing.assert_allclose(apply_channel(x, ch).samples, np.convolve(x.samples, ch.impulse_response()), atol=1e-12)


def test_channel_is_linear_and_repeatable(rng):
    ch = draw_channel(default_profile(), FS, rng)
    x1, x2 = signal(rng), signal(rng)
    a, b = 0.3 - 2j, 1.7
    lhs = apply_channel(BasebandSignal(a * x1.samples + b * x2.samples, FS), ch).samples
    rhs = a * apply_channel(x1, ch).samples + b * apply_channel(x2, ch).samples
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
    np.testing.assert_array_equal(apply_channel(x1, ch).samples, apply_channel(x1, ch).samples)


def test_noise_statistics():
    rng = np.random.default_rng(3)
    x = BasebandSignal(np.zeros(1_000_000), FS)
    y = add_awgn(x, 7.0, 2.0, rng).samples
    assert np.mean(np.abs(y) ** 2) == pytest.approx(2.0 / 10 ** 0.7, rel=0.01)
    assert abs(np.corrcoef(y.real, y.imag)[0, 1]) < 0.01


def test_infinite_snr_is_noiseless(rng):
    x = signal(rng)
    assert add_awgn(x, float("inf"), 1.0, rng) is x
    assert noise_variance(float("inf"), 1.0) == 0.0
    with pytest.raises(ValueError):
        noise_variance(10.0, 0.0)


def test_insert_offset(rng):
    x = signal(rng, 10)
    assert insert_offset(x, 0, rng) is x
    y = insert_offset(x, 100, rng).samples
    np.testing.assert_array_equal(y[:100], 0)
    np.testing.assert_array_equal(y[100:], x.samples)
    noisy = insert_offset(x, 50, rng, noise_var=1.0).samples
    assert np.all(noisy[:50] != 0)
    with pytest.raises(ValueError):
        insert_offset(x, -1, rng)


def through_receiver(params, ch, X, fold, offset=0):
    """Noiseless chirp-domain output for coefficient vector X."""
    cfg = FrameConfig(chirp=params, pilot_count=params.K // 4, preamble_len=4, t_pause=0.0, t_zp=200 / params.fs)
    layout = PacketLayout.for_config(cfg)
    x = np.zeros(layout.total, dtype=complex)
    x[layout.symbol.start:layout.symbol.stop] = idoct_fast(X, params).samples
    rx = apply_channel(BasebandSignal(x, params.fs), ch)
    return demodulate(rx, layout, offset, params, fold=fold)


def test_unchirped_channel_is_diagonal(rng):
    # with mu = 0 and the whole delay spread folded back, H is exactly the tap DFT
    params = ChirpParams(K=256, fs=FS, mu=0.0)
    ch = draw_channel(default_profile(), FS, rng)
    X = np.exp(2j * np.pi * rng.random(256))
    y = through_receiver(params, ch, X, fold=ch.max_delay)
    np.testing.assert_allclose(y / X, frequency_response(ch, 256), atol=1e-6)
    np.testing.assert_allclose(chirp_domain_response(ch, params), frequency_response(ch, 256), atol=1e-12)


@pytest.mark.parametrize("mu,fold,offset", [(3.58e4, 118, 0), (3.58e4, 0, 0), (1.79e4, 0, 33), (0.0, 0, 0)])
def test_effective_diagonal_matches_dense_operator(mu, fold, offset):
    params = ChirpParams(K=64, fs=FS / 4, mu=mu)
    ch = ChannelRealization([0, 3, 9, 20], [0.7, 0.4j, -0.3, 0.2 - 0.1j])
    H = np.column_stack([through_receiver(params, ch, e, fold, offset) for e in np.eye(64)])
    np.testing.assert_allclose(np.diag(H), chirp_domain_response(ch, params, fold=fold, offset=offset), atol=1e-12)
    np.testing.assert_allclose(H, chirp_domain_matrix(ch, params, fold=fold, offset=offset), atol=1e-12)


def test_chirped_delay_leaks_between_subcarriers():
    # a delayed chirp is a frequency-shifted chirp, so H is not diagonal when mu != 0
    params = ChirpParams.standard(1024)
    ch = mean_channel(default_profile(), FS)
    H = chirp_domain_matrix(ch, params, fold=118)
    off = H - np.diag(np.diag(H))
    assert np.abs(off).max() > 0.05
    flat = chirp_domain_matrix(ch, params.with_mu(0.0), fold=118)
    assert np.abs(flat - np.diag(np.diag(flat))).max() < 1e-12


def test_non_fading_profile_is_deterministic():
    prof = flat_profile(fading=False)
    a = draw_channel(prof, FS, np.random.default_rng(1))
    b = draw_channel(prof, FS, np.random.default_rng(2))
    np.testing.assert_array_equal(a.gains, b.gains)
    assert abs(a.gains[0]) == pytest.approx(1.0)
