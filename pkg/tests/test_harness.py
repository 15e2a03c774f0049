import dataclasses
import logging

import numpy as np
import pytest

from mcdm.channel import default_profile, flat_profile
from mcdm.errors import ConfigError, IncompleteProbeError
from mcdm.harness import (
    CSV_HEADER,
    CSI,
    ExperimentSpec,
    FrameGrid,
    Mode,
    adapt_run,
    loopback,
    paired_difference,
    run_trial,
    sweep,
    trace_csv,
)
from mcdm.oracles import rayleigh_bpsk_ber
from mcdm.receiver import ReceiverOptions
from mcdm.transmitter import Access, Modulation, allocate_subcarriers


def small_spec(**kw):
    base = dict(frame=FrameGrid(K=(128, 256)), snr_grid=(6.0, 12.0), n_packets=20)
    base.update(kw)
    return ExperimentSpec(**base)


def test_spec_validation():
    with pytest.raises(ConfigError):
        small_spec(n_packets=0)
    with pytest.raises(ConfigError):
        small_spec(snr_grid=())
    with pytest.raises(ConfigError):
        small_spec(frame=FrameGrid(K=()))
    with pytest.raises(ConfigError):
        small_spec(master_seed=-1)


def test_grid_product():
    grid = FrameGrid(K=(256, 512), pilot_portions=(1 / 8, 1 / 4), modulations=tuple(Modulation),
                     accesses=tuple(Access), n_users=(1, 3, 4))
    assert len(grid.configs()) == 2 * 2 * 2 * 2 * 3
    assert [c.K for c in grid.candidates()] == [256, 512]
    with pytest.raises(ConfigError):
        FrameGrid(K=(128,), pilot_portions=(0.3,)).configs()


def test_trial_is_deterministic():
    spec = small_spec()
    cfg = spec.configs()[1]
    assert run_trial(spec, cfg, 6.0, 17) == run_trial(spec, cfg, 6.0, 17)
    assert run_trial(spec, cfg, 6.0, 17) != run_trial(spec, cfg, 6.0, 18)


def test_trial_bit_conservation():
    grid = FrameGrid(K=(256,), modulations=(Modulation.QPSK,), n_users=(3,), accesses=(Access.COMB,))
    spec = small_spec(frame=grid)
    cfg = spec.configs()[0]
    report = run_trial(spec, cfg, 6.0, 0)
    alloc = allocate_subcarriers(cfg)
    assert report.bits == 2 * sum(v.size for v in alloc.users.values())
    assert set(report.per_user) == {1, 2, 3}
    assert all(e <= b for e, b in report.per_user.values())


def test_loopback_has_no_errors():
    grid = FrameGrid(K=(128, 1024), modulations=tuple(Modulation), n_users=(1, 4))
    result = loopback(small_spec(frame=grid, n_packets=3))
    assert sum(p.errors for p in result.points) == 0
    assert all(p.bits > 0 for p in result.points)


def test_trial_failures_are_recorded(caplog):
    spec = small_spec(receiver=ReceiverOptions(window=10 ** 6))
    cfg = spec.configs()[0]
    with caplog.at_level(logging.INFO, logger="mcdm.harness"):
        report = run_trial(spec, cfg, 12.0, 0)
    assert report.errors == report.bits > 0
    assert report.failure.startswith("SearchError")
    assert any("event=trial_failure" in r.getMessage() for r in caplog.records)
    assert sweep(dataclasses.replace(spec, n_packets=2)).points[0].ber == 1.0


def test_lost_packets_count_as_errors():
    spec = small_spec(receiver=ReceiverOptions(lost_ratio=1e9), n_packets=4)
    point = sweep(spec).points[0]
    assert point.sync_failures == 4
    assert point.ber == 1.0


def test_csv_layout():
    text = sweep(small_spec(n_packets=5)).to_csv()
    lines = text.split("\n")
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[0] == "config_id,K,Kp,modulation,access,n_users,snr_db,user_id,bits,errors,ber"
    assert text.endswith("\n") and "\r" not in text
    row = lines[1].split(",")
    assert row[:8] == ["K128-Kp32-BPSK-BLOCK-U1", "128", "32", "BPSK", "BLOCK", "1", "6", "1"]
    assert int(row[9]) / int(row[8]) == float(row[10])


def test_aggregation_is_exact():
    result = sweep(small_spec(n_packets=7))
    for p in result.points:
        assert p.errors == int(p.trial_errors.sum())
        assert p.ber == p.errors / p.bits


def test_sweep_independent_of_workers_and_chunks():
    spec = small_spec(n_packets=30)
    ref = sweep(spec).to_csv()
    assert sweep(spec, chunk=7).to_csv() == ref
    assert sweep(spec, jobs=2, chunk=11).to_csv() == ref
    assert sweep(dataclasses.replace(spec, master_seed=1)).to_csv() != ref


def test_perfect_csi_single_tap_rayleigh():
    # about 10^6 bits at mean SNR 10 dB
    spec = ExperimentSpec(frame=FrameGrid(K=(1024,)), channel=flat_profile(), snr_grid=(10.0,),
                          n_packets=1303, csi=CSI.PERFECT)
    point = sweep(spec).points[0]
    assert point.bits >= 1_000_000
    assert point.ber == pytest.approx(0.0233, abs=0.0015)
    assert rayleigh_bpsk_ber(10.0) == pytest.approx(0.0233, abs=1e-4)


def test_paired_difference():
    spec = small_spec(n_packets=40, snr_grid=(12.0,))
    a, b = sweep(spec).points
    mean, se = paired_difference(a, b)
    assert mean == pytest.approx(a.trial_ber.mean() - b.trial_ber.mean())
    assert se > 0


def test_adapt_run_protocol(caplog):
    spec = small_spec(frame=FrameGrid(), snr_grid=(12.0,))
    with caplog.at_level(logging.INFO):
        run = adapt_run(spec)
    probes = [r for r in run.trace if r.phase == "probe"]
    assert [r.config.K for r in probes] == [128] * 4 + [256] * 2 + [512] * 2 + [1024] * 2
    assert [r.packet_index for r in run.trace] == list(range(1, 21))
    assert all(r.config == run.chosen for r in run.trace if r.phase == "post")
    msgs = [r.getMessage() for r in caplog.records]
    assert sum("event=feedback" in m for m in msgs) == 1
    assert sum("event=adapt_decision" in m for m in msgs) == 1
    assert run.decision.per_candidate_ber[run.chosen] == min(run.decision.per_candidate_ber.values())


def test_adapt_single_candidate_and_trace():
    spec = small_spec(frame=FrameGrid(K=(512,)), snr_grid=(12.0,), post_packets=0)
    run = adapt_run(spec)
    assert run.chosen.K == 512 and len(run.trace) == 10
    text = trace_csv([run])
    assert text.startswith("repetition,packet_index,phase,config_id,K,snr_db,bits,errors,ber\n")
    assert text.count("\n") == 11


def test_adapt_needs_packets_for_every_candidate():
    spec = small_spec(frame=FrameGrid(), probe_packets=3)
    with pytest.raises(IncompleteProbeError):
        adapt_run(spec)


def test_comb_not_worse_than_block_after_adaptation():
    diffs = []
    for access in (Access.COMB, Access.BLOCK):
        spec = small_spec(frame=FrameGrid(accesses=(access,), n_users=(4,)), snr_grid=(12.0,))
        diffs.append([adapt_run(spec, r).post_ber() for r in range(20)])
    d = np.array(diffs[0]) - np.array(diffs[1])
    assert d.mean() <= 3 * d.std(ddof=1) / np.sqrt(d.size) + 1e-12
