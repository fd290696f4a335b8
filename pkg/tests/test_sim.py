"""
Unit tests for the physical-layer simulation.

Covers the parameter chain, the source, record files, the channel and
receiver, polarization drift and the chunked link simulator.
"""

import math

import numpy as np
import pytest

from qkdlink.exceptions import ParameterError, SchemaError
from qkdlink.security.bounds import multi_photon_prob
from qkdlink.sim.channel import transmit_and_detect
from qkdlink.sim.drift import HISTORY_WINDOW, DriftState, compensate, scan_threshold, step_drift
from qkdlink.sim.link import LinkSimulator, matched_errors, simulate_to_files
from qkdlink.sim.params import SystemParams, loss_to_transmission
from qkdlink.sim.records import ClickTrain, PulseTrain, read_records, write_records
from qkdlink.sim.source import emit_pulses, estimate_g2


def _make_bright_params(**changes) -> SystemParams:
    """Lossless, dark-free link with a strong receiver: many clicks per window."""
    base = dict(channel_loss_db=0.0, eta_receiver=0.9, dark_count_hz=0.0, misalignment_qber=0.0)
    base.update(changes)
    return SystemParams(**base)


def _clicks(params: SystemParams, n_pulses: int = 1 << 16, seed: int = 11) -> ClickTrain:
    pulses = emit_pulses(params, n_pulses, seed)
    return transmit_and_detect(pulses, params, DriftState(), seed)


# =====================================================
# Parameters
# =====================================================

class TestSystemParams:

    def test_source_efficiency_is_derived(self):
        params = SystemParams()
        assert params.eta_source_cband == pytest.approx(0.165 * 0.71 * 0.50)

    def test_inconsistent_derived_value_rejected(self):
        with pytest.raises(ParameterError):
            SystemParams(eta_source_cband=0.2)

    def test_out_of_range_fraction_rejected(self):
        with pytest.raises(ParameterError):
            SystemParams(eta_receiver=1.5)

    def test_loss_to_transmission(self):
        assert loss_to_transmission(10.0) == pytest.approx(0.1)
        assert loss_to_transmission(0.0) == 1.0

    def test_default_click_rate_chain(self):
        """η_S·η_E·η_QC·η_R·ν_S at the default point is about 2.9·10⁴ clicks/s."""
        assert SystemParams().mean_click_rate() == pytest.approx(2.9e4, rel=0.1)

    def test_loss_removal_scales_signal(self):
        params = SystemParams()
        ratio = params.with_loss(0.0).detection_probability() / params.detection_probability()
        assert ratio == pytest.approx(10 ** 0.96)

    def test_replace_rederives_channel(self):
        params = SystemParams().replace(channel_loss_db=3.0)
        assert params.eta_channel == pytest.approx(10 ** -0.3)

    def test_multi_photon_probability_matches_field_value(self):
        p_m = multi_photon_prob(0.0047, 0.058, 0.55)
        assert 2e-6 <= p_m <= 3e-6


# =====================================================
# Source
# =====================================================

class TestSource:

    def test_same_seed_same_train(self):
        params = SystemParams()
        a = emit_pulses(params, 5000, rng_seed=3)
        b = emit_pulses(params, 5000, rng_seed=3)
        assert np.array_equal(a.basis, b.basis)
        assert np.array_equal(a.bit, b.bit)
        assert np.array_equal(a.photon_count, b.photon_count)

    def test_window_matches_longer_train(self):
        """A window starting mid-burst equals the same slice of a longer run."""
        params = SystemParams()
        whole = emit_pulses(params, 3000, rng_seed=5)
        window = emit_pulses(params, 1000, rng_seed=5, start_index=700)
        assert np.array_equal(window.pulse_index, whole.pulse_index[700:1700])
        assert np.array_equal(window.basis, whole.basis[700:1700])
        assert np.array_equal(window.photon_count, whole.photon_count[700:1700])

    def test_basis_ratio_is_balanced(self):
        pulses = emit_pulses(SystemParams(), 100_000, rng_seed=9)
        assert pulses.basis.mean() == pytest.approx(0.5, abs=0.01)

    def test_g2_estimate(self):
        params = SystemParams(eta_qd=1.0, eta_transport=1.0, eta_fc=1.0, eta_encoder=1.0, g2=0.2)
        g2, err = estimate_g2(emit_pulses(params, 200_000, rng_seed=1))
        assert g2 == pytest.approx(0.2, abs=0.01)
        assert err > 0

    def test_g2_of_empty_emission(self):
        params = SystemParams(eta_qd=0.0)
        assert estimate_g2(emit_pulses(params, 1000, rng_seed=1)) == (0.0, 0.0)


# =====================================================
# Records
# =====================================================

class TestRecords:

    def test_pulse_file_preserves_fields(self, tmp_path):
        pulses = emit_pulses(SystemParams(), 500, rng_seed=2)
        path = tmp_path / "pulses.bin"
        assert write_records(path, pulses.to_records()) == 500
        back = PulseTrain.from_records(read_records(path))
        assert np.array_equal(back.basis, pulses.basis)
        assert np.array_equal(back.bit, pulses.bit)
        assert path.stat().st_size == 500 * 18

    def test_partial_record_rejected(self, tmp_path):
        path = tmp_path / "broken.bin"
        path.write_bytes(b"\x00" * 20)
        with pytest.raises(SchemaError):
            read_records(path)

    def test_at_selects_absolute_indices(self):
        pulses = emit_pulses(SystemParams(), 100, rng_seed=2, start_index=1000)
        picked = pulses.at(np.array([1003, 1050]))
        assert picked.pulse_index.tolist() == [1003, 1050]
        assert picked.basis[0] == pulses.basis[3]


# =====================================================
# Channel and receiver
# =====================================================

class TestChannel:

    def test_clicks_sorted_and_unique_per_detector(self):
        clicks = _clicks(_make_bright_params())
        keys = clicks.pulse_index * 4 + clicks.detector_id
        assert np.all(np.diff(keys) > 0)

    def test_misalignment_sets_qber(self):
        params = _make_bright_params(misalignment_qber=0.05)
        pulses = emit_pulses(params, 1 << 18, 4)
        clicks = transmit_and_detect(pulses, params, DriftState(), 4)
        matched, errors = matched_errors(pulses, clicks)
        assert errors / matched == pytest.approx(0.05, abs=0.015)

    def test_noiseless_channel_has_no_errors(self):
        params = _make_bright_params()
        pulses = emit_pulses(params, 1 << 16, 4)
        clicks = transmit_and_detect(pulses, params, DriftState(), 4)
        matched, errors = matched_errors(pulses, clicks)
        assert matched > 0
        assert errors == 0

    def test_longer_dead_time_never_adds_clicks(self):
        counts = [len(_clicks(_make_bright_params(dead_time_s=d))) for d in (0.0, 33e-9, 200e-9)]
        assert counts[0] >= counts[1] >= counts[2]

    def test_narrower_window_never_adds_clicks(self):
        counts = [
            len(_clicks(_make_bright_params(dead_time_s=0.0, jitter_s=0.5e-9,
                                            dark_count_hz=1e5, temporal_window_s=w)))
            for w in (2e-9, 1e-9, 0.3e-9)
        ]
        assert counts[0] >= counts[1] >= counts[2]

    def test_dark_counts_marked(self):
        params = _make_bright_params(eta_receiver=0.0, dark_count_hz=1e5)
        clicks = _clicks(params, n_pulses=1 << 18)
        assert len(clicks) > 0
        assert clicks.is_dark.all()


# =====================================================
# Drift and compensation
# =====================================================

class TestDrift:

    def test_zero_amplitude_adds_no_error(self):
        drift = DriftState(amplitude_rad=0.0, seed=3)
        for _ in range(20):
            drift = step_drift(drift, 0.5)
        assert drift.qber_contribution() == 0.0

    def test_walk_stays_bounded(self):
        drift = DriftState(amplitude_rad=0.3, step_sigma=2.0, seed=3)
        for _ in range(200):
            drift = step_drift(drift, 1.0)
            assert np.all(np.abs(drift.walk) <= 1.0)

    def test_step_is_deterministic(self):
        a = step_drift(DriftState(amplitude_rad=0.2, seed=8), 1.0)
        b = step_drift(DriftState(amplitude_rad=0.2, seed=8), 1.0)
        assert a.walk == b.walk

    def test_drift_error_grows_with_amplitude(self):
        means = []
        for amplitude in (0.02, 0.05, 0.1, 0.2, 0.4):
            drift = DriftState(amplitude_rad=amplitude, step_sigma=1.0, seed=9)
            samples = []
            for _ in range(50):
                drift = step_drift(drift, 1.0)
                samples.append(drift.qber_contribution())
            means.append(float(np.mean(samples)))
        assert all(a < b for a, b in zip(means, means[1:]))

    def test_small_angle_drift_error(self):
        drift = DriftState(amplitude_rad=0.02, step_sigma=1.0, seed=9)
        exact, small_angle = [], []
        for _ in range(50):
            drift = step_drift(drift, 1.0)
            exact.append(drift.qber_contribution())
            small_angle.append(float(np.mean(drift.rotation ** 2)))
        assert np.mean(exact) == pytest.approx(np.mean(small_angle), rel=1e-3)

    def test_threshold_tightens_with_more_clicks(self):
        few, many = scan_threshold(0.0325, 1_000), scan_threshold(0.0325, 100_000)
        assert few > many > 0.0325

    def test_quiet_history_does_not_scan(self):
        drift = DriftState(amplitude_rad=0.2, walk=(0.1, 0.1))
        assert compensate(drift, [(200, 7)] * HISTORY_WINDOW, baseline_qber=0.0325) is drift

    def test_short_history_does_not_scan(self):
        drift = DriftState(amplitude_rad=0.5, walk=(1.0, -1.0))
        assert compensate(drift, [(200, 60)] * (HISTORY_WINDOW - 1), baseline_qber=0.0325) is drift

    def test_scan_lowers_residual_error(self):
        drift = DriftState(amplitude_rad=0.5, walk=(1.0, -1.0))
        before = drift.qber_contribution()
        after = compensate(drift, [(200, 60)] * HISTORY_WINDOW, baseline_qber=0.0325)
        assert after.scanning
        assert after.scan_count == 1
        assert after.qber_contribution() < before / 10

    def test_scan_is_scored_from_counted_errors(self):
        history = [(200, 60)] * HISTORY_WINDOW
        a = compensate(DriftState(amplitude_rad=0.5, walk=(1.0, -1.0), seed=1), history, 0.0325, trial_clicks=500)
        b = compensate(DriftState(amplitude_rad=0.5, walk=(1.0, -1.0), seed=2), history, 0.0325, trial_clicks=500)
        again = compensate(DriftState(amplitude_rad=0.5, walk=(1.0, -1.0), seed=1), history, 0.0325, trial_clicks=500)
        assert a.compensator == again.compensator
        assert a.compensator != b.compensator
        assert a.qber_contribution() > 0.0

    def test_scan_mark_clears_after_one_window(self):
        drift = DriftState(amplitude_rad=0.5, walk=(1.0, -1.0), scanning=True, scan_count=1)
        after = compensate(drift, [(200, 60)] * HISTORY_WINDOW, baseline_qber=0.0325)
        assert not after.scanning
        assert after.scan_count == 1
        assert after.compensator == drift.compensator

    def test_scanning_clicks_are_penalized(self):
        drift = DriftState(scanning=True)
        assert drift.error_probability(0.01) == pytest.approx(0.06)


# =====================================================
# Link simulator
# =====================================================

class TestLinkSimulator:

    def test_chunks_are_contiguous(self):
        sim = LinkSimulator(_make_bright_params(), seed=2, chunk_pulses=4096)
        first, second = list(sim.run(2))
        assert first.pulses.start_index == 0
        assert second.pulses.start_index == 4096
        assert sim.chunk_duration_s == pytest.approx(4096 / 72.6e6)

    def test_same_seed_same_clicks(self):
        a = LinkSimulator(_make_bright_params(), seed=6, chunk_pulses=8192).next_chunk()
        b = LinkSimulator(_make_bright_params(), seed=6, chunk_pulses=8192).next_chunk()
        assert np.array_equal(a.clicks.pulse_index, b.clicks.pulse_index)
        assert np.array_equal(a.clicks.detector_id, b.clicks.detector_id)

    def test_default_click_rate(self):
        summary = simulate_to_files(SystemParams(), 1 << 22, seed=1)
        assert summary.click_rate_hz == pytest.approx(2.9e4, rel=0.1)

    def test_zero_loss_scales_click_rate(self):
        base = simulate_to_files(SystemParams(), 1 << 22, seed=1)
        lossless = simulate_to_files(SystemParams(channel_loss_db=0.0), 1 << 22, seed=1)
        assert lossless.click_rate_hz / base.click_rate_hz == pytest.approx(10 ** 0.96, rel=0.1)

    def test_fixed_seed_identical_files(self, tmp_path):
        params = _make_bright_params()
        for name in ("a", "b"):
            simulate_to_files(params, 20_000, seed=4, out_dir=tmp_path / name, chunk_pulses=8192)
        for fname in ("clicks.bin", "pulses.bin"):
            assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()

    def test_record_mode_none_skips_pulse_file(self, tmp_path):
        summary = simulate_to_files(_make_bright_params(), 10_000, seed=4, out_dir=tmp_path, record_mode="none")
        assert not (tmp_path / "pulses.bin").exists()
        assert (tmp_path / "clicks.bin").exists()
        assert len(summary.files) == 1

    def test_unknown_record_mode_rejected(self):
        with pytest.raises(ParameterError):
            simulate_to_files(SystemParams(), 1000, seed=1, record_mode="some")

    def test_summary_counts_pulses_in_whole_chunks(self):
        summary = simulate_to_files(_make_bright_params(), 10_000, seed=4, chunk_pulses=4096)
        assert summary.pulses == 3 * 4096
        assert math.isclose(summary.duration_s, 3 * 4096 / 72.6e6)

    def test_scan_chunk_kept_out_of_history(self):
        drift = DriftState(amplitude_rad=0.5, walk=(1.0, -1.0), scanning=True, scan_count=1)
        sim = LinkSimulator(_make_bright_params(), seed=2, chunk_pulses=8192, drift=drift)
        chunk = sim.next_chunk()
        assert chunk.scanning
        assert sim.history == []
        assert not sim.drift.scanning
        assert not sim.next_chunk().scanning

    def test_zero_drift_never_scans(self):
        sim = LinkSimulator(SystemParams(), seed=3, chunk_pulses=1 << 18)
        chunks = list(sim.run(120))
        assert sim.drift.scan_count == 0
        assert not any(chunk.scanning for chunk in chunks)

    def test_compensation_holds_qber_below_five_percent(self):
        params = SystemParams(channel_loss_db=0.0, eta_receiver=0.9, dark_count_hz=0.0, misalignment_qber=0.02)
        drift = DriftState(amplitude_rad=0.5, step_sigma=1.0, seed=5)
        sim = LinkSimulator(params, seed=5, chunk_pulses=1 << 18, drift=drift)
        matched = errors = 0
        for chunk in sim.run(160):
            if chunk.index < 2 * HISTORY_WINDOW:
                continue
            n_matched, n_err = matched_errors(chunk.pulses, chunk.clicks)
            matched += n_matched
            errors += n_err
        assert sim.drift.scan_count >= 1
        assert errors / matched < 0.05
