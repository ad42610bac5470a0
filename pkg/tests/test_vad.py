"""Energy threshold voice activity decisions and voiced-frame selection."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import tone
from switchdet.audio import AudioBuffer
from switchdet.errors import AllUnvoiced, LengthMismatch
from switchdet.features import extract_features
from switchdet.vad import (endpoint_trim, energy_vad, frame_energies,
                           load_vad, save_vad, select_voiced,
                           select_voiced_from_mask)


def silence_tone_silence(sil: float = 0.3, dur: float = 0.5) -> AudioBuffer:
    t = tone(440.0, dur)
    pad = np.zeros(int(sil * 16000))
    return AudioBuffer(np.concatenate([pad, t.samples, pad]), 16000)


class TestEnergyVad:
    def test_hand_case(self):
        # two frames: energies 0.0 and mean|x|^2 = 0.5; global mean 0.25;
        # threshold 0.06 * 0.25; only the loud frame passes
        samples = np.concatenate([np.zeros(320),
                                  np.full(320, np.sqrt(0.5))])
        buf = AudioBuffer(samples, 16000)
        vad = energy_vad(buf)
        energies = frame_energies(buf)
        assert energies[0] == pytest.approx(0.0)
        assert vad.threshold_used == pytest.approx(0.06 * energies.mean())
        assert not vad.voiced_mask[0]
        assert vad.voiced_mask[energies.argmax()]

    def test_silence_edges_unvoiced(self):
        vad = energy_vad(silence_tone_silence())
        assert not vad.voiced_mask[0]
        assert not vad.voiced_mask[-1]
        assert vad.voiced_mask.any()

    def test_all_silent_raises(self):
        with pytest.raises(AllUnvoiced):
            energy_vad(AudioBuffer(np.zeros(16000), 16000))

    @given(st.floats(0.01, 100.0))
    @settings(max_examples=25, deadline=None)
    def test_decision_invariant_to_global_gain(self, gain):
        buf = silence_tone_silence()
        scaled = AudioBuffer(buf.samples * gain, buf.rate)
        assert np.array_equal(energy_vad(buf).voiced_mask,
                              energy_vad(scaled).voiced_mask)

    def test_strictly_greater_comparison(self):
        # constant energy: every frame sits exactly at mean * ratio only
        # if ratio is 1; with ratio 1.0 nothing is strictly above the mean
        buf = AudioBuffer(np.full(3200, 0.5), 16000)
        with pytest.raises(AllUnvoiced):
            energy_vad(buf, ratio=1.0)


class TestSelectVoiced:
    def test_rows_and_times_filtered_together(self):
        buf = silence_tone_silence()
        fm = extract_features(buf, "mfcc13")
        vad = energy_vad(buf)
        sel = select_voiced(fm, vad)
        assert sel.n_frames == int(vad.voiced_mask.sum())
        assert np.array_equal(sel.voiced_index_map, np.flatnonzero(vad.voiced_mask))
        assert np.array_equal(
            sel.frame_start_times,
            fm.frame_start_times[vad.voiced_mask])
        assert sel.voiced_mask.all()

    def test_length_mismatch(self):
        buf = silence_tone_silence()
        fm = extract_features(buf, "mfcc13")
        short = energy_vad(AudioBuffer(buf.samples[:8000], 16000))
        with pytest.raises(LengthMismatch):
            select_voiced(fm, short)

    def test_select_from_stored_mask(self):
        buf = silence_tone_silence()
        fm = extract_features(buf, "mfcc13")
        vad = energy_vad(buf)
        fm.voiced_mask = vad.voiced_mask
        a = select_voiced_from_mask(fm)
        b = select_voiced(extract_features(buf, "mfcc13"), vad)
        assert np.array_equal(a.rows, b.rows)
        assert np.array_equal(a.voiced_index_map, b.voiced_index_map)


class TestEndpointTrim:
    def test_trims_leading_and_trailing_silence(self):
        buf = silence_tone_silence(sil=0.4, dur=0.5)
        trimmed = endpoint_trim(buf)
        assert trimmed.duration_sec < buf.duration_sec
        assert trimmed.duration_sec >= 0.5 - 0.04
        # trimmed signal keeps the loud part
        assert np.max(np.abs(trimmed.samples)) == np.max(np.abs(buf.samples))

    def test_no_silence_no_trim_beyond_frame_grid(self):
        buf = tone(440.0, 0.5)
        trimmed = endpoint_trim(buf)
        assert trimmed.duration_sec >= buf.duration_sec - 0.04

    def test_all_silent_returns_original(self):
        buf = AudioBuffer(np.zeros(16000), 16000)
        trimmed = endpoint_trim(buf)
        assert trimmed.samples.size == buf.samples.size


class TestVadFile:
    def test_round_trip(self, tmp_path):
        vad = energy_vad(silence_tone_silence())
        path = tmp_path / "x.vad"
        save_vad(path, vad)
        back = load_vad(path)
        assert np.array_equal(back.voiced_mask, vad.voiced_mask)
        assert np.allclose(back.frame_energies, vad.frame_energies)
