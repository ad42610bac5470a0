import numpy as np
import pytest
from scipy.io import wavfile

from conftest import tone
from switchdet.audio import AudioBuffer, read_wav, write_wav
from switchdet.errors import RateMismatch, UnsupportedFormat


def test_round_trip_error_within_one_quantization_step(tmp_path):
    buf = tone(440.0, 0.5, amp=0.9)
    path = tmp_path / "t.wav"
    write_wav(path, buf)
    back = read_wav(path)
    assert back.rate == buf.rate
    assert back.samples.size == buf.samples.size
    assert np.max(np.abs(back.samples - buf.samples)) <= 2.0 ** -15


def test_wav_file_size_is_header_plus_pcm(tmp_path):
    buf = tone(100.0, 0.25)
    path = tmp_path / "t.wav"
    write_wav(path, buf)
    assert path.stat().st_size == 44 + 2 * buf.samples.size


def test_full_scale_survives_round_trip(tmp_path):
    buf = AudioBuffer(np.array([1.0, -1.0, 0.0]), 16000)
    path = tmp_path / "fs.wav"
    write_wav(path, buf)
    back = read_wav(path)
    assert np.max(np.abs(back.samples)) <= 1.0
    assert np.max(np.abs(back.samples - buf.samples)) <= 2.0 ** -15


def test_rate_mismatch(tmp_path):
    path = tmp_path / "t.wav"
    write_wav(path, tone(440.0, 0.1, rate=8000))
    with pytest.raises(RateMismatch):
        read_wav(path, expected_rate=16000)
    assert read_wav(path, expected_rate=8000).rate == 8000


def test_stereo_rejected(tmp_path):
    path = tmp_path / "st.wav"
    stereo = (np.random.default_rng(0).normal(size=(100, 2)) * 1000).astype(np.int16)
    wavfile.write(str(path), 16000, stereo)
    with pytest.raises(UnsupportedFormat):
        read_wav(path)


def test_float32_wav_accepted(tmp_path):
    path = tmp_path / "f32.wav"
    data = np.linspace(-0.5, 0.5, 50, dtype=np.float32)
    wavfile.write(str(path), 16000, data)
    buf = read_wav(path)
    assert np.allclose(buf.samples, data, atol=1e-7)


def test_buffer_validation():
    with pytest.raises(UnsupportedFormat):
        AudioBuffer(np.empty(0), 16000)
    with pytest.raises(UnsupportedFormat):
        AudioBuffer(np.array([[0.1, 0.2]]), 16000)
    with pytest.raises(UnsupportedFormat):
        AudioBuffer(np.array([0.1, np.nan]), 16000)
    with pytest.raises(UnsupportedFormat):
        AudioBuffer(np.array([0.1, 0.2]), 0)


def test_duration_and_slice():
    buf = AudioBuffer(np.zeros(8000), 16000, id="x")
    assert buf.duration_sec == pytest.approx(0.5)
    cut = buf.slice_samples(1000, 3000)
    assert cut.samples.size == 2000
    assert cut.rate == 16000
