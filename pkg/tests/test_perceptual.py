"""Pause detection, envelope smoothing and the Welch test."""

import numpy as np
import pytest
from scipy import integrate, signal, special

from voicedet import AudioClip, amplitude_features, detect_pauses, pause_statistics, smooth_envelope, welch_t_test
from voicedet.errors import (
    ClipTooShort,
    DegenerateSilence,
    EmptyEnvelope,
    InsufficientData,
    InvalidCutoff,
    SegmentOutOfRange,
    ZeroVariance,
)
from voicedet.perceptual import (
    PAUSE_THRESHOLD_FRACTION,
    PAUSE_WINDOW_SAMPLES,
    PerceptualExtractor,
    perceptual_features,
)

from conftest import SR, make_tone


def brute_force_pauses(samples: np.ndarray) -> list[tuple[int, int]]:
    """Reference detector: windowed means computed directly, run/merge
    logic written as a plain scan."""
    a = np.abs(samples)
    peak = a.max()
    n = len(a)
    if peak == 0.0:
        return [(0, n)]
    w = PAUSE_WINDOW_SAMPLES
    means = np.lib.stride_tricks.sliding_window_view(a, w).mean(axis=1)
    marked = means < PAUSE_THRESHOLD_FRACTION * peak
    segments: list[tuple[int, int]] = []
    current_start = None
    prev = -2
    for i in np.flatnonzero(marked):
        i = int(i)
        if current_start is None:
            current_start = i
        elif i > prev + 1 and i > prev + w:
            segments.append((current_start, prev + w))
            current_start = i
        elif i > prev + 1 and i <= prev + w:
            pass  # runs separated by < w still overlap once extended
        prev = i
    if current_start is not None:
        segments.append((current_start, prev + w))
    # merge any overlap the scan above left behind
    merged: list[tuple[int, int]] = []
    for s, e in segments:
        if merged and s <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], e))
        else:
            merged.append((s, e))
    return merged


def random_pause_clip(rng: np.random.Generator) -> np.ndarray:
    """Clip with random bursts, silences and amplitude structure."""
    n = int(rng.integers(PAUSE_WINDOW_SAMPLES, 5001))
    kind = rng.integers(0, 5)
    if kind == 0:
        return np.zeros(n)
    if kind == 1:
        return rng.normal(0.0, 0.3, n)
    x = rng.normal(0.0, 0.3, n)
    n_gaps = int(rng.integers(1, 5))
    for _ in range(n_gaps):
        glen = int(rng.integers(1, max(2, n // 2)))
        gstart = int(rng.integers(0, n - glen + 1))
        if rng.integers(0, 2):
            x[gstart : gstart + glen] = 0.0
        else:
            x[gstart : gstart + glen] *= 1e-4  # quiet, not silent
    return x


class TestDetectPauses:
    def test_matches_brute_force_on_random_clips(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            x = random_pause_clip(rng)
            got = [(s.start, s.end) for s in detect_pauses(AudioClip("p", x, SR))]
            assert got == brute_force_pauses(x)

    def test_all_zero_is_one_full_pause(self):
        segs = detect_pauses(AudioClip("z", np.zeros(500), SR))
        assert [(s.start, s.end) for s in segs] == [(0, 500)]

    def test_loud_clip_has_no_pauses(self):
        x = make_tone(200.0, 2000, amp=0.8)
        assert detect_pauses(AudioClip("l", x, SR)) == []

    def test_single_gap_found(self):
        x = np.concatenate([0.5 * np.ones(1000), np.zeros(600), 0.5 * np.ones(1000)])
        segs = detect_pauses(AudioClip("g", x, SR))
        assert len(segs) == 1
        (seg,) = segs
        # Marked window starts cover the whole zero run; extension adds
        # the window length at the tail.
        assert seg.start == 1000
        assert seg.end == 1600 + PAUSE_WINDOW_SAMPLES - 100  # = gap end + overlap
        assert seg.length == 600

    def test_threshold_is_relative_to_peak(self):
        # Same shape at two gains must give identical segments.
        x = np.concatenate([0.8 * np.ones(500), 0.001 * np.ones(500), 0.8 * np.ones(500)])
        a = [(s.start, s.end) for s in detect_pauses(AudioClip("a", x, SR))]
        b = [(s.start, s.end) for s in detect_pauses(AudioClip("b", x * 0.05, SR))]
        assert a == b and a  # non-empty: 0.001/0.8 is under 0.5%

    def test_too_short_rejected(self):
        with pytest.raises(ClipTooShort):
            detect_pauses(AudioClip("s", np.ones(PAUSE_WINDOW_SAMPLES - 1), SR))


class TestPauseStatistics:
    def test_basic_stats(self):
        from voicedet.perceptual import PauseSegment

        segs = [PauseSegment(0, 100), PauseSegment(200, 500)]
        ratio, mean, std, count = pause_statistics(segs, 1000)
        assert ratio == pytest.approx(0.4)
        assert mean == pytest.approx(200.0)
        assert std == pytest.approx(100.0)  # population std of {100, 300}
        assert count == 2

    def test_empty_is_all_zero(self):
        assert pause_statistics([], 1000) == (0.0, 0.0, 0.0, 0)

    def test_out_of_range_rejected(self):
        from voicedet.perceptual import PauseSegment

        with pytest.raises(SegmentOutOfRange):
            pause_statistics([PauseSegment(500, 1200)], 1000)
        with pytest.raises(SegmentOutOfRange):
            pause_statistics([PauseSegment(0, 300), PauseSegment(200, 400)], 1000)


def reference_butterworth_sos(cutoff_hz: float, fs: float) -> np.ndarray:
    """Independent 5th-order Butterworth: analog prototype poles on the
    unit circle, bilinear transform with frequency pre-warping, zeros at
    z = -1, gain fixed for unit DC response."""
    order = 5
    poles_analog = np.exp(1j * np.pi * (2 * np.arange(order) + order + 1) / (2 * order))
    warped = 2 * fs * np.tan(np.pi * cutoff_hz / fs)
    poles_z = (2 * fs + warped * poles_analog) / (2 * fs - warped * poles_analog)
    gain = float(np.real(np.prod(1.0 - poles_z))) / 2**order
    return signal.zpk2sos(np.full(order, -1.0), poles_z, gain)


class TestSmoothEnvelope:
    def test_filter_matches_independent_design(self):
        # The smoothing filter must be the standard digital Butterworth:
        # compare impulse-response energy against a from-first-principles
        # realization (pole prototype + bilinear transform).
        for cutoff in (10.0, 50.0, 200.0):
            sos = signal.butter(5, cutoff, fs=SR, output="sos")
            sos_ref = reference_butterworth_sos(cutoff, SR)
            impulse = np.zeros(6 * SR)
            impulse[0] = 1.0
            h = signal.sosfilt(sos, impulse)
            h_ref = signal.sosfilt(sos_ref, impulse)
            assert abs(np.sum(h**2) - np.sum(h_ref**2)) < 1e-8

    def test_constant_preserved(self):
        env = smooth_envelope(AudioClip("c", np.full(4000, 0.25), SR))
        assert np.max(np.abs(env - 0.25)) < 1e-6

    def test_rectified_tone_mean(self):
        # A non-harmonic tone's rectified mean is 2/pi; smoothing at
        # 10 Hz keeps only that DC value.
        x = make_tone(397.0, 2 * SR, amp=1.0)
        env = smooth_envelope(AudioClip("t", x, SR))
        interior = env[SR // 2 : 3 * SR // 2]
        assert np.mean(interior) == pytest.approx(2.0 / np.pi, abs=0.01)

    def test_envelope_nonnegative(self):
        rng = np.random.default_rng(11)
        env = smooth_envelope(AudioClip("n", rng.normal(0, 0.3, 8000), SR))
        assert env.min() >= 0.0

    def test_invalid_cutoff_rejected(self):
        clip = AudioClip("c", np.ones(1000), SR)
        for bad in (0.0, -3.0, SR / 2.0, SR):
            with pytest.raises(InvalidCutoff):
                smooth_envelope(clip, bad)

    def test_tracks_amplitude_steps(self):
        x = np.concatenate([0.2 * np.ones(8000), 0.8 * np.ones(8000)])
        env = smooth_envelope(AudioClip("s", x, SR))
        assert abs(env[4000] - 0.2) < 0.01
        assert abs(env[12000] - 0.8) < 0.01


class TestAmplitudeFeatures:
    def test_constant_envelope(self):
        mean, delta = amplitude_features(np.full(100, 0.3))
        assert mean == pytest.approx(0.3)
        assert delta == 0.0

    def test_linear_ramp_delta(self):
        env = np.linspace(0.0, 1.0, 101)
        mean, delta = amplitude_features(env)
        assert mean == pytest.approx(0.5)
        assert delta == pytest.approx(0.01)

    def test_empty_rejected(self):
        with pytest.raises(EmptyEnvelope):
            amplitude_features(np.empty(0))


class TestPerceptualFeatures:
    def test_vector_layout(self):
        x = np.concatenate([0.5 * np.ones(4000), np.zeros(1000), 0.5 * np.ones(4000)])
        feats = perceptual_features(AudioClip("v", x, SR))
        vec = feats.as_vector()
        assert vec.shape == (6,)
        assert vec[3] == feats.pause_count == 1
        assert 0.0 < vec[0] < 1.0

    def test_silent_clip_rejected(self):
        with pytest.raises(DegenerateSilence):
            perceptual_features(AudioClip("z", np.zeros(1000), SR))

    def test_extractor_transform_shape(self):
        clips = [
            AudioClip(f"c{i}", make_tone(200.0 + i, 4000, amp=0.5), SR) for i in range(3)
        ]
        ext = PerceptualExtractor()
        X = ext.fit(clips).transform(clips)
        assert X.shape == (3, 6)
        assert ext.get_params() == {"cutoff_hz": 10.0}


def welch_p_by_quadrature(t_stat: float, df: float) -> float:
    """Two-sided p via numeric integration of the t density."""
    c = special.gamma((df + 1) / 2) / (np.sqrt(df * np.pi) * special.gamma(df / 2))

    def pdf(x):
        return c * (1 + x * x / df) ** (-(df + 1) / 2)

    tail, _ = integrate.quad(pdf, abs(t_stat), np.inf, epsabs=1e-14, epsrel=1e-12)
    return 2.0 * tail


class TestWelch:
    def test_statistic_and_dof_against_quadrature(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = rng.normal(0.0, 1.0, int(rng.integers(5, 40)))
            b = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2.0), int(rng.integers(5, 40)))
            t, p = welch_t_test(a, b)
            # Recompute Welch pieces directly.
            va, vb = a.var(ddof=1) / len(a), b.var(ddof=1) / len(b)
            t_ref = (a.mean() - b.mean()) / np.sqrt(va + vb)
            df = (va + vb) ** 2 / (va**2 / (len(a) - 1) + vb**2 / (len(b) - 1))
            assert t == pytest.approx(t_ref, rel=1e-12)
            assert p == pytest.approx(welch_p_by_quadrature(t_ref, df), rel=1e-9)

    def test_identical_groups_give_p_one(self):
        t, p = welch_t_test([1.0, 1.0, 1.0], [1.0, 1.0])
        assert (t, p) == (0.0, 1.0)

    def test_symmetry(self):
        rng = np.random.default_rng(6)
        a, b = rng.normal(0, 1, 20), rng.normal(1, 1, 25)
        ta, pa = welch_t_test(a, b)
        tb, pb = welch_t_test(b, a)
        assert ta == pytest.approx(-tb)
        assert pa == pytest.approx(pb)

    def test_too_few_observations(self):
        with pytest.raises(InsufficientData):
            welch_t_test([1.0], [1.0, 2.0])

    def test_zero_variance_different_means(self):
        with pytest.raises(ZeroVariance):
            welch_t_test([1.0, 1.0], [2.0, 2.0])
