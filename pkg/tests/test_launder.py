"""Laundering assignment, additive noise, external transcoding."""

import sys

import numpy as np
import pytest

from voicedet import AudioClip, ClipLabel
from voicedet.errors import EncoderFailed, EncoderUnavailable, SplitMissing, ZeroPowerSignal
from voicedet.launder import (
    BITRATES_KBPS,
    SNR_RANGE_DB,
    EncoderConfig,
    add_noise,
    assign_laundering,
    clip_noise_seed,
    launder_clip,
    transcode,
)
from voicedet.manifest import DatasetManifest, ManifestEntry

from conftest import SR, make_tone


def entry(cid, kind="real", split="train"):
    arch = None if kind == "real" else "melgan"
    return ManifestEntry(cid, f"/d/{cid}.wav", ClipLabel(kind, arch), cid, split)


def measured_snr_db(clean: np.ndarray, noisy: np.ndarray) -> float:
    noise = noisy - clean
    return 10.0 * np.log10(np.mean(clean**2) / np.mean(noise**2))


_SHIFT_STUB = """\
import shutil, sys, wave

mode, src, dst = sys.argv[1], sys.argv[2], sys.argv[3]
if mode == "enc":
    shutil.copyfile(src, dst)
else:
    with wave.open(src, "rb") as r:
        params = r.getparams()
        frames = r.readframes(r.getnframes())
    with wave.open(dst, "wb") as w:
        w.setparams(params)
        w.writeframes(b"\\x00\\x00" * {pad} + frames)
"""


def shifting_encoder(tmp_path, pad: int) -> EncoderConfig:
    script = tmp_path / "shift_codec.py"
    script.write_text(_SHIFT_STUB.format(pad=pad), encoding="utf-8")
    py = sys.executable
    return EncoderConfig(
        encode_template=f"{py} {script} enc {{in}} {{out}} {{bitrate}}",
        decode_template=f"{py} {script} dec {{in}} {{out}}",
    )


class TestAssignLaundering:
    def stratified_manifest(self, n_per_stratum, seed=0):
        entries = []
        for kind in ("real", "synthetic"):
            for i in range(n_per_stratum):
                entries.append(entry(f"{kind}/{i:03d}", kind=kind))
        return DatasetManifest(tuple(entries), seed=seed)

    def class_sizes(self, manifest, kind):
        counts = {"none": 0, "noise": 0, "transcode": 0, "both": 0}
        for e in manifest.entries:
            if e.label.kind == kind:
                counts[e.laundering.kind] += 1
        return counts

    def test_stratum_of_eight_two_per_class(self):
        out = assign_laundering(self.stratified_manifest(8))
        for kind in ("real", "synthetic"):
            assert self.class_sizes(out, kind) == {
                "none": 2, "noise": 2, "transcode": 2, "both": 2,
            }

    def test_stratum_of_six_remainder_rule(self):
        out = assign_laundering(self.stratified_manifest(6))
        for kind in ("real", "synthetic"):
            assert self.class_sizes(out, kind) == {
                "none": 2, "noise": 2, "transcode": 1, "both": 1,
            }

    def test_drawn_parameters_in_range(self):
        out = assign_laundering(self.stratified_manifest(40, seed=9))
        lo, hi = SNR_RANGE_DB
        seen_rates = set()
        for e in out.entries:
            spec = e.laundering
            if spec.snr_db is not None:
                assert lo <= spec.snr_db <= hi
            if spec.bitrate_kbps is not None:
                assert spec.bitrate_kbps in BITRATES_KBPS
                seen_rates.add(spec.bitrate_kbps)
        assert seen_rates == set(BITRATES_KBPS)

    def test_same_seed_identical_plan(self):
        a = assign_laundering(self.stratified_manifest(12, seed=5))
        b = assign_laundering(self.stratified_manifest(12, seed=5))
        assert a == b

    def test_only_laundering_field_changes(self):
        m = self.stratified_manifest(8)
        out = assign_laundering(m)
        for before, after in zip(m.entries, out.entries):
            assert after.clip_id == before.clip_id
            assert after.label == before.label
            assert after.utterance_id == before.utterance_id
            assert after.split == before.split
            assert after.laundering is not None

    def test_requires_splits(self):
        bare = DatasetManifest((entry("x", split=None),), seed=0)
        with pytest.raises(SplitMissing):
            assign_laundering(bare)


class TestAddNoise:
    def test_high_snr_barely_perturbs(self):
        clip = AudioClip("t", make_tone(440.0, SR), SR)
        noisy = add_noise(clip, 80.0, seed=1)
        corr = np.corrcoef(clip.samples, noisy.samples)[0, 1]
        assert corr > 0.99999

    def test_measured_snr_within_tolerance(self):
        clip = AudioClip("s", make_tone(300.0, 16000, amp=0.1), SR)
        for target in (10.0, 40.0, 80.0):
            noisy = add_noise(clip, target, seed=2)
            got = measured_snr_db(clip.samples, noisy.samples)
            assert abs(got - target) < 0.2, (target, got)

    def test_deterministic_per_seed(self):
        clip = AudioClip("t", make_tone(250.0, 4000, amp=0.2), SR)
        a = add_noise(clip, 30.0, seed=7)
        b = add_noise(clip, 30.0, seed=7)
        c = add_noise(clip, 30.0, seed=8)
        assert np.array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, c.samples)

    def test_output_stays_in_range(self):
        clip = AudioClip("loud", make_tone(500.0, 4000, amp=0.99), SR)
        noisy = add_noise(clip, 0.0, seed=3)
        assert np.max(np.abs(noisy.samples)) <= 1.0

    def test_zero_clip_rejected(self):
        with pytest.raises(ZeroPowerSignal):
            add_noise(AudioClip("z", np.zeros(100), SR), 20.0, seed=0)

    def test_per_clip_seed_stable_and_distinct(self):
        assert clip_noise_seed(1, "a") == clip_noise_seed(1, "a")
        assert clip_noise_seed(1, "a") != clip_noise_seed(1, "b")
        assert clip_noise_seed(1, "a") != clip_noise_seed(2, "a")


class TestTranscode:
    def test_no_encoder_configured(self, tone_clip):
        with pytest.raises(EncoderUnavailable):
            transcode(tone_clip, 127, None)

    def test_missing_binary_names_command(self, tone_clip):
        cfg = EncoderConfig(
            encode_template="voicedet-no-such-codec {in} {out} {bitrate}",
            decode_template="voicedet-no-such-codec {in} {out}",
        )
        with pytest.raises(EncoderUnavailable, match="voicedet-no-such-codec"):
            transcode(tone_clip, 64, cfg)

    def test_nonzero_exit_fails_with_stderr(self, tone_clip, tmp_path):
        script = tmp_path / "broken.py"
        script.write_text("import sys; sys.stderr.write('boom'); sys.exit(3)\n")
        cfg = EncoderConfig(
            encode_template=f"{sys.executable} {script} {{in}} {{out}} {{bitrate}}",
            decode_template=f"{sys.executable} {script} {{in}} {{out}}",
        )
        with pytest.raises(EncoderFailed, match="boom"):
            transcode(tone_clip, 64, cfg)

    def test_passthrough_roundtrip(self, stub_encoder):
        clip = AudioClip("t", make_tone(1000.0, 16000, amp=0.8), SR)
        out = transcode(clip, 196, stub_encoder)
        assert len(out) == len(clip)
        # Spectral peak stays at 1 kHz.
        spec = np.abs(np.fft.rfft(out.samples))
        peak_hz = np.argmax(spec[1:]) + 1
        freqs = np.fft.rfftfreq(len(out), 1.0 / SR)
        assert abs(freqs[peak_hz] - 1000.0) <= freqs[1]
        # Scale-aligned round-trip error stays small (quantization only).
        gain = np.dot(out.samples, clip.samples) / np.dot(clip.samples, clip.samples)
        assert measured_snr_db(clip.samples, out.samples / gain) > 20.0

    def test_padded_decode_realigned(self, tmp_path):
        clip = AudioClip("t", make_tone(640.0, 16000, amp=0.7), SR)
        out = transcode(clip, 64, shifting_encoder(tmp_path, pad=100))
        assert len(out) == len(clip)
        corr = np.corrcoef(clip.samples, out.samples)[0, 1]
        assert corr > 0.999

    def test_excessive_drift_rejected(self, tmp_path):
        clip = AudioClip("t", make_tone(320.0, 16000, amp=0.5), SR)
        with pytest.raises(EncoderFailed, match="drift"):
            transcode(clip, 64, shifting_encoder(tmp_path, pad=2000))


class TestLaunderClip:
    def spec(self, kind, **kw):
        from voicedet.manifest import LaunderingSpec

        return LaunderingSpec(kind, **kw)

    def test_none_is_identity(self, tone_clip):
        out = launder_clip(tone_clip, self.spec("none"), seed=0)
        assert out is tone_clip

    def test_noise_delegates_exactly(self, tone_clip):
        out = launder_clip(tone_clip, self.spec("noise", snr_db=40.0), seed=11)
        ref = add_noise(tone_clip, 40.0, seed=11)
        assert np.array_equal(out.samples, ref.samples)

    def test_both_composes_transcode_then_noise(self, stub_encoder):
        clip = AudioClip("t", make_tone(750.0, 8000, amp=0.6), SR)
        out = launder_clip(
            clip, self.spec("both", snr_db=30.0, bitrate_kbps=64), seed=4,
            encoder=stub_encoder,
        )
        ref = add_noise(transcode(clip, 64, stub_encoder), 30.0, seed=4)
        assert np.array_equal(out.samples, ref.samples)

    def test_transcode_spec_needs_encoder(self, tone_clip):
        with pytest.raises(EncoderUnavailable):
            launder_clip(tone_clip, self.spec("transcode", bitrate_kbps=64), seed=0)
