"""Exporter unit tests plus the shipped round-trip guarantee."""

import logging
import wave

import numpy as np
import pytest

from voicedet_exporter import (
    AudioReadFailure,
    ExportJob,
    ManifestError,
    ModelLoadFailure,
    ProviderOutputError,
    export_embeddings,
    load_provider,
    melstats_v1,
)
from voicedet_exporter.cli import main
from voicedet_exporter.manifest import read_manifest_clips
from voicedet_exporter.wav import read_wav_16k_mono

from helpers_exporter import SR, make_clip, write_manifest, write_wav16


def bad_shape_provider(batch, sample_rate_hz):
    return np.zeros((len(batch), 7))


def nan_provider(batch, sample_rate_hz):
    out = np.zeros((len(batch), 192))
    out[0, 0] = np.nan
    return out


class TestManifestReader:
    def test_reads_ids_and_paths_in_order(self, tmp_path):
        path = write_manifest(tmp_path / "m.tsv", [("a/1", "/x/1.wav"), ("b/2", "/x/2.wav")])
        assert read_manifest_clips(path) == [("a/1", "/x/1.wav"), ("b/2", "/x/2.wav")]

    def test_rejects_missing_header(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text("a\t/x.wav\n")
        with pytest.raises(ManifestError, match="first line"):
            read_manifest_clips(path)

    def test_rejects_duplicate_ids(self, tmp_path):
        path = write_manifest(tmp_path / "m.tsv", [("a", "/1.wav"), ("a", "/2.wav")])
        with pytest.raises(ManifestError, match="duplicate"):
            read_manifest_clips(path)

    def test_rejects_short_rows_and_empty(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text("#manifest-v1 seed=0\nonly-one-column\n")
        with pytest.raises(ManifestError, match="clip_id"):
            read_manifest_clips(path)
        path.write_text("#manifest-v1 seed=0\n")
        with pytest.raises(ManifestError, match="no clips"):
            read_manifest_clips(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ManifestError, match="cannot read"):
            read_manifest_clips(tmp_path / "missing.tsv")


class TestWavReader:
    def test_round_trips_pcm_values(self, tmp_path):
        samples = make_clip(1, 2000)
        path = write_wav16(tmp_path / "c.wav", samples)
        got = read_wav_16k_mono(path)
        assert got.shape == (2000,)
        assert np.max(np.abs(got - samples)) < 1.0 / 32768.0

    def test_rejects_stereo(self, tmp_path):
        interleaved = np.repeat(make_clip(2, 500), 2)
        path = write_wav16(tmp_path / "s.wav", interleaved, channels=2)
        with pytest.raises(AudioReadFailure, match="mono"):
            read_wav_16k_mono(path)

    def test_rejects_wrong_rate(self, tmp_path):
        path = write_wav16(tmp_path / "r.wav", make_clip(3, 500), sr=8000)
        with pytest.raises(AudioReadFailure, match="8000"):
            read_wav_16k_mono(path)

    def test_rejects_wrong_width(self, tmp_path):
        path = tmp_path / "w.wav"
        with wave.open(str(path), "wb") as writer:
            writer.setnchannels(1)
            writer.setsampwidth(1)
            writer.setframerate(SR)
            writer.writeframes(bytes(100))
        with pytest.raises(AudioReadFailure, match="16-bit"):
            read_wav_16k_mono(path)

    def test_rejects_empty_stream_and_garbage(self, tmp_path):
        path = write_wav16(tmp_path / "e.wav", np.zeros(0))
        with pytest.raises(AudioReadFailure, match="empty"):
            read_wav_16k_mono(path)
        garbage = tmp_path / "g.wav"
        garbage.write_bytes(b"not a wav at all")
        with pytest.raises(AudioReadFailure):
            read_wav_16k_mono(garbage)

    def test_missing_file(self, tmp_path):
        with pytest.raises(AudioReadFailure):
            read_wav_16k_mono(tmp_path / "missing.wav")


class TestMelstatsProvider:
    def test_shape_and_determinism(self):
        batch = [make_clip(4), make_clip(5, 12000)]
        a = melstats_v1(batch, SR)
        b = melstats_v1(batch, SR)
        assert a.shape == (2, 192)
        assert np.array_equal(a, b)
        assert np.all(np.isfinite(a))

    def test_rows_are_independent_of_batching(self):
        clips = [make_clip(s) for s in range(6, 9)]
        whole = melstats_v1(clips, SR)
        single = np.vstack([melstats_v1([c], SR) for c in clips])
        assert np.array_equal(whole, single)

    def test_different_clips_get_different_vectors(self):
        a, b = melstats_v1([make_clip(10), make_clip(11)], SR)
        assert np.max(np.abs(a - b)) > 1e-3

    def test_short_clip_is_padded_not_rejected(self):
        (vec,) = melstats_v1([np.ones(50) * 0.1], SR)
        assert vec.shape == (192,)
        assert np.all(np.isfinite(vec))
        # one padded frame: spread and trend blocks are exactly zero
        assert np.array_equal(vec[64:], np.zeros(128))

    def test_time_reversal_negates_trend_block(self):
        # n chosen so the reversed signal's frame grid realigns exactly
        n = 400 + 160 * 20
        clip = make_clip(12, n) * np.linspace(0.2, 1.0, n)
        fwd, rev = melstats_v1([clip, clip[::-1].copy()], SR)
        assert np.allclose(fwd[:128], rev[:128], atol=1e-9)  # means, stds
        assert np.allclose(fwd[128:], -rev[128:], atol=1e-9)  # slopes flip
        assert np.max(np.abs(fwd[128:])) > 1e-4  # trend actually nonzero


class TestLoadProvider:
    def test_builtin(self):
        assert load_provider("melstats-v1") is melstats_v1

    def test_plugin_path(self):
        assert load_provider("test_exporter:nan_provider") is nan_provider

    def test_unknown_name(self):
        with pytest.raises(ModelLoadFailure, match="unknown model"):
            load_provider("deep-speaker-v9")

    def test_bad_module_and_non_callable(self):
        with pytest.raises(ModelLoadFailure, match="cannot import"):
            load_provider("no_such_module_xyz:f")
        with pytest.raises(ModelLoadFailure, match="callable"):
            load_provider("numpy:pi")


class TestExport:
    def corpus(self, tmp_path, n=2):
        rows = []
        for i in range(n):
            path = write_wav16(tmp_path / "audio" / f"c{i}.wav", make_clip(20 + i))
            rows.append((f"set/c{i}", str(path)))
        manifest = write_manifest(tmp_path / "manifest.tsv", rows)
        return manifest, rows

    def test_two_valid_clips_give_two_records(self, tmp_path):
        manifest, rows = self.corpus(tmp_path)
        out = tmp_path / "embs.tsv"
        result = export_embeddings(ExportJob(str(manifest), str(out)))
        assert result.exit_code == 0 and not result.failures
        assert result.exported == [cid for cid, _ in rows]
        lines = out.read_text().splitlines()
        assert lines[0] == "#dim=192"
        assert len(lines) == 3
        for line, (cid, _) in zip(lines[1:], rows):
            name, _, values = line.partition("\t")
            assert name == cid
            assert len(values.split(",")) == 192

    def test_missing_audio_listed_on_sidecar_exit_nonzero(self, tmp_path):
        manifest, rows = self.corpus(tmp_path)
        extended = rows + [("set/ghost", str(tmp_path / "audio" / "ghost.wav"))]
        manifest = write_manifest(tmp_path / "manifest.tsv", extended)
        out = tmp_path / "embs.tsv"
        result = export_embeddings(ExportJob(str(manifest), str(out)))
        assert result.exit_code == 1
        assert [cid for cid, _ in result.failures] == ["set/ghost"]
        sidecar = result.sidecar_path.read_text()
        assert "set/ghost" in sidecar and "ghost.wav" in sidecar
        # the readable clips are still exported
        assert len(out.read_text().splitlines()) == 3

    def test_clean_rerun_removes_stale_sidecar(self, tmp_path):
        manifest, rows = self.corpus(tmp_path)
        out = tmp_path / "embs.tsv"
        sidecar = tmp_path / "embs.tsv.errors.txt"
        sidecar.write_text("set/old\tleftover\n")
        result = export_embeddings(ExportJob(str(manifest), str(out)))
        assert result.exit_code == 0
        assert not sidecar.exists()

    def test_batch_size_does_not_change_output(self, tmp_path):
        manifest, _ = self.corpus(tmp_path, n=5)
        out1, out2 = tmp_path / "b1.tsv", tmp_path / "b5.tsv"
        export_embeddings(ExportJob(str(manifest), str(out1), batch_size=1))
        export_embeddings(ExportJob(str(manifest), str(out2), batch_size=5))
        assert out1.read_bytes() == out2.read_bytes()

    def test_provider_contract_enforced(self, tmp_path):
        manifest, _ = self.corpus(tmp_path)
        job = ExportJob(str(manifest), str(tmp_path / "o.tsv"), model="test_exporter:bad_shape_provider")
        with pytest.raises(ProviderOutputError, match="shape"):
            export_embeddings(job)
        job = ExportJob(str(manifest), str(tmp_path / "o.tsv"), model="test_exporter:nan_provider")
        with pytest.raises(ProviderOutputError, match="non-finite"):
            export_embeddings(job)

    def test_job_validates_batch_size(self):
        with pytest.raises(ValueError, match="batch_size"):
            ExportJob("m.tsv", "o.tsv", batch_size=0)


class TestCli:
    def test_success_and_failure_exit_codes(self, tmp_path, capsys):
        path = write_wav16(tmp_path / "a" / "c0.wav", make_clip(30))
        manifest = write_manifest(tmp_path / "m.tsv", [("c0", str(path))])
        out = tmp_path / "e.tsv"
        assert main(["export", "--manifest", str(manifest), "--out", str(out), "--batch", "2"]) == 0
        assert "exported 1 embeddings" in capsys.readouterr().out
        assert out.exists()

        write_manifest(tmp_path / "m.tsv", [("c0", str(path)), ("gone", str(tmp_path / "no.wav"))])
        assert main(["export", "--manifest", str(manifest), "--out", str(out)]) == 1
        assert "1 clips failed" in capsys.readouterr().err

    def test_job_level_errors_exit_2(self, tmp_path, capsys):
        assert main(["export", "--manifest", str(tmp_path / "no.tsv"), "--out", str(tmp_path / "e.tsv")]) == 2
        assert "error:" in capsys.readouterr().err
        path = write_wav16(tmp_path / "a" / "c0.wav", make_clip(31))
        manifest = write_manifest(tmp_path / "m.tsv", [("c0", str(path))])
        rc = main(["export", "--manifest", str(manifest), "--out", str(tmp_path / "e.tsv"), "--model", "nope"])
        assert rc == 2


def test_exported_file_round_trips_into_the_detector(tmp_path, caplog):
    """Shipped guarantee: a 5-clip export parses in the consumer with zero
    warnings, and re-exporting agrees within 1e-6 per component."""
    from voicedet.embeddings import load_embeddings

    rows = []
    for i in range(5):
        path = write_wav16(tmp_path / "audio" / f"clip{i}.wav", make_clip(40 + i))
        rows.append((f"rt/clip{i}", str(path)))
    manifest = write_manifest(tmp_path / "manifest.tsv", rows)
    ids = [cid for cid, _ in rows]

    out1, out2 = tmp_path / "e1.tsv", tmp_path / "e2.tsv"
    assert export_embeddings(ExportJob(str(manifest), str(out1))).exit_code == 0
    assert export_embeddings(ExportJob(str(manifest), str(out2), batch_size=2)).exit_code == 0

    with caplog.at_level(logging.WARNING):
        parsed1 = load_embeddings(out1, ids)
        parsed2 = load_embeddings(out2, ids)
    warnings = [r for r in caplog.records if r.levelno >= logging.WARNING]

    drift = max(
        float(np.max(np.abs(parsed1[cid].vector - parsed2[cid].vector))) for cid in ids
    )
    ok = not warnings and set(parsed1) == set(ids) and drift < 1e-6
    print(
        f"[{'PASS' if ok else 'FAIL'}] exporter round-trip: 5/5 clips parsed, "
        f"{len(warnings)} loader warnings (need 0), repeat-export drift {drift:.2e} (limit 1e-6)"
    )
    assert ok
