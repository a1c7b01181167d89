import json
import os
from pathlib import Path

import numpy as np
import pytest

from haarsphere import cli
from haarsphere.filterbank import read_bank_document, validate_tight
from haarsphere.signals import (
    SphericalSignal,
    read_signal,
    write_pgm,
    write_signal,
)
from haarsphere.sphere import read_partition
from haarsphere.transform import read_coefficients

GOLDEN = Path(__file__).parent / "golden" / "cli_help.txt"


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestPartitionCmd:
    def test_depth_three_counts(self, capsys, tmp_path):
        out = tmp_path / "t.sphp"
        code, stdout, _ = run(capsys, "partition", "--depth", "3",
                              "--out", str(out))
        assert code == 0
        tree = read_partition(out)
        total = sum(tree.level_rects[j].shape[0] for j in range(4))
        assert total == 1 + 4 + 16 + 64
        assert "max area deviation" in stdout

    def test_reported_deviation_small(self, capsys, tmp_path):
        out = tmp_path / "t.sphp"
        code, stdout, _ = run(capsys, "partition", "--depth", "6",
                              "--out", str(out))
        assert code == 0
        deviations = [float(line.rsplit(None, 1)[-1])
                      for line in stdout.splitlines()
                      if "max area deviation" in line]
        assert max(deviations) <= 1e-9

    def test_depth_limit_exit_code(self, capsys, tmp_path):
        code, _, stderr = run(capsys, "partition", "--depth", "13",
                              "--out", str(tmp_path / "t.sphp"))
        assert code == 4
        assert "error" in stderr


class TestIngestCmd:
    def test_small_grid_level_four(self, capsys, tmp_path):
        img = tmp_path / "img.pgm"
        write_pgm(img, np.random.default_rng(0).uniform(0, 255, (28, 28)))
        out = tmp_path / "s.sphs"
        code, _, _ = run(capsys, "ingest", "--image", str(img),
                         "--level", "4", "--out", str(out))
        assert code == 0
        assert read_signal(out).values.size == 6 * 256

    def test_medium_grid_level_six(self, capsys, tmp_path):
        img = tmp_path / "img.pgm"
        write_pgm(img, np.random.default_rng(3).uniform(0, 255, (32, 32)))
        out = tmp_path / "s.sphs"
        code, _, _ = run(capsys, "ingest", "--image", str(img),
                         "--level", "6", "--out", str(out))
        assert code == 0
        assert read_signal(out).values.size == 6 * 4096

    def test_constant_image(self, capsys, tmp_path):
        img = tmp_path / "img.pgm"
        # binary PGM write maps a constant grid to 0, so use an ascii
        # file with explicit values
        img.write_text("P2\n4 4\n255\n" + ("7 " * 16).strip() + "\n")
        out = tmp_path / "s.sphs"
        code, _, _ = run(capsys, "ingest", "--image", str(img),
                         "--level", "2", "--out", str(out))
        assert code == 0
        signal = read_signal(out)
        assert np.array_equal(signal.values, np.full(96, 7.0))

    def test_unreadable_image_exit_code(self, capsys, tmp_path):
        bad = tmp_path / "img.png"
        bad.write_bytes(b"not an image")
        code, _, _ = run(capsys, "ingest", "--image", str(bad),
                         "--level", "2", "--out", str(tmp_path / "s.sphs"))
        assert code == 7


class TestExportFilters:
    def test_round_trip_validates(self, capsys, tmp_path):
        out = tmp_path / "bank.txt"
        code, _, _ = run(capsys, "export-filters", "--out", str(out))
        assert code == 0
        bank = read_bank_document(out)
        assert validate_tight(bank.highpass, 2.0)
        s = 1.0 / np.sqrt(2.0)
        assert np.allclose(bank.highpass[0], [s, -s, 0.0, 0.0], atol=0)
        assert np.array_equal(bank.lowpass, np.full(4, 0.5))


class TestTransformCmds:
    def test_decompose_reconstruct_round_trip(self, capsys, tmp_path, rng):
        signal = SphericalSignal(4, rng.normal(size=6 * 256), 3.0)
        src = tmp_path / "in.sphs"
        write_signal(signal, src)
        coeff_path = tmp_path / "c.sphc"
        code, _, _ = run(capsys, "decompose", "--in", str(src),
                         "--levels", "2", "--out", str(coeff_path))
        assert code == 0
        coeffs = read_coefficients(coeff_path)
        assert coeffs.coarse_level == 2
        out = tmp_path / "back.sphs"
        code, _, _ = run(capsys, "reconstruct", "--in", str(coeff_path),
                         "--out", str(out), "--fmax", "3.0")
        assert code == 0
        back = read_signal(out)
        assert np.max(np.abs(back.values - signal.values)) <= 1e-10
        assert back.peak == 3.0

    def test_bad_container_exit_code(self, capsys, tmp_path):
        bad = tmp_path / "c.sphc"
        bad.write_bytes(b"AAAA" + b"\0" * 20)
        code, _, _ = run(capsys, "reconstruct", "--in", str(bad),
                         "--out", str(tmp_path / "o.sphs"))
        assert code == 3

    def test_level_range_exit_code(self, capsys, tmp_path, rng):
        signal = SphericalSignal(2, rng.normal(size=96), 1.0)
        src = tmp_path / "in.sphs"
        write_signal(signal, src)
        code, _, _ = run(capsys, "decompose", "--in", str(src),
                         "--levels", "5", "--out", str(tmp_path / "c.sphc"))
        assert code == 5


class TestDenoisePipeline:
    def test_addnoise_then_denoise(self, capsys, tmp_path):
        values = np.repeat(np.random.default_rng(1).uniform(0, 255, 6 * 16),
                           16)
        signal = SphericalSignal(4, values, float(values.max()))
        clean = tmp_path / "clean.sphs"
        write_signal(signal, clean)
        noisy = tmp_path / "noisy.sphs"
        code, _, _ = run(capsys, "addnoise", "--in", str(clean), "--out",
                         str(noisy), "--rate", "0.2", "--seed", "5")
        assert code == 0
        restored = tmp_path / "restored.sphs"
        code, _, _ = run(capsys, "denoise", "--in", str(noisy), "--out",
                         str(restored), "--method", "bivariate",
                         "--rate", "0.2", "--levels", "2")
        assert code == 0
        code, psnr_noisy, _ = run(capsys, "psnr", "--ref", str(clean),
                                  "--est", str(noisy))
        code2, psnr_restored, _ = run(capsys, "psnr", "--ref", str(clean),
                                      "--est", str(restored))
        assert code == code2 == 0
        assert float(psnr_restored) > float(psnr_noisy)

    def test_denoise_with_seed_noises_first(self, capsys, tmp_path):
        values = np.repeat(np.random.default_rng(2).uniform(0, 255, 6 * 16),
                           16)
        signal = SphericalSignal(4, values, float(values.max()))
        clean = tmp_path / "clean.sphs"
        write_signal(signal, clean)
        out = tmp_path / "out.sphs"
        code, _, _ = run(capsys, "denoise", "--in", str(clean), "--out",
                         str(out), "--method", "soft", "--rate", "0.1",
                         "--levels", "2", "--seed", "3")
        assert code == 0
        restored = read_signal(out)
        assert not np.array_equal(restored.values, signal.values)

    def test_psnr_two_decimals(self, capsys, tmp_path):
        a = SphericalSignal(1, np.zeros(24), 255.0)
        b = SphericalSignal(1, np.full(24, 12.75), 255.0)
        pa, pb = tmp_path / "a.sphs", tmp_path / "b.sphs"
        write_signal(a, pa)
        write_signal(b, pb)
        code, stdout, _ = run(capsys, "psnr", "--ref", str(pa), "--est", str(pb))
        assert code == 0
        assert stdout.strip() == "26.02"

    def test_psnr_level_mismatch_exit_code(self, capsys, tmp_path):
        pa, pb = tmp_path / "a.sphs", tmp_path / "b.sphs"
        write_signal(SphericalSignal(1, np.zeros(24), 1.0), pa)
        write_signal(SphericalSignal(2, np.zeros(96), 1.0), pb)
        code, _, _ = run(capsys, "psnr", "--ref", str(pa), "--est", str(pb))
        assert code == 5


class TestDatasetAndExperiment:
    def test_dataset_and_experiment_flow(self, capsys, tmp_path):
        data = tmp_path / "data"
        code, _, _ = run(capsys, "dataset", "--kind", "synthetic", "--count",
                         "3", "--level", "4", "--coarse", "2", "--out",
                         str(data), "--seed", "1", "--rate", "0.2")
        assert code == 0
        clean_files = sorted((data / "clean").glob("*.sphs"))
        noisy_files = sorted((data / "noisy").glob("*.sphs"))
        assert len(clean_files) == 3 and len(noisy_files) == 3
        report_path = tmp_path / "report.json"
        code, stdout, _ = run(capsys, "experiment", "--dataset",
                              str(data / "clean"), "--rates", "0.1,0.5",
                              "--methods", "all", "--levels", "2",
                              "--out", str(report_path), "--seed", "7")
        assert code == 0
        report = json.loads(report_path.read_text())
        assert len(report["cells"]) == 6
        methods = [c["method"] for c in report["cells"][:3]]
        assert methods == ["soft", "localsoft", "bivariate"]

    def test_experiment_deterministic_bytes(self, capsys, tmp_path):
        data = tmp_path / "data"
        run(capsys, "dataset", "--kind", "synthetic", "--count", "2",
            "--level", "3", "--coarse", "1", "--out", str(data))
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        for out in (out1, out2):
            code, _, _ = run(capsys, "experiment", "--dataset",
                             str(data / "clean"), "--rates", "0.2",
                             "--methods", "soft", "--levels", "1",
                             "--out", str(out), "--seed", "3")
            assert code == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_digits_dataset(self, capsys, tmp_path):
        data = tmp_path / "digits"
        code, _, _ = run(capsys, "dataset", "--kind", "digits", "--count",
                         "2", "--level", "3", "--out", str(data))
        assert code == 0
        files = sorted((data / "clean").glob("*.sphs"))
        assert len(files) == 2
        assert read_signal(files[0]).values.size == 6 * 64


class TestRasterizeCmd:
    def test_exports_faces(self, capsys, tmp_path, rng):
        src = tmp_path / "s.sphs"
        write_signal(SphericalSignal(2, rng.uniform(0, 1, 96), 1.0), src)
        outdir = tmp_path / "faces"
        code, _, _ = run(capsys, "rasterize", "--in", str(src),
                         "--outdir", str(outdir))
        assert code == 0
        assert sorted(p.name for p in outdir.iterdir()) == [
            "face1.pgm", "face2.pgm", "face3.pgm", "face4.pgm",
            "face5.pgm", "face6.pgm", "faces.json"]


class TestHelp:
    def test_help_matches_golden(self):
        os.environ["COLUMNS"] = "80"
        parser = cli.build_parser()
        chunks = [parser.format_help()]
        for action in parser._subparsers._group_actions:
            for name, sub in action.choices.items():
                chunks.append(f"\n===== {name} =====\n" + sub.format_help())
        assert "".join(chunks) == GOLDEN.read_text()
