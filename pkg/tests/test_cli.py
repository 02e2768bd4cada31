"""Command-line interface: exit codes, outputs, determinism, manifests."""

import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from fflab.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture()
def outdir(tmp_path):
    return tmp_path / "out"


def read(path):
    return json.loads(Path(path).read_text())


class TestExitCodes:
    def test_unknown_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_required_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["census", "--ifs", str(CONFIGS / "cantor.cfg")])
        assert exc.value.code == 2

    def test_domain_error_exit_one(self, outdir, capsys):
        code = main([
            "census", "--ifs", str(CONFIGS / "cantor.cfg"),
            "--t", "40", "--c", "0.1", "--out", str(outdir),
        ])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_validate_ok(self, outdir, capsys):
        code = main([
            "validate", "--ifs", str(CONFIGS / "cantor.cfg"),
            "--out", str(outdir), "--finest-scale", "0.00024",
        ])
        assert code == 0
        assert "valid IFS" in capsys.readouterr().out
        assert (outdir / "validate.json").exists()
        assert (outdir / "manifest.json").exists()


class TestFourier:
    def test_single_value_matches_oracle(self, outdir, capsys):
        code = main([
            "fourier", "--ifs", str(CONFIGS / "cantor.cfg"),
            "--lambda", "1", "--tol", "1e-8", "--out", str(outdir),
        ])
        assert code == 0
        import cmath, math

        prod = 1.0
        for k in range(1, 60):
            prod *= math.cos(2 * math.pi / 3 ** k)
        want = cmath.exp(1j * math.pi) * prod
        row = (outdir / "fourier.csv").read_text().splitlines()[1].split(",")
        got = complex(float(row[1]), float(row[2]))
        assert abs(got - want) < 1e-8

    def test_sweep_deterministic(self, outdir, tmp_path):
        args = [
            "fourier", "--ifs", str(CONFIGS / "cantor.cfg"),
            "--lambda", "0.5", "--lambda-max", "50", "--count", "64",
            "--tol", "1e-6",
        ]
        main(args + ["--out", str(outdir)])
        second = tmp_path / "out2"
        main(args + ["--out", str(second)])
        assert (outdir / "fourier.csv").read_bytes() == \
            (second / "fourier.csv").read_bytes()

    def test_manifest_contents(self, outdir):
        main([
            "fourier", "--ifs", str(CONFIGS / "lebesgue.cfg"),
            "--lambda", "2", "--out", str(outdir),
        ])
        man = read(outdir / "manifest.json")
        assert man["command"] == "fourier"
        assert len(man["ifs_file_sha256"]) == 64
        # numeric knobs from every module are echoed
        assert "census" in man["defaults"]
        assert "word_budget" in man["defaults"]["ifs"]
        assert "samples_per_band" in man["defaults"]["oscillatory"]


class TestSubcommands:
    def test_oscillatory(self, outdir):
        code = main([
            "oscillatory", "--ifs", str(CONFIGS / "cantor.cfg"),
            "--phase", "poly:0,0,1", "--lambda", "50", "--scale", "1e-4",
            "--out", str(outdir),
        ])
        assert code == 0
        rep = read(outdir / "oscillatory.json")
        assert rep["modulus"] <= 1 + rep["error_bound"]

    def test_decay(self, outdir):
        code = main([
            "decay", "--ifs", str(CONFIGS / "cantor.cfg"),
            "--phase", "poly:0,0,1", "--tmin", "2", "--tmax", "64",
            "--samples", "32", "--out", str(outdir),
        ])
        assert code == 0
        rep = read(outdir / "decay.json")
        assert rep["bands"] == 5
        lines = (outdir / "decay.csv").read_text().splitlines()
        assert lines[0] == "T,band_max,fitted"
        assert len(lines) == 6

    def test_census(self, outdir):
        code = main([
            "census", "--ifs", str(CONFIGS / "lebesgue.cfg"),
            "--t", "3", "--c", "0.4", "--tolerance", "1e-3",
            "--out", str(outdir),
        ])
        assert code == 0
        rep = read(outdir / "census.json")
        assert rep["count"] >= 1
        lines = (outdir / "census.csv").read_text().splitlines()
        assert len(lines) == rep["range"][1] - rep["range"][0] + 2

    def test_covering(self, outdir):
        code = main([
            "covering", "--poly", "1:10,-3000:0", "--a", "2", "--b", "3",
            "--epsilon", "0.5", "--k", "2", "--n-param", "10",
            "--out", str(outdir),
        ])
        assert code == 0
        rep = read(outdir / "covering.json")
        assert rep["interval_count"] == 1

    def test_nonflat(self, outdir):
        code = main([
            "nonflat", "--phase", "poly:0,1", "--interval", "0,1",
            "--kmax", "1", "--c0", "1", "--out", str(outdir),
        ])
        assert code == 0
        assert read(outdir / "nonflat.json")["certified"] is True

    def test_correlations_and_gaps(self, outdir, tmp_path):
        code = main([
            "correlations", "--ifs", str(CONFIGS / "cantor_23.cfg"),
            "--xi", "1", "--N", "300", "--k", "2", "--seeds", "2",
            "--out", str(outdir),
        ])
        assert code == 0
        bundle = read(outdir / "correlations.json")
        assert bundle["N"] == 300
        assert len(bundle["gap_ks"]) == 2
        lines = (outdir / "correlations.csv").read_text().splitlines()
        assert lines[0] == "seed,k,R_k,deviation"

        gaps_out = tmp_path / "gaps"
        code = main([
            "gaps", "--ifs", str(CONFIGS / "cantor_23.cfg"),
            "--N", "300", "--seed", "1", "--out", str(gaps_out),
        ])
        assert code == 0
        rep = read(gaps_out / "gaps.json")
        assert rep["mean_scaled_gap"] == pytest.approx(1.0, abs=1e-9)

    def test_phase_integral(self, outdir):
        code = main([
            "phase-integral", "--ifs", str(CONFIGS / "cantor_23.cfg"),
            "--l", "1", "--m", "1", "--u", "20,5", "--v", "3,2",
            "--N", "30", "--out", str(outdir),
        ])
        assert code == 0
        rep = read(outdir / "phase_integral.json")
        assert rep["modulus"] < 0.05
        assert rep["meets_degree_condition"] is True


def test_console_entry_point(tmp_path):
    exe = shutil.which("fflab")
    if exe is None:
        pytest.skip("console script not on PATH")
    res = subprocess.run(
        [exe, "validate", "--ifs", str(CONFIGS / "cantor.cfg"),
         "--out", str(tmp_path / "o"), "--finest-scale", "0.001"],
        capture_output=True, text=True,
    )
    assert res.returncode == 0
    assert "valid IFS" in res.stdout
