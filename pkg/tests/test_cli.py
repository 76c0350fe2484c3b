import csv
from contextlib import nullcontext

import numpy as np
import pytest

from nsmimo import stats as st
from nsmimo.cli import main
from nsmimo.record_io import RunManifest, file_sha256, read_record

from conftest import make_config_text


def read_csv(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(make_config_text(preset="uma-los", duration=0.05, antennas="rx_elements = 2\nrx_spacing = 0.5"))
    return path


def test_simulate_is_deterministic(config_file, tmp_path):
    for name in ("a", "b"):
        assert main(["simulate", str(config_file), "-o", str(tmp_path / name), "--realizations", "2",
                     "--seed", "7"]) == 0
    for r in range(2):
        f = f"realization_{r:04d}.cir"
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    manifest = RunManifest.read(tmp_path / "a" / "manifest.json")
    assert manifest.seed == 7
    for out in manifest.outputs:
        assert file_sha256(tmp_path / "a" / out["path"]) == out["sha256"]
    rec, text = read_record(tmp_path / "a" / "realization_0001.cir")
    assert rec.seed == 7 and rec.realization == 1
    assert "seed = 7" in text


def test_invalid_config_names_field(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(make_config_text(scenario="zeta = -1"))
    assert main(["simulate", str(path), "-o", str(tmp_path / "out")]) == 2
    assert "zeta" in capsys.readouterr().err


def test_missing_config_is_io_error(tmp_path):
    assert main(["simulate", str(tmp_path / "nope.ini"), "-o", str(tmp_path / "out")]) == 3


def test_stats_rejects_mixed_ensembles(config_file, tmp_path):
    main(["simulate", str(config_file), "-o", str(tmp_path / "a")])
    main(["simulate", str(config_file), "-o", str(tmp_path / "b"), "--set", "ms.speed=5"])
    code = main(["stats", "acf", str(tmp_path / "a" / "realization_0000.cir"),
                 str(tmp_path / "b" / "realization_0000.cir"), "-o", str(tmp_path / "acf.csv")])
    assert code == 3


def test_stats_rejects_corrupt_record(config_file, tmp_path):
    main(["simulate", str(config_file), "-o", str(tmp_path / "a")])
    path = tmp_path / "a" / "realization_0000.cir"
    data = bytearray(path.read_bytes())
    data[200] ^= 0xFF
    path.write_bytes(bytes(data))
    assert main(["stats", "acf", str(path), "-o", str(tmp_path / "acf.csv")]) == 3


def test_acf_with_theory(config_file, tmp_path):
    main(["simulate", str(config_file), "-o", str(tmp_path / "a"), "--realizations", "2"])
    recs = sorted(str(p) for p in (tmp_path / "a").glob("*.cir"))
    out = tmp_path / "acf.csv"
    assert main(["stats", "acf", *recs, "-o", str(out), "--theoretical", "--max-lag", "20"]) == 0
    rows = read_csv(out)
    assert len(rows) == 21
    assert {"lag", "empirical_re", "empirical_abs", "theoretical_re", "theoretical_abs"} <= set(rows[0])
    assert float(rows[0]["theoretical_abs"]) == pytest.approx(1.0)


@pytest.mark.parametrize("stat", ["ccf", "psd", "lcr", "transfer"])
def test_other_stats_run(config_file, tmp_path, stat):
    main(["simulate", str(config_file), "-o", str(tmp_path / "a")])
    rec = str(tmp_path / "a" / "realization_0000.cir")
    extra = ["--f-start", "1999e6", "--f-stop", "2001e6", "--f-step", "1e6", "--stride", "10"] if stat == "transfer" else []
    with pytest.warns(UserWarning) if stat == "ccf" else nullcontext():
        assert main(["stats", stat, rec, "-o", str(tmp_path / "s.csv"), *extra]) == 0
    assert len(read_csv(tmp_path / "s.csv")) > 0


def test_stationarity_csv(config_file, tmp_path):
    main(["simulate", str(config_file), "-o", str(tmp_path / "a")])
    out = tmp_path / "st.csv"
    assert main(["stats", "stationarity", str(tmp_path / "a" / "realization_0000.cir"), "-o", str(out)]) == 0
    rows = read_csv(out)
    p = np.array([float(r["ccdf"]) for r in rows])
    assert p[0] == 1.0 and np.all(np.diff(p) < 0)
    assert any(l.startswith("# interval_80pct=") for l in out.read_text().splitlines())


def test_sweep_rejects_bogus_key(config_file, tmp_path, capsys):
    assert main(["sweep", str(config_file), "--vary", "ms.nonsense=1,2", "-o", str(tmp_path / "sw")]) == 2
    assert "nonsense" in capsys.readouterr().err


def test_sweep_matches_simulate_then_stats(config_file, tmp_path):
    assert main(["sweep", str(config_file), "--vary", "ms.speed=20", "-o", str(tmp_path / "sw")]) == 0
    main(["simulate", str(config_file), "-o", str(tmp_path / "a"), "--set", "ms.speed=20.0"])
    rec, _ = read_record(tmp_path / "a" / "realization_0000.cir")
    iv = st.stationary_interval(rec).intervals
    x, p = st.ccdf(iv)
    rows = read_csv(tmp_path / "sw" / "ccdf_00.csv")
    np.testing.assert_array_equal([float(r["interval"]) for r in rows], x)
    np.testing.assert_array_equal([float(r["ccdf"]) for r in rows], p)
    summary = read_csv(tmp_path / "sw" / "summary.csv")
    assert float(summary[0]["interval_80pct"]) == st.ccdf_quantile(iv, 0.8)


def test_jobs_env_validated(config_file, tmp_path, monkeypatch):
    monkeypatch.setenv("NSMIMO_JOBS", "many")
    assert main(["simulate", str(config_file), "-o", str(tmp_path / "a")]) == 2
