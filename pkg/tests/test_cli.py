import csv
import json
import subprocess
import sys

import pytest

from ecgcrypt import io
from ecgcrypt.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--out", str(d / "data"), "--seed", "3", "--samples", "4096"]) == 0
    assert main(["keygen", "--preset", "freq-0.65", "--seed", "9", "--out", str(d / "key.json"),
                 "--user-a-out", str(d / "key_a.json")]) == 0
    return d


def run(*argv):
    return main([str(a) for a in argv])


def test_synth_default_segments(tmp_path):
    assert run("synth", "--out", tmp_path) == 0
    files = sorted(tmp_path.glob("*.csv"))
    assert len(files) == 16
    rec = io.read_signal_csv(files[0])
    assert len(rec.signal) == 2048 and rec.peak_indices.size > 0


def test_synth_deterministic(tmp_path):
    run("synth", "--out", tmp_path / "a", "--seed", "5", "--samples", "4096")
    run("synth", "--out", tmp_path / "b", "--seed", "5", "--samples", "4096")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_synth_long_record_splits_to_128(tmp_path):
    assert run("synth", "--out", tmp_path, "--samples", 2**18) == 0
    assert len(list(tmp_path.glob("*.csv"))) == 128


def test_synth_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("synth", "--out", blocker / "sub") == 3


def test_keygen_contents(workdir):
    full = json.loads((workdir / "key.json").read_text())
    assert (full["n"], full["mr"], full["t"], full["a"]) == (2048, 0.65, 110, 0.1)
    user_a = json.loads((workdir / "key_a.json").read_text())
    assert "seed_b" not in user_a and user_a["seed_a"] == full["seed_a"]


def test_encrypt_headers(workdir, tmp_path):
    src = workdir / "data" / "rec000_seg000.csv"
    assert run("encrypt", src, "--key", workdir / "key.json", "--preset", "freq-0.65", "--out", tmp_path / "c.bin") == 0
    ct = io.read_ciphertext(tmp_path / "c.bin")
    assert (ct.mr, ct.t, ct.band) == (0.65, 110, None)
    run("keygen", "--preset", "fixed-freq-0.65", "--out", tmp_path / "kf.json")
    assert run("encrypt", src, "--key", tmp_path / "kf.json", "--preset", "fixed-freq-0.65", "--out", tmp_path / "f.bin") == 0
    ct = io.read_ciphertext(tmp_path / "f.bin")
    assert (ct.mr, ct.t, ct.band) == (0.65, 80, (20, 90))


def test_encrypt_deterministic_and_roundtrip(workdir, tmp_path):
    src = workdir / "data" / "rec000_seg001.csv"
    for name in ("x.bin", "y.bin"):
        run("encrypt", src, "--key", workdir / "key.json", "--preset", "freq-0.65", "--seed", 4, "--out", tmp_path / name)
    blob = (tmp_path / "x.bin").read_bytes()
    assert blob == (tmp_path / "y.bin").read_bytes()
    assert io.serialize_ciphertext(io.parse_ciphertext(blob)) == blob


def test_encrypt_preset_key_mismatch(workdir, tmp_path):
    src = workdir / "data" / "rec000_seg000.csv"
    assert run("encrypt", src, "--key", workdir / "key.json", "--preset", "freq-0.3", "--out", tmp_path / "c.bin") == 2
    assert not (tmp_path / "c.bin").exists()


def test_encrypt_capacity_error(workdir, tmp_path):
    src = workdir / "data" / "rec000_seg000.csv"
    run("keygen", "--preset", "freq-0.65", "--out", tmp_path / "k.json")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"preset": "freq-0.65", "mask_type": "time"}))
    assert run("encrypt", src, "--key", tmp_path / "k.json", "--config", cfg, "--out", tmp_path / "c.bin") == 2


def test_encrypt_missing_input(workdir, tmp_path):
    assert run("encrypt", tmp_path / "nope.csv", "--key", workdir / "key.json", "--out", tmp_path / "c.bin") == 3


def test_decrypt_levels(workdir, tmp_path):
    src = workdir / "data" / "rec000_seg000.csv"
    ct = tmp_path / "c.bin"
    run("encrypt", src, "--key", workdir / "key.json", "--preset", "freq-0.65", "--out", ct)
    assert run("decrypt", ct, "--key", workdir / "key.json", "--level", "a", "--out", tmp_path / "a_full.csv") == 0
    assert run("decrypt", ct, "--key", workdir / "key_a.json", "--level", "a", "--out", tmp_path / "a_only.csv") == 0
    assert (tmp_path / "a_full.csv").read_bytes() == (tmp_path / "a_only.csv").read_bytes()

    assert run("decrypt", ct, "--key", workdir / "key.json", "--level", "b", "--out", tmp_path / "b.csv") == 0
    with open(tmp_path / "b.report.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1 and rows[0]["watermark_recovered_exactly"] == "True"
    assert len(io.read_signal_csv(tmp_path / "b.csv").signal) == 2048


def test_decrypt_level_b_needs_embed_key(workdir, tmp_path):
    src = workdir / "data" / "rec000_seg000.csv"
    ct = tmp_path / "c.bin"
    run("encrypt", src, "--key", workdir / "key.json", "--preset", "freq-0.65", "--out", ct)
    assert run("decrypt", ct, "--key", workdir / "key_a.json", "--level", "b", "--out", tmp_path / "b.csv") == 2
    assert not (tmp_path / "b.csv").exists()


def test_decrypt_tampered_version(workdir, tmp_path):
    src = workdir / "data" / "rec000_seg000.csv"
    ct = tmp_path / "c.bin"
    run("encrypt", src, "--key", workdir / "key.json", "--preset", "freq-0.65", "--out", ct)
    blob = bytearray(ct.read_bytes())
    blob[4] = 7
    ct.write_bytes(bytes(blob))
    assert run("decrypt", ct, "--key", workdir / "key.json", "--level", "a", "--out", tmp_path / "a.csv") == 2


def test_decrypt_header_key_mismatch(workdir, tmp_path):
    src = workdir / "data" / "rec000_seg000.csv"
    ct = tmp_path / "c.bin"
    run("encrypt", src, "--key", workdir / "key.json", "--preset", "freq-0.65", "--out", ct)
    run("keygen", "--preset", "freq-0.5", "--out", tmp_path / "other.json")
    assert run("decrypt", ct, "--key", tmp_path / "other.json", "--level", "a", "--out", tmp_path / "a.csv") == 2


def test_evaluate_writes_rows_and_mean(tmp_path):
    data = tmp_path / "data"
    run("synth", "--out", data, "--samples", 1024, "--window", 512, "--fs", 200, "--records", 2)
    out = tmp_path / "r.csv"
    assert run("evaluate", data, "--preset", "freq-0.65", "--out", out) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["name"] for r in rows] == ["rec000_seg000", "rec000_seg001", "rec001_seg000", "rec001_seg001", "mean"]
    assert all(r["error"] == "" for r in rows)
    first = out.read_bytes()
    assert run("evaluate", data, "--preset", "freq-0.65", "--out", out) == 0
    assert out.read_bytes() == first


def test_evaluate_records_partial_failures(tmp_path):
    data = tmp_path / "data"
    # 1.4 s segments are too short for peak detection; rows record the failure
    run("synth", "--out", data, "--samples", 512, "--window", 512)
    out = tmp_path / "r.csv"
    assert run("evaluate", data, "--preset", "freq-0.65", "--out", out) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert "ValueError" in rows[0]["error"]


def test_evaluate_empty_dir(tmp_path):
    (tmp_path / "empty").mkdir()
    assert run("evaluate", tmp_path / "empty", "--preset", "freq-0.65", "--out", tmp_path / "r.csv") == 2
    assert not (tmp_path / "r.csv").exists()


def test_bad_config_field(workdir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run("keygen", "--config", cfg, "--out", tmp_path / "k.json") == 2


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "ecgcrypt.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("synth", "encrypt", "decrypt", "evaluate"):
        assert cmd in res.stdout
