import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from erasure_lab import analytics
from erasure_lab.cli import frame_file, main, unframe


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_exponents_csv(capsys, tmp_path):
    out = tmp_path / "c.csv"
    code, _ = run(capsys, "exponents", "--q", "128", "--pi", "0.015", "--points", "200",
                  "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(out.open(encoding="utf-8")))
    assert list(rows[0]) == analytics.CURVE_COLUMNS
    Rc = analytics.critical_rate(128, 0.015)
    above = [r for r in rows if Rc <= float(r["R_nats"]) <= analytics.capacity(128, 0.015)]
    assert above and all(abs(float(r["envelope_u"]) - float(r["E_r"])) < 1e-11 for r in above)


def test_exponents_q2_and_bits(capsys):
    code, cap = run(capsys, "exponents", "--q", "2", "--pi", "0.5", "--points", "1000")
    first = next(csv.DictReader(io.StringIO(cap.out)))
    assert code == 0
    assert float(first["E_r"]) == pytest.approx(-math.log(0.75) - float(first["R_nats"]), abs=1e-11)
    code, cap = run(capsys, "exponents", "--q", "2", "--pi", "0.5", "--points", "10", "--bits")
    row = next(csv.DictReader(io.StringIO(cap.out)))
    assert "R_bits" in row
    assert float(row["R_bits"]) == pytest.approx(0.1, abs=1e-11)


def test_critical_fraction_shrinks_with_q():
    ratio = {q: analytics.critical_rate(q, 0.015) / analytics.capacity(q, 0.015) for q in (128, 1024)}
    assert ratio[1024] < ratio[128]
    assert ratio[128] == pytest.approx(1 / (0.985 + 0.015 * 128))


def test_tail(capsys):
    code, cap = run(capsys, "tail", "--N", "4", "--K", "2", "--q", "2", "--pi", "0.5")
    d = json.loads(cap.out)
    assert code == 0 and d["mds_tail_exact"] == pytest.approx(0.3125)
    assert d["mds_tail_bounds"]["above_capacity"]
    code, cap = run(capsys, "tail", "--N", "3", "--K", "2", "--q", "3", "--pi", "0.5")
    d = json.loads(cap.out)
    lo, hi = d["ml_sandwich"]
    assert (lo, hi) == pytest.approx((1 / 3, 1 / 2))
    assert lo <= d["mds_ml_error"] <= hi and d["mds_ml_error"] == pytest.approx(13 / 36)
    code, cap = run(capsys, "tail", "--N", "16", "--K", "8", "--q", "16", "--pi", "0")
    d = json.loads(cap.out)
    assert d["mds_tail_exact"] == d["mds_ml_error"] == 0
    assert d["mds_tail_bounds"]["upper"] == 0 and d["ml_sandwich"] == [0, 0]


def test_simulate_usage_errors(capsys):
    assert run(capsys, "simulate", "--N", "4", "--K", "2", "--q", "2", "--pi", "0.5",
               "--trials", "0")[0] == 2
    assert run(capsys, "simulate", "--N", "4", "--K", "2", "--q", "2", "--trials", "10")[0] == 2
    assert run(capsys, "simulate", "--N", "4", "--K", "2", "--q", "6", "--pi", "0.1",
               "--trials", "10")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--N", "4"])
    assert exc.value.code == 2


def test_simulate_deterministic_files(capsys, tmp_path):
    outs = []
    for i in range(2):
        p = tmp_path / f"r{i}.json"
        code, _ = run(capsys, "simulate", "--family", "linear_random", "--N", "4", "--K", "2",
                      "--q", "2", "--pi", "0.5", "--trials", "50000", "--seed", "3", "--out", str(p))
        assert code == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    d = json.loads(outs[0])
    assert d["reference"] == pytest.approx(analytics.lin_tail_exact(4, 2, 2, 0.5))


def test_simulate_csv(capsys):
    code, cap = run(capsys, "simulate", "--N", "15", "--K", "11", "--q", "16",
                    "--channel", "memoryless:pi=0.1", "--trials", "20000", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(cap.out)))
    assert code == 0 and len(rows) == 1 and rows[0]["passed"] == "1"


def test_verify_mds(capsys):
    code, cap = run(capsys, "verify-mds", "--q", "3", "--N", "3", "--K", "2", "--pi", "0.3",
                    "--codebooks", "200")
    assert code == 0 and json.loads(cap.out)["passed"]
    code, cap = run(capsys, "verify-mds", "--q", "2", "--N", "3", "--K", "1", "--pi", "0.5")
    d = json.loads(cap.out)
    assert code == 0 and d["mds_equals_bound"]
    code, cap = run(capsys, "verify-mds", "--q", "3", "--N", "3", "--K", "2", "--pi", "3/10",
                    "--codebooks", "10", "--inject-non-mds")
    d = json.loads(cap.out)
    assert code == 0 and d["injected_non_mds"] == 1 and d["all_non_mds_strictly_worse"]
    assert d["mds_error_exact"] == "3/20"


def test_codec_demo_roundtrips(capsys, tmp_path):
    src = tmp_path / "in.bin"
    data = np.random.default_rng(0).integers(0, 256, 50_001, dtype=np.uint8).tobytes()
    src.write_bytes(data)
    dst = tmp_path / "out.bin"
    code, _ = run(capsys, "codec-demo", "--in", str(src), "--out", str(dst), "--pi", "0")
    assert code == 0 and dst.read_bytes() == data
    for pair in ("0,1", "2,5", "3,4"):
        code, cap = run(capsys, "codec-demo", "--in", str(src), "--out", str(dst), "--erase", pair,
                        "--packet-size", "300")
        assert code == 0 and dst.read_bytes() == data and json.loads(cap.out)["recovered_all"]
    code, cap = run(capsys, "codec-demo", "--in", str(src), "--out", str(dst), "--q", "65536",
                    "--N", "9", "--K", "5", "--erase", "0,2,4,6", "--packet-size", "77")
    assert code == 0 and dst.read_bytes() == data


def test_codec_demo_unrecoverable(capsys, tmp_path):
    src = tmp_path / "in.bin"
    src.write_bytes(bytes(range(256)) * 40)
    dst = tmp_path / "out.bin"
    code, cap = run(capsys, "codec-demo", "--in", str(src), "--out", str(dst), "--packet-size", "100",
                    "--erase", "3:0,1,2")
    report = json.loads(cap.out)
    assert code == 1 and report["unrecoverable_blocks"] == [3]
    assert "unrecoverable blocks: [3]" in cap.err
    assert run(capsys, "codec-demo", "--in", str(src), "--out", str(dst), "--erase", "9")[0] == 2
    assert run(capsys, "codec-demo", "--in", str(tmp_path / "missing"), "--out", str(dst))[0] == 1


def test_framing_roundtrip():
    for q in (256, 65536):
        for n in (0, 1, 15, 16, 17, 999):
            data = bytes((i * 7) % 256 for i in range(n))
            blocks = frame_file(data, q, 4, 8)
            assert blocks.shape[1:] == (4, 8)
            assert unframe(blocks, q) == data


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "erasure_lab", "tail", "--N", "4", "--K", "2",
                          "--q", "2", "--pi", "0.5"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["mds_tail_exact"] == pytest.approx(0.3125)
