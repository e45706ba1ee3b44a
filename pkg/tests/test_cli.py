import json
import subprocess
import sys

RUN = [sys.executable, "-m", "cesplit.cli"]


def invoke(*argv):
    return subprocess.run(
        RUN + list(argv), capture_output=True, text=True, timeout=600
    )


def test_enumerate_round_trip():
    proc = invoke("enumerate", "--index", "0", "--stages", "2000")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["members"] and payload["members"] == sorted(payload["members"])


def test_unknown_flag_is_usage_error():
    proc = invoke("enumerate", "--index", "0", "--stages", "10", "--bogus")
    assert proc.returncode == 2
    assert "usage" in proc.stderr.lower()


def test_split_friedberg_zero_stages():
    proc = invoke("split", "friedberg", "--index", "3", "--stages", "0")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["routed"] == 0


def test_split_trace_and_verify_round_trip(tmp_path):
    path = tmp_path / "fried.jsonl"
    proc = invoke(
        "split", "friedberg", "--index", "8", "--stages", "4000", "--trace", str(path)
    )
    assert proc.returncode == 0
    check = invoke("verify", "--trace", str(path), "--suite", "replay")
    assert check.returncode == 0, check.stdout
    report = json.loads(check.stdout)
    assert report["ok"] and report["kind"] == "friedberg"


def test_verify_catches_tampering(tmp_path):
    path = tmp_path / "fried.jsonl"
    invoke("split", "friedberg", "--index", "8", "--stages", "4000", "--trace", str(path))
    lines = path.read_text().splitlines()
    target = next(i for i, line in enumerate(lines) if '"op":"route"' in line)
    record = json.loads(lines[target])
    record["side"] = 1 - record["side"]
    lines[target] = json.dumps(record, sort_keys=True, separators=(",", ":"))
    path.write_text("\n".join(lines) + "\n")
    check = invoke("verify", "--trace", str(path))
    assert check.returncode == 1
    assert not json.loads(check.stdout)["ok"]


def test_verify_malformed_trace_reports_line(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"op":"event","s":0,"e":1,"x":2}\nnot json at all\n')
    check = invoke("verify", "--trace", str(path))
    assert check.returncode == 1
    payload = json.loads(check.stdout)
    assert "line 2" in payload["error"]


def test_diagonalize_then_verify(tmp_path):
    path = tmp_path / "tree.jsonl"
    proc = invoke(
        "diagonalize", "--proc", "hf", "--stages", "6000", "--depth", "9",
        "--trace", str(path),
    )
    assert proc.returncode == 0, proc.stderr
    payload = json.loads(proc.stdout)
    assert payload["verdict"] == 3 and payload["violations"] == 0
    check = invoke("verify", "--trace", str(path), "--suite", "tree")
    assert check.returncode == 0, check.stdout


def test_byte_identical_traces(tmp_path):
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for path in (p1, p2):
        invoke("split", "friedberg", "--index", "0", "--stages", "3000",
               "--trace", str(path))
    assert p1.read_bytes() == p2.read_bytes()


def test_corpus_emission(tmp_path):
    out = tmp_path / "corpus.txt"
    proc = invoke("corpus", "--size", "64", "--out", str(out))
    assert proc.returncode == 0
    assert len(out.read_text().splitlines()) == 64


def test_witness_build31_summary():
    proc = invoke("witness", "build31", "--stages", "20000", "--breadth", "8")
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["sizes"][0] > 0
    assert payload["non_friedberg_signatures"]
    assert payload["live_complements"]["k_r"] == []
    assert payload["live_complements"]["k_rbar"] == []


def test_iterate_smoke():
    proc = invoke("iterate", "--rounds", "1", "--stages", "12000")
    assert proc.returncode == 0
    entry = json.loads(proc.stdout.splitlines()[0])
    assert entry["verdict"] == 3
