import json
import subprocess
import sys

import pytest

from ccsim.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_schedule_p22(capsys):
    code, out, _ = run_cli(capsys, "schedule", "-p", "22")
    assert code == 0
    assert "skips: 11 6 3 2 1" in out
    assert "rounds: 5" in out
    assert "run lengths: 11 5 3 1 1" in out
    assert "representable: yes" in out


def test_schedule_p1(capsys):
    code, out, _ = run_cli(capsys, "schedule", "-p", "1")
    assert code == 0
    assert "rounds: 0" in out


def test_schedule_invalid_custom(capsys):
    code, out, _ = run_cli(capsys, "schedule", "-p", "8",
                           "--scheme", "custom", "--skips", "5,1")
    assert code == 1
    assert "i=3" in out
    assert "representability" in out


def test_schedule_exports(tmp_path, capsys):
    dot = tmp_path / "tree.dot"
    js = tmp_path / "skips.json"
    code, _, _ = run_cli(capsys, "schedule", "-p", "22",
                         "--dot", str(dot), "--json", str(js))
    assert code == 0
    assert "21 -> 10 [label=11];" in dot.read_text()
    assert json.loads(js.read_text()) == [11, 6, 3, 2, 1]


def test_run_reduce_scatter_p22(capsys):
    code, out, _ = run_cli(capsys, "run", "-p", "22",
                           "--collective", "reduce_scatter", "--verify")
    assert code == 0
    assert "rounds=5" in out
    assert "blocks/rank=21" in out
    assert "ops/rank=21" in out
    assert "VERIFIED" in out


def test_run_allreduce_p22(capsys):
    code, out, _ = run_cli(capsys, "run", "-p", "22",
                           "--collective", "allreduce", "--verify")
    assert code == 0
    assert "rounds=10 blocks/rank=42 ops/rank=21 VERIFIED" in out


def test_run_p1(capsys):
    code, out, _ = run_cli(capsys, "run", "-p", "1",
                           "--collective", "allreduce", "--verify")
    assert code == 0
    assert "rounds=0" in out
    assert "VERIFIED" in out


@pytest.mark.parametrize("collective", ["allgather", "alltoall"])
def test_run_other_collectives_verify(capsys, collective):
    code, out, _ = run_cli(capsys, "run", "-p", "9",
                           "--collective", collective, "--m", "18", "--verify")
    assert code == 0
    assert "VERIFIED" in out


def test_run_float64_irregular(capsys):
    code, out, _ = run_cli(capsys, "run", "-p", "10", "--elem", "float64",
                           "--random-layout", "6", "--verify", "--seed", "5")
    assert code == 0
    assert "VERIFIED" in out


def test_run_symbolic_verify(capsys):
    code, out, _ = run_cli(capsys, "run", "-p", "22", "--elem", "symbolic",
                           "--verify")
    assert code == 0
    assert "VERIFIED" in out


def test_run_symbolic_only_reduce_scatter(capsys):
    code, _, err = run_cli(capsys, "run", "-p", "4", "--elem", "symbolic",
                           "--collective", "allreduce")
    assert code == 2
    assert "symbolic" in err


def test_run_invalid_custom_schedule(capsys):
    code, _, err = run_cli(capsys, "run", "-p", "8",
                           "--scheme", "custom", "--skips", "5,1")
    assert code == 1
    assert "invalid" in err


def test_run_trace_files(tmp_path, capsys):
    trace = tmp_path / "trace.jsonl"
    trace_csv = tmp_path / "trace.csv"
    code, _, _ = run_cli(capsys, "run", "-p", "6", "--verify",
                         "--trace", str(trace), "--trace-csv", str(trace_csv))
    assert code == 0
    lines = trace.read_text().splitlines()
    assert len(lines) == 3  # ceil(log2 6)
    first = json.loads(lines[0])
    assert first["round"] == 0 and first["skip"] == 3
    assert len(first["entries"]) == 6
    assert trace_csv.read_text().startswith("round,skip,rank,to,from,blocks,elements")


def test_run_deterministic_across_modes_and_invocations(tmp_path, capsys):
    texts = []
    for name, mode in (("a", "lockstep"), ("b", "threaded"), ("c", "lockstep")):
        path = tmp_path / f"{name}.jsonl"
        code, out, _ = run_cli(capsys, "run", "-p", "13", "--seed", "9",
                               "--random-layout", "5", "--mode", mode,
                               "--verify", "--trace", str(path))
        assert code == 0
        texts.append((out, path.read_bytes()))
    assert texts[0] == texts[1] == texts[2]


def test_seed_changes_inputs_not_counts(capsys):
    _, out_a, _ = run_cli(capsys, "run", "-p", "8", "--seed", "1", "--verify")
    _, out_b, _ = run_cli(capsys, "run", "-p", "8", "--seed", "2", "--verify")
    assert out_a == out_b  # counts don't depend on values


def test_seed_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CCSIM_SEED", "7")
    a = tmp_path / "a.jsonl"
    run_cli(capsys, "run", "-p", "5", "--random-layout", "4", "--trace", str(a))
    monkeypatch.setenv("CCSIM_SEED", "8")
    b = tmp_path / "b.jsonl"
    run_cli(capsys, "run", "-p", "5", "--random-layout", "4", "--trace", str(b))
    # different seed, different random layout, different element counts
    assert a.read_bytes() != b.read_bytes()


def test_cost_golden_rows(capsys):
    code, out, _ = run_cli(capsys, "cost", "--p", "1,4", "--m", "4",
                           "--scheme", "halving")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "p,m,scheme,alpha,beta,gamma,analytic,measured,upper_bound"
    assert "1,4,halving,1,1,1,0,0,0" in lines
    assert "4,4,halving,1,1,1,8,8,18" in lines


def test_cost_linear_round_charge(capsys):
    code, out, _ = run_cli(capsys, "cost", "--p", "5", "--m", "5",
                           "--scheme", "linear", "--alpha", "1",
                           "--beta", "0", "--gamma", "0")
    assert code == 0
    assert "5,5,linear,1,0,0,4,4,4" in out


def test_cost_out_file(tmp_path, capsys):
    out_path = tmp_path / "sweep.csv"
    code, out, _ = run_cli(capsys, "cost", "--p", "4,8", "--m", "8,16",
                           "--scheme", "halving,doubling,linear,sqrt",
                           "--collective", "allreduce", "--out", str(out_path))
    assert code == 0
    assert out == ""
    rows = out_path.read_text().splitlines()
    assert len(rows) == 1 + 2 * 2 * 4


def test_usage_error_exit_2():
    # argparse rejects the unknown collective with SystemExit(2)
    with pytest.raises(SystemExit) as err:
        main(["run", "-p", "4", "--collective", "bogus"])
    assert err.value.code == 2


def test_module_entrypoint():
    proc = subprocess.run(
        [sys.executable, "-m", "ccsim", "schedule", "-p", "22"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "skips: 11 6 3 2 1" in proc.stdout
