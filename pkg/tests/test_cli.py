from __future__ import annotations

import io
import json

import pytest

from cfml import cli, pressure
from cfml.errors import NumericalFailure

SQRT = '{"form": "power", "c": 1, "k": 0.5}'


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def write_config(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_sn_single_letter(tmp_path):
    code, out, _ = run(["run", "--config", write_config(tmp_path, {"command": "sn", "params": {"n": 1, "M": 1, "B": 2}})])
    assert code == 0
    assert out.splitlines()[1].split(",")[-1] == repr(1 / 3)


def test_dimension_doubly(tmp_path):
    cfg = {"command": "dimension", "params": {"phi": {"form": "doubly", "c": 2.718281828, "b": 2}}}
    code, out, _ = run(["run", "--config", write_config(tmp_path, cfg)])
    assert code == 0
    row = out.splitlines()[1]
    assert ",0.3333333333333333," in row


def test_stochastic_needs_seed():
    code, _, err = run(["mc-measure", "--phi", SQRT, "--n", "64", "--samples", "100"])
    assert code == 2 and "seed" in err


def test_unknown_fields_rejected(tmp_path):
    assert run(["run", "--config", write_config(tmp_path, {"command": "sn", "params": {"n": 1, "M": 2, "B": 2, "x": 1}})])[0] == 2
    assert run(["run", "--config", write_config(tmp_path, {"command": "sn", "params": {}, "colour": 1})])[0] == 2
    assert run(["sn", "--bogus", "1"])[0] == 2


def test_missing_param_and_bad_domain():
    assert run(["sn", "--n", "1", "--M", "2"])[0] == 2
    assert run(["sn", "--n", "1", "--M", "2", "--B", "0.5"])[0] == 2
    assert run(["expand", "--x", "3/2"])[0] == 2


def test_cap_exit_code():
    assert run(["sn", "--n", "9", "--M", "8", "--B", "2"])[0] == 3


def test_numerical_failure_exit_code(monkeypatch):
    def boom(*a, **k):
        raise NumericalFailure("bracket failure")

    monkeypatch.setattr(pressure, "solve_sn", boom)
    assert run(["sn", "--n", "1", "--M", "2", "--B", "2"])[0] == 4


def test_flags_override_config(tmp_path):
    cfg = write_config(tmp_path, {"command": "sn", "params": {"n": 1, "M": 2, "B": 2}})
    code, out, _ = run(["sn", "--config", cfg, "--M", "1"])
    assert code == 0 and out.splitlines()[1].startswith("1,1,")


def test_config_command_mismatch(tmp_path):
    cfg = write_config(tmp_path, {"command": "sn", "params": {"n": 1, "M": 1, "B": 2}})
    assert run(["expand", "--config", cfg])[0] == 2


def test_expand_and_cylinder_output():
    code, out, _ = run(["expand", "--x", "113/355"])
    assert code == 0 and out == "index,digit\n1,3\n2,7\n3,16\n"
    code, out, _ = run(["cylinder", "--word", "[3,7,16]", "--M", "5"])
    assert code == 0 and "120/377,113/355,1/133835" in out


def test_series_command():
    code, out, err = run(["series", "--phi", '{"form": "power", "c": 1, "k": 2}'])
    assert code == 0 and out.splitlines()[1].startswith("convergent,")


def test_out_file_and_summary(tmp_path):
    dest = tmp_path / "sub" / "sn.csv"
    code, out, _ = run(["sn", "--n", "2", "--M", "2", "--B", "2", "--out", str(dest)])
    assert code == 0 and dest.read_text().startswith("n,M,B,tol,s\n")
    assert out.count("\n") == 1 and out.startswith("s_2")


@pytest.mark.parametrize(
    "argv",
    [
        ["mc-measure", "--phi", SQRT, "--n", "[16, 64]", "--samples", "9000", "--kind", "Eprime_n", "--table-limit", "1000000"],
        ["ce-ratio", "--phi", SQRT, "--N", "64", "--samples", "9000", "--table-limit", "1000000"],
    ],
)
def test_byte_identical_reruns(tmp_path, argv):
    outs = []
    for workers in (1, 3):
        dest = tmp_path / f"o{workers}.csv"
        assert run(argv + ["--seed", "17", "--workers", str(workers), "--out", str(dest)])[0] == 0
        outs.append(dest.read_bytes())
    assert outs[0] == outs[1]


def test_cantor_audit_json(tmp_path):
    dest = tmp_path / "audit.json"
    cfg = {
        "command": "cantor-audit",
        "params": {"Btilde": 2, "M": 2, "N": 1, "s": 0.6, "delta": 0.05, "ell": [4]},
        "out": str(dest),
    }
    code, out, _ = run(["run", "--config", write_config(tmp_path, cfg)])
    assert code == 0
    report = json.loads(dest.read_text())
    assert report["summary"]["mass_ok"] and report["warnings"]
    again = tmp_path / "again.json"
    assert run(["run", "--config", write_config(tmp_path, cfg), "--out", str(again)])[0] == 0
    assert again.read_bytes() == dest.read_bytes()
