from __future__ import annotations

import csv
import io
import json
import math
import subprocess
import sys

import pytest

from nkpoly import cli
from nkpoly.errors import ConfigError
from nkpoly.families import ParamSet
from nkpoly.identities import Evaluation, IdentityDescriptor, core, list_identities


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def fixed_clock(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    monkeypatch.delenv(cli.SUITE_ENV, raising=False)


@pytest.fixture
def broken_identity():
    def ev(P, v):
        return Evaluation(1.0, 1.0, oracle=(1.0, 1.5))

    desc = IdentityDescriptor("zz_cli_broken", "transform", "scalar", "oracles disagree", ev, lambda: [ParamSet()])
    core._REGISTRY[desc.id] = desc
    yield desc.id
    del core._REGISTRY[desc.id]


class TestFormatting:
    @pytest.mark.parametrize("x, text", [
        (2.0, "2.0000000000000000"),
        (1.0, "1.0000000000000000"),
        (-0.5, "-0.50000000000000000"),
        (0.1, "0.10000000000000001"),
        (123.25, "123.25000000000000"),
        (2.0 ** -30, "9.3132257461547852e-10"),
        (2.0 ** 70, "1.1805916207174113e+21"),
    ])
    def test_fmt17(self, x, text):
        assert cli.fmt17(x) == text
        assert float(text) == x

    def test_fmt17_roundtrips(self):
        for x in (math.pi, -math.e, 1 / 3, 2.0 ** -30, 6.02e23, 5e-324):
            assert float(cli.fmt17(x)) == x

    def test_json_nonfinite_is_null(self):
        assert json.loads(cli.dump_json({"a": math.nan, "b": [math.inf, 1.5]})) == {"a": None, "b": [None, 1.5]}

    def test_csv_rfc4180(self):
        text = cli.dump_csv(("a", "b"), [(1, 'x,"y"'), (0.5, None)])
        assert text == 'a,b\r\n1,"x,""y"""\r\n0.50000000000000000,\r\n'


class TestEval:
    def test_fnkp1_hand_value(self, capsys):
        code, out, _ = run(capsys, "eval", "--family", "fnkp1", "--p", "5", "--q", "0", "--nu", "1", "--s", "1",
                           "--t", "2", "--w", "0.5")
        assert code == 0 and out == "2.0000000000000000\n"

    def test_constraint_exit_2(self, capsys):
        code, out, err = run(capsys, "eval", "--family", "fnkp1", "--p", "5", "--q", "0", "--nu", "1", "--s", "2",
                             "--t", "1", "--w", "0")
        assert code == 2 and out == ""
        assert "s < (p" in err

    def test_konhauser_z(self, capsys):
        code, out, _ = run(capsys, "eval", "--family", "kz", "--chi", "0", "--nu", "2", "--s", "1", "--w", "1")
        assert code == 0 and float(out) == 1.0

    def test_unknown_family_exit_2(self, capsys):
        code, _, err = run(capsys, "eval", "--family", "nope")
        assert code == 2 and "unknown family" in err

    def test_rational_flag(self, capsys):
        code, out, _ = run(capsys, "eval", "--family", "fnkp1", "--p", "9", "--q", "3/4", "--s", "0")
        assert code == 0
        assert float(out) == pytest.approx(1 / math.gamma(1.75), rel=1e-15)

    def test_bad_rational_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["eval", "--family", "kz", "--chi", "x/y"])
        assert exc.value.code == 2


class TestCoeffs:
    def rows(self, out):
        return list(csv.reader(io.StringIO(out)))

    def test_fnkp1_s0(self, capsys):
        code, out, _ = run(capsys, "coeffs", "--family", "fnkp1", "--p", "5", "--q", "0", "--s", "0", "--format", "csv")
        assert code == 0
        rows = self.rows(out)
        assert rows[0] == ["a_num", "a_den", "b_num", "b_den", "coeff"]
        assert [r[:4] for r in rows[1:]] == [["0", "1", "0", "1"]]
        assert float(rows[1][4]) == 1.0

    def test_fnkp1_s1(self, capsys):
        code, out, _ = run(capsys, "coeffs", "--family", "fnkp1", "--p", "5", "--q", "0", "--nu", "1", "--s", "1",
                           "--format", "csv")
        got = {(int(r[0]), int(r[2])): float(r[4]) for r in self.rows(out)[1:]}
        assert code == 0 and got == {(1, 0): 3.0, (1, 1): -3.0, (0, 0): -1.0}

    def test_finite_n(self, capsys):
        code, out, _ = run(capsys, "coeffs", "--family", "finite_n", "--p", "5", "--s", "1", "--format", "csv")
        got = {(int(r[0]), int(r[2])): float(r[4]) for r in self.rows(out)[1:]}
        assert code == 0 and got == {(1, 0): 3.0, (0, 0): -1.0}

    def test_json_and_output_file(self, capsys, tmp_path):
        target = tmp_path / "c.json"
        code, out, _ = run(capsys, "coeffs", "--family", "finite_n", "--p", "5", "--s", "1", "--output", str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())

    def test_rational_exponents_in_csv(self, capsys):
        code, out, _ = run(capsys, "coeffs", "--family", "genlk", "--q", "1/2", "--nu", "1", "--s", "1",
                           "--format", "csv")
        assert code == 0
        assert len(self.rows(out)) > 1


class TestQuad:
    def test_n1(self, capsys):
        code, out, _ = run(capsys, "quad", "--n", "1")
        d = json.loads(out)
        assert code == 0
        assert d["nodes"] == [pytest.approx(1.0, abs=1e-15)]
        assert d["weights"] == [pytest.approx(1.0, abs=1e-15)]
        assert d["moment_self_test"] < 1e-14

    def test_n2_closed_form(self, capsys):
        code, out, _ = run(capsys, "quad", "--n", "2", "--alpha", "0")
        d = json.loads(out)
        assert code == 0
        assert d["nodes"] == pytest.approx([2 - math.sqrt(2), 2 + math.sqrt(2)], rel=1e-14)

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "quad", "--n", "3", "--alpha", "0.5", "--format", "csv")
        rows = list(csv.reader(io.StringIO(out)))
        assert code == 0 and rows[0] == ["i", "node", "weight"] and len(rows) == 4

    @pytest.mark.parametrize("argv", [("--n", "0"), ("--n", "257"), ("--n", "4", "--alpha", "-1")])
    def test_range_exit_2(self, capsys, argv):
        code, out, err = run(capsys, "quad", *argv)
        assert code == 2 and out == "" and err.startswith("error:")


class TestVerifyExitCodes:
    def test_discrepancy_is_not_failure(self, capsys, fixed_clock):
        code, out, _ = run(capsys, "verify", "--identity", "rel_ngenl")
        assert code == 0
        assert "discrepancies:" in out
        assert "rel_ngenl" in out.split("discrepancies:")[1]

    def test_clean_pass(self, capsys, fixed_clock):
        code, out, _ = run(capsys, "verify", "--identity", "rec_1", "--identity", "rec_11")
        assert code == 0
        assert "discrepancies:" not in out
        assert out.splitlines()[0].startswith("identity")

    def test_fail_exit_1(self, capsys, fixed_clock):
        code, out, _ = run(capsys, "verify", "--identity", "fnkp_biorth", "--grid", "p=9", "--grid", "q=0",
                           "--grid", "upsilon=1")
        assert code == 1
        total = out.splitlines()[-1].split()
        assert total[0] == "total" and int(total[4]) > 0

    def test_infra_exit_4(self, capsys, fixed_clock, broken_identity):
        code, _, _ = run(capsys, "verify", "--identity", broken_identity)
        assert code == 4

    def test_infra_outranks_fail(self, capsys, fixed_clock, broken_identity):
        code, _, _ = run(capsys, "verify", "--identity", broken_identity, "--identity", "fnkp_biorth",
                         "--grid", "p=9", "--grid", "q=0", "--grid", "upsilon=1")
        assert code == 4

    def test_missing_config_exit_3(self, capsys, tmp_path):
        code, _, err = run(capsys, "verify", "--config", str(tmp_path / "missing.toml"))
        assert code == 3 and "cannot read config" in err

    def test_unknown_key_exit_3(self, capsys, tmp_path):
        path = tmp_path / "s.toml"
        path.write_text('identities = ["rec_1"]\ncolour = "blue"\n')
        code, _, err = run(capsys, "verify", "--config", str(path))
        assert code == 3 and "colour" in err

    def test_unknown_identity_exit_3(self, capsys):
        code, _, err = run(capsys, "verify", "--identity", "rec_99")
        assert code == 3 and "rec_99" in err

    def test_unparseable_config_exit_3(self, capsys, tmp_path):
        path = tmp_path / "s.cfg"
        path.write_text("[[[ not a config")
        code, _, _ = run(capsys, "verify", "--config", str(path))
        assert code == 3

    @pytest.mark.parametrize("override", ["p", "p=", "zeta=1,2", "p=1,x"])
    def test_bad_grid_override_exit_3(self, capsys, override):
        code, _, _ = run(capsys, "verify", "--identity", "rec_1", "--grid", override)
        assert code == 3


class TestVerifyOutputs:
    def test_json_report(self, capsys, tmp_path, fixed_clock):
        target = tmp_path / "r.json"
        code, _, _ = run(capsys, "verify", "--identity", "rel_ngenl", "--output", str(target))
        d = json.loads(target.read_text())
        assert code == 0
        assert d["timestamp"] == "2023-11-14T22:13:20Z"
        assert {r["id"] for r in d["results"]} == {"rel_ngenl"}
        assert d["discrepancies"][0]["variant"]

    def test_csv_report(self, capsys, tmp_path, fixed_clock):
        target = tmp_path / "r.csv"
        code, _, _ = run(capsys, "verify", "--identity", "rec_1", "--format", "csv", "--output", str(target))
        raw = target.read_bytes()
        rows = list(csv.reader(io.StringIO(raw.decode())))
        assert code == 0
        assert b"\r\n" in raw
        assert tuple(rows[0]) == cli.REPORT_COLUMNS
        assert {r[2] for r in rows[1:]} <= {"exact_pass", "tol_pass"}

    def test_toml_config(self, capsys, tmp_path, fixed_clock):
        cfg = tmp_path / "s.toml"
        out = tmp_path / "r.csv"
        cfg.write_text(f'name = "t"\nidentities = ["rec_1"]\nformat = "csv"\noutput = "{out.as_posix()}"\n'
                       '[grids]\ns = [1, 2]\n')
        code, _, _ = run(capsys, "verify", "--config", str(cfg))
        rows = list(csv.reader(io.StringIO(out.read_text())))
        assert code == 0
        assert {r[1].split(";")[3] for r in rows[1:]} == {"s=1", "s=2"}

    def test_json_config(self, capsys, tmp_path, fixed_clock):
        cfg = tmp_path / "s.json"
        out = tmp_path / "r.json"
        cfg.write_text(json.dumps({"name": "j", "identities": ["rec_11"], "output": str(out)}))
        code, _, _ = run(capsys, "verify", "--config", str(cfg))
        assert code == 0
        assert json.loads(out.read_text())["suite"] == "j"

    def test_env_suite_path(self, capsys, tmp_path, monkeypatch):
        cfg = tmp_path / "env.json"
        out = tmp_path / "r.json"
        cfg.write_text(json.dumps({"name": "from-env", "identities": ["rec_1"], "output": str(out)}))
        monkeypatch.setenv(cli.SUITE_ENV, str(cfg))
        code, _, _ = run(capsys, "verify")
        assert code == 0
        assert json.loads(out.read_text())["suite"] == "from-env"

    def test_env_suite_path_missing(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.SUITE_ENV, str(tmp_path / "gone.toml"))
        code, _, _ = run(capsys, "verify")
        assert code == 3

    def test_byte_determinism(self, capsys, tmp_path, fixed_clock):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        argv = ("verify", "--identity", "rel_ngenl", "--identity", "laplace_1d")
        run(capsys, *argv, "--output", str(a))
        run(capsys, *argv, "--output", str(b), "--jobs", "2")
        assert a.read_bytes() == b.read_bytes()

    def test_subprocess_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "nkpoly", "eval", "--family", "kz", "--chi", "0", "--nu", "2",
                               "--s", "1", "--w", "1"], capture_output=True, text=True)
        assert proc.returncode == 0 and proc.stdout == "1.0000000000000000\n"


class TestSuiteConfig:
    def test_defaults(self):
        cfg = cli.SuiteConfig.from_mapping({})
        assert cfg.identities == "all" and cfg.format == "json" and cfg.output is None

    @pytest.mark.parametrize("data", [
        {"format": "xml"},
        {"identities": 3},
        {"grids": {"p": 9}},
        {"grids": {"zeta": [1]}},
        {"tolerances": {"rec_1": -1}},
        [],
    ])
    def test_rejects(self, data):
        with pytest.raises(ConfigError):
            cli.SuiteConfig.from_mapping(data)

    def test_overrides_do_not_leak(self, capsys, fixed_clock):
        run(capsys, "verify", "--identity", "rec_1", "--grid", "s=1")
        assert cli.SuiteConfig.from_mapping({}).grids == {}

    def test_grid_override_parsing(self):
        from fractions import Fraction

        assert cli.parse_grid_override("q=0,3/4,0.5") == ("q", [0, Fraction(3, 4), 0.5])


def test_verify_all_covers_catalog(full_report):
    report, _ = full_report
    assert set(report.identity_ids()) == {d.id for d in list_identities()}
