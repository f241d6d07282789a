import csv
import io
import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gordonlab.cli import RunConfig, main
from gordonlab.dsl import DSLSemanticError, canonical, parse_potential
from gordonlab.errors import DSLSyntaxError
from gordonlab.potentials import PowerSingular, Smooth, Step, Sum
from gordonlab.reporting import GORDON_COLUMNS, WITNESS_COLUMNS, fmt_float, write_atomic


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


# --- DSL -------------------------------------------------------------------------


def test_parse_examples():
    p = parse_potential("step{0:1, 1/2:0}")
    assert isinstance(p, Step) and p.values == (1, 0)
    s = parse_potential("2*cos(1, 1, 0) + sing(1/2, 1)")
    assert isinstance(s, Sum)
    kinds = sorted(type(t).__name__ for _, t in s.terms)
    assert kinds == ["PowerSingular", "Smooth"]
    assert float(s.eval(Fraction(1, 4))) == pytest.approx(2.0, abs=1e-12)
    assert parse_potential("zero").eval(Fraction(1, 3)) == 0


def test_parse_errors_carry_position():
    with pytest.raises(DSLSemanticError) as info:
        parse_potential("step{1/2:0, 0:1}")
    assert "not increasing" in str(info.value) and info.value.line == 1
    with pytest.raises(DSLSyntaxError) as info:
        parse_potential("cos(1, 1 0)")
    assert info.value.column == 10 and "','" in info.value.expected
    with pytest.raises(DSLSyntaxError) as info:
        parse_potential("zero +\n  bump(1)")
    assert (info.value.line, info.value.column) == (2, 3)
    with pytest.raises(DSLSemanticError):
        parse_potential("sing(3/2, 1)")
    with pytest.raises(DSLSyntaxError):
        parse_potential("step{0:1/0}")


@st.composite
def steps(draw):
    cuts = sorted(draw(st.sets(st.fractions(Fraction(1, 97), Fraction(96, 97), max_denominator=97), max_size=3)))
    vals = draw(st.lists(st.fractions(-9, 9, max_denominator=5), min_size=len(cuts) + 1, max_size=len(cuts) + 1))
    return Step(tuple([Fraction(0)] + cuts), tuple(vals))


atoms = st.one_of(
    steps(),
    st.builds(lambda k, a, ph: Smooth.cos(k, a, ph), st.integers(0, 4), st.fractions(-3, 3, max_denominator=4), st.fractions(-1, 1, max_denominator=6)),
    st.builds(PowerSingular, st.fractions(Fraction(1, 20), Fraction(19, 20), max_denominator=20), st.fractions(Fraction(1, 4), 4, max_denominator=4)),
)


@given(st.lists(st.tuples(st.fractions(-4, 4, max_denominator=3).filter(bool), atoms), min_size=1, max_size=3))
def test_dsl_round_trip(terms):
    p = Sum.of(terms)
    text = p.to_dsl()
    again = parse_potential(text)
    assert again.to_dsl() == text
    for x in (Fraction(1, 7), Fraction(3, 11), Fraction(5, 13)):
        assert float(again.eval(x)) == pytest.approx(float(p.eval(x)), rel=1e-12, abs=1e-12)


def test_canonical_is_idempotent():
    for text in ("step{0:1,1/2:0}", " 2 * cos(1,1,0)+sing(0.5,1) ", "zero"):
        c = canonical(text)
        assert canonical(c) == c


# --- config ----------------------------------------------------------------------


def test_config_round_trip():
    cfg = RunConfig(
        command="gordon",
        v2="step{0:1,1/2:0}",
        theta="2/4",
        energies=[-1, 0.5],
        bigC=[1, 2],
        m_range=(1, 3),
    ).validate()
    again = RunConfig.from_json(cfg.to_json())
    assert again == cfg
    assert again.to_json() == cfg.to_json()
    assert cfg.theta == "1/2"


def test_dump_config_matches_flags():
    code, out, _ = run_cli("gordon", "--v2", "step{0:1,1/2:0}", "--bigC", "1,2", "--dump-config")
    assert code == 0
    cfg = RunConfig.from_json(out)
    assert cfg.v2 == "step{0:1, 1/2:0}" and cfg.bigC == [1.0, 2.0]


def test_config_file(tmp_path):
    cfg = RunConfig(command="cf", rational="5/7").validate()
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    code, out, _ = run_cli("cf", "--config", str(path))
    assert code == 0 and out.strip() == "[1, 2, 2]"


# --- subcommands -------------------------------------------------------------------


def test_cf_rational():
    code, out, _ = run_cli("cf", "--rational", "5/7")
    assert code == 0 and json.loads(out) == [1, 2, 2]


def test_cf_table_and_certificate():
    code, out, _ = run_cli("cf", "--m-range", "1..3", "--expect-liouville")
    assert code == 0
    rows = read_csv(out)
    assert [r["q_m"] for r in rows] == ["1", "3", "25"]
    assert all(r["certified"] == "true" for r in rows)


def test_gordon_csv_schema():
    code, out, _ = run_cli("gordon", "--bigC", "1")
    assert code == 0
    rows = read_csv(out)
    assert list(rows[0].keys()) == GORDON_COLUMNS
    assert len(rows) == 3
    assert rows[2]["q_m"] == "25" and rows[2]["osc_bound"] == "" and rows[2]["sing_bound"] == ""
    assert float(rows[0]["I_m"]) == pytest.approx(1.4411764705882353, rel=1e-15)


def test_gordon_json_and_holder(tmp_path):
    out = tmp_path / "g.json"
    code, _, _ = run_cli("gordon", "--holder", "4,1", "--format", "json", "--out", str(out))
    assert code == 0
    data = json.loads(out.read_text())
    rows = data["gordon"][0]["rows"]
    assert all(float(r["osc_bound"]) >= float(r["I_m"]) for r in rows)
    assert rows[0]["I_m_exact"] == "41517141862713/28807812721066"


def test_witness_csv_schema():
    code, out, _ = run_cli("witness", "--energies", "0.5", "--m-range", "3..3")
    assert code == 0
    rows = read_csv(out)
    assert list(rows[0].keys()) == WITNESS_COLUMNS
    assert {r["witness_x"] for r in rows} <= {"-25", "25", "50"}
    assert all(r["pass"] == "true" for r in rows)


def test_witness_zero_v2():
    code, out, _ = run_cli("witness", "--v2", "zero", "--format", "json")
    assert code == 0
    rep = json.loads(out)["witness"][0]
    assert all(r["sup_diff_sampled"] == 0 and r["witnesses"] for r in rep["rows"])


def test_monodromy_rows():
    code, out, _ = run_cli("monodromy", "--energies=-1,0.5,2", "--m-range", "1..2")
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 6
    assert all(abs(float(r["det"]) - 1) < 1e-8 for r in rows)


def test_plots_are_svg(tmp_path):
    for kind in ("gordon", "profile"):
        path = tmp_path / f"{kind}.svg"
        code, _, _ = run_cli("plot", "--kind", kind, "--m-range", "1..2", "--out", str(path))
        assert code == 0
        root = ET.parse(path).getroot()
        assert root.tag.endswith("svg")
        assert root.findall("{http://www.w3.org/2000/svg}polyline")


# --- exit codes --------------------------------------------------------------------


def test_exit_invariant_violation():
    code, _, err = run_cli("cf", "--alpha", "golden", "--m-range", "1..8", "--expect-liouville")
    assert code == 2
    assert "Liouville bound" in err and '"alpha": "golden"' in err


def test_exit_resource_budget(monkeypatch):
    monkeypatch.setenv("GORDONLAB_DIGIT_BUDGET", "5")
    code, _, err = run_cli("cf")
    assert code == 3 and "order 3" in err


def test_exit_usage_errors():
    assert run_cli("nope")[0] == 1
    assert run_cli("gordon", "--v2", "step{1/2:0, 0:1}")[0] == 1
    assert run_cli("gordon", "--alpha", "cf:")[0] == 1
    assert run_cli("gordon", "--m-range", "3..1")[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gordonlab", "cf", "--rational", "5/7"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "[1, 2, 2]"


def test_pure_python_backend_selected():
    env = dict(os.environ, GORDONLAB_PURE_PYTHON="1")
    code = "import gordonlab.kernels as k; print(k.BACKEND)"
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert proc.stdout.strip() == "python"


# --- reporting helpers ---------------------------------------------------------------


def test_float_format():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(None) == ""
    assert fmt_float(float("inf")) == "inf"


def test_atomic_write_replaces(tmp_path):
    path = tmp_path / "sub" / "out.csv"
    write_atomic(path, "a\n")
    write_atomic(path, "b\n")
    assert path.read_text() == "b\n"
    assert sorted(os.listdir(path.parent)) == ["out.csv"]
