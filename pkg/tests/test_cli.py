"""Command-line interface tests (exit codes, schemas, determinism)."""

import xml.etree.ElementTree as ET

import pytest

from uwsnsim.cli import main
from uwsnsim.configfile import ConfigError, format_config, parse_config
from uwsnsim.svgplot import line_chart

ENDEMIC = ["--b", "0.33", "--l", "0.017", "--m", "0.0018", "--c", "0.035"]


@pytest.fixture
def path3(tmp_path):
    p = tmp_path / "path3.txt"
    p.write_text("1 2\n2 3\n")
    return str(p)


def test_ode_vital_header_reports_r0(capsys, tmp_path):
    out = tmp_path / "t.csv"
    rc = main(["ode", "--model", "sir-vital", *ENDEMIC,
               "--horizon", "10", "--out", str(out)])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    r0_line = next(l for l in lines if l.startswith("R0"))
    assert abs(float(r0_line.split("=")[1]) - 84.69) <= 0.01
    assert any("endemic" in l and "attractive" in l for l in lines)
    header = out.read_text().splitlines()[0]
    assert header == "t,s,i,r,s_sleep,i_sleep,r_sleep"


def test_ode_basic_peak_matches_closed_form(capsys, tmp_path):
    out = tmp_path / "t.csv"
    rc = main(["ode", "--model", "sir-basic", "--b", "0.4", "--c", "0.15",
               "--s0", "0.9", "--i0", "0.1", "--horizon", "100", "--out", str(out)])
    assert rc == 0
    rows = out.read_text().splitlines()[1:]
    peak = max(float(r.split(",")[2]) for r in rows)
    assert abs(peak - 0.2966992234922876) <= 1e-3


def test_ode_missing_rate_names_the_key(capsys):
    rc = main(["ode", "--model", "sir-basic", "--b", "0.4"])
    assert rc == 2
    assert "'c'" in capsys.readouterr().err


def test_ode_numeric_failure_exit_code(tmp_path):
    rc = main(["ode", "--model", "sir-vital", "--b", "5", "--c", "0.01",
               "--m", "0.01", "--l", "1.0", "--s0", "10", "--i0", "10",
               "--dt", "10", "--horizon", "10000"])
    assert rc == 3


def test_ode_svg_is_valid_xml(tmp_path):
    svg = tmp_path / "plot.svg"
    rc = main(["ode", "--model", "sir-basic", "--b", "0.4", "--c", "0.15",
               "--horizon", "10", "--svg", str(svg)])
    assert rc == 0
    root = ET.parse(svg).getroot()
    assert root.tag.endswith("svg")


def test_net_deterministic_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["net", "--seed", "1", "--topology", "complete"]
    assert main([*args, "--out", str(out1)]) == 0
    assert main([*args, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.read_text().splitlines()[0] == "# seed=1"


def test_net_horizon_zero_single_row(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["net", "--horizon", "0", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3  # seed echo + header + initial census


def test_mc_zero_runs_is_config_error(capsys):
    assert main(["mc", "--runs", "0"]) == 2


def test_mc_report_and_csv(capsys, tmp_path):
    out = tmp_path / "mc.csv"
    rc = main(["mc", "--runs", "20", "--seed", "3", "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "cohort R0<1" in text and "cohort R0>=1" in text
    assert out.read_text().splitlines()[0] == "run,l,m,c,b,R0,extinct,final_I,min_I_step"


def test_protocol_path3_verdicts(capsys, path3, tmp_path):
    trace = tmp_path / "trace.csv"
    rc = main(["protocol", "--graph", path3, "--informed-frac", "0",
               "--out", str(trace)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "initial moves = 3" in text and "bound 2n = 6" in text
    assert text.count("verdict") >= 5 and "FAIL" not in text
    assert trace.read_text().splitlines()[1].startswith("0,1,r2")


def test_protocol_attack_cycle(capsys, path3):
    rc = main(["protocol", "--graph", path3, "--informed-frac", "1.0",
               "--attack-rate", "1.0", "--seed", "2"])
    assert rc == 0
    assert "FAIL" not in capsys.readouterr().out


def test_protocol_synchronous_daemon(capsys, path3):
    rc = main(["protocol", "--graph", path3, "--daemon", "synchronous"])
    assert rc == 0
    assert "exploratory" in capsys.readouterr().out


def test_protocol_malformed_edge_list(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\nx y\n")
    rc = main(["protocol", "--graph", str(bad)])
    assert rc == 2
    assert "line 2" in capsys.readouterr().err


def test_protocol_determinism(capsys, tmp_path, path3):
    t1, t2 = tmp_path / "t1.csv", tmp_path / "t2.csv"
    args = ["protocol", "--graph", path3, "--informed-frac", "0.5",
            "--attack-rate", "0.7", "--seed", "9", "--tie-break", "seeded-random"]
    assert main([*args, "--out", str(t1)]) == 0
    assert main([*args, "--out", str(t2)]) == 0
    assert t1.read_bytes() == t2.read_bytes()


def test_config_file_drives_and_flags_override(capsys, tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("model = sir-basic\nb = 0.4\nc = 0.15\nhorizon = 5\n")
    rc = main(["ode", "--config", str(cfg)])
    assert rc == 0
    # Flag overrides the file: c=0.4 makes R0 = 1.
    rc = main(["ode", "--config", str(cfg), "--c", "0.4"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "R0 = 1.0000" in out


def test_config_unknown_key_rejected(capsys, tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("model = sir-basic\nb = 0.4\nc = 0.15\nbogus = 1\n")
    assert main(["ode", "--config", str(cfg)]) == 2
    assert "bogus" in capsys.readouterr().err


def test_config_parse_diagnostics():
    with pytest.raises(ConfigError) as err:
        parse_config("a = 1\n  broken line\n")
    assert err.value.line == 2 and err.value.col == 3
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("a = 1\na = 2\n")


def test_config_roundtrip():
    doc = "model = sir-vital\nb = 0.33\n# note\nl = 0.017\n"
    values = parse_config(doc)
    assert parse_config(format_config(values)) == values


def test_help_lists_units(capsys):
    with pytest.raises(SystemExit):
        main(["ode", "--help"])
    text = capsys.readouterr().out
    assert "1/time" in text and "--seed" in text


def test_config_rejects_bad_key_characters():
    with pytest.raises(ConfigError, match="invalid key"):
        parse_config("bad key = 1\n")


def test_svg_degenerate_series_still_valid(tmp_path):
    flat = tmp_path / "flat.svg"
    line_chart([("flat", [0, 1, 2], [0.5, 0.5, 0.5])], "t", "x", "y", flat)
    ET.parse(flat)
    empty = tmp_path / "empty.svg"
    line_chart([], "t", "x", "y", empty)
    ET.parse(empty)


def test_mc_respects_thread_env(monkeypatch, tmp_path):
    serial, parallel = tmp_path / "s.csv", tmp_path / "p.csv"
    args = ["mc", "--runs", "16", "--seed", "4", "--horizon", "20"]
    monkeypatch.setenv("UWSN_THREADS", "1")
    assert main([*args, "--out", str(serial)]) == 0
    monkeypatch.setenv("UWSN_THREADS", "3")
    assert main([*args, "--out", str(parallel)]) == 0
    assert serial.read_bytes() == parallel.read_bytes()
