import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from braneflow import cli, io
from braneflow.config import ENV_OUT, ConfigError, RunConfig, load, parse, parse_text, serialize


# -- config -----------------------------------------------------------------

floats = st.floats(0.01, 100, allow_nan=False)


@given(floats, st.lists(floats, min_size=1, max_size=5, unique=True), st.sampled_from(["paper", "model_Rv", "model_v"]))
def test_config_round_trip(u_star, times, kind):
    cfg = RunConfig(kind=kind, u_star=u_star, converge_times=tuple(sorted(times)))
    assert parse(serialize(cfg)) == cfg


def test_config_unknown_key_reports_location():
    with pytest.raises(ConfigError, match="run.cfg:3"):
        parse_text("# comment\nu_star = 2\nbogus = 1\n", "run.cfg")


def test_config_bad_value_and_syntax():
    with pytest.raises(ConfigError, match=":1"):
        parse_text("n_per_arc = many")
    with pytest.raises(ConfigError, match="expected"):
        parse_text("u_star 2")


@pytest.mark.parametrize(
    "kwargs",
    [dict(kind="x"), dict(u_star=-1.0), dict(window_min=2.0), dict(converge_times=(5.0, 2.0)), dict(field_r=(0.5,)), dict(formats=("png",)), dict(ss_w_star=1.0)],
)
def test_config_preconditions(kwargs):
    with pytest.raises(ConfigError):
        RunConfig(**kwargs)


def test_config_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("u_star = 2\nout_dir = from_file\nn_per_arc = 9\n")
    cfg = load(path, {"n_per_arc": "17"}, environ={ENV_OUT: "from_env"})
    assert (cfg.u_star, cfg.n_per_arc, cfg.out_dir) == (2.0, 17, "from_env")
    cfg = load(path, {"out_dir": "from_flag"}, environ={ENV_OUT: "from_env"})
    assert cfg.out_dir == "from_flag"
    with pytest.raises(ConfigError, match="cannot read"):
        load(tmp_path / "missing.cfg", environ={})


# -- serialization ----------------------------------------------------------


def test_csv_nulls_and_floats(tmp_path):
    p = io.write_csv(tmp_path / "a.csv", ("x", "y"), [(0.1, None), (np.float64(2.5), math.nan), (np.int64(3), "s")])
    assert p.read_text() == "x,y\n0.1,null\n2.5,null\n3,s\n"
    assert io.read_csv(p)[0] == {"x": "0.1", "y": "null"}


def test_json_schema_and_nulls(tmp_path):
    p = io.write_json(tmp_path / "a.json", {"v": [1.0, math.nan, None], "z": 1 + 2j, "a": np.arange(2)})
    d = json.loads(p.read_text())
    assert d["schema_version"] == io.SCHEMA_VERSION
    assert d["v"] == [1.0, None, None] and d["z"] == {"re": 1.0, "im": 2.0} and d["a"] == [0, 1]


def test_svg_valid_and_self_contained():
    u, v = np.meshgrid(np.linspace(-1, 1, 3), np.linspace(-1, 1, 3))
    for svg in (
        io.quiver_svg(u, v, np.ones_like(u), np.zeros_like(u), np.ones_like(u), title="a < b & c"),
        io.scatter_svg([0.0, math.nan, 5.0], [0.0, 0.0, 0.0], (-1, 1), (-1, 1), color_values=[1, 2, 3]),
    ):
        root = ET.fromstring(svg)
        assert root.tag.endswith("svg")
        assert "href" not in svg and "url(" not in svg


# -- commands ---------------------------------------------------------------


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_OUT, str(tmp_path / "out"))
    return tmp_path / "out"


def test_verify_default(capsys):
    assert cli.main(["verify"]) == 0
    text = capsys.readouterr().out
    assert text.count("PASS") >= 20 and "FAIL" not in text


def test_verify_json_and_perturbed(capsys):
    assert cli.main(["verify", "--json", "--perturb-f", "0.01"]) == 1
    d = json.loads(capsys.readouterr().out)
    assert d["schema_version"] == io.SCHEMA_VERSION and d["n_checks"] >= 20
    assert "ode_residual" in d["failed"]


def test_config_error_exit_code(tmp_path, capsys):
    assert cli.main(["verify", "--u-star", "-1"]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("nope = 1\n")
    assert cli.main(["field", "--config", str(bad)]) == 2
    assert "bad.cfg:1" in capsys.readouterr().err


def test_io_error_reports_path(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["field", "--out-dir", str(blocker / "sub"), "--field-r", "-1"]) == 3
    assert str(blocker) in capsys.readouterr().err


def test_field(out):
    assert cli.main(["field", "--field-n", "11"]) == 0
    rows = io.read_csv(out / "field_paper_rm2.csv")
    assert len(rows) == 121 and list(rows[0]) == ["u", "v", "du", "dv", "speed"]
    assert cli.field_direction_deviation(out / "field_paper_rm2.csv") < 0.15
    ET.parse(out / "field_paper_r0.svg")
    d = json.loads((out / "field_paper.json").read_text())
    assert len(d["direction_deviation"]) == 4


def test_field_model_concentric(out):
    assert cli.main(["field", "--kind", "model_Rv", "--field-r", "-1", "--formats", "csv"]) == 0
    rows = io.read_csv(out / "field_model_Rv_rm1.csv")
    # H = R v: flow is tangent to the level sets of R v, so (du, dv) . grad(R v) = 0
    for r in rows:
        u, v, du, dv = (float(r[k]) for k in ("u", "v", "du", "dv"))
        R = math.hypot(u, v)
        gu, gv = (u * v / R, R + v * v / R) if R else (0.0, 0.0)
        assert abs(du * gu + dv * gv) < 1e-12


def test_evolve_outputs_deterministic(out, tmp_path):
    args = ["evolve", "--eps-k-max", "3", "--n-per-arc", "9", "--evolve-times", "0,2.5,5", "--formats", "csv,json"]
    assert cli.main(args) == 0
    rows = io.read_csv(out / "evolve_t0.csv")
    assert list(rows[0]) == list(cli.EVOLVE_HEADER) and len(rows) == 36
    assert cli.seed_predicate(out / "evolve_t0.csv", 1.0)
    first = (out / "evolve_t5.csv").read_bytes()
    assert cli.main(args + ["--out-dir", str(tmp_path / "again")]) == 0
    assert (tmp_path / "again" / "evolve_t5.csv").read_bytes() == first
    pred = json.loads((out / "evolve_predicates.json").read_text())["predicates"]
    assert pred["seed_at_u_minus_ustar_theta_zero"] is True
    for name in ("proj_uvr_t5.csv", "proj_uthetar_t5.csv", "slice_t5.csv"):
        assert (out / name).exists()


def test_converge_nulls(out):
    assert cli.main(["converge", "--eps-k-max", "2", "--n-per-arc", "8", "--converge-times", "0,3"]) == 0
    text = (out / "converge.csv").read_text().splitlines()
    assert text[0] == ",".join(cli.CONVERGE_HEADER)
    assert text[1] == "0.0,null,null,null,0"
    d = json.loads((out / "converge.json").read_text())
    assert d["report"]["offset"][0] is None
    assert set(d["report"]) == {"times", "offset", "theta_gap", "hausdorff", "n_in_window", "window"}


def test_ss(out):
    assert cli.main(["ss"]) == 0
    rows = io.read_csv(out / "ss.csv")
    assert list(rows[0]) == list(cli.SS_HEADER)
    assert all(float(r["im_w_drift"]) < 1e-12 for r in rows)
    d = json.loads((out / "ss.json").read_text())
    assert d["stable_intersection"]["x"]["re"] == pytest.approx(-1.0)
    assert all(c["passed"] for c in d["checks"].values())
