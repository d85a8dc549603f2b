import csv
import io
import json

import pytest

from johnlimits.cli import main
from johnlimits.generators import segment
from johnlimits.metric import save_domain
from johnlimits.pipeline import OUT_ENV, RunConfig, run_pipeline


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_generate_disc_writes_domain_with_exponent_two(tmp_path):
    code, out, _ = run(["generate", "--domain", "disc", "--eps", "1/32", "--out", str(tmp_path)])
    assert code == 0
    summary = json.loads(out)
    assert summary["q"] == 2.0 and summary["epsilon"] == "1/32"
    dom = json.loads((tmp_path / "domain.json").read_text())
    assert dom["q"] == 2.0 and dom["epsilon"] == "1/32"
    assert json.loads((tmp_path / "map.json").read_text())["map"] == "identity"


def test_generate_cusp_suggests_square_root_gauge(tmp_path):
    code, out, _ = run(["generate", "--domain", "cusp", "--s", "2", "--eps", "1/32", "--out", str(tmp_path)])
    summary = json.loads(out)
    assert code == 0 and summary["phi_length_john"] is True
    assert summary["john"]["phi"] == "power" and summary["john"]["exponent"] == 0.5


@pytest.mark.parametrize("flag, name", [("--domain", "blob"), ("--map", "warp")])
def test_unknown_names_exit_nonzero(tmp_path, flag, name):
    code, _, err = run(["generate", flag, name, "--out", str(tmp_path)])
    assert code == 2 and name in err


def test_invalid_whitney_parameters_are_rejected_before_building(tmp_path):
    code, _, err = run(["decompose", "--eps", "1/32", "--a", "3", "--out", str(tmp_path / "x")])
    assert code == 2 and "bad-parameter" in err
    assert not (tmp_path / "x").exists()


def test_decompose_writes_cube_exports(tmp_path):
    code, out, _ = run(["decompose", "--domain", "square", "--eps", "1/32", "--out", str(tmp_path)])
    assert code == 0
    sec = json.loads(out)
    assert all(v == 0 for v in sec["whitney_check"].values())
    assert (tmp_path / "whitney.jsonl").exists() and (tmp_path / "cubes.jsonl").exists()


def test_missing_curves_exit_one_naming_the_invariant(tmp_path):
    code, _, err = run(["curves", "--domain", "cusp", "--eps", "1/32", "--phi", "identity", "--c", "1", "--out", str(tmp_path)])
    assert code == 1
    assert "curves/no-john-curve witness=" in err


def test_report_bundle_and_byte_identical_reruns(tmp_path):
    runs = []
    for name in ("a", "b"):
        code, out, _ = run(["report", "--domain", "square", "--eps", "1/32", "--out", str(tmp_path / name)])
        assert code == 0 and json.loads(out)["violations"] == []
        runs.append(tmp_path / name)
    expected = {
        "report.json", "domain.json", "domain_points.csv", "whitney.jsonl", "curves.json", "level_sums.csv",
        "traces.csv", "gauges.csv", "content.csv", "shadows.json", "whitney.svg", "curves.svg", "shadows.svg",
    }
    assert expected <= {p.name for p in runs[0].iterdir()}
    for name in expected:
        assert (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes(), name


def test_slit_disc_angle_map_reports_non_unique_with_exit_zero(tmp_path):
    code, out, _ = run(
        ["report", "--domain", "slit-disc", "--map", "angle", "--uniqueness-point", "1,0", "--eps", "1/32", "--out", str(tmp_path)]
    )
    assert code == 0
    assert json.loads(out)["uniqueness"] == "non-unique"
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["uniqueness"]["uniform_hypothesis"] is False


def test_config_file_overrides_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"domain": "disc", "eps": "1/32"}))
    code, out, _ = run(["generate", "--domain", "square", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 0 and json.loads(out)["domain"] == "disc"


def test_unknown_config_keys_are_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"domian": "disc"}))
    code, _, err = run(["generate", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 2 and "bad-config" in err


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    code, _, _ = run(["generate", "--eps", "1/32"])
    assert code == 0 and (tmp_path / "env" / "domain.json").exists()


def test_gauges_csv_output(tmp_path):
    code, out, _ = run(["gauges", "--h", "log", "--param", "3", "--variant", "uniqueness", "--format", "csv", "--out", str(tmp_path)])
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and rows[0]["finite"] == "True"
    assert float(rows[0]["value"]) == pytest.approx(1.5, rel=1e-6)


def test_uniqueness_subcommand(tmp_path):
    code, out, _ = run(["uniqueness", "--domain", "disc", "--map", "square-z", "--eps", "1/32", "--scales", "1/8,1/16", "--out", str(tmp_path)])
    rep = json.loads(out)
    assert code == 0 and len(rep["scales"]) == 2 and rep["verdict"] in ("unique", "non-unique")


def test_render_is_byte_stable(tmp_path):
    bundle = tmp_path / "bundle"
    assert run(["report", "--domain", "disc", "--eps", "1/32", "--out", str(bundle)])[0] == 0
    first, second = tmp_path / "r1", tmp_path / "r2"
    for target in (first, second):
        code, out, _ = run(["render", str(bundle), "--out", str(target)])
        assert code == 0 and len(json.loads(out)["written"]) == 3
    for name in ("whitney.svg", "curves.svg", "shadows.svg"):
        a = (first / name).read_bytes()
        assert a == (second / name).read_bytes() == (bundle / name).read_bytes()
        assert a.startswith(b"<svg")
    assert b"level " in (first / "whitney.svg").read_bytes()
    assert b"<polyline" in (first / "curves.svg").read_bytes()


def test_render_refuses_non_planar_input(tmp_path):
    save_domain(segment(1 / 32), tmp_path, "domain")
    code, _, err = run(["render", str(tmp_path)])
    assert code == 2 and "no-coordinates" in err


def test_run_pipeline_api_matches_cli_exit_discipline():
    report, code = run_pipeline(RunConfig(domain="square", eps="1/32", qh_pairs=5), write=False)
    assert code == 0 and report["ok"] and report["violations"] == []
