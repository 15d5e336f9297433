import json
import time
from math import exp, inf, log, pi

import numpy as np
import pytest

from shrinkerlab.errors import ConfigError
from shrinkerlab.harness import cli
from shrinkerlab.harness.config import SUITES, RunConfig, load_config
from shrinkerlab.harness.report import report_digest, validate_report
from shrinkerlab.harness.suites import (
    gap_experiment, no_local_collapsing_suite, pseudo_locality_scale, run_suite,
    weighted_curvature_integrals, worker_count,
)
from shrinkerlab.models import make_model


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- configuration -------------------------------------------------------------

def test_json_and_toml_agree(tmp_path):
    a = load_config(write(tmp_path, "c.json", '{"seed": 3, "suites": ["geometry"]}'))
    b = load_config(write(tmp_path, "c.toml", 'seed = 3\nsuites = ["geometry"]\n'))
    assert a == b and a.seed == 3


def test_json_syntax_error_has_position(tmp_path):
    p = write(tmp_path, "bad.json", '{\n  "seed": 3,\n  oops\n}')
    with pytest.raises(ConfigError, match=r"bad\.json:3:3"):
        load_config(p)


def test_toml_syntax_error(tmp_path):
    with pytest.raises(ConfigError, match="TOML"):
        load_config(write(tmp_path, "bad.toml", "seed = = 3"))


def test_unknown_field_named(tmp_path):
    with pytest.raises(ConfigError, match="'sead'"):
        load_config(write(tmp_path, "c.json", '{"sead": 1}'))


def test_unknown_suite_lists_valid():
    with pytest.raises(ConfigError) as exc:
        RunConfig(suites=("geometry", "nonsense"))
    for s in SUITES:
        assert s in str(exc.value)


@pytest.mark.parametrize("data,field", [
    ({"tolerances": {"mass": -1}}, "tolerances.mass"),
    ({"tolerances": {"bogus": 1e-3}}, "tolerances.bogus"),
    ({"window_delta": 2.0}, "window_delta"),
    ({"panels": 2.5}, "panels"),
    ({"models": [3]}, "models"),
])
def test_field_diagnostics(data, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        RunConfig.from_mapping(data)


def test_bad_model_spec():
    cfg = RunConfig.from_mapping({"models": [{"kind": "gaussian"}]})
    with pytest.raises(ConfigError, match=r"models\[0\]"):
        cfg.build_models()


def test_worker_count():
    assert worker_count({"SHRINKERLAB_THREADS": "3"}) == 3
    assert 1 <= worker_count({}) <= 4
    for bad in ("0", "x", "-2"):
        with pytest.raises(ConfigError):
            worker_count({"SHRINKERLAB_THREADS": bad})


# -- report --------------------------------------------------------------------

def test_digest_ignores_volatile_fields():
    rep = {"a": 1.0, "timestamps": {"started": "x"}, "checks": [{"runtime": 0.1, "v": 2.0}]}
    other = {"a": 1.0, "timestamps": {"started": "y"}, "checks": [{"runtime": 9.9, "v": 2.0}]}
    assert report_digest(rep) == report_digest(other)
    assert report_digest(rep) != report_digest({**rep, "a": 1.0 + 1e-9})


def test_digest_key_order_irrelevant():
    assert report_digest({"a": 1, "b": [1.5, 2]}) == report_digest({"b": [1.5, 2], "a": 1})


@pytest.fixture(scope="module")
def gaussian_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = RunConfig(models=({"kind": "gaussian", "n": 2},), csv_dir=str(out / "csv"),
                    kernel_samples=40, harnack_samples=20)
    start = time.perf_counter()
    report, path = run_suite(cfg, out / "report.json")
    return cfg, report, path, time.perf_counter() - start


def test_gaussian_run_passes_quickly(gaussian_run):
    _, report, path, elapsed = gaussian_run
    assert report["summary"]["fail"] == 0, [c["id"] for c in report["checks"]
                                            if c["status"] == "fail"]
    assert elapsed < 60
    assert json.loads(path.read_text())["digest"] == report["digest"]


def test_report_schema_and_anchors(gaussian_run):
    _, report, _, _ = gaussian_run
    validate_report(report)
    assert all(c["anchor"] for c in report["checks"])
    assert report["digest"] == report_digest(report)


def test_report_csv_written(gaussian_run):
    cfg, _, _, _ = gaussian_run
    from pathlib import Path
    names = {p.name for p in Path(cfg.csv_dir).iterdir()}
    assert any(n.startswith("entropy_") for n in names)
    assert any(n.startswith("kernel_") for n in names)


def test_run_is_deterministic(tmp_path):
    cfg = RunConfig(models=({"kind": "sphere", "n": 2},), suites=("geometry", "lgeo", "gap"),
                    harnack_samples=10)
    a, _ = run_suite(cfg, tmp_path / "a.json", threads=1)
    b, _ = run_suite(cfg, tmp_path / "b.json", threads=3)
    assert a["digest"] == b["digest"]


def test_unwritable_output(tmp_path):
    blocker = write(tmp_path, "file", "")
    cfg = RunConfig(models=({"kind": "gaussian", "n": 2},), suites=("geometry",))
    with pytest.raises(ConfigError, match="cannot write"):
        run_suite(cfg, blocker / "sub" / "r.json")


# -- CLI -----------------------------------------------------------------------

def test_cli_catalog(capsys):
    assert cli.main(["catalog", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 8


def test_cli_heat_kernel_matches_closed_form(capsys):
    code = cli.main(["heat-kernel", "--model", "gaussian:2", "--x", "1,0", "--t", "0.5",
                     "--y", "0,0", "--s", "0"])
    assert code == 0
    h = json.loads(capsys.readouterr().out)["H"]
    assert h == pytest.approx(exp(-0.5) / (2 * pi))


def test_cli_reduced_distance(capsys):
    assert cli.main(["reduced-distance", "--model", "gaussian:3", "--x", "2,0,0", "--t", "0.5",
                     "--y", "0,0,0", "--s", "-0.5", "--exact"]) == 0
    assert json.loads(capsys.readouterr().out)["closed_form"] == pytest.approx(1.0)


def test_cli_entropy_profile(tmp_path, capsys):
    csv = tmp_path / "p.csv"
    assert cli.main(["entropy-profile", "--model", "sphere:2", "--tau-min", "0.5",
                     "--tau-max", "2", "--points", "3", "--csv", str(csv)]) == 0
    assert json.loads(capsys.readouterr().out)["decreasing_below_one"]
    assert csv.read_text().startswith("tau,")


@pytest.mark.parametrize("argv", [
    ["check", "nonsense"],
    ["heat-kernel", "--model", "torus:3", "--x", "0", "--t", "0.5", "--y", "0", "--s", "0"],
    ["heat-kernel", "--model", "gaussian:2", "--x", "1", "--t", "0.5", "--y", "0,0",
     "--s", "0"],
    ["entropy-profile", "--model", "sphere:2", "--tau-min", "2", "--tau-max", "1"],
])
def test_cli_usage_errors_exit_two(argv, capsys):
    assert cli.main(argv) == 2
    assert "error" in capsys.readouterr().err.lower()


def test_cli_check_writes_report(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", json.dumps(
        {"models": [{"kind": "cylinder", "n": 3, "k": 2}]}))
    out = tmp_path / "r.json"
    assert cli.main(["check", "geometry", "--config", str(cfg), "--out", str(out),
                     "--quiet"]) == 0
    assert json.loads(out.read_text())["summary"]["fail"] == 0


def test_cli_bad_config_exit_two(tmp_path):
    cfg = write(tmp_path, "c.json", '{"suites": ["bogus"]}')
    assert cli.main(["report", "--config", str(cfg)]) == 2


# -- catalog-level experiments ----------------------------------------------------

def test_pseudo_locality_flat_is_infinite():
    res = pseudo_locality_scale(make_model("gaussian", 2), 0.1, taus=[0.1, 1.0, 10.0])
    assert res["tau0"] == inf and res["sup_rm"] == 0.0


def test_pseudo_locality_sphere_small_tau_branch(sphere2):
    # mu(1) = log 2 - 1 > -0.5 and the profile stays above -0.5 on this grid
    res = pseudo_locality_scale(sphere2, 0.5, taus=[0.1, 0.5, 1.0, 4.0])
    assert res["tau0"] == inf


def test_pseudo_locality_cylinder_finite(cylinder42):
    res = pseudo_locality_scale(cylinder42, 0.1, taus=np.logspace(-2, 1, 6), iterations=6)
    assert np.isfinite(res["tau0"]) and res["tau0"] > 0
    assert res["sup_rm"] == pytest.approx(0.5)
    assert res["product"] == pytest.approx(0.5 * res["tau0"])


def test_gap_experiment(catalog):
    reports = {r.check_id: r for r in gap_experiment(catalog)}
    assert reports["gap.flat_entropy"].status == "pass"
    assert reports["gap.nonflat_negative"].status == "pass"
    # the largest nonflat entropy belongs to S^3: log(|S^3| 4^{3/2} e^{-3/2} (4 pi)^{-3/2})
    s3 = log(2 * pi**2 * 8 * exp(-1.5) / (4 * pi) ** 1.5)
    assert reports["gap.entropy_gap"].lhs == pytest.approx(-s3, abs=1e-8)


def test_gap_without_nonflat():
    reports = gap_experiment([make_model("gaussian", 3)])
    assert reports[-1].status == "recorded" and reports[-1].notes


def test_weighted_integrals_gaussian_vanish():
    assert weighted_curvature_integrals(make_model("gaussian", 3), 1.0) == (0.0, 0.0, 0.0)


def test_weighted_integrals_cylinder(cylinder42):
    # |Rm|^2 = 1, |Rc|^2 = 1/2 on S^2(sqrt 2) x R^2
    # int e^{-lam f} = 4 pi a^2 e^{-lam} (4 pi / lam); lam = 1 for both
    weight = 4 * pi * 2 * exp(-1.0) * 4 * pi
    rm, rc, ratio = weighted_curvature_integrals(cylinder42, 1.0)
    assert rm == pytest.approx(weight, rel=1e-8)
    assert rc == pytest.approx(0.5 * weight, rel=1e-8)
    assert ratio == pytest.approx(0.5 * weight / exp(cylinder42.mu), rel=1e-8)


def test_gaussian_volume_ratio():
    m = make_model("gaussian", 3)
    reports = {r.check_id: r for r in no_local_collapsing_suite(m, (1, 2, 4, 8, 16))}
    assert reports["collapsing.flat_ratio"].status == "pass"
    assert all(r.status != "fail" for r in reports.values())
