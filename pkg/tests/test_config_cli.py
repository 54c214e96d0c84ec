import json
import subprocess
import sys

import pytest

from sna_lab.cli import main
from sna_lab.config import RunConfig, bracket_key, load_config
from sna_lab.errors import ConfigError

from conftest import BETA_HAT


def small_config(**over):
    cfg = {
        "family": {"a": 40.0, "beta": "critical", "x_lo": -3.0},
        "rotation": "golden",
        "seed": 0,
        "find_betac": {"tol": 1e-2, "budget": 200, "m": 256},
        "lines": {"beta": 0.48714, "n": [0, 1, 2], "m": 256},
        "lyapunov": {"beta": 0.45, "beta_offset": 0.0, "N": 20000, "burn_in": 1000, "n_blocks": 20},
        "dimension": {"generator": "unit_square", "n_points": 200000, "eps_max": 0.25,
                      "eps_min": 2.0 ** -8, "num_centers": 500},
        "multiscale": {"beta": BETA_HAT, "m": 1024, "max_level": 1},
        "verify": {"beta": BETA_HAT, "N": 20, "m": 64, "recurrence_n": 10, "inverse_samples": 1000,
                   "roundtrip_samples": 50, "m_regions": 1024, "shadow_n": 100, "shadow_samples": 10,
                   "omega_n": 100, "omega_m": 256},
    }
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(cfg.get(k), dict):
            cfg[k] = dict(cfg[k], **v)
        else:
            cfg[k] = v
    return cfg


def write_cfg(tmp_path, name="cfg.json", **over):
    p = tmp_path / name
    p.write_text(json.dumps(small_config(**over)))
    return p


# --- configuration --------------------------------------------------------


def test_defaults_fill_missing_blocks():
    cfg = RunConfig.from_dict({})
    assert cfg.family.a == 40.0 and cfg.rotation == "golden" and cfg.seed == 0
    assert cfg.lines.n == [1, 2, 3, 4, 5, 6]
    assert cfg.rotation_obj().omega == pytest.approx(0.6180339887498949)


@pytest.mark.parametrize("data", [
    {"unknown": 1},
    {"family": {"a": -1.0}},
    {"family": {"beta": 1.5}},
    {"family": {"beta": "soft"}},
    {"find_betac": {"tol": 2.0}},
    {"find_betac": {"tol": 0.0}},
    {"find_betac": {"budget": 0}},
    {"find_betac": {"lo": 0.6, "hi": 0.5}},
    {"lines": {"extra": True}},
    {"dimension": {"generator": "banana"}},
    {"rotation": 1.5},
    {"seed": -1},
    {"cache_dir": 3},
    [],
])
def test_invalid_configs_rejected(data):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(data)


def test_explicit_rotation_and_seed_override(tmp_path):
    p = write_cfg(tmp_path, rotation=0.4142135623730951)
    cfg = load_config(p, seed=2 ** 64 - 1)
    assert cfg.seed == 2 ** 64 - 1
    assert cfg.rotation_obj().omega == 0.4142135623730951


def test_bracket_key_tracks_search_settings(tmp_path):
    a = RunConfig.from_dict(small_config())
    b = RunConfig.from_dict(small_config(find_betac={"tol": 5e-3}))
    c = RunConfig.from_dict(small_config(lines={"m": 128}))
    assert bracket_key(a) != bracket_key(b)
    assert bracket_key(a) == bracket_key(c)
    assert len(bracket_key(a)) == 16


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


# --- exit codes -----------------------------------------------------------


def test_usage_errors_exit_one(tmp_path):
    p = write_cfg(tmp_path, find_betac={"tol": 2.0})
    assert main(["find-betac", "--config", str(p), "--out", str(tmp_path / "o")]) == 1
    assert main(["lines", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 1
    for argv in (["bogus"], ["lines"], ["lines", "--config", str(p), "--seed", "-3"]):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 1


def test_budget_inconclusive_exit_two(tmp_path):
    p = write_cfg(tmp_path, find_betac={"tol": 1e-3, "budget": 1})
    out = tmp_path / "o"
    assert main(["find-betac", "--config", str(p), "--out", str(out)]) == 2
    assert json.loads((out / "betac.json").read_text())["status"] == "budget_inconclusive"
    assert not list(out.glob("betac-*.json"))


def test_verify_exit_three_at_critical(tmp_path, capsys):
    # the Omega-based checks have nothing to test once the shifts of I_1 cover the circle
    p = write_cfg(tmp_path)
    out = tmp_path / "o"
    assert main(["verify", "--config", str(p), "--out", str(out)]) == 3
    rep = json.loads((out / "verify.json").read_text())
    assert rep["all_passed"] is False
    by_name = {c["name"]: c for c in rep["checks"]}
    assert by_name["monotonicity"]["passed"] and by_name["recurrence"]["passed"]
    assert any(c["vacuous"] for c in rep["checks"])
    printed = capsys.readouterr().out
    assert "vacuous" in printed


# --- commands -------------------------------------------------------------


def test_find_betac_then_cache(tmp_path):
    p = write_cfg(tmp_path)
    out = tmp_path / "o"
    assert main(["find-betac", "--config", str(p), "--out", str(out)]) == 0
    rep = json.loads((out / "betac.json").read_text())
    lo, hi = rep["bracket"]["lo"], rep["bracket"]["hi"]
    assert hi - lo <= 1e-2 and lo <= 0.4872 <= hi
    header = (out / "betac_trace.csv").read_text().splitlines()[0]
    assert header == "step,beta,verdict,collapse_step,min_gap"
    cache = out / f"betac-{bracket_key(load_config(p))}.json"
    assert cache.exists()
    # "critical" now resolves from the cache without a new search
    assert main(["lyapunov", "--config", str(p), "--out", str(out)]) == 0
    p2 = write_cfg(tmp_path, "cfg2.json", lines={"beta": "critical"})
    assert main(["lines", "--config", str(p2), "--out", str(out)]) == 0
    beta = json.loads((out / "lines.json").read_text())["beta"]
    assert beta["source"] == "cache" and beta["value"] == lo
    # a cache whose key disagrees is an error, not silently reused
    data = json.loads(cache.read_text())
    data["key"] = "0" * 16
    cache.write_text(json.dumps(data))
    assert main(["lines", "--config", str(p2), "--out", str(out)]) == 1


def test_critical_without_cache_runs_search(tmp_path):
    p = write_cfg(tmp_path, lines={"beta": "critical", "n": [1]}, cache_dir=str(tmp_path / "cache"))
    out = tmp_path / "o"
    assert main(["lines", "--config", str(p), "--out", str(out)]) == 0
    assert json.loads((out / "lines.json").read_text())["beta"]["source"] == "search"
    assert len(list((tmp_path / "cache").glob("betac-*.json"))) == 1


def test_lines_outputs(tmp_path):
    p = write_cfg(tmp_path)
    out = tmp_path / "o"
    assert main(["lines", "--config", str(p), "--out", str(out)]) == 0
    for n in (0, 1, 2):
        rows = (out / f"lines_n{n}.csv").read_text().splitlines()
        assert rows[0] == "theta,upper,lower,gap" and len(rows) == 257
    assert (out / "lines.svg").exists() and (out / "lines.png").stat().st_size > 0
    rep = json.loads((out / "lines.json").read_text())
    assert rep["config"] == load_config(p).to_dict()
    assert rep["lines"][0]["min_gap"] == 1.0


def test_outputs_byte_identical(tmp_path):
    p = write_cfg(tmp_path)
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        for cmd in ("lines", "dimension", "multiscale"):
            assert main([cmd, "--config", str(p), "--out", str(out)]) == 0
        runs.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
    assert runs[0].keys() == runs[1].keys()
    for name in runs[0]:
        assert runs[0][name] == runs[1][name], name


def test_dimension_unit_square_command(tmp_path):
    p = write_cfg(tmp_path)
    out = tmp_path / "o"
    assert main(["dimension", "--config", str(p), "--out", str(out)]) == 0
    rep = json.loads((out / "dimension.json").read_text())
    assert rep["box"]["slope"] == pytest.approx(2.0, abs=0.05)
    assert rep["beta"] is None
    for f in ("dimension_box.csv", "dimension_info.csv", "cloud.svg", "cloud.png", "scaling.png"):
        assert (out / f).exists()


def test_dimension_insufficient_scales_reported(tmp_path):
    p = write_cfg(tmp_path, dimension={"generator": "atom", "n_points": 100, "information": False})
    out = tmp_path / "o"
    assert main(["dimension", "--config", str(p), "--out", str(out)]) == 0
    assert "error" in json.loads((out / "dimension.json").read_text())["box"]


def test_lyapunov_command(tmp_path):
    p = write_cfg(tmp_path)
    out = tmp_path / "o"
    assert main(["lyapunov", "--config", str(p), "--out", str(out)]) == 0
    rep = json.loads((out / "lyapunov.json").read_text())
    assert rep["upper"]["exponent"] < 0 < rep["lower"]["exponent"]
    assert rep["signs_separated"] is True
    p2 = write_cfg(tmp_path, "c2.json", lyapunov={"beta": 0.0, "beta_offset": -0.5})
    assert main(["lyapunov", "--config", str(p2), "--out", str(out)]) == 1


def test_multiscale_command(tmp_path):
    p = write_cfg(tmp_path)
    out = tmp_path / "o"
    assert main(["multiscale", "--config", str(p), "--out", str(out)]) == 0
    rep = json.loads((out / "multiscale.json").read_text())
    assert rep["feasible"] is True and rep["truncation_depth"] == 1
    p2 = write_cfg(tmp_path, "c2.json", multiscale={"beta": 0.2})
    assert main(["multiscale", "--config", str(p2), "--out", str(out)]) == 0
    assert json.loads((out / "multiscale.json").read_text())["feasible"] is False


def test_console_script_entry(tmp_path):
    p = write_cfg(tmp_path)
    res = subprocess.run([sys.executable, "-m", "sna_lab.cli", "lines", "--config", str(p),
                          "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
