import json
import os

import numpy as np
import pytest

from nrflow import config as cfgmod
from nrflow.cli import _parse_alphas, main
from nrflow.traceio import load_trace, save_trace, trace_header

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def cfg_path(name):
    return os.path.join(CONFIG_DIR, name)


ALL_SCENARIO_CONFIGS = ["pendulum.toml", "pendulum_attenuated.toml",
                        "platoon_bicycle.toml", "platoon_unicycle.toml",
                        "static_sine.toml", "lti_speedup.toml"]


@pytest.mark.parametrize("name", ALL_SCENARIO_CONFIGS)
def test_config_round_trip(name):
    first = cfgmod.load_path(cfg_path(name))
    again = cfgmod.loads(cfgmod.dumps(first))
    assert again == first


def test_config_unknown_key_rejected():
    text = "[scenario]\nname = 'pendulum'\n[controller]\nvariant='full'\nalpha=1.0\nT=0.2\n" \
           "[grid]\ntf=1.0\ndt=0.1\n[plant]\nMM = 3.0\n"
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.loads(text)


def test_config_unknown_section_rejected():
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.loads("[scenario]\nname='pendulum'\n[controller]\nvariant='full'\nT=0.2\n"
                     "[grid]\ntf=1.0\ndt=0.1\n[extras]\nfoo=1\n")


def test_config_bad_grid_rejected():
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.loads("[scenario]\nname='pendulum'\n[controller]\nvariant='full'\nT=0.2\n"
                     "[grid]\nt0=2.0\ntf=1.0\ndt=0.1\n")


def test_simulate_validation_exit(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[scenario]\nname='pendulum'\n[controller]\nvariant='full'\nT=0.2\n"
                   "[grid]\nt0=2.0\ntf=1.0\ndt=0.1\n")
    assert main(["simulate", str(bad)]) == 2


def test_simulate_parse_error_exit(tmp_path):
    bad = tmp_path / "broken.toml"
    bad.write_text("[scenario\nname = oops")
    assert main(["simulate", str(bad)]) == 2


def test_simulate_static_sine(tmp_path, capsys):
    out = tmp_path / "static.csv"
    code = main(["simulate", cfg_path("static_sine.toml"), "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "tail tracking error" in text
    tail_err = float([ln for ln in text.splitlines()
                      if ln.startswith("tail tracking error")][0].split(":")[1])
    assert tail_err <= 1.05 / 10.0
    data = load_trace(out)
    assert data["t"].size == 20001
    assert np.all(np.diff(data["t"]) > 0)


def test_trace_round_trip(tmp_path):
    from nrflow import ControllerConfig, StaticPlant, ReferenceSignal, TimeGrid, run_closed_loop
    plant = StaticPlant(m=1, g=lambda u: u.copy(), dgdu=lambda u: np.eye(1))
    ref = ReferenceSignal(m=1, r=lambda t: np.array([np.sin(t)]))
    trace = run_closed_loop(plant, None, ControllerConfig("memoryless", alpha=7.0),
                            ref, np.zeros(0), np.zeros(1), TimeGrid(0.0, 1.0, 0.01))
    path = tmp_path / "trace.csv"
    save_trace(path, trace)
    data = load_trace(path)
    assert len(trace_header(0, 1)) == 1 + 0 + 4 * 1 + 1
    for key, ours in (("t", trace.t), ("u", trace.u), ("y", trace.y),
                      ("r", trace.r), ("yhat", trace.yhat), ("v", trace.v)):
        np.testing.assert_allclose(data[key], ours, rtol=1e-8, atol=1e-300)


def test_simulate_overflow_exit(tmp_path):
    cfg = tmp_path / "hot.toml"
    cfg.write_text(
        "[scenario]\nname = \"static_gain\"\n[plant]\ndim = 1\n"
        "[controller]\nvariant = \"memoryless\"\nalpha = 1e5\n"
        "[grid]\ntf = 5.0\ndt = 0.001\n[initial]\nu = [0.0]\n"
        "[reference]\nkind = \"sine\"\n")
    assert main(["simulate", str(cfg)]) == 4


def test_simulate_singular_exit(tmp_path):
    cfg = tmp_path / "stuck.toml"
    cfg.write_text(
        "[scenario]\nname = \"platoon_unicycle\"\n"
        "[controller]\nvariant = \"intermediate\"\nalpha = 45.0\nT = 0.25\n"
        "[grid]\ntf = 2.0\ndt = 0.01\n[reference]\nkind = \"ellipse\"\n"
        "[platoon]\nagents = 2\nspacing = 0.25\nmode = \"target_line\"\nv0 = 0.0\n")
    assert main(["simulate", str(cfg)]) == 3


def test_certify_worked_example(capsys):
    code = main(["certify", cfg_path("linstab_example.toml")])
    assert code == 0
    text = capsys.readouterr().out
    assert "alpha_stable" in text
    assert "Q(s)" in text


def test_certify_json(capsys):
    code = main(["certify", cfg_path("linstab_example.toml"), "--json"])
    assert code == 0
    cert = json.loads(capsys.readouterr().out)
    assert cert["verdict"] == "alpha_stable"
    np.testing.assert_allclose(cert["q"], [1.0, 1.0], atol=1e-6)
    assert cert["p0"][1] == pytest.approx(16.19, abs=0.05)
    assert cert["p0"][2] == pytest.approx(97.18, abs=0.05)


def test_certify_rhp_exit(tmp_path, capsys):
    cfg = tmp_path / "short.toml"
    cfg.write_text("[system]\nA = [[2.0, 1.0], [-1.0, -1.0]]\nB = [[0.0], [1.0]]\n"
                   "C = [[-10.0, 1.0]]\nT = 0.05\nvariant = \"basic\"\n")
    assert main(["certify", str(cfg)]) == 5
    assert "advisory" in capsys.readouterr().out


def test_certify_malformed_exit(tmp_path):
    cfg = tmp_path / "mangled.toml"
    cfg.write_text("[system]\nA = [[2.0, 1.0]]\nB = [[0.0], [1.0]]\n"
                   "C = [[-10.0, 1.0]]\nT = 0.25\n")
    assert main(["certify", str(cfg)]) == 2


def test_rootlocus_csv(tmp_path):
    out = tmp_path / "locus.csv"
    code = main(["rootlocus", cfg_path("linstab_example.toml"),
                 "--alphas", "1:1e4:50", "--out", str(out)])
    assert code == 0
    rows = np.genfromtxt(out, delimiter=",", names=True)
    assert set(rows.dtype.names) == {"alpha", "branch_id", "re", "im"}
    assert rows.size == 50 * 3
    last = rows[rows["alpha"] == rows["alpha"].max()]
    mags = np.hypot(last["re"], last["im"])
    unb = np.argmax(mags)
    assert 0.5 <= mags[unb] / 1e4 <= 2.0
    # bounded branches end near the gain-leading polynomial roots
    p0_roots = np.roots([1.0, 16.190441, 97.181254])
    for k in range(3):
        if k == unb:
            continue
        z = last["re"][k] + 1j * last["im"][k]
        assert min(abs(z - r) for r in p0_roots) <= 1e-2


def test_rootlocus_single_alpha(capsys):
    assert main(["rootlocus", cfg_path("linstab_example.toml"), "--alphas", "10"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 + 3


def test_rootlocus_bad_alphas():
    assert main(["rootlocus", cfg_path("linstab_example.toml"), "--alphas=-1,3"]) == 2


def test_sweep_alpha_speedup(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep-alpha", cfg_path("lti_speedup.toml"),
                 "--alphas", "1,10,100", "--out", str(out)])
    assert code == 0
    rows = np.genfromtxt(out, delimiter=",", names=True, usecols=(0, 1, 2))
    errs = rows["tail_max_ref_pred_error"]
    assert np.all(errs <= 1.05 / rows["alpha"])
    assert errs[0] / errs[1] >= 9.0
    assert errs[1] / errs[2] >= 9.0


def test_sweep_alpha_enhanced_exact(tmp_path):
    cfg = tmp_path / "exact.toml"
    cfg.write_text(
        "[scenario]\nname = \"lti\"\n"
        "[plant]\nA = [[-1.0]]\nB = [[1.0]]\nC = [[1.0]]\n"
        "[controller]\nvariant = \"enhanced\"\nalpha = 1.0\nT = 1.0\n"
        "[grid]\ntf = 20.0\ndt = 0.001\n"
        "[initial]\nx = [0.0]\nu = [0.0]\n"
        "[reference]\nkind = \"constant\"\nvalue = [1.0]\n")
    out = tmp_path / "exact.csv"
    env = os.environ.copy()
    os.environ["NRFLOW_THREADS"] = "2"
    try:
        assert main(["sweep-alpha", str(cfg), "--alphas", "1,10", "--out", str(out)]) == 0
    finally:
        os.environ.pop("NRFLOW_THREADS", None)
        os.environ.update(env)
    rows = np.genfromtxt(out, delimiter=",", names=True, usecols=(0, 1, 2))
    assert np.all(rows["tail_max_ref_pred_error"] <= 1e-6)
    assert np.all(np.diff(rows["alpha"]) > 0)


def test_sweep_alpha_memoryless(tmp_path):
    out = tmp_path / "static_sweep.csv"
    assert main(["sweep-alpha", cfg_path("static_sine.toml"),
                 "--alphas", "10,100", "--out", str(out)]) == 0
    rows = np.genfromtxt(out, delimiter=",", names=True, usecols=(0, 1, 2))
    assert np.all(rows["tail_max_tracking_error"] <= 1.05 / rows["alpha"])


def test_rootlocus_plot(tmp_path):
    out = tmp_path / "locus.csv"
    assert main(["rootlocus", cfg_path("linstab_example.toml"),
                 "--alphas", "1:1e3:20", "--out", str(out), "--plot"]) == 0
    assert (tmp_path / "locus_rootlocus.png").exists()


def test_sweep_plot(tmp_path):
    out = tmp_path / "sw.csv"
    assert main(["sweep-alpha", cfg_path("static_sine.toml"),
                 "--alphas", "10,100", "--out", str(out), "--plot"]) == 0
    assert (tmp_path / "sw_sweep.png").exists()


def test_parse_alphas():
    vals = _parse_alphas("1:1e4:50")
    assert vals.size == 50
    assert vals[0] == pytest.approx(1.0)
    assert vals[-1] == pytest.approx(1e4)
    np.testing.assert_allclose(np.diff(np.log(vals)), np.diff(np.log(vals))[0])
    np.testing.assert_allclose(_parse_alphas("1,10,100"), [1.0, 10.0, 100.0])
    with pytest.raises(ValueError):
        _parse_alphas("-3,1")


def test_simulate_shipped_light_configs(tmp_path):
    import time
    for name in ("pendulum.toml", "pendulum_attenuated.toml", "static_sine.toml",
                 "lti_speedup.toml"):
        out = tmp_path / name.replace(".toml", ".csv")
        t0 = time.perf_counter()
        assert main(["simulate", cfg_path(name), "--out", str(out)]) == 0
        assert time.perf_counter() - t0 < 60.0
        assert out.exists()


def test_shipped_platoon_configs_build():
    for name in ("platoon_bicycle.toml", "platoon_unicycle.toml"):
        cfg = cfgmod.load_path(cfg_path(name))
        pcfg, plant, pred, ref, path, x0, u0, grid = cfgmod.build_platoon_run(cfg)
        assert pcfg.agent_count == 4
        assert x0.shape == (4, plant.n)
        ref(grid.tf + pred.T)  # reference covers the lookahead horizon


def test_simulate_platoon_cli_path(tmp_path, capsys):
    cfg = tmp_path / "mini_platoon.toml"
    cfg.write_text(
        "[scenario]\nname = \"platoon_unicycle\"\n"
        "[controller]\nvariant = \"intermediate\"\nalpha = 45.0\nT = 0.25\n"
        "[grid]\ntf = 3.0\ndt = 0.01\n[reference]\nkind = \"ellipse\"\n"
        "[platoon]\nagents = 2\nspacing = 0.25\nmode = \"target_line\"\n")
    out = tmp_path / "mini.csv"
    assert main(["simulate", str(cfg), "--out", str(out), "--plot"]) == 0
    text = capsys.readouterr().out
    assert "agent 1:" in text and "agent 2:" in text
    assert (tmp_path / "mini_agent1.csv").exists()
    assert (tmp_path / "mini_agent2.csv").exists()
    assert (tmp_path / "mini_plane.png").exists()
    assert (tmp_path / "mini_distances.png").exists()


def test_simulate_plot_renders_figures(tmp_path):
    cfg = tmp_path / "tiny.toml"
    cfg.write_text(
        "[scenario]\nname = \"static_gain\"\n[plant]\ndim = 1\n"
        "[controller]\nvariant = \"memoryless\"\nalpha = 10.0\n"
        "[grid]\ntf = 2.0\ndt = 0.01\n[initial]\nu = [0.0]\n"
        "[reference]\nkind = \"sine\"\n")
    out = tmp_path / "tiny.csv"
    assert main(["simulate", str(cfg), "--out", str(out), "--plot"]) == 0
    assert (tmp_path / "tiny_tracking.png").exists()
    assert (tmp_path / "tiny_input.png").exists()
