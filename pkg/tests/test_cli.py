import json

import numpy as np
import pytest

import asisnet as an
from asisnet.cli import main


def write_graph(path, g):
    path.write_text(an.dump_edge_list(g))


def k3_file(tmp_path):
    p = tmp_path / "k3.txt"
    write_graph(p, an.Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)]))
    return p


class TestGenerate:
    def test_er_deterministic_file(self, tmp_path):
        out1, out2 = tmp_path / "a.txt", tmp_path / "b.txt"
        argv = ["generate", "er", "--n", "40", "--p", "0.1", "--seed", "7"]
        assert main(argv + ["--out", str(out1)]) == 0
        assert main(argv + ["--out", str(out2)]) == 0
        assert out1.read_text().replace("a.txt", "x") == out2.read_text().replace("b.txt", "x")
        body = out1.read_text()
        assert body.startswith("# command: asisnet generate er")
        assert "# n=40" in body
        g = an.load_edge_list(body)
        assert g.n == 40

    def test_ba_deterministic(self, tmp_path):
        out = tmp_path / "ba.txt"
        assert main(["generate", "ba", "--n", "40", "--m-attach", "2",
                     "--seed", "7", "--out", str(out)]) == 0
        assert an.load_edge_list(out.read_text()).m == 77

    def test_invalid_p_exit_2(self, tmp_path, capsys):
        rc = main(["generate", "er", "--n", "5", "--p", "1.5", "--seed", "1",
                   "--out", str(tmp_path / "x.txt")])
        assert rc == 2
        assert "p" in capsys.readouterr().err


class TestThreshold:
    def test_homogeneous_k3(self, tmp_path, capsys):
        rc = main(["threshold", "--graph", str(k3_file(tmp_path)),
                   "--beta", "1", "--delta", "1", "--phi", "1", "--psi", "1"])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["omega"] == pytest.approx(0.5)
        assert doc["beta_star"] == pytest.approx(0.75, abs=1e-9)
        assert doc["irreducible"] is True
        # beta = 1 exceeds beta* = 0.75: larger root of the quadratic is sqrt(2) - 1
        assert doc["lambda_max"] == pytest.approx(np.sqrt(2) - 1, abs=1e-8)

    def test_heterogeneous_omits_homogeneous_fields(self, tmp_path, capsys):
        g = an.Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])
        rng = np.random.default_rng(1)
        params = an.AsisParams(beta=rng.uniform(0.5, 1, 3), delta=rng.uniform(0.5, 1, 3),
                               phi=rng.uniform(0.5, 1, 6), psi=rng.uniform(0.5, 1, 3))
        pfile = tmp_path / "p.json"
        pfile.write_text(json.dumps(an.params_to_json(g, params)))
        rc = main(["threshold", "--graph", str(k3_file(tmp_path)),
                   "--params", str(pfile)])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert "omega" not in doc and "beta_star" not in doc
        assert "lambda_max" in doc

    def test_disconnected_exit_2(self, tmp_path):
        p = tmp_path / "d.txt"
        write_graph(p, an.Graph.from_edges(4, [(0, 1), (2, 3)]))
        rc = main(["threshold", "--graph", str(p),
                   "--beta", "1", "--delta", "1", "--phi", "1", "--psi", "1"])
        assert rc == 2


class TestSimulate:
    def test_event_log_format(self, tmp_path, capsys):
        log = tmp_path / "ev.csv"
        rc = main(["simulate", "--graph", str(k3_file(tmp_path)),
                   "--beta", "1", "--delta", "1", "--phi", "1", "--psi", "1",
                   "--horizon", "3", "--seed", "11", "--event-log", str(log)])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["t_end"] == 3.0
        lines = log.read_text().splitlines()
        assert lines[3] == "t,event_type,i,j"
        first = lines[4].split(",")
        assert first[1] in {"infect", "recover", "cut", "reconnect", "reinfect"}


class TestSweep:
    def test_grid_shape_and_determinism(self, tmp_path):
        gfile = tmp_path / "g.txt"
        write_graph(gfile, an.gen_erdos_renyi(12, 0.35, 0))
        out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
        argv = ["sweep", "--graph", str(gfile), "--delta", "1", "--psi", "1",
                "--beta-grid", "0.2,0.5", "--phi-grid", "0.5,1.0",
                "--seed", "3", "--budget", "300000"]
        assert main(argv + ["--out", str(out1)]) == 0
        assert main(argv + ["--out", str(out2)]) == 0
        assert out1.read_text().replace("s1", "sX") == out2.read_text().replace("s2", "sX")
        lines = [l for l in out1.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "beta,phi,y_star,t_stop,events,converged,beta_star"
        assert len(lines) == 5  # header + 4 cells
        # analytic boundary column: beta_star = delta (1 + phi/(delta+psi)) / rho
        g = an.gen_erdos_renyi(12, 0.35, 0)
        rho = an.spectral_radius(g)
        row = lines[1].split(",")
        assert float(row[-1]) == pytest.approx(1.0 * (1 + 0.5 / 2.0) / rho, rel=1e-9)

    def test_heterogeneous_base_omits_beta_star(self, tmp_path):
        g = an.gen_erdos_renyi(10, 0.4, 0)
        rng = np.random.default_rng(2)
        params = an.AsisParams(beta=np.ones(g.n), delta=rng.uniform(0.5, 1.5, g.n),
                               phi=np.ones(2 * g.m), psi=rng.uniform(0.5, 1.5, g.m))
        gfile, pfile, out = tmp_path / "g.txt", tmp_path / "p.json", tmp_path / "s.csv"
        write_graph(gfile, g)
        pfile.write_text(json.dumps(an.params_to_json(g, params)))
        rc = main(["sweep", "--graph", str(gfile), "--params", str(pfile),
                   "--beta-grid", "0.3", "--phi-grid", "1.0",
                   "--seed", "1", "--budget", "200000", "--out", str(out)])
        assert rc == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "beta,phi,y_star,t_stop,events,converged"


class TestOptimize:
    def test_end_to_end(self, tmp_path, capsys):
        g = an.gen_barabasi_albert(12, 2, seed=3)
        rho = an.spectral_radius(g)
        beta = 1.1 * 0.1 / rho
        gfile = tmp_path / "g.txt"
        write_graph(gfile, g)
        cost = {
            "lambda_bar": 0.005,
            "psi": beta,
            "beta": {"fixed": beta},
            "delta": {"fixed": 0.1},
            "phi": {"lower": 0.0, "upper": 4 * beta, "exponents": 1.0,
                    "offsets": 8 * beta},
        }
        cfile = tmp_path / "cost.json"
        cfile.write_text(json.dumps(cost))
        sol_out = tmp_path / "sol.json"
        cen_out = tmp_path / "cen.csv"
        rc = main(["optimize", "--graph", str(gfile), "--cost", str(cfile),
                   "--out-solution", str(sol_out), "--out-centrality", str(cen_out)])
        assert rc == 0
        doc = json.loads(sol_out.read_text())
        assert doc["verification"]["passed"] is True
        assert doc["lambda_max"] <= -0.005 + 1e-6
        lines = [l for l in cen_out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "i,j,phi_ij,deg_prod,eig_prod,betweenness"
        assert len(lines) == 1 + 2 * g.m


class TestCentrality:
    def test_header_and_rows(self, tmp_path, capsys):
        rc = main(["centrality", "--graph", str(k3_file(tmp_path))])
        assert rc == 0
        lines = [l for l in capsys.readouterr().out.splitlines() if not l.startswith("#")]
        assert lines[0] == "i,j,deg_prod,eig_prod,betweenness"
        assert len(lines) == 4


class TestOracle:
    def test_k3_transient(self, tmp_path, capsys):
        rc = main(["oracle", "--graph", str(k3_file(tmp_path)),
                   "--beta", "1", "--delta", "1", "--phi", "1", "--psi", "1",
                   "--time", "1"])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["mean_infected"] == pytest.approx(1.488610965976, abs=1e-8)

    def test_size_guard_exit_2(self, tmp_path, capsys):
        g = an.Graph.from_edges(22, [(0, i) for i in range(1, 22)])
        gfile = tmp_path / "big.txt"
        write_graph(gfile, g)
        rc = main(["oracle", "--graph", str(gfile),
                   "--beta", "1", "--delta", "1", "--phi", "1", "--psi", "1",
                   "--time", "1"])
        assert rc == 2
        assert "state space too large" in capsys.readouterr().err


class TestNumericalFailureExit:
    def test_infeasible_optimize_exit_3(self, tmp_path, capsys):
        g = an.Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])
        gfile = tmp_path / "g.txt"
        write_graph(gfile, g)
        cost = {
            "lambda_bar": 1000.0,
            "psi": 1.0,
            "beta": {"fixed": 0.5},
            "delta": {"fixed": 1.0},
            "phi": {"lower": 0.0, "upper": 2.0, "exponents": 1.0, "offsets": 4.0},
        }
        cfile = tmp_path / "cost.json"
        cfile.write_text(json.dumps(cost))
        rc = main(["optimize", "--graph", str(gfile), "--cost", str(cfile),
                   "--out-solution", str(tmp_path / "s.json"),
                   "--out-centrality", str(tmp_path / "c.csv")])
        assert rc == 3
        assert "aggressive" in capsys.readouterr().err


class TestBudgetExit:
    def test_metastable_timeout_exit_4(self, tmp_path):
        gfile = tmp_path / "g.txt"
        write_graph(gfile, an.gen_erdos_renyi(12, 0.35, 0))
        rc = main(["metastable", "--graph", str(gfile),
                   "--beta", "2", "--delta", "1", "--phi", "1", "--psi", "1",
                   "--seed", "4", "--budget", "20000"])
        assert rc == 4


class TestConfig:
    def test_config_provides_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"beta": 1.0, "delta": 1.0, "phi": 1.0, "psi": 1.0}))
        rc = main(["--config", str(cfg), "threshold", "--graph", str(k3_file(tmp_path))])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["beta_star"] == pytest.approx(0.75, abs=1e-9)

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"beta": 1.0, "delta": 1.0, "phi": 1.0, "psi": 1.0}))
        rc = main(["--config", str(cfg), "threshold", "--graph", str(k3_file(tmp_path)),
                   "--phi", "3.0", "--psi", "2.0"])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        # omega = 3 / (1 + 2) = 1, beta_star = 2 (1 + omega) / rho... delta=1, rho=2
        assert doc["omega"] == pytest.approx(1.0)
        assert doc["beta_star"] == pytest.approx(1.0, abs=1e-9)
