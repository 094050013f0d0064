"""Command-line interface: file outputs, exit codes, determinism."""

import json

import numpy as np
import pytest

from lplimits import cli


@pytest.fixture()
def problem_paths(tmp_path):
    base = {
        "points_x": [0.0, 1.0, 2.0],
        "p": 2.0,
        "q": 2.0,
        "r": [1 / 3, 1 / 3, 1 / 3],
        "s": [1 / 3, 1 / 3, 1 / 3],
    }
    p2 = tmp_path / "p2.json"
    p2.write_text(json.dumps(base))
    base_p1 = dict(base, p=1.0)
    p1 = tmp_path / "p1.json"
    p1.write_text(json.dumps(base_p1))
    return {"p2": str(p2), "p1": str(p1), "dir": tmp_path}


def run(args):
    return cli.main(args)


class TestAnalyze:
    def test_convex_cost_reports_four_bases(self, problem_paths):
        out = problem_paths["dir"] / "analyze"
        assert run(["analyze", problem_paths["p2"], "--out-dir", str(out)]) == 0
        payload = json.loads((out / "analysis.json").read_text())
        assert payload["optimal_count"] == 4
        assert payload["assumptions"]["a2"] and payload["assumptions"]["a3"]
        assert payload["partition"] == {"pos": [0, 4, 8], "tz": [2, 6], "dz": [1, 3, 5, 7]}
        assert len(payload["cones"]) == 4
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "analyze"
        assert manifest["tool_version"]

    def test_square_lp(self, tmp_path):
        path = tmp_path / "square.json"
        path.write_text(json.dumps({"A": [[1.0, 0.0], [0.0, 1.0]], "b": [1, 2], "c": [1, 1]}))
        out = tmp_path / "out"
        assert run(["analyze", str(path), "--out-dir", str(out)]) == 0
        payload = json.loads((out / "analysis.json").read_text())
        assert payload["optimal_count"] == 1

    def test_malformed_json_exits_two(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{ not json")
        assert run(["analyze", str(path), "--out-dir", str(tmp_path)]) == 2
        assert capsys.readouterr().err.strip()

    def test_invalid_problem_exits_two(self, tmp_path):
        path = tmp_path / "rankdef.json"
        path.write_text(json.dumps({"A": [[1.0, 2.0], [2.0, 4.0]], "b": [1, 2], "c": [0, 0]}))
        assert run(["analyze", str(path), "--out-dir", str(tmp_path)]) == 2

    def test_enumeration_cap_exit_three(self, tmp_path):
        # Five support points give C(25, 9) candidate bases, just over the cap.
        path = tmp_path / "p.json"
        path.write_text(
            json.dumps(
                {
                    "points_x": [0.0, 1.0, 2.0, 3.0, 4.0],
                    "p": 2.0,
                    "q": 2.0,
                    "r": [0.2] * 5,
                    "s": [0.2] * 5,
                }
            )
        )
        assert run(["analyze", str(path), "--out-dir", str(tmp_path)]) == 3

    def test_zero_marginal_warns(self, tmp_path, capsys):
        path = tmp_path / "zero.json"
        path.write_text(
            json.dumps(
                {
                    "cost": [[0.0, 1.0], [1.0, 0.0]],
                    "r": [1.0, 0.0],
                    "s": [0.5, 0.5],
                }
            )
        )
        run(["analyze", str(path), "--out-dir", str(tmp_path)])
        assert "zero coordinate" in capsys.readouterr().err


class TestLimitSample:
    def test_zero_samples_writes_header_only(self, problem_paths):
        out = problem_paths["dir"] / "ls0"
        code = run(
            ["limit-sample", problem_paths["p2"], "--samples", "0", "--seed", "1",
             "--out-dir", str(out)]
        )
        assert code == 0
        lines = (out / "limit_samples.csv").read_text().splitlines()
        assert lines == ["pi_1_1,pi_1_2,pi_1_3,pi_2_1,pi_2_2,pi_2_3,pi_3_1,pi_3_2,pi_3_3"]

    def test_same_seed_byte_identical(self, problem_paths):
        out1 = problem_paths["dir"] / "ls1"
        out2 = problem_paths["dir"] / "ls2"
        for out in (out1, out2):
            assert run(
                ["limit-sample", problem_paths["p2"], "--samples", "200", "--seed", "7",
                 "--mode", "two-sample", "--out-dir", str(out)]
            ) == 0
        assert (out1 / "limit_samples.csv").read_bytes() == (out2 / "limit_samples.csv").read_bytes()
        assert (out1 / "limit_samples.json").read_bytes() == (out2 / "limit_samples.json").read_bytes()

    def test_occupancy_sums_to_one(self, problem_paths):
        out = problem_paths["dir"] / "ls3"
        assert run(
            ["limit-sample", problem_paths["p2"], "--samples", "20000", "--seed", "3",
             "--mode", "two-sample", "--out-dir", str(out)]
        ) == 0
        sidecar = json.loads((out / "limit_samples.json").read_text())
        assert len(sidecar["occupancy_frequencies"]) == 4
        assert sum(sidecar["occupancy_frequencies"]) == pytest.approx(1.0)

    def test_non_unique_optimum_exits_four(self, tmp_path):
        path = tmp_path / "nonunique.json"
        path.write_text(
            json.dumps(
                {
                    "points_x": [0.0, 1.0, 2.0],
                    "p": 1.0,
                    "q": 2.0,
                    "r": [0.25, 0.25, 0.5],
                    "s": [0.5, 0.25, 0.25],
                }
            )
        )
        assert run(
            ["limit-sample", str(path), "--samples", "10", "--out-dir", str(tmp_path)]
        ) == 4

    def test_lp_form_rejected(self, tmp_path):
        path = tmp_path / "lp.json"
        path.write_text(json.dumps({"A": [[1.0]], "b": [1.0], "c": [1.0]}))
        assert run(
            ["limit-sample", str(path), "--samples", "10", "--out-dir", str(tmp_path)]
        ) == 2


class TestMonteCarlo:
    def test_minimal_run_produces_all_files(self, problem_paths):
        out = problem_paths["dir"] / "mc1"
        config = problem_paths["dir"] / "config1.json"
        config.write_text(
            json.dumps(
                {"sample_sizes": [10], "replicates": 1, "seed": 5,
                 "comparison_samples": 50}
            )
        )
        assert run(
            ["monte-carlo", problem_paths["p2"], str(config), "--out-dir", str(out)]
        ) == 0
        fluct_lines = (out / "fluctuations.csv").read_text().splitlines()
        assert len(fluct_lines) == 2  # header + one replicate
        assert (out / "limit_samples.csv").exists()
        assert (out / "hausdorff.csv").read_text().splitlines()[0] == "n,replicate,d_H"
        report = json.loads((out / "report.json").read_text())
        assert len(report["per_coordinate_ks"]) == 9
        assert report["manifest"]["command"] == "monte-carlo"
        assert report["manifest"]["config_digest"]

    def test_degenerate_experiment_exits_five(self, problem_paths, monkeypatch):
        import lplimits

        def explode(*args, **kwargs):
            raise lplimits.TooManyInfeasible("forced for the exit-code contract")

        monkeypatch.setattr(cli.stochastic_harness, "run_experiment", explode)
        config = problem_paths["dir"] / "config5.json"
        config.write_text(json.dumps({"sample_sizes": [10], "replicates": 1}))
        assert run(
            ["monte-carlo", problem_paths["p2"], str(config), "--out-dir",
             str(problem_paths["dir"] / "mc5")]
        ) == 5

    def test_report_is_deterministic_up_to_manifest(self, problem_paths):
        config = problem_paths["dir"] / "config2.json"
        config.write_text(
            json.dumps(
                {"sample_sizes": [[200, 200]], "replicates": 20, "seed": 6,
                 "mode": "two-sample", "lambda": 0.5, "comparison_samples": 200,
                 "hausdorff_sizes": [50], "hausdorff_replicates": 5}
            )
        )
        outs = []
        for name in ("mc2a", "mc2b"):
            out = problem_paths["dir"] / name
            assert run(
                ["monte-carlo", problem_paths["p2"], str(config), "--out-dir", str(out)]
            ) == 0
            outs.append(out)
        a, b = outs
        assert (a / "fluctuations.csv").read_bytes() == (b / "fluctuations.csv").read_bytes()
        assert (a / "limit_samples.csv").read_bytes() == (b / "limit_samples.csv").read_bytes()
        assert (a / "hausdorff.csv").read_bytes() == (b / "hausdorff.csv").read_bytes()
        ra = json.loads((a / "report.json").read_text())
        rb = json.loads((b / "report.json").read_text())
        ra.pop("manifest")
        rb.pop("manifest")
        assert ra == rb


class TestCurveWriters:
    def test_otc_csv(self, tmp_path):
        path = tmp_path / "otc.csv"
        cli.write_otc_csv(path, [0.0, 1.0], [0.7, 1.0])
        lines = path.read_text().splitlines()
        assert lines[0] == "t,value"
        assert lines[1] == "0,0.69999999999999996"

    def test_geodesic_csv(self, tmp_path):
        import lplimits as lpl

        coupling = lpl.coupling_from_matrix(np.diag([0.5, 0.5]))
        measure = lpl.geodesic_at(coupling, [0.0, 1.0], [0.0, 1.0], 0.25)
        path = tmp_path / "geodesic.csv"
        cli.write_geodesic_csv(path, measure)
        lines = path.read_text().splitlines()
        assert lines[0] == "coord_1,weight"
        assert len(lines) == 3


class TestCertify:
    def test_unit_exponent_line_witness(self, problem_paths):
        out = problem_paths["dir"] / "cert1"
        assert run(["certify", problem_paths["p1"], "--out-dir", str(out)]) == 0
        payload = json.loads((out / "certificates.json").read_text())
        assert payload["dual_summability"] == {
            "holds": False,
            "witness": [[0, 1], [1, 2]],
        }
        assert payload["strict_monge"]["holds"] is False
        assert payload["uniqueness_implied"] is True

    def test_convex_cost_is_monge(self, problem_paths):
        out = problem_paths["dir"] / "cert2"
        assert run(["certify", problem_paths["p2"], "--out-dir", str(out)]) == 0
        payload = json.loads((out / "certificates.json").read_text())
        assert payload["strict_monge"]["holds"] is True
        assert payload["primal_summability"]["holds"] is False  # equal marginals

    def test_single_point_all_vacuous(self, tmp_path):
        path = tmp_path / "one.json"
        path.write_text(json.dumps({"cost": [[0.0]], "r": [1.0], "s": [1.0]}))
        out = tmp_path / "out"
        assert run(["certify", str(path), "--out-dir", str(out)]) == 0
        payload = json.loads((out / "certificates.json").read_text())
        assert payload["strict_monge"]["holds"]
        assert payload["dual_summability"]["holds"]
        assert payload["strict_cyclical_monotone_support"]["holds"]

    def test_cap_exit_three(self, tmp_path):
        rng = np.random.default_rng(0)
        N = 8
        cost = rng.uniform(0, 1, (N, N))
        path = tmp_path / "big.json"
        path.write_text(
            json.dumps(
                {"cost": cost.tolist(), "r": [1 / N] * N, "s": [1 / N] * N}
            )
        )
        assert run(["certify", str(path), "--out-dir", str(tmp_path)]) == 3
