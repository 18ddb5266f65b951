import contextlib
import io
import json
import os
import tempfile
import unittest

import main
from report_writer import read_metadata, read_rows


def run_cli(*argv):
    """执行命令行入口，返回 (退出码, stdout)"""
    stdout = io.StringIO()
    with contextlib.redirect_stdout(stdout):
        code = main.main(list(argv))
    return code, stdout.getvalue()


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self._directory = tempfile.TemporaryDirectory()
        self.directory = self._directory.name

    def tearDown(self):
        self._directory.cleanup()

    def path(self, name):
        return os.path.join(self.directory, name)

    def load_summary(self, stem):
        with open(self.path(f"{stem}.summary.json"), encoding="utf-8") as f:
            return json.load(f)

    def test_fidelity_coherent(self):
        code, stdout = run_cli("fidelity", "--state", "coherent", "--alpha-re", "1", "--q", "0.5",
                               "--cutoff", "40", "--out", self.path("fidelity.csv"))
        self.assertEqual(code, 0)
        summary = self.load_summary("fidelity")
        self.assertAlmostEqual(summary["average_fidelity"], 0.75, delta=1e-4)
        self.assertEqual(summary["closed_form"], 0.75)
        self.assertEqual(json.loads(stdout)["average_fidelity"], summary["average_fidelity"])

        metadata = read_metadata(self.path("fidelity.csv"))
        for key in ("config_hash", "rng_version", "cutoff", "boundary_mass", "schema_version"):
            self.assertIn(key, metadata)
        rows = read_rows(self.path("fidelity.csv"))
        self.assertEqual(list(rows[0].keys()), ["beta_re", "beta_im", "probability", "conditional_fidelity"])
        self.assertEqual(len(rows), 31)
        self.assertAlmostEqual(float(rows[0]["conditional_fidelity"]), 1.0, places=10)

    def test_fidelity_number_state(self):
        code, _ = run_cli("fidelity", "--state", "number", "--n", "1", "--q", "0", "--out", self.path("n1.csv"))
        self.assertEqual(code, 0)
        summary = self.load_summary("n1")
        self.assertAlmostEqual(summary["average_fidelity"], 0.25, delta=1e-4)
        self.assertIsNone(summary["closed_form"])

    def test_invalid_q_exit_code(self):
        code, _ = run_cli("fidelity", "--q", "1.2", "--out", self.path("bad.csv"))
        self.assertEqual(code, 2)
        self.assertFalse(os.path.exists(self.path("bad.csv")))

    def test_non_convergence_exit_code(self):
        code, _ = run_cli("fidelity", "--extent", "1.0", "--points", "21", "--out", self.path("small.csv"))
        self.assertEqual(code, 3)

    def test_sweep_q(self):
        code, _ = run_cli("sweep-q", "--q-list", "0,0.25,0.5,0.75", "--alpha-re", "1", "--alpha-im", "1",
                          "--out", self.path("sweep.csv"))
        self.assertEqual(code, 0)
        rows = read_rows(self.path("sweep.csv"))
        self.assertEqual([float(row["q"]) for row in rows], [0.0, 0.25, 0.5, 0.75])
        self.assertAlmostEqual(float(rows[0]["average_fidelity"]), 0.5, delta=1e-3)
        for row in rows:
            self.assertAlmostEqual(float(row["average_fidelity"]), float(row["closed_form"]), delta=1e-3)
        self.assertLess(self.load_summary("sweep")["max_closed_form_residual"], 1e-3)

    def test_sweep_q_empty_list(self):
        code, _ = run_cli("sweep-q", "--q-list", "", "--out", self.path("empty.csv"))
        self.assertEqual(code, 2)

    def test_shots_deterministic(self):
        common = ["shots", "--state", "coherent", "--alpha-re", "0.5", "--q", "0.5", "--cutoff", "25",
                  "--shots", "3000", "--seed", "99"]
        self.assertEqual(run_cli(*common, "--out", self.path("a.csv"))[0], 0)
        self.assertEqual(run_cli(*common, "--workers", "3", "--out", self.path("b.csv"))[0], 0)
        with open(self.path("a.csv"), "rb") as a, open(self.path("b.csv"), "rb") as b:
            self.assertEqual(a.read(), b.read())

        summary = self.load_summary("a")
        self.assertEqual(summary["n_shots"], 3000)
        self.assertIn("p_value", summary["chi_square"])
        rows = read_rows(self.path("a.csv"))
        self.assertEqual(list(rows[0].keys()), ["shot_index", "beta_re", "beta_im", "conditional_fidelity", "weight_at_beta"])
        self.assertEqual(rows[-1]["shot_index"], "2999")

    def test_shots_store_amplitudes(self):
        code, _ = run_cli("shots", "--state", "number", "--n", "1", "--cutoff", "10", "--shots", "4",
                          "--store-amplitudes", "--out", self.path("amp.csv"))
        self.assertEqual(code, 0)
        rows = read_rows(self.path("amp.amplitudes.csv"))
        self.assertEqual(len(rows), 4 * 11)
        self.assertNotIn("chi_square", self.load_summary("amp"))

    def test_verify_homodyne(self):
        code, _ = run_cli("verify", "--basis", "homodyne-x", "--alpha-re", "0.5", "--q", "0.5",
                          "--out", self.path("homodyne.csv"))
        self.assertEqual(code, 0)
        summary = self.load_summary("homodyne")
        self.assertLess(summary["completeness_deviation"], 1e-4)
        self.assertAlmostEqual(summary["output_variance"], summary["output_variance_expected"], delta=1e-3)
        self.assertAlmostEqual(summary["input_variance"], 0.25, delta=1e-6)
        rows = read_rows(self.path("homodyne.csv"))
        self.assertEqual(list(rows[0].keys()), ["x", "input_density", "output_density"])

    def test_verify_number(self):
        code, _ = run_cli("verify", "--basis", "number", "--state", "number", "--n", "2", "--cutoff", "20",
                          "--out", self.path("number.csv"))
        self.assertEqual(code, 0)
        rows = read_rows(self.path("number.csv"))
        self.assertEqual(len(rows), 21)
        self.assertEqual(float(rows[2]["input_probability"]), 1.0)
        self.assertEqual(self.load_summary("number")["completeness_deviation"], 0.0)
        self.assertEqual(read_metadata(self.path("number.csv"))["completeness_deviation"], "0")

    def test_verify_eight_port(self):
        code, _ = run_cli("verify", "--basis", "eight-port", "--alpha-re", "0.5", "--q", "0.5", "--cutoff", "20",
                          "--points", "81", "--shots", "1000", "--out", self.path("eight.csv"))
        self.assertEqual(code, 0)
        summary = self.load_summary("eight")
        self.assertLess(summary["completeness_deviation"], 1e-4)
        for index in range(2):
            difference = abs(summary["gamma_mean"][index] - summary["q_function_mean"][index])
            self.assertLess(difference, 5 * summary["gamma_mean_stderr"][index])
        gamma_rows = read_rows(self.path("eight.gamma.csv"))
        self.assertEqual(len(gamma_rows), 1000)
        self.assertEqual(list(gamma_rows[0].keys()),
                         ["draw", "beta_re", "beta_im", "alpha_re", "alpha_im", "gamma_re", "gamma_im"])

    def test_verify_eight_port_number_state(self):
        code, _ = run_cli("verify", "--basis", "eight-port", "--state", "number", "--n", "3", "--cutoff", "20",
                          "--points", "81", "--shots", "200", "--out", self.path("eight_n3.csv"))
        self.assertEqual(code, 0)
        summary = self.load_summary("eight_n3")
        self.assertAlmostEqual(summary["q_function_covariance"][0][0], 2.0, delta=1e-8)
        self.assertAlmostEqual(summary["q_function_covariance"][1][1], 2.0, delta=1e-8)
        self.assertAlmostEqual(summary["q_function_covariance"][0][1], 0.0, delta=1e-8)
        self.assertEqual(len(read_rows(self.path("eight_n3.gamma.csv"))), 200)

    def test_povm_check(self):
        code, _ = run_cli("povm-check", "--cutoff", "24", "--q", "0.5", "--out", self.path("povm.csv"))
        self.assertEqual(code, 0)
        summary = self.load_summary("povm")
        self.assertEqual(summary["interior_dimension"], 13)
        self.assertTrue(summary["passed"])
        rows = read_rows(self.path("povm.csv"))
        self.assertEqual([row["reference"] for row in rows], ["vacuum", "number-1", "transfer-square"])

    def test_config_file_with_override(self):
        config_path = self.path("run.json")
        with open(config_path, "w", encoding="utf-8") as f:
            json.dump({"state": "vacuum", "q": 0.25, "cutoff": 30}, f)
        code, _ = run_cli("fidelity", "--config", config_path, "--q", "0.5", "--format", "json",
                          "--out", self.path("override.json"))
        self.assertEqual(code, 0)
        summary = self.load_summary("override")
        self.assertEqual(summary["q"], 0.5)
        self.assertEqual(summary["cutoff"], 30)
        with open(self.path("override.json"), encoding="utf-8") as f:
            document = json.load(f)
        self.assertEqual(document["columns"], ["beta_re", "beta_im", "probability", "conditional_fidelity"])


if __name__ == "__main__":
    unittest.main()
