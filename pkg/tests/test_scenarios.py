"""
Unit tests for the scenario layer: config parsing and validation, the
scenario table, run reports, the runner and the command line.

Scenario runs use small sample counts so the whole file stays fast.
"""

import sys
import os
import io
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
from unittest.mock import patch

import numpy as np

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from probability_geometry.errors import EvolutionError
from probability_geometry.field_io import write_state
from probability_geometry.grid import GridSpec
from probability_geometry.states import gaussian_state
from scenario_layer import cli
from scenario_layer.config import OUTPUT_DIR_ENV, load_config, parse_config_text
from scenario_layer.errors import ConfigError, OutputError
from scenario_layer.reporting import CheckRecord, RunReport, emit_plotdata
from scenario_layer.router import ScenarioRouter
from scenario_layer.runner import RunResult, initial_state, relation_family, router, run
from scenario_layer.scenarios import SCENARIOS, get_scenario, list_scenarios, scenario_defaults
from scenario_layer.validators import CONFIG_SCHEMA, coerce_value, suggest, validate_scenario_name


MINIMAL = """\
[scenario]
name = {name}

[physics]
mass = 1.0
alpha = 1.0
"""


def _config(name, extra="", physics="mass = 1.0\nalpha = 1.0"):
    return f"[scenario]\nname = {name}\n{extra}\n[physics]\n{physics}\n"


class TestScenarioTable(unittest.TestCase):

    def test_all_scenarios_have_required_fields(self):
        """Every scenario must have a description and a defaults table per section."""
        for name, data in SCENARIOS.items():
            self.assertIn("description", data, f"{name} missing 'description'")
            self.assertIn("defaults", data, f"{name} missing 'defaults'")
            for section in data["defaults"]:
                self.assertIn(section, CONFIG_SCHEMA, f"{name} has unknown section '{section}'")
                for key in data["defaults"][section]:
                    self.assertIn(key, CONFIG_SCHEMA[section], f"{name} has unknown key {section}.{key}")

    def test_every_scenario_has_a_runner(self):
        self.assertEqual(router.list_scenarios(), sorted(SCENARIOS))

    def test_list_and_get(self):
        names = [name for name, _ in list_scenarios()]
        self.assertEqual(len(names), 8)
        self.assertIn("gaussian_spread", names)
        self.assertIsNone(get_scenario("nonexistent"))

    def test_defaults_merge(self):
        defaults = scenario_defaults("kahler_check")
        self.assertEqual(defaults["scenario"]["seed"], 42)
        self.assertEqual(defaults["evolution"]["cfl"], 0.1)

    def test_scenario_name_normalized(self):
        self.assertEqual(validate_scenario_name("Kahler Check"), "kahler_check")
        self.assertEqual(validate_scenario_name(" gaussian-spread "), "gaussian_spread")

    def test_scenario_name_suggestion(self):
        with self.assertRaises(ConfigError) as ctx:
            validate_scenario_name("gausian-spread", line=3)
        self.assertIn("Did you mean 'gaussian_spread'?", str(ctx.exception))
        self.assertEqual(ctx.exception.line, 3)

    def test_scenario_name_without_match(self):
        with self.assertRaises(ConfigError) as ctx:
            validate_scenario_name("zzzzzz")
        self.assertIn("Available: ", str(ctx.exception))

    def test_relation_family(self):
        self.assertEqual(relation_family("{L_x,A_y}"), "L_A")
        self.assertEqual(relation_family("{H,G_z}"), "H_G")


class TestConfigParsing(unittest.TestCase):

    def setUp(self):
        patcher = patch.dict(os.environ)
        patcher.start()
        self.addCleanup(patcher.stop)
        os.environ.pop(OUTPUT_DIR_ENV, None)

    def test_minimal_config_uses_defaults(self):
        config = parse_config_text(MINIMAL.format(name="gaussian_spread"))
        self.assertEqual(config.name, "gaussian_spread")
        self.assertEqual(config.grid.points, (256,))
        self.assertEqual(config.grid.scheme, "spectral")
        self.assertEqual(config.evolution.integrator, "crank_nicolson_psi")
        self.assertEqual(config.output_dir, Path("probgeo_output") / "gaussian_spread")

    def test_horizon_sets_steps(self):
        config = parse_config_text(_config("gaussian_spread", "[evolution]\nhorizon = 1.0\ndt = 0.03\n"))
        self.assertEqual(config.evolution.steps, 34)
        self.assertAlmostEqual(config.evolution.dt * config.evolution.steps, 1.0, places=12)
        self.assertEqual(config.horizon, 1.0)

    def test_vectors_broadcast(self):
        config = parse_config_text(_config("flat_coords_check", "[grid]\ndim = 2\nextent = 8.0\npoints = 32, 48\n"))
        self.assertEqual(config.grid.extents, (8.0, 8.0))
        self.assertEqual(config.grid.points, (32, 48))

    def test_comments_and_case(self):
        text = "# header\n[Scenario]\nname = Kahler-Check  # trailing\n[physics]\nmass = 2\nALPHA = 0.5\n"
        config = parse_config_text(text)
        self.assertEqual(config.name, "kahler_check")
        self.assertEqual(config.mass, 2.0)
        self.assertEqual(config.alpha, 0.5)

    def test_missing_mass_reports_section_line(self):
        text = "[scenario]\nname = kahler_check\n\n[physics]\nalpha = 1.0\n"
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text(text)
        self.assertEqual(ctx.exception.line, 4)
        self.assertEqual(ctx.exception.key, "physics.mass")
        self.assertTrue(str(ctx.exception).startswith("line 4: "))

    def test_missing_physics_section(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text("[scenario]\nname = kahler_check\n")
        self.assertIn("missing section [physics]", str(ctx.exception))
        self.assertEqual(ctx.exception.line, 2)

    def test_unknown_key_suggestion(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text(_config("kahler_check", "[grid]\npoint = 64\n"))
        self.assertIn("Did you mean 'points'?", str(ctx.exception))
        self.assertEqual(ctx.exception.line, 4)

    def test_unknown_section(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text("[physic]\nmass = 1\n")
        self.assertIn("Did you mean 'physics'?", str(ctx.exception))
        self.assertEqual(ctx.exception.line, 1)

    def test_unknown_scenario(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text(MINIMAL.format(name="kahler_chek"))
        self.assertIn("Did you mean 'kahler_check'?", str(ctx.exception))
        self.assertEqual(ctx.exception.line, 2)

    def test_bad_value(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text(_config("kahler_check", physics="mass = heavy\nalpha = 1.0"))
        self.assertIn("physics.mass", str(ctx.exception))
        self.assertEqual(ctx.exception.line, 5)

    def test_bad_choice(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text(_config("kahler_check", "[grid]\nboundary = periodc\n"))
        self.assertIn("Did you mean 'periodic'?", str(ctx.exception))

    def test_choices_keep_canonical_case(self):
        self.assertEqual(coerce_value("evolution", "integrator", "rk4_PS"), "rk4_PS")
        self.assertEqual(coerce_value("evolution", "integrator", " RK4_ps "), "rk4_PS")
        self.assertEqual(coerce_value("grid", "boundary", "Vanishing"), "vanishing")
        config = parse_config_text(_config("classical_advect", "[evolution]\nintegrator = rk4_PS\n"))
        self.assertEqual(config.evolution.integrator, "rk4_PS")

    def test_duplicate_key(self):
        with self.assertRaises(ConfigError):
            parse_config_text(_config("kahler_check", physics="mass = 1.0\nmass = 2.0\nalpha = 1.0"))

    def test_duplicate_section(self):
        with self.assertRaises(ConfigError):
            parse_config_text(MINIMAL.format(name="kahler_check") + "[physics]\ntime = 1.0\n")

    def test_key_outside_section(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text("mass = 1.0\n")
        self.assertEqual(ctx.exception.line, 1)

    def test_non_positive_physics(self):
        for physics in ("mass = 0\nalpha = 1", "mass = 1\nalpha = -2"):
            with self.assertRaises(ConfigError, msg=physics):
                parse_config_text(_config("kahler_check", physics=physics))

    def test_vector_length_mismatch(self):
        with self.assertRaises(ConfigError):
            parse_config_text(_config("kahler_check", "[grid]\ndim = 2\nextent = 1, 2, 3\n"))

    def test_invalid_grid(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text(_config("kahler_check", "[grid]\nboundary = vanishing\nscheme = spectral\n"))
        self.assertIn("Invalid grid", str(ctx.exception))

    def test_invalid_stencil_order(self):
        with self.assertRaises(ConfigError):
            parse_config_text(_config("kahler_check", "[grid]\nstencil_order = 5\n"))

    def test_momentum_must_fit_periodic_box(self):
        text = _config("gaussian_spread", "[initial_state]\nmomentum = 0.5\n")
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text(text)
        self.assertEqual(ctx.exception.key, "initial_state.momentum")
        quantized = 2.0 * np.pi / 40.0 * 3
        config = parse_config_text(_config("gaussian_spread", f"[initial_state]\nmomentum = {quantized!r}\n"))
        self.assertAlmostEqual(config.initial_state.momentum[0], quantized)

    def test_oracle_with_classical_hamiltonian(self):
        text = _config("gaussian_spread", "[evolution]\nhamiltonian = classical_free\n")
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text(text)
        self.assertIn("Invalid evolution settings", str(ctx.exception))

    def test_csv_family_needs_path(self):
        with self.assertRaises(ConfigError):
            parse_config_text(_config("gaussian_spread", "[initial_state]\nfamily = csv\n"))

    def test_output_dir_env_override(self):
        with tempfile.TemporaryDirectory() as tmp:
            os.environ[OUTPUT_DIR_ENV] = tmp
            config = parse_config_text(_config("kahler_check", "output_dir = elsewhere\n"))
            self.assertEqual(config.output_dir, Path(tmp) / "kahler_check")

    def test_parameters_exclude_output_dir(self):
        config = parse_config_text(_config("kahler_check", "output_dir = somewhere\n"))
        keys = [(section, key) for section, key, _ in config.parameters]
        self.assertNotIn(("scenario", "output_dir"), keys)
        values = {(section, key): value for section, key, value in config.parameters}
        self.assertEqual(values[("physics", "mass")], "1")
        self.assertEqual(values[("evolution", "refinement")], "false")
        self.assertEqual(config.output_dir, Path("somewhere"))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config("/nonexistent/scenario.cfg")

    def test_shipped_configs_validate(self):
        configs = Path(__file__).resolve().parent.parent / "configs"
        for path in sorted(configs.glob("*.cfg")):
            config = load_config(path)
            self.assertEqual(config.name, path.stem, str(path))


class TestSuggest(unittest.TestCase):

    def test_close_match(self):
        self.assertIn("Did you mean 'alpha'?", suggest("alpah", ["mass", "alpha"], "key"))

    def test_no_match_lists_candidates(self):
        self.assertIn("Available: mass, alpha", suggest("zzz", ["mass", "alpha"], "key"))


class TestReporting(unittest.TestCase):

    def test_check_comparisons(self):
        self.assertTrue(CheckRecord("a", 1e-9, 1e-6).passed)
        self.assertFalse(CheckRecord("a", 1e-3, 1e-6).passed)
        self.assertTrue(CheckRecord("a", 0.7, 0.5, ">=").passed)
        self.assertFalse(CheckRecord("a", float("nan"), 1.0).passed)
        self.assertEqual(CheckRecord("a", 1.0, 0.5).status, "FAIL")

    def test_unknown_comparison(self):
        with self.assertRaises(ValueError):
            RunReport("x").add_check("a", 1.0, 1.0, "<")

    def test_emit_plotdata_layout(self):
        report = RunReport("demo", parameters=(("physics", "mass", "1"),))
        report.add_check("residual", 0.25, 1.0)
        report.add_check("growth", 0.1, 0.5, ">=")
        report.add_table("values.csv", ("t", "v"), [[0.0, 1.5], [0.1, 2]])
        with tempfile.TemporaryDirectory() as tmp:
            written = emit_plotdata(report, tmp)
            self.assertEqual([p.name for p in written], ["summary.csv", "parameters.csv", "values.csv"])
            summary = (Path(tmp) / "summary.csv").read_text(encoding="utf-8").splitlines()
            self.assertEqual(summary, [
                "check,value,tolerance,status",
                "scenario,demo,,FAIL",
                "residual,0.25,1,PASS",
                "growth,0.10000000000000001,0.5,FAIL",
            ])
            values = (Path(tmp) / "values.csv").read_text(encoding="utf-8").splitlines()
            self.assertEqual(values, ["t,v", "0,1.5", "0.10000000000000001,2"])

    def test_snapshots(self):
        grid = GridSpec(dim=1, extents=10.0, points=16)
        report = RunReport("demo")
        report.add_snapshot(7, gaussian_state(grid, 1.0))
        with tempfile.TemporaryDirectory() as tmp:
            written = emit_plotdata(report, tmp)
            self.assertEqual(written[-1].name, "field_000007.csv")

    def test_unwritable_output(self):
        with tempfile.TemporaryDirectory() as tmp:
            blocker = Path(tmp) / "file"
            blocker.write_text("x", encoding="utf-8")
            with self.assertRaises(OutputError) as ctx:
                emit_plotdata(RunReport("demo"), blocker)
            self.assertIn(str(blocker), str(ctx.exception))


class TestRouter(unittest.TestCase):

    def test_unknown_scenario(self):
        local = ScenarioRouter()
        local.register("a", lambda config, report: None)

        class Stub:
            name = "b"

        with self.assertRaises(ConfigError):
            local.dispatch(Stub(), RunReport("b"))

    def test_dispatch(self):
        calls = []
        local = ScenarioRouter()
        local.register_many({"a": lambda config, report: calls.append(config.name)})

        class Stub:
            name = "a"

        local.dispatch(Stub(), RunReport("a"))
        self.assertEqual(calls, ["a"])


class TestRunner(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        patcher = patch.dict(os.environ)
        patcher.start()
        self.addCleanup(patcher.stop)
        os.environ.pop(OUTPUT_DIR_ENV, None)

    def _parse(self, name, extra, out):
        return parse_config_text(_config(name, f"output_dir = {Path(self.tmp.name) / out}\nsamples = 3\n{extra}"))

    def test_kahler_check_passes(self):
        result = run(self._parse("kahler_check", "", "k"))
        self.assertTrue(result.passed, "\n".join(result.summary_lines()))
        names = [c.check for c in result.checks]
        for expected in ("kahler_compatibility", "kahler_hermitian", "kahler_complex_structure",
                         "defect_detection", "appendix_incompatible_flagged"):
            self.assertIn(expected, names)
        self.assertEqual(result.exit_code, 0)

    def test_outputs_are_byte_identical(self):
        first = run(self._parse("kahler_check", "", "a"))
        second = run(self._parse("kahler_check", "", "b"))
        self.assertEqual([p.name for p in first.files], [p.name for p in second.files])
        for a, b in zip(first.files, second.files):
            self.assertEqual(Path(a).read_bytes(), Path(b).read_bytes(), f"{Path(a).name} differs")

    def test_flat_coords_check_passes(self):
        result = run(self._parse("flat_coords_check", "", "f"))
        self.assertTrue(result.passed, "\n".join(result.summary_lines()))

    def test_fisher_check_passes(self):
        config = parse_config_text(
            f"[scenario]\nname = fisher_check\nsamples = 2\noutput_dir = {Path(self.tmp.name) / 'fi'}\n"
            "[physics]\nmass = 1.0\nalpha = 2.0\n"
        )
        result = run(config)
        self.assertTrue(result.passed, "\n".join(result.summary_lines()))
        gamma = (Path(self.tmp.name) / "fi" / "gamma_gaussian.csv").read_text(encoding="utf-8").splitlines()
        self.assertEqual(gamma[0], "x")
        self.assertAlmostEqual(float(gamma[1]), 1.0, delta=1e-6)

    def test_dirac_check_passes(self):
        config = self._parse("dirac_check", "[evolution]\nhorizon = 0.2\n", "d")
        result = run(config)
        self.assertTrue(result.passed, "\n".join(result.summary_lines()))

    def _checks(self, result):
        return {c.check: c for c in result.checks}

    def test_algebra_check_passes(self):
        result = run(self._parse("algebra_check", "[grid]\npoints = 96\n", "alg"))
        self.assertTrue(result.passed, "\n".join(result.summary_lines()))
        checks = self._checks(result)
        for family in ("H_A", "H_L", "H_G", "L_A", "L_L", "L_G", "A_A", "A_G", "G_G"):
            self.assertIn(f"bracket_{family}", checks)
        self.assertTrue(checks["admissibility_nodes"].passed)
        self.assertTrue(checks["counterexample_homogeneity_violated"].passed)

    def test_gaussian_spread_passes(self):
        result = run(self._parse("gaussian_spread", "", "gs"))
        self.assertTrue(result.passed, "\n".join(result.summary_lines()))
        checks = self._checks(result)
        self.assertIn("sigma_closed_form", checks)
        self.assertLess(checks["galilean_covariance"].value, 1e-4)

    def test_classical_advect_passes(self):
        result = run(self._parse("classical_advect", "", "ca"))
        self.assertTrue(result.passed, "\n".join(result.summary_lines()))
        self.assertIn("width_change", self._checks(result))

    def test_cross_validate_passes(self):
        result = run(self._parse("cross_validate", "", "cv"))
        self.assertTrue(result.passed, "\n".join(result.summary_lines()))
        checks = self._checks(result)
        self.assertGreaterEqual(checks["sigma_growth"].value, 0.5)
        self.assertLessEqual(checks["sigma_closed_form"].value, 1e-4)
        self.assertLessEqual(checks["psi_l2_discrepancy"].value, 1e-4)
        self.assertNotIn("refinement_order", checks)

    def test_cross_validate_refinement_order(self):
        extra = "[evolution]\nhorizon = 0.5\nrefinement = true\n"
        result = run(self._parse("cross_validate", extra, "cvr"))
        checks = self._checks(result)
        self.assertGreaterEqual(checks["refinement_order"].value, 1.7, "\n".join(result.summary_lines()))
        rows = (Path(self.tmp.name) / "cvr" / "refinement.csv").read_text(encoding="utf-8").splitlines()
        self.assertEqual(rows[0], "points,dx,psi_L2")
        self.assertEqual([int(row.split(",")[0]) for row in rows[1:]], [48, 96])

    def test_no_emit(self):
        result = run(self._parse("flat_coords_check", "", "none"), emit=False)
        self.assertEqual(result.files, ())
        self.assertFalse((Path(self.tmp.name) / "none").exists())

    def test_csv_initial_state(self):
        cfg_dir = Path(self.tmp.name)
        config = load_config(self._write_csv_config(cfg_dir))
        state = initial_state(config, np.random.default_rng(0))
        expected = gaussian_state(config.grid, 1.0, sigma=1.3)
        self.assertTrue(np.allclose(state.P.values, expected.P.values, rtol=1e-14, atol=0.0))

    def test_missing_csv_initial_state(self):
        cfg_dir = Path(self.tmp.name)
        path = self._write_csv_config(cfg_dir)
        (cfg_dir / "state.csv").unlink()
        with self.assertRaises(ConfigError):
            initial_state(load_config(path), np.random.default_rng(0))

    def _write_csv_config(self, cfg_dir):
        base = parse_config_text(MINIMAL.format(name="gaussian_spread"))
        write_state(cfg_dir / "state.csv", gaussian_state(base.grid, 1.0, sigma=1.3))
        path = cfg_dir / "scenario.cfg"
        path.write_text(
            MINIMAL.format(name="gaussian_spread") + "[initial_state]\nfamily = csv\npath = state.csv\n",
            encoding="utf-8",
        )
        return path


class TestCommandLine(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        patcher = patch.dict(os.environ)
        patcher.start()
        self.addCleanup(patcher.stop)
        os.environ[OUTPUT_DIR_ENV] = self.tmp.name

    def _write(self, text):
        path = Path(self.tmp.name) / "scenario.cfg"
        path.write_text(text, encoding="utf-8")
        return str(path)

    def _main(self, argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = cli.main(argv)
        return code, out.getvalue(), err.getvalue()

    def test_list_scenarios(self):
        code, out, _ = self._main(["list-scenarios"])
        self.assertEqual(code, cli.EXIT_PASS)
        for name in SCENARIOS:
            self.assertIn(name, out)

    def test_validate(self):
        code, out, _ = self._main(["validate", self._write(MINIMAL.format(name="kahler_check"))])
        self.assertEqual(code, cli.EXIT_PASS)
        self.assertIn("OK: kahler_check", out)

    def test_config_error_exit_code(self):
        path = self._write("[scenario]\nname = kahler_check\n[physics]\nalpha = 1.0\n")
        code, _, err = self._main(["validate", path])
        self.assertEqual(code, cli.EXIT_CONFIG)
        self.assertIn("Error: line 3", err)
        code, _, _ = self._main(["run", path])
        self.assertEqual(code, cli.EXIT_CONFIG)

    def test_run_writes_outputs(self):
        path = self._write(MINIMAL.format(name="flat_coords_check").replace("[physics]", "samples = 2\n[physics]"))
        code, out, _ = self._main(["run", path])
        self.assertEqual(code, cli.EXIT_PASS, out)
        self.assertTrue((Path(self.tmp.name) / "flat_coords_check" / "summary.csv").exists())

    def test_failed_check_exit_code(self):
        failed = RunResult("demo", "FAIL", (CheckRecord("x", 1.0, 0.5),), self.tmp.name, ())
        path = self._write(MINIMAL.format(name="kahler_check"))
        with patch("scenario_layer.cli.run", return_value=failed):
            code, out, _ = self._main(["run", path])
        self.assertEqual(code, cli.EXIT_FAIL)
        self.assertIn("FAIL x", out)

    def test_runtime_error_exit_code(self):
        path = self._write(MINIMAL.format(name="kahler_check"))
        with patch("scenario_layer.cli.run", side_effect=EvolutionError("dt too large")):
            code, _, err = self._main(["run", path])
        self.assertEqual(code, cli.EXIT_FAIL)
        self.assertIn("dt too large", err)


if __name__ == "__main__":
    unittest.main()
