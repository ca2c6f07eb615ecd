import json
import math

import pytest

from vpl.cli import (
    ConfigError,
    builtin_scenarios,
    convergence_study,
    field_au_from_v_per_m,
    main,
    parse_scenario,
    pbar_from_kev,
    run_scenario,
)
from vpl.delta_pt import DeltaPerturbation
from vpl.xfield_pt import XFieldPerturbation

GOOD_CONFIG = """
[packet]
sigma = 0.02
energy_keV = 2.0
l = 1
[perturbation]
type = delta
lambda = 30
rho0 = 10
z0 = 0
[grid]
t = 3500
z = center
half_extent = auto
n = 61
[quadrature]
rel_tol = 1e-9
[outputs]
artifacts = density_map, zeros
"""


class TestUnits:
    def test_kev_conversion(self):
        assert pbar_from_kev(2.0) == pytest.approx(12.124238, abs=1e-5)

    def test_field_conversion(self):
        assert field_au_from_v_per_m(1.0e7) == pytest.approx(1.9447e-5, rel=1e-4)


class TestRegistry:
    def test_caption_parameters(self):
        reg = builtin_scenarios()
        scn = reg["fig3_l3"]
        assert isinstance(scn.perturbation, DeltaPerturbation)
        assert scn.perturbation.lam == 0.2
        assert scn.perturbation.rho0 == 10.0
        assert scn.packet.sigma == 0.02
        assert scn.t == 3500.0
        assert scn.packet.pbar == pytest.approx(12.124238, abs=1e-5)
        scn5 = reg["fig5_l1"]
        assert isinstance(scn5.perturbation, XFieldPerturbation)
        assert scn5.perturbation.E0 == pytest.approx(1.9447e-5, rel=1e-4)
        assert scn5.perturbation.d == 10.0
        assert scn5.perturbation.a == 0.0
        lam_by_l = {1: 30.0, 3: 0.2, 5: 0.007, 7: 2e-4}
        for l, lam in lam_by_l.items():
            assert reg[f"fig1_l{l}"].perturbation.lam == lam
        lam_even = {2: 3.0, 4: 0.045, 6: 0.002, 8: 4e-5}
        for l, lam in lam_even.items():
            assert reg[f"fig4_l{l}"].perturbation.lam == lam

    def test_all_present(self):
        reg = builtin_scenarios()
        for fig, ls in ((1, (1, 3, 5, 7)), (2, (2, 4, 6, 8)), (3, (1, 3, 5, 7)),
                        (4, (2, 4, 6, 8)), (5, (1, 3, 5, 7)), (6, (2, 4, 6, 8))):
            for l in ls:
                assert f"fig{fig}_l{l}" in reg


class TestConfigParsing:
    def test_good_config(self, tmp_path):
        path = tmp_path / "scn.ini"
        path.write_text(GOOD_CONFIG)
        scn = parse_scenario(path)
        assert scn.packet.l == 1
        assert scn.outputs == ("density_map", "zeros")
        assert math.isnan(scn.z)

    @pytest.mark.parametrize(
        "mutation,needle",
        [
            (("sigma = 0.02", "nosigma = 1"), "sigma"),
            (("type = delta", "type = weird"), "type"),
            (("artifacts = density_map, zeros", "artifacts ="), "outputs"),
            (("lambda = 30", "lambda = abc"), "lambda"),
            (("artifacts = density_map, zeros", "artifacts = bogus_thing"), "bogus_thing"),
        ],
    )
    def test_config_errors_name_keys(self, tmp_path, mutation, needle):
        path = tmp_path / "scn.ini"
        path.write_text(GOOD_CONFIG.replace(*mutation))
        with pytest.raises(ConfigError, match=needle):
            parse_scenario(path)

    def test_exit_codes(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text(GOOD_CONFIG.replace("artifacts = density_map, zeros", "artifacts ="))
        assert main(["run", str(bad), "--out", str(tmp_path)]) == 2
        assert "outputs" in capsys.readouterr().err
        assert main(["run", "not_a_scenario_name", "--out", str(tmp_path)]) == 2


class TestRun:
    def test_artifacts_and_manifest(self, tmp_path):
        path = tmp_path / "scn.ini"
        path.write_text(GOOD_CONFIG)
        scn = parse_scenario(path)
        manifest = run_scenario(scn, tmp_path / "out", workers=1)
        assert manifest["zero_count"] == 1
        assert manifest["total_charge"] == 1
        assert (tmp_path / "out" / "scn_total.csv").exists()
        assert (tmp_path / "out" / "scn_zeros.json").exists()
        assert (tmp_path / "out" / "scn_manifest.json").exists()
        with open(tmp_path / "out" / "scn_zeros.json") as fh:
            zeros = json.load(fh)["zeros"]
        assert len(zeros) == 1 and zeros[0]["charge"] == 1

    def test_csv_reproducible_across_runs(self, tmp_path):
        path = tmp_path / "scn.ini"
        path.write_text(GOOD_CONFIG)
        scn = parse_scenario(path)
        run_scenario(scn, tmp_path / "o1", workers=1)
        run_scenario(scn, tmp_path / "o2", workers=1)
        b1 = (tmp_path / "o1" / "scn_total.csv").read_bytes()
        b2 = (tmp_path / "o2" / "scn_total.csv").read_bytes()
        assert b1 == b2

    def test_list_scenarios_command(self, capsys):
        assert main(["list-scenarios"]) == 0
        out = capsys.readouterr().out
        assert "fig3_l3" in out and "fig5_l1" in out


class TestConvergence:
    def test_ladder_validation(self):
        scn = builtin_scenarios()["fig3_l1"]
        with pytest.raises(ConfigError):
            convergence_study(scn, "rel_tol", [1e-6, 1e-7])

    def test_rel_tol_ladder_on_point_defect(self):
        # the point-defect quadrature already sits at its noise floor at
        # loose tolerance, so the ladder just has to stay flat and tiny
        scn = builtin_scenarios()["fig3_l1"]
        result = convergence_study(scn, "rel_tol", [1e-5, 1e-7, 1e-9], workers=1)
        assert len(result["diffs"]) == 2
        assert all(d < 1e-6 for d in result["diffs"])
        assert isinstance(result["monotone"], bool)
