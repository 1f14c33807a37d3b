import json
import math

import numpy as np
import pytest

from fuzzymon.cli import main
from fuzzymon.config import ConfigError, ExperimentConfig
from fuzzymon.core import Readout
from fuzzymon.oracles import free_solution, zeno_solution
from fuzzymon.selective import evolve_selective

from conftest import T_R, state

BASE = """
system.levels     = 0.0, 1.0
system.coupling_v = 1.0
measurement.kappa = 1.6
measurement.duration = {duration}
measurement.dt    = {dt}
initial.coeffs    = 1+0j, 0j
"""


def base_config(duration=2 * T_R, n_steps=400, extra=""):
    return BASE.format(duration=repr(duration), dt=repr(duration / n_steps)) + extra


def write_config(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path) as fh:
        header = fh.readline()
        assert header.startswith("# fuzzymon-")
        assert "config_sha256=" in header
        columns = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return columns, rows


def column(columns, rows, name, cast=float):
    idx = columns.index(name)
    return np.array([cast(r[idx]) for r in rows])


class TestConfig:
    def test_round_trip_lossless(self, tmp_path):
        text = base_config(extra="sample.seed = 9\nsample.band_widths = 1.5, 2.5\n")
        cfg = ExperimentConfig.from_text(text)
        again = ExperimentConfig.from_text(cfg.to_text())
        assert cfg.to_text() == again.to_text()
        assert cfg.sha256() == again.sha256()
        assert again.seed == 9
        assert again.band_widths == (1.5, 2.5)

    def test_reports_line_and_key(self):
        bad = base_config().replace("measurement.kappa = 1.6", "measurement.kappa = fast")
        with pytest.raises(ConfigError, match=r"line \d+: measurement.kappa"):
            ExperimentConfig.from_text(bad)

    def test_rejects_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            ExperimentConfig.from_text(base_config(extra="sample.n_sample = 3\n"))

    def test_rejects_core_invariant_violations(self):
        bad = base_config().replace("0.0, 1.0", "1.0, 0.0")
        with pytest.raises(ConfigError, match="increasing"):
            ExperimentConfig.from_text(bad)
        bad = base_config().replace("1+0j, 0j", "1+0j, 1+0j")
        with pytest.raises(ConfigError, match="normalised"):
            ExperimentConfig.from_text(bad)

    def test_general_coupling_rows(self):
        text = base_config().replace(
            "system.coupling_v = 1.0",
            "system.coupling_row.0 = 0j, 0.5+0.5j\nsystem.coupling_row.1 = 0.5-0.5j, 0j",
        )
        cfg = ExperimentConfig.from_text(text)
        assert cfg.system.coupling[0, 1] == 0.5 + 0.5j

    def test_missing_required_key(self):
        with pytest.raises(ConfigError, match="measurement.kappa"):
            ExperimentConfig.from_text("system.levels = 0, 1\n")


class TestEvolveCommand:
    def test_unitary_run_keeps_density_one(self, tmp_path):
        text = base_config(extra="readout.kind = constant\n").replace(
            "measurement.kappa = 1.6", "measurement.kappa = 0.0"
        )
        cfg_path = write_config(tmp_path, text)
        assert main(["evolve", "--config", cfg_path, "--out", str(tmp_path)]) == 0
        columns, rows = read_csv(tmp_path / "evolve.csv")
        p = column(columns, rows, "prob_density")
        assert np.allclose(p, 1.0, atol=1e-12)

    def test_zeno_run_final_density(self, tmp_path):
        t_lr = 0.01 * T_R
        text = (
            "system.levels     = 0.0, 1.0\n"
            "system.coupling_v = 1.0\n"
            f"measurement.kappa = {1.0 / t_lr!r}\n"
            f"measurement.duration = {T_R!r}\n"
            f"measurement.dt    = {T_R / 20000!r}\n"
            "initial.coeffs    = 0.6+0j, 0.8+0j\n"
            "readout.kind      = constant\n"
            "evolve.record_stride = 20000\n"
        )
        cfg_path = write_config(tmp_path, text)
        assert main(["evolve", "--config", cfg_path, "--out", str(tmp_path)]) == 0
        columns, rows = read_csv(tmp_path / "evolve.csv")
        p_final = column(columns, rows, "prob_density")[-1]
        oracle = zeno_solution(state(0.6, 0.8), t_lr, T_R, T_R).norm_squared
        assert p_final == pytest.approx(oracle, rel=1e-4)
        # approximately the initial occupation, up to the band-leak factor
        assert p_final == pytest.approx(0.36, rel=0.25)

    def test_free_five_level_matches_oracle(self, tmp_path):
        rng = np.random.default_rng(4)
        levels = np.round(np.cumsum(rng.uniform(0.4, 1.0, 5)), 6)
        values = rng.uniform(levels[0], levels[-1], 50)
        readout_file = tmp_path / "record.txt"
        np.savetxt(readout_file, values, fmt="%.17g")
        coeffs = rng.normal(size=5) + 1j * rng.normal(size=5)
        coeffs /= np.linalg.norm(coeffs)
        coeff_text = ", ".join(repr(complex(c)).strip("()") for c in coeffs)
        text = (
            f"system.levels = {', '.join(repr(float(v)) for v in levels)}\n"
            "measurement.kappa = 0.9\n"
            "measurement.duration = 2.0\n"
            "measurement.dt = 0.04\n"
            f"initial.coeffs = {coeff_text}\n"
            "readout.kind = file\n"
            f"readout.path = {readout_file}\n"
            "evolve.record_stride = 50\n"
        )
        cfg_path = write_config(tmp_path, text)
        assert main(["evolve", "--config", cfg_path, "--out", str(tmp_path)]) == 0
        columns, rows = read_csv(tmp_path / "evolve.csv")
        cfg = ExperimentConfig.from_file(cfg_path)
        ref = free_solution(
            cfg.initial, Readout(values, 0.04), cfg.system, cfg.measurement
        )
        got = np.array(
            [
                column(columns, rows, f"re_c{i + 1}")[-1]
                + 1j * column(columns, rows, f"im_c{i + 1}")[-1]
                for i in range(5)
            ]
        )
        assert np.max(np.abs(got - ref.coeffs)) < 1e-10

    def test_missing_readout_file_exits_2(self, tmp_path):
        text = base_config(
            extra="readout.kind = file\nreadout.path = nowhere.txt\n"
        )
        cfg_path = write_config(tmp_path, text)
        assert main(["evolve", "--config", cfg_path, "--out", str(tmp_path)]) == 2

    def test_numerical_failure_exits_3(self, tmp_path, monkeypatch):
        import fuzzymon.cli as cli_mod

        def boom(*a, **k):
            raise RuntimeError("synthetic numerical failure")

        monkeypatch.setattr(cli_mod, "evolve_selective", boom)
        cfg_path = write_config(tmp_path, base_config())
        assert main(["evolve", "--config", cfg_path, "--out", str(tmp_path)]) == 3


class TestSampleCommand:
    def test_infinite_band_membership_is_total(self, tmp_path):
        text = base_config(
            n_steps=100,
            extra="sample.n_samples = 150\nsample.seed = 4\nsample.band_widths = inf\n",
        )
        cfg_path = write_config(tmp_path, text)
        assert main(["sample", "--config", cfg_path, "--out", str(tmp_path)]) == 0
        columns, rows = read_csv(tmp_path / "ensemble.csv")
        flags = column(columns, rows, "in_band_l1_winf", cast=int)
        assert np.all(flags == 1)

    def test_long_free_run_band_fraction(self, tmp_path):
        width = math.sqrt(20 / 4 + 10)
        text = (
            "system.levels = 0.0, 1.0\n"
            "measurement.kappa = 1.0\n"
            "measurement.duration = 20.0\n"
            "measurement.dt = 1.0\n"
            "initial.coeffs = 0.6+0j, 0.8+0j\n"
            "sample.n_samples = 3000\n"
            "sample.seed = 10\n"
            f"sample.band_widths = {width!r}\n"
        )
        cfg_path = write_config(tmp_path, text)
        assert main(["sample", "--config", cfg_path, "--out", str(tmp_path)]) == 0
        columns, rows = read_csv(tmp_path / "ensemble.csv")
        name = [c for c in columns if c.startswith("in_band_l1_")][0]
        frac = np.mean(column(columns, rows, name, cast=int))
        se = math.sqrt(0.36 * 0.64 / 3000)
        assert abs(frac - 0.36) <= 3 * se + 0.01

    def test_identical_seeds_identical_files(self, tmp_path):
        text = base_config(n_steps=80, extra="sample.n_samples = 64\n")
        cfg_path = write_config(tmp_path, text)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["sample", "--config", cfg_path, "--seed", "5", "--out", str(out1)]) == 0
        assert main(["sample", "--config", cfg_path, "--seed", "5", "--out", str(out2)]) == 0
        assert (out1 / "ensemble.csv").read_bytes() == (out2 / "ensemble.csv").read_bytes()
        out3 = tmp_path / "c"
        assert main(["sample", "--config", cfg_path, "--seed", "6", "--out", str(out3)]) == 0
        assert (out1 / "ensemble.csv").read_bytes() != (out3 / "ensemble.csv").read_bytes()

    def test_readout_dump_roundtrips_as_input(self, tmp_path):
        text = base_config(
            n_steps=60,
            extra="sample.n_samples = 3\nsample.store_readouts = true\n",
        )
        cfg_path = write_config(tmp_path, text)
        assert main(["sample", "--config", cfg_path, "--out", str(tmp_path)]) == 0
        columns, rows = read_csv(tmp_path / "ensemble.csv")
        rel = rows[0][columns.index("readout_path")]
        dump = tmp_path / rel
        values = np.loadtxt(dump)
        assert values.shape == (60,)
        text2 = base_config(
            n_steps=60, extra=f"readout.kind = file\nreadout.path = {dump}\n"
        )
        cfg2 = write_config(tmp_path, text2, name="replay.cfg")
        assert main(["evolve", "--config", cfg2, "--out", str(tmp_path)]) == 0


@pytest.fixture(scope="module")
def figure_dir(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("figure")
    text = base_config(
        duration=3 * T_R,
        n_steps=1500,
        extra=(
            "figure.ratio = 0.8\n"
            "figure.n_samples = 2000\n"
            "sample.seed = 12\n"
            "figure.band_widths = 0.5, 1, 1.5, 2, 2.5, 3, 4, inf\n"
        ),
    )
    cfg_path = write_config(tmp_path, text)
    assert main(["figure", "--config", cfg_path, "--out", str(tmp_path)]) == 0
    return tmp_path


class TestFigureCommand:
    def test_state_oscillation_slower_than_flopping(self, figure_dir):
        columns, rows = read_csv(figure_dir / "figure_states.csv")
        t = column(columns, rows, "t")
        pop1 = column(columns, rows, "pop1")
        d = pop1 - 0.5
        idx = np.where(np.diff(np.sign(d)) != 0)[0]
        crossings = t[idx]
        period = 2 * np.mean(np.diff(crossings))
        assert period > T_R

    def test_record_curve_oscillates_around_mid_line(self, figure_dir):
        columns, rows = read_csv(figure_dir / "figure_readout.csv")
        e = column(columns, rows, "e_prob")
        assert e.min() < 0.2 and e.max() > 0.8
        assert abs(np.mean(np.sign(e - 0.5))) < 0.5
        lo2 = column(columns, rows, "lo_w2")
        hi3 = column(columns, rows, "hi_w3")
        assert np.all(lo2 < e) and np.all(e < hi3)

    def test_band_probabilities_monotone_and_saturating(self, figure_dir):
        columns, rows = read_csv(figure_dir / "figure_bands.csv")
        p = column(columns, rows, "probability")
        assert np.all(np.diff(p) >= 0)
        assert p[-1] == 1.0

    def test_requires_driven_two_level(self, tmp_path):
        text = base_config().replace("system.coupling_v = 1.0\n", "")
        cfg_path = write_config(tmp_path, text)
        assert main(["figure", "--config", cfg_path, "--out", str(tmp_path)]) == 2

    def test_deterministic_given_config_and_seed(self, tmp_path):
        text = base_config(
            duration=2 * T_R,
            n_steps=400,
            extra="figure.ratio = 0.8\nfigure.n_samples = 500\nsample.seed = 2\n",
        )
        cfg_path = write_config(tmp_path, text)
        out1, out2 = tmp_path / "f1", tmp_path / "f2"
        assert main(["figure", "--config", cfg_path, "--out", str(out1)]) == 0
        assert main(["figure", "--config", cfg_path, "--out", str(out2)]) == 0
        for name in ("figure_states.csv", "figure_readout.csv", "figure_bands.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestRegimeCommand:
    def _run(self, tmp_path, capsys, kappa, duration, v=1.0):
        text = (
            "system.levels = 0.0, 1.0\n"
            f"system.coupling_v = {v!r}\n"
            f"measurement.kappa = {kappa!r}\n"
            f"measurement.duration = {duration!r}\n"
            f"measurement.dt = {duration / 100!r}\n"
            "initial.coeffs = 1+0j, 0j\n"
        )
        cfg_path = write_config(tmp_path, text)
        assert main(["regime", "--config", cfg_path, "--out", str(tmp_path)]) == 0
        payload = json.loads(capsys.readouterr().out)
        return payload

    def test_zeno_classification(self, tmp_path, capsys):
        t_lr = 0.01 * T_R
        payload = self._run(tmp_path, capsys, kappa=1.0 / t_lr, duration=10 * T_R)
        assert payload["regime"] == "ZENO"
        assert payload["t_lr"] == pytest.approx(t_lr)
        assert payload["nu"] == pytest.approx(math.pi * t_lr / T_R)

    def test_strong_rabi_classification(self, tmp_path, capsys):
        t_lr = 2000 * T_R
        payload = self._run(
            tmp_path, capsys, kappa=1.0 / t_lr, duration=100 * T_R
        )
        assert payload["regime"] == "STRONG_RABI"

    def test_correlated_rabi_classification(self, tmp_path, capsys):
        t_lr = T_R / (2 * math.pi * 0.8)
        payload = self._run(tmp_path, capsys, kappa=1.0 / t_lr, duration=T_R)
        assert payload["regime"] == "CORRELATED_RABI"
        assert (tmp_path / "regime.json").exists()

    def test_bad_config_exits_2(self, tmp_path):
        cfg_path = write_config(tmp_path, "system.levels = oops\n")
        assert main(["regime", "--config", cfg_path]) == 2
        assert main(["regime", "--config", str(tmp_path / "missing.cfg")]) == 2
