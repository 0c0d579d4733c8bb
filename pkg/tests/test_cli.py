import io
import json
import math

import pytest

from fisherlens import __version__, cli
from fisherlens.cli import ConfigError, build_config, main, parse_expr, parse_list, read_config_file
from fisherlens.numerics import ConvergenceError


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def read_rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
    return header, rows


class TestParsing:
    @pytest.mark.parametrize(
        "text, value",
        [("pi/6", math.pi / 6), ("3*pi/8", 3 * math.pi / 8), ("-0.25", -0.25), ("pi", math.pi), ("2.5e-1", 0.25), (" pi / 2 ", math.pi / 2)],
    )
    def test_expr(self, text, value):
        assert parse_expr(text) == pytest.approx(value, rel=1e-15)

    @pytest.mark.parametrize("text", ["", "pi+1", "abc", "pi/", "*2"])
    def test_bad_expr(self, text):
        with pytest.raises(ConfigError):
            parse_expr(text)

    def test_list(self):
        assert parse_list("0, pi/2,1") == [0.0, math.pi / 2, 1.0]


class TestConfig:
    def test_file_then_flags(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\nr = 1/2\nalpha = pi/8  # trailing\npoints = 11\n")
        values = read_config_file(path)
        assert values == {"r": 0.5, "alpha": math.pi / 8, "points": 11}
        cfg = build_config("sweep", values, {"points": 21, "sigma": None})
        assert (cfg.r, cfg.alpha, cfg.points, cfg.sigma) == (0.5, math.pi / 8, 21, 1.0)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("colour = red\n")
        with pytest.raises(ConfigError, match="unknown key"):
            read_config_file(path)
        code, _, err = run(["sweep", "--config", str(path)])
        assert code == 2 and "unknown key" in err

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            build_config("sweep", {}, {"s_min": 2.0, "s_max": 1.0})
        with pytest.raises(ConfigError):
            build_config("sweep", {}, {"sigma": 0.0})

    def test_canonical_excludes_output(self):
        a = build_config("sweep", {}, {"output_path": "a.csv"}).canonical()
        b = build_config("sweep", {}, {"output_path": "b.csv", "emit_svg": True}).canonical()
        assert a == b


class TestSweep:
    def test_single_source_constant(self):
        code, out, _ = run(["sweep", "--r", "0", "--points", "11"])
        assert code == 0
        header, rows = read_rows(out)
        assert header == ["s", "f_tot", "f_unentangled"]
        assert len(rows) == 11
        assert all(float(row["f_tot"]) == 0.25 for row in rows)

    def test_provenance_header(self):
        _, out, _ = run(["sweep", "--points", "3"])
        first = out.splitlines()[0]
        prefix = f"# fisherlens {__version__} config="
        assert first.startswith(prefix)
        config = json.loads(first[len(prefix):])
        assert config["points"] == 3 and config["command"] == "sweep"

    def test_balanced_minimum(self):
        _, out, _ = run(["sweep", "--r", "1", "--alpha", "pi/6", "--points", "501"])
        _, rows = read_rows(out)
        best = min(rows, key=lambda row: float(row["f_tot"]))
        assert float(best["s"]) == pytest.approx(1.52, abs=0.011)
        assert float(best["f_tot"]) == pytest.approx(0.14503, abs=1e-4)

    def test_with_oracle(self):
        _, out, _ = run(["sweep", "--r", "1/2", "--alpha", "pi/8", "--points", "6", "--with-oracle"])
        header, rows = read_rows(out)
        assert header[-1] == "f_oracle"
        for row in rows:
            exact, numeric = float(row["f_tot"]), float(row["f_oracle"])
            assert abs(exact - numeric) <= 1e-6 * max(exact, 1e-3)

    def test_file_output_and_svg(self, tmp_path):
        target = tmp_path / "nested" / "sweep.csv"
        code, out, _ = run(["sweep", "--points", "5", "--out", str(target), "--svg"])
        assert code == 0 and out == ""
        assert target.read_bytes().count(b"\n") == 7
        assert b"\r" not in target.read_bytes()
        assert target.with_suffix(".svg").read_text().startswith("<svg")

    def test_byte_reproducible(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(["sweep", "--points", "50", "--r", "1/4", "--out", str(a)])
        run(["sweep", "--points", "50", "--r", "1/4", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestReproduce:
    def test_files(self, tmp_path):
        code, out, _ = run(["reproduce", "fig2a", "--out", str(tmp_path), "--svg"])
        assert code == 0
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["fig2a.svg", "fig2a_r_0.csv", "fig2a_r_1-2.csv", "fig2a_r_1-4.csv", "fig2a_r_1.csv"]
        _, rows = read_rows((tmp_path / "fig2a_r_1.csv").read_text())
        assert len(rows) == 501

    def test_matched_bodies(self, tmp_path):
        run(["reproduce", "fig3a", "--out", str(tmp_path)])
        run(["reproduce", "fig3b", "--out", str(tmp_path)])
        for slug in ("pi-12", "pi-8", "pi-6", "pi-4"):
            a = (tmp_path / f"fig3a_alpha_{slug}.csv").read_text().split("\n", 1)[1]
            b = (tmp_path / f"fig3b_eta_{slug}.csv").read_text().split("\n", 1)[1]
            assert a == b

    def test_missing_figure(self):
        code, _, err = run(["reproduce"])
        assert code == 2 and "figure" in err

    def test_unknown_figure(self):
        code, _, _ = run(["reproduce", "fig9"])
        assert code == 2


class TestSLeast:
    def test_table(self):
        code, out, _ = run(["sleast"])
        assert code == 0
        header, rows = read_rows(out)
        assert header == ["alpha", "r", "phi", "s_least_analytic", "s_least_numeric", "f_min", "residual"]
        by_key = {(round(float(r["alpha"]), 6), round(float(r["phi"]), 6)): r for r in rows}
        pi6 = by_key[(round(math.pi / 6, 6), 0.0)]
        assert float(pi6["s_least_analytic"]) == pytest.approx(float(pi6["s_least_numeric"]), abs=1e-6)
        assert abs(float(pi6["residual"])) <= 1e-8
        pi4 = by_key[(round(math.pi / 4, 6), 0.0)]
        assert pi4["s_least_analytic"] == "0" and pi4["s_least_numeric"] == "0"
        quad = by_key[(round(math.pi / 6, 6), round(math.pi / 2, 6))]
        assert quad["s_least_analytic"] == "2" and quad["residual"] == ""

    def test_unmapped_rows_blank(self):
        _, out, _ = run(["sleast", "--alphas", "pi/6", "--rs", "1/2", "--phis", "0"])
        _, rows = read_rows(out)
        assert rows[0]["s_least_analytic"] == ""
        assert float(rows[0]["s_least_numeric"]) > 0


class TestOracleCheck:
    def test_small_sweep_passes(self, tmp_path):
        target = tmp_path / "check.csv"
        code, out, _ = run(["oracle-check", "--points", "3", "--out", str(target)])
        assert code == 0
        assert out.count("PASS") == 3
        _, rows = read_rows(target.read_text())
        assert len(rows) == 3 * 5 * 5 * 4
        quad = [row for row in rows if float(row["phi"]) == pytest.approx(math.pi / 2)]
        assert quad and all(row["f_weights"] == "0" for row in quad)

    def test_coarse_grid_fails(self):
        code, out, _ = run(["oracle-check", "--points", "2", "--grid-points", "201"])
        assert code == 4
        assert "FAIL grid-convergence" in out and "not converged" in out


class TestCrb:
    def test_small_run(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["crb", "--samples", "200", "--trials", "10", "--seed", "5"]
        code, out, _ = run(argv + ["--out", str(a)])
        assert code == 0 and "m Var F_cl" in out
        run(argv + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()
        header, rows = read_rows(a.read_text())
        assert "crb_classical" in header and "normalized_variance" in header
        assert int(rows[0]["trials"]) == 10


class TestExitCodes:
    def test_bad_angle(self):
        code, _, err = run(["sweep", "--alpha", "pi+1"])
        assert code == 2

    def test_no_command(self):
        assert run([])[0] == 2

    def test_version(self, capsys):
        assert run(["--version"])[0] == 0

    def test_numeric_failure(self, monkeypatch):
        def boom(config):
            raise ConvergenceError("did not converge")

        monkeypatch.setattr(cli, "run_sweep", boom)
        code, _, err = run(["sweep"])
        assert code == 3 and "numeric failure" in err
