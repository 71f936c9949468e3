import io
import json
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import KINDS, rng_for
from ncmac import io as ncio
from ncmac.cli import EXIT_NUMERIC, EXIT_USAGE, info_report, main, parse_snr
from ncmac.manifolds import Constellation, constraint_residual, random_constellation
from ncmac.optimizer import DescentTrace
from ncmac.sim import SerCurve


def run(argv, capsys=None):
    out = io.StringIO()
    code = main(argv, stdout=out)
    return code, out.getvalue()


class TestConstellationFile:
    @given(
        seed=st.integers(0, 2**32 - 1),
        kind=st.sampled_from(KINDS),
        tm=st.tuples(st.integers(2, 6), st.integers(1, 3)).filter(lambda x: x[0] > x[1]),
        sizes=st.lists(st.integers(1, 4), min_size=1, max_size=3),
    )
    def test_round_trip_is_bit_exact(self, seed, kind, tm, sizes):
        T, M = tm
        c = random_constellation(kind, T, M, sizes, rng_for(seed))
        cf = ncio.ConstellationFile(c, kind.value, "delta_ub", seed, 1.0 / 3.0, {"N": 3})
        back = ncio.loads(ncio.dumps(cf))
        for a, b in zip(c.codebooks, back.constellation.codebooks):
            assert a.tobytes() == b.tobytes()
        assert back.final_cost == 1.0 / 3.0 and back.extra == {"N": 3}
        assert (back.manifold, back.cost, back.seed) == (kind.value, "delta_ub", seed)

    def test_extreme_doubles(self):
        book = np.array([[[5e-324 + 1.7976931348623157e308j], [-0.0 + 0.1j], [np.nextafter(1, 2) - 1e-17j]]])
        c = Constellation((book,))
        back = ncio.loads(ncio.dumps(ncio.ConstellationFile(c))).constellation
        assert c.codebooks[0].tobytes() == back.codebooks[0].tobytes()

    def test_layout(self):
        book = np.arange(6).reshape(1, 3, 2) + 1j * np.arange(6).reshape(1, 3, 2)
        doc = json.loads(ncio.dumps(ncio.ConstellationFile(Constellation((book,)))))
        assert doc["header"]["format"] == "ncmac-constellation"
        assert doc["header"]["L"] == [1] and doc["header"]["T"] == 3
        assert doc["codebooks"][0][0] == [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0], [5.0, 5.0]]

    @pytest.mark.parametrize(
        "text",
        [
            "not json",
            '{"header": {"format": "other"}, "codebooks": []}',
            '{"header": {"format": "ncmac-constellation", "version": 99}, "codebooks": []}',
            '{"header": {"format": "ncmac-constellation", "version": 1, "T": 3, "M": 1, "K": 1, "L": [2]}, "codebooks": [[[[1, 0]]]]}',
            '{"header": {"format": "ncmac-constellation", "version": 1, "T": 3, "M": 1, "K": 2, "L": [1]}, "codebooks": []}',
        ],
    )
    def test_rejects_malformed(self, text):
        with pytest.raises(ncio.LoadError):
            ncio.loads(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ncio.LoadError):
            ncio.load(tmp_path / "absent.json")


class TestCsv:
    def test_ser_columns(self):
        curve = SerCurve(np.array([0.0, 2.0]), np.array([10, 10]), np.array([[3, 1], [0, 2]]))
        lines = ncio.ser_csv(curve).splitlines()
        assert lines[0] == "snr_db,blocks,errors_u1,errors_u2,ser_u1,ser_u2,avg_ser"
        assert lines[1] == "0.0,10,3,1,0.3,0.1,0.2"
        assert lines[2].startswith("2.0,10,0,2,0.0,0.2,")

    def test_trace_rows(self):
        tr = DescentTrace(costs=[2.0, 1.5], steps=[0.0, 0.1], grad_norms=[3.0, 2.0])
        assert ncio.trace_csv(tr).splitlines() == ["iteration,cost,h,gradnorm", "0,2.0,0.0,3.0", "1,1.5,0.1,2.0"]

    def test_plot_curves(self):
        curve = SerCurve(np.array([0.0]), np.array([4]), np.array([[1, 3]]))
        out = ncio.plot_curves(curve)
        assert set(out) == {"user1", "user2", "avg"}
        assert out["avg"] == "snr_db,ser\n0.0,0.5\n"


class TestParsing:
    def test_snr_grid(self):
        assert parse_snr("0:2:20") == tuple(float(x) for x in range(0, 21, 2))
        assert parse_snr("12,16") == (12.0, 16.0)
        assert parse_snr("5") == (5.0,)

    @pytest.mark.parametrize("bad", ["a:b:c", "0:0:4", "x"])
    def test_bad_snr(self, bad):
        assert run(["simulate", "--in", "x.json", "--snr", bad])[0] == EXIT_USAGE


class TestCli:
    def test_design_then_info_and_simulate(self, tmp_path, capsys):
        out = tmp_path / "c.json"
        code, text = run(["design", "--T", "4", "--M", "1", "--L", "4", "--N", "2", "--max-iter", "15", "--manifold", "trace", "--out", str(out)])
        assert code == 0
        assert "final_cost" in text and "constraint_residual" in text
        assert (tmp_path / "c.trace.csv").read_text().startswith("iteration,cost,h,gradnorm\n")
        cf = ncio.load(out)
        assert cf.constellation.sizes == (4, 4) and cf.manifold == "trace" and cf.extra["N"] == 2

        code, rep = run(["info", "--in", str(out)])
        assert code == 0
        assert "residual[trace]" in rep and "delta_ub" in rep and "check sqrt(T)*delta_min >= beta_min >= delta_min: ok" in rep
        assert run(["info", "--in", str(out)])[1] == rep

        code, csv_text = run(["simulate", "--in", str(out), "--snr", "0,10", "--blocks", "500", "--N", "2"])
        assert code == 0
        assert csv_text.splitlines()[0] == "snr_db,blocks,errors_u1,errors_u2,ser_u1,ser_u2,avg_ser"
        assert len(csv_text.splitlines()) == 3
        assert run(["simulate", "--in", str(out), "--snr", "0,10", "--blocks", "500", "--N", "2"])[1] == csv_text

    def test_bits_sets_codebook_size(self, tmp_path):
        out = tmp_path / "b.json"
        assert run(["design", "--T", "4", "--M", "1", "--bits", "1,2", "--max-iter", "2", "--out", str(out)])[0] == 0
        assert ncio.load(out).constellation.sizes == (2, 4)

    def test_design_twice_is_identical(self, tmp_path):
        args = ["design", "--T", "4", "--M", "1", "--L", "3", "--max-iter", "10", "--seed", "5"]
        assert run(args + ["--out", str(tmp_path / "a.json")])[0] == 0
        assert run(args + ["--out", str(tmp_path / "b.json")])[0] == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_emit_plot_data(self, tmp_path):
        c = random_constellation("grassmann", 4, 1, [2, 2], rng_for(0))
        src = tmp_path / "c.json"
        ncio.save(ncio.ConstellationFile(c), src)
        out = tmp_path / "ser.csv"
        assert run(["simulate", "--in", str(src), "--snr", "0", "--blocks", "100", "--out", str(out), "--emit-plot-data"])[0] == 0
        assert out.exists()
        for name in ("user1", "user2", "avg"):
            assert (tmp_path / f"ser_{name}.csv").read_text().startswith("snr_db,ser\n")

    def test_single_codeword_gives_zero_ser(self, tmp_path):
        src = tmp_path / "one.json"
        ncio.save(ncio.ConstellationFile(random_constellation("grassmann", 4, 1, [1, 1], rng_for(0))), src)
        code, text = run(["simulate", "--in", str(src), "--snr", "0,10", "--blocks", "20"])
        assert code == 0
        assert all(row.endswith(",0.0") for row in text.splitlines()[1:])

    def test_gradcheck_report(self):
        code, text = run(["gradcheck", "--T", "3", "--M", "1", "--L", "2", "--N", "2", "--cost", "pep_ub", "--manifold", "oblique"])
        assert code == 0
        rows = dict(line.split(",", 1) for line in text.splitlines()[1:7])
        assert float(rows["max_rel_projected"]) <= 1e-5

    @pytest.mark.parametrize(
        "argv",
        [
            ["design", "--T", "2", "--M", "2"],
            ["design", "--K", "2", "--L", "2,3,4"],
            ["design", "--L", "0"],
            ["design", "--N", "0"],
            ["design", "--step0", "-1"],
            ["design", "--L", "x"],
            ["simulate"],
            ["info"],
            ["simulate", "--in", "/nonexistent/file.json"],
        ],
    )
    def test_usage_errors(self, argv, capsys):
        assert run(argv)[0] == EXIT_USAGE
        assert capsys.readouterr().err

    def test_usage_error_names_the_field(self, capsys):
        run(["design", "--T", "2", "--M", "2"])
        assert "--T/--M" in capsys.readouterr().err

    def test_pep_below_full_diversity_warns(self, tmp_path):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code, _ = run(["gradcheck", "--T", "2", "--M", "1", "--K", "2", "--L", "2", "--cost", "pep_ub"])
        assert code in (0, EXIT_NUMERIC)
        assert any("full diversity" in str(w.message) for w in caught)

    def test_numerical_failure(self, tmp_path, capsys):
        c = random_constellation("grassmann", 4, 1, [2, 2], rng_for(0))
        c = c.with_codeword(0, 1, c.codebooks[0][0])
        src = tmp_path / "bad.json"
        ncio.save(ncio.ConstellationFile(c), src)
        assert run(["gradcheck", "--in", str(src), "--cost", "delta_ub"])[0] == EXIT_NUMERIC
        assert "numerical failure" in capsys.readouterr().err

    def test_help_documents_csv_columns(self, capsys):
        with pytest.raises(SystemExit):
            main(["simulate", "--help"])
        assert "errors_u1..errors_uK" in capsys.readouterr().out

    def test_info_on_fresh_grassmann(self):
        c = random_constellation("grassmann", 5, 1, [3, 3], rng_for(1))
        rep = info_report(ncio.ConstellationFile(c), 2)
        line = next(l for l in rep.splitlines() if l.startswith("residual[grassmann]"))
        assert float(line.split()[1]) <= 1e-10
        assert "pep_ub" in rep and "minmax_pep" in rep

    def test_trace_scenario_file(self, tmp_path):
        out = tmp_path / "trace.json"
        argv = ["design", "--cost", "delta_ub", "--manifold", "trace", "--T", "5", "--M", "2", "--N", "3"]
        argv += ["--L", "16", "--K", "2", "--seed", "7", "--max-iter", "2", "--out", str(out)]
        assert run(argv)[0] == 0
        cf = ncio.load(out)
        assert sum(cf.constellation.sizes) == 32
        assert constraint_residual("trace", cf.constellation) <= 1e-10

    def test_pep_scenario_file(self, tmp_path):
        out = tmp_path / "pep.json"
        argv = ["design", "--cost", "pep_ub", "--manifold", "grassmann", "--T", "3", "--M", "1", "--N", "3"]
        argv += ["--L", "16", "--K", "2", "--max-iter", "2", "--out", str(out)]
        assert run(argv)[0] == 0
        books = ncio.load(out).constellation.codebooks
        cols = np.concatenate([b[:, :, 0] for b in books])
        assert cols.shape == (32, 3)
        assert np.allclose(np.linalg.norm(cols, axis=1), 1.0, atol=1e-12)
