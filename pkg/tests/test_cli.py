import json

import numpy as np

from netbath import cli


def run_cli(args):
    return cli.main(args)


def read_lines(path):
    return path.read_text().splitlines()


def test_fixed_point_table(tmp_path):
    out = tmp_path / "fp.csv"
    code = run_cli(["fixed-point", "--lambda-min", "0.5", "--lambda-max", "10",
                    "--lambda-count", "7", "--output", str(out)])
    assert code == 0
    lines = read_lines(out)
    assert lines[0].startswith("# tool=netbath version=")
    assert "params=n=5,omega0=10,C=1,m=0.5" in lines[0]
    assert "seed=0" in lines[0]
    # the column-name row is the second line, rows follow immediately
    assert lines[1].split(",")[:3] == ["lambda", "k_closed", "k_iterated"]
    rows = [ln.split(",") for ln in lines[2:]]
    assert len(rows) == 7
    rel = [float(r[5]) for r in rows]
    assert max(rel) <= 1e-10


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["population", "--pool-size", "1200", "--sweeps", "3",
            "--lam", "1.0", "--seed", "5"]
    assert run_cli(args + ["--output", str(a)]) == 0
    assert run_cli(args + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_kernel_methods(tmp_path):
    for method in ("branch-cut", "bessel"):
        out = tmp_path / f"{method}.csv"
        code = run_cli(["kernel", "--method", method, "--tau-max", "2.0",
                        "--tau-count", "101", "--output", str(out)])
        assert code == 0
        rows = [ln for ln in read_lines(out) if not ln.startswith("#")][1:]
        assert len(rows) == 101
        assert float(rows[0].split(",")[1]) == 0.0
    out = tmp_path / "oracle.csv"
    code = run_cli(["kernel", "--method", "oracle", "--depth", "4",
                    "--branching", "4", "--tau-max", "2.0", "--tau-count",
                    "51", "--output", str(out)])
    assert code == 0


def test_json_format(tmp_path):
    out = tmp_path / "spec.json"
    code = run_cli(["spectrum", "--format", "json", "--output", str(out),
                    "--omega-count", "11"])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["tool"] == "netbath"
    assert doc["columns"] == ["omega", "J"]
    assert len(doc["rows"]) == 11


def test_phase_and_multiplier_and_tree_and_orbit(tmp_path):
    for args, expect_col in (
            (["phase", "--lambda-count", "5"], "sqrt_argument"),
            (["multiplier", "--nu-count", "9"], "gain"),
            (["tree", "--branching", "4", "--depth", "12", "--lam", "1.0"],
             "residual"),
            (["orbit", "--lam", "1.0", "--steps", "50"], "k"),
            (["finite-time", "--T", "2.0"], "G"),
    ):
        out = tmp_path / (args[0] + ".csv")
        assert run_cli(args + ["--output", str(out)]) == 0
        lines = [ln for ln in read_lines(out) if not ln.startswith("#")]
        assert expect_col in lines[0].split(",")


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "params": {"n": 20, "omega0": 0.1, "C": 20.0, "m": 0.5},
        "lambda_grid": {"min": 1.0, "max": 10.0, "count": 4, "scale": "linear"},
    }))
    out = tmp_path / "out.csv"
    assert run_cli(["fixed-point", "--config", str(cfg), "--output",
                    str(out)]) == 0
    lines = read_lines(out)
    assert "params=n=20" in lines[0]
    rows = [ln for ln in lines if not ln.startswith("#")][1:]
    assert len(rows) == 4
    # flag overrides config
    out2 = tmp_path / "out2.csv"
    assert run_cli(["fixed-point", "--config", str(cfg), "--lambda-count",
                    "6", "--output", str(out2)]) == 0
    rows2 = [ln for ln in read_lines(out2) if not ln.startswith("#")][1:]
    assert len(rows2) == 6


def test_flagged_rows_outside_existence(tmp_path):
    # n=2 supercritical: rows below the onset are flagged, not silently nan
    out = tmp_path / "fp.csv"
    assert run_cli(["fixed-point", "--n", "2", "--omega0", "1.0", "--C",
                    "2.4142135623730951", "--m", "1.0", "--lambda-min", "0.2",
                    "--lambda-max", "5.0", "--lambda-count", "8",
                    "--lambda-scale", "linear", "--output", str(out)]) == 0
    rows = [ln.split(",") for ln in read_lines(out) if not ln.startswith("#")][1:]
    status = [r[-1] for r in rows]
    assert "no-fixed-point" in status and "ok" in status


def test_exit_codes(tmp_path):
    # unknown config key -> 2
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"paramz": {}}))
    assert run_cli(["phase", "--config", str(cfg)]) == 2
    # malformed json -> 2
    cfg2 = tmp_path / "bad2.json"
    cfg2.write_text("{nope")
    assert run_cli(["phase", "--config", str(cfg2)]) == 2
    # domain error -> 3 (kernel needs a real band; C < 0 has none)
    assert run_cli(["kernel", "--C", "-0.1", "--output",
                    str(tmp_path / "x.csv")]) == 3
    # accuracy error -> 4 (bessel fine step too coarse)
    assert run_cli(["kernel", "--method", "bessel", "--dt", "1.0",
                    "--output", str(tmp_path / "y.csv")]) == 4
    # unknown subcommand -> argparse usage error 2
    assert run_cli(["frobnicate"]) == 2


def test_plot_output(tmp_path):
    svg = tmp_path / "plot.svg"
    out = tmp_path / "out.csv"
    assert run_cli(["spectrum", "--plot", str(svg), "--output", str(out)]) == 0
    text = svg.read_text()
    assert text.startswith("<svg") and "polyline" in text
    # plots are byte-reproducible too
    svg2 = tmp_path / "plot2.svg"
    assert run_cli(["spectrum", "--plot", str(svg2), "--output",
                    str(out)]) == 0
    assert svg.read_bytes() == svg2.read_bytes()


def test_rows_all_finite_or_flagged(tmp_path):
    out = tmp_path / "orbit.csv"
    assert run_cli(["orbit", "--n", "2", "--omega0", "1.0", "--C",
                    "2.4142135623730951", "--m", "1.0", "--lam", "0.5",
                    "--steps", "300", "--output", str(out)]) == 0
    rows = [ln.split(",") for ln in read_lines(out) if not ln.startswith("#")][1:]
    for row in rows:
        value, status = float(row[1]), row[2]
        assert np.isfinite(value) or status != "ok"
