"""Command line behavior: subcommands, exit codes, and output files."""
import pytest

import nsfdlab.cli as cli


def run_cli(*argv):
    return cli.main(list(argv))


def test_run_writes_error_series_and_report(tmp_path, capsys):
    out = tmp_path / "series.csv"
    rc = run_cli(
        "run", "--model", "biomass", "--scheme", "scalar-nsfd",
        "--dt", "0.1", "--tend", "10", "--out", str(out),
    )
    assert rc == 0
    header, row = capsys.readouterr().out.strip().splitlines()
    assert header.startswith("model,scheme,dt,")
    fields = row.split(",")
    assert fields[0] == "biomass" and fields[1] == "scalar-nsfd"
    assert float(fields[5]) <= 1e-11  # max relative error of the exact scheme
    lines = out.read_text().splitlines()
    assert lines[0] == "t,rel_error"
    assert len(lines) == 102  # header + 101 grid levels


def test_run_accepts_the_full_norm(tmp_path, capsys):
    out = tmp_path / "series.csv"
    rc = run_cli(
        "run", "--model", "trees", "--scheme", "explicit-euler",
        "--dt", "0.1", "--tend", "1", "--norm", "full", "--out", str(out),
    )
    assert rc == 0
    assert ",full," in capsys.readouterr().out.splitlines()[1]


def test_run_blow_up_still_writes_the_partial_report(tmp_path, capsys):
    out = tmp_path / "blowup.csv"
    rc = run_cli(
        "run", "--model", "oscillator", "--scheme", "explicit-euler",
        "--dt", "2.5", "--tend", "250", "--out", str(out),
    )
    assert rc == 3
    captured = capsys.readouterr()
    assert captured.out.strip().splitlines()[1].endswith(",18")
    assert captured.err == ""  # a recorded blow-up is a result, not a crash
    assert len(out.read_text().splitlines()) == 19  # header + 18 finite levels


def test_unknown_model_is_a_usage_error(tmp_path, capsys):
    rc = run_cli(
        "run", "--model", "pendulum", "--scheme", "explicit-euler",
        "--dt", "0.1", "--tend", "1", "--out", str(tmp_path / "x.csv"),
    )
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:")


def test_unknown_scheme_is_a_usage_error(tmp_path, capsys):
    rc = run_cli(
        "run", "--model", "biomass", "--scheme", "rk4",
        "--dt", "0.1", "--tend", "1", "--out", str(tmp_path / "x.csv"),
    )
    assert rc == 2
    assert "unknown scheme" in capsys.readouterr().err


def test_gamma_coefficients_flag_requires_the_scalar_scheme(tmp_path, capsys):
    rc = run_cli(
        "run", "--model", "biomass", "--scheme", "explicit-euler", "--coeffs", "gamma",
        "--dt", "0.1", "--tend", "1", "--out", str(tmp_path / "x.csv"),
    )
    assert rc == 2
    assert "scalar-nsfd" in capsys.readouterr().err


def test_gamma_coefficients_flag_selects_the_truncated_scheme(tmp_path, capsys):
    rc = run_cli(
        "run", "--model", "biomass", "--scheme", "scalar-nsfd", "--coeffs", "gamma",
        "--dt", "0.1", "--tend", "1", "--out", str(tmp_path / "x.csv"),
    )
    assert rc == 0
    assert capsys.readouterr().out.splitlines()[1].split(",")[1] == "gamma-nsfd"


def test_bad_choice_flags_exit_via_argparse(tmp_path):
    with pytest.raises(SystemExit) as err:
        run_cli(
            "run", "--model", "biomass", "--scheme", "explicit-euler",
            "--forcing-approx", "upwind",
            "--dt", "0.1", "--tend", "1", "--out", str(tmp_path / "x.csv"),
        )
    assert err.value.code == 2


def test_convergence_prints_an_order_table(capsys):
    rc = run_cli(
        "convergence", "--model", "biomass", "--scheme", "explicit-euler",
        "--dts", "0.05,0.025", "--tend", "5", "--norm", "full",
    )
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "dt,max_error,order"
    assert lines[1].startswith("0.05,") and lines[1].endswith(",")
    order = float(lines[2].split(",")[2])
    assert 0.8 <= order <= 1.2


def test_convergence_marks_exact_schemes(capsys):
    rc = run_cli(
        "convergence", "--model", "biomass", "--scheme", "scalar-nsfd",
        "--dts", "0.1,0.05", "--tend", "5",
    )
    assert rc == 0
    assert capsys.readouterr().out.strip().splitlines()[2].endswith(",exact")


def test_figure_subcommand_writes_files(tmp_path, capsys):
    rc = run_cli("figure", "--id", "trees-exact", "--out-dir", str(tmp_path))
    assert rc == 0
    printed = capsys.readouterr().out.strip().splitlines()
    assert len(printed) == 2
    assert (tmp_path / "trees-exact.csv").exists()
    assert (tmp_path / "trees-exact.gp").exists()


def test_figure_unknown_id_is_a_usage_error(tmp_path, capsys):
    rc = run_cli("figure", "--id", "figure-42", "--out-dir", str(tmp_path))
    assert rc == 2
    assert "valid" in capsys.readouterr().err


def test_exact_subcommand_samples_the_solution(tmp_path, capsys):
    out = tmp_path / "orbit.csv"
    rc = run_cli(
        "exact", "--model", "oscillator", "--dt", "0.1", "--tend", "1", "--out", str(out)
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x,y"
    assert len(lines) == 12  # header + 11 samples
    assert float(lines[1].split(",")[1]) == 0.25


def test_identical_invocations_are_byte_identical(tmp_path):
    args = (
        "run", "--model", "seasonal", "--scheme", "scalar-nsfd",
        "--dt", "0.01", "--tend", "2",
    )
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(*args, "--out", str(out_a)) == 0
    assert run_cli(*args, "--out", str(out_b)) == 0
    assert out_a.read_bytes() == out_b.read_bytes()
