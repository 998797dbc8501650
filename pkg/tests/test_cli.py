"""Run configs, dispatch, emission formats, determinism, and exit codes."""

import json

import pytest

from oligofix import ConfigError, FamilyParams
from oligofix.cli import main
from oligofix.reporting import (
    ReportEnvelope,
    emit_csv,
    large_market_rows,
    parse_config,
    parse_number,
    render_csv_rows,
    render_json,
    run,
    validate_envelope,
)

PARAMS = {"A": 30996, "B": "1/20", "c": "1/40"}


def make_config(tmp_path, payload):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


# -- parsing -------------------------------------------------------------------


def test_parse_minimal_triopoly():
    cfg = parse_config(flags={"command": "triopoly", **PARAMS, "model": "stackelberg"},
                       env={})
    assert cfg.A == 30996.0
    assert cfg.B == pytest.approx(0.05)
    assert cfg.c == pytest.approx(0.025)
    assert cfg.model == "stackelberg"


def test_parse_missing_slope_names_field():
    with pytest.raises(ConfigError) as err:
        parse_config(flags={"command": "triopoly", "A": 30996, "c": "1/40"}, env={})
    assert err.value.field == "B"


def test_flags_override_file(tmp_path):
    path = make_config(tmp_path, {"command": "triopoly", **PARAMS, "tol": 1e-8})
    cfg = parse_config(path, flags={"tol": "1e-10"}, env={})
    assert cfg.tol == 1e-10


def test_env_seed_overrides_everything(tmp_path):
    path = make_config(tmp_path, {"command": "large-market", **PARAMS, "seed": 3})
    cfg = parse_config(path, flags={"seed": 5}, env={"OLIGOFIX_SEED": "11"})
    assert cfg.seed == 11


def test_rational_number_parsing():
    assert parse_number("379/420", "x") == pytest.approx(379 / 420, rel=1e-16)
    assert parse_number("0.05", "x") == 0.05
    assert parse_number(7, "x") == 7.0
    with pytest.raises(ConfigError):
        parse_number("1/0", "x")
    with pytest.raises(ConfigError):
        parse_number("abc", "x")


def test_parse_unknown_command():
    with pytest.raises(ConfigError):
        parse_config(flags={"command": "simulate"}, env={})


def test_parse_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_config(path, flags={}, env={})


def test_parse_n_range_and_families():
    cfg = parse_config(flags={"command": "large-market", **PARAMS,
                              "n": "2..6", "families": "SQ,CL"}, env={})
    assert cfg.n_range == [2, 6]
    assert cfg.families == ["SQ", "CL"]


def test_parse_box_forms():
    cfg = parse_config(flags={"command": "contraction", **PARAMS, "box": "0,300000"},
                       env={})
    assert cfg.box == [[0.0, 300000.0], [0.0, 300000.0], [0.0, 300000.0]]


# -- dispatch ------------------------------------------------------------------


def test_run_triopoly_sequential_golden():
    cfg = parse_config(flags={"command": "triopoly", **PARAMS,
                              "model": "stackelberg"}, env={})
    envelope, code = run(cfg)
    assert code == 0
    results = envelope.results
    assert results["outputs"] == pytest.approx((151200.0, 133920.0, 111600.0), abs=1e-6)
    assert results["price"] == pytest.approx(11160.0, rel=1e-9)
    assert results["profits"] == pytest.approx(
        (1115856000.0, 1046183040.0, 934092000.0), rel=1e-6)
    assert results["second_order"]["all_negative"]


def test_run_triopoly_simultaneous_golden():
    cfg = parse_config(flags={"command": "triopoly", **PARAMS, "model": "cournot"},
                       env={})
    envelope, code = run(cfg)
    assert code == 0
    assert envelope.results["outputs"] == pytest.approx((123984.0,) * 3, rel=1e-6)
    assert envelope.results["price"] == pytest.approx(12398.4, rel=1e-6)


def test_run_iterate_convergent_exits_zero():
    cfg = parse_config(flags={"command": "iterate", "system": "stackelberg-affine",
                              "start": "0,0,0"}, env={})
    envelope, code = run(cfg)
    assert code == 0
    assert envelope.results["status"] == "converged"
    assert envelope.results["final"] == pytest.approx(
        (151200.0, 133920.0, 111600.0), abs=1e-5)


def test_run_triopoly_direct_method():
    cfg = parse_config(flags={"command": "triopoly", **PARAMS, "method": "direct"},
                       env={})
    envelope, code = run(cfg)
    assert code == 0
    assert envelope.results["outputs"] == pytest.approx(
        (151200.0, 133920.0, 111600.0), abs=1e-6)


def test_run_iterate_divergent_exits_two():
    cfg = parse_config(flags={"command": "iterate", "system": "divergent-affine",
                              "start": "1,1,1"}, env={})
    envelope, code = run(cfg)
    assert code == 2
    assert envelope.results["status"] == "diverged"
    assert envelope.results["iterations"] <= 200


def test_run_contraction_uncertified_warning():
    cfg = parse_config(flags={"command": "contraction", "system": "divergent-affine",
                              "box": "0,300000", "samples": 20}, env={})
    envelope, code = run(cfg)
    assert code == 0
    assert not envelope.results["certified"]
    assert any("not certified" in w for w in envelope.warnings)


def test_run_welfare_both_models():
    cfg = parse_config(flags={"command": "welfare", **PARAMS, "model": "both"}, env={})
    envelope, code = run(cfg)
    assert code == 0
    models = envelope.results["models"]
    assert models["cournot"]["cs"] == pytest.approx(3458707257.6, rel=1e-9)
    assert models["stackelberg"]["ts"] == pytest.approx(7030800000.0, rel=1e-9)
    assert any("surplus naming" in w for w in envelope.warnings)


# -- emission -------------------------------------------------------------------


def test_csv_header_exact(tmp_path):
    cfg = parse_config(flags={"command": "large-market", **PARAMS, "n": "1..3"}, env={})
    path = emit_csv(large_market_rows(cfg), tmp_path / "rows.csv")
    first_line = path.read_text(encoding="utf-8").splitlines()[0]
    assert first_line == "n,family,Q_total,price,x_first,x_last,profit_total,residual,gap_Q,gap_P,cs,ts"


def test_csv_refuses_empty(tmp_path):
    with pytest.raises(IOError):
        emit_csv([], tmp_path / "empty.csv")
    with pytest.raises(IOError):
        render_csv_rows([])


def test_csv_sequential_quadratic_column_matches_table(tmp_path):
    cfg = parse_config(flags={"command": "large-market", **PARAMS,
                              "families": "SQ", "n": "1..10"}, env={})
    text = render_csv_rows(large_market_rows(cfg))
    lines = text.strip().splitlines()[1:]
    want = [206640.000, 324720.000, 396720.000, 443439.784, 475453.242,
            498416.947, 515525.007, 528675.946, 539051.561, 547418.025]
    assert len(lines) == 10
    for line, expected in zip(lines, want):
        cells = line.split(",")
        assert cells[1] == "SQ"
        assert float(cells[2]) == pytest.approx(expected, abs=5e-4)


def test_csv_seventeen_digit_rendering():
    cfg = parse_config(flags={"command": "large-market", **PARAMS,
                              "families": "SQ", "n": "4..4"}, env={})
    rows = large_market_rows(cfg)
    text = render_csv_rows(rows)
    q_cell = text.strip().splitlines()[1].split(",")[2]
    assert q_cell == format(rows[0].Q_total, ".17g")
    assert float(q_cell) == rows[0].Q_total
    assert len(q_cell.replace(".", "").replace("-", "")) >= 17


def test_csv_linear_gap_column_exact_halving():
    cfg = parse_config(flags={"command": "large-market", **PARAMS,
                              "families": "SL", "n": "1..12"}, env={})
    rows = large_market_rows(cfg)
    params = FamilyParams(A=30996.0, B=1 / 20, c=1 / 40)
    for row in rows:
        assert row.gap_Q == params.marginal_cost_output * 2.0 ** -row.n


def test_csv_determinism(tmp_path):
    cfg = parse_config(flags={"command": "large-market", **PARAMS,
                              "families": "all", "n": "1..10", "seed": 7}, env={})
    a = emit_csv(large_market_rows(cfg), tmp_path / "a.csv").read_bytes()
    b = emit_csv(large_market_rows(cfg), tmp_path / "b.csv").read_bytes()
    assert a == b


def test_json_round_trip():
    cfg = parse_config(flags={"command": "welfare", **PARAMS}, env={})
    envelope, _ = run(cfg)
    text = render_json(envelope)
    data = json.loads(text)
    validate_envelope(data)
    rebuilt = ReportEnvelope.from_dict(data)
    assert rebuilt.to_dict() == envelope.to_dict()
    assert render_json(rebuilt) == text


def test_validate_envelope_rejects_bad_payload():
    with pytest.raises(ValueError):
        validate_envelope({"schema_version": "1.0", "config": {}, "results": {}})
    with pytest.raises(ValueError):
        validate_envelope({"schema_version": "9", "config": {}, "results": {},
                           "warnings": []})


# -- command line ----------------------------------------------------------------


def test_main_triopoly_stdout(capsys):
    code = main(["triopoly", "--A", "30996", "--B", "1/20", "--c", "1/40",
                 "--model", "stackelberg"])
    captured = capsys.readouterr()
    assert code == 0
    payload = json.loads(captured.out)
    validate_envelope(payload)
    assert payload["results"]["price"] == pytest.approx(11160.0, rel=1e-9)


def test_main_missing_field_exits_three(capsys):
    code = main(["triopoly", "--A", "30996", "--c", "1/40"])
    assert code == 3
    assert "B" in capsys.readouterr().err


def test_main_divergent_iterate_exits_two(tmp_path):
    out = tmp_path / "report.json"
    code = main(["iterate", "--system", "divergent-affine", "--start", "1,1,1",
                 "--out", str(out)])
    assert code == 2
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["results"]["status"] == "diverged"


def test_main_numeric_failure_exits_four(capsys):
    # no sign change of the follower condition on this bracket
    code = main(["triopoly", "--demand", "arctan-demand", "--cost", "exp-cost",
                 "--method", "direct", "--bracket", "8,9"])
    assert code == 4


def test_main_csv_to_file(tmp_path):
    out = tmp_path / "table.csv"
    code = main(["large-market", "--A", "30996", "--B", "1/20", "--c", "1/40",
                 "--families", "all", "--n", "1..10", "--seed", "7",
                 "--format", "csv", "--out", str(out)])
    assert code == 0
    lines = out.read_text(encoding="utf-8").strip().splitlines()
    assert len(lines) == 41
    assert lines[0].startswith("n,family,")


def test_main_nonlinear_direct_solve(capsys):
    code = main(["triopoly", "--demand", "arctan-demand", "--cost", "exp-cost",
                 "--method", "direct"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    outputs = payload["results"]["outputs"]
    assert all(0.0 < v < 5.0 for v in outputs)


# -- figures ----------------------------------------------------------------------


def test_large_market_figures(tmp_path):
    out = tmp_path / "table.csv"
    figdir = tmp_path / "figs"
    code = main(["large-market", "--A", "30996", "--B", "1/20", "--c", "1/40",
                 "--n", "1..8", "--format", "csv", "--out", str(out),
                 "--figures", str(figdir)])
    assert code == 0
    names = sorted(p.name for p in figdir.iterdir())
    assert names == ["first_last_linear.png", "first_last_quadratic.png",
                     "price_gaps.png", "prices_all.png",
                     "quantities_all.png", "quantity_gaps.png"]
    assert all((figdir / n).stat().st_size > 0 for n in names)
    assert out.exists()


def test_welfare_figure(tmp_path):
    figdir = tmp_path / "figs"
    code = main(["welfare", "--A", "30996", "--B", "1/20", "--c", "1/40",
                 "--model", "both", "--figures", str(figdir),
                 "--out", str(tmp_path / "welfare.json")])
    assert code == 0
    assert (figdir / "welfare_surplus.png").stat().st_size > 0
