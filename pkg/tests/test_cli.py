import json

import pytest

from flowfactory.cli import main
from flowfactory.io import (
    coins_from_dict,
    coins_to_dict,
    polytope_from_dict,
    polytope_to_dict,
)

from fractions import Fraction

from instances import triangle, two_node


def _write_two_node(tmp_path, num=1, den=3):
    poly = tmp_path / "poly.json"
    coins = tmp_path / "coins.json"
    poly.write_text(json.dumps(polytope_to_dict(two_node())))
    coins.write_text(json.dumps({
        "coins": [
            {"edge": 0, "num": num, "den": den},
            {"edge": 1, "num": num, "den": den},
        ]
    }))
    return str(poly), str(coins)


def test_polytope_round_trip():
    P = triangle()
    assert polytope_from_dict(polytope_to_dict(P)) == P


def test_polytope_schema_errors():
    with pytest.raises(ValueError):
        polytope_from_dict({"nodes": 2, "edges": [], "demands": [0]})
    with pytest.raises(ValueError):
        polytope_from_dict({"nodes": 2, "edges": [{"id": 5, "from": 1, "to": 2}], "demands": [0, 0]})
    with pytest.raises(ValueError):
        polytope_from_dict([1, 2])


def test_coins_round_trip():
    biases = (Fraction(1, 3), Fraction(2, 5))
    assert coins_from_dict(coins_to_dict(biases), 2) == biases
    with pytest.raises(ValueError):
        coins_from_dict({"coins": [{"edge": 0, "num": 1, "den": 3}]}, 2)
    with pytest.raises(ValueError):
        coins_from_dict({"coins": [{"edge": 0, "num": 1, "den": 0}, {"edge": 1, "num": 1, "den": 2}]}, 2)


def test_gen_matches_library(tmp_path, capsys):
    out = tmp_path / "gen.json"
    assert main(["gen", "circulation", "--nodes", "3", "--out", str(out)]) == 0
    assert polytope_from_dict(json.loads(out.read_text())) == triangle()
    # round trip through gen -> parse -> serialize is byte identical
    text1 = out.read_text()
    reparsed = polytope_to_dict(polytope_from_dict(json.loads(text1)))
    assert json.dumps(reparsed, sort_keys=True, indent=2) + "\n" == text1


def test_gen_invalid_size():
    assert main(["gen", "circulation", "--nodes", "1"]) == 4


def test_sample_deterministic(tmp_path, capsys):
    poly, coins = _write_two_node(tmp_path)
    out1 = tmp_path / "a.jsonl"
    out2 = tmp_path / "b.jsonl"
    args = ["sample", poly, coins, "--samples", "200", "--seed", "7"]
    assert main(args + ["--out", str(out1)]) == 0
    sum1 = capsys.readouterr().out
    assert main(args + ["--out", str(out2)]) == 0
    sum2 = capsys.readouterr().out
    assert out1.read_bytes() == out2.read_bytes()
    assert sum1 == sum2
    lines = out1.read_text().splitlines()
    assert len(lines) == 200
    rec = json.loads(lines[0])
    assert set(rec) == {"flips", "flow", "restarts"}


def test_sample_empty_flow_frequency(tmp_path, capsys):
    poly, coins = _write_two_node(tmp_path)
    out = tmp_path / "s.jsonl"
    assert main(["sample", poly, coins, "--samples", "20000", "--seed", "1", "--out", str(out)]) == 0
    empties = sum(1 for line in out.read_text().splitlines() if json.loads(line)["flow"] == [])
    # exact probability 2/3; generous 4-sigma band
    assert abs(empties / 20000 - 2 / 3) < 0.014


def test_sample_boundary_coin_exit(tmp_path, capsys):
    poly, coins = _write_two_node(tmp_path, num=1, den=1)
    assert main(["sample", poly, coins, "--samples", "10"]) == 3


def test_sample_off_polytope_exit(tmp_path, capsys):
    poly = tmp_path / "p.json"
    coins = tmp_path / "c.json"
    poly.write_text(json.dumps(polytope_to_dict(two_node())))
    coins.write_text(json.dumps({"coins": [
        {"edge": 0, "num": 1, "den": 3}, {"edge": 1, "num": 1, "den": 2}]}))
    assert main(["sample", str(poly), str(coins), "--samples", "10"]) == 4


def test_sample_disconnected_exit(tmp_path, capsys):
    from instances import disconnected_pair

    poly = tmp_path / "p.json"
    coins = tmp_path / "c.json"
    poly.write_text(json.dumps(polytope_to_dict(disconnected_pair())))
    coins.write_text(json.dumps({"coins": [
        {"edge": i, "num": 1, "den": 3} for i in range(4)]}))
    assert main(["sample", str(poly), str(coins), "--samples", "10"]) == 5


def test_parse_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    poly, coins = _write_two_node(tmp_path)
    assert main(["sample", str(bad), coins]) == 2
    assert main(["nonsense"]) == 2


def test_dist_output(tmp_path, capsys):
    poly, coins = _write_two_node(tmp_path)
    assert main(["dist", poly, coins]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["probabilities"] == {
        "00": {"den": 3, "num": 2},
        "11": {"den": 3, "num": 1},
    }
    assert data["marginals"] == [
        {"den": 3, "edge": 0, "num": 1},
        {"den": 3, "edge": 1, "num": 1},
    ]


def test_dist_marginals_echo_coins(tmp_path, capsys):
    poly = tmp_path / "p.json"
    coins = tmp_path / "c.json"
    poly.write_text(json.dumps(polytope_to_dict(triangle())))
    coins.write_text(json.dumps({"coins": [
        {"edge": i, "num": 1, "den": 3} for i in range(6)]}))
    assert main(["dist", str(poly), str(coins)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["probabilities"]) == 10
    total = sum(Fraction(v["num"], v["den"]) for v in data["probabilities"].values())
    assert total == 1
    for rec in data["marginals"]:
        assert (rec["num"], rec["den"]) == (1, 3)


def test_verify_all_pass(tmp_path, capsys):
    poly, coins = _write_two_node(tmp_path)
    assert main(["verify", poly, coins]) == 0
    report = json.loads(capsys.readouterr().out)
    assert all(c["pass"] for c in report["checks"])
    assert report["exact_marginals"] == [
        {"den": 3, "edge": 0, "num": 1},
        {"den": 3, "edge": 1, "num": 1},
    ]


def test_verify_positivity_failure_exit(tmp_path, capsys):
    from instances import disconnected_pair

    poly = tmp_path / "p.json"
    coins = tmp_path / "c.json"
    poly.write_text(json.dumps(polytope_to_dict(disconnected_pair())))
    coins.write_text(json.dumps({"coins": [
        {"edge": i, "num": 1, "den": 3} for i in range(4)]}))
    out = tmp_path / "report.json"
    code = main(["verify", str(poly), str(coins), "--checks", "positivity", "--out", str(out)])
    assert code == 8
    report = json.loads(out.read_text())
    assert report["checks"][0]["name"] == "positivity"
    assert report["checks"][0]["pass"] is False


def test_sample_path_cli(tmp_path, capsys):
    from instances import diamond_dag

    poly = tmp_path / "p.json"
    coins = tmp_path / "c.json"
    poly.write_text(json.dumps(polytope_to_dict(diamond_dag())))
    coins.write_text(json.dumps({"coins": [
        {"edge": i, "num": 1, "den": 2} for i in range(4)]}))
    out = tmp_path / "paths.jsonl"
    assert main(["sample-path", str(poly), str(coins), "--samples", "500", "--seed", "3", "--out", str(out)]) == 0
    for line in out.read_text().splitlines():
        flow = json.loads(line)["flow"]
        assert flow in ([0, 2], [1, 3])


def test_sample_path_rejects_cycle(tmp_path, capsys):
    poly, coins = _write_two_node(tmp_path)
    assert main(["sample-path", poly, coins, "--samples", "5"]) == 4


def test_bench_deterministic_stats(tmp_path, capsys):
    poly, coins = _write_two_node(tmp_path)
    assert main(["bench", poly, coins, "--samples", "100", "--seed", "4"]) == 0
    d1 = json.loads(capsys.readouterr().out)
    assert main(["bench", poly, coins, "--samples", "100", "--seed", "4"]) == 0
    d2 = json.loads(capsys.readouterr().out)
    assert d1["stats"] == d2["stats"]
    assert main(["bench", poly, coins, "--samples", "1"]) == 0
    capsys.readouterr()
