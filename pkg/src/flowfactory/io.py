"""JSON (de)serialization for polytopes, coin files, and CLI outputs.

All output JSON has sorted keys and no floating point in exact sections:
rationals travel as num/den pairs, empirical values as 6-digit decimal
strings.  Schema problems raise ValueError so the CLI can map them to its
parse-error exit code.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .graphs import FlowPolytope, Graph


def polytope_to_dict(P: FlowPolytope) -> dict:
    return {
        "nodes": P.n,
        "edges": [
            {"id": i, "from": u, "to": v} for i, (u, v) in enumerate(P.edges)
        ],
        "demands": list(P.demands),
    }


def polytope_from_dict(data: dict) -> FlowPolytope:
    if not isinstance(data, dict):
        raise ValueError("polytope file must hold a JSON object")
    try:
        n = data["nodes"]
        raw_edges = data["edges"]
        demands = data["demands"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"polytope file missing field: {exc}") from exc
    if not isinstance(n, int) or not isinstance(raw_edges, list) or not isinstance(demands, list):
        raise ValueError("polytope fields have wrong types")
    edges = []
    for pos, rec in enumerate(raw_edges):
        try:
            eid, u, v = rec["id"], rec["from"], rec["to"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"edge record {pos} malformed: {exc}") from exc
        if eid != pos:
            raise ValueError(f"edge id {eid} does not match its position {pos}")
        edges.append((u, v))
    if not all(isinstance(d, int) for d in demands):
        raise ValueError("demands must be integers")
    if len(demands) != n:
        raise ValueError(f"expected {n} demands, got {len(demands)}")
    return FlowPolytope(Graph(n, tuple(edges)), tuple(demands))


def coins_to_dict(biases) -> dict:
    return {
        "coins": [
            {"edge": i, "num": b.numerator, "den": b.denominator}
            for i, b in enumerate(biases)
        ]
    }


def coins_from_dict(data: dict, num_edges: int) -> tuple[Fraction, ...]:
    if not isinstance(data, dict) or "coins" not in data:
        raise ValueError('coin file must hold {"coins": [...]}')
    recs = data["coins"]
    if not isinstance(recs, list) or len(recs) != num_edges:
        raise ValueError(f"expected {num_edges} coin records, got {len(recs) if isinstance(recs, list) else 'non-list'}")
    biases = [None] * num_edges
    for rec in recs:
        try:
            i, num, den = rec["edge"], rec["num"], rec["den"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"coin record malformed: {exc}") from exc
        if not (isinstance(i, int) and 0 <= i < num_edges):
            raise ValueError(f"coin record names unknown edge {i}")
        if biases[i] is not None:
            raise ValueError(f"duplicate coin record for edge {i}")
        if not (isinstance(num, int) and isinstance(den, int) and den > 0):
            raise ValueError(f"coin for edge {i} is not a num/den rational")
        biases[i] = Fraction(num, den)
    if any(b is None for b in biases):
        raise ValueError("some edges lack a coin record")
    return tuple(biases)


def load_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: {exc}") from exc


def dump_json(data, path: str | None = None) -> str:
    text = json.dumps(data, sort_keys=True, indent=2) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def rational(value: Fraction) -> dict:
    return {"num": value.numerator, "den": value.denominator}


def empirical(value: float) -> str:
    """Decimal string with 6 digits; clearly not an exact quantity."""
    return f"{value:.6f}"


def flow_key(f) -> str:
    """Stable text key for a 0/1 vertex, e.g. '0110'."""
    return "".join(str(b) for b in f)


def sample_line(f, flips: int, restarts: int) -> str:
    rec = {
        "flips": flips,
        "flow": [i for i, b in enumerate(f) if b],
        "restarts": restarts,
    }
    return json.dumps(rec, sort_keys=True)
