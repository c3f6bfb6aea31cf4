"""Arborescence counting, directed-tree enumeration, and exact tree sampling.

All counting is exact: integer matrices go through fraction-free Bareiss
elimination, rational matrices are cleared to integers first.  The Laplacian
uses the out-weight diagonal, so the minor at r counts arborescences directed
toward r (validated against enumeration in the test suite).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import lcm

from .errors import (
    InvalidInstance,
    NoArborescence,
    NotCirculation,
    NotZLS,
    TooLargeForOracle,
)
from .graphs import (
    ENUMERATION_CAP,
    CirculationVector,
    Edge,
    FlowPolytope,
    FlowVertex,
    Graph,
    flip_edge,
    flip_image_multiplicity,
)


@dataclass(frozen=True)
class WeightedDigraph:
    """Directed graph with a weight (multiplicity or rational) per edge."""

    nodes: tuple[int, ...]
    weights: dict[Edge, object] = field(default_factory=dict)

    def __post_init__(self):
        nodeset = set(self.nodes)
        for (u, v), w in self.weights.items():
            if u == v:
                raise InvalidInstance(f"self-loop weight on node {u}")
            if u not in nodeset or v not in nodeset:
                raise InvalidInstance(f"edge ({u},{v}) leaves the node set")
            if w < 0:
                raise InvalidInstance(f"negative weight on edge ({u},{v})")


@dataclass(frozen=True)
class Arborescence:
    tree: frozenset[Edge]
    root: int


# ---------------------------------------------------------------------------
# Exact determinants
# ---------------------------------------------------------------------------

def det_bareiss(matrix: list[list[int]]) -> int:
    """Fraction-free determinant of an integer matrix."""
    n = len(matrix)
    if n == 0:
        return 1
    m = [list(row) for row in matrix]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * pivot - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = pivot
    return sign * m[n - 1][n - 1]


def det_exact(matrix) -> Fraction:
    """Exact determinant of a rational matrix via denominator clearing."""
    n = len(matrix)
    if n == 0:
        return Fraction(1)
    scale = 1
    for row in matrix:
        for x in row:
            scale = lcm(scale, Fraction(x).denominator)
    ints = [[int(Fraction(x) * scale) for x in row] for row in matrix]
    return Fraction(det_bareiss(ints), scale**n)


def det_cofactor(matrix) -> Fraction:
    """Independent oracle: determinant by cofactor expansion."""
    n = len(matrix)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return Fraction(matrix[0][0])
    total = Fraction(0)
    for j in range(n):
        if matrix[0][j] == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in matrix[1:]]
        term = Fraction(matrix[0][j]) * det_cofactor(minor)
        total += term if j % 2 == 0 else -term
    return total


# ---------------------------------------------------------------------------
# Laplacians and counting
# ---------------------------------------------------------------------------

def build_laplacian(W: WeightedDigraph) -> list[list]:
    """Out-weight Laplacian: diag(i) = sum_j w(i,j), entry (i,j) = -w(i,j)."""
    idx = {v: i for i, v in enumerate(W.nodes)}
    k = len(W.nodes)
    zero = 0
    L = [[zero] * k for _ in range(k)]
    for (u, v), w in W.weights.items():
        i, j = idx[u], idx[v]
        L[i][j] -= w
        L[i][i] += w
    return L


@lru_cache(maxsize=1 << 18)
def _arb_count_cached(nodes: tuple[int, ...], witems: tuple, root: int):
    k = len(nodes)
    if root not in nodes:
        raise InvalidInstance(f"root {root} not among nodes")
    if k == 1:
        return 1
    idx = {v: i for i, v in enumerate(nodes)}
    r = idx[root]
    size = k - 1
    L = [[0] * size for _ in range(size)]

    def pos(i):
        return i if i < r else i - 1

    exact = False
    for (u, v), w in witems:
        if isinstance(w, Fraction):
            exact = True
        i, j = idx[u], idx[v]
        if i != r:
            L[pos(i)][pos(i)] += w
            if j != r:
                L[pos(i)][pos(j)] -= w
    if exact:
        return det_exact(L)
    return det_bareiss(L)


def count_arborescences(W: WeightedDigraph, root: int):
    """Weighted count of arborescences directed toward `root` (Matrix-Tree)."""
    witems = tuple(sorted((e, w) for e, w in W.weights.items() if w != 0))
    return _arb_count_cached(W.nodes, witems, root)


def sarb(x: CirculationVector, root: int, nodes: tuple[int, ...] | None = None) -> Fraction:
    """Sum over arborescences toward `root` of the product of edge values.

    Root-independent for balanced vectors (ZLS Laplacian); raises
    NotCirculation otherwise.
    """
    if not x.is_balanced():
        raise NotCirculation("vector violates the balance equations")
    if nodes is None:
        nodes = tuple(range(1, x.n + 1))
    weights = {e: Fraction(w) for e, w in x.values.items() if w != 0}
    W = WeightedDigraph(nodes, weights)
    return Fraction(count_arborescences(W, root))


def zls_cofactor_check(matrix) -> bool:
    """True iff all principal cofactors of a zero-line-sum matrix are equal."""
    n = len(matrix)
    for i in range(n):
        if sum(matrix[i]) != 0 or sum(row[i] for row in matrix) != 0:
            raise NotZLS(f"row or column {i} does not sum to zero")
    dets = []
    for r in range(n):
        minor = [
            [matrix[i][j] for j in range(n) if j != r]
            for i in range(n)
            if i != r
        ]
        dets.append(det_exact(minor))
    return all(d == dets[0] for d in dets)


# ---------------------------------------------------------------------------
# Tree enumeration oracles
# ---------------------------------------------------------------------------

def _support_is_spanning_tree(edges: list[Edge], nodes: tuple[int, ...]) -> bool:
    if len(edges) != len(nodes) - 1:
        return False
    parent = {v: v for v in nodes}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


@lru_cache(maxsize=256)
def enumerate_directed_trees(G: Graph, cap: int = ENUMERATION_CAP) -> tuple[tuple[int, ...], ...]:
    """All directed trees spanning the incident nodes, as sorted edge-id tuples."""
    m = len(G.edges)
    if m > cap:
        raise TooLargeForOracle(f"|E| = {m} exceeds enumeration cap {cap}")
    nodes = G.incident_nodes
    k = len(nodes)
    if k < 2 or m < k - 1:
        return ()
    trees = []
    for combo in itertools.combinations(range(m), k - 1):
        support = [G.edges[i] for i in combo]
        if _support_is_spanning_tree(support, nodes):
            trees.append(combo)
    return tuple(trees)


def directed_tree_count(G: Graph) -> int:
    """|T(E)| via the undirected Matrix-Tree theorem on the support multigraph."""
    nodes = G.incident_nodes
    k = len(nodes)
    if k < 2:
        return 0
    mult: dict[frozenset, int] = {}
    for e in G.edges:
        key = frozenset(e)
        mult[key] = mult.get(key, 0) + 1
    idx = {v: i for i, v in enumerate(nodes)}
    L = [[0] * (k - 1) for _ in range(k - 1)]
    for key, w in mult.items():
        u, v = tuple(key)
        i, j = idx[u], idx[v]
        for a, b in ((i, j), (j, i)):
            if a != k - 1:
                L[a][a] += w
                if b != k - 1:
                    L[a][b] -= w
    return det_bareiss(L)


def is_arborescence(edges, root: int) -> bool:
    """True iff the directed edges form a tree with every edge oriented toward root."""
    edges = set(edges)
    nodes = {u for e in edges for u in e}
    if root not in nodes:
        return False
    if len(edges) != len(nodes) - 1:
        return False
    out: dict[int, Edge] = {}
    for u, v in edges:
        if u in out:
            return False
        out[u] = (u, v)
    if root in out:
        return False
    for start in nodes:
        v = start
        seen = set()
        while v != root:
            if v in seen or v not in out:
                return False
            seen.add(v)
            v = out[v][1]
    return True


# ---------------------------------------------------------------------------
# Exact uniform sampling via self-reducibility
# ---------------------------------------------------------------------------

def _aggregate_count(nodes, find, active, root):
    classes = tuple(sorted({find(v) for v in nodes}))
    agg: dict[Edge, int] = {}
    for (u, v), w in active.items():
        ru, rv = find(u), find(v)
        if ru != rv:
            key = (ru, rv)
            agg[key] = agg.get(key, 0) + w
    witems = tuple(sorted(agg.items()))
    return _arb_count_cached(classes, witems, find(root))


def sample_arborescence(W: WeightedDigraph, root: int, rng) -> Arborescence:
    """Draw an arborescence toward `root` with probability proportional to the
    product of its edge multiplicities.

    Edges are visited in ascending (from, to) order; each is included or
    excluded using exact contracted/deleted Matrix-Tree counts, and every
    random decision draws a uniform integer below the exact total.
    """
    for w in W.weights.values():
        if not isinstance(w, int):
            raise InvalidInstance("sample_arborescence needs integer multiplicities")
    rep = {v: v for v in W.nodes}

    def find(v):
        while rep[v] != v:
            v = rep[v]
        return v

    active = {e: w for e, w in sorted(W.weights.items()) if w > 0}
    cur = _aggregate_count(W.nodes, find, active, root)
    if cur == 0:
        raise NoArborescence(f"no arborescence toward node {root}")

    chosen: list[Edge] = []
    for e in sorted(active):
        if e not in active:
            continue
        u, v = e
        ru, rv = find(u), find(v)
        if ru == rv:
            del active[e]
            continue
        if ru == find(root):
            # Out-edges of the root class never appear in an arborescence.
            del active[e]
            continue
        w = active[e]
        # Tentatively contract: u's class takes e as its out-edge, so its
        # other out-edges disappear and the class merges into v's.
        removed = {e2 for e2 in active if find(e2[0]) == ru}
        saved = {e2: active[e2] for e2 in removed}
        for e2 in removed:
            del active[e2]
        rep[ru] = rv
        contracted = _aggregate_count(W.nodes, find, active, root)
        n_inc = w * contracted
        if rng.randrange(cur) < n_inc:
            chosen.append(e)
            cur = contracted
        else:
            rep[ru] = ru
            active.update(saved)
            del active[e]
            cur -= n_inc
    assert len(chosen) == len(W.nodes) - 1
    return Arborescence(frozenset(chosen), root)


# ---------------------------------------------------------------------------
# Sampling a tree whose flip is an arborescence
# ---------------------------------------------------------------------------

def flip_multigraph(P: FlowPolytope, f: FlowVertex) -> tuple[WeightedDigraph, dict[Edge, list[int]]]:
    """Multigraph of flip images with multiplicities, plus the preimage map."""
    pre = flip_image_multiplicity(P, f)
    nodes = P.graph.incident_nodes
    weights = {a: len(ids) for a, ids in pre.items()}
    return WeightedDigraph(nodes, weights), pre


def qualifying_tree_count(P: FlowPolytope, f: FlowVertex, root: int) -> int:
    """Number of directed trees T in T(E) with Flip_f(T) an arborescence toward root."""
    W, _ = flip_multigraph(P, f)
    return count_arborescences(W, root)


def sample_flip_tree(P: FlowPolytope, f: FlowVertex, root: int, rng) -> frozenset[int]:
    """Uniform tree among those whose flip under f is an arborescence toward root.

    Samples an arborescence of the flip-image multigraph proportionally to its
    multiplicity product, then resolves each multiplicity-2 image edge to a
    uniformly chosen preimage; qualifying trees correspond one-to-one with
    (arborescence, preimage choice) pairs.
    """
    W, pre = flip_multigraph(P, f)
    arb = sample_arborescence(W, root, rng)
    tree = []
    for a in sorted(arb.tree):
        ids = pre[a]
        if len(ids) == 1:
            tree.append(ids[0])
        else:
            tree.append(ids[rng.randrange(len(ids))])
    return frozenset(tree)
