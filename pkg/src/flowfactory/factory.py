"""Sampling procedures driven by coin access alone.

Contains the source-to-sink path sampler, the rejection sampler for general
flow polytopes, and the Bernstein monomial / polynomial / race building
blocks.  External randomness (uniform choices) always comes from a separate
seeded generator, never from the coins.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .coins import CoinSource
from .errors import (
    CoefficientsNotSubunit,
    DisconnectedEdges,
    InvalidInstance,
    MaxRestartsExceeded,
    NoArborescence,
)
from .graphs import (
    ENUMERATION_CAP,
    FlowPolytope,
    FlowVertex,
    enumerate_vertices,
    undirected_connected,
)
from .spanning import (
    directed_tree_count,
    enumerate_directed_trees,
    qualifying_tree_count,
    sample_flip_tree,
)

DEFAULT_MAX_RESTARTS = 10_000_000


@dataclass
class SampleTrace:
    """Observability record for one accepted sample."""

    output: FlowVertex
    total_flips: int
    restarts: int


# ---------------------------------------------------------------------------
# Path sampling on a unit-flow DAG
# ---------------------------------------------------------------------------

def _unit_flow_dag_endpoints(P: FlowPolytope) -> tuple[int, int]:
    sources = [v for v in range(1, P.n + 1) if P.demand(v) == 1]
    sinks = [v for v in range(1, P.n + 1) if P.demand(v) == -1]
    others = [v for v in range(1, P.n + 1) if P.demand(v) not in (0, 1, -1)]
    if len(sources) != 1 or len(sinks) != 1 or others:
        raise InvalidInstance("path sampling needs unit demands: one source, one sink")
    # Topological sortability (Kahn).
    indeg = {v: 0 for v in range(1, P.n + 1)}
    for _, v in P.edges:
        indeg[v] += 1
    queue = [v for v in indeg if indeg[v] == 0]
    seen = 0
    while queue:
        u = queue.pop()
        seen += 1
        for eid in P.graph.out_edges[u]:
            w = P.edges[eid][1]
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    if seen != P.n:
        raise InvalidInstance("graph contains a directed cycle; not a DAG")
    return sources[0], sinks[0]


def sample_path(
    P: FlowPolytope,
    coins: CoinSource,
    rng,
    max_retries: int = DEFAULT_MAX_RESTARTS,
) -> FlowVertex:
    """Sample a source-to-sink path including each edge with probability p_e.

    At every node an outgoing edge is drawn proportional to its coin bias:
    pick one uniformly with external randomness, flip its coin, keep it on
    heads, retry on tails.
    """
    source, sink = _unit_flow_dag_endpoints(P)
    bits = [0] * len(P.edges)
    u = source
    retries = 0
    while u != sink:
        out = P.graph.out_edges[u]
        if not out:
            raise InvalidInstance(f"node {u} has no outgoing edge before the sink")
        while True:
            eid = out[rng.randrange(len(out))]
            if coins.flip(eid):
                break
            retries += 1
            if retries > max_retries:
                raise MaxRestartsExceeded("edge selection retry cap hit")
        bits[eid] = 1
        u = P.edges[eid][1]
    return tuple(bits)


# ---------------------------------------------------------------------------
# The flow-polytope factory
# ---------------------------------------------------------------------------

class FlowSampler:
    """Reusable sampler for one polytope; caches the per-flow tree structures.

    One round: flip every coin into a candidate flow f; restart unless f is a
    vertex.  Draw a directed tree uniformly from all of T(E) (realised as an
    exact accept with probability K_f/|T(E)| followed by a uniform qualifying
    tree, where K_f counts the trees whose flip under f is an arborescence);
    restart if the tree does not qualify.  Re-flip the coin of every tree
    edge and restart if any outcome reproduces f on its edge; otherwise
    output f.
    """

    def __init__(self, P: FlowPolytope, root: int | None = None, cap: int = ENUMERATION_CAP):
        if not undirected_connected(P.graph):
            raise DisconnectedEdges("variable edges are disconnected; decompose first")
        self.P = P
        incident = P.graph.incident_nodes
        self.root = root if root is not None else incident[0]
        if self.root not in incident:
            raise InvalidInstance(f"root {self.root} touches no variable edge")
        self.total_trees = directed_tree_count(P.graph)
        if self.total_trees == 0:
            raise NoArborescence("edge set spans no directed tree")
        m = len(P.edges)
        self._m = m
        if m <= cap:
            self._valid_masks = {
                sum(b << i for i, b in enumerate(f)): f for f in enumerate_vertices(P, cap)
            }
            self._all_trees = enumerate_directed_trees(P.graph, cap)
            assert len(self._all_trees) == self.total_trees
        else:
            self._valid_masks = None
            self._all_trees = None
        self._flow_cache: dict[int, tuple] = {}

    def _is_valid_mask(self, mask: int) -> FlowVertex | None:
        if self._valid_masks is not None:
            return self._valid_masks.get(mask)
        from .graphs import is_vertex

        bits = tuple((mask >> i) & 1 for i in range(self._m))
        return bits if is_vertex(self.P, bits) else None

    def _qualifying_trees(self, mask: int, f: FlowVertex) -> tuple[tuple[int, ...], ...]:
        """Trees whose flip under f is an arborescence toward the root."""
        from .graphs import flip_tree
        from .spanning import is_arborescence

        data = self._flow_cache.get(mask)
        if data is None:
            data = tuple(
                t
                for t in self._all_trees
                if is_arborescence(flip_tree(self.P.graph, f, t), self.root)
            )
            self._flow_cache[mask] = data
        return data

    def _sample_tree(self, mask: int, f: FlowVertex, rng) -> tuple[int, ...] | None:
        """Uniform tree from all of T(E), or None if it does not qualify.

        With enumeration available one uniform draw below |T(E)| doubles as
        the accept test and the index into the qualifying list; otherwise the
        exact count gives the accept probability and the self-reducible
        sampler produces the tree.
        """
        if self._all_trees is not None:
            qual = self._qualifying_trees(mask, f)
            if not qual:
                raise NoArborescence(
                    "no tree flips to an arborescence; sampler hypotheses violated"
                )
            u = rng.randrange(self.total_trees)
            return qual[u] if u < len(qual) else None
        k = qualifying_tree_count(self.P, f, self.root)
        if k == 0:
            raise NoArborescence(
                "no tree flips to an arborescence; sampler hypotheses violated"
            )
        if rng.randrange(self.total_trees) >= k:
            return None
        return tuple(sorted(sample_flip_tree(self.P, f, self.root, rng)))

    def sample(self, coins: CoinSource, rng, max_restarts: int = DEFAULT_MAX_RESTARTS) -> SampleTrace:
        m = self._m
        flip_round = coins.flip_round
        flip = coins.flip
        restarts = 0
        flips = 0
        while True:
            mask = flip_round()
            flips += m
            f = self._is_valid_mask(mask)
            if f is not None:
                tree = self._sample_tree(mask, f, rng)
                if tree is not None:
                    ok = True
                    for eid in tree:
                        flips += 1
                        if flip(eid) == f[eid]:
                            ok = False
                            break
                    if ok:
                        return SampleTrace(output=f, total_flips=flips, restarts=restarts)
            restarts += 1
            if restarts > max_restarts:
                raise MaxRestartsExceeded(f"no sample accepted within {max_restarts} restarts")


def sample_flow(
    P: FlowPolytope,
    coins: CoinSource,
    rng,
    root: int | None = None,
    max_restarts: int = DEFAULT_MAX_RESTARTS,
) -> tuple[FlowVertex, SampleTrace]:
    """One-shot wrapper around FlowSampler; returns (vertex, trace)."""
    trace = FlowSampler(P, root=root).sample(coins, rng, max_restarts=max_restarts)
    return trace.output, trace


# ---------------------------------------------------------------------------
# Bernstein monomials, polynomials, and the race
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BernsteinMonomial:
    """Product of x_i^a_i (1-x_i)^b_i terms, stored as (variable, a, b) triples."""

    exponents: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        seen = set()
        for var, a, b in self.exponents:
            if a < 0 or b < 0:
                raise InvalidInstance("monomial exponents must be nonnegative")
            if var in seen:
                raise InvalidInstance(f"variable {var} repeated in monomial")
            seen.add(var)

    def value(self, x) -> Fraction:
        out = Fraction(1)
        for var, a, b in self.exponents:
            out *= Fraction(x[var]) ** a * (1 - Fraction(x[var])) ** b
        return out


@dataclass(frozen=True)
class BernsteinPolynomial:
    """Nonnegative combination of Bernstein monomials."""

    terms: tuple[tuple[Fraction, BernsteinMonomial], ...]

    def __post_init__(self):
        for c, _ in self.terms:
            if c < 0:
                raise InvalidInstance("coefficients must be nonnegative")

    def value(self, x) -> Fraction:
        return sum((c * mono.value(x) for c, mono in self.terms), Fraction(0))

    def coefficient_sum(self) -> Fraction:
        return sum((c for c, _ in self.terms), Fraction(0))


def sample_monomial_coin(mono: BernsteinMonomial, coins: CoinSource) -> int:
    """Flip a coin of bias prod x^a (1-x)^b using exactly sum(a+b) flips."""
    success = 1
    for var, a, b in mono.exponents:
        for _ in range(a):
            if not coins.flip(var):
                success = 0
        for _ in range(b):
            if coins.flip(var):
                success = 0
    return success


def sample_polynomial_coin(poly: BernsteinPolynomial, coins: CoinSource, rng) -> int:
    """Flip a coin of bias equal to the polynomial's value at the hidden biases.

    Picks a term with probability equal to its coefficient (a null index
    absorbs any slack below one), then runs that term's monomial coin.
    """
    total = poly.coefficient_sum()
    if total > 1:
        raise CoefficientsNotSubunit(f"coefficients sum to {total} > 1")
    den = lcm(*[c.denominator for c, _ in poly.terms]) if poly.terms else 1
    r = rng.randrange(den)
    acc = 0
    for c, mono in poly.terms:
        acc += c.numerator * (den // c.denominator)
        if r < acc:
            return sample_monomial_coin(mono, coins)
    return 0


def bernoulli_race(
    candidates: dict,
    coins: CoinSource,
    rng,
    max_rounds: int = DEFAULT_MAX_RESTARTS,
):
    """Output a label with probability proportional to its polynomial's value.

    Loop: pick a label uniformly at random, flip its polynomial coin, accept
    on heads.  Labels are ordered deterministically so fixed seeds replay.
    """
    labels = sorted(candidates)
    if not labels:
        raise InvalidInstance("race needs at least one candidate")
    for poly in candidates.values():
        if poly.coefficient_sum() > 1:
            raise CoefficientsNotSubunit("rescale polynomials before racing")
    rounds = 0
    while True:
        label = labels[rng.randrange(len(labels))]
        if sample_polynomial_coin(candidates[label], coins, rng):
            return label
        rounds += 1
        if rounds > max_rounds:
            raise MaxRestartsExceeded("all candidate polynomials appear to vanish")


def factory_polynomials(P: FlowPolytope, root: int, cap: int = ENUMERATION_CAP) -> dict[FlowVertex, BernsteinPolynomial]:
    """Explicit Bernstein form of the sampling polynomial of every vertex.

    One monomial per qualifying tree: the product over all edges of the flow
    indicator factor times the tree edges' complementary factor.  All
    polynomials share the rescale 1/|T(E)| so their ratios are preserved and
    each coefficient sum stays below one.
    """
    trees = enumerate_directed_trees(P.graph, cap)
    total = directed_tree_count(P.graph)
    if total == 0:
        raise NoArborescence("edge set spans no directed tree")
    scale = Fraction(1, total)
    from .graphs import flip_tree
    from .spanning import is_arborescence

    out: dict[FlowVertex, BernsteinPolynomial] = {}
    for f in enumerate_vertices(P, cap):
        terms = []
        for tree in trees:
            if not is_arborescence(flip_tree(P.graph, f, tree), root):
                continue
            tset = set(tree)
            exps = []
            for i in range(len(P.edges)):
                a = f[i] + (1 - f[i]) * (i in tset)
                b = (1 - f[i]) + f[i] * (i in tset)
                exps.append((i, a, b))
            terms.append((scale, BernsteinMonomial(tuple(exps))))
        out[f] = BernsteinPolynomial(tuple(terms))
    return out
