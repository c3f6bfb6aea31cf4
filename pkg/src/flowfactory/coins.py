"""Coin sources: the opaque flip interface and its test-harness implementations.

A coin source exposes nothing but bits.  SimulatedCoins holds the hidden
rational biases and produces exact Bernoulli(p) flips by drawing uniform
integers below the bias denominator; TapeCoins replays a recorded flip
sequence and knows no biases at all.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BoundaryCoin, InvalidInstance

_BUFFER = 1 << 15


class CoinSource:
    """Provider of i.i.d. Bernoulli bits, one independent coin per edge id."""

    num_edges: int

    def flip(self, edge: int) -> int:
        raise NotImplementedError

    def flip_round(self) -> int:
        """Flip every coin once, in edge order; bit i of the mask is edge i."""
        mask = 0
        for e in range(self.num_edges):
            mask |= self.flip(e) << e
        return mask


class SimulatedCoins(CoinSource):
    """Seeded coins with hidden rational biases strictly inside (0,1).

    Flips are exact: a flip of a p = num/den coin is [U < num] for U uniform
    on [0, den).  Draws are buffered through numpy for speed; per-edge flip
    tallies are kept for trace accounting.  With record_tape=True every flip
    is appended to `tape` as (edge, bit) in consumption order.
    """

    def __init__(self, biases: Sequence[Fraction], seed: int = 0, record_tape: bool = False):
        self.num_edges = len(biases)
        self._biases = tuple(Fraction(b) for b in biases)
        for i, b in enumerate(self._biases):
            if b <= 0 or b >= 1:
                raise BoundaryCoin(f"bias of edge {i} is {b}, not strictly inside (0,1)")
        self._rng = np.random.default_rng(np.random.SeedSequence(seed))
        self._flip_counts = np.zeros(self.num_edges, dtype=np.int64)
        self._bit_buf: list[np.ndarray | None] = [None] * self.num_edges
        self._bit_pos = [0] * self.num_edges
        self._mask_buf: np.ndarray | None = None
        self._mask_pos = 0
        self.tape: list[tuple[int, int]] | None = [] if record_tape else None

    @property
    def flip_counts(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self._flip_counts)

    @property
    def total_flips(self) -> int:
        return int(self._flip_counts.sum())

    def _draw_bits(self, edge: int, size: int) -> np.ndarray:
        num, den = self._biases[edge].numerator, self._biases[edge].denominator
        if den < (1 << 63):
            return (self._rng.integers(0, den, size=size, dtype=np.uint64) < num).astype(np.uint8)
        # Huge denominators: exact draws from raw bits, one at a time.
        bits = np.empty(size, dtype=np.uint8)
        nbits = den.bit_length()
        for i in range(size):
            while True:
                u = 0
                for word in self._rng.integers(0, 1 << 32, size=(nbits + 31) // 32, dtype=np.uint64):
                    u = (u << 32) | int(word)
                u &= (1 << nbits) - 1
                if u < den:
                    bits[i] = 1 if u < num else 0
                    break
        return bits

    def flip(self, edge: int) -> int:
        if not 0 <= edge < self.num_edges:
            raise InvalidInstance(f"unknown edge id {edge}")
        buf = self._bit_buf[edge]
        if buf is None or self._bit_pos[edge] >= len(buf):
            self._bit_buf[edge] = buf = self._draw_bits(edge, _BUFFER)
            self._bit_pos[edge] = 0
        bit = int(buf[self._bit_pos[edge]])
        self._bit_pos[edge] += 1
        self._flip_counts[edge] += 1
        if self.tape is not None:
            self.tape.append((edge, bit))
        return bit

    def flip_round(self) -> int:
        if self.tape is not None:
            return super().flip_round()
        if self._mask_buf is None or self._mask_pos >= len(self._mask_buf):
            masks = np.zeros(_BUFFER, dtype=np.int64)
            for e in range(self.num_edges):
                masks |= self._draw_bits(e, _BUFFER).astype(np.int64) << e
            self._mask_buf = masks
            self._mask_pos = 0
        mask = int(self._mask_buf[self._mask_pos])
        self._mask_pos += 1
        self._flip_counts += 1
        return mask


class TapeCoins(CoinSource):
    """Replays a recorded (edge, bit) sequence; holds no bias information.

    Raises InvalidInstance when consumption diverges from the recording or
    the tape runs out.
    """

    def __init__(self, tape: Sequence[tuple[int, int]], num_edges: int):
        self.num_edges = num_edges
        self._tape = list(tape)
        self._pos = 0

    def flip(self, edge: int) -> int:
        if self._pos >= len(self._tape):
            raise InvalidInstance("coin tape exhausted")
        rec_edge, bit = self._tape[self._pos]
        if rec_edge != edge:
            raise InvalidInstance(
                f"tape expected a flip of edge {rec_edge}, got edge {edge}"
            )
        self._pos += 1
        return bit
