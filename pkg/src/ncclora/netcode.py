"""Finite-field network coding for the cooperative uplink.

Two partner devices jointly send four frames: their own messages s1, s2
plus two parity frames p1, p2 built as GF(q) linear combinations.  With a
maximum-distance-separable generator, any two of the four frames recover
both messages, and a message received directly never needs decoding.

Fields are GF(2^m) up to GF(256), built on exp/log tables from a primitive
polynomial.  Symbols pack into bits most-significant-first, so a GF(4)
word maps pairs of bits to symbols: [1 1 0 1] <-> [3 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

#: primitive polynomial per extension degree (bit mask includes the x^m term)
_PRIMITIVE_POLY = {1: 0b11, 2: 0b111, 3: 0b1011, 4: 0b10011,
                   5: 0b100101, 6: 0b1000011, 7: 0b10001001, 8: 0b100011101}


class Gf:
    """Arithmetic in GF(q), q a power of two up to 256."""

    def __init__(self, order: int):
        m = order.bit_length() - 1
        if order < 2 or order != 1 << m or m not in _PRIMITIVE_POLY:
            raise ValueError(f"field order must be 2, 4, ..., 256, got {order}")
        self.order = order
        self.degree = m
        self._exp = [0] * (2 * order)
        self._log = [0] * order
        self._build_tables(_PRIMITIVE_POLY[m])

    def _build_tables(self, poly: int) -> None:
        x = 1
        for i in range(self.order - 1):
            self._exp[i] = x
            self._log[x] = i
            x <<= 1
            if x & self.order:
                x ^= poly
        # doubled exp table avoids a modulo in mul
        for i in range(self.order - 1, 2 * self.order):
            self._exp[i] = self._exp[i - (self.order - 1)]

    def _check(self, *elements: int) -> None:
        for e in elements:
            if not 0 <= e < self.order:
                raise ValueError(f"{e} is not an element of GF({self.order})")

    def add(self, a: int, b: int) -> int:
        """Addition is carry-less: XOR in characteristic two."""
        self._check(a, b)
        return a ^ b

    sub = add  # characteristic two: every element is its own negative

    def mul(self, a: int, b: int) -> int:
        self._check(a, b)
        if a == 0 or b == 0:
            return 0
        return self._exp[self._log[a] + self._log[b]]

    def inv(self, a: int) -> int:
        self._check(a)
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        return self._exp[self.order - 1 - self._log[a]]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))


@dataclass(frozen=True)
class GfWord:
    """Fixed-length vector of GF(q) symbols; one radio frame payload."""

    symbols: tuple[int, ...]
    order: int

    def __post_init__(self) -> None:
        field = Gf(self.order)
        field._check(*self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def bit_length(self) -> int:
        return len(self.symbols) * (self.order.bit_length() - 1)

    @classmethod
    def from_bits(cls, bits, order: int) -> "GfWord":
        """Pack bits MSB-first into symbols of log2(order) bits each."""
        m = order.bit_length() - 1
        bits = list(bits)
        if len(bits) % m:
            raise ValueError(f"bit count {len(bits)} not a multiple of {m}")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        symbols = []
        for i in range(0, len(bits), m):
            value = 0
            for b in bits[i:i + m]:
                value = (value << 1) | b
            symbols.append(value)
        return cls(tuple(symbols), order)

    def to_bits(self) -> list[int]:
        m = self.order.bit_length() - 1
        out = []
        for s in self.symbols:
            out.extend((s >> k) & 1 for k in range(m - 1, -1, -1))
        return out


@dataclass(frozen=True)
class GeneratorMatrix:
    """k x n systematic generator over GF(q); columns are frame recipes."""

    rows: tuple[tuple[int, ...], ...]
    order: int

    def __post_init__(self) -> None:
        field = Gf(self.order)
        k = len(self.rows)
        if k == 0 or any(len(r) != len(self.rows[0]) for r in self.rows):
            raise ValueError("generator rows must be non-empty and rectangular")
        if len(self.rows[0]) < k:
            raise ValueError("generator needs at least k columns")
        for row in self.rows:
            field._check(*row)
        for i in range(k):
            if tuple(row[i] for row in self.rows) != tuple(
                    1 if j == i else 0 for j in range(k)):
                raise ValueError("generator must start with the identity block")

    @property
    def k(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.rows[0])

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(row[j] for row in self.rows)


#: default two-partner code: frames (s1, s2, p1 = s1+s2, p2 = s1+2.s2)
DEFAULT_GENERATOR = GeneratorMatrix(rows=((1, 0, 1, 1), (0, 1, 1, 2)), order=4)


def encode(messages: list[GfWord], generator: GeneratorMatrix) -> list[GfWord]:
    """All n frames (systematic copies first, then parities)."""
    field = Gf(generator.order)
    if len(messages) != generator.k:
        raise ValueError(f"expected {generator.k} messages, got {len(messages)}")
    length = len(messages[0])
    for w in messages:
        if w.order != generator.order or len(w) != length:
            raise ValueError("messages must share the generator's field and length")
    frames = []
    for j in range(generator.n):
        coeffs = generator.column(j)
        acc = [0] * length
        for coeff, word in zip(coeffs, messages):
            if coeff == 0:
                continue
            for idx, s in enumerate(word.symbols):
                acc[idx] ^= field.mul(coeff, s)
        frames.append(GfWord(tuple(acc), generator.order))
    return frames


@dataclass(frozen=True)
class DecodeResult:
    """Per-message recovery outcome; a miss is a domain result, not an error."""

    messages: tuple[GfWord | None, ...]
    complete: bool


def decode(received: list[tuple[int, GfWord]],
           generator: GeneratorMatrix) -> DecodeResult:
    """Recover messages from any subset of frames by Gaussian elimination.

    ``received`` holds (column index, frame) pairs; duplicates collapse to
    one equation.  A message is recovered when elimination isolates it,
    which for an MDS generator means any k distinct frames recover all of
    them, and a systematic frame always recovers its own message.
    """
    field = Gf(generator.order)
    k = generator.k
    seen: dict[int, GfWord] = {}
    for j, word in received:
        if not 0 <= j < generator.n:
            raise ValueError(f"column index {j} outside 0..{generator.n - 1}")
        if word.order != generator.order:
            raise ValueError("frame field does not match the generator")
        seen.setdefault(j, word)
    if not seen:
        return DecodeResult(messages=(None,) * k, complete=False)
    length = len(next(iter(seen.values())))
    if any(len(w) != length for w in seen.values()):
        raise ValueError("frames must share one word length")

    rows = [list(generator.column(j)) for j in sorted(seen)]
    rhs = [list(seen[j].symbols) for j in sorted(seen)]

    pivot_row = 0
    for col in range(k):
        pivot = next((r for r in range(pivot_row, len(rows))
                      if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[pivot_row], rows[pivot] = rows[pivot], rows[pivot_row]
        rhs[pivot_row], rhs[pivot] = rhs[pivot], rhs[pivot_row]
        inv = field.inv(rows[pivot_row][col])
        rows[pivot_row] = [field.mul(inv, v) for v in rows[pivot_row]]
        rhs[pivot_row] = [field.mul(inv, v) for v in rhs[pivot_row]]
        for r in range(len(rows)):
            if r != pivot_row and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [v ^ field.mul(factor, p)
                           for v, p in zip(rows[r], rows[pivot_row])]
                rhs[r] = [v ^ field.mul(factor, p)
                          for v, p in zip(rhs[r], rhs[pivot_row])]
        pivot_row += 1

    recovered: list[GfWord | None] = [None] * k
    unit_rows = {tuple(1 if j == i else 0 for j in range(k)): i for i in range(k)}
    for row, word in zip(rows, rhs):
        i = unit_rows.get(tuple(row))
        if i is not None:
            recovered[i] = GfWord(tuple(word), generator.order)
    return DecodeResult(messages=tuple(recovered),
                        complete=all(m is not None for m in recovered))


def is_mds(generator: GeneratorMatrix) -> bool:
    """True when every k-column submatrix of the generator is invertible."""
    field = Gf(generator.order)
    k = generator.k
    for cols in combinations(range(generator.n), k):
        sub = [[generator.rows[i][j] for j in cols] for i in range(k)]
        if _determinant(sub, field) == 0:
            return False
    return True


def _determinant(matrix: list[list[int]], field: Gf) -> int:
    """Cofactor expansion; fields are tiny so k is 2 or 3 in practice."""
    k = len(matrix)
    if k == 1:
        return matrix[0][0]
    det = 0
    for j, coeff in enumerate(matrix[0]):
        if coeff == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in matrix[1:]]
        det ^= field.mul(coeff, _determinant(minor, field))
    return det
