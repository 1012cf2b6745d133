"""GF(2^n) arithmetic for payloads and coding coefficients.

Elements are stored as plain integers whose bits are polynomial
coefficients over GF(2). Addition is XOR; multiplication is a carry-less
product reduced by an irreducible polynomial of degree n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

MAX_BITS = 20


class FieldError(ValueError):
    pass


def _poly_degree(p: int) -> int:
    return p.bit_length() - 1


def _poly_mod(a: int, m: int) -> int:
    dm = _poly_degree(m)
    while a and _poly_degree(a) >= dm:
        a ^= m << (_poly_degree(a) - dm)
    return a


@lru_cache(maxsize=None)
def is_irreducible(poly: int) -> bool:
    """Exhaustive trial division by every polynomial of degree 1..deg/2."""
    deg = _poly_degree(poly)
    if deg < 1:
        return False
    for d in range(2, 1 << (deg // 2 + 1)):
        if _poly_mod(poly, d) == 0:
            return False
    return True


@lru_cache(maxsize=None)
def smallest_irreducible(n: int) -> int:
    for poly in range(1 << n, 1 << (n + 1)):
        if is_irreducible(poly):
            return poly
    raise FieldError(f"no irreducible polynomial of degree {n}")  # pragma: no cover


@dataclass(frozen=True)
class FieldParams:
    """Bit width ``n`` and the reduction polynomial defining GF(2^n).

    When ``reduction_poly`` is omitted the numerically smallest irreducible
    polynomial of degree ``n`` is used (``x^10 + x^3 + 1`` for ``n = 10``).
    """

    n: int
    reduction_poly: int = 0

    def __post_init__(self):
        if not 1 <= self.n <= MAX_BITS:
            raise FieldError(f"n must be in [1, {MAX_BITS}], got {self.n}")
        if self.reduction_poly == 0:
            object.__setattr__(self, "reduction_poly", smallest_irreducible(self.n))
        if _poly_degree(self.reduction_poly) != self.n:
            raise FieldError(
                f"reduction polynomial {self.reduction_poly:#x} does not have degree {self.n}"
            )
        if not is_irreducible(self.reduction_poly):
            raise FieldError(f"reduction polynomial {self.reduction_poly:#x} is reducible")

    @property
    def size(self) -> int:
        return 1 << self.n

    def element(self, value: int) -> FieldElement:
        return FieldElement(value, self)


@dataclass(frozen=True)
class FieldElement:
    value: int
    params: FieldParams = field(repr=False)

    def __post_init__(self):
        if not 0 <= self.value < self.params.size:
            raise FieldError(f"value {self.value} out of range for n={self.params.n}")

    def __add__(self, other: FieldElement) -> FieldElement:
        return gf_add(self, other)

    def __mul__(self, other: FieldElement) -> FieldElement:
        return gf_mul(self, other)

    def __int__(self) -> int:
        return self.value


def _check_same(a: FieldElement, b: FieldElement) -> None:
    if a.params != b.params:
        raise FieldError("operands belong to different fields")


def gf_add(a: FieldElement, b: FieldElement) -> FieldElement:
    _check_same(a, b)
    return FieldElement(a.value ^ b.value, a.params)


def mul_int(a: int, b: int, params: FieldParams) -> int:
    """Carry-less product of two raw integers, reduced modulo the field polynomial."""
    n, poly = params.n, params.reduction_poly
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        b >>= 1
        a <<= 1
        if a >> n:
            a ^= poly
    return acc


def gf_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    _check_same(a, b)
    return FieldElement(mul_int(a.value, b.value, a.params), a.params)


def mul_scalar_array(alpha: int, values: np.ndarray, params: FieldParams) -> np.ndarray:
    """Multiply every entry of ``values`` by the field element ``alpha``."""
    n, poly = params.n, params.reduction_poly
    a = np.asarray(values, dtype=np.int64).copy()
    acc = np.zeros_like(a)
    while alpha:
        if alpha & 1:
            acc ^= a
        alpha >>= 1
        a <<= 1
        a ^= np.where(a >> n, poly, 0)
    return acc


def gf_inv(a: FieldElement) -> FieldElement:
    if a.value == 0:
        raise ZeroDivisionError("zero has no inverse")
    # a^(2^n - 2) by square-and-multiply
    result, base, e = 1, a.value, a.params.size - 2
    while e:
        if e & 1:
            result = mul_int(result, base, a.params)
        base = mul_int(base, base, a.params)
        e >>= 1
    return FieldElement(result, a.params)


def linear_combination(
    coeffs: Sequence[FieldElement], payloads: Sequence[FieldElement]
) -> FieldElement:
    if not coeffs or len(coeffs) != len(payloads):
        raise FieldError("coefficient and payload lists must be non-empty and equal length")
    total = gf_mul(coeffs[0], payloads[0])
    for c, x in zip(coeffs[1:], payloads[1:]):
        total = gf_add(total, gf_mul(c, x))
    return total


def hamming(a: int, b: int, width: int | None = None) -> int:
    """Number of differing bits between two words.

    ``a`` and ``b`` may be integers (with ``width`` bounding both) or
    equal-length 0/1 sequences.
    """
    if isinstance(a, int) and isinstance(b, int):
        if width is not None and (a >> width or b >> width):
            raise ValueError(f"words do not fit in {width} bits")
        return (a ^ b).bit_count()
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} != {len(b)}")
    return sum(1 for x, y in zip(a, b) if x != y)


@lru_cache(maxsize=None)
def popcount_table(n: int) -> np.ndarray:
    table = np.bitwise_count(np.arange(1 << n, dtype=np.uint32)).astype(np.int64)
    table.flags.writeable = False
    return table


def int_to_bits(x: int, n: int) -> np.ndarray:
    return (x >> np.arange(n)) & 1


def bits_to_int(bits) -> int:
    return int(sum(int(b) << i for i, b in enumerate(bits)))
