"""
Numeric helpers: tolerant comparisons, harmonic numbers and arithmetic precision modes.
"""

import math
from decimal import Context, Decimal
from typing import Optional, Union

import numpy as np

from src.config import is_double_precision, settings

Number = Union[float, Decimal]


def _tolerance(tol: Optional[float]) -> float:
    return settings.float_tolerance if tol is None else tol


def approx_le(a: float, b: float, tol: Optional[float] = None) -> bool:
    """a <= b up to a relative tolerance (absolute near zero)."""
    eps = _tolerance(tol)
    return a <= b + eps * max(1.0, abs(a), abs(b))


def approx_le_array(a: np.ndarray, b: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Elementwise `approx_le`."""
    eps = _tolerance(tol)
    return a <= b + eps * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))


def approx_ge(a: float, b: float, tol: Optional[float] = None) -> bool:
    """a >= b up to a relative tolerance (absolute near zero)."""
    return approx_le(b, a, tol)


def approx_eq(a: float, b: float, tol: Optional[float] = None) -> bool:
    return approx_le(a, b, tol) and approx_le(b, a, tol)


def harmonic(k: int) -> float:
    """H_k = 1 + 1/2 + ... + 1/k."""
    return math.fsum(1.0 / i for i in range(1, k + 1))


def decimal_context(precision_bits: int) -> Context:
    """Decimal context carrying at least `precision_bits` bits of mantissa."""
    digits = math.ceil(precision_bits * math.log10(2)) + 2
    return Context(prec=digits)


class Arithmetic:
    """Float or decimal arithmetic chosen by mantissa width."""

    def __init__(self, precision_bits: Optional[int] = None):
        self.precision_bits = precision_bits or settings.precision_bits
        self.exact = not is_double_precision(self.precision_bits)
        self.context = decimal_context(self.precision_bits) if self.exact else None

    def number(self, value: Union[int, float, str]) -> Number:
        if self.context is not None:
            return self.context.create_decimal(str(value) if isinstance(value, float) else value)
        return float(value)

    def sqrt(self, value: Number) -> Number:
        if self.context is not None:
            return self.context.sqrt(value)
        return math.sqrt(value)

    def add(self, a: Number, b: Number) -> Number:
        if self.context is not None:
            return self.context.add(a, b)
        return a + b

    def sub(self, a: Number, b: Number) -> Number:
        if self.context is not None:
            return self.context.subtract(a, b)
        return a - b

    def mul(self, a: Number, b: Number) -> Number:
        if self.context is not None:
            return self.context.multiply(a, b)
        return a * b

    def div(self, a: Number, b: Number) -> Number:
        if self.context is not None:
            return self.context.divide(a, b)
        return a / b
