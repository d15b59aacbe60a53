"""Grid-dollar (G$) arithmetic.

All charges and budgets are fixed-point decimals with two fractional digits.
Floats never carry money; they enter only as measured durations/rates and are
converted through ``Decimal(str(x))`` so equal floats always price equally.
"""

from __future__ import annotations

from decimal import Decimal, ROUND_HALF_UP
from functools import lru_cache

CENT = Decimal("0.01")
ZERO = Decimal("0.00")


def round2(amount: Decimal) -> Decimal:
    """Quantize to cents, halves away from zero."""
    return amount.quantize(CENT, rounding=ROUND_HALF_UP)


def charge(wall_seconds: float, rate: float) -> Decimal:
    """Price for occupying a node for ``wall_seconds`` at ``rate`` G$/s."""
    return _charge_cached(wall_seconds, rate)


@lru_cache(maxsize=1 << 20)
def _charge_cached(wall_seconds: float, rate: float) -> Decimal:
    return round2(Decimal(str(wall_seconds)) * Decimal(str(rate)))


def parse_money(text: str) -> Decimal:
    """Parse a non-negative G$ amount from its canonical string form.

    Raises ValueError on anything that is not a plain decimal number.
    """
    text = text.strip()
    if not text:
        raise ValueError("empty amount")
    try:
        value = Decimal(text)
    except ArithmeticError:
        raise ValueError(f"bad amount {text!r}") from None
    if not value.is_finite():
        raise ValueError(f"bad amount {text!r}")
    return round2(value)


def fmt_money(amount: Decimal) -> str:
    """Canonical 2dp string form, e.g. '550.00'."""
    return str(round2(amount))
