"""Signed word-size modular arithmetic: Plantard, Montgomery and Barrett.

Everything is parameterised by the half word size ``l`` so the same code runs
at ``l = 16`` for Kyber and at ``l = 8`` where every admissible product can be
enumerated.  Inputs may be Python ints or int64 numpy arrays.

Plantard results carry the factor ``-2^{-2l}``: ``plantard_mul(a, b)`` is
congruent to ``a * b * (-2^{-2l})`` and lies in ``[-(q-1)/2, (q-1)/2]``.

Two product ranges are kept.  ``prod_range`` is the published window
``(-q 2^(l+alpha), 2^2l - q 2^(l+alpha))``.  Exhaustive sweeps show the
formula is not exact across all of it: near the lower end the congruence
fails (the low half ``p0`` of ``ab q'`` eats up to ``q (2^l - 1)`` of the
margin), and from ``2^(2l-1)`` upward the result can be ``+-(q+1)/2``.
``safe_prod_range`` is the window where the result is provably exact,
``[-q (2^(l+alpha) - 2^l + 1), min(2^2l - q 2^(l+alpha), 2^(2l-1)))``, and it
is what the kernels enforce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .isa import DEFAULT_ISA, wrap


class RangeError(ValueError):
    """An operand is outside the range for which the algorithm is correct."""


@dataclass(frozen=True)
class ModParams:
    q: int
    l: int
    alpha: int
    q_inv_2l2: int          # q^-1 mod± 2^2l
    q_shift_l: int          # q * 2^l, multiplier for the mul_hi form
    red_const: int          # ((-2^2l mod q) * q^-1) mod± 2^2l
    mont_qinv: int          # q^-1 mod± 2^l
    prod_range: tuple       # published exclusive bounds on a*b
    const_input_range: tuple  # inclusive bounds on a when b is in [0, q)
    reduce_input_range: tuple  # inclusive bounds accepted by reduce_coeff
    safe_prod_range: tuple  # exclusive bounds on a*b where the output is exact
    safe_const_input_range: tuple
    safe_reduce_input_range: tuple

    @property
    def word(self):
        return 2 * self.l

    @property
    def plantard_factor_inv(self):
        """``(-2^{2l}) mod q``, the inverse of the Plantard output factor."""
        return (-(1 << self.word)) % self.q


def _operand_range(prod_range, b):
    """Inclusive integer range of a with lo < a*b < hi, for b > 0."""
    lo, hi = prod_range
    return (lo // b + 1, (hi - 1) // b)


def derive_params(q, l):
    if q % 2 == 0:
        raise ValueError(f"modulus must be odd, got {q}")
    if not 3 <= q < (1 << (l - 1)):
        raise ValueError(f"modulus {q} out of range for l={l}")
    alpha = 0
    while q < (1 << (l - alpha - 2)):
        alpha += 1
    word = 2 * l
    q_inv = wrap(pow(q, -1, 1 << word), word)
    prod_range = (-q << (l + alpha), (1 << word) - (q << (l + alpha)))
    safe_range = (-q * ((1 << (l + alpha)) - (1 << l) + 1) - 1,
                  min(prod_range[1], 1 << (word - 1)))
    red_b = (-(1 << word)) % q
    return ModParams(
        q=q,
        l=l,
        alpha=alpha,
        q_inv_2l2=q_inv,
        q_shift_l=q << l,
        red_const=wrap(red_b * q_inv, word),
        mont_qinv=wrap(pow(q, -1, 1 << l), l),
        prod_range=prod_range,
        const_input_range=_operand_range(prod_range, q - 1),
        reduce_input_range=_operand_range(prod_range, red_b),
        safe_prod_range=safe_range,
        safe_const_input_range=_operand_range(safe_range, q - 1),
        safe_reduce_input_range=_operand_range(safe_range, red_b),
    )


KYBER = derive_params(3329, 16)


def _bounds(x):
    if isinstance(x, np.ndarray):
        if x.size == 0:
            return 0, 0
        return int(x.min()), int(x.max())
    return x, x


def check_inclusive(x, rng, what):
    lo, hi = _bounds(x)
    if lo < rng[0] or hi > rng[1]:
        raise RangeError(f"{what}: values [{lo}, {hi}] outside [{rng[0]}, {rng[1]}]")


def check_exclusive(x, rng, what):
    lo, hi = _bounds(x)
    if lo <= rng[0] or hi >= rng[1]:
        raise RangeError(f"{what}: values [{lo}, {hi}] outside ({rng[0]}, {rng[1]})")


def _plantard_tail(r, p, isa):
    # r = [abq']_2l; returns [([r]^l + 2^alpha) q]^l
    if isa.barrel_shifter:
        r = isa.add_asr(1 << p.alpha, r, p.l)
        r = isa.mul_lo(r, p.q, p.word)
        return isa.asr(r, p.l)
    r = isa.asr(r, p.l)
    r = isa.add(r, 1 << p.alpha)
    return isa.mul_hi(r, p.q_shift_l, p.word)


def precompute_const(b, p):
    """``b * q^-1 mod± 2^2l`` for a constant ``0 <= b < q``."""
    if not 0 <= b < p.q:
        raise RangeError(f"constant {b} outside [0, {p.q})")
    return wrap(b * p.q_inv_2l2, p.word)


def twiddle_const(c, p):
    """Pre-twisted constant such that ``plantard_mul_const(a, .) == a*c mod± q``."""
    return precompute_const((c * p.plantard_factor_inv) % p.q, p)


def plantard_mul(a, b, p, isa=DEFAULT_ISA, check=True):
    """Plantard multiplication of two variables with the enlarged input range."""
    if check:
        check_exclusive(a * b, p.safe_prod_range, "plantard_mul product")
    r = isa.mul_lo(a, b, p.word)
    r = isa.mul_lo(r, p.q_inv_2l2, p.word)
    return _plantard_tail(r, p, isa)


def plantard_mul_const(a, bq_prime, p, isa=DEFAULT_ISA, check=True):
    """Multiply ``a`` by a constant given in pre-multiplied form ``b * q'``."""
    if check:
        check_inclusive(a, p.safe_const_input_range, "plantard_mul_const input")
    r = isa.mul_lo(a, bq_prime, p.word)
    return _plantard_tail(r, p, isa)


def reduce_product(x, p, isa=DEFAULT_ISA, check=True):
    """Plantard reduction of a full product: returns ``x * (-2^-2l) mod± q``."""
    if check:
        check_exclusive(x, p.safe_prod_range, "reduce_product input")
    r = isa.mul_lo(x, p.q_inv_2l2, p.word)
    return _plantard_tail(r, p, isa)


def reduce_coeff(x, p, isa=DEFAULT_ISA, check=True):
    """Centered reduction of a coefficient: returns ``x mod± q``."""
    if check:
        check_inclusive(x, p.safe_reduce_input_range, "reduce_coeff input")
    r = isa.mul_lo(x, p.red_const, p.word)
    return _plantard_tail(r, p, isa)


def mont_mul(a, b, p, isa=DEFAULT_ISA, check=True):
    """Signed Montgomery multiplication, ``a*b*2^-l`` in ``(-q, q)``."""
    if check:
        bound = p.q << (p.l - 1)
        check_inclusive(a * b, (-bound, bound - 1), "mont_mul product")
    c = isa.mul_lo(a, b, p.word)
    m = isa.mul_lo(c, p.mont_qinv, p.l)
    t = isa.mul_lo(m, p.q, p.word)
    r = isa.sub(c, t)
    return isa.asr(r, p.l)


def barrett_params(p):
    """(shift, v) of the rounding Barrett reduction; (26, 20159) for Kyber."""
    shift = p.l + p.q.bit_length() - 2
    return shift, ((1 << shift) + p.q // 2) // p.q


def barrett_reduce(a, p, isa=DEFAULT_ISA):
    """Signed Barrett reduction of an l-bit value.

    Uses ``t = round(a * v / 2^shift)``; for q = 3329 the result lies in
    ``[-(q-1)/2, (q-1)/2]`` for every 16-bit input (checked exhaustively in
    the tests).
    """
    shift, v = barrett_params(p)
    t = isa.mul_lo(a, v, p.word)
    t = isa.add(t, 1 << (shift - 1))
    t = isa.asr(t, shift)
    t = isa.mul_lo(t, p.q, p.word)
    return isa.sub(a, t)
