"""Base multiplication, cached secret halves and matrix-vector products.

NTT-domain polynomials hold 128 degree-2 residues; pair ``i`` lives modulo
``X^2 - gamma_i`` with ``gamma_i = zeta^(2 br7(i) + 1)``.  A base
multiplication needs ``b_{2i+1} * gamma_i`` once per pair; caching those
twisted odd halves of a secret (a :class:`PolyHalf`) removes that
multiplication from every later product with the same secret.

Products are accumulated as raw 2l-bit values and reduced with a single
Plantard reduction, which leaves the factor ``F = -2^-2l``; one constant
multiplication by ``F^-1`` brings results back to plain residues so that
the INTT sees ordinary NTT-domain values.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .isa import DEFAULT_ISA
from .modarith import (KYBER, RangeError, check_inclusive, plantard_mul_const,
                       reduce_coeff, reduce_product, twiddle_const)
from .ntt import N, Domain, Poly, bitrev7, root_of_unity

PAIRS = N // 2


@dataclass
class PolyHalf:
    """Twisted odd coefficients ``s_{2i+1} * gamma_i mod± q`` of a secret."""
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.int64)
        if self.coeffs.shape != (PAIRS,):
            raise ValueError(f"expected {PAIRS} entries, got {self.coeffs.shape}")

    @staticmethod
    def nbytes(l=16):
        return PAIRS * l // 8


@dataclass
class Accumulator32:
    """256 signed 2l-bit running sums of unreduced base products."""
    values: np.ndarray = None
    l: int = 16

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros(N, dtype=np.int64)
        self.max_abs = 0

    def add(self, x):
        self.values = self.values + x
        bound = 1 << (2 * self.l - 1)
        self.max_abs = max(self.max_abs, int(np.abs(self.values).max()))
        if self.max_abs >= bound:
            raise OverflowError(f"accumulator reached {self.max_abs} >= 2^{2 * self.l - 1}")

    @staticmethod
    def nbytes(l=16):
        return N * 2 * l // 8


class PolyDouble:
    """512 l-bit coefficients aliasing an :class:`Accumulator32`."""

    @staticmethod
    def nbytes(l=16):
        return 2 * N * l // 8


@lru_cache(maxsize=None)
def _constants(p=KYBER):
    q = p.q
    zeta = root_of_unity(q)
    gamma = [pow(zeta, 2 * bitrev7(i) + 1, q) for i in range(PAIRS)]
    gamma_tw = np.array([twiddle_const(g, p) for g in gamma], dtype=np.int64)
    # reduce_product leaves a factor -2^-2l; this constant undoes it
    fix = twiddle_const(p.plantard_factor_inv, p)
    return gamma_tw, fix


def _split(x):
    x = np.asarray(x)
    return x[..., 0::2], x[..., 1::2]


def _interleave(c0, c1):
    out = np.empty(c0.shape[:-1] + (2 * c0.shape[-1],), dtype=np.int64)
    out[..., 0::2] = c0
    out[..., 1::2] = c1
    return out


# -- per-pair kernels (also what the cost model executes) ---------------------

def twist_odd(b1, gamma_tw, p=KYBER, isa=DEFAULT_ISA):
    """``b1 * gamma mod± q``."""
    return plantard_mul_const(b1, gamma_tw, p, isa)


def pair_products(a0, a1, b0, b1, t, p=KYBER, isa=DEFAULT_ISA):
    """Unreduced ``(a0 b0 + a1 t, a0 b1 + a1 b0)`` with ``t = b1 gamma``."""
    acc0 = isa.mul_lo(a0, b0, p.word)
    acc0 = isa.mul_acc(a1, t, acc0, p.word)
    acc1 = isa.mul_lo(a0, b1, p.word)
    acc1 = isa.mul_acc(a1, b0, acc1, p.word)
    return acc0, acc1


def finish(acc, fix, p=KYBER, isa=DEFAULT_ISA):
    """Reduce an accumulated product to its plain residue in [-(q-1)/2, (q-1)/2]."""
    return plantard_mul_const(reduce_product(acc, p, isa), fix, p, isa)


def basemul_pair(a0, a1, b0, b1, gamma_tw, fix, p=KYBER, isa=DEFAULT_ISA):
    t = twist_odd(b1, gamma_tw, p, isa)
    acc0, acc1 = pair_products(a0, a1, b0, b1, t, p, isa)
    return finish(acc0, fix, p, isa), finish(acc1, fix, p, isa)


def basemul_pair_cached(a0, a1, b0, b1, t, fix, p=KYBER, isa=DEFAULT_ISA):
    acc0, acc1 = pair_products(a0, a1, b0, b1, t, p, isa)
    return finish(acc0, fix, p, isa), finish(acc1, fix, p, isa)


# -- polynomial level ---------------------------------------------------------

def _ntt_coeffs(poly, what):
    if poly.domain is not Domain.NTT:
        raise ValueError(f"{what} must be in the NTT domain")
    return poly.coeffs


def poly_reduce(poly, p=KYBER):
    """Centered reduction of every coefficient."""
    return Poly(reduce_coeff(poly.coeffs, p), poly.domain)


def basemul(a_hat, b_hat, tw=None, p=KYBER, isa=DEFAULT_ISA):
    """Pointwise product of degree-2 residues, outputs reduced."""
    gamma_tw, fix = _constants(p)
    a0, a1 = _split(_ntt_coeffs(a_hat, "a_hat"))
    b0, b1 = _split(_ntt_coeffs(b_hat, "b_hat"))
    c0, c1 = basemul_pair(a0, a1, b0, b1, gamma_tw, fix, p, isa)
    return Poly(_interleave(c0, c1), Domain.NTT)


def cache_secret_half(s_hat, tw=None, p=KYBER, isa=DEFAULT_ISA):
    gamma_tw, _ = _constants(p)
    _, s1 = _split(_ntt_coeffs(s_hat, "s_hat"))
    return PolyHalf(twist_odd(s1, gamma_tw, p, isa))


def basemul_cached(a_hat, s_hat, cache, p=KYBER, isa=DEFAULT_ISA):
    _, fix = _constants(p)
    a0, a1 = _split(_ntt_coeffs(a_hat, "a_hat"))
    s0, s1 = _split(_ntt_coeffs(s_hat, "s_hat"))
    c0, c1 = basemul_pair_cached(a0, a1, s0, s1, cache.coeffs, fix, p, isa)
    return Poly(_interleave(c0, c1), Domain.NTT)


def _check_k(k, *vecs):
    if k not in (1, 2, 3, 4):
        raise ValueError(f"k must be in 1..4, got {k}")
    for v in vecs:
        if len(v) != k:
            raise ValueError(f"expected {k} polynomials, got {len(v)}")


def _check_reduced(polys, p):
    h = (p.q - 1) // 2
    for x in polys:
        check_inclusive(_ntt_coeffs(x, "operand"), (-h, h), "operand not reduced")


def inner_product_stack(a_vec, b_vec, k, p=KYBER):
    """Reduce each base product, then add; output in (-kq/2, kq/2)."""
    _check_k(k, a_vec, b_vec)
    _check_reduced(list(a_vec) + list(b_vec), p)
    out = np.zeros(N, dtype=np.int64)
    for a, b in zip(a_vec, b_vec):
        out += basemul(a, b, p=p).coeffs
    return Poly(out, Domain.NTT)


def inner_product_speed(a_vec, b_vec, k, cache_vec=None, acc=None, p=KYBER):
    """Accumulate raw products in 2l bits, reduce once; output reduced."""
    _check_k(k, a_vec, b_vec)
    _check_reduced(list(a_vec) + list(b_vec), p)
    _, fix = _constants(p)
    if cache_vec is None:
        cache_vec = [cache_secret_half(b, p=p) for b in b_vec]
    acc = acc if acc is not None else Accumulator32(l=p.l)
    for a, b, c in zip(a_vec, b_vec, cache_vec):
        a0, a1 = _split(a.coeffs)
        b0, b1 = _split(b.coeffs)
        acc0, acc1 = pair_products(a0, a1, b0, b1, c.coeffs, p)
        acc.add(_interleave(acc0, acc1))
    return Poly(finish(acc.values, fix, p), Domain.NTT)


def matvec_stack(A_hat, s_hat, k, p=KYBER):
    _check_k(k, A_hat, s_hat)
    return [inner_product_stack(row, s_hat, k, p) for row in A_hat]


def matvec_speed(A_hat, s_hat, k, cache_vec=None, p=KYBER, stats=None):
    """Speed version; the secret halves are cached once for all rows.

    If ``stats`` is a dict, the largest accumulator magnitude seen is stored
    under ``"acc_max"``.
    """
    _check_k(k, A_hat, s_hat)
    if cache_vec is None:
        cache_vec = [cache_secret_half(s, p=p) for s in s_hat]
    out = []
    for row in A_hat:
        acc = Accumulator32(l=p.l)
        out.append(inner_product_speed(row, s_hat, k, cache_vec, acc, p))
        if stats is not None:
            stats["acc_max"] = max(stats.get("acc_max", 0), acc.max_abs)
    return out


# -- memory accounting --------------------------------------------------------

@dataclass(frozen=True)
class MemoryReport:
    k: int
    poly_half_bytes: int
    baseline_cache_bytes: int   # per secret poly: s_{2i} copy plus twisted odd half
    cache_bytes: int            # per secret poly with PolyHalf
    saving_bytes: int           # over the whole k-vector
    poly_double_bytes: int
    accumulator_bytes: int


def memory_report(k, l=16):
    half = PolyHalf.nbytes(l)
    baseline = N * l // 8
    return MemoryReport(
        k=k,
        poly_half_bytes=half,
        baseline_cache_bytes=baseline,
        cache_bytes=half,
        saving_bytes=k * (baseline - half),
        poly_double_bytes=PolyDouble.nbytes(l),
        accumulator_bytes=Accumulator32.nbytes(l),
    )


__all__ = [
    "PolyHalf", "PolyDouble", "Accumulator32", "MemoryReport", "RangeError",
    "basemul", "basemul_cached", "cache_secret_half", "poly_reduce",
    "matvec_stack", "matvec_speed", "inner_product_stack", "inner_product_speed",
    "memory_report", "basemul_pair", "basemul_pair_cached",
    "basemul_batch", "cache_batch", "basemul_cached_batch",
]


def basemul_batch(a, b, p=KYBER, isa=DEFAULT_ISA):
    """:func:`basemul` on raw ``(batch, 256)`` coefficient arrays."""
    gamma_tw, fix = _constants(p)
    a0, a1 = _split(a)
    b0, b1 = _split(b)
    return _interleave(*basemul_pair(a0, a1, b0, b1, gamma_tw, fix, p, isa))


def cache_batch(s, p=KYBER, isa=DEFAULT_ISA):
    gamma_tw, _ = _constants(p)
    return twist_odd(_split(s)[1], gamma_tw, p, isa)


def basemul_cached_batch(a, s, cache, p=KYBER, isa=DEFAULT_ISA):
    _, fix = _constants(p)
    a0, a1 = _split(a)
    s0, s1 = _split(s)
    return _interleave(*basemul_pair_cached(a0, a1, s0, s1, cache, fix, p, isa))
