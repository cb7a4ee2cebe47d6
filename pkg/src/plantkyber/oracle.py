"""Slow, obviously-correct references.

Nothing here touches :mod:`plantkyber.modarith` or the NTT engine: results
come from exact integer arithmetic and direct polynomial remaindering.
"""

from __future__ import annotations

import numpy as np

N = 256
Q = 3329


def cmod(x, q):
    """x mod± q: the representative in (-q/2, q/2) (q odd)."""
    r = x % q
    return r - q if r > q // 2 else r


def cmod_array(x, q):
    x = np.asarray(x, dtype=np.int64) % q
    return np.where(x > q // 2, x - q, x)


def naive_mod_mul(a, b, q, twist=0, negate=False):
    """``a * b * 2^twist mod± q``, optionally times -1.

    ``twist=-l`` gives the Montgomery target, ``twist=-2l, negate=True`` the
    Plantard target ``a*b*(-2^-2l)``.
    """
    k = pow(2, twist, q)
    v = a * b * k
    return cmod(-v if negate else v, q)


def naive_mod_mul_array(a, b, q, twist=0, negate=False):
    """Vectorised :func:`naive_mod_mul` on residues (exact in int64)."""
    k = pow(2, twist, q)
    if negate:
        k = (-k) % q
    a = np.asarray(a, dtype=np.int64) % q
    b = np.asarray(b, dtype=np.int64) % q
    return cmod_array(a * b % q * k, q)


def schoolbook_mul(a, b, q=Q):
    """Negacyclic product in Z_q[X]/(X^n + 1), centered coefficients."""
    n = len(a)
    c = [0] * (2 * n)
    for i, ai in enumerate(a):
        ai = int(ai)
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            c[i + j] += ai * int(bj)
    return [cmod(c[i] - c[i + n], q) for i in range(n)]


def schoolbook_mul_fast(a, b, q=Q):
    """Same product via numpy convolution; exact since |a_i b_j| n < 2^63."""
    a = np.asarray(a, dtype=np.int64) % q
    b = np.asarray(b, dtype=np.int64) % q
    n = len(a)
    c = np.convolve(a, b)
    c = np.concatenate([c, [0]])
    return cmod_array(c[:n] - c[n:], q)


def primitive_root_256(q=Q):
    """Smallest g with g^128 = -1 mod q (a primitive 256-th root of unity)."""
    for g in range(2, q):
        if pow(g, 128, q) == q - 1:
            return g
    raise ValueError("no primitive 256-th root of unity")


def bitrev7(i):
    return int(f"{i:07b}"[::-1], 2)


def poly_rem_deg2(a, c, q=Q):
    """Remainder of a(X) modulo X^2 - c, by repeated substitution X^2 -> c."""
    r = [int(x) for x in a]
    for d in range(len(r) - 1, 1, -1):
        r[d - 2] = (r[d - 2] + c * r[d]) % q
        r[d] = 0
    return cmod(r[0], q), cmod(r[1], q)


def dft_reference(a, q=Q, zeta=None):
    """The 128 degree-2 residues of a modulo X^2 - zeta^(2 br7(i) + 1)."""
    zeta = zeta or primitive_root_256(q)
    out = []
    for i in range(128):
        out.extend(poly_rem_deg2(a, pow(zeta, 2 * bitrev7(i) + 1, q), q))
    return out
