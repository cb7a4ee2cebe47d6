import numpy as np
import pytest

from plantkyber import oracle
from plantkyber.modarith import KYBER, reduce_coeff
from plantkyber.ntt import Domain, Poly, intt, intt_batch, inverse_schedule, ntt_forward, ntt_forward_batch
from plantkyber.polyalg import (Accumulator32, PolyDouble, PolyHalf, basemul, basemul_batch,
                                basemul_cached, basemul_cached_batch, cache_batch,
                                cache_secret_half, inner_product_speed, inner_product_stack,
                                matvec_speed, matvec_stack, memory_report)

Q = 3329
H = (Q - 1) // 2
SPEED = inverse_schedule("gs34", "speed")


def fwd(a):
    p = ntt_forward(Poly(a))
    return Poly(reduce_coeff(p.coeffs, KYBER), Domain.NTT)


def rand(rng, *shape):
    return rng.integers(-H, H + 1, shape + (256,))


def test_basemul_zero():
    rng = np.random.default_rng(0)
    z = Poly(np.zeros(256), Domain.NTT)
    assert not basemul(z, fwd(rand(rng))).coeffs.any()
    assert not basemul_cached(z, fwd(rand(rng)), cache_secret_half(fwd(rand(rng)))).coeffs.any()


def test_basemul_identity():
    rng = np.random.default_rng(1)
    x = rand(rng)
    one = fwd(np.eye(1, 256, dtype=np.int64)[0])
    back = intt(basemul(one, fwd(x)), SPEED)
    assert np.array_equal(oracle.cmod_array(back.coeffs, Q), x)


def test_basemul_matches_schoolbook():
    rng = np.random.default_rng(2)
    a, b = rand(rng, 50), rand(rng, 50)
    ah = reduce_coeff(ntt_forward_batch(a), KYBER)
    bh = reduce_coeff(ntt_forward_batch(b), KYBER)
    got = oracle.cmod_array(intt_batch(basemul_batch(ah, bh), SPEED), Q)
    want = np.stack([oracle.schoolbook_mul_fast(x, y) for x, y in zip(a, b)])
    assert np.array_equal(got, want)


def test_basemul_outputs_reduced():
    rng = np.random.default_rng(3)
    c = basemul(fwd(rand(rng)), fwd(rand(rng)))
    assert np.abs(c.coeffs).max() <= H


def test_cache_matches_twisted_odd_half():
    rng = np.random.default_rng(4)
    s = fwd(rand(rng))
    cache = cache_secret_half(s)
    gamma = [pow(17, 2 * oracle.bitrev7(i) + 1, Q) for i in range(128)]
    want = oracle.cmod_array(s.coeffs[1::2] * np.array(gamma), Q)
    assert np.array_equal(cache.coeffs, want)
    assert not cache_secret_half(Poly(np.zeros(256), Domain.NTT)).coeffs.any()


def test_cached_agrees_with_uncached():
    rng = np.random.default_rng(5)
    a = reduce_coeff(ntt_forward_batch(rand(rng, 10000)), KYBER)
    s = reduce_coeff(ntt_forward_batch(rand(rng, 10000)), KYBER)
    assert np.array_equal(basemul_cached_batch(a, s, cache_batch(s)), basemul_batch(a, s))


def test_inner_product_k1_is_basemul():
    rng = np.random.default_rng(6)
    a, b = fwd(rand(rng)), fwd(rand(rng))
    assert np.array_equal(inner_product_stack([a], [b], 1).coeffs, basemul(a, b).coeffs)
    assert np.array_equal(inner_product_speed([a], [b], 1).coeffs, basemul(a, b).coeffs)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_matvec_against_schoolbook(k):
    rng = np.random.default_rng(k)
    A, s = rand(rng, k, k), rand(rng, k)
    Ah = [[fwd(A[i, j]) for j in range(k)] for i in range(k)]
    sh = [fwd(x) for x in s]
    want = np.stack([oracle.cmod_array(sum(oracle.schoolbook_mul_fast(A[i, j], s[j])
                                           for j in range(k)), Q) for i in range(k)])
    stack = matvec_stack(Ah, sh, k)
    speed = matvec_speed(Ah, sh, k)
    assert max(np.abs(o.coeffs).max() for o in stack) <= k * H
    assert max(np.abs(o.coeffs).max() for o in speed) <= H
    for outs, variant in ((stack, f"stack{k}"), (speed, "speed")):
        got = intt_batch(np.stack([o.coeffs for o in outs]), inverse_schedule("gs34", variant))
        assert np.array_equal(oracle.cmod_array(got, Q), want)
    for x, y in zip(stack, speed):
        assert np.array_equal(oracle.cmod_array(x.coeffs, Q), y.coeffs)


def test_matvec_single_column_matches_basemul():
    rng = np.random.default_rng(7)
    k = 3
    Ah = [[fwd(rand(rng)) for _ in range(k)] for _ in range(k)]
    z = Poly(np.zeros(256), Domain.NTT)
    s1 = fwd(rand(rng))
    out = matvec_stack(Ah, [z, s1, z], k)
    for i in range(k):
        assert np.array_equal(out[i].coeffs, basemul(Ah[i][1], s1).coeffs)


def test_accumulator_worst_case_k4():
    full = Poly(np.full(256, -H), Domain.NTT)
    st = {}
    matvec_speed([[full] * 4] * 4, [full] * 4, 4, stats=st)
    assert 0 < st["acc_max"] < 2**31


def test_accumulator_overflow_raises():
    acc = Accumulator32()
    with pytest.raises(OverflowError):
        acc.add(np.full(256, 2**31))


def test_unreduced_operands_rejected():
    big = Poly(np.full(256, Q), Domain.NTT)
    with pytest.raises(ValueError):
        matvec_stack([[big, big]] * 2, [big, big], 2)
    with pytest.raises(ValueError):
        basemul(Poly(np.zeros(256)), big)


@pytest.mark.parametrize("k,saving", [(2, 512), (3, 768), (4, 1024)])
def test_memory_accounting(k, saving):
    rep = memory_report(k)
    assert rep.poly_half_bytes == PolyHalf.nbytes() == 256
    assert rep.saving_bytes == saving
    assert rep.poly_double_bytes == rep.accumulator_bytes == 1024
    assert PolyDouble.nbytes() == Accumulator32.nbytes()
