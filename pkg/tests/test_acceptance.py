"""Acceptance criteria 1 to 10, one test each.

Every test prints a single ``CRITERION n: PASS|FAIL`` line with the measured
numbers before asserting, so ``pytest -v -s`` doubles as a report.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from plantkyber import oracle
from plantkyber.bounds import adversarial_input, nominal_input_bound, propagate
from plantkyber.cost import cost_of
from plantkyber.isa import BARREL_SHIFTER, PLAIN_RISC
from plantkyber.modarith import (KYBER, RangeError, derive_params, plantard_mul,
                                 plantard_mul_const, precompute_const, reduce_product)
from plantkyber.ntt import (INTT_CT313, INTT_GS34, Schedule, Stats, gen_twiddles, intt_batch,
                            inverse_schedule)
from plantkyber.polyalg import Accumulator32, PolyDouble, memory_report
from plantkyber.verify import random_ntt_inputs, run_suite

Q = KYBER.q


def report(n, ok, detail):
    print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def exact_plantard(r, a, b, q, l):
    return r == oracle.naive_mod_mul_array(a, b, q, -2 * l, True)


def test_criterion_01_exhaustive_small_scale():
    p = derive_params(17, 8)
    assert (p.alpha, p.prod_range) == (2, (-17408, 48128))
    t0 = time.perf_counter()
    t = np.arange(-17408 + 1, 48128, dtype=np.int64)
    r = reduce_product(t, p, check=False)
    bad = ~exact_plantard(r, t, 1, 17, 8) | (np.abs(r) > 8)
    elapsed = time.perf_counter() - t0
    report(1, not bad.any() and elapsed < 1,
           f"{int(bad.sum())}/{t.size} wrong in (-17408, 48128), first t={t[bad][:1].tolist()}, "
           f"{elapsed:.3f}s")


def test_criterion_02_kyber_range():
    p = KYBER
    rng = np.random.default_rng(2022)
    b = np.arange(Q)
    bq = np.array([precompute_const(int(x), p) for x in b])
    boundary_bad = 0
    for a in (-157 * Q, 230 * Q):
        r = plantard_mul_const(np.full(Q, a), bq, p, check=False)
        boundary_bad += int((~exact_plantard(r, np.full(Q, a), b, Q, 16)).sum())
    n, random_bad = 10**7, 0
    for _ in range(10):
        a = rng.integers(-157 * Q, 230 * Q + 1, n // 10)
        bi = rng.integers(0, Q, n // 10)
        r = plantard_mul_const(a, bq[bi], p, check=False)
        random_bad += int((~exact_plantard(r, a, bi, Q, 16)).sum())
    prod = 231 * Q * 3328
    try:
        plantard_mul(231 * Q, 3328, p)
        rejected = False
    except RangeError:
        rejected = True
    violates = prod == 2_559_228_672 and prod > p.prod_range[1] == 2_549_612_544
    report(2, boundary_bad == 0 and random_bad == 0 and rejected and violates,
           f"boundary {boundary_bad}/{2 * Q} wrong, random {random_bad}/{n} wrong, "
           f"(231q, 3328) rejected={rejected} product={prod}")


def test_criterion_03_range_enlargement():
    lo, hi = -157 * Q, 230 * Q
    assert KYBER.const_input_range[0] <= lo and hi <= KYBER.const_input_range[1]
    ratio = Fraction(hi - lo, 128 * Q)
    report(3, ratio >= Fraction(245, 100), f"ratio {ratio} = {float(ratio):.4f}")


@pytest.mark.parametrize("strategy", ["gs34", "ct313"])
def test_criterion_04_roundtrip(strategy):
    rng = np.random.default_rng(4)
    bad = {}
    for variant in ("stack2", "stack3", "stack4", "speed"):
        a, x = random_ntt_inputs(rng, 10**4, variant)
        out = intt_batch(x, inverse_schedule(strategy, variant))
        bad[variant] = int((oracle.cmod_array(out, Q) != oracle.cmod_array(a, Q)).any(axis=1).sum())
    report(4, not any(bad.values()), f"{strategy} failures per variant {bad}")


def test_criterion_05_polymul_oracle():
    res = run_suite("polymul-oracle", 1000, seed=5)
    report(5, res.passed, "; ".join(res.lines))


def test_criterion_06_reduction_counts():
    cases = {("gs34", "stack2"): 0, ("gs34", "speed"): 0, ("ct313", "speed"): 0,
             ("gs34", "stack3"): 32, ("gs34", "stack4"): 32,
             ("ct313", "stack3"): 32, ("ct313", "stack4"): 32}
    rng = np.random.default_rng(6)
    got = {}
    for (strategy, variant) in cases:
        st = Stats()
        intt_batch(random_ntt_inputs(rng, 4, variant)[1], inverse_schedule(strategy, variant), stats=st)
        got[strategy, variant] = st.reductions
    report(6, got == cases, f"{got}")


def _published_bounds():
    out = {}
    for k in (2, 3, 4):
        v = f"stack{k}"
        r = propagate(inverse_schedule("gs34", v).with_reductions(()), nominal_input_bound(v))
        out[f"GS {v} layer 3 = {4 * k}q"] = (r.max_after(3), 4 * k)
    for k, want in ((3, Fraction(13, 2)), (4, Fraction(17, 2))):
        r = propagate(inverse_schedule("ct313", f"stack{k}"), nominal_input_bound(f"stack{k}"))
        out[f"CT stack{k} layer 3 = {want}q"] = (r.max_after(3), want)
        layer4 = r.max_after(4)
        out[f"CT stack{k} layer 4 <= 9q"] = (layer4, layer4 if layer4 <= 9 else 9)
    out["CT stack4 layer 4 = 9q"] = (layer4, 9)
    r = propagate(inverse_schedule("ct313", "speed"), nominal_input_bound("speed"))
    out["CT speed layer 7 = 72q"] = (r.max_peak(7), 72)
    r = propagate(inverse_schedule("gs34", "speed"), nominal_input_bound("speed"))
    out["GS speed layer 7 = 64q"] = (r.max_peak(7), 64)
    r = propagate(inverse_schedule("gs34", "stack2"), nominal_input_bound("stack2"))
    out["GS stack2 layer 7 = 128q"] = (r.max_peak(7), 128)
    return out


def _adversarial_exact():
    out = {}
    cases = [(f"stack{k}", s, "after") for k in (2, 3, 4) for s in (1, 2, 3)]
    cases += [("speed", 6, "after"), ("speed", 7, "peak"), ("stack2", 7, "peak")]
    for variant, layer, stage in cases:
        base = inverse_schedule("gs34", variant)
        # one register pass: no store-backs, so unreduced growth is observable
        sched = Schedule(base.name, base.layout, (7,), base.butterfly_per_layer, (), variant)
        rep = propagate(sched)
        st = Stats()
        intt_batch(adversarial_input(sched, layer, stage=stage).coeffs, sched, stats=st, upto=layer)
        got = int((st.after if stage == "after" else st.peak)[layer].max())
        want = (rep.max_after(layer) if stage == "after" else rep.max_peak(layer)) * Q
        out[f"GS {variant} layer {layer} {stage}"] = (got, want)
    return out


def test_criterion_07_bound_reproduction():
    bounds = _published_bounds()
    adv = _adversarial_exact()
    wrong = [f"{k}: got {g}q" for k, (g, w) in bounds.items() if g != w]
    wrong += [f"adversarial {k}: {g} != {w}" for k, (g, w) in adv.items() if g != w]
    report(7, not wrong, f"{len(bounds) - sum(g != w for g, w in bounds.values())}/{len(bounds)} "
                         f"analyzer bounds, {len(adv)} adversarial runs; mismatches: {wrong}")


def test_criterion_08_instruction_counts():
    got = {
        "plantard_const": [(cost_of("plantard_mul_const", p).total, cost_of("plantard_mul_const", p).mul_total)
                           for p in (BARREL_SHIFTER, PLAIN_RISC)],
        "mont": [cost_of("mont_mul", p).total for p in (BARREL_SHIFTER, PLAIN_RISC)],
        "barrel ct/gs": (cost_of("ct_butterfly").total, cost_of("gs_butterfly").total),
        "plain ct/gs": (cost_of("ct_butterfly", PLAIN_RISC).total, cost_of("gs_butterfly", PLAIN_RISC).total),
    }
    ok = (got["plantard_const"] == [(4, 2), (4, 2)] and got["mont"] == [5, 5]
          and got["barrel ct/gs"] == (5, 6) and got["plain ct/gs"][0] == got["plain ct/gs"][1])
    report(8, ok, f"{got}")


def test_criterion_09_memory():
    savings = [memory_report(k).saving_bytes for k in (2, 3, 4)]
    same = PolyDouble.nbytes() == Accumulator32.nbytes() == 256 * 4
    report(9, savings == [512, 768, 1024] and same,
           f"savings {savings}, PolyDouble {PolyDouble.nbytes()} B, accumulator {Accumulator32.nbytes()} B")


def test_criterion_10_twiddle_accesses():
    ct, gs = gen_twiddles(KYBER, INTT_CT313), gen_twiddles(KYBER, INTT_GS34)
    diff = ct.accesses - gs.accesses
    report(10, diff == 61, f"CT 3+1+3 {ct.accesses} vs GS 3+4 {gs.accesses} accesses, difference {diff}")
