"""Self-check suites behind ``plantkyber verify``.

Each suite takes an iteration count and a seed and returns a
:class:`SuiteResult`.  Randomness comes from ``numpy.random.default_rng``
seeded here; the library functions under test only see explicit inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import oracle
from .bounds import (adversarial_input, check_schedule, derive_reduction_points,
                     nominal_input_bound, propagate, Interval)
from .cost import cost_of
from .isa import BARREL_SHIFTER, PLAIN_RISC
from .modarith import (KYBER, RangeError, derive_params, plantard_mul,
                       plantard_mul_const, precompute_const, reduce_coeff,
                       reduce_product)
from .ntt import (Stats, forward_schedule, input_limit, intt_batch,
                  inverse_schedule, ntt_forward_batch, variant_k)
from .polyalg import (PAIRS, basemul_batch, basemul_cached_batch, cache_batch,
                      matvec_speed, matvec_stack, Poly, Domain)

Q = KYBER.q
STRATEGIES = ("gs34", "ct313")
VARIANTS = ("stack2", "stack3", "stack4", "speed")
CHUNK = 1 << 20


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: int = 0
    first_failure: str = ""
    lines: list = field(default_factory=list)

    @property
    def passed(self):
        return self.failures == 0

    def expect(self, ok, detail):
        self.checks += 1
        if not ok:
            self.failures += 1
            if not self.first_failure:
                self.first_failure = detail

    def summary(self):
        head = f"{self.name}: {self.checks - self.failures}/{self.checks} checks passed"
        out = [head] + [f"  {x}" for x in self.lines]
        if self.first_failure:
            out.append(f"  first failure: {self.first_failure}")
        return "\n".join(out)


# -- helpers shared with the test-suite ---------------------------------------

def random_ntt_inputs(rng, batch, variant, q=Q):
    """Random polynomials and a valid INTT input for ``variant`` per polynomial.

    The forward NTT output is reduced and then lifted by random multiples of
    q so that the INTT input spreads over the whole variant contract.
    """
    a = rng.integers(-(q - 1), q, (batch, 256))
    r = reduce_coeff(ntt_forward_batch(a), KYBER)
    lim = input_limit(variant, q)
    m_lo = -((lim + r) // q)
    m_hi = (lim - r) // q
    m = m_lo + (rng.random(r.shape) * (m_hi - m_lo + 1)).astype(np.int64)
    return a, r + q * m


def schoolbook_batch(a, b, q=Q):
    return np.stack([oracle.schoolbook_mul_fast(x, y, q) for x, y in zip(a, b)])


# -- suites --------------------------------------------------------------------

def _exact(r, t_or_a, b, q, l):
    return r == oracle.naive_mod_mul_array(t_or_a, b, q, -2 * l, True)


def suite_modarith_exhaustive(iterations=None, seed=0):
    """Every product for q=17, l=8: published window and verified window."""
    res = SuiteResult("modarith-exhaustive")
    p = derive_params(17, 8)
    for label, (lo, hi) in (("published", p.prod_range), ("verified", p.safe_prod_range)):
        t = np.arange(lo + 1, hi, dtype=np.int64)
        good = _exact(reduce_product(t, p, check=False), t, 1, 17, 8)
        bad = t[~good]
        res.expect(bad.size == 0, f"{label} window: {bad.size} wrong products, first t={bad[:1].tolist()}")
        res.lines.append(f"{label} ({lo}, {hi}): {int(good.sum())}/{t.size} exact")
    a, b = np.meshgrid(np.arange(-128, 128), np.arange(-128, 128))
    a, b = a.ravel(), b.ravel()
    ok = (a * b > p.safe_prod_range[0]) & (a * b < p.safe_prod_range[1])
    r = plantard_mul(a[ok], b[ok], p)
    res.expect(bool(_exact(r, a[ok], b[ok], 17, 8).all()), "plantard_mul disagrees with oracle")
    res.lines.append(f"plantard_mul: {int(ok.sum())} operand pairs in the verified window")
    return res


def suite_modarith_kyber(iterations=10**6, seed=0):
    res = SuiteResult("modarith-kyber")
    p = KYBER
    rng = np.random.default_rng(seed)
    b = np.arange(Q)
    bq = np.array([precompute_const(int(x), p) for x in b])
    for a in (-157 * Q, 230 * Q):
        r = plantard_mul_const(np.full(Q, a), bq, p, check=False)
        bad = int((~_exact(r, np.full(Q, a), b, Q, 16)).sum())
        res.expect(bad == 0, f"boundary a={a}: {bad}/{Q} constants give a wrong result")
        res.lines.append(f"boundary a={a}: {Q - bad}/{Q} exact")
    for label, (lo, hi) in (("published", p.const_input_range), ("verified", p.safe_const_input_range)):
        done = bad = 0
        while done < iterations:
            n = min(CHUNK, iterations - done)
            a = rng.integers(lo, hi + 1, n)
            bi = rng.integers(0, Q, n)
            bad += int((~_exact(plantard_mul_const(a, bq[bi], p, check=False), a, bi, Q, 16)).sum())
            done += n
        res.expect(bad == 0, f"{label} range [{lo}, {hi}]: {bad}/{iterations} random pairs wrong")
        res.lines.append(f"{label} range: {iterations - bad}/{iterations} random pairs exact")
    try:
        plantard_mul(231 * Q, 3328, p)
        res.expect(False, "(231q, 3328) accepted")
    except RangeError:
        res.expect(231 * Q * 3328 >= p.prod_range[1], "(231q, 3328) rejected for the wrong reason")
    return res


def suite_ntt_roundtrip(iterations=1000, seed=0):
    res = SuiteResult("ntt-roundtrip")
    rng = np.random.default_rng(seed)
    for strategy in STRATEGIES:
        for variant in VARIANTS:
            sched = inverse_schedule(strategy, variant)
            a, x = random_ntt_inputs(rng, iterations, variant)
            out = intt_batch(x, sched)
            bad = int((oracle.cmod_array(out, Q) != oracle.cmod_array(a, Q)).any(axis=1).sum())
            res.expect(bad == 0, f"{strategy}/{variant}: {bad} polynomials differ")
            res.lines.append(f"{strategy}/{variant}: {iterations - bad}/{iterations}")
    return res


def suite_polymul_oracle(iterations=200, seed=0):
    res = SuiteResult("polymul-oracle")
    rng = np.random.default_rng(seed)
    h = (Q - 1) // 2
    a = rng.integers(-h, h + 1, (iterations, 256))
    b = rng.integers(-h, h + 1, (iterations, 256))
    ah = reduce_coeff(ntt_forward_batch(a), KYBER)
    bh = reduce_coeff(ntt_forward_batch(b), KYBER)
    want = schoolbook_batch(a, b)
    paths = {
        "stack": basemul_batch(ah, bh),
        "speed": basemul_cached_batch(ah, bh, cache_batch(bh)),
    }
    for name, c in paths.items():
        got = oracle.cmod_array(intt_batch(c, inverse_schedule("gs34", "speed")), Q)
        bad = int((got != want).any(axis=1).sum())
        res.expect(bad == 0, f"{name}: {bad} products differ")
        res.lines.append(f"{name}: {iterations - bad}/{iterations}")
    return res


def suite_matvec(iterations=10, seed=0):
    res = SuiteResult("matvec")
    rng = np.random.default_rng(seed)
    h = (Q - 1) // 2

    def fwd(x):
        return Poly(reduce_coeff(ntt_forward_batch(x)[0], KYBER), Domain.NTT)

    for k in (2, 3, 4):
        bad = 0
        for _ in range(iterations):
            A = rng.integers(-h, h + 1, (k, k, 256))
            s = rng.integers(-h, h + 1, (k, 256))
            want = [oracle.cmod_array(sum(oracle.schoolbook_mul_fast(A[i, j], s[j]) for j in range(k)), Q)
                    for i in range(k)]
            Ah = [[fwd(A[i, j]) for j in range(k)] for i in range(k)]
            sh = [fwd(x) for x in s]
            for variant, outs in ((f"stack{k}", matvec_stack(Ah, sh, k)),
                                  ("speed", matvec_speed(Ah, sh, k))):
                got = intt_batch(np.stack([o.coeffs for o in outs]), inverse_schedule("gs34", variant))
                bad += not np.array_equal(oracle.cmod_array(got, Q), np.stack(want))
        res.expect(bad == 0, f"k={k}: {bad} mismatching products")
        res.lines.append(f"k={k}: {2 * iterations - bad}/{2 * iterations}")
    return res


def published_bound_checks():
    """(label, measured, expected) triples for the published growth figures."""
    out = []
    for k in (2, 3, 4):
        v = f"stack{k}"
        r = propagate(inverse_schedule("gs34", v).with_reductions(()), nominal_input_bound(v))
        out.append((f"GS {v} after layer 3", r.max_after(3), Fraction(4 * k)))
    for k, want in ((3, Fraction(13, 2)), (4, Fraction(17, 2))):
        r = propagate(inverse_schedule("ct313", f"stack{k}"), nominal_input_bound(f"stack{k}"))
        out.append((f"CT stack{k} after layer 3", r.max_after(3), want))
    r = propagate(inverse_schedule("ct313", "stack4"), nominal_input_bound("stack4"))
    out.append(("CT stack4 after layer 4", r.max_after(4), Fraction(9)))
    r = propagate(inverse_schedule("ct313", "speed"), nominal_input_bound("speed"))
    out.append(("CT speed layer 7", r.max_peak(7), Fraction(72)))
    r = propagate(inverse_schedule("gs34", "speed"), nominal_input_bound("speed"))
    out.append(("GS speed layer 7", r.max_peak(7), Fraction(64)))
    r = propagate(inverse_schedule("gs34", "stack2"), nominal_input_bound("stack2"))
    out.append(("GS stack2 layer 7", r.max_peak(7), Fraction(128)))
    r = propagate(inverse_schedule("ct331", "stack4"), nominal_input_bound("stack4"))
    f = r.first_violation
    out.append(("CT 3+3+1 stack4 overflow", f and (f.layer, f.kind, f.bound),
                (6, "store-back", Fraction(10))))
    r = propagate(forward_schedule(), Interval.symmetric(1))
    out.append(("NTT growth over input", r.max_after(7) - 1, Fraction(7, 2)))
    return out


def suite_bounds(iterations=None, seed=0):
    res = SuiteResult("bounds")
    for label, got, want in published_bound_checks():
        res.expect(got == want, f"{label}: got {got}, expected {want}")
        res.lines.append(f"{label}: {got} (expected {want})")
    ok, _ = check_schedule(inverse_schedule("gs34", "stack2"))
    res.expect(ok, "GS stack2 without reductions should pass")
    ok, rep = check_schedule(inverse_schedule("gs34", "stack4").with_reductions(()))
    res.expect(not ok and rep.first_violation.layer == 3, "GS stack4 without reductions should fail at layer 3")
    for strategy, variant, want in (("gs34", "stack2", ()), ("gs34", "stack3", ((3, 32),)),
                                    ("gs34", "stack4", ((3, 32),)), ("ct313", "stack3", ((2, 32),)),
                                    ("ct313", "stack4", ((2, 32),))):
        d = derive_reduction_points(inverse_schedule(strategy, variant))
        got = tuple((l, len(ix)) for l, ix in d.reduction_points)
        res.expect(got == want, f"derived reductions {strategy}/{variant}: {got}")
        res.lines.append(f"derived {strategy}/{variant}: {got}")
    for variant, layer, stage in (("stack2", 3, "after"), ("speed", 7, "peak")):
        sched = inverse_schedule("gs34", variant)
        x = adversarial_input(sched, layer, stage=stage)
        st = Stats()
        intt_batch(x.coeffs, sched, stats=st, upto=layer)
        rep = propagate(sched)
        got = (st.after if stage == "after" else st.peak)[layer].max()
        want = (rep.max_after(layer) if stage == "after" else rep.max_peak(layer)) * Q
        res.expect(got == want, f"adversarial GS {variant} layer {layer}: {got} != {want}")
    return res


def suite_cost(iterations=None, seed=0):
    res = SuiteResult("cost")
    for prof in (BARREL_SHIFTER, PLAIN_RISC):
        c = cost_of("plantard_mul_const", prof)
        res.expect((c.total, c.mul_total) == (4, 2), f"plantard_mul_const on {prof}: {c.total}/{c.mul_total}")
        m = cost_of("mont_mul", prof)
        res.expect(m.total == 5 and m.mul_total == c.mul_total + 1, f"mont_mul on {prof}: {m.total}")
        d = cost_of("basemul", prof) - cost_of("basemul_cached", prof)
        res.expect(d.counts == c.counts, f"cached basemul saving on {prof}: {d.counts}")
    ct, gs = (cost_of(a, BARREL_SHIFTER).total for a in ("ct_butterfly", "gs_butterfly"))
    res.expect((ct, gs) == (5, 6), f"barrel shifter CT/GS: {ct}/{gs}")
    ct, gs = (cost_of(a, PLAIN_RISC).total for a in ("ct_butterfly", "gs_butterfly"))
    res.expect(ct == gs, f"plain CT/GS: {ct}/{gs}")
    res.lines.append(f"modular multiplications saved per polynomial by caching: {PAIRS}")
    return res


SUITES = {
    "modarith-exhaustive": (suite_modarith_exhaustive, None),
    "modarith-kyber": (suite_modarith_kyber, 10**6),
    "ntt-roundtrip": (suite_ntt_roundtrip, 1000),
    "polymul-oracle": (suite_polymul_oracle, 200),
    "matvec": (suite_matvec, 10),
    "bounds": (suite_bounds, None),
    "cost": (suite_cost, None),
}


def run_suite(name, iterations=None, seed=0):
    fn, default = SUITES[name]
    return fn(iterations if iterations is not None else default, seed)
