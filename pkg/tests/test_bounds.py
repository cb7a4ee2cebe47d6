import json
from fractions import Fraction

import numpy as np
import pytest

from plantkyber.bounds import (Interval, adversarial_input, check_schedule,
                               derive_reduction_points, nominal_input_bound, propagate)
from plantkyber.ntt import Stats, forward_schedule, input_limit, intt_batch, inverse_schedule
from plantkyber.verify import random_ntt_inputs

Q = 3329


def test_interval_arithmetic():
    a = Interval(Fraction(-1, 2), Fraction(3, 2))
    b = Interval.symmetric(1)
    assert a + b == Interval(Fraction(-3, 2), Fraction(5, 2))
    assert a - b == Interval(Fraction(-3, 2), Fraction(5, 2))
    assert (-a) == Interval(Fraction(-3, 2), Fraction(1, 2))
    with pytest.raises(ValueError):
        Interval(1, 0)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_gs_layer3_is_eight_x(k):
    v = f"stack{k}"
    r = propagate(inverse_schedule("gs34", v).with_reductions(()), nominal_input_bound(v))
    assert [r.max_after(s) for s in range(4)] == [Fraction(k, 2) * 2**s for s in range(4)]
    assert r.max_after(3) == 4 * k


@pytest.mark.parametrize("k,want", [(3, Fraction(13, 2)), (4, Fraction(17, 2))])
def test_ct_layer3_after_layer2_reduction(k, want):
    r = propagate(inverse_schedule("ct313", f"stack{k}"), nominal_input_bound(f"stack{k}"))
    assert r.max_after(3) == want
    assert r.max_after(4) == want + Fraction(1, 2)


def test_gs_speed_and_stack2_final_layer():
    r = propagate(inverse_schedule("gs34", "speed"), nominal_input_bound("speed"))
    assert (r.max_after(3), r.max_peak(7)) == (4, 64)
    r = propagate(inverse_schedule("gs34", "stack2"), nominal_input_bound("stack2"))
    assert r.max_peak(7) == 128


def test_forward_growth():
    r = propagate(forward_schedule(), Interval.symmetric(1))
    assert r.max_after(7) == Fraction(9, 2)
    assert r.passed


def test_check_schedule_examples():
    ok, _ = check_schedule(inverse_schedule("gs34", "stack2"))
    assert ok
    ok, rep = check_schedule(inverse_schedule("gs34", "stack4").with_reductions(()))
    f = rep.first_violation
    assert not ok and (f.layer, f.kind) == (3, "store-back")
    assert f.bound * Q > 2**15 - 1
    ok, rep = check_schedule(inverse_schedule("ct331", "stack4"), input_bound=nominal_input_bound("stack4"))
    f = rep.first_violation
    assert not ok and (f.layer, f.kind, f.bound) == (6, "store-back", 10)


def test_check_schedule_variant_override():
    ok, _ = check_schedule(inverse_schedule("gs34", "stack2"), "stack4")
    assert not ok


@pytest.mark.parametrize("strategy,variant,want", [
    ("gs34", "stack2", ()),
    ("gs34", "speed", ()),
    ("ct313", "speed", ()),
    ("gs34", "stack3", ((3, 32),)),
    ("gs34", "stack4", ((3, 32),)),
    ("ct313", "stack3", ((2, 32),)),
    ("ct313", "stack4", ((2, 32),)),
])
def test_derive_reduction_points(strategy, variant, want):
    d = derive_reduction_points(inverse_schedule(strategy, variant))
    assert tuple((layer, len(ix)) for layer, ix in d.reduction_points) == want
    assert check_schedule(d)[0]


def test_derived_lanes_are_zero_and_one_mod_16():
    d = derive_reduction_points(inverse_schedule("ct313", "stack4"))
    (_, lanes), = d.reduction_points
    assert lanes == tuple(i for i in range(256) if i % 16 in (0, 1))
    assert d.reduction_points == inverse_schedule("ct313", "stack4").reduction_points


def test_derive_fixes_ct331():
    d = derive_reduction_points(inverse_schedule("ct331", "stack4"))
    assert check_schedule(d)[0]
    assert d.reduced_count > 32


@pytest.mark.parametrize("strategy", ["gs34", "ct313", "ct331"])
@pytest.mark.parametrize("variant", ["stack2", "stack3", "stack4", "speed"])
def test_soundness_random_and_adversarial(strategy, variant):
    sched = inverse_schedule(strategy, variant)
    rep = propagate(sched)
    hi_after = [np.array([iv.hi for iv in layer]) * Q for layer in rep.after]
    hi_peak = [np.array([iv.hi for iv in layer]) * Q for layer in rep.peak]
    rng = np.random.default_rng(0)
    lim = input_limit(variant)
    inputs = [rng.integers(-lim, lim + 1, (2000, 256)), random_ntt_inputs(rng, 500, variant)[1]]
    inputs += [adversarial_input(sched, s).coeffs[None] for s in range(1, 7)]
    for x in inputs:
        st = Stats()
        try:
            intt_batch(x, sched, stats=st)
        except Exception:
            assert not rep.passed
            continue
        for s in range(8):
            assert np.all(st.after[s] <= hi_after[s])
            assert np.all(st.peak[s] <= hi_peak[s])


@pytest.mark.parametrize("variant,layer,stage", [
    ("stack2", 3, "after"), ("stack4", 3, "after"), ("speed", 6, "after"),
    ("speed", 7, "peak"), ("stack2", 7, "peak"),
])
def test_adversarial_attains_additive_bounds(variant, layer, stage):
    sched = inverse_schedule("gs34", variant).with_reductions(())
    rep = propagate(sched)
    x = adversarial_input(sched, layer, stage=stage)
    st = Stats()
    intt_batch(x.coeffs, sched.with_reductions(()).__class__(
        sched.name, sched.layout, (7,), sched.butterfly_per_layer, (), variant), stats=st, upto=layer)
    got = (st.after if stage == "after" else st.peak)[layer].max()
    want = (rep.max_after(layer) if stage == "after" else rep.max_peak(layer)) * Q
    assert got == want


def test_adversarial_zero_target():
    sched = inverse_schedule("gs34", "stack2")
    # lane 128 leaves layer 7 as a multiplication output: no additive path
    assert not adversarial_input(sched, 7, 128).coeffs.any()


def test_ct_adversarial_within_multiplication_slack():
    sched = inverse_schedule("ct313", "stack4")
    rep = propagate(sched)
    st = Stats()
    intt_batch(adversarial_input(sched, 4).coeffs, sched, stats=st)
    # one reduced lane and one CT multiplication on the path, each up to q/2
    assert rep.max_after(4) * Q - 2 * Q / 2 <= st.after[4].max() <= rep.max_after(4) * Q


def test_report_json_and_text():
    rep = propagate(inverse_schedule("gs34", "stack2"), nominal_input_bound("stack2"))
    d = json.loads(rep.to_json())
    assert d["passed"] and d["layers"][7]["max_peak_q"] == "128"
    assert sum(c["count"] for c in d["layers"][3]["classes"]) == 256
    text = rep.to_text()
    assert "128q" in text and "PASS" in text
