"""Worst-case coefficient bounds through NTT/INTT schedules.

Bounds are exact rationals in units of q.  Internally each of the 256 lanes
carries an integer interval in units of ``q / D`` (``D`` even, chosen so the
input bound is integral); that keeps propagation vectorised and exact.

Transfer rules, per butterfly:

* add / sub: interval sum / difference,
* any Plantard multiplication or coefficient reduction: ``[-1/2, 1/2]``,
* CT: ``a +- t`` with ``t`` in ``[-1/2, 1/2]``.

The analyzer walks the same :class:`~plantkyber.ntt.TwiddleTable` layer
structure the engine executes, so the two cannot drift apart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

import numpy as np

from .modarith import KYBER
from .ntt import LAYERS, N, Domain, Poly, gen_twiddles, input_limit

STORE_BACK = "store-back"
PLANTARD_INPUT = "plantard-input"
REDUCE_INPUT = "reduce-input"
REGISTER = "register"


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def symmetric(cls, r):
        r = Fraction(r)
        return cls(-r, r)

    @property
    def mag(self):
        return max(-self.lo, self.hi)

    def __add__(self, other):
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other):
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __str__(self):
        return f"[{fmt_q(self.lo)}, {fmt_q(self.hi)}]"


def fmt_q(x):
    x = Fraction(x)
    if x.denominator in (1, 2, 4, 8):
        return f"{float(x):g}q"
    return f"{float(x):.4f}q"


def _frac_str(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass
class Flag:
    layer: int
    kind: str
    indices: tuple
    bound: Fraction             # worst |value| in units of q

    def to_dict(self):
        return {"layer": self.layer, "kind": self.kind,
                "indices": list(self.indices), "bound_q": _frac_str(self.bound)}


@dataclass
class BoundReport:
    name: str
    variant: str
    input_bound: Interval
    store_points: tuple
    reductions: dict            # layer -> tuple of reduced indices
    after: list                 # per layer 0..7, list of 256 Interval
    peak: list                  # per layer 0..7, list of 256 Interval
    flags: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.flags

    @property
    def first_violation(self):
        return self.flags[0] if self.flags else None

    @property
    def reduced_count(self):
        return sum(len(v) for v in self.reductions.values())

    def max_after(self, layer):
        return max(iv.mag for iv in self.after[layer])

    def max_peak(self, layer):
        return max(iv.mag for iv in self.peak[layer])

    def classes(self, layer):
        """Lanes grouped by identical bound after ``layer``, widest first."""
        groups = {}
        for i, iv in enumerate(self.after[layer]):
            groups.setdefault(iv.mag, []).append(i)
        return sorted(groups.items(), key=lambda kv: -kv[0])

    def to_dict(self):
        layers = []
        for s in range(LAYERS + 1):
            layers.append({
                "layer": s,
                "store_back": s in self.store_points,
                "reduced": list(self.reductions.get(s, ())),
                "max_after_q": _frac_str(self.max_after(s)),
                "max_peak_q": _frac_str(self.max_peak(s)),
                "classes": [{"bound_q": _frac_str(b), "count": len(ix), "indices": ix}
                            for b, ix in self.classes(s)],
            })
        return {
            "schedule": self.name,
            "variant": self.variant,
            "input_bound_q": [_frac_str(self.input_bound.lo), _frac_str(self.input_bound.hi)],
            "passed": self.passed,
            "reduced_count": self.reduced_count,
            "layers": layers,
            "flags": [f.to_dict() for f in self.flags],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def to_text(self):
        head = f"{self.name} ({self.variant}), input {self.input_bound}"
        rows = [("layer", "store", "reduced", "max after", "max peak", "classes", "status")]
        for s in range(LAYERS + 1):
            bad = [f for f in self.flags if f.layer == s]
            cls = " ".join(f"{fmt_q(b)}x{len(ix)}" for b, ix in self.classes(s)[:4])
            status = "FAIL " + ",".join(sorted({f.kind for f in bad})) if bad else "ok"
            rows.append((str(s), "*" if s in self.store_points else "",
                         str(len(self.reductions.get(s, ()))),
                         fmt_q(self.max_after(s)), fmt_q(self.max_peak(s)), cls, status))
        widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
        lines = [head]
        for r in rows:
            lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
        lines.append(f"reductions: {self.reduced_count}  result: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


# -- propagation --------------------------------------------------------------

class _Prop:
    """Integer-interval propagation in units of q / D."""

    def __init__(self, sched, input_bound, p):
        self.sched = sched
        self.p = p
        self.tw = gen_twiddles(p, sched.layout)
        ib = input_bound
        self.D = lcm(2, ib.lo.denominator, ib.hi.denominator)
        self.lo0 = int(ib.lo * self.D)
        self.hi0 = int(ib.hi * self.D)
        self.half = self.D // 2          # Plantard output bound, q/2

    def _exceeds(self, lo, hi, rng):
        # real value range is [lo, hi] * q / D
        q, D = self.p.q, self.D
        return (lo * q < rng[0] * D) | (hi * q > rng[1] * D)

    def run(self, reductions):
        p, D, h = self.p, self.D, self.half
        lo = np.full(N, self.lo0, dtype=np.int64)
        hi = np.full(N, self.hi0, dtype=np.int64)
        after = [(lo.copy(), hi.copy())]
        peak = [np.maximum(-lo, hi)]
        flags = []
        store = set(self.sched.store_points)
        half_word = 1 << (p.l - 1)
        word = 1 << (p.word - 1)

        def flag(layer, kind, mask, idx, mag):
            if mask.any():
                worst = Fraction(int(mag[mask].max()), D)
                flags.append(Flag(layer, kind, tuple(sorted(int(i) for i in idx[mask])), worst))

        for s, groups in enumerate(self.tw.layers, 1):
            pk = np.zeros(N, dtype=np.int64)
            nlo, nhi = lo.copy(), hi.copy()

            def mult_in(l_, h_, idx):
                mag = np.maximum(-l_, h_)
                np.maximum.at(pk, idx, mag)
                flag(s, PLANTARD_INPUT, self._exceeds(l_, h_, p.safe_const_input_range), idx, mag)

            for g in groups:
                alo, ahi, blo, bhi = lo[g.ia], hi[g.ia], lo[g.ib], hi[g.ib]
                if g.kind == "ct":
                    mult_in(blo, bhi, g.ib)
                    nlo[g.ia], nhi[g.ia] = alo - h, ahi + h
                    nlo[g.ib], nhi[g.ib] = alo - h, ahi + h
                elif g.kind == "light":
                    nlo[g.ia], nhi[g.ia] = alo + blo, ahi + bhi
                    nlo[g.ib], nhi[g.ib] = alo - bhi, ahi - blo
                elif g.kind == "gs":
                    mult_in(alo - bhi, ahi - blo, g.ib)
                    nlo[g.ia], nhi[g.ia] = alo + blo, ahi + bhi
                    nlo[g.ib], nhi[g.ib] = -h, h
                elif g.kind == "gs_scaled":
                    mult_in(alo + blo, ahi + bhi, g.ia)
                    mult_in(alo - bhi, ahi - blo, g.ib)
                    nlo[g.ia], nhi[g.ia] = -h, h
                    nlo[g.ib], nhi[g.ib] = -h, h
                elif g.kind == "ct_twist":
                    mult_in(alo, ahi, g.ia)
                    mult_in(blo, bhi, g.ib)
                    nlo[g.ia], nhi[g.ia] = -2 * h, 2 * h
                    nlo[g.ib], nhi[g.ib] = -h, h
                else:
                    raise ValueError(f"unknown butterfly kind {g.kind!r}")
            lo, hi = nlo, nhi
            idx = np.asarray(reductions.get(s, ()), dtype=np.int64)
            if idx.size:
                flag(s, REDUCE_INPUT, self._exceeds(lo[idx], hi[idx], p.safe_reduce_input_range),
                     idx, np.maximum(-lo[idx], hi[idx]))
                lo[idx], hi[idx] = -h, h
            allidx = np.arange(N)
            mag = np.maximum(-lo, hi)
            flag(s, REGISTER, self._exceeds(lo, hi, (-word, word - 1)), allidx, mag)
            if s in store:
                flag(s, STORE_BACK, self._exceeds(lo, hi, (-half_word, half_word - 1)), allidx, mag)
            after.append((lo.copy(), hi.copy()))
            peak.append(np.maximum(pk, mag))
        return after, peak, flags

    def report(self, reductions, variant):
        after, peak, flags = self.run(reductions)
        D = self.D

        def ivs(l_, h_):
            return [Interval(Fraction(int(a), D), Fraction(int(b), D)) for a, b in zip(l_, h_)]

        return BoundReport(
            name=self.sched.name,
            variant=variant,
            input_bound=Interval(Fraction(self.lo0, D), Fraction(self.hi0, D)),
            store_points=tuple(self.sched.store_points),
            reductions={k: tuple(v) for k, v in reductions.items()},
            after=[ivs(l_, h_) for l_, h_ in after],
            peak=[ivs(-m, m) for m in peak],
            flags=flags,
        )


def _reduction_map(sched):
    out = {}
    for layer, idx in sched.reduction_points:
        out.setdefault(layer, set()).update(int(i) for i in idx)
    return {k: tuple(sorted(v)) for k, v in out.items()}


def default_input_bound(variant, p=KYBER):
    """Tightest integer input bound of a variant, in units of q."""
    return Interval.symmetric(Fraction(input_limit(variant, p.q), p.q))


def nominal_input_bound(variant):
    """The idealised bound x = kq/2 (q/2 for the speed variant)."""
    k = 1 if variant == "speed" else int(variant[-1])
    return Interval.symmetric(Fraction(k, 2))


def propagate(sched, input_bound=None, p=KYBER):
    if input_bound is None:
        input_bound = default_input_bound(sched.variant, p)
    return _Prop(sched, input_bound, p).report(_reduction_map(sched), sched.variant)


def check_schedule(sched, variant=None, p=KYBER, input_bound=None):
    """Return ``(passed, report)``; the report's first flag locates a failure."""
    if variant is not None and variant != sched.variant:
        sched = type(sched)(sched.name, sched.layout, sched.merges,
                            sched.butterfly_per_layer, sched.reduction_points, variant)
    report = propagate(sched, input_bound, p)
    return report.passed, report


# -- reduction search ---------------------------------------------------------

def _parents(groups):
    """Additive-path parents of every lane within one layer."""
    par = [[] for _ in range(N)]
    for g in groups:
        for a, b in zip(g.ia.tolist(), g.ib.tolist()):
            if g.kind == "light":
                par[a] = [a, b]
                par[b] = [a, b]
            elif g.kind == "ct":
                par[a] = [a]
                par[b] = [a]
            elif g.kind == "gs":
                par[a] = [a, b]
    return par


def _ancestors(tw, nodes, from_layer, to_layer):
    """Lanes at ``to_layer`` feeding ``nodes`` (values after ``from_layer``)."""
    cur = set(nodes)
    for s in range(from_layer, to_layer, -1):
        par = _parents(tw.layers[s - 1])
        cur = {a for n in cur for a in par[n]}
    return cur


def _violations(flags, layer):
    """(value-layer, lanes) to fix for the flags of ``layer``."""
    store = set()
    mult = set()
    for f in flags:
        if f.layer != layer:
            continue
        if f.kind in (STORE_BACK, REGISTER):
            store.update(f.indices)
        else:
            mult.update(f.indices)
    return store, mult


def derive_reduction_points(sched, variant=None, p=KYBER, input_bound=None, max_rounds=16):
    """Greedy placement of coefficient reductions until ``check_schedule`` passes.

    At the first failing layer every earlier layer of the same merged pass is
    tried; for each, lanes on the additive paths into the violating values
    are reduced widest-first (lowest index on ties) until the violation
    clears.  The cheapest layer wins, the later one on ties.
    """
    variant = variant or sched.variant
    base = type(sched)(sched.name, sched.layout, sched.merges,
                       sched.butterfly_per_layer, (), variant)
    input_bound = input_bound or default_input_bound(variant, p)
    prop = _Prop(base, input_bound, p)
    tw = prop.tw
    red = {}
    ends = list(np.cumsum(sched.merges))
    for _ in range(max_rounds):
        after, _, flags = prop.run(red)
        if not flags:
            points = tuple((k, tuple(sorted(v))) for k, v in sorted(red.items()))
            return base.with_reductions(points)
        layer = flags[0].layer
        store, mult = _violations(flags, layer)
        start = max(e for e in [0] + ends if e < layer) + 1
        best = None
        for m in range(start, layer + 1):
            # multiplier inputs at `layer` are values after layer - 1
            targets = [(layer, n) for n in sorted(store)]
            targets += [(layer - 1, n) for n in sorted(mult)]
            if any(t[0] < m for t in targets):
                continue
            chosen = _greedy(prop, red, targets, m, tw, after, layer)
            if chosen is not None and (best is None or len(chosen) <= len(best[1])):
                best = (m, chosen)
        if best is None:
            raise ValueError(f"no reduction placement fixes layer {layer}")
        m, chosen = best
        red = {**red, m: tuple(sorted(set(red.get(m, ())) | chosen))}
    raise ValueError("reduction search did not converge")


def _greedy(prop, red, targets, m, tw, after, layer):
    lo, hi = after[m]
    mag = np.maximum(-lo, hi)
    chosen = set()

    def still_bad():
        trial = {**red, m: tuple(sorted(set(red.get(m, ())) | chosen))}
        _, _, flags = prop.run(trial)
        return [f for f in flags if f.layer <= layer]

    bad = still_bad()
    for t_layer, node in targets:
        while bad and _node_bad(bad, t_layer, node, layer):
            cands = sorted(_ancestors(tw, [node], t_layer, m) - chosen,
                           key=lambda i: (-int(mag[i]), i))
            if not cands:
                return None
            chosen.add(cands[0])
            bad = still_bad()
    return None if bad else chosen


def _node_bad(flags, t_layer, node, layer):
    for f in flags:
        if f.layer < layer:
            return True
        if node in f.indices:
            is_store = f.kind in (STORE_BACK, REGISTER)
            if (is_store and t_layer == layer) or (not is_store and t_layer == layer - 1):
                return True
    return False


# -- adversarial inputs -------------------------------------------------------

def _forms(sched, p, upto):
    """Signed input coefficients of every lane along additive paths.

    Returns (after, pre) where ``after`` is the 256x256 form matrix after
    layer ``upto`` and ``pre`` the forms of that layer's multiplier inputs.
    """
    tw = gen_twiddles(p, sched.layout)
    red = _reduction_map(sched)
    F = np.eye(N, dtype=np.int64)
    pre = F.copy()
    for s, groups in enumerate(tw.layers[:upto], 1):
        G = F.copy()
        pre = F.copy()
        for g in groups:
            fa, fb = F[g.ia], F[g.ib]
            if g.kind == "ct":
                pre[g.ib] = fb
                G[g.ia], G[g.ib] = fa, fa
            elif g.kind == "light":
                G[g.ia], G[g.ib] = fa + fb, fa - fb
            elif g.kind == "gs":
                pre[g.ib] = fa - fb
                G[g.ia], G[g.ib] = fa + fb, 0
            elif g.kind == "gs_scaled":
                pre[g.ia], pre[g.ib] = fa + fb, fa - fb
                G[g.ia], G[g.ib] = 0, 0
            elif g.kind == "ct_twist":
                pre[g.ia], pre[g.ib] = fa, fb
                G[g.ia], G[g.ib] = 0, 0
        idx = list(red.get(s, ()))
        if idx:
            G[idx] = 0
        F = G
    return F, pre


def adversarial_input(sched, target_layer, target_index=None, p=KYBER,
                      magnitude=None, stage="after"):
    """NTT-domain input maximising one lane's value along additive paths.

    ``stage="peak"`` targets the operand fed into that lane's multiplication
    in ``target_layer`` instead of the layer output.  With no index given
    the lane with the largest additive weight is used.
    """
    if magnitude is None:
        magnitude = input_limit(sched.variant, p.q)
    after, pre = _forms(sched, p, target_layer)
    F = pre if stage == "peak" else after
    if target_index is None:
        target_index = int(np.argmax(np.abs(F).sum(axis=1)))
    row = F[target_index]
    return Poly(np.sign(row) * magnitude, Domain.NTT)


__all__ = [
    "Interval", "BoundReport", "Flag", "propagate", "check_schedule",
    "derive_reduction_points", "adversarial_input", "default_input_bound",
    "nominal_input_bound", "fmt_q",
]
