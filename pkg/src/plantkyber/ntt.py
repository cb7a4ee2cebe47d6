"""7-layer incomplete NTT and INTT over Z_3329[X]/(X^256 + 1).

Twiddles are stored pre-twisted for :func:`plantard_mul_const`, so every
butterfly multiplication returns a value in ``[-(q-1)/2, (q-1)/2]`` no matter
how large (within the Plantard input range) the operand is.  Forward NTT
output follows the Kyber reference order: entries ``2i, 2i+1`` hold the
residue modulo ``X^2 - zeta^(2 br7(i) + 1)``.

Three butterfly structures (table layouts) are provided:

``NttCt``
    forward transform, CT butterflies, no coefficient reductions.
``InttGs34``
    inverse with GS butterflies; the last layer multiplies both outputs by
    constants that fold in ``128^-1``.
``InttCt313``
    inverse with CT butterflies: a decimation-in-time transform on the
    bit-reversed residues.  Unit-twiddle butterflies in the first three layers
    are light (add/sub only).  The last layer merges the output twist
    ``zeta^-n / 128``: both inputs are multiplied by per-position constants
    and the upper output by one global constant.

Layers work on whole batches of polynomials (int64 arrays of shape
``(batch, 256)``) at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .isa import DEFAULT_ISA
from .modarith import (KYBER, RangeError, check_inclusive, plantard_mul_const,
                       reduce_coeff, twiddle_const)

N = 256
LAYERS = 7

NTT_CT = "NttCt"
INTT_GS34 = "InttGs34"
INTT_CT313 = "InttCt313"
LAYOUTS = (NTT_CT, INTT_GS34, INTT_CT313)

VARIANTS = ("stack2", "stack3", "stack4", "speed")


class Domain(Enum):
    NORMAL = "normal"
    NTT = "ntt"


@dataclass
class Poly:
    coeffs: np.ndarray
    domain: Domain = Domain.NORMAL

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.int64)
        if self.coeffs.shape != (N,):
            raise ValueError(f"expected {N} coefficients, got {self.coeffs.shape}")


def bitrev7(i):
    return int(f"{i:07b}"[::-1], 2)


def root_of_unity(q):
    """Smallest primitive 256-th root of unity mod q."""
    return next(g for g in range(2, q) if pow(g, 128, q) == q - 1)


# -- butterflies -------------------------------------------------------------

def ct_butterfly(a, b, zeta, p=KYBER, isa=DEFAULT_ISA, check=True):
    """``(a + b*zeta, a - b*zeta)`` with ``zeta`` in pre-twisted form."""
    if check:
        check_inclusive(b, p.safe_const_input_range, "ct_butterfly operand")
    if isa.barrel_shifter:
        # final >> l of the Plantard tail is folded into the add/sub
        r = isa.mul_lo(b, zeta, p.word)
        r = isa.add_asr(1 << p.alpha, r, p.l)
        t = isa.mul_lo(r, p.q, p.word)
        return isa.add_asr(a, t, p.l), isa.sub_asr(a, t, p.l)
    t = plantard_mul_const(b, zeta, p, isa, check=False)
    return isa.add(a, t), isa.sub(a, t)


def gs_butterfly(a, b, zeta, p=KYBER, isa=DEFAULT_ISA, check=True):
    """``(a + b, (a - b)*zeta)`` with ``zeta`` in pre-twisted form."""
    s = isa.add(a, b)
    d = isa.sub(a, b)
    return s, plantard_mul_const(d, zeta, p, isa, check=check)


def light_butterfly(a, b, isa=DEFAULT_ISA):
    return isa.add(a, b), isa.sub(a, b)


# -- twiddle tables ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Group:
    """Butterflies of one kind inside a layer, as parallel index arrays."""
    kind: str                 # ct | light | gs | gs_scaled | ct_twist
    ia: np.ndarray
    ib: np.ndarray
    consts: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class TwiddleTable:
    layout: str
    zeta: int
    words: tuple              # distinct stored constants, in table order
    layers: tuple             # per layer, a tuple of Group

    @property
    def entries(self):
        return len(self.words)

    @property
    def accesses(self):
        # every stored word is read exactly once per transform
        return len(self.words)


def _pairs(stride):
    idx = np.arange(N)
    ia = idx[(idx // stride) % 2 == 0]
    return ia, ia + stride


class _Words:
    def __init__(self, p):
        self.p = p
        self.keys = {}
        self.words = []

    def add(self, key, value):
        if key not in self.keys:
            self.keys[key] = len(self.words)
            self.words.append(twiddle_const(value % self.p.q, self.p))
        return self.words[self.keys[key]]


@lru_cache(maxsize=None)
def gen_twiddles(p=KYBER, layout=NTT_CT):
    if (p.q, p.l) != (3329, 16):
        raise ValueError("twiddle tables are defined for q = 3329, l = 16")
    if layout not in LAYOUTS:
        raise ValueError(f"unknown layout {layout!r}")
    q = p.q
    zeta = root_of_unity(q)
    zinv = pow(zeta, -1, q)
    ninv = pow(128, -1, q)
    words = _Words(p)
    layers = []
    for s in range(1, LAYERS + 1):
        if layout == NTT_CT:
            stride = 128 >> (s - 1)
            ia, ib = _pairs(stride)
            k = (1 << (s - 1)) + ia // (2 * stride)
            w = [words.add((s, int(kk)), pow(zeta, bitrev7(int(kk)), q)) for kk in k]
            layers.append((Group("ct", ia, ib, {"w": np.array(w, dtype=np.int64)}),))
        elif layout == INTT_GS34:
            stride = 1 << s
            ia, ib = _pairs(stride)
            k = (1 << (7 - s)) + ia // (2 * stride)
            if s < LAYERS:
                w = [words.add((s, int(kk)), pow(zinv, bitrev7(int(kk)), q)) for kk in k]
                layers.append((Group("gs", ia, ib, {"w": np.array(w, dtype=np.int64)}),))
            else:
                fa = words.add("final_a", ninv)
                fb = words.add("final_b", ninv * pow(zinv, 64, q))
                layers.append((Group("gs_scaled", ia, ib, {
                    "fa": np.full(len(ia), fa), "fb": np.full(len(ia), fb)}),))
        else:
            stride = 1 << s
            half = stride // 2              # lanes per half-block
            ia, ib = _pairs(stride)
            lane = (ia % stride) // 2       # position inside the DIT block
            if s < LAYERS:
                light = (lane == 0) & (s <= 3)
                groups = []
                if light.any():
                    groups.append(Group("light", ia[light], ib[light]))
                ct = ~light
                w = [words.add((s, int(j)), pow(zinv, 128 * int(j) // half, q))
                     for j in lane[ct]]
                if ct.any():
                    groups.append(Group("ct", ia[ct], ib[ct],
                                        {"w": np.array(w, dtype=np.int64)}))
                layers.append(tuple(groups))
            else:
                cu = [words.add(("cu", int(j)), pow(zinv, int(j), q) * ninv) for j in lane]
                cv = [words.add(("cv", int(j)), pow(zinv, 3 * int(j), q) * ninv) for j in lane]
                g = words.add("g", pow(zinv, 64, q))
                layers.append((Group("ct_twist", ia, ib, {
                    "cu": np.array(cu), "cv": np.array(cv),
                    "g": np.full(len(ia), g)}),))
    return TwiddleTable(layout, zeta, tuple(words.words), tuple(layers))


# -- schedules ---------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """Layer merging, butterfly kinds and reduction points for one transform.

    ``reduction_points`` holds ``(after_layer, indices)`` pairs: the listed
    coefficients are reduced to (-q/2, q/2) once that layer is done.  A
    ``Light`` tag means unit-twiddle butterflies of that layer skip the
    multiplication; the rest of the layer is CT.
    """
    name: str
    layout: str
    merges: tuple
    butterfly_per_layer: tuple
    reduction_points: tuple = ()
    variant: str = "speed"

    def __post_init__(self):
        if sum(self.merges) != LAYERS:
            raise ValueError(f"merges {self.merges} do not cover {LAYERS} layers")
        if len(self.butterfly_per_layer) != LAYERS:
            raise ValueError("need one butterfly tag per layer")
        if "Light" in self.butterfly_per_layer[3:]:
            raise ValueError("light butterflies are only allowed in layers 1-3")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def store_points(self):
        """Layers after which coefficients are written back to l-bit memory."""
        return tuple(np.cumsum(self.merges)[:-1].tolist())

    @property
    def reduced_count(self):
        return sum(len(ix) for _, ix in self.reduction_points)

    def with_reductions(self, points):
        return Schedule(self.name, self.layout, self.merges,
                        self.butterfly_per_layer, tuple(points), self.variant)


def variant_k(variant):
    return None if variant == "speed" else int(variant[-1])


def input_limit(variant, q=KYBER.q):
    """Largest admissible |coefficient| of an INTT input for a variant."""
    k = variant_k(variant)
    return (q - 1) // 2 if k is None else (k * q - 1) // 2


def lanes_mod(residues, modulus):
    return tuple(i for i in range(N) if i % modulus in residues)


STRATEGIES = {
    "gs34": (INTT_GS34, (3, 4), ("GS",) * 7),
    "ct313": (INTT_CT313, (3, 1, 3), ("Light",) * 3 + ("CT",) * 4),
    "ct331": (INTT_CT313, (3, 3, 1), ("Light",) * 3 + ("CT",) * 4),
}
FORWARD = {
    "ct331": (3, 3, 1),
    "ct43": (4, 3),
}


def forward_schedule(strategy="ct331"):
    return Schedule(f"ntt-{strategy}", NTT_CT, FORWARD[strategy], ("CT",) * 7)


def inverse_schedule(strategy="gs34", variant="speed"):
    """The published lazy-reduction placement for a strategy and variant."""
    layout, merges, tags = STRATEGIES[strategy]
    points = ()
    if variant in ("stack3", "stack4"):
        after = 3 if strategy == "gs34" else 2
        points = ((after, lanes_mod({0, 1}, 16)),)
    return Schedule(f"intt-{strategy}", layout, merges, tags, points, variant)


# -- engine ------------------------------------------------------------------

@dataclass
class Stats:
    """Per-layer, per-coefficient maxima of |value| over a batch.

    ``after[s]`` is taken once layer ``s`` (and its reductions) is done,
    ``after[0]`` is the input.  ``peak[s]`` also covers operands fed into the
    layer's Plantard multiplications.
    """
    after: list = field(default_factory=list)
    peak: list = field(default_factory=list)
    reductions: int = 0

    def merge(self, other):
        if not self.after:
            self.after = [a.copy() for a in other.after]
            self.peak = [a.copy() for a in other.peak]
        else:
            for mine, theirs in zip(self.after + self.peak, other.after + other.peak):
                np.maximum(mine, theirs, out=mine)
        self.reductions = other.reductions


def _amax(v):
    return np.abs(v).max(axis=0)


def _apply_group(g, x, p, isa, peak):
    a = x[:, g.ia]
    b = x[:, g.ib]
    c = g.consts
    if g.kind == "ct":
        np.maximum.at(peak, g.ib, _amax(b))
        x[:, g.ia], x[:, g.ib] = ct_butterfly(a, b, c["w"], p, isa)
    elif g.kind == "light":
        x[:, g.ia], x[:, g.ib] = light_butterfly(a, b, isa)
    elif g.kind == "gs":
        np.maximum.at(peak, g.ib, _amax(a - b))
        x[:, g.ia], x[:, g.ib] = gs_butterfly(a, b, c["w"], p, isa)
    elif g.kind == "gs_scaled":
        s = isa.add(a, b)
        d = isa.sub(a, b)
        np.maximum.at(peak, g.ia, _amax(s))
        np.maximum.at(peak, g.ib, _amax(d))
        x[:, g.ia] = plantard_mul_const(s, c["fa"], p, isa)
        x[:, g.ib] = plantard_mul_const(d, c["fb"], p, isa)
    elif g.kind == "ct_twist":
        np.maximum.at(peak, g.ia, _amax(a))
        np.maximum.at(peak, g.ib, _amax(b))
        u = plantard_mul_const(a, c["cu"], p, isa)
        v = plantard_mul_const(b, c["cv"], p, isa)
        d = isa.sub(u, v)
        x[:, g.ia] = isa.add(u, v)
        x[:, g.ib] = plantard_mul_const(d, c["g"], p, isa)
    else:
        raise ValueError(f"unknown butterfly kind {g.kind!r}")


def run_layers(x, sched, tw, p=KYBER, isa=DEFAULT_ISA, stats=None, upto=LAYERS):
    """Apply layers ``1..upto`` of ``tw`` to the batch ``x`` under ``sched``."""
    if sched.layout != tw.layout:
        raise ValueError(f"schedule layout {sched.layout} does not match table {tw.layout}")
    x = np.array(x, dtype=np.int64, copy=True)
    if x.ndim == 1:
        x = x[None, :]
    store = set(sched.store_points)
    word_max = 1 << (p.word - 1)
    half_max = 1 << (p.l - 1)
    local = Stats() if stats is not None else None
    if local is not None:
        local.after.append(_amax(x))
        local.peak.append(_amax(x))
    reduced = 0
    for s, groups in enumerate(tw.layers[:upto], 1):
        peak = np.zeros(N, dtype=np.int64)
        for g in groups:
            _apply_group(g, x, p, isa, peak)
        for layer, idx in sched.reduction_points:
            if layer == s:
                idx = np.asarray(idx)
                x[:, idx] = reduce_coeff(x[:, idx], p, isa)
                reduced += len(idx)
        check_inclusive(x, (-word_max, word_max - 1), f"register width after layer {s}")
        if s in store:
            check_inclusive(x, (-half_max, half_max - 1), f"store-back after layer {s}")
        if local is not None:
            after = _amax(x)
            local.after.append(after)
            local.peak.append(np.maximum(peak, after))
    if local is not None:
        local.reductions = reduced
        stats.merge(local)
    return x


def ntt_forward_batch(x, sched=None, tw=None, p=KYBER, isa=DEFAULT_ISA, stats=None):
    sched = sched or forward_schedule()
    tw = tw or gen_twiddles(p, sched.layout)
    check_inclusive(np.asarray(x), (-(p.q - 1), p.q - 1), "ntt input")
    return run_layers(x, sched, tw, p, isa, stats)


def intt_batch(x, sched=None, tw=None, p=KYBER, isa=DEFAULT_ISA, stats=None, upto=LAYERS):
    sched = sched or inverse_schedule()
    tw = tw or gen_twiddles(p, sched.layout)
    lim = input_limit(sched.variant, p.q)
    check_inclusive(np.asarray(x), (-lim, lim), f"intt input ({sched.variant})")
    return run_layers(x, sched, tw, p, isa, stats, upto)


def ntt_forward(poly, sched=None, tw=None, p=KYBER, stats=None):
    if poly.domain is not Domain.NORMAL:
        raise ValueError("ntt_forward expects a normal-domain polynomial")
    out = ntt_forward_batch(poly.coeffs, sched, tw, p, stats=stats)
    return Poly(out[0], Domain.NTT)


def intt(poly, sched=None, tw=None, p=KYBER, stats=None):
    if poly.domain is not Domain.NTT:
        raise ValueError("intt expects an NTT-domain polynomial")
    out = intt_batch(poly.coeffs, sched, tw, p, stats=stats)
    return Poly(out[0], Domain.NORMAL)


__all__ = [
    "Domain", "Poly", "Schedule", "Stats", "TwiddleTable", "RangeError",
    "ct_butterfly", "gs_butterfly", "light_butterfly", "gen_twiddles",
    "forward_schedule", "inverse_schedule", "ntt_forward", "intt",
    "ntt_forward_batch", "intt_batch", "run_layers", "input_limit",
    "variant_k", "lanes_mod", "bitrev7", "root_of_unity",
]
