"""Instruction counts of the arithmetic kernels, measured by execution.

Each algorithm tag maps to a small driver that calls the real kernel from
:mod:`plantkyber.modarith`, :mod:`plantkyber.ntt` or
:mod:`plantkyber.polyalg` once on scalar operands through a
:class:`~plantkyber.isa.CountingIsa`.  Nothing here is a hand-entered count.

Cycle weights are illustrative per-profile tables used only for reporting.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .isa import BARREL_SHIFTER, PLAIN_RISC, PRIMITIVES, PROFILES, CountingIsa
from .modarith import (KYBER, barrett_reduce, mont_mul, plantard_mul,
                       plantard_mul_const, reduce_coeff, reduce_product,
                       twiddle_const)
from .ntt import ct_butterfly, gs_butterfly, light_butterfly
from .polyalg import PAIRS, basemul_pair, basemul_pair_cached

MULS = ("mul_lo", "mul_hi", "mul_acc")

# Cortex-M3-like and RV32IM-like latencies; reporting only
CYCLE_WEIGHTS = {
    BARREL_SHIFTER: {"mul_lo": 1, "mul_hi": 1, "mul_acc": 2, "shift": 1, "add_sub": 1,
                     "fused_shift_add": 1, "load": 2, "store": 1},
    PLAIN_RISC: {"mul_lo": 5, "mul_hi": 5, "mul_acc": 6, "shift": 1, "add_sub": 1,
                 "fused_shift_add": 1, "load": 2, "store": 1},
}


@dataclass(frozen=True)
class CostReport:
    algorithm: str
    profile: str
    counts: dict

    @property
    def total(self):
        return sum(self.counts.values())

    @property
    def mul_total(self):
        return sum(self.counts[k] for k in MULS)

    def cycles(self, weights=None):
        w = weights or CYCLE_WEIGHTS[self.profile]
        return sum(n * w[k] for k, n in self.counts.items())

    def scaled(self, n):
        return CostReport(self.algorithm, self.profile,
                          {k: v * n for k, v in self.counts.items()})

    def __sub__(self, other):
        return CostReport(f"{self.algorithm}-{other.algorithm}", self.profile,
                          {k: self.counts[k] - other.counts[k] for k in PRIMITIVES})

    def row(self):
        return [self.algorithm, self.profile, *(self.counts[k] for k in PRIMITIVES),
                self.mul_total, self.total, self.cycles()]


HEADER = ["algorithm", "profile", *PRIMITIVES, "muls", "total", "cycles"]


def _plantard_mla(a, bq, p, isa):
    # steps 4 and 5 merged: (r >> l) * q + 2^alpha * q in one multiply-accumulate
    r = isa.mul_lo(a, bq, p.word)
    r = isa.asr(r, p.l)
    r = isa.mul_acc(r, p.q, p.q << p.alpha, p.word)
    return isa.asr(r, p.l)


def _drivers(p):
    w = twiddle_const(17, p)
    fix = twiddle_const(p.plantard_factor_inv, p)
    return {
        "plantard_mul": lambda isa: plantard_mul(1234, -2345, p, isa),
        "plantard_mul_const": lambda isa: plantard_mul_const(1234, w, p, isa),
        "plantard_mul_const_mla": lambda isa: _plantard_mla(1234, w, p, isa),
        "plantard_reduce": lambda isa: reduce_product(1234 * 2345, p, isa),
        "plantard_reduce_coeff": lambda isa: reduce_coeff(12345, p, isa),
        "mont_mul": lambda isa: mont_mul(1234, 2345, p, isa),
        "barrett_reduce": lambda isa: barrett_reduce(12345, p, isa),
        "ct_butterfly": lambda isa: ct_butterfly(1000, 2000, w, p, isa),
        "gs_butterfly": lambda isa: gs_butterfly(1000, 2000, w, p, isa),
        "light_butterfly": lambda isa: light_butterfly(1000, 2000, isa),
        "basemul": lambda isa: basemul_pair(100, 200, 300, 400, w, fix, p, isa),
        "basemul_cached": lambda isa: basemul_pair_cached(100, 200, 300, 400, 500, fix, p, isa),
    }


ALGORITHMS = tuple(_drivers(KYBER))


def cost_of(algorithm, profile=BARREL_SHIFTER, p=KYBER):
    """Run ``algorithm`` once on a counting ISA; basemul tags are per pair."""
    drivers = _drivers(p)
    if algorithm not in drivers:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(drivers)}")
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    if algorithm == "plantard_mul_const_mla" and profile != BARREL_SHIFTER:
        raise ValueError("the multiply-accumulate variant is modelled for BarrelShifter only")
    isa = CountingIsa(profile)
    drivers[algorithm](isa)
    return CostReport(algorithm, profile, {k: isa.counts.get(k, 0) for k in PRIMITIVES})


def cost_per_poly(algorithm, profile=BARREL_SHIFTER, p=KYBER):
    """Base multiplication cost over a full polynomial (128 pairs)."""
    if not algorithm.startswith("basemul"):
        raise ValueError("per-polynomial costs are defined for basemul tags")
    return cost_of(algorithm, profile, p).scaled(PAIRS)


def all_reports(profiles=PROFILES, p=KYBER):
    out = []
    for prof in profiles:
        for alg in ALGORITHMS:
            if alg == "plantard_mul_const_mla" and prof != BARREL_SHIFTER:
                continue
            out.append(cost_of(alg, prof, p))
    return out


def to_csv(reports):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(HEADER)
    for r in reports:
        wr.writerow(r.row())
    return buf.getvalue()


def to_table(reports):
    rows = [HEADER] + [[str(v) for v in r.row()] for r in reports]
    widths = [max(len(r[c]) for r in rows) for c in range(len(HEADER))]
    return "\n".join("  ".join(v.rjust(w) if i > 1 else v.ljust(w)
                               for i, (v, w) in enumerate(zip(r, widths))).rstrip()
                     for r in rows)


__all__ = ["CostReport", "ALGORITHMS", "CYCLE_WEIGHTS", "cost_of", "cost_per_poly",
           "all_reports", "to_csv", "to_table"]
