"""Register-level primitives shared by every arithmetic kernel.

Kernels in :mod:`plantkyber.modarith`, :mod:`plantkyber.ntt` and
:mod:`plantkyber.polyalg` are written against an :class:`Isa` object rather
than raw Python operators.  The default instances just compute; a
:class:`CountingIsa` computes the same values and also tallies how many
primitives were issued, which is what the cost model reports.

All primitives accept Python ints or int64 numpy arrays.
"""

from __future__ import annotations

from collections import Counter

PRIMITIVES = ("mul_lo", "mul_hi", "mul_acc", "shift", "add_sub",
              "fused_shift_add", "load", "store")

BARREL_SHIFTER = "BarrelShifter"
PLAIN_RISC = "PlainRisc"
PROFILES = (BARREL_SHIFTER, PLAIN_RISC)


def wrap(x, bits):
    """Two's-complement truncation of ``x`` to ``bits`` bits (x mod± 2^bits)."""
    half = 1 << (bits - 1)
    return ((x + half) & ((1 << bits) - 1)) - half


class Isa:
    """A register machine; kernels pass the register width (2l) per call.

    ``barrel_shifter`` tells kernels whether an operand may be
    arithmetic-shifted for free inside an add/sub, as on Cortex-M3.  Otherwise
    shifts are separate instructions and ``mul_hi`` (upper half of the
    double-width product) is used instead, as on RV32IM.
    """

    def __init__(self, profile=BARREL_SHIFTER):
        if profile not in PROFILES:
            raise ValueError(f"unknown profile {profile!r}")
        self.profile = profile

    @property
    def barrel_shifter(self):
        return self.profile == BARREL_SHIFTER

    def _tick(self, kind, n=1):
        pass

    def mul_lo(self, x, y, width):
        self._tick("mul_lo")
        return wrap(x * y, width)

    def mul_hi(self, x, y, width):
        self._tick("mul_hi")
        return (x * y) >> width

    def mul_acc(self, x, y, acc, width):
        self._tick("mul_acc")
        return wrap(acc + x * y, width)

    def asr(self, x, n):
        self._tick("shift")
        return x >> n

    def add(self, x, y):
        self._tick("add_sub")
        return x + y

    def sub(self, x, y):
        self._tick("add_sub")
        return x - y

    def add_asr(self, x, y, n):
        """x + (y >> n) in one instruction (barrel-shifter profile only)."""
        if not self.barrel_shifter:
            raise RuntimeError("fused shift-add needs a barrel shifter")
        self._tick("fused_shift_add")
        return x + (y >> n)

    def sub_asr(self, x, y, n):
        """x - (y >> n) in one instruction (barrel-shifter profile only)."""
        if not self.barrel_shifter:
            raise RuntimeError("fused shift-sub needs a barrel shifter")
        self._tick("fused_shift_add")
        return x - (y >> n)

    def load(self, x):
        self._tick("load")
        return x

    def store(self, x):
        self._tick("store")
        return x


class CountingIsa(Isa):
    """An :class:`Isa` that records every primitive it executes."""

    def __init__(self, profile=BARREL_SHIFTER):
        super().__init__(profile)
        self.counts = Counter()

    def _tick(self, kind, n=1):
        self.counts[kind] += n

    def reset(self):
        self.counts.clear()


DEFAULT_ISA = Isa(BARREL_SHIFTER)
