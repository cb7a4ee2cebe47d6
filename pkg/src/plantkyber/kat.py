"""Known-answer test records in a diffable text format.

A file is a sequence of blocks separated by blank lines::

    count = 0
    seed = 0000002a0000
    op = ntt
    in0 = 0d01f3a2...
    out = ...

Every value is a signed 16-bit integer written as 4 hex digits of its
two's-complement form.  ``seed`` regenerates the record's inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .modarith import KYBER
from .ntt import Domain, Poly, intt_batch, inverse_schedule, ntt_forward_batch
from .polyalg import basemul, matvec_stack

OPS = ("ntt", "intt", "basemul", "matvec")
MATVEC_K = 2


class KatFormatError(ValueError):
    pass


@dataclass
class KatRecord:
    count: int
    seed: int
    op: str
    inputs: dict = field(default_factory=dict)   # name -> int64 array
    output: np.ndarray = None

    def __eq__(self, other):
        return (self.count == other.count and self.seed == other.seed and self.op == other.op
                and self.inputs.keys() == other.inputs.keys()
                and all(np.array_equal(v, other.inputs[k]) for k, v in self.inputs.items())
                and np.array_equal(self.output, other.output))


def to_hex(values):
    v = np.asarray(values, dtype=np.int64)
    if v.size and (v.min() < -(1 << 15) or v.max() >= 1 << 15):
        raise ValueError("KAT values must fit in signed 16 bits")
    return "".join(f"{int(x) & 0xFFFF:04x}" for x in v)


def from_hex(text):
    if len(text) % 4:
        raise KatFormatError(f"hex field length {len(text)} is not a multiple of 4")
    try:
        raw = np.array([int(text[i:i + 4], 16) for i in range(0, len(text), 4)], dtype=np.int64)
    except ValueError as e:
        raise KatFormatError(str(e)) from None
    return np.where(raw >= 1 << 15, raw - (1 << 16), raw)


def dumps(records):
    blocks = []
    for r in records:
        lines = [f"count = {r.count}", f"seed = {r.seed:012x}", f"op = {r.op}"]
        lines += [f"{k} = {to_hex(v)}" for k, v in r.inputs.items()]
        lines.append(f"out = {to_hex(r.output)}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def loads(text):
    records = []
    for block in text.strip().split("\n\n"):
        kv = {}
        for line in block.strip().splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            key, sep, value = line.partition(" = ")
            if not sep:
                raise KatFormatError(f"malformed line {line!r}")
            kv[key.strip()] = value.strip()
        try:
            rec = KatRecord(int(kv.pop("count")), int(kv.pop("seed"), 16), kv.pop("op"))
            rec.output = from_hex(kv.pop("out"))
        except KeyError as e:
            raise KatFormatError(f"missing field {e}") from None
        rec.inputs = {k: from_hex(v) for k, v in kv.items()}
        records.append(rec)
    return records


def _record_seed(seed, count):
    return (seed << 16) | count


def _inputs(op, rseed, q=KYBER.q):
    rng = np.random.default_rng(rseed)
    h = (q - 1) // 2
    if op in ("ntt", "intt"):
        return {"in0": rng.integers(-h, h + 1, 256)}
    if op == "basemul":
        return {"in0": rng.integers(-h, h + 1, 256), "in1": rng.integers(-h, h + 1, 256)}
    if op == "matvec":
        k = MATVEC_K
        return {"in0": rng.integers(-h, h + 1, k * k * 256), "in1": rng.integers(-h, h + 1, k * 256)}
    raise ValueError(f"unknown KAT op {op!r}")


def compute(op, inputs, p=KYBER):
    """The library's answer for one record's inputs."""
    if op == "ntt":
        return ntt_forward_batch(inputs["in0"], p=p)[0]
    if op == "intt":
        return intt_batch(inputs["in0"], inverse_schedule("gs34", "speed"), p=p)[0]
    if op == "basemul":
        a, b = (Poly(inputs[k], Domain.NTT) for k in ("in0", "in1"))
        return basemul(a, b, p=p).coeffs
    if op == "matvec":
        k = MATVEC_K
        A = inputs["in0"].reshape(k, k, 256)
        s = inputs["in1"].reshape(k, 256)
        A = [[Poly(A[i, j], Domain.NTT) for j in range(k)] for i in range(k)]
        s = [Poly(x, Domain.NTT) for x in s]
        return np.concatenate([o.coeffs for o in matvec_stack(A, s, k, p)])
    raise ValueError(f"unknown KAT op {op!r}")


def generate(seed, per_op=4):
    records = []
    for op in OPS:
        for _ in range(per_op):
            n = len(records)
            rseed = _record_seed(seed, n)
            inputs = _inputs(op, rseed)
            records.append(KatRecord(n, rseed, op, inputs, compute(op, inputs)))
    return records


def check(records):
    """Index of the first record that does not reproduce, or ``None``."""
    for i, r in enumerate(records):
        try:
            expected_in = _inputs(r.op, r.seed)
            if expected_in.keys() != r.inputs.keys() or not all(
                    np.array_equal(v, r.inputs[k]) for k, v in expected_in.items()):
                return i
            if not np.array_equal(compute(r.op, r.inputs), r.output):
                return i
        except ValueError:
            return i
    return None


__all__ = ["KatRecord", "KatFormatError", "dumps", "loads", "generate", "check",
           "compute", "to_hex", "from_hex"]
