"""Verification reports and residual zero tests."""

from __future__ import annotations

import json
import random
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

from .diffring import PRIMES, ZERO, EvaluationError, JetPoint, RingElem, is_zero, taylor_mod
from .psdop import LocalOp, WnlOp

PASS, FAIL, ERROR = "pass", "fail", "error"


@dataclass
class Report:
    check: str
    inputs: dict
    verdict: str
    mode: str
    residual_summary: Optional[str] = None
    time_ms: int = 0
    fixture_checksum: str = ""
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return asdict(self)

    def line(self) -> str:
        return f"[{self.verdict.upper():5}] {self.check} {json.dumps(self.inputs, sort_keys=True)} ({self.time_ms} ms)"


def mode_label(mode: str, trials: int) -> str:
    return "exact" if mode == "exact" else f"probabilistic({trials})"


def dump_reports(reports: Iterable[Report], path) -> None:
    data = [r.to_dict() for r in sorted(reports, key=lambda r: r.check)]
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


@contextmanager
def timer():
    box = {"ms": 0}
    t0 = time.perf_counter()
    try:
        yield box
    finally:
        box["ms"] = int(round((time.perf_counter() - t0) * 1000))


# ---------------------------------------------------------------------------
# residual components


Residual = Union[RingElem, LocalOp, WnlOp]


def _tail_moments(tails, count: int) -> list[tuple[str, RingElem]]:
    # sum_i p_i Dinv q_i vanishes iff sum_i p_i D^k(q_i) = 0 for k < dim span(q)
    out = []
    ders = [q for _, q in tails]
    for k in range(count):
        acc = ZERO
        for (p, _), qk in zip(tails, ders):
            acc = acc + p * qk
        out.append((f"tail moment {k}", acc))
        ders = [q.total_derivative() for q in ders]
    return out


def components(residual: Residual, canonical: bool = True) -> list[tuple[str, RingElem]]:
    """Ring elements that all vanish iff the residual vanishes."""
    if isinstance(residual, RingElem):
        return [("value", residual)]
    if isinstance(residual, LocalOp):
        residual = WnlOp.from_local(residual)
    if canonical:
        residual = residual.canonical()
    out = [(f"D^{k} coefficient", c) for k, c in sorted(residual.local.coeffs.items())]
    out.extend(_tail_moments(residual.tails, len(residual.tails)))
    return out


def _witness_point(e: RingElem, rng: random.Random) -> str:
    vs = sorted(e.variables())
    for _ in range(50):
        pt = {v: rng.randrange(-9, 10) or 1 for v in vs}
        try:
            val = e.evaluate(pt)
        except EvaluationError:
            continue
        if val:
            coords = ", ".join(f"{v.name}={x}" for v, x in pt.items())
            return f"value {val} at {coords}"
    return "nonzero canonical form"


def _tails_vanish_mod(tails, trials: int, rng: random.Random, retries: int = 20):
    """Tail moments at random jet points modulo large primes."""
    n = len(tails)
    for t in range(trials):
        p = PRIMES[t % len(PRIMES)]
        for _ in range(retries + 1):
            pt = JetPoint(rng, p - 1)
            series = []
            for a, b in tails:
                sa, sb = taylor_mod(a, pt, 1, p), taylor_mod(b, pt, n, p)
                if sa is None or sb is None:
                    break
                series.append((sa[0], sb))
            else:
                break
        else:
            raise EvaluationError("denominator vanished at every sampled point")
        fact = 1
        for k in range(n):
            if k:
                fact = fact * k % p
            if sum(a * b[k] for a, b in series) * fact % p:
                return False, f"tail moment {k}: nonzero modulo {p} at a random jet point"
    return True, None


def zero_test(residual: Residual, mode: str = "exact", trials: int = 40,
              seed: int = 0) -> tuple[bool, Optional[str]]:
    """``(is_zero, witness)``; the witness names a nonzero component and a point."""
    rng = random.Random(seed)
    if mode != "exact" and not isinstance(residual, RingElem):
        op = WnlOp.from_local(residual) if isinstance(residual, LocalOp) else residual
        for k, c in sorted(op.local.coeffs.items()):
            if not is_zero(c, "probabilistic", trials, rng=rng):
                return False, f"D^{k} coefficient: {_witness_point(c, rng)}"
        return _tails_vanish_mod(op.tails, trials, rng) if op.tails else (True, None)
    comps = components(residual, canonical=(mode == "exact"))
    for label, c in comps:
        if mode == "exact":
            zero = c.is_zero()
        else:
            zero = is_zero(c, "probabilistic", trials, rng=rng)
        if not zero:
            return False, f"{label}: {_witness_point(c, rng)}"
    return True, None


def short(e: Residual, limit: int = 400) -> str:
    from .expr import format_elem, format_operator

    text = format_elem(e) if isinstance(e, RingElem) else format_operator(e)
    return text if len(text) <= limit else text[:limit] + f"... ({len(text)} chars)"


def frac_str(x) -> str:
    return str(Fraction(x))
