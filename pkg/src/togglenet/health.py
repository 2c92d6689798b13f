"""Continuous entropy-source health tests (repetition count, adaptive proportion).

Cutoffs follow the SP 800-90B formulas at a false-alarm rate of
alpha = 2^-20 and the recommended binary window of 1024 samples:

* repetition count: C = 1 + ceil(20 / H) identical consecutive samples;
* adaptive proportion: the smallest c such that
  P[Binomial(W-1, 2^-H) >= c - 1] < alpha, by exact tail summation.

H is the assessed entropy of the source in bits per sample, in (0, 1].
An alarm latches until reset(); a latched monitor keeps reporting failure.
"""

from __future__ import annotations

import math
from fractions import Fraction

ALPHA_EXP = 20  # alpha = 2**-20
APT_WINDOW = 1024


class HealthAlarm(RuntimeError):
    """Raised by callers that treat a latched alarm as fatal."""


def rct_cutoff(h: float) -> int:
    if not 0 < h <= 1:
        raise ValueError("entropy per sample must be in (0, 1]")
    return 1 + math.ceil(ALPHA_EXP / h)


def apt_cutoff(h: float, window: int = APT_WINDOW) -> int:
    """Smallest c with P[Binomial(window-1, 2^-H) >= c-1] < 2^-alpha_exp."""
    if not 0 < h <= 1:
        raise ValueError("entropy per sample must be in (0, 1]")
    n = window - 1
    if h == int(h):
        # dyadic success probability: exact integer arithmetic
        p = Fraction(1, 2 ** int(h))
        alpha = Fraction(1, 2 ** ALPHA_EXP)
        tail = Fraction(0)
        terms = []
        for k in range(n, -1, -1):
            terms.append(math.comb(n, k) * p ** k * (1 - p) ** (n - k))
        for t, k in zip(terms, range(n, -1, -1)):
            tail += t
            if tail >= alpha:
                return k + 2  # smallest c with tail(c-1) < alpha has c-1 = k+1
        return 1
    # general H: descending stable summation in floats
    p = 2.0 ** -h
    logterm = n * math.log1p(-p)  # log P[X = 0]
    # walk up collecting probabilities, then sum the tail from the top
    logs = [logterm]
    for k in range(1, n + 1):
        logterm += math.log((n - k + 1) / k) + math.log(p) - math.log1p(-p)
        logs.append(logterm)
    alpha = 2.0 ** -ALPHA_EXP
    tail = 0.0
    for k in range(n, -1, -1):
        tail += math.exp(logs[k])
        if tail >= alpha:
            return k + 2
    return 1


class HealthMonitor:
    """Per-source RCT + APT state; feed one binary sample at a time."""

    def __init__(self, h: float = 1.0, window: int = APT_WINDOW):
        self.h = h
        self.window = window
        self.c_rct = rct_cutoff(h)
        self.c_apt = apt_cutoff(h, window)
        self.alarm: str | None = None
        self._last: int | None = None
        self._run = 0
        self._first: int | None = None
        self._count = 0
        self._pos = 0

    def reset(self) -> None:
        self.alarm = None
        self._last = None
        self._run = 0
        self._first = None
        self._count = 0
        self._pos = 0

    def rct_step(self, sample: int) -> bool:
        """Returns True while healthy; False latches the alarm."""
        if self.alarm:
            return False
        if sample == self._last:
            self._run += 1
        else:
            self._last = sample
            self._run = 1
        if self._run >= self.c_rct:
            self.alarm = "rct"
            return False
        return True

    def apt_step(self, sample: int) -> bool:
        if self.alarm:
            return False
        if self._pos == 0:
            self._first = sample
            self._count = 1
        else:
            if sample == self._first:
                self._count += 1
            if self._count >= self.c_apt:
                self.alarm = "apt"
                return False
        self._pos += 1
        if self._pos == self.window:
            self._pos = 0
        return True

    def step(self, sample: int) -> bool:
        ok = self.rct_step(sample)
        ok = self.apt_step(sample) and ok
        return ok

    def feed_bytes(self, data: bytes) -> bool:
        """Run every bit (MSB first) through both tests."""
        ok = True
        for byte in data:
            for t in range(7, -1, -1):
                ok = self.step((byte >> t) & 1) and ok
        return ok
