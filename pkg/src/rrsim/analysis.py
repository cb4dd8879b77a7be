"""Closed-form overhead calculators and small analytic oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

SCHEMES = ("flooding", "centralized", "ght", "rr")


def norm_overhead(ins_per_op: float, lookup_per_op: float, lir: float) -> float:
    """Normalized message overhead per insertion: Ins + Lookup * LIR."""
    if min(ins_per_op, lookup_per_op, lir) < 0:
        raise ValueError("inputs must be non-negative")
    return ins_per_op + lookup_per_op * lir


def norm_total_per_sec(ins: float, lookup: float, i_rate: float, l_rate: float, per: float, length: float,
                       lir: float | None = None, form: str = "printed") -> float:
    """Normalized total overhead per second.

    ``form="printed"`` evaluates (Ins/LIR)*iRate + Lookup*lRate + Per/len;
    ``form="conventional"`` evaluates Ins*iRate + Lookup*lRate + Per/len.
    The two agree when the printed form is fed iRate = lRate and the
    conventional one iRate = lRate / LIR.
    """
    if length <= 0:
        raise ValueError("interval length must be positive")
    if form == "printed":
        if not lir:
            raise ValueError("LIR must be positive in the printed form")
        return ins / lir * i_rate + lookup * l_rate + per / length
    if form == "conventional":
        return ins * i_rate + lookup * l_rate + per / length
    raise ValueError(f"unknown form {form!r}")


@dataclass
class OverheadModel:
    n: int
    I: int
    L: int
    R: int = 1
    S: float = 3.0

    def __post_init__(self):
        if min(self.n, self.I, self.L, self.R) < 0 or self.S < 0:
            raise ValueError("all counts must be non-negative")

    @property
    def lir(self) -> float:
        if self.I <= 0:
            raise ValueError("LIR undefined without insertions")
        return self.L / self.I


@dataclass
class CostEstimate:
    total: float
    hotspot: float
    notes: list[str] = field(default_factory=list)


def asymptotic_costs(model: OverheadModel, scheme: str, total_k: float = 1.0, hot_k: float = 1.0) -> CostEstimate:
    """Evaluate the asymptotic (total, hotspot) table for one scheme.

    ``total_k``/``hot_k`` are proportionality constants, fitted from
    simulation with ``fit_constant``. The RR total uses sqrt(n) + n/R per
    insertion.
    """
    n, I, L, R, S = model.n, model.I, model.L, model.R, model.S
    rn = math.sqrt(n)
    notes: list[str] = []
    if scheme == "flooding":
        total, hot = n * L, L
    elif scheme == "centralized":
        total, hot = (I + L) * rn, L + I
    elif scheme in ("ght", "ght_star"):
        total = (I + L) * rn
        if I > 0 and L > I:
            hot = L / I
        else:
            hot = max(L / I, 1.0) if I > 0 else 1.0
            notes.append("hotspot formula assumes L > I; clamped to max(L/I, 1)")
    elif scheme == "rr":
        total = I * (rn + n / max(R, 1)) + L * rn
        spread = min(I, R) * S
        hot = I / max(R, 1) + (L / spread if spread > 0 else 0.0)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return CostEstimate(total_k * total, hot_k * hot, notes)


def fit_constant(measured, predicted) -> float:
    """Least-squares scale c minimizing sum (measured - c * predicted)^2."""
    m = np.asarray(measured, dtype=float)
    p = np.asarray(predicted, dtype=float)
    den = float(p @ p)
    return float(m @ p) / den if den > 0 else 0.0


def linear_fit(x, y) -> tuple[float, float, float]:
    """(slope, intercept, r_squared) of an ordinary least-squares line."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


# ---------------------------------------------------------------------------
# election oracle


def election_p0(s_min: int, regions: int, n: int) -> float:
    return min(1.0, 2.0 * s_min * regions / max(1, n))


def election_schedule(p0: float) -> list[float]:
    """Self-election probabilities per round: p0, 2p0, ... capped at 1."""
    out = [p0]
    while out[-1] < 1.0:
        out.append(min(1.0, 2.0 * out[-1]))
    return out


def elected_count_distribution(population: int, s_min: int, p0: float, existing: int = 0) -> np.ndarray:
    """Distribution of the final server count in a region after one election.

    Rounds stop as soon as the count reaches ``s_min`` or after the p = 1
    round. Index k of the result is P(final count = k).
    """
    m = population
    state = np.zeros(m + 1)
    state[min(existing, m)] = 1.0
    final = np.zeros(m + 1)
    done = np.arange(m + 1) >= min(s_min, m)
    final[done] += state[done]
    state[done] = 0.0
    for p in election_schedule(p0):
        nxt = np.zeros(m + 1)
        for c in np.nonzero(state)[0]:
            rest = m - c
            pmf = binom.pmf(np.arange(rest + 1), rest, p)
            nxt[c:] += state[c] * pmf
        stop = done if p < 1.0 else np.ones(m + 1, dtype=bool)
        final[stop] += nxt[stop]
        nxt[stop] = 0.0
        state = nxt
    final += state
    return final


def expected_servers(population: int, s_min: int, p0: float) -> float:
    d = elected_count_distribution(population, s_min, p0)
    return float(np.arange(len(d)) @ d)


def max_election_rounds(p0: float) -> int:
    """Self-election rounds needed at most: ceil(log2(1/p0)) + 1."""
    return math.ceil(math.log2(1.0 / p0)) + 1 if p0 < 1 else 1
