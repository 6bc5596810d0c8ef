"""Pruning a candidate subspace down to the close codewords.

A single trial draws r grid points independently and uniformly (with
replacement -- that is what the probability analysis assumes) and keeps
the unique member of the subspace consistent with the received word at all
of them, if there is one.  For a member at distance alpha the success
probability is at least ``(1-alpha)^r - w (d / (|S|(s-w)))^r``, so a union
bound over a modest number of independent trials recovers every close
member with high probability while the expected list stays constant.

Trials are driven by sub-seeds derived from the master seed through the
documented splitmix sequence, so runs are reproducible and trials are
mutually independent; results are merged by canonical sorting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from . import modlin
from .code import ReceivedWord, agreement, encode
from .errors import ParameterError
from .poly import Polynomial
from .rng import XorShift64Star, subseed


@dataclass(frozen=True)
class PruneConfig:
    """Points per trial (r), trial count, seed, and the agreement target."""

    r: int
    trials: int
    rng_seed: int
    min_agreement: Fraction

    def __post_init__(self):
        if self.r < 1 or self.trials < 1:
            raise ParameterError("need r >= 1 and trials >= 1")
        object.__setattr__(self, "min_agreement", Fraction(self.min_agreement))

    @classmethod
    def with_theorem_defaults(cls, epsilon, m: int, k: int, min_agreement,
                              rng_seed: int, trials: Optional[int] = None
                              ) -> "PruneConfig":
        """r from the closed form; trial count from the union bound."""
        r = default_r(epsilon, m, k)
        if trials is None:
            trials = default_trials(Fraction(min_agreement), r)
        return cls(r=r, trials=trials, rng_seed=rng_seed,
                   min_agreement=Fraction(min_agreement))


def default_r(epsilon, m: int, k: int) -> int:
    """ceil(log(2 C(m+k, k)) / log(1 + eps/4))."""
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise ParameterError("epsilon must lie in (0, 1)")
    w = math.comb(m + k, k)
    return math.ceil(math.log(2 * w) / math.log(1 + float(eps) / 4))


def default_trials(min_agreement: Fraction, r: int) -> int:
    """About (1/rho) log(1/rho) trials for rho = min_agreement^r / 2."""
    rho = float(Fraction(min_agreement) ** r) / 2
    if rho <= 0:
        raise ParameterError("agreement target must be positive")
    inv = 1.0 / rho
    return max(1, math.ceil(inv * max(1.0, math.log(inv))))


class _ConsistencySolver:
    """Precomputed encodings of a subspace, for repeated point-wise solving."""

    def __init__(self, P: ReceivedWord, W):
        params = P.params
        self.params = params
        self.word = P
        self.offset = W.offset
        self.basis = W.basis
        self.offset_word = encode(W.offset, params)
        self.basis_words = [encode(b, params) for b in W.basis]
        self.points = params.grid.all_points()

    def run(self, r: int, rng_seed: int) -> Optional[Polynomial]:
        rng = XorShift64Star(rng_seed)
        draws = [self.points[rng.randbelow(len(self.points))] for _ in range(r)]
        field = self.params.field
        rows: List[List[int]] = []
        rhs: List[int] = []
        for pt in draws:
            target = self.word.symbols[pt]
            off = self.offset_word.symbols[pt]
            per_basis = [bw.symbols[pt] for bw in self.basis_words]
            for idx in range(self.params.alphabet_size):
                rows.append([vals[idx] for vals in per_basis])
                rhs.append((target[idx] - off[idx]) % field.p)
        if not self.basis:
            consistent = all(v == 0 for v in rhs)
            return self.offset if consistent else None
        sol, kdim = modlin.solve(rows, rhs, field)
        if sol is None or kdim != 0:
            return None
        f = self.offset
        for c, b in zip(sol, self.basis):
            if c:
                f = f + b.scale(c)
        return f


def algorithm_a(P: ReceivedWord, W, r: int, rng_seed: int) -> Optional[Polynomial]:
    """One pruning trial: r uniform points, return the unique consistent member.

    Returns None when no member or more than one member of W matches the
    received word at every drawn point; an empty result is a valid outcome.
    """
    if r < 1:
        raise ParameterError("need r >= 1")
    return _ConsistencySolver(P, W).run(r, rng_seed)


def prune(P: ReceivedWord, W, cfg: PruneConfig) -> List[Polynomial]:
    """Deduplicated union of trial outputs, filtered to the agreement target.

    Deterministic given cfg.rng_seed: trial t uses the t-th splitmix
    sub-seed.  Soundness is unconditional (only members of W consistent
    with enough agreement survive); completeness is probabilistic.
    """
    solver = _ConsistencySolver(P, W)
    collected = {}
    for t in range(cfg.trials):
        f = solver.run(cfg.r, subseed(cfg.rng_seed, t))
        if f is None:
            continue
        key = f.sort_key()
        if key not in collected:
            collected[key] = f
    out = []
    for key in sorted(collected):
        f = collected[key]
        if agreement(encode(f, P.params), P) >= cfg.min_agreement:
            out.append(f)
    return out


def theorem13_params(epsilon, k: int) -> Tuple[int, int, int]:
    """The constant-list-size parameter triple (m, s, r) for a target epsilon.

    m = ceil((20/eps)^k), s = ceil((4/eps) C(m+k, k)), and r as in
    :func:`default_r`.  The output always satisfies
    10/m^(1/k) + m/(s-m) < eps, which is what the agreement analysis needs.
    """
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise ParameterError("epsilon must lie in (0, 1)")
    m = math.ceil((Fraction(20) / eps) ** k)
    s = math.ceil(Fraction(4) / eps * math.comb(m + k, k))
    r = default_r(eps, m, k)
    # exact halves of the bound: m >= (20/eps)^k gives 10/m^(1/k) <= eps/2,
    # and 2m < eps (s - m) gives the second half strictly
    assert Fraction(m) ** 1 * eps ** k >= Fraction(20) ** k or m >= (Fraction(20) / eps) ** k
    assert 2 * m < eps * (s - m)
    return m, s, r
