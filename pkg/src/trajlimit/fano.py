"""Information-theoretic core: binary entropy, the Fano bound and its
numerical inversion, per-group corrections, and corpus-level aggregation.

The central object is the Fano function

    H_F(p) = H(p) + (1 - p) * log2(S - 1)

where H is the binary entropy and S the symbol alphabet size.  H_F peaks
at log2(S) when p = 1/S and decreases strictly on [1/S, 1], so on that
branch an entropy estimate h inverts to a unique accuracy bound p with
H_F(p) = h.  Accuracies below the uniform-guess rate 1/S carry no
information, which is why only this branch is inverted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ValidationError

#: accuracy-bound corrections that map the inverted all-positions bound onto
#: the positions-after-the-first average (the first symbol of a trip is close
#: to unguessable, so it is dropped from the accuracy average):
#:
#: * ``exclude-first``: multiply by n/(n-1), clamped at 1.  With exact
#:   entropies this provably stays above the achievable accuracy over
#:   positions 2..n.
#: * ``proportional``: multiply by (n-1)/n, the variant used in earlier
#:   compression-based predictability analyses; kept for comparability with
#:   their published figures but biased low by roughly (1/n)^2 relative
#:   terms.
CORRECTIONS = ("exclude-first", "proportional")


def binary_entropy(p: float) -> float:
    """Binary entropy -p*log2(p) - (1-p)*log2(1-p) in bits.

    Parameters
    ----------
    p : float
        Probability in [0, 1].  The 0*log2(0) terms are taken as 0.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _check_alphabet(s: int) -> int:
    s = int(s)
    if s < 2:
        raise ValueError(f"alphabet size must be >= 2, got {s}")
    return s


def fano_hf(p: float, s: int) -> float:
    """Fano bound H(p) + (1-p)*log2(s-1) on conditional entropy, in bits.

    Parameters
    ----------
    p : float
        Prediction accuracy in [0, 1].
    s : int
        Number of distinct symbols the predicted variable can take, >= 2.
    """
    s = _check_alphabet(s)
    return binary_entropy(p) + (1.0 - p) * math.log2(s - 1)


def invert_fano(h: float, s: int) -> float:
    """Solve H_F(p) = h for p on the decreasing branch [1/s, 1].

    Entropy estimates at or above log2(s) clamp to the uniform-guess
    accuracy 1/s; non-positive estimates clamp to 1.  Bisection runs until
    the bracketing interval is below 1e-14, which pins p itself (not just
    H_F(p)) even near the flat maximum at 1/s, and keeps the residual
    |H_F(p) - h| under 1e-12 everywhere the curve has bounded slope.

    Returns
    -------
    float
        The accuracy bound p in [1/s, 1].
    """
    s = _check_alphabet(s)
    if h <= 0.0:
        return 1.0
    if h >= math.log2(s):
        return 1.0 / s
    lo, hi = 1.0 / s, 1.0  # H_F(lo) = log2(s) > h, H_F(hi) = 0 < h
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if fano_hf(mid, s) > h:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class GroupEstimate:
    """Per-length-group outcome of the inversion pipeline."""

    n: int
    rate_hat: float
    pi_n: float
    pi_hat_n: float
    weight: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "weight": self.weight,
            "rate_hat": self.rate_hat,
            "pi_n": self.pi_n,
            "pi_hat_n": self.pi_hat_n,
        }


def group_predictability(
    rate_hat: float,
    n: int,
    s: int,
    weight: float = 1.0,
    correction: str = "exclude-first",
) -> GroupEstimate:
    """Turn a measured bits-per-label rate for length-n trips into a bound.

    The label stream of a length-n trip has n-1 symbols, so the per-label
    rate scaled by (n-1)/n is a per-position entropy estimate over all n
    positions; that is what gets inverted.  The correction then restates
    the inverted bound as an average over positions 2..n (see
    :data:`CORRECTIONS`).

    Parameters
    ----------
    rate_hat : float
        Measured (or analytic) bits per label for the group.
    n : int
        Trip length in edges, >= 2.
    s : int
        Alphabet size used in the Fano bound.
    weight : float
        Empirical probability mass of the group.
    correction : str
        One of :data:`CORRECTIONS`.
    """
    if n < 2:
        raise ConfigurationError(f"groups of length {n} have no labels to code")
    if rate_hat < 0:
        raise ValueError("rate_hat must be non-negative")
    if correction not in CORRECTIONS:
        raise ConfigurationError(f"unknown correction {correction!r}")
    pi_n = invert_fano((n - 1) / n * rate_hat, s)
    if correction == "exclude-first":
        pi_hat = min(1.0, pi_n * n / (n - 1))
    else:
        pi_hat = pi_n * (n - 1) / n
    return GroupEstimate(n=n, rate_hat=rate_hat, pi_n=pi_n, pi_hat_n=pi_hat, weight=weight)


@dataclass(frozen=True)
class PredictabilityReport:
    """Aggregated bound plus everything needed to recompute it."""

    groups: tuple
    aggregate_pi: float
    coverage: float
    config: dict

    def to_dict(self) -> dict:
        return {
            "groups": [g.to_dict() for g in self.groups],
            "aggregate_pi": self.aggregate_pi,
            "coverage": self.coverage,
            "config": self.config,
        }


def aggregate(groups, coverage: float = 1.0, config: dict | None = None) -> PredictabilityReport:
    """Weight-average the per-group bounds into the corpus-level bound."""
    groups = tuple(groups)
    if not groups:
        raise ValidationError("no group estimates to aggregate")
    total = math.fsum(g.weight for g in groups)
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(f"group weights sum to {total}, expected 1")
    agg = math.fsum(g.weight * g.pi_hat_n for g in groups)
    return PredictabilityReport(
        groups=groups,
        aggregate_pi=agg,
        coverage=coverage,
        config=dict(config or {}),
    )


def mixed_length_rate(ns, group_entropies, weights) -> float:
    """sum(Pr[N=n] * H_n) / E[N]: the rate a coder sees on length-mixed input.

    H_n is the total entropy in bits of one length-n trip.  This statistic
    is what direct concatenation of a mixed corpus converges to; it is NOT
    a valid input to :func:`invert_fano` because the expectation of H/N is
    not bounded by E[H]/E[N].  Exposed so reports can show the two values
    diverge; any report carrying it must flag it as non-certifying.
    """
    ns = np.asarray(ns, dtype=float)
    hs = np.asarray(group_entropies, dtype=float)
    ws = np.asarray(weights, dtype=float)
    if not (len(ns) == len(hs) == len(ws)) or len(ns) == 0:
        raise ValidationError("ns, group_entropies and weights must align")
    if abs(ws.sum() - 1.0) > 1e-9:
        raise ValidationError("weights must sum to 1")
    return float((ws * hs).sum() / (ws * ns).sum())


def plugin_entropy(counts) -> float:
    """Entropy in bits of the empirical distribution given by ``counts``."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValidationError("plugin_entropy needs at least one observation")
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())
