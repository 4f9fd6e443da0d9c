"""End-to-end predictability estimation with a scikit-learn interface.

``PredictabilityEstimator.fit`` runs the whole measurement chain on a
trajectory corpus: group trips by length, fit the labeling scheme, build
one separator-free sequence per group, code each with LZW, invert the Fano
bound per group and aggregate.  Fitted attributes expose every
intermediate so reports and tests can recompute the aggregate from the
per-group table.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .construct import DEFAULT_MAX_SYMBOLS, build_group_sequence
from .corpus import TrajectoryCorpus, corpus_from_sequences, group_by_length, group_rows
from .errors import ConfigurationError
from .fano import CORRECTIONS, aggregate, group_predictability, mixed_length_rate
from .labeling import make_labeler
from .lzw import lzw_encode


def resolve_alphabet(policy, streams) -> int:
    """Fano alphabet size from the configured policy.

    ``"observed"`` counts distinct symbols across the coded streams
    (floored at 2, the smallest invertible alphabet); an integer fixes the
    size explicitly.
    """
    if policy == "observed":
        distinct: set = set()
        for symbols in streams:
            distinct.update(np.unique(symbols).tolist())
        return max(2, len(distinct))
    s = int(policy)
    if s < 2:
        raise ConfigurationError("Fano alphabet must be >= 2")
    return s


class PredictabilityEstimator(BaseEstimator):
    """Upper-bound estimate of next-edge prediction accuracy.

    Parameters
    ----------
    network : RoadNetwork
        The graph the trajectories live on.
    scheme : str, default "rml"
        Labeling scheme spec: ``mel``, ``rml`` or ``ctx:k``.
    min_group_count : int, default 1
        Smallest length group kept, in trips.
    min_group_symbols : int, default 10000
        Without replacement, groups whose label stream would be shorter
        than this are dropped (short streams give meaningless rates).
        Ignored when ``with_replacement`` pads every stream.
    with_replacement : bool, default False
        Redraw trips i.i.d. during construction so every group stream
        reaches ``target_symbols``.
    target_symbols : int, optional
        Total constructed symbols across groups (allocated by weight)
        when sampling with replacement.
    fano_s : "observed" or int, default "observed"
        Alphabet size handed to the Fano inversion.
    correction : str, default "exclude-first"
        First-position correction, see :data:`trajlimit.fano.CORRECTIONS`.
    min_length, max_length : int
        Length filters applied at grouping time.
    seed : int, default 0
        Master seed; each group's shuffle derives from (seed, n).

    Attributes
    ----------
    labeler_ : fitted labeling transformer
    groups_ : tuple of GroupEstimate
    report_ : PredictabilityReport
    predictability_ : float
        The aggregated accuracy bound.
    coverage_ : float
        Trajectory mass retained by the grouping filters.
    fano_s_ : int
        The alphabet size actually used.
    mixed_length_rate_ : float
        The non-certifying length-mixed rate implied by the group rates.
    """

    def __init__(
        self,
        network=None,
        scheme="rml",
        min_group_count=1,
        min_group_symbols=10_000,
        with_replacement=False,
        target_symbols=None,
        max_group_symbols=DEFAULT_MAX_SYMBOLS,
        fano_s="observed",
        correction="exclude-first",
        min_length=2,
        max_length=None,
        seed=0,
    ):
        self.network = network
        self.scheme = scheme
        self.min_group_count = min_group_count
        self.min_group_symbols = min_group_symbols
        self.with_replacement = with_replacement
        self.target_symbols = target_symbols
        self.max_group_symbols = max_group_symbols
        self.fano_s = fano_s
        self.correction = correction
        self.min_length = min_length
        self.max_length = max_length
        self.seed = seed

    def fit(self, X, y=None):
        """Run the measurement chain on ``X`` (corpus or edge sequences)."""
        if self.network is None:
            raise ConfigurationError("a network is required")
        if self.correction not in CORRECTIONS:
            raise ConfigurationError(f"unknown correction {self.correction!r}")
        corpus = (
            X if isinstance(X, TrajectoryCorpus) else corpus_from_sequences(X, self.network)
        )

        groups, coverage = group_by_length(
            corpus,
            self.min_group_count,
            min_length=self.min_length,
            max_length=self.max_length,
        )
        if not self.with_replacement and self.min_group_symbols:
            kept = [g for g in groups if g.count * (g.n - 1) >= self.min_group_symbols]
            if not kept:
                raise ConfigurationError(
                    "no group reaches min_group_symbols="
                    f"{self.min_group_symbols}; lower it or enable with_replacement"
                )
            if len(kept) < len(groups):
                kept_mass = sum(g.weight for g in kept)
                coverage *= kept_mass
                groups = [
                    type(g)(n=g.n, indices=g.indices, weight=g.weight / kept_mass)
                    for g in kept
                ]

        self.labeler_ = make_labeler(self.scheme, self.network).fit(corpus)
        label_alphabet = self.labeler_.alphabet_size_
        firsts, flat_labels, label_offsets = self.labeler_.encode_corpus(corpus)

        streams = []
        for g in groups:
            starts = label_offsets[g.indices]
            blocks = flat_labels[starts[:, None] + np.arange(g.n - 1)]
            target = None
            if self.with_replacement:
                total_target = self.target_symbols or max(
                    self.min_group_symbols * len(groups), len(flat_labels)
                )
                target = max(self.min_group_symbols, int(round(g.weight * total_target)))
            built = build_group_sequence(
                blocks,
                g.n,
                label_alphabet,
                (self.seed, g.n),
                with_replacement=self.with_replacement,
                target_symbols=target,
                max_symbols=self.max_group_symbols,
            )
            streams.append(built)

        self.fano_s_ = resolve_alphabet(self.fano_s, (b.symbols for b in streams))

        estimates = []
        for g, built in zip(groups, streams):
            _, coding = lzw_encode(built.symbols, label_alphabet)
            estimates.append(
                group_predictability(
                    coding.rate, g.n, self.fano_s_, weight=g.weight, correction=self.correction
                )
            )

        config = {
            "scheme": self.scheme,
            "correction": self.correction,
            "fano_s": self.fano_s_,
            "fano_s_policy": str(self.fano_s),
            "label_alphabet": int(label_alphabet),
            "seed": self.seed,
            "with_replacement": self.with_replacement,
            "target_symbols": self.target_symbols,
            "min_group_count": self.min_group_count,
            "min_group_symbols": self.min_group_symbols,
        }
        self.report_ = aggregate(estimates, coverage=coverage, config=config)
        self.groups_ = self.report_.groups
        self.coverage_ = coverage
        self.predictability_ = self.report_.aggregate_pi
        self.mixed_length_rate_ = mixed_length_rate(
            [e.n for e in estimates],
            [e.rate_hat * (e.n - 1) for e in estimates],
            [e.weight for e in estimates],
        )
        return self

    def _check_fitted(self):
        if getattr(self, "report_", None) is None:
            raise NotFittedError("PredictabilityEstimator is not fitted yet")

    def group_table(self) -> list[dict]:
        """Per-group rows (n, weight, rate_hat, pi_n, pi_hat_n)."""
        self._check_fitted()
        return [g.to_dict() for g in self.groups_]
