"""Trajectory corpus: ragged storage plus the counters later stages need.

Trajectories are stored CSR-style (one flat edge array plus offsets) so that
corpora with tens of millions of edges stay cheap.  All derived statistics
are computed once at construction and the corpus is immutable afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ValidationError
from .network import RoadNetwork, validate_trajectory


@dataclass(frozen=True, eq=False)
class TrajectoryCorpus:
    """Multiset of validated trajectories over one network."""

    flat: np.ndarray
    offsets: np.ndarray
    edge_count: int
    length_histogram: dict = field(repr=False)
    edge_freq: np.ndarray = field(repr=False)
    bigram_freq: dict = field(repr=False)
    skipped_invalid: int = 0
    skipped_by_length: int = 0

    def __len__(self) -> int:
        return len(self.offsets) - 1

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    def trajectory(self, i: int) -> np.ndarray:
        return self.flat[self.offsets[i] : self.offsets[i + 1]]

    def __iter__(self):
        for i in range(len(self)):
            yield self.trajectory(i)


@dataclass(frozen=True)
class LengthGroup:
    """All trajectories of one exact length, with its empirical weight."""

    n: int
    indices: np.ndarray
    weight: float

    @property
    def count(self) -> int:
        return len(self.indices)


def _intra_pair_mask(offsets: np.ndarray, total: int) -> np.ndarray:
    # positions i such that flat[i] and flat[i+1] belong to the same trajectory
    mask = np.ones(max(total - 1, 0), dtype=bool)
    ends = offsets[1:-1] - 1
    mask[ends] = False
    return mask


def corpus_from_arrays(
    flat: np.ndarray, offsets: np.ndarray, net: RoadNetwork, *, skipped_invalid=0, skipped_by_length=0
) -> TrajectoryCorpus:
    """Assemble a corpus from trusted CSR arrays, re-checking connectivity."""
    flat = np.ascontiguousarray(flat, dtype=np.int32)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    if len(offsets) < 2 or offsets[0] != 0 or offsets[-1] != len(flat):
        raise ValidationError("malformed corpus offsets")
    lengths = np.diff(offsets)
    if (lengths < 1).any():
        raise ValidationError("empty trajectory in corpus")
    if len(flat) and (flat.min() < 0 or flat.max() >= net.edge_count):
        raise ValidationError("edge id out of range in corpus")
    if len(flat) > 1:
        mask = _intra_pair_mask(offsets, len(flat))
        if (net.heads[flat[:-1][mask]] != net.tails[flat[1:][mask]]).any():
            raise ValidationError("disconnected trajectory in corpus")

    uniq, counts = np.unique(lengths, return_counts=True)
    histogram = {int(n): int(c) for n, c in zip(uniq, counts)}
    edge_freq = np.bincount(flat, minlength=net.edge_count).astype(np.int64)

    bigram_freq = {}
    if len(flat) > 1:
        mask = _intra_pair_mask(offsets, len(flat))
        keys = flat[:-1][mask].astype(np.int64) * net.edge_count + flat[1:][mask]
        uk, uc = np.unique(keys, return_counts=True)
        e = net.edge_count
        bigram_freq = {(int(k // e), int(k % e)): int(c) for k, c in zip(uk, uc)}

    return TrajectoryCorpus(
        flat=flat,
        offsets=offsets,
        edge_count=net.edge_count,
        length_histogram=histogram,
        edge_freq=edge_freq,
        bigram_freq=bigram_freq,
        skipped_invalid=skipped_invalid,
        skipped_by_length=skipped_by_length,
    )


def corpus_from_sequences(sequences, net: RoadNetwork) -> TrajectoryCorpus:
    """Build a corpus from an iterable of edge-id sequences; all must validate."""
    chunks, offsets, pos = [], [0], 0
    for i, seq in enumerate(sequences):
        arr = np.asarray(seq, dtype=np.int32)
        bad = validate_trajectory(net, arr)
        if bad is not None:
            raise ValidationError(f"trajectory {i} invalid at position {bad}")
        chunks.append(arr)
        pos += len(arr)
        offsets.append(pos)
    if not chunks:
        raise ValidationError("empty corpus: no trajectories given")
    return corpus_from_arrays(np.concatenate(chunks), np.asarray(offsets), net)


def ingest_corpus(
    source,
    net: RoadNetwork,
    *,
    max_invalid_fraction: float = 0.01,
    min_length: int | None = None,
    max_length: int | None = None,
) -> TrajectoryCorpus:
    """Read a trajectory text file (one trip per line, ids split on
    whitespace or commas, ``#`` comments ignored).

    Records that fail to parse or to validate against the network are
    skipped and counted; if they exceed ``max_invalid_fraction`` of all
    records the ingest aborts.  Length filters, when given, exclude records
    without counting them as invalid.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return ingest_corpus(
                fh,
                net,
                max_invalid_fraction=max_invalid_fraction,
                min_length=min_length,
                max_length=max_length,
            )

    chunks, offsets, pos = [], [0], 0
    total = invalid = by_length = 0
    for raw in source:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        total += 1
        try:
            arr = np.array([int(t) for t in line.replace(",", " ").split()], dtype=np.int32)
        except (ValueError, OverflowError):
            invalid += 1
            continue
        if len(arr) == 0 or validate_trajectory(net, arr) is not None:
            invalid += 1
            continue
        if (min_length is not None and len(arr) < min_length) or (
            max_length is not None and len(arr) > max_length
        ):
            by_length += 1
            continue
        chunks.append(arr)
        pos += len(arr)
        offsets.append(pos)

    if total == 0 or not chunks:
        raise ValidationError("empty corpus: no usable trajectory records")
    if invalid > max_invalid_fraction * total:
        raise ValidationError(
            f"{invalid} of {total} records invalid, above the "
            f"{max_invalid_fraction:.1%} threshold"
        )
    return corpus_from_arrays(
        np.concatenate(chunks),
        np.asarray(offsets),
        net,
        skipped_invalid=invalid,
        skipped_by_length=by_length,
    )


def save_corpus_text(corpus: TrajectoryCorpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for traj in corpus:
            fh.write(" ".join(map(str, traj.tolist())) + "\n")


def mean_length(corpus: TrajectoryCorpus) -> float:
    """Average trajectory length, sum(n * count) / sum(count)."""
    if len(corpus) == 0:
        raise ValidationError("mean_length of empty corpus")
    return float(len(corpus.flat)) / len(corpus)


def group_by_length(
    corpus: TrajectoryCorpus,
    min_group_count: int = 1,
    *,
    min_length: int = 2,
    max_length: int | None = None,
) -> tuple[list[LengthGroup], float]:
    """Partition the corpus into same-length groups.

    Groups shorter than ``min_length`` edges (default 2: a single edge
    yields no labels), longer than ``max_length``, or with fewer than
    ``min_group_count`` members are excluded.  Weights of retained groups
    are renormalised to sum to one; the returned coverage is the retained
    trajectory mass before renormalisation.
    """
    if min_group_count < 1:
        raise ConfigurationError("min_group_count must be >= 1")
    total = len(corpus)
    lengths = corpus.lengths
    retained = []
    for n in sorted(corpus.length_histogram):
        count = corpus.length_histogram[n]
        if n < min_length or (max_length is not None and n > max_length):
            continue
        if count < min_group_count:
            continue
        retained.append((n, count))
    if not retained:
        raise ConfigurationError(
            "no length group satisfies the retention thresholds "
            f"(min_group_count={min_group_count}, min_length={min_length})"
        )
    retained_mass = sum(c for _, c in retained)
    coverage = retained_mass / total
    groups = [
        LengthGroup(
            n=n,
            indices=np.flatnonzero(lengths == n).astype(np.int64),
            weight=c / retained_mass,
        )
        for n, c in retained
    ]
    return groups, coverage


def group_rows(corpus: TrajectoryCorpus, group: LengthGroup) -> np.ndarray:
    """Trajectories of one group as a dense (count, n) edge-id matrix."""
    starts = corpus.offsets[group.indices]
    return corpus.flat[starts[:, None] + np.arange(group.n)]
