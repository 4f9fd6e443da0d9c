"""Seeded Markov trajectory sources with closed-form ground truth.

These stand in for real trip data: a source couples a road network with a
first-edge distribution and per-edge transition rows over admissible
successors.  Because the generating law is known exactly, per-length trip
entropies and the best achievable prediction accuracy can be computed
analytically and compared against what the coding pipeline estimates.
Brute-force enumeration oracles back the analytic formulas on desk-scale
instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import TrajectoryCorpus, corpus_from_arrays
from .errors import ConfigurationError, ValidationError
from .network import RoadNetwork


# ---------------------------------------------------------------------------
# length laws


@dataclass(frozen=True, eq=False)
class LengthLaw:
    """Finite-support distribution over trip lengths."""

    values: np.ndarray
    pmf: np.ndarray
    spec: str

    def __post_init__(self):
        if len(self.values) == 0 or len(self.values) != len(self.pmf):
            raise ConfigurationError("length law needs aligned values and pmf")
        if (self.values < 1).any():
            raise ConfigurationError("trip lengths must be >= 1")
        if abs(self.pmf.sum() - 1.0) > 1e-9 or (self.pmf < 0).any():
            raise ConfigurationError("length-law pmf must be a distribution")

    def mean(self) -> float:
        return float((self.values * self.pmf).sum())

    def max_length(self) -> int:
        return int(self.values.max())

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(self.values, p=self.pmf, size=size)

    @staticmethod
    def fixed(n: int) -> "LengthLaw":
        return LengthLaw(np.array([n]), np.array([1.0]), f"fixed:{n}")

    @staticmethod
    def uniform_range(lo: int, hi: int) -> "LengthLaw":
        if hi < lo:
            raise ConfigurationError("uniform length law needs lo <= hi")
        values = np.arange(lo, hi + 1)
        return LengthLaw(values, np.full(len(values), 1.0 / len(values)), f"uniform:{lo}:{hi}")

    @staticmethod
    def truncated_geometric(mean: float, lo: int, hi: int) -> "LengthLaw":
        """Geometric decay on lo..hi with the decay rate solved for ``mean``.

        Feasible targets lie strictly between lo (decay to a point mass)
        and the midpoint of the range (no decay).
        """
        if not lo < mean < (lo + hi) / 2:
            raise ConfigurationError(
                f"mean {mean} infeasible for geometric support [{lo}, {hi}]"
            )
        values = np.arange(lo, hi + 1, dtype=np.int64)

        def mean_for(q: float) -> float:
            w = q ** (values - lo).astype(float)
            return float((values * w).sum() / w.sum())

        q_lo, q_hi = 1e-12, 1.0 - 1e-12
        for _ in range(200):
            q_mid = 0.5 * (q_lo + q_hi)
            if mean_for(q_mid) < mean:
                q_lo = q_mid
            else:
                q_hi = q_mid
        q = 0.5 * (q_lo + q_hi)
        w = q ** (values - lo).astype(float)
        return LengthLaw(values, w / w.sum(), f"geom:{mean}:{lo}:{hi}")

    @staticmethod
    def from_spec(spec: str) -> "LengthLaw":
        parts = spec.split(":")
        try:
            if parts[0] == "fixed" and len(parts) == 2:
                return LengthLaw.fixed(int(parts[1]))
            if parts[0] == "uniform" and len(parts) == 3:
                return LengthLaw.uniform_range(int(parts[1]), int(parts[2]))
            if parts[0] == "geom" and len(parts) == 4:
                return LengthLaw.truncated_geometric(
                    float(parts[1]), int(parts[2]), int(parts[3])
                )
        except ValueError:
            pass
        raise ConfigurationError(
            f"bad length-law spec {spec!r}; expected fixed:N, uniform:LO:HI "
            "or geom:MEAN:LO:HI"
        )


# ---------------------------------------------------------------------------
# Markov sources


@dataclass(frozen=True, eq=False)
class MarkovSource:
    """First-order edge process on a road network.

    ``rows[e]`` holds transition probabilities aligned with
    ``net.out_edges(net.heads[e])``; an edge whose head has no out-edges
    gets an empty row and ends any trip that reaches it.
    """

    network: RoadNetwork
    initial: np.ndarray
    rows: tuple
    seed: int | None = None
    skew: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        net = self.network
        if len(self.initial) != net.edge_count:
            raise ValidationError("initial distribution must cover every edge")
        if abs(self.initial.sum() - 1.0) > 1e-12 or (self.initial < 0).any():
            raise ValidationError("initial distribution must sum to 1")
        if len(self.rows) != net.edge_count:
            raise ValidationError("one transition row per edge required")
        for e, row in enumerate(self.rows):
            d = len(net.out_adjacency[net.heads[e]])
            if len(row) != d:
                raise ValidationError(f"row {e} has {len(row)} entries, expected {d}")
            if d and (abs(row.sum() - 1.0) > 1e-12 or (row < 0).any()):
                raise ValidationError(f"row {e} is not a distribution")


def make_markov_source(
    net: RoadNetwork,
    skew: float,
    seed: int,
    initial="uniform",
) -> MarkovSource:
    """Draw a source with Dirichlet(skew, ..., skew) transition rows.

    Small ``skew`` concentrates each row near one successor (low entropy,
    high predictability); large ``skew`` approaches uniform rows.  The
    first-edge distribution is ``"uniform"``, ``"point:K"`` (all mass on
    edge K), or an explicit probability vector.
    """
    if skew <= 0:
        raise ConfigurationError("skew must be positive")
    rng = np.random.default_rng(seed)
    rows = []
    for e in range(net.edge_count):
        d = len(net.out_adjacency[net.heads[e]])
        if d == 0:
            rows.append(np.empty(0))
        elif d == 1:
            rows.append(np.array([1.0]))
        else:
            row = rng.dirichlet(np.full(d, skew))
            rows.append(row / row.sum())

    if isinstance(initial, str):
        if initial == "uniform":
            init = np.full(net.edge_count, 1.0 / net.edge_count)
        elif initial.startswith("point:"):
            k = int(initial.split(":", 1)[1])
            if not 0 <= k < net.edge_count:
                raise ConfigurationError(f"point initial edge {k} out of range")
            init = np.zeros(net.edge_count)
            init[k] = 1.0
        else:
            raise ConfigurationError(f"unknown initial spec {initial!r}")
        initial_spec = initial
    else:
        init = np.asarray(initial, dtype=float)
        init = init / init.sum()
        initial_spec = "custom"
    return MarkovSource(
        network=net,
        initial=init,
        rows=tuple(rows),
        seed=seed,
        skew=skew,
        meta={"initial": initial_spec},
    )


# ---------------------------------------------------------------------------
# sampling


def _padded_tables(src: MarkovSource):
    net = src.network
    d_max = max(net.max_out_degree, 1)
    cum = np.ones((net.edge_count, d_max))
    adj = np.full((net.edge_count, d_max), -1, dtype=np.int32)
    for e, row in enumerate(src.rows):
        if len(row):
            c = np.cumsum(row)
            c[-1] = 1.0  # guard against float drift
            cum[e, : len(row)] = c
            cum[e, len(row) :] = 1.0
            adj[e, : len(row)] = net.out_adjacency[net.heads[e]]
    return cum, adj


def sample_corpus(
    src: MarkovSource, law: LengthLaw, count: int, seed: int
) -> TrajectoryCorpus:
    """Draw ``count`` independent trips: length from the law, first edge
    from the initial distribution, successors from the transition rows.

    Trips that run into a dead end are redrawn at the same length so the
    requested length law is honoured exactly.
    """
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    rng = np.random.default_rng(seed)
    lengths = law.sample(rng, count).astype(np.int64)
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    flat = np.empty(int(lengths.sum()), dtype=np.int32)
    cum, adj = _padded_tables(src)

    pending = np.arange(count)
    for _round in range(1000):
        flat[offsets[pending]] = rng.choice(
            src.network.edge_count, p=src.initial, size=len(pending)
        )
        failed_set = np.zeros(len(pending), dtype=bool)
        max_len = int(lengths[pending].max())
        for step in range(1, max_len):
            live = (lengths[pending] > step) & ~failed_set
            if not live.any():
                break
            idx = pending[live]
            cur = flat[offsets[idx] + step - 1]
            u = rng.random(len(idx))
            slot = (u[:, None] > cum[cur]).sum(axis=1)
            nxt = adj[cur, slot]
            dead = nxt < 0
            if dead.any():
                failed_local = np.flatnonzero(live)[dead]
                failed_set[failed_local] = True
                nxt = np.where(dead, 0, nxt)
            flat[offsets[idx] + step] = nxt
        if not failed_set.any():
            return corpus_from_arrays(flat, offsets, src.network)
        pending = pending[failed_set]
    raise ValidationError(
        "could not sample requested lengths; too many dead ends "
        "(use a strongly connected network)"
    )


# ---------------------------------------------------------------------------
# analytic ground truth


def _dense_transition(src: MarkovSource) -> np.ndarray:
    net = src.network
    if net.edge_count > 5000:
        raise ValidationError(
            "analytic propagation is a desk-scale oracle; edge count "
            f"{net.edge_count} exceeds 5000"
        )
    t = np.zeros((net.edge_count, net.edge_count))
    for e, row in enumerate(src.rows):
        if len(row):
            t[e, net.out_adjacency[net.heads[e]]] = row
    return t


def _entropy_bits(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def analytic_profiles(src: MarkovSource, max_n: int):
    """Exact per-position statistics up to trips of length ``max_n``.

    Returns (initial_entropy, cond_entropies, accuracies) where entry i of
    the arrays describes position i+2 of a trip: the conditional entropy
    of that edge given its predecessor, and the probability that guessing
    the most likely successor is right.
    """
    if max_n < 1:
        raise ConfigurationError("max_n must be >= 1")
    t = _dense_transition(src)
    row_entropy = np.zeros(src.network.edge_count)
    row_max = np.zeros(src.network.edge_count)
    row_dead = np.zeros(src.network.edge_count, dtype=bool)
    for e, row in enumerate(src.rows):
        if len(row):
            row_entropy[e] = _entropy_bits(row)
            row_max[e] = float(row.max())
        else:
            row_dead[e] = True

    cond_entropies = np.zeros(max(max_n - 1, 0))
    accuracies = np.zeros(max(max_n - 1, 0))
    p = src.initial.copy()
    for i in range(max_n - 1):
        if (p[row_dead] > 1e-15).any():
            raise ValidationError(
                "probability mass reaches a dead end before the requested "
                "length; analytic formulas need a dead-end-free horizon"
            )
        cond_entropies[i] = float((p * row_entropy).sum())
        accuracies[i] = float((p * row_max).sum())
        p = p @ t
    return _entropy_bits(src.initial), cond_entropies, accuracies


def analytic_group_entropy(src: MarkovSource, n: int) -> float:
    """Exact trip entropy H over length-n trips, by distribution propagation."""
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    h0, cond, _ = analytic_profiles(src, n)
    return h0 + float(cond.sum())


def analytic_optimal_accuracy(src: MarkovSource, n: int) -> float:
    """Best achievable next-edge accuracy averaged over positions 2..n.

    The source is first order, so the optimal predictor of each position
    needs only the previous edge; histories collapse.
    """
    if n < 2:
        raise ConfigurationError("accuracy is defined from position 2 onward")
    _, _, acc = analytic_profiles(src, n)
    return float(acc.mean())


def analytic_transition_entropy_rate(src: MarkovSource, n: int) -> float:
    """Exact bits per transition for length-n trips: (H(trip) - H(first)) / (n-1)."""
    if n < 2:
        raise ConfigurationError("n must be >= 2")
    _, cond, _ = analytic_profiles(src, n)
    return float(cond.mean())


def brute_force_entropy(probabilities) -> float:
    """-sum(p log2 p) over an explicit outcome table.

    The oracle refuses anything but desk-scale inputs so it stays an
    independent check rather than an estimator.
    """
    if isinstance(probabilities, dict):
        p = np.array(list(probabilities.values()), dtype=float)
    else:
        p = np.asarray(probabilities, dtype=float)
    if p.size > 1_000_000:
        raise ValidationError("outcome table too large for the brute-force oracle")
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
        raise ValidationError("probabilities must be non-negative and sum to 1")
    return _entropy_bits(p)


def enumerate_group_distribution(src: MarkovSource, n: int, limit: int = 1_000_000) -> dict:
    """Explicit {trip tuple: probability} table for length-n trips.

    Depth-first expansion pruning zero-probability branches; refuses to
    grow beyond ``limit`` outcomes.
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    net = src.network
    out: dict = {}
    stack = [((int(e),), float(src.initial[e])) for e in np.flatnonzero(src.initial > 0)]
    while stack:
        path, prob = stack.pop()
        if len(path) == n:
            out[path] = out.get(path, 0.0) + prob
            if len(out) > limit:
                raise ValidationError("enumeration exceeds the outcome limit")
            continue
        e = path[-1]
        row = src.rows[e]
        if len(row) == 0:
            raise ValidationError(
                "dead end reached during enumeration; trips of the requested "
                "length do not exist from here"
            )
        adjacent = net.out_adjacency[net.heads[e]]
        for nxt, q in zip(adjacent, row):
            if q > 0:
                stack.append((path + (int(nxt),), prob * float(q)))
    return out
