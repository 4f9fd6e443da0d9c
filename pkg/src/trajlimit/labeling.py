"""Context-dependent bijective relabeling of edge sequences.

Every scheme maps an edge sequence e_1..e_n to (e_1, l_1..l_{n-1}) where
label l_i identifies e_{i+1} among the edges admissible after e_i.  The map
is a bijection per context, so label sequences decode back to the exact
edge sequence and the transformation preserves sequence entropy while
shrinking the alphabet from |E| to the maximum out-degree.

Schemes differ in what a context is and how ranks are assigned:

* :class:`MinimalEntropyLabeling` ranks the out-edges of each vertex by
  corpus edge frequency (most frequent edge gets label 0).
* :class:`RelativeMovementLabeling` ranks the successors of each edge by
  bigram frequency, falling back to the vertex ranking for edges never
  observed as a predecessor.
* :class:`ContextTreeLabeling` generalises to length-k edge histories
  ranked by (k+1)-gram frequency, recursively falling back to shorter
  contexts and bottoming out at the vertex ranking.

Ties are always broken by ascending edge id so fitted schemes are
reproducible.  All classes follow the scikit-learn estimator protocol:
``fit`` learns the per-context rankings, ``transform`` encodes sequences,
``inverse_transform`` decodes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .corpus import TrajectoryCorpus, corpus_from_sequences
from .errors import ConfigurationError, LabelingError, ValidationError
from .network import RoadNetwork

SCHEME_FORMAT = "trajlimit.labeling"
SCHEME_VERSION = 1


@dataclass(frozen=True)
class LabeledTrajectory:
    """Bijective image of a trajectory: raw first edge plus ranked labels."""

    first_edge: int
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels) + 1

    def __eq__(self, other):
        if not isinstance(other, LabeledTrajectory):
            return NotImplemented
        return self.first_edge == other.first_edge and np.array_equal(
            self.labels, other.labels
        )

    def __hash__(self):
        return hash((self.first_edge, bytes(np.asarray(self.labels, dtype=np.int64))))


def _as_corpus(X, network: RoadNetwork) -> TrajectoryCorpus:
    if isinstance(X, TrajectoryCorpus):
        if X.edge_count != network.edge_count:
            raise ValidationError("corpus was built against a different network")
        return X
    return corpus_from_sequences(X, network)


def _rank_by_count(candidates: np.ndarray, counts: np.ndarray) -> np.ndarray:
    # descending count, ties by ascending edge id
    order = np.lexsort((candidates, -counts))
    return candidates[order]


class _LabelerBase(BaseEstimator, TransformerMixin):
    """Shared fit/transform plumbing; subclasses provide the rankings."""

    def __init__(self, network=None):
        self.network = network

    def _check_fitted(self):
        if getattr(self, "alphabet_size_", None) is None:
            raise NotFittedError(
                f"{type(self).__name__} is not fitted yet; call fit() first"
            )

    def _require_network(self) -> RoadNetwork:
        if self.network is None:
            raise ConfigurationError("a network is required before fitting")
        return self.network

    def fit(self, X, y=None):
        net = self._require_network()
        corpus = _as_corpus(X, net)
        self._fit_rankings(net, corpus)
        self.alphabet_size_ = net.max_out_degree
        return self

    def transform(self, X) -> list[LabeledTrajectory]:
        """Encode each edge sequence into a :class:`LabeledTrajectory`."""
        self._check_fitted()
        return [self.encode(np.asarray(t, dtype=np.int64)) for t in X]

    def inverse_transform(self, X) -> list[np.ndarray]:
        """Decode labeled trajectories back to edge sequences."""
        self._check_fitted()
        return [self.decode(lt) for lt in X]

    def encode(self, trajectory) -> LabeledTrajectory:
        t = np.asarray(trajectory, dtype=np.int64)
        net = self.network
        if len(t) == 0:
            raise LabelingError("cannot encode an empty trajectory")
        if t.min() < 0 or t.max() >= net.edge_count:
            raise LabelingError("edge id out of range")
        if len(t) > 1 and (net.heads[t[:-1]] != net.tails[t[1:]]).any():
            bad = int(np.argmax(net.heads[t[:-1]] != net.tails[t[1:]])) + 1
            raise LabelingError(f"edge at position {bad} not admissible in context")
        return LabeledTrajectory(int(t[0]), self._encode_labels(t))

    def decode(self, lt: LabeledTrajectory) -> np.ndarray:
        self._check_fitted()
        net = self.network
        if not 0 <= lt.first_edge < net.edge_count:
            raise LabelingError("first edge out of range")
        return self._decode_labels(lt)

    # subclass hooks -------------------------------------------------
    def _fit_rankings(self, net, corpus):
        raise NotImplementedError

    def _encode_labels(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _decode_labels(self, lt: LabeledTrajectory) -> np.ndarray:
        raise NotImplementedError

    # persistence ----------------------------------------------------
    def to_dict(self) -> dict:
        self._check_fitted()
        net = self.network
        d = {
            "format": SCHEME_FORMAT,
            "version": SCHEME_VERSION,
            "kind": self.kind,
            "alphabet_size": int(self.alphabet_size_),
            "network": {"edges": net.edge_count, "vertices": net.vertex_count},
        }
        d.update(self._rankings_dict())
        return d

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")


class MinimalEntropyLabeling(_LabelerBase):
    """Vertex-context labeling: out-edges ranked by global edge frequency.

    Minimises the unigram entropy of the emitted label stream among all
    per-vertex bijections, which is what symbol-by-symbol coders care
    about.

    Parameters
    ----------
    network : RoadNetwork

    Attributes
    ----------
    vertex_orders_ : tuple of ndarray
        Per vertex, out-edges from label 0 upward.
    label_of_edge_ : ndarray
        The label every edge receives at its tail vertex.
    alphabet_size_ : int
        Upper bound (max out-degree) on emitted label values plus one.
    """

    kind = "mel"

    def _fit_rankings(self, net: RoadNetwork, corpus: TrajectoryCorpus):
        freq = corpus.edge_freq
        orders = []
        label_of_edge = np.zeros(net.edge_count, dtype=np.int16)
        for v in range(net.vertex_count):
            adj = net.out_adjacency[v]
            ranked = _rank_by_count(adj.astype(np.int64), freq[adj])
            orders.append(ranked.astype(np.int32))
            label_of_edge[ranked] = np.arange(len(ranked), dtype=np.int16)
        self.vertex_orders_ = tuple(orders)
        self.label_of_edge_ = label_of_edge

    def _encode_labels(self, t):
        return self.label_of_edge_[t[1:]].astype(np.int16)

    def _decode_labels(self, lt):
        net = self.network
        out = np.empty(len(lt.labels) + 1, dtype=np.int32)
        out[0] = lt.first_edge
        cur = lt.first_edge
        for i, lab in enumerate(np.asarray(lt.labels, dtype=np.int64)):
            order = self.vertex_orders_[net.heads[cur]]
            if lab < 0 or lab >= len(order):
                raise LabelingError(
                    f"label {int(lab)} out of range for context with "
                    f"{len(order)} admissible edges (position {i})"
                )
            cur = int(order[lab])
            out[i + 1] = cur
        return out

    def encode_corpus(self, corpus: TrajectoryCorpus):
        """Vectorised bulk encode: (first_edges, flat_labels, offsets)."""
        self._check_fitted()
        firsts = corpus.flat[corpus.offsets[:-1]]
        keep = np.ones(max(len(corpus.flat) - 1, 0), dtype=bool)
        keep[corpus.offsets[1:-1] - 1] = False
        flat_labels = self.label_of_edge_[corpus.flat[1:][keep]]
        label_offsets = corpus.offsets - np.arange(len(corpus.offsets))
        return firsts, flat_labels, label_offsets

    def _rankings_dict(self):
        return {"vertex_orders": [o.tolist() for o in self.vertex_orders_]}

    def _load_rankings(self, d):
        self.vertex_orders_ = tuple(
            np.asarray(o, dtype=np.int32) for o in d["vertex_orders"]
        )
        label_of_edge = np.zeros(self.network.edge_count, dtype=np.int16)
        for order in self.vertex_orders_:
            label_of_edge[order] = np.arange(len(order), dtype=np.int16)
        self.label_of_edge_ = label_of_edge


class RelativeMovementLabeling(_LabelerBase):
    """Previous-edge-context labeling ranked by bigram frequency.

    For each edge e, the out-edges of head(e) are ranked by how often they
    follow e in the corpus.  Edges never observed as a predecessor fall
    back to the vertex ranking of head(e), so encoding is total even on
    held-out data.

    Attributes
    ----------
    edge_orders_ : tuple of ndarray
        Per context edge, admissible successors from label 0 upward.
    alphabet_size_ : int
    """

    kind = "rml"

    def _fit_rankings(self, net: RoadNetwork, corpus: TrajectoryCorpus):
        mel = MinimalEntropyLabeling(net).fit(corpus)
        self._vertex_orders = mel.vertex_orders_
        orders = []
        for e in range(net.edge_count):
            adj = net.out_adjacency[net.heads[e]]
            counts = np.array(
                [corpus.bigram_freq.get((e, int(x)), 0) for x in adj], dtype=np.int64
            )
            if counts.sum() == 0:
                orders.append(np.asarray(self._vertex_orders[net.heads[e]], dtype=np.int32))
            else:
                orders.append(_rank_by_count(adj.astype(np.int64), counts).astype(np.int32))
        self.edge_orders_ = tuple(orders)
        self._build_tables(net)

    def _build_tables(self, net: RoadNetwork):
        d = net.max_out_degree
        slots = net.adjacency_slot_of_edge()
        rank = np.full((net.edge_count, max(d, 1)), -1, dtype=np.int16)
        decode = np.full((net.edge_count, max(d, 1)), -1, dtype=np.int32)
        for e, order in enumerate(self.edge_orders_):
            for r, nxt in enumerate(order):
                rank[e, slots[nxt]] = r
                decode[e, r] = nxt
        self._rank_table = rank
        self._decode_table = decode
        self._slots = slots

    def _encode_labels(self, t):
        return self._rank_table[t[:-1], self._slots[t[1:]]]

    def _decode_labels(self, lt):
        out = np.empty(len(lt.labels) + 1, dtype=np.int32)
        out[0] = lt.first_edge
        cur = lt.first_edge
        for i, lab in enumerate(np.asarray(lt.labels, dtype=np.int64)):
            order = self.edge_orders_[cur]
            if lab < 0 or lab >= len(order):
                raise LabelingError(
                    f"label {int(lab)} out of range for context with "
                    f"{len(order)} admissible edges (position {i})"
                )
            cur = int(order[lab])
            out[i + 1] = cur
        return out

    def encode_corpus(self, corpus: TrajectoryCorpus):
        """Vectorised bulk encode: (first_edges, flat_labels, offsets)."""
        self._check_fitted()
        firsts = corpus.flat[corpus.offsets[:-1]]
        keep = np.ones(max(len(corpus.flat) - 1, 0), dtype=bool)
        keep[corpus.offsets[1:-1] - 1] = False
        prev = corpus.flat[:-1][keep]
        nxt = corpus.flat[1:][keep]
        flat_labels = self._rank_table[prev, self._slots[nxt]]
        label_offsets = corpus.offsets - np.arange(len(corpus.offsets))
        return firsts, flat_labels, label_offsets

    def _rankings_dict(self):
        return {"edge_orders": [o.tolist() for o in self.edge_orders_]}

    def _load_rankings(self, d):
        self.edge_orders_ = tuple(np.asarray(o, dtype=np.int32) for o in d["edge_orders"])
        self._build_tables(self.network)


class ContextTreeLabeling(_LabelerBase):
    """k-gram-context labeling ranked by (k+1)-gram frequency.

    Contexts are the last k edges.  A context with no observed successor
    mass falls back to the (k-1)-edge ranking, recursively down to the
    previous-edge and finally the vertex ranking.  Histories longer than
    about 3 edges are usually too sparse to help; fitting warns beyond
    that.

    Parameters
    ----------
    network : RoadNetwork
    k : int
        Context length in edges, at least 2.
    """

    kind = "ctx"

    def __init__(self, network=None, k=2):
        super().__init__(network)
        self.k = k

    def fit(self, X, y=None):
        if self.k < 2:
            raise ConfigurationError("ContextTreeLabeling requires k >= 2")
        if self.k > 3:
            import warnings

            warnings.warn(
                f"k={self.k} contexts are likely too sparse to rank reliably",
                stacklevel=2,
            )
        return super().fit(X, y)

    def _count_kgrams(self, corpus: TrajectoryCorpus, k: int) -> dict:
        """Counts of every k-edge window that lies inside one trajectory."""
        e = corpus.edge_count
        total = len(corpus.flat)
        if total < k:
            return {}
        if e**k > 2**62:
            counts: dict = {}
            for traj in corpus:
                t = tuple(int(x) for x in traj)
                for i in range(len(t) - k + 1):
                    w = t[i : i + k]
                    counts[w] = counts.get(w, 0) + 1
            return counts
        lengths = corpus.lengths
        window_starts = []
        for idx in range(len(corpus)):
            if lengths[idx] >= k:
                window_starts.append(
                    np.arange(corpus.offsets[idx], corpus.offsets[idx + 1] - k + 1)
                )
        if not window_starts:
            return {}
        starts = np.concatenate(window_starts)
        keys = np.zeros(len(starts), dtype=np.int64)
        for j in range(k):
            keys = keys * e + corpus.flat[starts + j]
        uk, uc = np.unique(keys, return_counts=True)
        out = {}
        for key, c in zip(uk.tolist(), uc.tolist()):
            w = []
            for _ in range(k):
                w.append(key % e)
                key //= e
            out[tuple(reversed(w))] = int(c)
        return out

    def _fit_rankings(self, net: RoadNetwork, corpus: TrajectoryCorpus):
        if self.k == 2:
            self._fallback = RelativeMovementLabeling(net).fit(corpus)
        else:
            self._fallback = ContextTreeLabeling(net, self.k - 1).fit(corpus)
        succ = self._count_kgrams(corpus, self.k + 1)
        grouped: dict = {}
        for window, c in succ.items():
            grouped.setdefault(window[:-1], {})[window[-1]] = c
        contexts = {}
        for ctx, nxt_counts in grouped.items():
            adj = net.out_adjacency[net.heads[ctx[-1]]]
            counts = np.array([nxt_counts.get(int(x), 0) for x in adj], dtype=np.int64)
            contexts[ctx] = _rank_by_count(adj.astype(np.int64), counts).astype(np.int32)
        self.context_orders_ = contexts
        self._encode_maps = {
            ctx: {int(edge): r for r, edge in enumerate(order)}
            for ctx, order in contexts.items()
        }

    def _order_for(self, history: tuple) -> np.ndarray:
        """Ranking after the given edge history (len >= 1), with fallback."""
        if len(history) >= self.k:
            ctx = history[-self.k :]
            order = self.context_orders_.get(ctx)
            if order is not None:
                return order
        if isinstance(self._fallback, ContextTreeLabeling):
            return self._fallback._order_for(history)
        return self._fallback.edge_orders_[history[-1]]

    def _encode_labels(self, t):
        t_list = [int(x) for x in t]
        labels = np.empty(len(t_list) - 1, dtype=np.int16)
        for i in range(1, len(t_list)):
            order = self._order_for(tuple(t_list[max(0, i - self.k) : i]))
            hits = np.flatnonzero(order == t_list[i])
            if len(hits) == 0:
                raise LabelingError(f"edge at position {i} not admissible in context")
            labels[i - 1] = hits[0]
        return labels

    def _decode_labels(self, lt):
        out = [int(lt.first_edge)]
        for i, lab in enumerate(np.asarray(lt.labels, dtype=np.int64)):
            order = self._order_for(tuple(out[max(0, len(out) - self.k) :]))
            if lab < 0 or lab >= len(order):
                raise LabelingError(
                    f"label {int(lab)} out of range for context with "
                    f"{len(order)} admissible edges (position {i})"
                )
            out.append(int(order[lab]))
        return np.asarray(out, dtype=np.int32)

    def encode_corpus(self, corpus: TrajectoryCorpus):
        """Bulk encode; sequential per trajectory, fine at oracle scale."""
        self._check_fitted()
        firsts = corpus.flat[corpus.offsets[:-1]]
        chunks = [self._encode_labels(traj.astype(np.int64)) for traj in corpus]
        flat_labels = (
            np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int16)
        )
        label_offsets = corpus.offsets - np.arange(len(corpus.offsets))
        return firsts, flat_labels, label_offsets

    def _rankings_dict(self):
        return {
            "k": self.k,
            "context_orders": {
                ",".join(map(str, ctx)): order.tolist()
                for ctx, order in self.context_orders_.items()
            },
            "fallback": self._fallback._rankings_dict(),
        }

    def _load_rankings(self, d):
        self.context_orders_ = {
            tuple(int(x) for x in key.split(",")): np.asarray(order, dtype=np.int32)
            for key, order in d["context_orders"].items()
        }
        self._encode_maps = {
            ctx: {int(edge): r for r, edge in enumerate(order)}
            for ctx, order in self.context_orders_.items()
        }
        fb = d["fallback"]
        if "context_orders" in fb:
            self._fallback = ContextTreeLabeling(self.network, self.k - 1)
            self._fallback._load_rankings(fb)
            self._fallback.alphabet_size_ = self.network.max_out_degree
        else:
            self._fallback = RelativeMovementLabeling(self.network)
            self._fallback._load_rankings(fb)
            self._fallback.alphabet_size_ = self.network.max_out_degree


def make_labeler(scheme: str, network: RoadNetwork) -> _LabelerBase:
    """Build a labeler from a scheme spec: ``mel``, ``rml`` or ``ctx:k``."""
    if scheme == "mel":
        return MinimalEntropyLabeling(network)
    if scheme == "rml":
        return RelativeMovementLabeling(network)
    if scheme.startswith("ctx:"):
        try:
            k = int(scheme.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad context length in scheme {scheme!r}") from None
        return ContextTreeLabeling(network, k)
    raise ConfigurationError(f"unknown labeling scheme {scheme!r}")


def load_labeling(path, network: RoadNetwork) -> _LabelerBase:
    """Restore a fitted labeler from a scheme artifact."""
    with open(path, "r", encoding="utf-8") as fh:
        d = json.load(fh)
    if d.get("format") != SCHEME_FORMAT or d.get("version") != SCHEME_VERSION:
        raise ValidationError("unrecognised labeling artifact")
    if d["network"]["edges"] != network.edge_count or (
        d["network"]["vertices"] != network.vertex_count
    ):
        raise ValidationError("labeling artifact was fitted on a different network")
    kind = d["kind"]
    if kind == "mel":
        labeler = MinimalEntropyLabeling(network)
    elif kind == "rml":
        labeler = RelativeMovementLabeling(network)
    elif kind == "ctx":
        labeler = ContextTreeLabeling(network, int(d["k"]))
    else:
        raise ValidationError(f"unknown scheme kind {kind!r}")
    labeler._load_rankings(d)
    labeler.alphabet_size_ = int(d["alphabet_size"])
    return labeler
