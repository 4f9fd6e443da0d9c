"""Build long coder inputs from trajectory data.

Two constructions are provided.  The fixed-length one concatenates the
label sequences of same-length trips in a seeded random order with no
separators; because every block has the same length the stream splits back
into the original multiset, nothing is lost, and its per-symbol entropy is
the per-trip entropy divided by the block length.  The terminator variant
joins trips of any length with a reserved end symbol; it exists for
comparison because the extra symbol and the length mixing push its entropy
above that of the trips themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

DEFAULT_MAX_SYMBOLS = 10_000_000


@dataclass(frozen=True, eq=False)
class ConstructedSequence:
    """Separator-free concatenation of equal-length label blocks."""

    group_n: int
    symbols: np.ndarray
    alphabet_size: int
    source_count: int
    shuffle_seed: tuple
    with_replacement: bool

    def split_blocks(self) -> np.ndarray:
        """Recover the individual label blocks, one row per source trip."""
        return self.symbols.reshape(-1, self.group_n - 1)


@dataclass(frozen=True, eq=False)
class TerminatedSequence:
    """Blocks of any length joined by a reserved terminator symbol."""

    symbols: np.ndarray
    alphabet_size: int
    terminator: int
    source_count: int
    shuffle_seed: tuple


def _symbol_dtype(alphabet_size: int):
    return np.min_scalar_type(max(alphabet_size - 1, 1))


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(list(seed) if isinstance(seed, tuple) else seed)


def build_group_sequence(
    blocks: np.ndarray,
    group_n: int,
    alphabet_size: int,
    seed,
    *,
    with_replacement: bool = False,
    target_symbols: int | None = None,
    max_symbols: int = DEFAULT_MAX_SYMBOLS,
) -> ConstructedSequence:
    """Concatenate the (count, n-1) label block matrix in shuffled order.

    Without replacement the result is a permutation of the input blocks,
    preserving the empirical distribution exactly.  With replacement,
    blocks are drawn i.i.d. until at least ``target_symbols`` symbols are
    emitted, which lets short corpora feed arbitrarily long coder inputs.
    Deterministic for a given seed.
    """
    blocks = np.asarray(blocks)
    if group_n < 2:
        raise ConfigurationError(f"length-{group_n} trips carry no labels")
    if blocks.ndim != 2 or blocks.shape[1] != group_n - 1:
        raise ConfigurationError(
            f"expected block matrix with {group_n - 1} columns, got {blocks.shape}"
        )
    count = blocks.shape[0]
    if count == 0:
        raise ConfigurationError("empty length group")
    block_len = group_n - 1
    rng = _rng(seed)
    if with_replacement:
        if target_symbols is None:
            target_symbols = count * block_len
        if target_symbols > max_symbols:
            raise ConfigurationError(
                f"target of {target_symbols} symbols exceeds the "
                f"{max_symbols} per-group cap"
            )
        draws = max(1, -(-int(target_symbols) // block_len))
        order = rng.integers(0, count, size=draws)
    else:
        if target_symbols is not None and target_symbols > count * block_len:
            raise ConfigurationError(
                "target_symbols exceeds available symbols; enable with_replacement"
            )
        if count * block_len > max_symbols:
            raise ConfigurationError(
                f"group holds {count * block_len} symbols, above the "
                f"{max_symbols} cap; raise max_symbols or subsample"
            )
        order = rng.permutation(count)
    symbols = np.ascontiguousarray(
        blocks[order].reshape(-1), dtype=_symbol_dtype(alphabet_size)
    )
    return ConstructedSequence(
        group_n=group_n,
        symbols=symbols,
        alphabet_size=alphabet_size,
        source_count=len(order),
        shuffle_seed=seed if isinstance(seed, tuple) else (seed,),
        with_replacement=with_replacement,
    )


def build_terminated_sequence(
    flat: np.ndarray,
    offsets: np.ndarray,
    alphabet_size: int,
    seed,
) -> TerminatedSequence:
    """Join variable-length blocks with a fresh terminator symbol.

    ``flat``/``offsets`` is any ragged symbol store (label streams or raw
    edge sequences).  The terminator is ``alphabet_size`` itself, so the
    output alphabet has one extra symbol; every block is followed by
    exactly one terminator.  Block order is shuffled with the seeded
    generator.
    """
    flat = np.asarray(flat)
    offsets = np.asarray(offsets, dtype=np.int64)
    count = len(offsets) - 1
    if count < 1:
        raise ConfigurationError("nothing to construct from")
    terminator = alphabet_size
    out_alphabet = alphabet_size + 1
    rng = _rng(seed)
    order = rng.permutation(count)

    lengths = np.diff(offsets)
    shuf_lengths = lengths[order]
    total = int(lengths.sum()) + count
    out = np.full(total, terminator, dtype=_symbol_dtype(out_alphabet))

    # target slot of each source symbol: its position within the shuffled
    # concatenation plus one slot per terminator already emitted
    out_starts = np.cumsum(shuf_lengths + 1) - (shuf_lengths + 1)
    src = np.repeat(offsets[order], shuf_lengths) + _ragged_arange(shuf_lengths)
    dst = np.repeat(out_starts, shuf_lengths) + _ragged_arange(shuf_lengths)
    out[dst] = flat[src]
    return TerminatedSequence(
        symbols=out,
        alphabet_size=out_alphabet,
        terminator=terminator,
        source_count=count,
        shuffle_seed=seed if isinstance(seed, tuple) else (seed,),
    )


def _ragged_arange(lengths: np.ndarray) -> np.ndarray:
    # [0..l0-1, 0..l1-1, ...] without a Python loop
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    starts = np.cumsum(lengths) - lengths
    return np.arange(total, dtype=np.int64) - np.repeat(starts, lengths)
