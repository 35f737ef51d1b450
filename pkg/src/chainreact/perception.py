"""Noisy, temporally filtered estimation of the logical state.

Each tick the pipeline takes the ground-truth logical state, flips every
atom independently with its predicate's flip probability, pushes the noisy
snapshot into a sliding window, and returns the per-atom majority vote over
the window.  With window size 3 and flip probability p the per-atom error
rate drops from p to p^2 (3 - 2p).  Flip probabilities of zero make the
pipeline an exact oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .logic import LogicalState, Vocabulary

DEFAULT_WINDOW = 3


class EmptyWindowError(RuntimeError):
    """The majority filter needs at least one buffered estimate."""


@dataclass(frozen=True)
class NoiseModel:
    """Per-predicate Bernoulli flip probabilities, all below 0.5.

    At or above 0.5 a majority filter amplifies rather than suppresses
    noise, so such models are rejected outright.
    """

    default_flip: float = 0.0
    per_predicate_flip: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, p in [("default_flip", self.default_flip)] + list(
            self.per_predicate_flip.items()
        ):
            if not 0.0 <= p < 0.5:
                raise ValueError(
                    f"flip probability for {name} must be in [0, 0.5), got {p}"
                )

    def flip_vector(self, vocab: Vocabulary) -> np.ndarray:
        return np.array(
            [
                self.per_predicate_flip.get(a.predicate.name, self.default_flip)
                for a in vocab.atoms
            ],
            dtype=float,
        )

    @property
    def is_oracle(self) -> bool:
        return self.default_flip == 0.0 and not any(self.per_predicate_flip.values())


def _mask_to_bits(mask: int, n: int) -> np.ndarray:
    nbytes = (n + 7) // 8
    raw = np.frombuffer(mask.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def _bits_to_mask(bits: np.ndarray) -> int:
    packed = np.packbits(bits.astype(np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


class EstimatorWindow:
    """Last-N buffer of instantaneous estimates, oldest evicted first."""

    def __init__(self, capacity: int = DEFAULT_WINDOW):
        if capacity < 1:
            raise ValueError("window capacity must be at least 1")
        self.capacity = capacity
        self._buffer: list[np.ndarray] = []

    def __len__(self) -> int:
        return len(self._buffer)

    def push(self, bits: np.ndarray) -> None:
        self._buffer.append(bits)
        if len(self._buffer) > self.capacity:
            self._buffer.pop(0)

    def majority_bits(self) -> np.ndarray:
        """Atoms true in strictly more than half of the buffered estimates;
        ties resolve to false."""
        if not self._buffer:
            raise EmptyWindowError("no estimates buffered yet")
        counts = np.sum(self._buffer, axis=0)
        return counts * 2 > len(self._buffer)

    def clear(self) -> None:
        self._buffer = []


def observe(
    truth: LogicalState, flip_probs: np.ndarray, rng: np.random.Generator
) -> LogicalState:
    """One noisy snapshot: every atom's truth value flips independently."""
    n = len(truth.vocabulary)
    bits = _mask_to_bits(truth.mask, n)
    flips = rng.random(n) < flip_probs
    return LogicalState(truth.vocabulary, _bits_to_mask(bits ^ flips))


def filter_window(window: EstimatorWindow, vocab: Vocabulary) -> LogicalState:
    """Majority vote over the buffered snapshots."""
    return LogicalState(vocab, _bits_to_mask(window.majority_bits()))


class PerceptionPipeline:
    """observe -> window -> majority filter, one instance per trial."""

    def __init__(
        self,
        vocab: Vocabulary,
        noise: NoiseModel | None = None,
        window: int = DEFAULT_WINDOW,
        rng: np.random.Generator | None = None,
    ):
        self.vocab = vocab
        self.noise = noise or NoiseModel()
        self.window = EstimatorWindow(window)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self._flip_probs = self.noise.flip_vector(vocab)

    def estimate(self, truth: LogicalState) -> LogicalState:
        """Push a noisy observation of ``truth`` and return the filtered
        estimate of the current logical state.

        With an all-zero noise model the pipeline is a true oracle: the
        estimate equals the ground truth at every tick, with no filter lag
        and no randomness consumed.
        """
        if self.noise.is_oracle:
            return truth
        n = len(self.vocab)
        bits = _mask_to_bits(truth.mask, n)
        flips = self.rng.random(n) < self._flip_probs
        self.window.push(bits ^ flips)
        return LogicalState(self.vocab, _bits_to_mask(self.window.majority_bits()))


def majority_error_rate(p: float, window: int = DEFAULT_WINDOW) -> float:
    """Probability that the majority over ``window`` i.i.d. flips is wrong.

    For window 3 this is p^2 (3 - 2p).  Ties (even windows) count as
    errors for a true atom, matching the ties-to-false filter on the
    majority boundary; the closed form here assumes an odd window.
    """
    need = window // 2 + 1
    return sum(
        math.comb(window, k) * p**k * (1 - p) ** (window - k)
        for k in range(need, window + 1)
    )
