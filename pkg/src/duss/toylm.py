"""Order-n Markov token model with additive smoothing.

A desk-scale autoregressive logit source for the sampler: unconditional over
token streams, with a stop id appended to every training utterance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .codec import TokenSequence
from .errors import ValidationError

Context = Tuple[int, ...]


@dataclass
class NgramModel:
    """Counts over contexts of length < order, smoothed with alpha.

    vocab_size includes the stop id (vocab_size - 1).
    """

    order: int
    vocab_size: int
    alpha: float
    counts: Dict[Context, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.order < 1:
            raise ValidationError(f"order must be >= 1, got {self.order}")
        if self.vocab_size < 2:
            raise ValidationError(f"vocab_size must be >= 2, got {self.vocab_size}")
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be positive, got {self.alpha}")

    @property
    def stop_id(self) -> int:
        return self.vocab_size - 1

    def __call__(self, context: Sequence[int]) -> np.ndarray:
        return logits(self, context)


def train_ngram(corpora: Sequence[TokenSequence], n: int = 3, alpha: float = 0.1,
                vocab_size: Optional[int] = None) -> NgramModel:
    """Accumulate context counts over token corpora.

    Every stage stream of every sequence counts as one utterance, with the
    stop id appended. All corpora must share the same token vocabulary;
    vocab_size (V + 1, including stop) may be given explicitly to train on
    an empty corpus.
    """
    if vocab_size is None:
        if not corpora:
            raise ValidationError("empty corpus requires an explicit vocab_size")
        vocab_size = corpora[0].vocab_size + 1
    model = NgramModel(order=n, vocab_size=vocab_size, alpha=alpha)
    for seq in corpora:
        if seq.vocab_size + 1 != vocab_size:
            raise ValidationError(
                f"vocabulary mismatch: sequence has V={seq.vocab_size}, "
                f"model expects V={vocab_size - 1}")
        for stream in seq.tokens:
            utterance = list(int(t) for t in stream) + [model.stop_id]
            _count_stream(model, utterance)
    return model


def _count_stream(model: NgramModel, utterance: List[int]) -> None:
    counts = model.counts
    vocab = model.vocab_size
    for i, token in enumerate(utterance):
        for length in range(min(model.order - 1, i) + 1):
            ctx = tuple(utterance[i - length:i])
            row = counts.get(ctx)
            if row is None:
                row = np.zeros(vocab, dtype=np.int64)
                counts[ctx] = row
            row[token] += 1


def logits(model: NgramModel, context: Sequence[int]) -> np.ndarray:
    """Smoothed log-probabilities for the longest stored suffix of context.

    Backs off to shorter suffixes down to the empty context; a context never
    seen at any order yields uniform logits. exp(logits) always sums to 1.
    """
    context = [int(t) for t in context]
    for token in context:
        if not (0 <= token < model.vocab_size):
            raise ValidationError(f"context token {token} outside vocabulary")
    limit = min(model.order - 1, len(context))
    for length in range(limit, -1, -1):
        key = tuple(context[len(context) - length:])
        row = model.counts.get(key)
        if row is not None:
            smoothed = row + model.alpha
            return np.log(smoothed / smoothed.sum())
    return np.full(model.vocab_size, -np.log(model.vocab_size))
