"""
Token accuracy from confusion counts and corpus BLEU.

Counting convention for the confusion counts, position by position over
unmasked tokens:
  - both sequences already terminated (EOS or later)  -> beta
  - tokens equal                                       -> alpha
  - tokens differ                                      -> upsilon and delta
"""
import math
from dataclasses import dataclass

import numpy as np
from sacrebleu.metrics import BLEU

from errors import EvaluationError, ShapeError
from preprocessing.tokenizer import EOS_ID, PAD_ID


@dataclass(frozen=True)
class ConfusionCounts:
    alpha: int = 0
    beta: int = 0
    upsilon: int = 0
    delta: int = 0

    def __add__(self, other):
        return ConfusionCounts(
            self.alpha + other.alpha,
            self.beta + other.beta,
            self.upsilon + other.upsilon,
            self.delta + other.delta,
        )

    @property
    def total(self):
        return self.alpha + self.beta + self.upsilon + self.delta


@dataclass(frozen=True)
class BleuReport:
    """
    Corpus BLEU breakdown.

    brevity_penalty lies in (0, 1] whenever some hypothesis has a token. With
    every hypothesis empty it is 0.0 and so is the score.
    """
    score: float
    n_gram_precisions: tuple
    brevity_penalty: float
    sys_len: int = 0
    ref_len: int = 0


def _terminated(tokens):
    ended = (tokens == EOS_ID) | (tokens == PAD_ID)
    return np.maximum.accumulate(ended, axis=-1)


def termination_mask(reference):
    """True at positions after the first EOS of each reference row."""
    reference = np.atleast_2d(np.asarray(reference))
    ended = np.maximum.accumulate(reference == EOS_ID, axis=-1)
    after = np.zeros_like(ended)
    after[:, 1:] = ended[:, :-1]
    return after | ((reference == PAD_ID) & ~ended)


def align(predicted, length):
    """Pad with PAD or cut a predicted id list to `length`."""
    predicted = list(predicted)[:length]
    return predicted + [PAD_ID] * (length - len(predicted))


def confusion_counts(predicted, reference, pad_mask=None):
    """
    Position-wise counts over aligned id sequences

    Args:
        predicted: (T,) or (B, T) predicted ids
        reference: same shape, reference ids
        pad_mask: same shape, True at excluded positions (None keeps all)

    Returns:
        ConfusionCounts
    """
    predicted = np.atleast_2d(np.asarray(predicted))
    reference = np.atleast_2d(np.asarray(reference))
    if predicted.shape != reference.shape:
        raise ShapeError(f"Prediction shape {predicted.shape} != reference shape {reference.shape}")
    keep = np.ones(reference.shape, dtype=bool)
    if pad_mask is not None:
        pad_mask = np.atleast_2d(np.asarray(pad_mask, dtype=bool))
        if pad_mask.shape != reference.shape:
            raise ShapeError(f"Mask shape {pad_mask.shape} != reference shape {reference.shape}")
        keep = ~pad_mask

    both_done = _terminated(predicted) & _terminated(reference) & keep
    open_positions = keep & ~both_done
    matches = (predicted == reference) & open_positions
    mismatches = open_positions & ~matches
    n_mismatch = int(mismatches.sum())
    return ConfusionCounts(
        alpha=int(matches.sum()),
        beta=int(both_done.sum()),
        upsilon=n_mismatch,
        delta=n_mismatch,
    )


def accuracy(counts):
    """(alpha + beta) / (alpha + beta + upsilon + delta)"""
    if counts.total <= 0:
        raise EvaluationError("Accuracy undefined: no evaluated positions")
    return (counts.alpha + counts.beta) / counts.total


def _as_line(sentence):
    return sentence if isinstance(sentence, str) else ' '.join(str(t) for t in sentence)


def bleu(candidates, references, max_n=4, smooth=False):
    """
    Corpus BLEU in [0, 1] with clipped n-gram precisions and brevity penalty

    Args:
        candidates: Token lists (or whitespace-joined strings)
        references: One reference per candidate, same form
        max_n: Highest n-gram order
        smooth: Exponential smoothing of zero counts

    Returns:
        BleuReport
    """
    if len(candidates) != len(references):
        raise ShapeError(f"{len(candidates)} candidates but {len(references)} references")
    if not candidates:
        raise EvaluationError("BLEU undefined on an empty corpus")

    metric = BLEU(
        tokenize='none',
        smooth_method='exp' if smooth else 'none',
        max_ngram_order=max_n,
        force=True,
    )
    result = metric.corpus_score([_as_line(c) for c in candidates], [[_as_line(r) for r in references]])

    if smooth:
        precisions = tuple(p / 100.0 for p in result.precisions)
        score = result.score / 100.0
    else:
        precisions = tuple(c / t if t > 0 else 0.0 for c, t in zip(result.counts, result.totals))
        if min(precisions) > 0:
            score = result.bp * math.exp(sum(math.log(p) for p in precisions) / max_n)
        else:
            score = 0.0
    return BleuReport(
        score=min(max(score, 0.0), 1.0),
        n_gram_precisions=precisions,
        brevity_penalty=float(result.bp),
        sys_len=int(result.sys_len),
        ref_len=int(result.ref_len),
    )
