"""
Greedy-decode a corpus split and score it with token accuracy and BLEU.
"""
from dataclasses import dataclass, field

import pandas as pd
import torch
from tqdm import tqdm

from evaluation.metrics import ConfusionCounts, accuracy, align, bleu, confusion_counts, termination_mask
from models.qedacvc.model import greedy_decode
from preprocessing.dataset import make_batches
from preprocessing.tokenizer import EOS_ID


@dataclass
class EvaluationResult:
    loss: float
    accuracy: float
    bleu: float
    counts: ConfusionCounts
    per_language: pd.DataFrame
    hypotheses: list = field(default_factory=list)
    references: list = field(default_factory=list)


def reference_ids(pair, seq_len):
    return list(pair.target)[:max(seq_len - 3, 0)] + [EOS_ID]


def _score(predictions, references, smooth, vocab):
    counts = ConfusionCounts()
    for pred, ref in zip(predictions, references):
        aligned = align(pred, len(ref))
        counts = counts + confusion_counts(aligned, ref, termination_mask(ref))
    report = bleu([vocab.decode(p) for p in predictions], [vocab.decode(r) for r in references], smooth=smooth)
    return counts, report


def evaluate(model, pairs, vocab, batch_size=8, max_len=None, smooth=False, desc="Evaluating"):
    """
    Teacher-forced loss plus greedy-decoding metrics over a list of SentencePairs

    Returns:
        EvaluationResult with a per-target-language table
    """
    cfg = model.config
    max_len = max_len or cfg.seq_len - 2
    was_training = model.training
    model.eval()

    total_loss = 0.0
    total_tokens = 0
    predictions = []
    try:
        with torch.no_grad():
            for batch in tqdm(make_batches(pairs, vocab, batch_size, cfg.seq_len), desc=desc, leave=False):
                outputs = model(batch['src'], batch['tgt_in'], batch['tgt_out'])
                total_loss += outputs.record.value
                total_tokens += outputs.record.n_tokens
                predictions.extend(greedy_decode(model, batch['src'], batch['tag'], max_len))
    finally:
        model.train(was_training)

    references = [reference_ids(p, cfg.seq_len) for p in pairs]
    counts, report = _score(predictions, references, smooth, vocab)

    rows = []
    for lang in sorted({p.target_lang for p in pairs}):
        idx = [i for i, p in enumerate(pairs) if p.target_lang == lang]
        lang_counts, lang_report = _score([predictions[i] for i in idx], [references[i] for i in idx], smooth, vocab)
        rows.append({
            'language': lang,
            'accuracy': accuracy(lang_counts),
            'bleu': lang_report.score,
            'sentences': len(idx),
        })

    return EvaluationResult(
        loss=total_loss / max(total_tokens, 1),
        accuracy=accuracy(counts),
        bleu=report.score,
        counts=counts,
        per_language=pd.DataFrame(rows, columns=['language', 'accuracy', 'bleu', 'sentences']),
        hypotheses=[vocab.decode(p) for p in predictions],
        references=[vocab.decode(r) for r in references],
    )


def print_report(result, title="Evaluation"):
    print(f"\n{'='*50}")
    print(f"{title}: {result.accuracy*100:.2f}/{result.bleu*100:.2f} (accuracy/BLEU)")
    print(f"{'='*50}\n")

    print("Per-Language Scores:")
    print(f"{'Language':<15} {'Accuracy':<10} {'BLEU':<10} {'Samples'}")
    print("-" * 48)
    for row in result.per_language.itertuples():
        print(f"{row.language:<15} {row.accuracy*100:>6.2f}%    {row.bleu*100:>6.2f}    {row.sentences:>6}")
    print("-" * 48)
