"""
Synthetic parallel corpora for desk-scale runs.

Tasks:
  copy     every language carries the same sentence
  reverse  languages at odd columns carry the sentence reversed
  lexicon  each language renames every concept through its own fixed bijection
"""
from pathlib import Path

import numpy as np

from errors import ConfigurationError


TASKS = ('copy', 'reverse', 'lexicon')


def make_lexicon(languages, vocab_size, seed=0):
    """language -> permutation array mapping concept index to that language's word index."""
    rng = np.random.default_rng(seed + 1)
    return {lang: rng.permutation(vocab_size) for lang in languages}


def word(language, index, task):
    # Digits only after the prefix so the tokenizer keeps each word whole
    return f"{language}{index}" if task == 'lexicon' else f"w{index}"


def synth_rows(task, n_pairs, vocab_size, max_len, seed=0, languages=('en', 'fr')):
    """
    Generate aligned sentence rows

    Returns:
        List of tuples, one sentence per language
    """
    if task not in TASKS:
        raise ConfigurationError(f"Unknown synthetic task '{task}' (expected one of {', '.join(TASKS)})")
    if vocab_size < 4:
        raise ConfigurationError(f"vocab_size must be >= 4, got {vocab_size}")
    if max_len < 1 or n_pairs < 0:
        raise ConfigurationError(f"max_len must be >= 1 and n_pairs >= 0, got {max_len}, {n_pairs}")
    if len(languages) < 2 or len(set(languages)) != len(languages):
        raise ConfigurationError(f"Need at least two distinct languages, got {languages}")

    rng = np.random.default_rng(seed)
    lexicon = make_lexicon(languages, vocab_size, seed) if task == 'lexicon' else None

    rows = []
    for _ in range(n_pairs):
        length = int(rng.integers(1, max_len + 1))
        concepts = rng.integers(0, vocab_size, size=length)
        row = []
        for col, lang in enumerate(languages):
            seq = concepts[::-1] if task == 'reverse' and col % 2 == 1 else concepts
            if lexicon is not None:
                seq = lexicon[lang][seq]
            row.append(' '.join(word(lang, int(i), task) for i in seq))
        rows.append(tuple(row))
    return rows


def synth_corpus(task, n_pairs, vocab_size, max_len, seed=0, languages=('en', 'fr'), path=None):
    """Generate a corpus and optionally write it as a multi-parallel TSV file."""
    rows = synth_rows(task, n_pairs, vocab_size, max_len, seed, languages)
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write('\t'.join(languages) + '\n')
            for row in rows:
                f.write('\t'.join(row) + '\n')
        print(f"✓ {task}: {n_pairs} rows x {len(languages)} languages → {path}")
    return rows


if __name__ == '__main__':
    import argparse

    parser = argparse.ArgumentParser()
    parser.add_argument('--task', choices=TASKS, default='copy')
    parser.add_argument('--pairs', type=int, default=280)
    parser.add_argument('--vocab-size', type=int, default=12)
    parser.add_argument('--max-len', type=int, default=6)
    parser.add_argument('--languages', default='en,fr')
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--output', default='data/synthetic/copy.tsv')
    args = parser.parse_args()

    synth_corpus(args.task, args.pairs, args.vocab_size, args.max_len, args.seed,
                 tuple(args.languages.split(',')), args.output)
