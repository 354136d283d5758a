"""
Parallel corpus loading and train/test/validation splitting.

Two input layouts are accepted:
  - TSV: a header line naming the languages (`en<TAB>fr[<TAB>de...]`), then
    one row of aligned sentences per line
  - Moses: `<prefix>.<lang>` plain-text files aligned by line number
"""
from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path

from sklearn.model_selection import train_test_split

from errors import CorpusFormatError
from models.qedacvc.config import DEFAULT_SPLIT_RATIOS
from preprocessing.tokenizer import build_vocab, tokenize


SPLIT_NAMES = ('train', 'test', 'val')


@dataclass(frozen=True)
class SentencePair:
    source: tuple
    target: tuple
    source_lang: str
    target_lang: str
    row: int


@dataclass(frozen=True)
class ParallelCorpus:
    """
    Tokenized sentence pairs with their joint vocabulary

    Splits are drawn over rows, so every direction taken from one row lands
    in the same split.
    """
    languages: tuple
    directions: tuple
    vocab: object
    splits: dict = field(default_factory=dict)

    def split(self, name):
        if name not in self.splits:
            raise CorpusFormatError(f"Unknown split '{name}' (expected one of {', '.join(SPLIT_NAMES)})")
        return self.splits[name]

    @property
    def pairs(self):
        return [p for name in SPLIT_NAMES for p in self.splits.get(name, ())]

    def sizes(self):
        return {name: len(self.splits.get(name, ())) for name in SPLIT_NAMES}


def _decode_lines(path):
    lines = []
    with open(path, 'rb') as f:
        for line_no, raw in enumerate(f, start=1):
            try:
                text = raw.decode('utf-8')
            except UnicodeDecodeError as exc:
                raise CorpusFormatError(f"{path}:{line_no}: not valid UTF-8 ({exc.reason})") from exc
            if line_no == 1:
                text = text.lstrip('\ufeff')
            lines.append(text.rstrip('\r\n'))
    return lines


def read_tsv(path):
    """
    Parse a multi-parallel TSV file

    Returns:
        (languages, rows) where each row is a tuple with one sentence per language
    """
    path = Path(path)
    if not path.exists():
        raise CorpusFormatError(f"Corpus file not found: {path}")
    lines = _decode_lines(path)
    if not lines:
        raise CorpusFormatError(f"{path}: empty file, expected a language header")

    languages = tuple(cell.strip() for cell in lines[0].split('\t'))
    if len(languages) < 2 or not all(languages):
        raise CorpusFormatError(f"{path}:1: header must name at least two languages, got {lines[0]!r}")
    if len(set(languages)) != len(languages):
        raise CorpusFormatError(f"{path}:1: duplicate language in header {lines[0]!r}")

    rows = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split('\t')
        if len(cells) != len(languages):
            raise CorpusFormatError(
                f"{path}:{line_no}: expected {len(languages)} tab-separated columns, got {len(cells)}"
            )
        rows.append(tuple(cell.strip() for cell in cells))
    return languages, rows


def read_moses(prefix, languages):
    """Aligned `<prefix>.<lang>` files -> (languages, rows)."""
    columns = []
    for lang in languages:
        path = Path(f"{prefix}.{lang}")
        if not path.exists():
            raise CorpusFormatError(f"Corpus file not found: {path}")
        columns.append(_decode_lines(path))
    lengths = {len(c) for c in columns}
    if len(lengths) != 1:
        raise CorpusFormatError(
            f"Moses files for {prefix} are not aligned: line counts {[len(c) for c in columns]}"
        )
    rows = [tuple(cell.strip() for cell in row) for row in zip(*columns) if any(c.strip() for c in row)]
    return tuple(languages), rows


def split_counts(n, ratios):
    """(train, test, val) sizes; test and validation are rounded, train takes the rest."""
    _, test_ratio, val_ratio = ratios
    n_test = int(round(n * test_ratio))
    n_val = int(round(n * val_ratio))
    n_val = min(n_val, n - n_test)
    return n - n_test - n_val, n_test, n_val


def _carve(indices, count, seed):
    if count == 0:
        return indices, []
    if count >= len(indices):
        return [], indices
    return train_test_split(indices, test_size=count, random_state=seed, shuffle=True)


def split_rows(n_rows, ratios=DEFAULT_SPLIT_RATIOS, seed=0):
    """Seeded row-index partition into train/test/val."""
    _, n_test, n_val = split_counts(n_rows, ratios)
    rest, test = _carve(list(range(n_rows)), n_test, seed)
    train, val = _carve(rest, n_val, seed)
    return {'train': list(train), 'test': list(test), 'val': list(val)}


def _directions(languages, source_lang, target_lang):
    for lang in (source_lang, target_lang):
        if lang is not None and lang not in languages:
            raise CorpusFormatError(f"Language '{lang}' not in corpus (available: {', '.join(languages)})")
    if source_lang is not None and source_lang == target_lang:
        raise CorpusFormatError(f"Source and target language are both '{source_lang}'")
    return tuple(
        (s, t) for s, t in permutations(languages, 2)
        if (source_lang is None or s == source_lang) and (target_lang is None or t == target_lang)
    )


def load_parallel(path, source_lang=None, target_lang=None, ratios=DEFAULT_SPLIT_RATIOS,
                  seed=0, min_freq=1, vocab=None):
    """
    Load, tokenize and split a parallel corpus

    Args:
        path: TSV file, or Moses prefix when `<path>.<lang>` files exist
        source_lang, target_lang: Restrict the directions; None means every ordered pair
        ratios: (train, test, val) fractions of rows
        seed: Shuffle seed for the split
        min_freq: Vocabulary frequency threshold
        vocab: Reuse an existing Vocab (e.g. from a checkpoint) instead of building one

    Returns:
        ParallelCorpus
    """
    path = Path(path)
    if path.is_file():
        languages, rows = read_tsv(path)
    elif source_lang and target_lang and Path(f"{path}.{source_lang}").exists():
        languages, rows = read_moses(path, (source_lang, target_lang))
    else:
        raise CorpusFormatError(f"Corpus not found: {path} (TSV file or Moses prefix with both languages)")
    if not rows:
        raise CorpusFormatError(f"{path}: no sentence rows after the header")

    directions = _directions(languages, source_lang, target_lang)
    tokenized = [tuple(tokenize(cell) for cell in row) for row in rows]
    if vocab is None:
        vocab = build_vocab((cell for row in tokenized for cell in row), min_freq=min_freq, languages=languages)
    else:
        missing = [l for l in languages if l not in vocab.languages]
        if missing:
            raise CorpusFormatError(f"Vocabulary has no tag for {', '.join(missing)}")

    col = {lang: i for i, lang in enumerate(languages)}
    splits = {}
    for name, indices in split_rows(len(rows), ratios, seed).items():
        splits[name] = tuple(
            SentencePair(
                source=tuple(vocab.encode(tokenized[r][col[s]])),
                target=tuple(vocab.encode(tokenized[r][col[t]])),
                source_lang=s,
                target_lang=t,
                row=r,
            )
            for r in indices
            for s, t in directions
        )
    return ParallelCorpus(languages=languages, directions=directions, vocab=vocab, splits=splits)
