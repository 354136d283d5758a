"""
Word-level tokenizer and the joint source/target vocabulary.
"""
import unicodedata
from collections import Counter

from errors import VocabularyError


PAD, SOS, EOS, UNK = '<pad>', '<sos>', '<eos>', '<unk>'
PAD_ID, SOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3
SPECIAL_TOKENS = (PAD, SOS, EOS, UNK)


def lang_tag(language):
    return f'<2{language}>'


def _is_punctuation(char):
    return unicodedata.category(char)[0] in ('P', 'S')


def tokenize(text):
    """
    Lowercase, split on whitespace, and detach every punctuation or symbol
    character as its own token. Scripts without case (Devanagari, Arabic)
    pass through unchanged.
    """
    tokens = []
    for chunk in text.lower().split():
        word = []
        for char in chunk:
            if _is_punctuation(char):
                if word:
                    tokens.append(''.join(word))
                    word = []
                tokens.append(char)
            else:
                word.append(char)
        if word:
            tokens.append(''.join(word))
    return tokens


def detokenize(tokens):
    return ' '.join(tokens)


class Vocab:
    """
    token <-> id maps with reserved ids: PAD 0, SOS 1, EOS 2, UNK 3, then one
    language tag per configured language, then corpus tokens.
    """

    def __init__(self, tokens=(), languages=()):
        self.languages = tuple(languages)
        self.id_to_token = list(SPECIAL_TOKENS) + [lang_tag(l) for l in self.languages] + list(tokens)
        self.token_to_id = {}
        for i, token in enumerate(self.id_to_token):
            if token in self.token_to_id:
                raise VocabularyError(f"Duplicate vocabulary entry {token!r}")
            self.token_to_id[token] = i

    def __len__(self):
        return len(self.id_to_token)

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.to_dict() == other.to_dict()

    @property
    def n_reserved(self):
        return len(SPECIAL_TOKENS) + len(self.languages)

    def tag_id(self, language):
        if language not in self.languages:
            raise VocabularyError(
                f"Unknown language tag '{language}' (known: {', '.join(self.languages) or 'none'})"
            )
        return self.token_to_id[lang_tag(language)]

    def encode(self, tokens):
        return [self.token_to_id.get(t, UNK_ID) for t in tokens]

    def decode(self, ids):
        """Tokens up to the first EOS, with PAD/SOS and language tags removed."""
        out = []
        for i in ids:
            i = int(i)
            if i == EOS_ID:
                break
            if i < 0 or i >= len(self):
                raise VocabularyError(f"Token id {i} outside vocabulary of {len(self)}")
            if i == UNK_ID:
                out.append(UNK)
            elif i >= self.n_reserved:
                out.append(self.id_to_token[i])
        return out

    def to_dict(self):
        return {
            'languages': list(self.languages),
            'tokens': self.id_to_token[self.n_reserved:],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(tokens=data['tokens'], languages=data['languages'])


def build_vocab(lines, min_freq=1, languages=()):
    """
    Build a Vocab from corpus lines

    Args:
        lines: Iterable of raw strings or token lists
        min_freq: Tokens seen fewer times map to UNK
        languages: Languages that get a tag token

    Returns:
        Vocab with tokens in descending frequency, ties broken lexicographically
    """
    if min_freq < 1:
        raise VocabularyError(f"min_freq must be >= 1, got {min_freq}")
    counter = Counter()
    n_lines = 0
    for line in lines:
        n_lines += 1
        counter.update(tokenize(line) if isinstance(line, str) else line)
    if n_lines == 0 or not counter:
        raise VocabularyError("Cannot build a vocabulary from an empty corpus")

    reserved = set(SPECIAL_TOKENS) | {lang_tag(l) for l in languages}
    kept = [t for t, c in counter.items() if c >= min_freq and t not in reserved]
    kept.sort(key=lambda t: (-counter[t], t))
    return Vocab(tokens=kept, languages=languages)
