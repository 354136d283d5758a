"""
Inference wrapper around a trained QEDACVC checkpoint
"""
import torch

from checkpoint import build_model, load_checkpoint
from errors import ConfigurationError
from models.qedacvc.model import frame_source, greedy_decode
from preprocessing.tokenizer import PAD_ID, detokenize, tokenize


class QuantumTranslator:
    """Greedy text-to-text translation with a QEDACVC model and its vocabulary"""

    def __init__(self, model, vocab, max_len=None):
        self.model = model
        self.vocab = vocab
        self.max_len = max_len or model.config.seq_len - 2
        self.model.eval()

    @classmethod
    def load_from_checkpoint(cls, checkpoint_path, max_len=None):
        """
        Load a translator from a .ckpt file written by the trainer

        Args:
            checkpoint_path: Path to best.ckpt / last.ckpt
            max_len: Maximum emitted tokens per sentence (default seq_len - 2)

        Returns:
            QuantumTranslator instance
        """
        ckpt = load_checkpoint(checkpoint_path)
        return cls(build_model(ckpt), ckpt.vocab, max_len)

    @property
    def languages(self):
        return self.vocab.languages

    def _check_language(self, language):
        if language not in self.vocab.languages:
            raise ConfigurationError(
                f"Unknown language tag '{language}' (model knows: {', '.join(self.vocab.languages)})"
            )

    def translate_batch(self, texts, source_lang, target_lang):
        """
        Translate several sentences in one batched greedy decode

        Args:
            texts: List of source sentences
            source_lang: Source language code
            target_lang: Target language code

        Returns:
            List of translated sentences
        """
        self._check_language(source_lang)
        self._check_language(target_lang)
        if not texts:
            return []
        if source_lang == target_lang:
            return list(texts)

        seq_len = self.model.config.seq_len
        tag = self.vocab.tag_id(target_lang)
        framed = [frame_source(self.vocab.encode(tokenize(t)), tag, seq_len) for t in texts]
        src = torch.full((len(framed), seq_len), PAD_ID, dtype=torch.long)
        for i, ids in enumerate(framed):
            src[i, :len(ids)] = torch.tensor(ids, dtype=torch.long)

        outputs = greedy_decode(self.model, src, torch.full((len(framed),), tag, dtype=torch.long), self.max_len)
        return [detokenize(self.vocab.decode(ids)) for ids in outputs]

    def translate(self, text, source_lang, target_lang):
        return self.translate_batch([text], source_lang, target_lang)[0]
