import torch
from torch.utils.data import DataLoader, Dataset

from models.qedacvc.model import frame_source
from preprocessing.tokenizer import EOS_ID, PAD_ID, SOS_ID


def _pad(ids, seq_len):
    return list(ids) + [PAD_ID] * (seq_len - len(ids))


def encode_pair(pair, vocab, seq_len):
    """
    Framed, padded id sequences for one sentence pair

    source:  [SOS, <2tgt>, x..., EOS]
    tgt_in:  [SOS, <2tgt>, y...]
    tgt_out: [PAD, y..., EOS]
    Content is truncated to seq_len - 3 tokens so the framing always fits.
    """
    tag = vocab.tag_id(pair.target_lang)
    target = list(pair.target)[:max(seq_len - 3, 0)]
    return {
        'src': torch.tensor(_pad(frame_source(pair.source, tag, seq_len), seq_len), dtype=torch.long),
        'tgt_in': torch.tensor(_pad([SOS_ID, tag] + target, seq_len), dtype=torch.long),
        'tgt_out': torch.tensor(_pad([PAD_ID] + target + [EOS_ID], seq_len), dtype=torch.long),
        'tag': torch.tensor(tag, dtype=torch.long),
        'target_lang': pair.target_lang,
    }


class TranslationDataset(Dataset):
    def __init__(self, pairs, vocab, seq_len):
        self.pairs = list(pairs)
        self.vocab = vocab
        self.seq_len = seq_len

    def __len__(self):
        return len(self.pairs)

    def __getitem__(self, idx):
        return encode_pair(self.pairs[idx], self.vocab, self.seq_len)


def make_batches(pairs, vocab, batch_size, seq_len):
    """Batches in corpus order; the last partial batch is kept."""
    loader = DataLoader(TranslationDataset(pairs, vocab, seq_len), batch_size=batch_size, shuffle=False)
    return list(loader)
