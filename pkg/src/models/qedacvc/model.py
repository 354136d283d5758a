"""
QEDACVC hybrid quantum-classical encoder-decoder
Embeddings -> quantum encoder -> quantum decoder -> tied output projection
"""
import math
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np
import torch
import torch.nn as nn

from errors import DecodingError, ShapeError, VocabularyError
from models.qedacvc.modules import (
    QuantumAttention,
    QuantumBlock,
    QuantumFeatureExtractor,
    QuantumVariational,
    UniformAttention,
)
from preprocessing.tokenizer import EOS_ID, PAD_ID, SOS_ID


PROB_FLOOR = 1e-12


@dataclass
class LossRecord:
    """Cross-entropy over target positions; value is the sum over unmasked tokens."""
    value: float
    per_token: np.ndarray
    n_tokens: int
    n_clamped: int = 0

    @property
    def mean(self):
        return self.value / max(self.n_tokens, 1)


def cross_entropy(probs, references, pad_mask=None):
    """
    -sum_q E_q · log D_q over unmasked positions

    Args:
        probs: (..., T, V) predicted distributions D_q
        references: (..., T) token ids or (..., T, V) one-hot E_q
        pad_mask: (..., T) bool, True at excluded positions

    Returns:
        (per-token losses with masked positions zeroed, number of clamped probabilities)
    """
    if references.dim() == probs.dim() - 1:
        references = torch.nn.functional.one_hot(references.long(), probs.shape[-1]).to(probs.dtype)
    if references.shape != probs.shape:
        raise ShapeError(f"References {tuple(references.shape)} do not match predictions {tuple(probs.shape)}")
    if pad_mask is None:
        pad_mask = torch.zeros(probs.shape[:-1], dtype=torch.bool, device=probs.device)

    per_token = -(references * torch.log(probs.clamp_min(PROB_FLOOR))).sum(dim=-1)
    per_token = per_token.masked_fill(pad_mask, 0.0)
    at_reference = (references * probs).sum(dim=-1)
    clamped = ((at_reference < PROB_FLOOR) & ~pad_mask).sum().item()
    return per_token, int(clamped)


def sequence_loss(predictions, references, pad_mask=None):
    """LossRecord for one or more sequences of predicted distributions."""
    probs = torch.as_tensor(predictions, dtype=torch.float64)
    refs = torch.as_tensor(references)
    mask = None if pad_mask is None else torch.as_tensor(pad_mask, dtype=torch.bool)
    with torch.no_grad():
        per_token, clamped = cross_entropy(probs, refs, mask)
    n_tokens = int(per_token.numel() if mask is None else (~mask).sum().item())
    return LossRecord(
        value=float(per_token.sum().item()),
        per_token=per_token.numpy(),
        n_tokens=n_tokens,
        n_clamped=clamped,
    )


class QEDACVC(nn.Module):
    """
    Hybrid encoder-decoder translator

    Args:
        config: ModelConfig (vocab_size must be set)
    """

    def __init__(self, config):
        super().__init__()
        if config.vocab_size <= 0:
            raise VocabularyError("ModelConfig.vocab_size must be set before building the model")
        self.config = config
        d = config.embed_dim
        conv, attention, variational = config.layer_switches()
        scale, workers = config.init_scale, config.workers

        # Classical parameters: embedding table (tied with the output projection),
        # optional position rows, output bias
        self.embedding = nn.Embedding(config.vocab_size, d, dtype=torch.float64)
        nn.init.normal_(self.embedding.weight, std=1.0)
        if config.positional_embedding:
            self.positions = nn.Embedding(config.seq_len, d, dtype=torch.float64)
            nn.init.normal_(self.positions.weight, std=0.5)
        else:
            self.positions = None
        self.output_bias = nn.Parameter(torch.zeros(config.vocab_size, dtype=torch.float64))
        self.dropout = nn.Dropout(config.dropout_rate)

        stages = config.conv_pool_stages
        self.encoder_features = QuantumFeatureExtractor(d, stages, conv, scale, workers)
        self.decoder_features = QuantumFeatureExtractor(d, stages, conv, scale, workers)
        if attention:
            self.encoder_attention = QuantumAttention(d, causal=False, init_scale=scale, workers=workers)
            self.decoder_attention = QuantumAttention(d, causal=True, init_scale=scale, workers=workers)
            self.cross_attention = QuantumAttention(d, causal=False, init_scale=scale, workers=workers)
        else:
            self.encoder_attention = UniformAttention(causal=False)
            self.decoder_attention = UniformAttention(causal=True)
            self.cross_attention = UniformAttention(causal=False)
        self.variational = QuantumVariational(d, scale, workers) if variational else None

    def embed(self, tokens):
        """
        Table rows (+ position rows), dropout in training, squashed by π·tanh into [-π, π].

        Inputs are expected already framed and truncated (frame_source, encode_pair);
        a sequence longer than seq_len is a ShapeError rather than being cut here.
        """
        if tokens.numel() and (tokens.min() < 0 or tokens.max() >= self.config.vocab_size):
            raise VocabularyError(f"Token id outside vocabulary of {self.config.vocab_size}")
        if tokens.shape[-1] > self.config.seq_len:
            raise ShapeError(f"Sequence of {tokens.shape[-1]} exceeds seq_len {self.config.seq_len}")
        rows = self.embedding(tokens)
        if self.positions is not None:
            rows = rows + self.positions(torch.arange(tokens.shape[-1], device=tokens.device))
        return math.pi * torch.tanh(self.dropout(rows))

    def encode(self, src, src_mask=None):
        """(B, T) source ids -> (B, T, d) context vectors."""
        if src_mask is None:
            src_mask = src == PAD_ID
        features = self.encoder_features(self.embed(src))
        return self.encoder_attention(features, features, src_mask)

    def decode(self, context, src_mask, tgt_in, tgt_mask=None):
        """Teacher-forced decoder pass; logits for every prefix position (B, T, V)."""
        if tgt_in.shape[-1] == 0:
            raise DecodingError("Decoder prefix is empty")
        if tgt_mask is None:
            tgt_mask = tgt_in == PAD_ID
        features = self.decoder_features(self.embed(tgt_in))
        states = self.decoder_attention(features, features, tgt_mask)
        mixed = self.cross_attention(states, context, src_mask)
        head = self.variational(mixed) if self.variational is not None else mixed
        return head @ self.embedding.weight.T + self.output_bias

    def decode_step(self, context, src_mask, prefix):
        """Distribution D over the vocabulary for the token after `prefix`."""
        logits = self.decode(context, src_mask, prefix)
        return torch.softmax(logits[:, -1], dim=-1)

    def forward(self, src, tgt_in, tgt_out=None):
        """
        Forward pass

        Args:
            src: (B, T) framed source ids
            tgt_in: (B, T) decoder input ids
            tgt_out: (B, T) decoder labels (optional)

        Returns:
            SimpleNamespace with loss (mean per unmasked token), record, probs, logits
        """
        src_mask = src == PAD_ID
        context = self.encode(src, src_mask)
        logits = self.decode(context, src_mask, tgt_in)
        probs = torch.softmax(logits, dim=-1)

        loss = record = None
        if tgt_out is not None:
            out_mask = tgt_out == PAD_ID
            per_token, clamped = cross_entropy(probs, tgt_out, out_mask)
            n_tokens = int((~out_mask).sum().item())
            loss = per_token.sum() / max(n_tokens, 1)
            record = LossRecord(
                value=float(per_token.sum().item()),
                per_token=per_token.detach().cpu().numpy(),
                n_tokens=n_tokens,
                n_clamped=clamped,
            )
        return SimpleNamespace(loss=loss, record=record, probs=probs, logits=logits)

    def parameter_report(self):
        quantum = sum(
            p.numel() for m in self.modules() if isinstance(m, QuantumBlock)
            for p in m.parameters(recurse=False)
        )
        total = sum(p.numel() for p in self.parameters())
        return {'quantum': quantum, 'classical': total - quantum, 'total': total}

    def circuit_layers(self):
        """Number of quantum layer blocks in the stack (per-token extractors count conv, pool and dense)."""
        conv, attention, variational = self.config.layer_switches()
        per_extractor = self.config.conv_pool_stages * (2 if conv else 1) + 1
        return 2 * per_extractor + (3 if attention else 0) + (1 if variational else 0)


def frame_source(ids, tag_id, seq_len):
    """[SOS, <2tgt>, x..., EOS], content truncated to seq_len - 3."""
    return [SOS_ID, tag_id] + list(ids)[:max(seq_len - 3, 0)] + [EOS_ID]


@torch.no_grad()
def greedy_decode(model, src, tag_ids, max_len):
    """
    Batched greedy decoding

    Args:
        model: QEDACVC (put in eval mode by the caller)
        src: (B, T) framed, padded source ids
        tag_ids: (B,) target-language tag ids
        max_len: Maximum tokens emitted per sentence, EOS included

    Returns:
        List of id lists; each ends with EOS when one was emitted
    """
    # The prefix (SOS, tag, emitted tokens) must fit in seq_len positions
    max_len = min(max_len, model.config.seq_len - 1)
    src_mask = src == PAD_ID
    context = model.encode(src, src_mask)
    batch = src.shape[0]
    prefix = torch.stack([torch.full((batch,), SOS_ID, dtype=torch.long), tag_ids.long()], dim=1)
    finished = torch.zeros(batch, dtype=torch.bool)
    outputs = [[] for _ in range(batch)]

    for _ in range(max_len):
        probs = model.decode_step(context, src_mask, prefix)
        next_ids = probs.argmax(dim=-1)
        done_before = finished.clone()
        for b in range(batch):
            if not finished[b]:
                outputs[b].append(int(next_ids[b]))
                if next_ids[b] == EOS_ID:
                    finished[b] = True
        # Finished rows extend their prefix with PAD, which attention masks out
        next_ids = next_ids.masked_fill(done_before, PAD_ID)
        prefix = torch.cat([prefix, next_ids[:, None]], dim=1)
        if finished.all():
            break
    return outputs


def translate(model, source_ids, tag_id, max_len=None):
    """Greedy translation of one sentence of (unframed) source ids."""
    cfg = model.config
    framed = frame_source(source_ids, tag_id, cfg.seq_len)
    src = torch.tensor([framed], dtype=torch.long)
    was_training = model.training
    model.eval()
    try:
        out = greedy_decode(model, src, torch.tensor([tag_id]), max_len or cfg.seq_len)
    finally:
        model.train(was_training)
    return out[0]
