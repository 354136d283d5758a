import math

import numpy as np
import pytest
import torch
from numpy.testing import assert_allclose
from pydantic import ValidationError

from errors import ConfigurationError, ShapeError, VocabularyError
from models.qedacvc.config import AblationMode, ModelConfig, load_config
from models.qedacvc.model import (
    PROB_FLOOR,
    QEDACVC,
    cross_entropy,
    frame_source,
    greedy_decode,
    sequence_loss,
    translate,
)
from models.qedacvc.modules import UniformAttention
from preprocessing.tokenizer import EOS_ID, PAD_ID, SOS_ID


def batch(vocab):
    tag = vocab.tag_id('fr')
    a, b, c = vocab.encode(['a', 'b', 'c'])
    src = torch.tensor([
        [SOS_ID, tag, a, b, EOS_ID, PAD_ID],
        [SOS_ID, tag, c, EOS_ID, PAD_ID, PAD_ID],
    ])
    tgt_in = torch.tensor([
        [SOS_ID, tag, a, b, PAD_ID, PAD_ID],
        [SOS_ID, tag, c, PAD_ID, PAD_ID, PAD_ID],
    ])
    tgt_out = torch.tensor([
        [PAD_ID, a, b, EOS_ID, PAD_ID, PAD_ID],
        [PAD_ID, c, EOS_ID, PAD_ID, PAD_ID, PAD_ID],
    ])
    return src, tgt_in, tgt_out


def test_forward_shapes_and_distributions(tiny_config, vocab):
    model = QEDACVC(tiny_config)
    src, tgt_in, tgt_out = batch(vocab)
    out = model(src, tgt_in, tgt_out)
    assert out.probs.shape == (2, 6, len(vocab))
    assert_allclose(out.probs.sum(-1).detach().numpy(), np.ones((2, 6)), atol=1e-12)
    assert math.isfinite(out.loss.item())
    assert out.record.n_tokens == 5


def test_backward_reaches_quantum_and_classical_parameters(tiny_config, vocab):
    model = QEDACVC(tiny_config)
    model(*batch(vocab)).loss.backward()
    assert model.embedding.weight.grad.abs().sum() > 0
    assert model.encoder_features.dense.grad is not None
    assert model.cross_attention.value.grad is not None
    assert model.variational.angles.grad is not None


def test_embedding_angles_stay_in_range(tiny_config, vocab):
    model = QEDACVC(tiny_config)
    angles = model.embed(torch.arange(len(vocab))[None, :6])
    assert torch.all(angles.abs() <= math.pi)


def test_no_dropout_train_and_eval_agree(tiny_config, vocab):
    model = QEDACVC(tiny_config)
    src, tgt_in, tgt_out = batch(vocab)
    train_loss = model.train()(src, tgt_in, tgt_out).loss.item()
    eval_loss = model.eval()(src, tgt_in, tgt_out).loss.item()
    assert train_loss == eval_loss


def test_out_of_vocabulary_id(tiny_config):
    model = QEDACVC(tiny_config)
    with pytest.raises(VocabularyError):
        model.embed(torch.tensor([[tiny_config.vocab_size]]))


def test_sequence_longer_than_seq_len(tiny_config):
    model = QEDACVC(tiny_config)
    with pytest.raises(ShapeError):
        model.embed(torch.zeros(1, tiny_config.seq_len + 1, dtype=torch.long))


def test_model_needs_vocab_size(tiny_config):
    with pytest.raises(VocabularyError):
        QEDACVC(tiny_config.updated(vocab_size=0))


@pytest.mark.parametrize('mode, conv, attention, variational', [
    ('O1', False, True, True),
    ('O2', True, False, True),
    ('O3', True, False, True),
    ('O4', True, True, True),
    ('O5', True, True, True),
])
def test_ablation_modes_switch_layers(tiny_config, mode, conv, attention, variational):
    model = QEDACVC(tiny_config.updated(ablation_mode=mode))
    assert (model.encoder_features.conv is not None) == conv
    assert (not isinstance(model.encoder_attention, UniformAttention)) == attention
    assert (model.variational is not None) == variational


def test_o4_follows_variational_head_flag(tiny_config):
    model = QEDACVC(tiny_config.updated(ablation_mode='O4', variational_head=False))
    assert model.variational is None
    assert AblationMode.O5.description == 'Complete Model'


def test_default_quantum_parameter_budget():
    model = QEDACVC(ModelConfig(vocab_size=40))
    report = model.parameter_report()
    assert 0 < report['quantum'] <= 1000
    assert report['quantum'] + report['classical'] == report['total']
    assert report['classical'] == 40 * 8 + 16 * 8 + 40


def test_cross_entropy_examples():
    probs = torch.tensor([[[1.0, 0.0, 0.0], [1 / 3, 1 / 3, 1 / 3]]], dtype=torch.float64)
    per_token, clamped = cross_entropy(probs, torch.tensor([[0, 2]]))
    assert per_token[0, 0].item() == pytest.approx(0.0)
    assert per_token[0, 1].item() == pytest.approx(math.log(3))
    assert clamped == 0

    per_token, clamped = cross_entropy(probs, torch.tensor([[1, 2]]))
    assert per_token[0, 0].item() == pytest.approx(-math.log(PROB_FLOOR))
    assert clamped == 1


def test_masked_positions_do_not_count():
    probs = torch.full((1, 2, 4), 0.25, dtype=torch.float64)
    record = sequence_loss(probs, [[1, 3]], pad_mask=[[False, True]])
    assert record.n_tokens == 1
    assert record.value == pytest.approx(math.log(4))
    assert record.per_token[0, 1] == 0.0


def test_one_hot_references_accepted():
    probs = torch.tensor([[0.7, 0.2, 0.1]], dtype=torch.float64)
    record = sequence_loss(probs, torch.eye(3, dtype=torch.float64)[[1]])
    assert record.value == pytest.approx(-math.log(0.2))


def test_frame_source_truncates_content():
    assert frame_source([7, 8, 9, 10], 5, seq_len=6) == [SOS_ID, 5, 7, 8, 9, EOS_ID]


def test_greedy_decode_respects_max_len(tiny_config, vocab):
    model = QEDACVC(tiny_config).eval()
    src, _, _ = batch(vocab)
    tags = torch.full((2,), vocab.tag_id('fr'))
    outputs = greedy_decode(model, src, tags, max_len=3)
    assert len(outputs) == 2
    for ids in outputs:
        assert 1 <= len(ids) <= 3
        assert EOS_ID not in ids[:-1]


def test_translate_is_deterministic(tiny_config, vocab):
    model = QEDACVC(tiny_config)
    ids = vocab.encode(['a', 'b'])
    first = translate(model, ids, vocab.tag_id('en'))
    assert first == translate(model, ids, vocab.tag_id('en'))
    assert model.training


def test_config_rejects_bad_register():
    with pytest.raises(ValidationError):
        ModelConfig(n_qubits=8, conv_pool_stages=3)
    with pytest.raises(ConfigurationError):
        ModelConfig().updated(n_qubits=6, conv_pool_stages=2)


def test_load_config_from_key_value_file(tmp_path):
    path = tmp_path / 'run.cfg'
    path.write_text("# tiny run\nn_qubits = 4\nconv_pool_stages = 1\nlearning_rate = table1\nlanguages = en, fr\n")
    model_config, training = load_config(path, {'epochs': 3, 'seed': None})
    assert model_config.n_qubits == 4
    assert model_config.languages == ['en', 'fr']
    assert training.learning_rate == 1e-5
    assert training.epochs == 3


def test_load_config_unknown_key(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text('{"n_qubits": 4, "conv_pool_stages": 1, "qubits": 3}')
    with pytest.raises(ConfigurationError, match='qubits'):
        load_config(path)


def test_translate_without_positional_embedding(tiny_config, vocab):
    model = QEDACVC(tiny_config.updated(positional_embedding=False))
    with torch.no_grad():
        model.output_bias[EOS_ID] = -1e6
    out = translate(model, vocab.encode(['a', 'b']), vocab.tag_id('fr'))
    assert len(out) == tiny_config.seq_len - 1
    assert EOS_ID not in out


def test_greedy_decode_caps_max_len_at_seq_len(tiny_config, vocab):
    model = QEDACVC(tiny_config).eval()
    with torch.no_grad():
        model.output_bias[EOS_ID] = -1e6
    src, _, _ = batch(vocab)
    outputs = greedy_decode(model, src, torch.full((2,), vocab.tag_id('fr')), max_len=50)
    assert [len(ids) for ids in outputs] == [tiny_config.seq_len - 1] * 2


def test_decoding_ignores_source_padding(tiny_config, vocab):
    model = QEDACVC(tiny_config).eval()
    tag = vocab.tag_id('fr')
    framed = frame_source(vocab.encode(['a', 'b']), tag, tiny_config.seq_len)
    tags = torch.tensor([tag])
    short = torch.tensor([framed])
    padded = torch.tensor([framed + [PAD_ID] * (tiny_config.seq_len - len(framed))])
    assert greedy_decode(model, short, tags, 4) == greedy_decode(model, padded, tags, 4)

    prefix = torch.tensor([[SOS_ID, tag]])
    with torch.no_grad():
        probs_short = model.decode_step(model.encode(short, short == PAD_ID), short == PAD_ID, prefix)
        probs_padded = model.decode_step(model.encode(padded, padded == PAD_ID), padded == PAD_ID, prefix)
    assert_allclose(probs_short.numpy(), probs_padded.numpy(), atol=1e-12)


def test_training_steps_lower_the_loss(tiny_config, vocab):
    model = QEDACVC(tiny_config)
    optimizer = torch.optim.Adam(model.parameters(), lr=0.02)
    src, tgt_in, tgt_out = batch(vocab)
    losses = []
    for _ in range(8):
        optimizer.zero_grad()
        loss = model(src, tgt_in, tgt_out).loss
        loss.backward()
        optimizer.step()
        losses.append(loss.item())
    assert losses[-1] < losses[0]
