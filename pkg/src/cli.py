"""
Command-line entry points: train, translate, evaluate, ablate, gradcheck.

Every QedacvcError is reported on stderr and mapped to its exit code
(1 config, 2 data, 3 numerical, 4 verification).
"""
import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
import pandas as pd
import torch

from checkpoint import build_model, load_checkpoint
from errors import ConfigurationError, QedacvcError, VerificationError
from evaluation.evaluator import evaluate, print_report
from evaluation.plots import plot_ablation, plot_training_curves
from models.qedacvc.config import AblationMode, ModelConfig, load_config
from models.qedacvc.model import QEDACVC, greedy_decode
from preprocessing.corpus import load_parallel
from preprocessing.data_loaders import get_dataloaders
from preprocessing.dataset import make_batches
from preprocessing.tokenizer import Vocab
from quantum.circuit import random_circuit
from quantum.gradients import finite_diff_grad, param_shift_grad
from training.trainer import Trainer, set_seed
from translator import QuantumTranslator


CIRCUIT_TOLERANCE = 1e-6
MODEL_TOLERANCE = 1e-4


def _overrides(args):
    return {
        'seed': getattr(args, 'seed', None),
        'epochs': getattr(args, 'epochs', None),
        'learning_rate': getattr(args, 'lr', None),
        'batch_size': getattr(args, 'batch_size', None),
        'seq_len': getattr(args, 'seq_len', None),
        'dropout_rate': getattr(args, 'dropout', None),
        'ablation_mode': getattr(args, 'mode', None),
        'workers': getattr(args, 'workers', None),
    }


def _load_corpus(args, training, vocab=None):
    return load_parallel(
        args.corpus,
        source_lang=args.src_lang,
        target_lang=args.tgt_lang,
        ratios=training.split_ratios,
        seed=training.seed,
        min_freq=training.min_freq,
        vocab=vocab,
    )


def _mean_inference_seconds(model, pairs, vocab, batch_size):
    if not pairs:
        return 0.0
    model.eval()
    start = time.perf_counter()
    for batch in make_batches(pairs, vocab, batch_size, model.config.seq_len):
        greedy_decode(model, batch['src'], batch['tag'], model.config.seq_len - 2)
    return (time.perf_counter() - start) / len(pairs)


def run_training(model_config, training, corpus, out_dir, verbose=True):
    """Train one model on `corpus`; returns (trainer, model)."""
    set_seed(training.seed)
    model_config = model_config.updated(vocab_size=len(corpus.vocab), languages=list(corpus.languages))
    model = QEDACVC(model_config)
    train_loader, _, _ = get_dataloaders(corpus, model_config.seq_len, training.batch_size, training.seed)
    trainer = Trainer(model, train_loader, corpus.split('val'), corpus.vocab, training, out_dir, verbose=verbose)
    trainer.train(training.epochs)
    return trainer, model


def cmd_train(args):
    model_config, training = load_config(args.config, _overrides(args))
    corpus = _load_corpus(args, training)
    out = Path(args.out)
    sizes = corpus.sizes()
    print(f"Corpus: {len(corpus.vocab)} tokens, languages {', '.join(corpus.languages)}, "
          f"{sizes['train']}/{sizes['test']}/{sizes['val']} train/test/val pairs")

    trainer, model = run_training(model_config, training, corpus, out)
    history = pd.read_csv(out / 'metrics.csv')
    plot_training_curves(history, out / 'training_curves.png')

    summary = {
        'ablation_mode': model.config.ablation_mode.value,
        'parameters': model.parameter_report(),
        'circuit_layers': model.circuit_layers(),
        'attention_heads': 1,
        'train_seconds': trainer.train_seconds,
        'inference_seconds_per_sentence': _mean_inference_seconds(
            model, corpus.split('val'), corpus.vocab, training.batch_size),
        'best_metrics': trainer.best_metrics,
        'epochs': training.epochs,
    }
    with open(out / 'run_summary.json', 'w', encoding='utf-8') as f:
        json.dump(summary, f, indent=2)
    print(f"✓ Artifacts written to {out}")
    return 0


def cmd_translate(args):
    translator = QuantumTranslator.load_from_checkpoint(args.ckpt)
    lines = [line.rstrip('\n') for line in sys.stdin]
    for translation in translator.translate_batch(lines, args.src_lang, args.tgt_lang):
        print(translation)
    return 0


def cmd_evaluate(args):
    ckpt = load_checkpoint(args.ckpt)
    _, training = load_config(None, ckpt.training_config)
    if args.seed is not None:
        training = training.model_copy(update={'seed': args.seed})
    corpus = _load_corpus(args, training, vocab=ckpt.vocab)
    model = build_model(ckpt)

    result = evaluate(model, corpus.split(args.split), ckpt.vocab, batch_size=training.batch_size,
                      max_len=training.max_decode_len, smooth=training.bleu_smoothing)
    print_report(result, title=f"{args.split} split")

    table = result.per_language.copy()
    table.insert(0, 'split', args.split)
    overall = pd.DataFrame([{
        'split': args.split, 'language': 'all', 'accuracy': result.accuracy,
        'bleu': result.bleu, 'sentences': len(result.hypotheses),
    }])
    table = pd.concat([overall, table], ignore_index=True)
    out = Path(args.out) if args.out else Path(args.ckpt).parent
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / f'evaluation_{args.split}.csv', index=False, float_format='%.6f')
    print(table.to_csv(index=False, float_format='%.6f'), end='')
    return 0


def cmd_ablate(args):
    model_config, training = load_config(args.config, _overrides(args))
    corpus = _load_corpus(args, training)
    out = Path(args.out)

    rows = []
    for mode in AblationMode:
        print(f"\n{'='*60}\nAblation {mode.value}: {mode.description}\n{'='*60}")
        trainer, model = run_training(model_config.updated(ablation_mode=mode), training, corpus,
                                      out / mode.value, verbose=args.verbose)
        params = model.parameter_report()
        rows.append({
            'mode': mode.value,
            'description': mode.description,
            'accuracy': trainer.best_metrics['accuracy'],
            'bleu': trainer.best_metrics['bleu'],
            'quantum_params': params['quantum'],
            'classical_params': params['classical'],
        })
        for lang, scores in trainer.best_metrics['per_language'].items():
            rows[-1][f'accuracy_{lang}'] = scores['accuracy']
            rows[-1][f'bleu_{lang}'] = scores['bleu']
        print(f"✓ {mode.value}: accuracy {rows[-1]['accuracy']*100:.2f}%, BLEU {rows[-1]['bleu']*100:.2f}")

    table = pd.DataFrame(rows)
    table.to_csv(out / 'ablation.csv', index=False, float_format='%.6f')
    plot_ablation(table, out / 'ablation.png')
    print(f"\n✓ Ablation table → {out / 'ablation.csv'}")
    return 0


def _gradcheck_circuits(n_circuits, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_circuits):
        n_wires = int(rng.integers(1, 9))
        n_params = int(rng.integers(1, 31))
        n_inputs = int(rng.integers(0, n_wires + 1))
        circuit = random_circuit(rng, n_wires, int(rng.integers(1, 25)), n_params, n_inputs,
                                 pooling=bool(i % 2))
        params = rng.uniform(-np.pi, np.pi, n_params)
        inputs = rng.uniform(-np.pi, np.pi, n_inputs)
        for wrt in ('params', 'inputs'):
            exact = param_shift_grad(circuit, params, inputs, wrt=wrt)
            approx = finite_diff_grad(circuit, params, inputs, step=1e-4, wrt=wrt)
            if exact.size:
                worst = max(worst, float(np.max(np.abs(exact - approx))))
    return worst


def model_gradcheck(seed=0, step=1e-4):
    """
    Autograd (parameter-shift inside) vs central differences of the loss on a
    tiny full model with a two-token sentence

    Returns:
        Worst absolute deviation over every trainable parameter
    """
    set_seed(seed)
    vocab = Vocab(tokens=['a', 'b', 'c'], languages=['en', 'fr'])
    config = ModelConfig(n_qubits=4, conv_pool_stages=1, seq_len=5, dropout_rate=0.0,
                         vocab_size=len(vocab), languages=['en', 'fr'])
    model = QEDACVC(config)
    model.eval()

    tag = vocab.tag_id('fr')
    a, b = vocab.encode(['a', 'b'])
    src = torch.tensor([[1, tag, a, b, 2]])
    tgt_in = torch.tensor([[1, tag, b, a, 0]])
    tgt_out = torch.tensor([[0, b, a, 2, 0]])

    model.zero_grad()
    model(src, tgt_in, tgt_out).loss.backward()
    worst = 0.0
    with torch.no_grad():
        for param in model.parameters():
            flat = param.view(-1)
            grad = param.grad.reshape(-1) if param.grad is not None else torch.zeros_like(flat)
            for j in range(flat.numel()):
                original = flat[j].item()
                flat[j] = original + step
                up = model(src, tgt_in, tgt_out).loss.item()
                flat[j] = original - step
                down = model(src, tgt_in, tgt_out).loss.item()
                flat[j] = original
                worst = max(worst, abs((up - down) / (2 * step) - grad[j].item()))
    return worst


def cmd_gradcheck(args):
    if args.circuits < 1:
        raise ConfigurationError(f"--circuits must be >= 1, got {args.circuits}")
    circuit_worst = _gradcheck_circuits(args.circuits, args.seed)
    print(f"Random circuits ({args.circuits}): worst deviation {circuit_worst:.3e} (tolerance {CIRCUIT_TOLERANCE:.0e})")
    model_worst = model_gradcheck(args.seed)
    print(f"Full model (2 tokens): worst deviation {model_worst:.3e} (tolerance {MODEL_TOLERANCE:.0e})")

    if circuit_worst >= CIRCUIT_TOLERANCE or model_worst >= MODEL_TOLERANCE:
        raise VerificationError(
            f"Gradient check failed: circuits {circuit_worst:.3e}, model {model_worst:.3e}"
        )
    print("✓ Gradients agree")
    return 0


def _add_common(parser, corpus=True):
    parser.add_argument('--config', help='JSON or key = value config file')
    if corpus:
        parser.add_argument('--corpus', required=True, help='TSV file or Moses prefix')
        parser.add_argument('--src-lang')
        parser.add_argument('--tgt-lang')
    parser.add_argument('--seed', type=int)
    parser.add_argument('--epochs', type=int)
    parser.add_argument('--lr', help='Learning rate or preset (desk, table1, eval)')
    parser.add_argument('--batch-size', type=int)
    parser.add_argument('--seq-len', type=int)
    parser.add_argument('--dropout', type=float)
    parser.add_argument('--mode', choices=[m.value for m in AblationMode])
    parser.add_argument('--workers', type=int)
    parser.add_argument('--out', default='experiments/qedacvc')


def build_parser():
    parser = argparse.ArgumentParser(prog='qedacvc', description='Hybrid quantum-classical translator')
    sub = parser.add_subparsers(dest='command', required=True)

    train = sub.add_parser('train', help='Train a model and write metrics.csv / checkpoints')
    _add_common(train)
    train.set_defaults(func=cmd_train)

    translate = sub.add_parser('translate', help='Translate stdin lines with a checkpoint')
    translate.add_argument('--ckpt', required=True)
    translate.add_argument('--src-lang', required=True)
    translate.add_argument('--tgt-lang', required=True)
    translate.set_defaults(func=cmd_translate)

    evaluate_cmd = sub.add_parser('evaluate', help='Accuracy and BLEU of a checkpoint on a split')
    evaluate_cmd.add_argument('--ckpt', required=True)
    evaluate_cmd.add_argument('--corpus', required=True)
    evaluate_cmd.add_argument('--src-lang')
    evaluate_cmd.add_argument('--tgt-lang')
    evaluate_cmd.add_argument('--split', choices=['train', 'test', 'val'], default='test')
    evaluate_cmd.add_argument('--seed', type=int)
    evaluate_cmd.add_argument('--out')
    evaluate_cmd.set_defaults(func=cmd_evaluate)

    ablate = sub.add_parser('ablate', help='Train O1..O5 under one seed and budget')
    _add_common(ablate)
    ablate.add_argument('--verbose', action='store_true')
    ablate.set_defaults(func=cmd_ablate)

    gradcheck = sub.add_parser('gradcheck', help='Parameter-shift vs finite differences')
    gradcheck.add_argument('--circuits', type=int, default=20)
    gradcheck.add_argument('--seed', type=int, default=0)
    gradcheck.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QedacvcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == '__main__':
    sys.exit(main())
