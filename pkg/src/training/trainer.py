import math
import os
import random
import time

import numpy as np
import pandas as pd
import torch
from torch.nn.utils import parameters_to_vector, vector_to_parameters
from tqdm import tqdm

from checkpoint import Checkpoint, model_parameters, save_checkpoint
from errors import CorpusFormatError, TrainingError
from evaluation.evaluator import evaluate
from training.optimizer import OptimState, adam_step


METRIC_COLUMNS = ['epoch', 'train_loss', 'val_loss', 'val_accuracy', 'val_bleu']


def set_seed(seed):
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def write_metrics(rows, path):
    pd.DataFrame(rows, columns=METRIC_COLUMNS).to_csv(path, index=False, float_format='%.6f')


class Trainer:
    """
    Epoch loop for QEDACVC

    Gradients come from torch autograd (parameter-shift inside the quantum
    blocks); the update is Adam over the flattened parameter vector.
    """

    def __init__(self, model, train_loader, val_pairs, vocab, training_config, save_dir, verbose=True):
        if not val_pairs:
            raise CorpusFormatError("Validation split is empty; adjust split ratios or add rows")
        self.model = model
        self.train_loader = train_loader
        self.val_pairs = list(val_pairs)
        self.vocab = vocab
        self.config = training_config
        self.save_dir = save_dir
        self.verbose = verbose
        n_params = sum(p.numel() for p in model.parameters())
        self.opt = OptimState.zeros(
            n_params,
            learning_rate=training_config.learning_rate,
            beta1=training_config.beta1,
            beta2=training_config.beta2,
            epsilon=training_config.epsilon,
        )
        self.best_metrics = {}
        self.history = []
        self.train_seconds = 0.0
        os.makedirs(save_dir, exist_ok=True)

    def _step(self, loss):
        params = list(self.model.parameters())
        self.model.zero_grad()
        loss.backward()
        grads = torch.cat([
            (p.grad if p.grad is not None else torch.zeros_like(p)).reshape(-1) for p in params
        ])
        flat = parameters_to_vector(params)
        new_flat, self.opt = adam_step(flat.detach().numpy(), grads.detach().numpy(), self.opt)
        with torch.no_grad():
            vector_to_parameters(torch.as_tensor(new_flat, dtype=flat.dtype), params)

    def train_epoch(self):
        self.model.train()
        total_loss = 0.0
        total_tokens = 0
        clamped = 0

        for batch in tqdm(self.train_loader, desc="Training", leave=False, disable=not self.verbose):
            outputs = self.model(batch['src'], batch['tgt_in'], batch['tgt_out'])
            if not math.isfinite(outputs.loss.item()):
                raise TrainingError(f"Non-finite training loss {outputs.loss.item()}")
            self._step(outputs.loss)
            total_loss += outputs.record.value
            total_tokens += outputs.record.n_tokens
            clamped += outputs.record.n_clamped

        if clamped and self.verbose:
            print(f"⚠️  {clamped} target probabilities clamped to 1e-12 in the loss")
        return total_loss / max(total_tokens, 1)

    def evaluate(self):
        return evaluate(
            self.model,
            self.val_pairs,
            self.vocab,
            batch_size=self.config.batch_size,
            max_len=self.config.max_decode_len,
            smooth=self.config.bleu_smoothing,
            desc="Validating",
        )

    def _checkpoint(self, epoch):
        return Checkpoint(
            model_config=self.model.config,
            vocab=self.vocab,
            parameters=model_parameters(self.model),
            optim=self.opt,
            epoch=epoch,
            best_metrics=dict(self.best_metrics),
            training_config=self.config.model_dump(mode='json'),
        )

    def train(self, epochs):
        metrics_path = os.path.join(self.save_dir, 'metrics.csv')

        for epoch in range(1, epochs + 1):
            if self.verbose:
                print(f"\nEpoch {epoch}/{epochs}")

            start = time.perf_counter()
            train_loss = self.train_epoch()
            self.train_seconds += time.perf_counter() - start
            result = self.evaluate()

            self.history.append({
                'epoch': epoch,
                'train_loss': train_loss,
                'val_loss': result.loss,
                'val_accuracy': result.accuracy,
                'val_bleu': result.bleu,
            })
            write_metrics(self.history, metrics_path)

            if self.verbose:
                print(f"Train Loss: {train_loss:.4f} | Val Loss: {result.loss:.4f}")
                print(f"Val Acc: {result.accuracy*100:.2f}% | Val BLEU: {result.bleu*100:.2f}")

            best_key = (self.best_metrics.get('accuracy', -1.0), self.best_metrics.get('bleu', -1.0))
            if (result.accuracy, result.bleu) > best_key:
                self.best_metrics = {
                    'accuracy': result.accuracy,
                    'bleu': result.bleu,
                    'epoch': epoch,
                    'per_language': {
                        row.language: {'accuracy': float(row.accuracy), 'bleu': float(row.bleu)}
                        for row in result.per_language.itertuples()
                    },
                }
                save_checkpoint(self._checkpoint(epoch), os.path.join(self.save_dir, 'best.ckpt'))
                if self.verbose:
                    print("✓ Saved best model")
            save_checkpoint(self._checkpoint(epoch), os.path.join(self.save_dir, 'last.ckpt'))

        if self.verbose:
            print(f"\nBest Accuracy: {self.best_metrics['accuracy']*100:.2f}% "
                  f"(BLEU {self.best_metrics['bleu']*100:.2f}, epoch {self.best_metrics['epoch']})")
        return pd.DataFrame(self.history, columns=METRIC_COLUMNS)
