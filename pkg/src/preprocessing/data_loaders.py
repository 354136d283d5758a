import torch
from torch.utils.data import DataLoader

from .dataset import TranslationDataset


def get_dataloaders(corpus, seq_len, batch_size=8, seed=0):
    """(train, val, test) loaders over a ParallelCorpus; only train is shuffled."""
    generator = torch.Generator()
    generator.manual_seed(seed)

    train_dataset = TranslationDataset(corpus.split('train'), corpus.vocab, seq_len)
    val_dataset = TranslationDataset(corpus.split('val'), corpus.vocab, seq_len)
    test_dataset = TranslationDataset(corpus.split('test'), corpus.vocab, seq_len)

    train_loader = DataLoader(
        train_dataset,
        batch_size=batch_size,
        shuffle=len(train_dataset) > 0,
        generator=generator
    )

    val_loader = DataLoader(
        val_dataset,
        batch_size=batch_size,
        shuffle=False
    )

    test_loader = DataLoader(
        test_dataset,
        batch_size=batch_size,
        shuffle=False
    )

    return train_loader, val_loader, test_loader
