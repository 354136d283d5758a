"""Generate the bundled synthetic corpora under data/synthetic."""

from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from preprocessing.synth_corpus import synth_corpus


# 256 / 60 / 24 train / test / val rows with configs/qedacvc/copy_task.cfg
CORPORA = [
    ("copy", dict(n_pairs=340, vocab_size=30, max_len=5, languages=("en", "fr"))),
    ("reverse", dict(n_pairs=340, vocab_size=30, max_len=5, languages=("en", "fr"))),
    ("lexicon", dict(n_pairs=340, vocab_size=30, max_len=5, languages=("en", "fr", "hi", "de"))),
]


def main():
    output_dir = Path("data/synthetic")

    print("=" * 60)
    print("Synthetic Corpus Preparation")
    print("=" * 60)

    for step, (task, kwargs) in enumerate(CORPORA, start=1):
        path = output_dir / f"{task}.tsv"
        print(f"\n[{step}] {task} → {path}")
        synth_corpus(task, seed=0, path=path, **kwargs)

    print("\n" + "=" * 60)
    print("Corpus preparation complete!")
    print("=" * 60)


if __name__ == "__main__":
    main()
