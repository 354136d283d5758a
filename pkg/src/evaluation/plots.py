"""
Training curves and ablation chart.
"""
import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt
import seaborn as sns


def plot_training_curves(metrics, path):
    """Loss (train/val) and validation accuracy/BLEU per epoch from a metrics DataFrame."""
    sns.set_theme(style='whitegrid')
    fig, (ax_loss, ax_score) = plt.subplots(1, 2, figsize=(11, 4))

    losses = metrics.melt(id_vars='epoch', value_vars=['train_loss', 'val_loss'], var_name='split', value_name='loss')
    sns.lineplot(data=losses, x='epoch', y='loss', hue='split', marker='o', ax=ax_loss)
    ax_loss.set_title('Cross-entropy per token')

    scores = metrics.melt(id_vars='epoch', value_vars=['val_accuracy', 'val_bleu'], var_name='metric', value_name='score')
    sns.lineplot(data=scores, x='epoch', y='score', hue='metric', marker='o', ax=ax_score)
    ax_score.set_ylim(0, 1)
    ax_score.set_title('Validation')

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_ablation(table, path):
    """Bar chart of validation accuracy per ablation mode."""
    sns.set_theme(style='whitegrid')
    fig, ax = plt.subplots(figsize=(8, 4))
    sns.barplot(data=table, x='mode', y='accuracy', color='steelblue', ax=ax)
    for patch, value in zip(ax.patches, table['accuracy']):
        ax.annotate(f"{value*100:.1f}", (patch.get_x() + patch.get_width() / 2, patch.get_height()),
                    ha='center', va='bottom', fontsize=9)
    ax.set_ylim(0, 1)
    ax.set_ylabel('validation accuracy')
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
