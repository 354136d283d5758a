"""Token accuracy, BLEU and evaluation reports"""
from .metrics import BleuReport, ConfusionCounts, accuracy, bleu, confusion_counts

__all__ = ['BleuReport', 'ConfusionCounts', 'accuracy', 'bleu', 'confusion_counts']
