"""Toolkit for ranking word-in-context use pairs by annotator disagreement.

Pipeline stages (each with a CLI subcommand):

1. ``compute-labels``: aggregate ordinal judgments into mean pairwise
   disagreement labels.
2. ``train``: fit a feedforward regression net on concatenated sentence
   embeddings.
3. ``predict``: score use pairs with a trained checkpoint.
4. ``evaluate``: Spearman rank correlation against gold labels, per
   language and pooled.
"""

__version__ = "0.1.0"
