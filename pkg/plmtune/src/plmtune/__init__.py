"""Encoder fine-tuning on pattern-enriched issue-report exports.

Consumes the line-delimited {text, label} export produced by the lptriage
toolkit (records shaped ``[CLS] [PATTERN:WORD] ... [BUG REPORT] ... [SEP]``)
and trains a small encoder for binary classification with a
binary-cross-entropy head, early stopping on a stratified validation split,
and metrics written in the same CSV schema the lptriage renderer uses.
"""

__version__ = "0.1.0"
