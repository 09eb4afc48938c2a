"""Toolkit for identifying concurrency-related issue reports via linguistic patterns.

The pipeline: load labeled issue reports (corpus), preprocess each report into
POS-categorized sentences (textproc), look words up in the ten-category lexicon
(lexicon), match the four-level pattern set against the processed sentences
(patterns), turn matches into classifications and trainable feature vectors
(classify), build LLM prompts and fine-tuning exports (llmbridge), and measure
everything (evaluation).  The ``lptriage`` CLI exposes each stage as a
subcommand.
"""

__version__ = "0.1.0"
