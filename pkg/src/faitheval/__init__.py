"""Toolkit for measuring hallucination, faithfulness and factuality of
single-sentence abstractive summaries against their source documents."""

__version__ = "0.1.0"
