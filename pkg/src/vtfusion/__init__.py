"""Multimodal audio-text violence detection pipeline.

Feature extraction (time/frequency-domain audio summaries, MFCC matrices,
lexicon category vectors, transformer embeddings), a small hand-written
neural toolkit, a four-branch fusion classifier and a cross-validation
evaluation harness.
"""

__version__ = "0.1.0"
