"""Attentional word segmentation for unwritten languages.

Pipeline: acoustic unit discovery turns speech into pseudo-phone
sequences; a reverse-direction (words -> symbols) attentional
encoder-decoder is trained on the parallel corpus; its soft-alignment
matrices are post-processed into hard word segmentations; boundary,
token and type metrics score them against a gold segmentation.
"""

__version__ = "0.1.0"
