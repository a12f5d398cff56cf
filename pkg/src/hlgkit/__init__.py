"""Word-level WFST speech decoders built from raw text or n-gram statistics.

The toolkit covers the full path from a text corpus (or Crubadan-style
unigram/bigram files) to a working decoder: n-gram grammar estimation,
rule-table G2P with phylogenetic nearest-neighbor ensembling, CTC/lexicon/
grammar graph construction and composition, frame-synchronous beam-search
decoding of phoneme posterior matrices, and error scoring with a language-
model versus acoustic/pronunciation-model decomposition.
"""

__version__ = "0.1.0"
