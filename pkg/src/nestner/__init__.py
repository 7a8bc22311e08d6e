"""Iterative nested named entity recognition on a from-scratch numpy stack.

A transformer encoder reads the tokens together with the tags of mentions
found in earlier passes, a linear-chain CRF decodes one flat layer per pass,
and decoding repeats until a pass finds nothing new.
"""

from .annotations import BIO, BIOUL, Mention, Sentence, Span, TagScheme, mention
from .config import RunConfig
from .inference import DecodeConfig, predict_corpus, predict_sentence
from .metrics import PRF, exact_match_prf
from .model import NestedNER
from .training import TrainConfig, train

__all__ = [
    "BIO", "BIOUL", "DecodeConfig", "Mention", "NestedNER", "PRF", "RunConfig", "Sentence", "Span",
    "TagScheme", "TrainConfig", "exact_match_prf", "mention", "predict_corpus", "predict_sentence",
    "train",
]
__version__ = "0.1.0"
