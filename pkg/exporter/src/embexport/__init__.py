"""Embedding exporter: encode word-in-context instances and emit EMBS stores.

Each instance contributes two records, ``<instance_id>#1`` and
``<instance_id>#2``, holding the whole-sentence embeddings of its two
contexts. The default encoder is the pretrained multilingual sentence
transformer ``paraphrase-xlm-r-multilingual-v1`` (768 dimensions); a
``--fake`` mode derives deterministic pseudo-embeddings from a hash of the
context string so downstream tooling can be exercised without the model.
"""

__version__ = "0.1.0"

DEFAULT_MODEL = "paraphrase-xlm-r-multilingual-v1"


class ExporterError(Exception):
    """Base class for exporter failures."""


class ParseError(ExporterError):
    """Malformed instances file."""
