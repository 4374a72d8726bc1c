"""Export job orchestration: parse instances, encode contexts, write the store."""

import logging
from dataclasses import dataclass

import numpy as np

from . import DEFAULT_MODEL, ExporterError
from .embs import write_store
from .fake import fake_embedding
from .instances import parse_instances

log = logging.getLogger(__name__)


@dataclass
class ExportJob:
    instances_path: str
    output_path: str
    model_id: str = DEFAULT_MODEL
    batch_size: int = 32
    fake: bool = False
    fake_dim: int = 768


def load_encoder(model_id: str):
    """Lazily load the sentence-transformer encoder; never imported for --fake."""
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as e:
        raise ExporterError(
            f"sentence-transformers is not installed; use --fake or install the "
            f"'encoder' extra ({e})"
        )
    try:
        return SentenceTransformer(model_id)
    except Exception as e:
        raise ExporterError(f"could not load encoder {model_id!r}: {e}")


def encode_texts(texts, model_id: str, batch_size: int) -> np.ndarray:
    model = load_encoder(model_id)
    vectors = model.encode(
        list(texts),
        batch_size=batch_size,
        convert_to_numpy=True,
        show_progress_bar=False,
        normalize_embeddings=False,
    )
    return np.asarray(vectors, dtype=np.float32)


def export_embeddings(job: ExportJob) -> int:
    """Write one record per context occurrence; returns the record count.

    Every context occurrence is encoded and stored under its own key even if
    the sentence text repeats, so lookups stay a pure function of the key.
    A ``<output>.meta`` sidecar records the model identity, since the store
    format itself has no manifest field.
    """
    instances = parse_instances(job.instances_path)
    keyed_texts = []
    for inst in instances:
        keyed_texts.append((f"{inst.instance_id}#1", inst.context1))
        keyed_texts.append((f"{inst.instance_id}#2", inst.context2))

    if job.fake:
        dim = job.fake_dim
        records = [(key, fake_embedding(text, dim)) for key, text in keyed_texts]
        model_note = f"fake(blake2b, dim={dim})"
    else:
        vectors = encode_texts([t for _, t in keyed_texts], job.model_id, job.batch_size)
        if vectors.ndim != 2 or vectors.shape[0] != len(keyed_texts):
            raise ExporterError(f"encoder returned shape {vectors.shape}")
        dim = vectors.shape[1]
        records = [(key, vectors[i]) for i, (key, _) in enumerate(keyed_texts)]
        model_note = job.model_id

    write_store(records, job.output_path, dim)
    with open(job.output_path + ".meta", "w", encoding="utf-8") as f:
        f.write(f"model={model_note}\ndim={dim}\ncount={len(records)}\n")
    log.info("wrote %d records (dim %d) to %s", len(records), dim, job.output_path)
    return len(records)
