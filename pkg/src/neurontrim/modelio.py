"""Model files: versioned JSON that round-trips weights bit-exactly.

Floats are serialised with Python's shortest round-trip repr, so
``load(save(net))`` reproduces forward outputs bitwise.  Serialisation is
canonical (sorted keys, fixed separators): the same network and provenance
always produce the same bytes.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import DataFormatError
from .network import Layer, Network

MODEL_FORMAT = "neurontrim-model"
MODEL_VERSION = 1


def model_to_json(net: Network, provenance: dict | None = None,
                  input_columns=None) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "schema_version": MODEL_VERSION,
        "layers": [
            {
                "activation": layer.activation,
                "weights": layer.weights.tolist(),
                "biases": layer.biases.tolist(),
            }
            for layer in net.layers
        ],
        "provenance": provenance or {},
    }
    if input_columns is not None:
        doc["input_columns"] = [int(i) for i in input_columns]
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def save_model(net: Network, path, provenance: dict | None = None,
               input_columns=None) -> None:
    with open(path, "w") as f:
        f.write(model_to_json(net, provenance, input_columns))


def load_model(path) -> tuple[Network, dict]:
    """Read a model file; returns the network and its metadata.

    Metadata holds ``provenance`` and, for compacted models, the
    ``input_columns`` of the original feature space the model consumes.
    """
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise DataFormatError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("schema_version") != MODEL_VERSION:
        raise DataFormatError(
            f"{path}: unsupported schema_version {doc.get('schema_version')!r}"
        )
    try:
        layers = [
            Layer(np.array(spec["weights"], dtype=np.float64),
                  np.array(spec["biases"], dtype=np.float64),
                  spec["activation"])
            for spec in doc["layers"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: malformed layer table: {exc}") from exc
    meta = {
        "provenance": doc.get("provenance", {}),
        "input_columns": doc.get("input_columns"),
    }
    return Network(layers), meta
