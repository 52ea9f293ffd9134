"""JSON serialization of POVMs, duals, and operators.

Complex numbers are always [re, im] pairs. The POVM schema is
{"dim": d, "elements": [[[re, im], ...] d x d, ...], "weights": optional,
"states": optional}; dual frames reuse the element schema. Serialization is
deterministic (sorted keys, repr floats), so identical inputs hash and diff
identically.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .povms import Povm


def _complex_matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def _complex_matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def operator_to_json(m: np.ndarray) -> list:
    return _complex_matrix_to_json(m)


def operator_from_json(rows) -> np.ndarray:
    return _complex_matrix_from_json(rows)


def povm_to_dict(povm: Povm) -> dict:
    doc = {
        "dim": povm.dim,
        "elements": [_complex_matrix_to_json(m) for m in povm.elements],
    }
    if povm.has_rank1_form:
        doc["weights"] = [float(w) for w in povm.weights]
        doc["states"] = [[[float(z.real), float(z.imag)] for z in s] for s in povm.states]
    return doc


def povm_from_dict(doc: dict) -> Povm:
    elements = np.array([_complex_matrix_from_json(m) for m in doc["elements"]])
    weights = states = None
    if "weights" in doc and doc["weights"] is not None:
        weights = np.array(doc["weights"], dtype=float)
        states = np.array([[complex(re, im) for re, im in s] for s in doc["states"]])
    povm = Povm(elements=elements, weights=weights, states=states)
    if povm.dim != doc["dim"]:
        raise ValueError(f"declared dim {doc['dim']} does not match elements of dim {povm.dim}")
    return povm


def dual_elements_to_json(elements: np.ndarray) -> list:
    return [_complex_matrix_to_json(m) for m in elements]


def povm_digest(povm: Povm) -> str:
    """Content hash of the canonical POVM serialization (first 16 hex chars of sha256)."""
    payload = json.dumps(povm_to_dict(povm), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def dump_json(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
