"""Declarative model files (YAML or JSON) mapped onto the model constructors.

Example::

    kind: depolarizing
    dim: 3
    rate: 1.0
    fixed_algebra: scalars      # or diagonal, or {tensor_factor: m}
    tensor_with: 2              # optional amplification by id on M_m
    curvature: {lambda: 0.5, kind: assumed}
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import yaml

from . import models
from .algebra import diagonal_algebra, scalars, tensor_factor
from .semigroup import SemigroupModel

KINDS = ("depolarizing", "schur", "group_chain", "pauli", "custom_superoperator")


class ModelFileError(ValueError):
    """The model file cannot be parsed into a constructor call."""


@dataclass
class ModelFile:
    kind: str
    doc: dict
    curvature: Optional[dict] = None

    def echo(self) -> dict:
        return {k: v for k, v in self.doc.items() if k != "generator"}


def _require(doc, key, kind):
    if key not in doc:
        raise ModelFileError(f"{kind} model needs key {key!r}")
    return doc[key]


def _matrix(value, name, shape=None) -> np.ndarray:
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"{name} is not a numeric array") from exc
    if shape is not None and a.shape != shape:
        raise ModelFileError(f"{name} has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise ModelFileError(f"{name} has non-finite entries")
    return a


def _int(doc, key, kind, minimum=1):
    v = _require(doc, key, kind)
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ModelFileError(f"{key} must be an integer >= {minimum}")
    return v


def _positive(doc, key, default):
    v = doc.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
        raise ModelFileError(f"{key} must be a positive number")
    return float(v)


def parse_model_text(text: str) -> ModelFile:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelFileError(f"cannot parse model file: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFileError("model file must be a mapping")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ModelFileError(f"kind must be one of {', '.join(KINDS)}")
    curv = doc.get("curvature")
    if curv is not None:
        if not isinstance(curv, dict) or "lambda" not in curv:
            raise ModelFileError("curvature must be a mapping with key 'lambda'")
        lam = curv["lambda"]
        if isinstance(lam, bool) or not isinstance(lam, (int, float)) or not np.isfinite(lam):
            raise ModelFileError("curvature lambda must be a finite number")
        if curv.get("kind", "assumed") not in ("assumed", "intertwining", "gradient-estimate"):
            raise ModelFileError("curvature kind must be assumed, intertwining or gradient-estimate")
    tw = doc.get("tensor_with")
    if tw is not None and (isinstance(tw, bool) or not isinstance(tw, int) or tw < 1):
        raise ModelFileError("tensor_with must be a positive integer")
    return ModelFile(kind, doc, curv)


def load_model_file(path: str) -> ModelFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc}") from exc
    return parse_model_text(text)


def _group_table(spec) -> np.ndarray:
    if isinstance(spec, dict) and len(spec) == 1:
        (key, val), = spec.items()
        if key == "cyclic" and isinstance(val, int) and val >= 1:
            return models.cyclic_group(val)
        if key == "symmetric" and isinstance(val, int) and 1 <= val <= 5:
            return models.symmetric_group(val)
        if key == "table":
            t = _matrix(val, "group table")
            if t.ndim != 2 or t.shape[0] != t.shape[1] or np.any(t != np.round(t)):
                raise ModelFileError("group table must be a square integer table")
            return t.astype(int)
        if key == "product" and isinstance(val, list) and len(val) == 2:
            return models.direct_product(_group_table(val[0]), _group_table(val[1]))
    raise ModelFileError("group must be {cyclic: n}, {symmetric: k}, {table: [...]} or {product: [g, h]}")


def _complex_pairs(value, n) -> np.ndarray:
    a = _matrix(value, "generator")
    if a.shape == (n ** 4, 2):
        flat = a[:, 0] + 1j * a[:, 1]
    elif a.shape == (n ** 4,):
        flat = a.astype(complex)
    else:
        raise ModelFileError(f"generator must hold {n ** 4} entries (optionally as [re, im] pairs)")
    return flat.reshape(n * n, n * n)


def build_model(mf: ModelFile) -> SemigroupModel:
    """Call the constructor for ``mf``; validation errors propagate."""
    doc, kind = mf.doc, mf.kind
    if kind == "depolarizing":
        n = _int(doc, "dim", kind)
        rate = _positive(doc, "rate", 1.0)
        fa = doc.get("fixed_algebra", "scalars")
        if fa == "scalars":
            target = scalars(n)
        elif fa == "diagonal":
            target = diagonal_algebra(n)
        elif isinstance(fa, dict) and isinstance(fa.get("tensor_factor"), int):
            m = fa["tensor_factor"]
            if m < 1 or n % m:
                raise ModelFileError("tensor_factor must divide dim")
            target = tensor_factor(n, m)
        else:
            raise ModelFileError("fixed_algebra must be scalars, diagonal or {tensor_factor: m}")
        model = models.depolarizing(n, target, rate)
    elif kind == "schur":
        b = _matrix(_require(doc, "b", kind), "b")
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ModelFileError("b must be a square matrix")
        if "dim" in doc and doc["dim"] != b.shape[0]:
            raise ModelFileError("dim does not match the size of b")
        model = models.schur_semigroup(models.SchurSpec(b))
    elif kind == "group_chain":
        table = _group_table(_require(doc, "group", kind))
        rates = _matrix(_require(doc, "rates", kind), "rates")
        g = len(table)
        if rates.shape not in ((g,), (g, g)):
            raise ModelFileError(f"rates must have shape ({g},) or ({g}, {g})")
        model = models.group_chain(models.GroupChainSpec(table, rates))
    elif kind == "pauli":
        m = _int(doc, "dim", kind, minimum=2)
        rates = _matrix(_require(doc, "rates", kind), "rates", (m, m))
        model = models.pauli_random_unitary(models.PauliSpec(m, rates))
    else:
        n = _int(doc, "dim", kind)
        model = models.custom_superoperator(n, _complex_pairs(_require(doc, "generator", kind), n))
    tw = doc.get("tensor_with")
    if tw is not None and tw > 1:
        model = model.tensor(tw)
    if mf.curvature is not None and mf.curvature.get("kind", "assumed") != "assumed":
        model.curvature_hint = (float(mf.curvature["lambda"]), mf.curvature["kind"])
    return model
