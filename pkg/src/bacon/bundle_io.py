"""Portable tensor-bundle interchange format.

A bundle is a directory holding ``manifest.json`` plus one raw binary file
per tensor.  Payloads are little-endian, row-major, with dtype one of
f32 / f64 / i64; byte order and layout are fixed by the format and never
declared per file.  A classifier export carries at least ``activations``
(N x D), ``weights`` (K x D) and ``labels`` (N), optionally ``biases`` (K)
and ``logits`` (N x K).

f32 payloads are promoted to f64 at access time; all downstream math is f64.
NaN or Inf anywhere in a float payload is a hard validation error.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, IntegrityError, IoError, ValidationError

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1

# fixed by the format, not declared per file
LAYOUT = "row-major"
BYTE_ORDER = "little-endian"

_DTYPE_CODES = {"f32": "<f4", "f64": "<f8", "i64": "<i8"}
_DTYPE_SIZES = {"f32": 4, "f64": 8, "i64": 8}

REQUIRED_TENSORS = ("activations", "weights", "labels")


@dataclass
class TensorEntry:
    """One named tensor: manifest row plus its decoded payload."""

    name: str
    dtype: str  # f32 | f64 | i64
    shape: tuple[int, ...]
    data_path: str
    array: np.ndarray  # decoded in the declared dtype, native layout

    def nbytes_expected(self) -> int:
        n = 1
        for s in self.shape:
            n *= s
        return n * _DTYPE_SIZES[self.dtype]


@dataclass
class TensorBundle:
    """In-memory bundle: tensor entries plus free-form string metadata."""

    tensors: list[TensorEntry]
    metadata: dict[str, str] = field(default_factory=dict)
    manifest_version: int = MANIFEST_VERSION

    def names(self) -> list[str]:
        return [t.name for t in self.tensors]

    def has(self, name: str) -> bool:
        return any(t.name == name for t in self.tensors)

    def tensor(self, name: str) -> TensorEntry:
        for t in self.tensors:
            if t.name == name:
                return t
        raise KeyError(name)

    # promoted accessors: downstream math is f64
    @property
    def activations(self) -> np.ndarray:
        return self.tensor("activations").array.astype(np.float64, copy=False)

    @property
    def weights(self) -> np.ndarray:
        return self.tensor("weights").array.astype(np.float64, copy=False)

    @property
    def labels(self) -> np.ndarray:
        return self.tensor("labels").array.astype(np.int64, copy=False)

    @property
    def biases(self) -> np.ndarray | None:
        if not self.has("biases"):
            return None
        return self.tensor("biases").array.astype(np.float64, copy=False)

    @property
    def logits(self) -> np.ndarray | None:
        if not self.has("logits"):
            return None
        return self.tensor("logits").array.astype(np.float64, copy=False)

    @property
    def n_samples(self) -> int:
        return self.tensor("activations").shape[0]

    @property
    def n_features(self) -> int:
        return self.tensor("activations").shape[1]

    @property
    def n_classes(self) -> int:
        return self.tensor("weights").shape[0]

    def validate(self, allow_empty: bool = False) -> None:
        """Check every bundle invariant; raise ValidationError on the first hit.

        ``allow_empty`` permits N == 0 (a legally-sampled empty subset);
        exports consumed for computation require N >= 1.
        """
        names = self.names()
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate tensor names in bundle: {names}")
        for required in REQUIRED_TENSORS:
            if required not in names:
                raise ValidationError(f"bundle is missing required tensor {required!r}")

        act = self.tensor("activations")
        wts = self.tensor("weights")
        lbl = self.tensor("labels")
        if len(act.shape) != 2:
            raise ValidationError(f"activations must be 2-D, got shape {act.shape}")
        if len(wts.shape) != 2:
            raise ValidationError(f"weights must be 2-D, got shape {wts.shape}")
        if len(lbl.shape) != 1:
            raise ValidationError(f"labels must be 1-D, got shape {lbl.shape}")

        n, d = act.shape
        k = wts.shape[0]
        if n < 1 and not allow_empty:
            raise ValidationError("bundle has no samples (N == 0)")
        if d < 1:
            raise ValidationError("bundle has no features (D == 0)")
        if k < 2:
            raise ValidationError(f"need at least 2 classes, got K={k}")
        if wts.shape[1] != d:
            raise ValidationError(
                f"weights width {wts.shape[1]} does not match activations width {d}"
            )
        if lbl.shape[0] != n:
            raise ValidationError(f"labels length {lbl.shape[0]} != N={n}")
        if lbl.dtype != "i64":
            raise ValidationError("labels must have dtype i64")
        if n > 0:
            lo, hi = int(lbl.array.min()), int(lbl.array.max())
            if lo < 0 or hi >= k:
                raise ValidationError(
                    f"label values must lie in [0, {k}), found range [{lo}, {hi}]"
                )

        if self.has("biases"):
            b = self.tensor("biases")
            if b.shape != (k,):
                raise ValidationError(f"biases shape {b.shape} != ({k},)")
        if self.has("logits"):
            lg = self.tensor("logits")
            if lg.shape != (n, k):
                raise ValidationError(f"logits shape {lg.shape} != ({n}, {k})")

        for t in self.tensors:
            if t.dtype in ("f32", "f64") and t.array.size and not np.isfinite(t.array).all():
                raise ValidationError(f"tensor {t.name!r} contains NaN or Inf")


def make_entry(name: str, array: np.ndarray, dtype: str | None = None) -> TensorEntry:
    """Wrap an ndarray as a TensorEntry, inferring dtype unless given."""
    if dtype is None:
        if array.dtype == np.float32:
            dtype = "f32"
        elif array.dtype == np.float64:
            dtype = "f64"
        elif array.dtype == np.int64:
            dtype = "i64"
        else:
            raise ValidationError(f"unsupported dtype {array.dtype} for tensor {name!r}")
    arr = np.ascontiguousarray(array.astype(_DTYPE_CODES[dtype][1:], copy=False))
    return TensorEntry(
        name=name,
        dtype=dtype,
        shape=tuple(int(s) for s in arr.shape),
        data_path=f"{name}.bin",
        array=arr,
    )


def bundle_from_arrays(
    activations: np.ndarray,
    weights: np.ndarray,
    labels: np.ndarray,
    biases: np.ndarray | None = None,
    logits: np.ndarray | None = None,
    extra: dict[str, np.ndarray] | None = None,
    metadata: dict[str, str] | None = None,
) -> TensorBundle:
    """Assemble an in-memory classifier-export bundle (f64 payloads)."""
    tensors = [
        make_entry("activations", np.asarray(activations, dtype=np.float64)),
        make_entry("weights", np.asarray(weights, dtype=np.float64)),
        make_entry("labels", np.asarray(labels, dtype=np.int64)),
    ]
    if biases is not None:
        tensors.append(make_entry("biases", np.asarray(biases, dtype=np.float64)))
    if logits is not None:
        tensors.append(make_entry("logits", np.asarray(logits, dtype=np.float64)))
    for name, arr in (extra or {}).items():
        tensors.append(make_entry(name, arr))
    return TensorBundle(tensors=tensors, metadata=dict(metadata or {}))


def read_bundle(path: str | os.PathLike, allow_empty: bool = False) -> TensorBundle:
    """Read and fully validate a bundle directory.

    Raises FormatError for a missing/malformed manifest, IntegrityError when a
    payload's byte length disagrees with its declared shape, ValidationError
    for any domain-invariant violation.
    """
    path = os.fspath(path)
    manifest_path = os.path.join(path, MANIFEST_NAME)
    if not os.path.isfile(manifest_path):
        raise FormatError(f"no {MANIFEST_NAME} in {path}")
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable manifest in {path}: {exc}") from exc

    if not isinstance(manifest, dict) or "tensors" not in manifest:
        raise FormatError("manifest must be an object with a 'tensors' list")
    version = manifest.get("manifest_version")
    if version != MANIFEST_VERSION:
        raise FormatError(f"unsupported manifest_version {version!r}")

    tensors: list[TensorEntry] = []
    for row in manifest["tensors"]:
        try:
            name = row["name"]
            dtype = row["dtype"]
            shape = tuple(int(s) for s in row["shape"])
            data_path = row["data_path"]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed tensor row {row!r}") from exc
        if dtype not in _DTYPE_CODES:
            raise FormatError(f"tensor {name!r} has unknown dtype {dtype!r}")
        if any(s < 0 for s in shape):
            raise FormatError(f"tensor {name!r} has negative dimension in {shape}")

        file_path = os.path.join(path, data_path)
        if not os.path.isfile(file_path):
            raise IntegrityError(f"missing data file {data_path!r} for tensor {name!r}")
        expected = int(np.prod(shape, dtype=np.int64)) * _DTYPE_SIZES[dtype]
        actual = os.path.getsize(file_path)
        if actual != expected:
            raise IntegrityError(
                f"tensor {name!r}: file {data_path!r} holds {actual} bytes, "
                f"shape {shape} x {dtype} requires {expected}"
            )
        raw = np.fromfile(file_path, dtype=_DTYPE_CODES[dtype])
        array = raw.reshape(shape)  # row-major
        tensors.append(TensorEntry(name, dtype, shape, data_path, array))

    metadata = manifest.get("metadata", {})
    if not isinstance(metadata, dict):
        raise FormatError("manifest 'metadata' must be an object")
    bundle = TensorBundle(
        tensors=tensors,
        metadata={str(k): str(v) for k, v in metadata.items()},
        manifest_version=version,
    )
    bundle.validate(allow_empty=allow_empty)
    return bundle


def write_bundle(bundle: TensorBundle, path: str | os.PathLike) -> None:
    """Write a bundle directory; round-trips bit-exactly through read_bundle."""
    bundle.validate(allow_empty=True)
    path = os.fspath(path)
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create bundle directory {path}: {exc}") from exc

    manifest = {
        "manifest_version": bundle.manifest_version,
        "tensors": [
            {
                "name": t.name,
                "dtype": t.dtype,
                "shape": list(t.shape),
                "data_path": t.data_path,
            }
            for t in bundle.tensors
        ],
        "metadata": bundle.metadata,
    }
    try:
        for t in bundle.tensors:
            # force little-endian regardless of host
            t.array.astype(_DTYPE_CODES[t.dtype], copy=False).tofile(
                os.path.join(path, t.data_path)
            )
        with open(os.path.join(path, MANIFEST_NAME), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write bundle at {path}: {exc}") from exc
