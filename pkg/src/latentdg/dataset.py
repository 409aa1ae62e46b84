"""In-memory dataset container and on-disk layout.

A dataset directory holds:

    manifest.json   spec, per-sample metadata, and blob descriptors
    images.f32      N*H*W*6 float32, little-endian, C order
    depth.f32       N*hd*wd float32, little-endian
    labels.u8       N bytes, 0 = spoof, 1 = live

Pseudo-domain labels are training state, not data; they are kept in memory
(and in checkpoints) but never written into a dataset directory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .config import DatasetSpec

MANIFEST_NAME = "manifest.json"
FORMAT_VERSION = 1


class DatasetIOError(RuntimeError):
    """Raised when a dataset directory is missing, corrupt, or inconsistent."""


@dataclass
class Sample:
    """A single record: image (H, W, 6), class label, depth target, the
    generator's true domain id (diagnostics only), and the mutable
    pseudo-domain label (0 = not yet assigned)."""

    image: np.ndarray
    task_label: int
    depth_target: np.ndarray
    latent_domain_gt: int
    pseudo_domain: int = 0


@dataclass
class Dataset:
    """Column-oriented sample store. ``pseudo_domains`` starts all-zero and
    is only written by the clustering step (single writer, at epoch
    boundaries)."""

    spec: DatasetSpec
    images: np.ndarray  # (N, H, W, 6) float32
    labels: np.ndarray  # (N,) uint8
    depth: np.ndarray  # (N, hd, wd) float32
    latent_domain_gt: np.ndarray  # (N,) int64
    pseudo_domains: np.ndarray = field(default=None)  # (N,) int64, 0 = unassigned

    def __post_init__(self):
        if self.pseudo_domains is None:
            self.pseudo_domains = np.zeros(len(self.labels), dtype=np.int64)

    @property
    def n(self) -> int:
        return int(self.images.shape[0])

    def sample(self, i: int) -> Sample:
        return Sample(
            image=self.images[i],
            task_label=int(self.labels[i]),
            depth_target=self.depth[i],
            latent_domain_gt=int(self.latent_domain_gt[i]),
            pseudo_domain=int(self.pseudo_domains[i]),
        )

    def require_pseudo_domains(self) -> np.ndarray:
        """Pseudo labels, raising if any sample has not been assigned yet."""
        if np.any(self.pseudo_domains == 0):
            raise RuntimeError("pseudo_domains read before the first clustering pass")
        return self.pseudo_domains

    def subset(self, idx: np.ndarray) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            spec=self.spec,
            images=self.images[idx],
            labels=self.labels[idx],
            depth=self.depth[idx],
            latent_domain_gt=self.latent_domain_gt[idx],
            pseudo_domains=self.pseudo_domains[idx].copy(),
        )

    def equals(self, other: "Dataset") -> bool:
        return (
            self.spec == other.spec
            and np.array_equal(self.images, other.images)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.depth, other.depth)
            and np.array_equal(self.latent_domain_gt, other.latent_domain_gt)
        )


def _write_blob(path: str, arr: np.ndarray, dtype: str) -> dict:
    data = np.ascontiguousarray(arr, dtype=np.dtype(dtype).newbyteorder("<"))
    with open(path, "wb") as f:
        f.write(data.tobytes())
    return {
        "file": os.path.basename(path),
        "dtype": dtype,
        "shape": list(arr.shape),
        "byte_len": data.nbytes,
    }


def _read_blob(dirpath: str, desc: dict) -> np.ndarray:
    path = os.path.join(dirpath, desc["file"])
    if not os.path.exists(path):
        raise DatasetIOError(f"missing blob file {desc['file']}")
    expected = int(desc["byte_len"])
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) != expected:
        itemsize = np.dtype(desc["dtype"]).itemsize
        per_sample = int(np.prod(desc["shape"][1:])) * itemsize if len(desc["shape"]) > 1 else itemsize
        bad_index = len(raw) // per_sample if per_sample else 0
        raise DatasetIOError(
            f"blob {desc['file']}: expected {expected} bytes, got {len(raw)} "
            f"(truncation near sample {bad_index})"
        )
    arr = np.frombuffer(raw, dtype=np.dtype(desc["dtype"]).newbyteorder("<"))
    return arr.reshape(desc["shape"]).copy()


def save_dataset(dataset: Dataset, dirpath: str) -> None:
    """Write a dataset directory (manifest + binary blobs)."""
    os.makedirs(dirpath, exist_ok=True)
    blobs = {
        "images": _write_blob(os.path.join(dirpath, "images.f32"), dataset.images, "float32"),
        "depth": _write_blob(os.path.join(dirpath, "depth.f32"), dataset.depth, "float32"),
        "labels": _write_blob(os.path.join(dirpath, "labels.u8"), dataset.labels, "uint8"),
    }
    manifest = {
        "format_version": FORMAT_VERSION,
        "spec": dataset.spec.to_dict(),
        "n": dataset.n,
        "blobs": blobs,
        "samples": [
            {"id": i, "y": int(dataset.labels[i]), "latent_domain_gt": int(dataset.latent_domain_gt[i])}
            for i in range(dataset.n)
        ],
    }
    with open(os.path.join(dirpath, MANIFEST_NAME), "w") as f:
        json.dump(manifest, f, sort_keys=True)


def load_dataset(dirpath: str) -> Dataset:
    """Load a dataset directory; unknown manifest keys are ignored."""
    mpath = os.path.join(dirpath, MANIFEST_NAME)
    if not os.path.exists(mpath):
        raise DatasetIOError(f"no {MANIFEST_NAME} in {dirpath}")
    try:
        with open(mpath) as f:
            manifest = json.load(f)
    except json.JSONDecodeError as e:
        raise DatasetIOError(f"corrupt manifest in {dirpath}: {e}") from e

    for key in ("spec", "n", "blobs", "samples"):
        if key not in manifest:
            raise DatasetIOError(f"manifest missing required key {key!r}")

    spec = DatasetSpec.from_dict(manifest["spec"])
    images = _read_blob(dirpath, manifest["blobs"]["images"]).astype(np.float32)
    depth = _read_blob(dirpath, manifest["blobs"]["depth"]).astype(np.float32)
    labels = _read_blob(dirpath, manifest["blobs"]["labels"]).astype(np.uint8)

    n = int(manifest["n"])
    for name, arr in (("images", images), ("depth", depth), ("labels", labels)):
        if arr.shape[0] != n:
            raise DatasetIOError(f"blob {name} has {arr.shape[0]} samples, manifest says {n}")
    if len(manifest["samples"]) != n:
        raise DatasetIOError(f"manifest lists {len(manifest['samples'])} samples, expected {n}")

    gt = np.array([int(s["latent_domain_gt"]) for s in manifest["samples"]], dtype=np.int64)
    return Dataset(spec=spec, images=images, labels=labels, depth=depth, latent_domain_gt=gt)
