"""Versioned binary checkpoints.

Layout: magic, format version, a length-prefixed JSON header describing the
model kind, configuration, vocabularies, and the (name, shape, dtype, offset)
table, followed by the raw little-endian arrays back to back. A sidecar text
manifest (<path>.manifest.txt) lists names and shapes for quick diffing.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aligner import AlignerConfig, ContentAligner
from .corpus import Vocabulary
from .generator import GeneratorConfig, Seq2SeqGenerator

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "save_checkpoint",
    "load_checkpoint",
    "save_aligner",
    "load_aligner",
    "save_generator",
    "load_generator",
]

MAGIC = b"FFCK"
FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


@dataclass
class Checkpoint:
    kind: str
    arrays: dict[str, np.ndarray]
    meta: dict
    optimizer: dict | None
    format_version: int


def _dtype_tag(arr: np.ndarray) -> str:
    return {"float32": "f4", "float64": "f8"}[str(arr.dtype)]


def save_checkpoint(
    path: str | Path,
    kind: str,
    arrays: dict[str, np.ndarray],
    meta: dict,
    optimizer: dict | None = None,
) -> None:
    entries = []
    blobs = []
    offset = 0
    optimizer_header = None
    all_arrays = dict(arrays)
    if optimizer is not None:
        optimizer_header = {
            k: v for k, v in optimizer.items() if k not in ("m", "v")
        }
        for moment in ("m", "v"):
            for name, arr in optimizer.get(moment, {}).items():
                all_arrays[f"optim.{moment}.{name}"] = arr
    for name in sorted(all_arrays):
        arr = np.ascontiguousarray(all_arrays[name])
        raw = arr.astype(arr.dtype.newbyteorder("<")).tobytes()
        entries.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "dtype": _dtype_tag(arr),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        blobs.append(raw)
        offset += len(raw)
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "meta": meta,
        "entries": entries,
        "optimizer": optimizer_header,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for raw in blobs:
            fh.write(raw)
    manifest = Path(str(path) + ".manifest.txt")
    with open(manifest, "w", encoding="utf-8") as fh:
        fh.write(f"kind {kind}\n")
        for e in entries:
            fh.write(f"{e['name']} {'x'.join(map(str, e['shape']))} {e['dtype']}\n")


def load_checkpoint(path: str | Path) -> Checkpoint:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version > FORMAT_VERSION:
            raise CheckpointError(
                f"{path}: format version {version} is newer than supported "
                f"{FORMAT_VERSION}"
            )
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        data = fh.read()
    arrays = {}
    for e in header["entries"]:
        raw = data[e["offset"] : e["offset"] + e["nbytes"]]
        arr = np.frombuffer(raw, dtype=np.dtype(e["dtype"]).newbyteorder("<"))
        arrays[e["name"]] = arr.reshape(e["shape"]).copy()
    optimizer = header.get("optimizer")
    if optimizer is not None:
        optimizer = dict(optimizer)
        optimizer["m"] = {
            n[len("optim.m.") :]: a
            for n, a in arrays.items()
            if n.startswith("optim.m.")
        }
        optimizer["v"] = {
            n[len("optim.v.") :]: a
            for n, a in arrays.items()
            if n.startswith("optim.v.")
        }
    model_arrays = {
        n: a for n, a in arrays.items() if not n.startswith("optim.")
    }
    return Checkpoint(
        header["kind"], model_arrays, header["meta"], optimizer, header["format_version"]
    )


def _params_of(model) -> dict[str, np.ndarray]:
    return {p.name: p.data for p in model.parameters()}


def _restore_params(model, arrays: dict[str, np.ndarray]) -> None:
    for p in model.parameters():
        if p.name not in arrays:
            raise CheckpointError(f"checkpoint is missing parameter {p.name}")
        if tuple(arrays[p.name].shape) != p.data.shape:
            raise CheckpointError(
                f"parameter {p.name}: checkpoint shape "
                f"{arrays[p.name].shape} vs model shape {p.data.shape}"
            )
        p.data = arrays[p.name].astype(p.data.dtype)


def save_aligner(path: str | Path, model: ContentAligner) -> None:
    meta = {
        "config": dataclasses.asdict(model.config),
        "input_tokens": model.input_vocab.tokens,
        "output_tokens": model.output_vocab.tokens,
        "threshold": model.threshold,
        "threshold_coef_used": model.threshold_coef_used,
    }
    save_checkpoint(path, "aligner", _params_of(model), meta)


def load_aligner(path: str | Path) -> ContentAligner:
    ckpt = load_checkpoint(path)
    if ckpt.kind != "aligner":
        raise CheckpointError(f"{path}: expected an aligner checkpoint, got {ckpt.kind}")
    cfg_dict = dict(ckpt.meta["config"])
    cfg_dict["tune_coef_grid"] = tuple(cfg_dict.get("tune_coef_grid", ()))
    config = AlignerConfig(**cfg_dict)
    model = ContentAligner(
        Vocabulary("input", ckpt.meta["input_tokens"]),
        Vocabulary("output", ckpt.meta["output_tokens"]),
        config,
        np.random.default_rng(0),
    )
    _restore_params(model, ckpt.arrays)
    model.threshold = ckpt.meta.get("threshold")
    model.threshold_coef_used = ckpt.meta.get("threshold_coef_used")
    return model


def save_generator(
    path: str | Path, model: Seq2SeqGenerator, extra_meta: dict | None = None
) -> None:
    meta = {
        "config": dataclasses.asdict(model.config),
        "input_tokens": model.input_vocab.tokens,
        "output_tokens": model.output_vocab.tokens,
    }
    if extra_meta:
        meta.update(extra_meta)
    save_checkpoint(path, "generator", _params_of(model), meta)


def load_generator(path: str | Path) -> Seq2SeqGenerator:
    ckpt = load_checkpoint(path)
    if ckpt.kind != "generator":
        raise CheckpointError(
            f"{path}: expected a generator checkpoint, got {ckpt.kind}"
        )
    cfg_dict = dict(ckpt.meta["config"])
    cfg_dict["lambda_schedule"] = tuple(
        (int(a), None if b is None else int(b), float(c))
        for a, b, c in cfg_dict.get("lambda_schedule", ())
    )
    config = GeneratorConfig(**cfg_dict)
    model = Seq2SeqGenerator(
        Vocabulary("input", ckpt.meta["input_tokens"]),
        Vocabulary("output", ckpt.meta["output_tokens"]),
        config,
        np.random.default_rng(0),
    )
    _restore_params(model, ckpt.arrays)
    return model
