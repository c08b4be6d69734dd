"""Versioned binary checkpoints for the Q-network.

Layout: a single JSON header line (sorted keys) describing the format
version, dimensions, array manifest, optimizer scalars, and training
metadata, followed by the raw little-endian float64 array buffers in
manifest order. Serialization is bit-exact: save(load(path)) reproduces
the file byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .qnet import AdamState, DecoderParams, QNetParams, PARAM_KEYS
from .encoder import EncoderParams, FEATURE_DIM

FORMAT_NAME = "ltimax-checkpoint"
FORMAT_VERSION = 1


@dataclass
class CheckpointData:
    params: QNetParams
    adam: AdamState | None
    layers: int
    metadata: dict


def _array_entries(params: QNetParams, adam: AdamState | None):
    entries = [(key, params.get(key)) for key in PARAM_KEYS]
    if adam is not None:
        for key in PARAM_KEYS:
            entries.append((f"adam_m_{key}", adam.m[key]))
        for key in PARAM_KEYS:
            entries.append((f"adam_v_{key}", adam.v[key]))
    return entries


def save_checkpoint(path, params: QNetParams, layers: int,
                    adam: AdamState | None = None,
                    metadata: dict | None = None) -> None:
    entries = _array_entries(params, adam)
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "c": FEATURE_DIM,
        "d": params.dim,
        "layers": int(layers),
        "arrays": [{"name": name, "shape": list(arr.shape)}
                   for name, arr in entries],
        "metadata": metadata or {},
    }
    if adam is not None:
        header["optimizer"] = {
            "learning_rate": adam.learning_rate,
            "beta1": adam.beta1,
            "beta2": adam.beta2,
            "epsilon": adam.epsilon,
            "step_count": adam.step_count,
        }
    blob = json.dumps(header, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(blob)
        handle.write(b"\n")
        for _, arr in entries:
            handle.write(np.ascontiguousarray(
                arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> CheckpointData:
    with open(path, "rb") as handle:
        header_line = handle.readline()
        payload = handle.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"not a checkpoint file: {path}") from exc
    if header.get("format") != FORMAT_NAME:
        raise ConfigError(f"not a checkpoint file: {path}")
    if header.get("version") != FORMAT_VERSION:
        raise ConfigError(
            f"checkpoint version {header.get('version')} unsupported "
            f"(expected {FORMAT_VERSION})")

    arrays = {}
    offset = 0
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(payload):
            raise ConfigError(f"checkpoint truncated: {path}")
        arrays[entry["name"]] = np.frombuffer(
            payload, dtype="<f8", count=count, offset=offset,
        ).reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(payload):
        raise ConfigError(f"checkpoint has trailing bytes: {path}")

    encoder = EncoderParams(W1=arrays["W1"], W2=arrays["W2"], W3=arrays["W3"])
    decoder = DecoderParams(W4=arrays["W4"], W5=arrays["W5"])
    encoder.validate()
    decoder.validate(encoder.dim)
    params = QNetParams(encoder=encoder, decoder=decoder,
                        target_encoder=encoder.copy(),
                        target_decoder=decoder.copy())
    adam = None
    if "optimizer" in header:
        opt = header["optimizer"]
        adam = AdamState(learning_rate=opt["learning_rate"],
                         beta1=opt["beta1"], beta2=opt["beta2"],
                         epsilon=opt["epsilon"],
                         step_count=int(opt["step_count"]))
        for key in PARAM_KEYS:
            adam.m[key] = arrays[f"adam_m_{key}"]
            adam.v[key] = arrays[f"adam_v_{key}"]
    return CheckpointData(params=params, adam=adam,
                          layers=int(header["layers"]),
                          metadata=header.get("metadata", {}))
