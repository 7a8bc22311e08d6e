"""Versioned checkpoint container.

Layout (UTF-8 header, then binary records)::

    NESTNER-CHECKPOINT
    format_version=1
    <key>=<json value>            one line per config entry, sorted by key
    params=<count>
    END-HEADER
    param <name> <d0>x<d1>... <nbytes>\\n<little-endian f64 payload>\\n   (repeated)
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .annotations import TagScheme
from .encoder import EncoderConfig
from .errors import CorruptPayload, ShapeMismatch, VersionMismatch
from .model import NestedNER

MAGIC = b"NESTNER-CHECKPOINT"
FORMAT_VERSION = 1
END = b"END-HEADER"


def model_config(model: NestedNER) -> dict:
    c = model.encoder_config
    return {
        "n_layers": c.n_layers, "n_heads": c.n_heads, "d_model": c.d_model, "d_ff": c.d_ff,
        "max_len": c.max_len, "tag_layer": c.tag_layer, "dropout": c.dropout,
        "tag_dropout": c.tag_dropout, "read_scheme": c.read_scheme.kind,
        "write_scheme": model.write_scheme.kind, "labels": list(model.write_scheme.labels),
        "constrained": model.constrained, "seed": model.seed, "tokens": model.tokens,
    }


def model_from_config(cfg: dict, params=None) -> NestedNER:
    labels = cfg["labels"]
    enc = EncoderConfig(vocab_size=len(cfg["tokens"]), max_len=cfg["max_len"],
                        n_layers=cfg["n_layers"], n_heads=cfg["n_heads"], d_model=cfg["d_model"],
                        d_ff=cfg["d_ff"], tag_layer=cfg["tag_layer"], dropout=cfg["dropout"],
                        tag_dropout=cfg["tag_dropout"],
                        read_scheme=TagScheme(cfg["read_scheme"], labels))
    return NestedNER(enc, TagScheme(cfg["write_scheme"], labels), cfg["tokens"],
                     constrained=cfg["constrained"], seed=cfg["seed"], params=params)


def save_checkpoint(path, model: NestedNER) -> None:
    cfg = model_config(model)
    out = [MAGIC, f"format_version={FORMAT_VERSION}".encode()]
    out += [f"{k}={json.dumps(cfg[k], ensure_ascii=False)}".encode("utf-8") for k in sorted(cfg)]
    out += [f"params={len(model.params)}".encode(), END]
    blob = bytearray(b"\n".join(out) + b"\n")
    for name, p in model.params.items():
        payload = np.ascontiguousarray(p.data, dtype="<f8").tobytes()
        shape = "x".join(str(d) for d in p.shape) or "scalar"
        blob += f"param {name} {shape} {len(payload)}\n".encode() + payload + b"\n"
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path) -> NestedNER:
    data = Path(path).read_bytes()
    pos = 0

    def next_line():
        nonlocal pos
        nl = data.find(b"\n", pos)
        if nl < 0:
            raise CorruptPayload(f"{path}: unexpected end of file")
        line, pos = data[pos:nl], nl + 1
        return line

    if next_line() != MAGIC:
        raise VersionMismatch(f"{path}: not a checkpoint file")
    version = next_line().decode()
    if version != f"format_version={FORMAT_VERSION}":
        raise VersionMismatch(f"{path}: unsupported {version!r} (expected version {FORMAT_VERSION})")
    cfg = {}
    while True:
        line = next_line()
        if line == END:
            break
        key, _, value = line.decode("utf-8").partition("=")
        cfg[key] = json.loads(value)
    try:
        model = model_from_config(cfg)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptPayload(f"{path}: bad header ({exc})") from None
    if cfg.get("params") != len(model.params):
        raise ShapeMismatch(f"{path}: {cfg.get('params')} parameter records, model has {len(model.params)}")
    for name, p in model.params.items():
        fields = next_line().decode().split()
        if len(fields) != 4 or fields[0] != "param":
            raise CorruptPayload(f"{path}: malformed record header {fields!r}")
        _, rec_name, shape, nbytes = fields
        expected = "x".join(str(d) for d in p.shape) or "scalar"
        if rec_name != name or shape != expected:
            raise ShapeMismatch(f"{path}: record {rec_name} {shape}, expected {name} {expected}")
        nbytes = int(nbytes)
        if nbytes != p.data.size * 8 or pos + nbytes + 1 > len(data) or data[pos + nbytes:pos + nbytes + 1] != b"\n":
            raise CorruptPayload(f"{path}: payload of {name} is truncated or mis-sized")
        p.data = np.frombuffer(data[pos:pos + nbytes], dtype="<f8").astype(np.float64).reshape(p.shape)
        pos += nbytes + 1
    if pos != len(data):
        raise CorruptPayload(f"{path}: {len(data) - pos} trailing bytes")
    return model
