"""Model files and run manifests.

A model file is JSON::

    {"format": "fmqubo-model", "format_version": 1, "k": 2, "n_u": 1, "n_m": 2,
     "w0": 3.5, "w": [...d floats...], "V": [...k*d floats, row-major...],
     "user_codebook": {"n_bits": 1, "ids": [1, 7]},
     "item_codebook": {"n_bits": 2, "ids": [10, 20, 30], "rank": [2, 0, 1]}}

Floats are written with Python's shortest round-trip repr, so load(save(m))
reproduces every parameter bit for bit.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import platform
from pathlib import Path

import numpy as np

from . import __version__
from .encoding import ItemCodebook, UserCodebook
from .fm import FMModel

FORMAT = "fmqubo-model"
FORMAT_VERSION = 1


def _plain(values):
    return [v.item() if isinstance(v, np.generic) else v for v in values]


def save_model(path, model: FMModel, user_codebook: UserCodebook, item_codebook: ItemCodebook) -> None:
    if model.n_u != user_codebook.n_bits or model.n_m != item_codebook.n_bits:
        raise ValueError("model dimensions do not match the codebooks")
    payload = {
        "format": FORMAT,
        "format_version": FORMAT_VERSION,
        "k": model.k,
        "n_u": model.n_u,
        "n_m": model.n_m,
        "w0": model.w0,
        "w": model.w.tolist(),
        "V": model.V.ravel(order="C").tolist(),
        "user_codebook": {"n_bits": user_codebook.n_bits, "ids": _plain(user_codebook.user_ids)},
        "item_codebook": {
            "n_bits": item_codebook.n_bits,
            "ids": _plain(item_codebook.item_ids),
            "rank": item_codebook.item_rank.tolist(),
        },
    }
    Path(path).write_text(json.dumps(payload, allow_nan=False) + "\n")


def load_model(path):
    """Return ``(model, user_codebook, item_codebook)``."""
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != FORMAT:
        raise ValueError(f"{path}: not an fmqubo model file")
    if payload.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format_version {payload.get('format_version')!r}")
    k, n_u, n_m = payload["k"], payload["n_u"], payload["n_m"]
    V = np.array(payload["V"], dtype=np.float64)
    if V.size != k * (n_u + n_m):
        raise ValueError(f"{path}: V has {V.size} entries, expected {k * (n_u + n_m)}")
    model = FMModel(payload["w0"], np.array(payload["w"], dtype=np.float64),
                    V.reshape(k, n_u + n_m), n_u, n_m)
    ucb = UserCodebook.build(payload["user_codebook"]["ids"])
    icb = ItemCodebook.from_rank(payload["item_codebook"]["ids"], payload["item_codebook"]["rank"])
    if ucb.n_bits != n_u or icb.n_bits != n_m:
        raise ValueError(f"{path}: codebook widths do not match n_u/n_m")
    return model, ucb, icb


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(output_path, command: str, config: dict, inputs=(), outputs=()) -> Path:
    """Write ``<output>.manifest.json`` next to ``output_path`` and return its path."""
    output_path = Path(output_path)
    manifest = {
        "command": command,
        "seed": config.get("seed"),
        "config": config,
        "inputs": {str(p): file_digest(p) for p in inputs},
        "outputs": [str(p) for p in (output_path, *outputs)],
        "versions": {
            "fmqubo": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    target = output_path.with_name(output_path.name + ".manifest.json")
    target.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return target
