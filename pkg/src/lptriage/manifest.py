"""Reproducibility manifests written next to every CLI artifact."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, subcommand: str, settings: dict, inputs: list, outputs: list) -> Path:
    """settings: the fully-resolved configuration (flags > file > defaults)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "lptriage",
        "version": __version__,
        "subcommand": subcommand,
        "settings": settings,
        "config_hash": hashlib.sha256(
            json.dumps(settings, sort_keys=True, default=str).encode("utf-8")
        ).hexdigest(),
        "input_hashes": {str(p): file_sha256(p) for p in inputs if p and Path(p).is_file()},
        "outputs": [str(p) for p in outputs],
    }
    path = out_dir / f"manifest-{subcommand}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
