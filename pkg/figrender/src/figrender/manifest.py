"""Manifest-gated artifact access: every read is checksum-verified."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np


class MissingArtifact(Exception):
    """A required file is absent from the manifest or from disk."""


class ChecksumMismatch(Exception):
    """An artifact changed since the manifest was written; failing closed."""


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class ManifestReader:
    """Resolves artifact names against manifest.json and verifies checksums."""

    def __init__(self, manifest_path: str | Path):
        self.manifest_path = Path(manifest_path)
        if not self.manifest_path.exists():
            raise MissingArtifact(f"manifest not found: {self.manifest_path}")
        doc = json.loads(self.manifest_path.read_text())
        self.root = self.manifest_path.parent
        self.entries = {e["path"]: e["sha256"] for e in doc.get("files", [])}
        self.config = doc.get("config", {})

    def has(self, name: str) -> bool:
        return name in self.entries

    def path(self, name: str) -> Path:
        if name not in self.entries:
            raise MissingArtifact(f"{name} is not listed in the manifest")
        path = self.root / name
        if not path.exists():
            raise MissingArtifact(f"{name} listed in manifest but missing on disk")
        digest = _sha256(path)
        if digest != self.entries[name]:
            raise ChecksumMismatch(
                f"{name}: sha256 {digest} does not match manifest "
                f"{self.entries[name]}")
        return path

    def json(self, name: str) -> dict:
        return json.loads(self.path(name).read_text())

    def matrix(self, name: str) -> np.ndarray:
        path = self.path(name)
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise ValueError(f"{name}: malformed CSV: {exc}") from exc
        return data

    def table(self, name: str) -> tuple[list[str], list[list[str]]]:
        path = self.path(name)
        with open(path, newline="") as f:
            reader = csv.reader(f)
            try:
                header = next(reader)
            except StopIteration as exc:
                raise ValueError(f"{name}: empty CSV") from exc
            rows = [row for row in reader if row]
        return header, rows
