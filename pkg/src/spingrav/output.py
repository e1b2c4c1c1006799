"""Deterministic file emission: CSV writers, metadata sidecars, fingerprints.

Every data file is written with a fixed float format (scientific notation,
16 significant digits, LF endings) and each gets a JSON sidecar holding the
fully resolved configuration, so equal sidecars imply byte-identical data.
No timestamps anywhere; reruns are reproducible.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor

ARTIFACT_VERSION = "0.1.0"


def fmt(x) -> str:
    return format(float(x), ".15e")


def fingerprint(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def write_csv(path: str, header: list[str], rows, comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if not isinstance(v, str) else v for v in row))
            fh.write("\n")


def write_sidecar(data_path: str, payload: dict) -> str:
    path = data_path + ".meta.json"
    body = dict(payload)
    body["artifact_version"] = ARTIFACT_VERSION
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(body, sort_keys=True, indent=2))
        fh.write("\n")
    return path


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def parallel_map(fn, items: list, workers: int) -> list:
    """Order-preserving map; results are identical for any worker count."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
