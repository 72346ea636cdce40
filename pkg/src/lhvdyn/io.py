"""File formats: state lists, CSV tables, JSON reports and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import os

import numpy as np

from .quantum import BlochTwoQubit


def read_states(path) -> list[BlochTwoQubit]:
    """One state per line: a (3), b (3), T row-major (9), whitespace or comma separated."""
    states = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                values = [float(x) for x in line.replace(",", " ").split()]
                states.append(BlochTwoQubit.from_vector(values))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return states


def write_states(path, states) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# a1 a2 a3 b1 b2 b3 T11 T12 T13 T21 T22 T23 T31 T32 T33\n")
        for s in states:
            fh.write(" ".join(repr(float(x)) for x in s.as_vector()) + "\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def git_blob_hash(data: bytes) -> str:
    """Content hash computed the way git hashes blobs."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def file_hash(path) -> str:
    with open(path, "rb") as fh:
        return git_blob_hash(fh.read())


def write_manifest(out_dir, command: str, config: dict, inputs=(), outputs=()) -> str:
    """manifest.json with the config echo and content hashes of inputs and outputs.

    The output directory itself is left out of the echo so that runs written
    to different places produce the same manifest.
    """
    config = {k: v for k, v in config.items() if k != "out"}
    manifest = {
        "command": command,
        "config": config,
        "config_hash": git_blob_hash(json.dumps(_plain(config), sort_keys=True).encode()),
        "inputs": {os.path.basename(p): file_hash(p) for p in inputs},
        "outputs": {os.path.basename(p): file_hash(p) for p in outputs},
    }
    path = os.path.join(out_dir, "manifest.json")
    write_json(path, manifest)
    return path
