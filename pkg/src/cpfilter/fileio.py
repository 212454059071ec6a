"""File formats and run manifests for the command-line tools.

Signals are newline-delimited decimal text (or single-column CSV with an
optional "value" header). Changepoint sets are JSON arrays of 1-based
integers. Edge lists are "i j" pairs per line, 1-based. Structured
results are JSON; numbers serialize with shortest round-trip repr, and
infinite distances appear as the JSON token Infinity.

Every output file gets a sibling manifest recording the resolved
parameters, input digests, seed, and tool version; `rerun` replays the
recorded invocation and reproduces the outputs byte for byte.
"""

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def read_signal(path):
    """Read a signal file: one decimal per line, optional 'value' header."""
    values = []
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            text = line.strip().rstrip(",")
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                if ln == 1 and text.lower() == "value":
                    continue
                raise ValueError(
                    f"{path}:{ln}: not a decimal value: {text!r}") from None
    if not values:
        raise ValueError(f"{path}: no values found")
    return np.asarray(values, dtype=float)


def write_signal(path, values):
    with open(path, "w") as fh:
        for v in np.asarray(values, dtype=float):
            fh.write(f"{float(v)!r}\n")


def read_changepoint_set(path):
    """JSON array of 1-based integer indices."""
    data = read_json(path)
    if not isinstance(data, list) or any(
            not isinstance(v, int) or isinstance(v, bool) for v in data):
        raise ValueError(f"{path}: expected a JSON array of integers")
    return np.asarray(data, dtype=int)


def read_edge_list(path):
    """Edge list file: '<i> <j>' per line, 1-based, no dups or self-loops."""
    edges = []
    seen = set()
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{ln}: expected two node ids")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ValueError(
                    f"{path}:{ln}: node ids must be integers") from None
            if i == j:
                raise ValueError(f"{path}:{ln}: self-loop {i}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"{path}:{ln}: duplicate edge {key}")
            seen.add(key)
            edges.append(key)
    if not edges:
        raise ValueError(f"{path}: no edges found")
    return np.asarray(edges, dtype=int)


def write_csv(path, rows, columns):
    """Write dict rows with a fixed column order; floats keep full repr."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] for c in columns])


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Resolved record of one CLI invocation."""

    subcommand: str
    argv: list
    params: dict
    inputs: dict
    outputs: list
    seed: int
    version: str

    def write(self, output_path):
        path = str(output_path) + ".manifest.json"
        write_json(path, asdict(self))
        return path


def read_manifest(path):
    data = read_json(path)
    try:
        return RunManifest(**data)
    except TypeError as exc:
        raise ValueError(f"{path}: not a run manifest ({exc})") from None
