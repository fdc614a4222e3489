"""File formats: recording CSV, dataset manifests, envelopes, prototypes, matrices.

Recordings are CSV with a ``t,x,y,z,pressure,force`` header and one row per
sample; ``t`` is validated for monotonicity and otherwise ignored. Values
are written with shortest-roundtrip precision so export/ingest is lossless.
A dataset is a JSON manifest ``{name, items: [{file, skill, participant}]}``
next to its recording files.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from .cluster import DistanceMatrix
from .core import DEFAULT_CHANNELS, Dataset, LabeledSeries, MultiSeries
from .envelope import Envelope
from .errors import ParseError, ValidationError
from .prototype import Prototype

SAMPLE_PERIOD = 0.002


def channel_names(n_vars: int) -> tuple[str, ...]:
    if n_vars == len(DEFAULT_CHANNELS):
        return DEFAULT_CHANNELS
    return tuple(f"v{k}" for k in range(n_vars))


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def save_recording(path, series: MultiSeries, dt: float = SAMPLE_PERIOD) -> None:
    names = channel_names(series.n_vars)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t", *names))
        for i, row in enumerate(series.values):
            writer.writerow((f"{i * dt:.6f}", *(repr(float(v)) for v in row)))


def _parse_cell(path, line_no, col_no, text) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(path, line_no, col_no, f"not a number: {text!r}") from None
    if not np.isfinite(value):
        raise ParseError(path, line_no, col_no, f"non-finite value: {text!r}")
    return value


def load_recording(path) -> MultiSeries:
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, 1, "empty file") from None
        if not header or header[0].strip() != "t" or len(header) < 2:
            raise ParseError(path, 1, 1, f"expected a 't,<channels...>' header, got {header!r}")
        width = len(header)
        prev_t = -np.inf
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(path, line_no, len(row) + 1, f"expected {width} columns, got {len(row)}")
            t = _parse_cell(path, line_no, 1, row[0])
            if t <= prev_t:
                raise ParseError(path, line_no, 1, f"time column not strictly increasing at t={row[0]}")
            prev_t = t
            rows.append([_parse_cell(path, line_no, c + 1, cell) for c, cell in enumerate(row[1:], start=1)])
    if not rows:
        raise ParseError(path, 2, 1, "recording has no samples")
    return MultiSeries(np.asarray(rows))


def _safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", text)


def save_dataset(directory, dataset: Dataset) -> Path:
    """Write one CSV per item plus the JSON manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, item in enumerate(dataset.items):
        fname = f"{k:03d}_{_safe_name(item.participant)}.csv"
        save_recording(directory / fname, item.series)
        entries.append({"file": fname, "skill": item.skill, "participant": item.participant})
    manifest = directory / "manifest.json"
    dump_json(manifest, {"name": dataset.name, "items": entries})
    return manifest


def load_dataset(manifest_path) -> Dataset:
    """Load a dataset from its manifest, validating labels and recording files."""
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.json"
    try:
        doc = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(manifest_path, exc.lineno, exc.colno, f"invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict) or "items" not in doc:
        raise ValidationError(f"{manifest_path}: manifest must be an object with an 'items' list")
    items = []
    for k, entry in enumerate(doc["items"]):
        for key in ("file", "skill", "participant"):
            if key not in entry:
                raise ValidationError(f"{manifest_path}: item {k} is missing {key!r}")
        series = load_recording(manifest_path.parent / entry["file"])
        items.append(LabeledSeries(series=series, skill=entry["skill"], participant=entry["participant"]))
    return Dataset(tuple(items), name=doc.get("name", manifest_path.parent.name))


def save_envelope(path, envelope: Envelope) -> None:
    """Envelope CSV with {channel}_upper/{channel}_lower columns plus a JSON sidecar."""
    path = Path(path)
    names = channel_names(envelope.n_vars)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = []
        for name in names:
            header += [f"{name}_upper", f"{name}_lower"]
        writer.writerow(header)
        for i in range(envelope.n):
            row = []
            for v in range(envelope.n_vars):
                row += [repr(float(envelope.upper[i, v])), repr(float(envelope.lower[i, v]))]
            writer.writerow(row)
    dump_json(path.with_suffix(".json"), {"window": envelope.window, "sourceCount": envelope.source_count})


def load_envelope(path) -> Envelope:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) % 2 != 0:
            raise ParseError(path, 1, 1, "envelope needs paired upper/lower columns")
        n_vars = len(header) // 2
        upper_rows, lower_rows = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(path, line_no, len(row) + 1, f"expected {len(header)} columns")
            cells = [_parse_cell(path, line_no, c + 1, cell) for c, cell in enumerate(row)]
            upper_rows.append(cells[0::2])
            lower_rows.append(cells[1::2])
    sidecar = json.loads(path.with_suffix(".json").read_text())
    return Envelope(
        upper=np.asarray(upper_rows),
        lower=np.asarray(lower_rows),
        window=int(sidecar["window"]),
        source_count=int(sidecar["sourceCount"]),
    )


def save_prototype(path, prototype: Prototype) -> None:
    """Prototype as a recording CSV plus a {method, sourceCount, params} sidecar."""
    path = Path(path)
    save_recording(path, prototype.series)
    params = {k: v for k, v in prototype.params.items() if _jsonable(v)}
    dump_json(
        path.with_suffix(".json"),
        {"method": prototype.method, "sourceCount": prototype.source_count, "params": params},
    )


def _jsonable(v) -> bool:
    try:
        json.dumps(v)
        return True
    except TypeError:
        return False


def load_prototype(path) -> Prototype:
    path = Path(path)
    series = load_recording(path)
    sidecar = json.loads(path.with_suffix(".json").read_text())
    return Prototype(
        series=series,
        method=sidecar["method"],
        source_count=int(sidecar["sourceCount"]),
        params=sidecar.get("params", {}),
    )


def save_matrix_csv(path, array) -> None:
    """Plain numeric CSV with shortest-roundtrip float formatting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(array, dtype=np.float64):
            writer.writerow([repr(float(v)) for v in row])


def save_distance_matrix(path, matrix: DistanceMatrix, kind: str = "normalized") -> None:
    save_matrix_csv(path, matrix.full(kind))


def load_distance_matrix(path) -> DistanceMatrix:
    """Read a square symmetric CSV back as a raw-only distance matrix."""
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if row:
                rows.append([_parse_cell(path, line_no, c + 1, cell) for c, cell in enumerate(row)])
    full = np.asarray(rows)
    n = full.shape[0]
    if full.shape != (n, n):
        raise ValidationError(f"{path}: distance matrix must be square, got {full.shape}")
    if not np.allclose(full, full.T):
        raise ValidationError(f"{path}: distance matrix must be symmetric")
    iu = np.triu_indices(n, k=1)
    return DistanceMatrix(size=n, raw=full[iu], path_lengths=None)


def dendrogram_to_json(merges) -> list[dict]:
    return [{"left": int(l), "right": int(r), "height": float(h)} for l, r, h in merges]


def write_events_jsonl(path, events) -> None:
    with open(path, "w") as fh:
        for event in events:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
