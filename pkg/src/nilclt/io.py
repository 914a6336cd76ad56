"""File formats: graph-spec JSON, path-sample CSV with a JSON sidecar."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__
from .graph import QuotientGraph, TransitionKernel, ValidationError
from .liegroup import GradedAlgebra
from .simulate import PathSampleSet


def _flat_voltage(v, alg):
    if v and isinstance(v[0], (list, tuple)):
        if [len(layer) for layer in v] != list(alg.dims):
            raise ValidationError(f"voltage {v} does not match layer dimensions {list(alg.dims)}")
        v = [x for layer in v for x in layer]
    v = [float(x) for x in v]
    if len(v) != alg.dim:
        raise ValidationError(f"voltage {v} needs {alg.dim} coordinates")
    return v


def graph_from_spec(spec: dict):
    """Build ``(graph, kernel)`` from a parsed graph-spec document."""
    if not isinstance(spec, dict):
        raise ValidationError("graph spec must be a JSON object")
    try:
        alg = GradedAlgebra.from_dict(spec.get("algebra", "heisenberg"))
        vertices = [str(v) for v in spec["vertices"]]
        pairs, probs = [], []
        for i, ep in enumerate(spec["edge_pairs"]):
            pairs.append((ep["o"], ep["t"], _flat_voltage(ep.get("voltage", [0.0] * alg.dim), alg)))
            probs += [float(ep["p"]), float(ep["p_rev"])]
    except (KeyError, TypeError, IndexError) as exc:
        raise ValidationError(f"malformed graph spec: missing or invalid field {exc}") from exc
    except ValueError as exc:
        raise ValidationError(f"malformed graph spec: {exc}") from exc
    if len(set(vertices)) != len(vertices):
        raise ValidationError("vertex ids must be unique")
    graph = QuotientGraph.from_pairs(alg, vertices, pairs)
    return graph, TransitionKernel(graph, np.array(probs))


def load_graph(path):
    try:
        spec = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    return graph_from_spec(spec)


def graph_to_spec(graph: QuotientGraph, kernel: TransitionKernel) -> dict:
    return {
        "algebra": graph.algebra.to_dict(),
        "vertices": list(graph.vertices),
        "edge_pairs": [
            {
                "o": graph.vertices[graph.origin[2 * k]],
                "t": graph.vertices[graph.terminus[2 * k]],
                "voltage": graph.voltage[2 * k].tolist(),
                "p": float(kernel.p[2 * k]),
                "p_rev": float(kernel.p[2 * k + 1]),
            }
            for k in range(graph.n_pairs)
        ],
    }


def coordinate_names(alg: GradedAlgebra) -> list[str]:
    return [f"g{k}_{i}" for k in range(1, alg.step + 1) for i in range(1, alg.dims[k - 1] + 1)]


def write_samples(samples: PathSampleSet, path, config: dict | None = None) -> tuple[Path, Path]:
    """CSV rows ``path_id, t, g1_1, ...`` (path-major) plus a ``.json`` sidecar."""
    path = Path(path)
    alg = samples.algebra
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path_id", "t"] + coordinate_names(alg))
        for pid in range(samples.n_paths):
            for li, t in enumerate(samples.times):
                w.writerow([pid, repr(float(t))] + [repr(float(x)) for x in samples.values[li, pid]])
    sidecar = path.with_suffix(".json")
    doc = {
        "version": __version__,
        "algebra": alg.to_dict(),
        "times": samples.times.tolist(),
        "meta": samples.meta,
        "config": config or {},
    }
    sidecar.write_text(json.dumps(doc, indent=2, sort_keys=True))
    return path, sidecar


def read_samples(path) -> PathSampleSet:
    path = Path(path)
    sidecar = path.with_suffix(".json")
    meta, alg = {}, None
    if sidecar.exists():
        doc = json.loads(sidecar.read_text())
        alg = GradedAlgebra.from_dict(doc["algebra"])
        meta = doc.get("meta", {})
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[:2] != ["path_id", "t"]:
        raise ValueError(f"{path}: unexpected header {header}")
    if alg is None:
        raise ValueError(f"{path}: missing sidecar {sidecar.name}; the algebra is unknown")
    if header[2:] != coordinate_names(alg):
        raise ValueError(f"{path}: columns {header[2:]} do not match the algebra")
    data = np.array(body, dtype=float)
    pids = data[:, 0].astype(np.int64)
    times = np.unique(data[:, 1])
    n_paths = int(pids.max()) + 1 if len(pids) else 0
    values = np.empty((len(times), n_paths, alg.dim))
    ti = np.searchsorted(times, data[:, 1])
    values[ti, pids] = data[:, 2:]
    return PathSampleSet(alg, times, values, meta)
