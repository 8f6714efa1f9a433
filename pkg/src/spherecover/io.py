"""Versioned JSON interchange format for surfaces (the SurfaceFile)."""

from __future__ import annotations

import json

import numpy as np

from .arrangement import BaseComplex, Edge, Face
from .surface import SurfaceComplex

SCHEMA_VERSION = 1


class SurfaceFileError(ValueError):
    pass


def _coord(x: float) -> str:
    return repr(float(x))


def base_to_dict(bc: BaseComplex) -> dict:
    return {
        "vertices": [None if v is None else [_coord(x) for x in v] for v in bc.vertices],
        "fans": [list(f) for f in bc.fans],
        "edges": [None if e is None else
                  {"a": e.a, "b": e.b, "kind": e.kind, "length": _coord(e.length)}
                  for e in bc.edges],
        "faces": [None if f is None else
                  {"cycle": list(f.cycle), "area": _coord(f.area)} for f in bc.faces],
        "specials": {str(v): lab for v, lab in bc.specials.items()},
        "markers": sorted(bc.markers),
        "traversal": list(bc.traversal),
    }


def base_from_dict(d: dict) -> BaseComplex:
    bc = BaseComplex()
    bc.vertices = [None if v is None else np.array([float(x) for x in v])
                   for v in d["vertices"]]
    bc.fans = [list(f) for f in d["fans"]]
    bc.edges = [None if e is None else
                Edge(e["a"], e["b"], e["kind"], float(e["length"])) for e in d["edges"]]
    bc.faces = [None if f is None else Face(list(f["cycle"]), float(f["area"]))
                for f in d["faces"]]
    bc.specials = {int(v): lab for v, lab in d["specials"].items()}
    bc.markers = set(d.get("markers", []))
    bc.traversal = list(d.get("traversal", []))
    return bc


def surface_to_dict(s: SurfaceComplex, metadata=None) -> dict:
    pairing = sorted(
        ([list(a), list(b)] for a, b in s.pairing.items() if a <= b),
        key=lambda x: x[0])
    return {
        "format": "spherecover-surface",
        "version": SCHEMA_VERSION,
        "base": base_to_dict(s.base),
        "copies": list(s.copies),
        "pairing": pairing,
        "metadata": metadata or {},
    }


def surface_from_dict(d: dict) -> SurfaceComplex:
    if d.get("format") != "spherecover-surface":
        raise SurfaceFileError("not a surface file")
    if d.get("version") != SCHEMA_VERSION:
        raise SurfaceFileError("unsupported version %r" % d.get("version"))
    base = base_from_dict(d["base"])
    copies = [None if c is None else int(c) for c in d["copies"]]
    pairing = {}
    for a, b in d["pairing"]:
        a, b = tuple(a), tuple(b)
        pairing[a] = b
        pairing[b] = a
    return SurfaceComplex(base, copies, pairing)


def save_surface(s: SurfaceComplex, path, metadata=None):
    with open(path, "w") as fh:
        json.dump(surface_to_dict(s, metadata), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_surface(path) -> SurfaceComplex:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as err:
            raise SurfaceFileError("malformed JSON: %s" % err)
    return surface_from_dict(d)


def rotation_to_dict(rot) -> list:
    return [[_coord(x) for x in row] for row in rot.matrix]


def rotation_from_dict(rows):
    from .geometry import Rotation
    return Rotation(np.array([[float(x) for x in row] for row in rows]))
