"""
WEF1 field snapshot files.

Layout: one ASCII header line ``WEF1 d=<d> n=<n> fields=<count> time=<t>``,
then per field a line ``<name> <kind>`` followed by little-endian float64
samples in row-major grid order with components interleaved last.
"""
from __future__ import annotations

import re

import numpy as np

from .fields import TorusGrid, sym_ncomp

KINDS = ("scalar", "vector", "symtensor")
_HEADER = re.compile(r"^WEF1 d=(\d+) n=(\d+) fields=(\d+) time=(\S+)$")


class WEFError(ValueError):
    pass


def _ncomp(kind, d):
    return {"scalar": 1, "vector": d, "symtensor": sym_ncomp(d)}[kind]


def write_wef(path, grid, fields, time=0.0):
    """Write ``fields``, a sequence of ``(name, kind, array)`` triples."""
    fields = list(fields)
    with open(path, "wb") as fh:
        fh.write(f"WEF1 d={grid.d} n={grid.n} fields={len(fields)} time={float(time)!r}\n".encode())
        for name, kind, arr in fields:
            if kind not in KINDS:
                raise WEFError(f"unknown field kind {kind!r}")
            if not name or any(ch.isspace() for ch in name):
                raise WEFError(f"invalid field name {name!r}")
            arr = np.asarray(arr, dtype=float)
            expected = grid.shape if kind == "scalar" else (_ncomp(kind, grid.d),) + grid.shape
            if arr.shape != expected:
                raise WEFError(f"field {name}: shape {arr.shape}, expected {expected}")
            if kind != "scalar":
                arr = np.moveaxis(arr, 0, -1)
            fh.write(f"{name} {kind}\n".encode())
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _readline(fh):
    line = fh.readline()
    if not line.endswith(b"\n"):
        raise WEFError("truncated WEF1 file")
    return line[:-1].decode("ascii")


def read_wef(path):
    """Return ``(grid, time, fields)`` with ``fields`` a dict name -> (kind, array)."""
    with open(path, "rb") as fh:
        m = _HEADER.match(_readline(fh))
        if not m:
            raise WEFError(f"{path}: not a WEF1 file")
        grid = TorusGrid(int(m.group(1)), int(m.group(2)))
        count, time = int(m.group(3)), float(m.group(4))
        out = {}
        for _ in range(count):
            parts = _readline(fh).split()
            if len(parts) != 2 or parts[1] not in KINDS:
                raise WEFError(f"{path}: bad field block header {parts}")
            name, kind = parts
            nc = _ncomp(kind, grid.d)
            size = nc * grid.n ** grid.d
            raw = fh.read(8 * size)
            if len(raw) != 8 * size:
                raise WEFError(f"{path}: field {name} truncated")
            arr = np.frombuffer(raw, dtype="<f8").astype(float)
            if kind == "scalar":
                arr = arr.reshape(grid.shape)
            else:
                arr = np.moveaxis(arr.reshape(grid.shape + (nc,)), -1, 0).copy()
            out[name] = (kind, arr)
        if fh.read(1):
            raise WEFError(f"{path}: trailing data")
    return grid, time, out
