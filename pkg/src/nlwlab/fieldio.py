"""Binary field-pair files (NLWP format) with JSON provenance sidecars.

Layout, all little-endian:
    magic  "NLWP"
    u32    format version (currently 1)
    u32    d
    u32    n
    f64    L
    c128   pos coefficients, row-major over k in {-n/2..n/2-1}^d
    c128   vel coefficients, same order

Coefficients are interleaved (re, im) IEEE-754 doubles.  The sidecar
`<path>.json` records provenance (seed, cutoff kind, regularity s, ...).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .grid import FieldPair, Grid, SpectralField

MAGIC = b"NLWP"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sIIId")


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def save_pair(path, pair: FieldPair, meta: dict | None = None) -> None:
    """Write a field pair in NLWP format, plus a JSON sidecar if meta given."""
    g = pair.grid
    path = Path(path)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, FORMAT_VERSION, g.d, g.n, g.L))
        for field in (pair.pos, pair.vel):
            shifted = np.fft.fftshift(field.coeffs)
            f.write(np.ascontiguousarray(shifted, dtype="<c16").tobytes())
    if meta is not None:
        meta = dict(meta)
        meta.setdefault("format_version", FORMAT_VERSION)
        with open(sidecar_path(path), "w") as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write("\n")


def load_pair(path) -> tuple[FieldPair, dict | None]:
    """Read an NLWP file; returns (pair, sidecar metadata or None)."""
    path = Path(path)
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError(f"{path}: truncated NLWP header")
        magic, version, d, n, L = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        grid = Grid(d, n, L)
        count = n**d
        fields = []
        for _ in range(2):
            buf = f.read(16 * count)
            if len(buf) < 16 * count:
                raise ValueError(f"{path}: truncated coefficient block")
            arr = np.frombuffer(buf, dtype="<c16").reshape(grid.shape)
            fields.append(SpectralField(grid, np.fft.ifftshift(arr)))
    meta = None
    sc = sidecar_path(path)
    if sc.exists():
        with open(sc) as f:
            meta = json.load(f)
    return FieldPair(fields[0], fields[1]), meta
