"""Reading and writing signal blocks.

Two formats are supported, both channels x samples:

* CSV: one line per channel, comma separated.  Complex entries are written
  as ``re+imj`` (Python ``complex`` syntax without parentheses).
* Binary: a 16-byte little-endian header of four uint32 values
  ``(MAGIC, regime, L, T)`` followed by row-major float64 data; complex
  blocks interleave real and imaginary parts.  ``regime`` is 0 for real,
  1 for complex.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .signals import as_block

MAGIC = 0x41434952  # b"RICA" read as little-endian uint32
_HEADER = struct.Struct("<4I")


def _fmt_real(v):
    return repr(float(v))


def _fmt_complex(z):
    re, im = repr(float(z.real)), repr(float(z.imag))
    if not im.startswith("-"):
        im = "+" + im
    return f"{re}{im}j"


def write_csv(path, x):
    x = as_block(x)
    fmt = _fmt_complex if np.iscomplexobj(x) else _fmt_real
    with open(path, "w") as fh:
        for row in x:
            fh.write(",".join(fmt(v) for v in row))
            fh.write("\n")


def read_csv(path):
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([complex(tok.strip()) if "j" in tok else float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: rows have differing lengths {sorted(widths)}")
    if any(isinstance(v, complex) for r in rows for v in r):
        return np.array(rows, dtype=np.complex128)
    return np.array(rows, dtype=np.float64)


def write_bin(path, x):
    x = as_block(x)
    cplx = np.iscomplexobj(x)
    L, T = x.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, int(cplx), L, T))
        data = np.ascontiguousarray(x, dtype="<c16" if cplx else "<f8")
        fh.write(data.tobytes())


def read_bin(path):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, regime, L, T = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic 0x{magic:08x}")
    if regime not in (0, 1):
        raise ValueError(f"{path}: unknown regime tag {regime}")
    dtype = "<c16" if regime else "<f8"
    expected = L * T * np.dtype(dtype).itemsize
    body = raw[_HEADER.size:]
    if len(body) != expected:
        raise ValueError(f"{path}: expected {expected} data bytes for {L}x{T}, found {len(body)}")
    return np.frombuffer(body, dtype=dtype).reshape(L, T).astype(np.complex128 if regime else np.float64)


def read_block(path, fmt=None):
    """Read a block, inferring the format from the suffix when ``fmt`` is None."""
    fmt = fmt or ("bin" if str(path).endswith(".bin") else "csv")
    return read_bin(path) if fmt == "bin" else read_csv(path)


def write_block(path, x, fmt=None):
    fmt = fmt or ("bin" if str(path).endswith(".bin") else "csv")
    (write_bin if fmt == "bin" else write_csv)(path, x)
