"""Binary checkpoints.

Layout, all little-endian::

    offset  type            content
    0       4 bytes         magic b"MMP1"
    4       3 x int32       n1, n2, n3
    16      3 x float64     l1, l2, l3
    40      float64         time
    48      5 x float64     mu, nu, gamma, kappa, chi
    88      9 arrays        u1 u2 u3 B1 B2 B3 w1 w2 w3

Each array is complex128 (real, imaginary interleaved) over the half lattice
``(n1, n2, n3 // 2 + 1)`` in C order, with the coefficient normalization of
:mod:`mmpflow.spectral`. The dealias fraction is not stored.
"""
from __future__ import annotations

import struct

import numpy as np

from .dynamics import PhysParams, State
from .spectral import GridSpec

__all__ = ["MAGIC", "save_checkpoint", "load_checkpoint"]

MAGIC = b"MMP1"
_HEADER = struct.Struct("<4s3i3dd5d")


def save_checkpoint(path, s: State, p: PhysParams) -> None:
    g = s.grid
    header = _HEADER.pack(MAGIC, g.n1, g.n2, g.n3, g.l1, g.l2, g.l3, float(s.t), *p.as_tuple())
    body = np.ascontiguousarray(s.data, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def load_checkpoint(path, dealias_fraction: float = 2.0 / 3.0) -> tuple[State, PhysParams]:
    """Read a checkpoint; the state is re-projected and re-dealiased on ingestion."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated checkpoint header")
    magic, n1, n2, n3, l1, l2, l3, t, mu, nu, gamma, kappa, chi = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    grid = GridSpec(n1, n2, n3, l1, l2, l3, dealias_fraction)
    count = 9 * n1 * n2 * (n3 // 2 + 1)
    if len(raw) != _HEADER.size + 16 * count:
        raise ValueError("checkpoint size does not match its header")
    data = np.frombuffer(raw, dtype="<c16", count=count, offset=_HEADER.size)
    data = data.astype(complex).reshape((3, 3) + grid.spectral_shape)
    params = PhysParams(mu, nu, gamma, kappa, chi, allow_degenerate=(kappa == 0 or chi == 0))
    fields = State(grid, data, t)
    return State.from_fields(fields.u, fields.B, fields.w, t), params
