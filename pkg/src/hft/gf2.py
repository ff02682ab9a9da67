"""Linear algebra over GF(2) on ``uint8`` numpy arrays.

A "binary matrix" throughout the package is simply a 2-D ``numpy.uint8``
array whose entries are 0 or 1.
"""
from __future__ import annotations

import numpy as np


def as_binary(m, cols: int | None = None) -> np.ndarray:
    """Coerce nested lists / arrays to a 2-D ``uint8`` matrix of bits."""
    arr = np.asarray(m, dtype=np.uint8)
    if arr.ndim == 1:
        arr = arr.reshape(0 if arr.size == 0 else 1, -1) if arr.size else np.zeros((0, cols or 0), np.uint8)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D bit matrix, got shape {arr.shape}")
    if arr.shape[0] == 0 and cols is not None:
        arr = np.zeros((0, cols), np.uint8)
    if np.any(arr > 1):
        raise ValueError("binary matrix entries must be 0 or 1")
    return arr


def rref(m: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    a = np.array(m, dtype=np.uint8) & 1
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        hit = np.flatnonzero(a[:, c])
        hit = hit[hit != r]
        a[hit] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m: np.ndarray) -> int:
    if np.asarray(m).size == 0:
        return 0
    return len(rref(m)[1])


def nullspace(m: np.ndarray) -> np.ndarray:
    """Basis (as rows) of ``{v : m v = 0}``."""
    m = np.asarray(m, dtype=np.uint8)
    cols = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(cols, dtype=np.uint8)
    a, pivots = rref(m)
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, p in enumerate(pivots):
            basis[i, p] = a[r, f]
    return basis


def in_rowspace(m: np.ndarray, v) -> bool:
    m = np.asarray(m, dtype=np.uint8)
    v = np.asarray(v, dtype=np.uint8).reshape(1, -1)
    if m.shape[0] == 0:
        return not v.any()
    return rank(np.vstack([m, v])) == rank(m)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64) % 2).astype(np.uint8)


def bits_to_int(bits) -> int:
    """Big-endian integer value of a bit vector (first bit most significant)."""
    out = 0
    for b in np.asarray(bits).reshape(-1):
        out = (out << 1) | int(b)
    return out


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)
