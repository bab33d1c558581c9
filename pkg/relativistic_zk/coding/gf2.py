# GF(2) Linear Algebra - Gaussian elimination on packed parity-check rows
import logging
from typing import List, Optional, Tuple

import numpy as np

from .syndrome import WORD_BITS, BitVector, LengthMismatchError, ParityCheckMatrix

logger = logging.getLogger(__name__)

_ONE = np.uint64(1)


def _column_bits(rows: np.ndarray, c: int) -> np.ndarray:
    word, bit = divmod(c, WORD_BITS)
    return (rows[:, word] >> np.uint64(bit)) & _ONE


def _eliminate(H: ParityCheckMatrix, rhs: np.ndarray) -> Tuple[np.ndarray, np.ndarray, List[int]]:
    """Reduced row echelon form of [H | rhs]; returns (rows, rhs, pivot columns)"""
    rows = H.rows.copy()
    rhs = rhs.copy()
    m = rows.shape[0]
    pivots = []
    r = 0
    for c in range(H.n):
        if r >= m:
            break
        hits = np.flatnonzero(_column_bits(rows[r:], c))
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            rows[[r, p]] = rows[[p, r]]
            rhs[[r, p]] = rhs[[p, r]]
        column = _column_bits(rows, c)
        column[r] = 0
        others = np.flatnonzero(column)
        if others.size:
            rows[others] ^= rows[r]
            rhs[others] ^= rhs[r]
        pivots.append(c)
        r += 1
    return rows, rhs, pivots


def gf2_rank(H: ParityCheckMatrix) -> int:
    _, _, pivots = _eliminate(H, np.zeros(H.m, dtype=np.uint8))
    return len(pivots)


def gf2_solve(H: ParityCheckMatrix, s: BitVector) -> Optional[BitVector]:
    """Some e with H.e = s (free variables set to zero), or None when s is outside the column space"""
    if s.length != H.m:
        raise LengthMismatchError(f"syndrome length {s.length} != {H.m}")
    _, rhs, pivots = _eliminate(H, s.to_bits().astype(np.uint8))
    if rhs[len(pivots):].any():
        return None
    bits = np.zeros(H.n, dtype=np.uint8)
    bits[pivots] = rhs[:len(pivots)]
    return BitVector.from_bits(bits)
