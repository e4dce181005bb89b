"""Dense complex matrix primitives: random ensembles and truncated ranks.

Matrices are plain ``numpy`` arrays of ``complex128`` in row-major order;
all public routines leave their inputs untouched and return finite entries.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidDimensionError, InvalidToleranceError
from .rng import RngStream


def ginibre(d: int, rng: RngStream) -> np.ndarray:
    """d x d matrix with i.i.d. standard complex normal entries.

    Each entry has total variance 1 (variance 1/2 per real component).
    """
    if d < 1:
        raise InvalidDimensionError(f"ginibre requires d >= 1, got {d}")
    g = rng.gen.standard_normal((d, d)) + 1j * rng.gen.standard_normal((d, d))
    return g / np.sqrt(2.0)


def haar_unitary(dim: int, rng: RngStream) -> np.ndarray:
    """Haar-distributed unitary via a Ginibre draw and phase-fixed QR.

    The QR factor alone is not Haar; multiplying each column by the phase of
    the matching diagonal entry of R makes the factorization canonical
    (R with positive diagonal) and the Q factor uniform.
    """
    if dim < 1:
        raise InvalidDimensionError(f"haar_unitary requires dim >= 1, got {dim}")
    g = ginibre(dim, rng)
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r).copy()
    # Ginibre diagonals vanish with probability zero; guard the phase anyway.
    diag[diag == 0] = 1.0
    return q * (diag / np.abs(diag))


def eps_rank(mat: np.ndarray, eps: float, mode: str = "relative") -> int:
    """Number of singular values above a truncation threshold.

    ``relative`` counts sigma_i > eps * sigma_max, ``absolute`` counts
    sigma_i > eps. The comparison is strict.
    """
    if eps < 0:
        raise InvalidToleranceError(f"eps must be >= 0, got {eps}")
    if mode not in ("relative", "absolute"):
        raise ValueError(f"unknown mode {mode!r}")
    mat = np.asarray(mat)
    if mat.size == 0:
        raise InvalidDimensionError("eps_rank requires a nonempty matrix")
    sv = np.linalg.svd(mat, compute_uv=False)
    if mode == "relative":
        threshold = eps * (sv[0] if sv.size else 0.0)
    else:
        threshold = eps
    return int(np.count_nonzero(sv > threshold))
