"""Contraction-memory diagnostics along the enforced fusion order.

The routing-history tensor has one site per fusion step with local dimension
n; the entry at (k_1, ..., k_n) is nonzero only when the tuple is a
permutation, where it holds that permutation's full signed contribution to
the boundary amplitude (prefactor, trace loops, boundary matrix element).
Summing all entries therefore reproduces the branch amplitude, and the
truncated rank of the (k_1..k_t) x (k_{t+1}..k_n) matricization is the
memory a single sweep in fusion order needs across cut t.

Matricizations are assembled on their permutation support only (distinct
prefixes x distinct suffixes); the discarded rows and columns are exactly
zero, so singular values are unchanged while the dense n^t x n^{n-t} matrix
is never materialized.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .branch import dress, normalize_beta, operator_from_dressed
from .errors import CapacityError, InvalidConfigError
from .model import PostSelectedSub
from .perms import FACTORIAL_CAP, fusion_wiring

#: Routing tensors enumerate all n! wirings; n = 8 is the default ceiling.
ROUTING_SITE_CAP = 8

#: Default ceiling on the witness matrix side C(n, t).
WITNESS_CAP = 256


@dataclass(frozen=True)
class RoutingTensor:
    """Per-permutation signed contributions of one branch.

    ``entries`` maps image tuples to scalars (``boundaries="contracted"``)
    or to d x d path matrices (``boundaries="open"``).
    """

    n: int
    d: int
    boundaries: str
    entries: dict

    def amplitude(self) -> complex:
        if self.boundaries != "contracted":
            raise InvalidConfigError("amplitude requires contracted boundaries")
        return complex(sum(self.entries.values()))

    def dense(self) -> np.ndarray:
        """Materialized (n, ..., n) tensor; small n only."""
        if self.n > 7:
            raise CapacityError("dense routing tensor materialization is capped at n = 7")
        shape = (self.n,) * self.n if self.boundaries == "contracted" else (self.n,) * self.n + (self.d, self.d)
        out = np.zeros(shape, dtype=complex)
        for img, val in self.entries.items():
            out[img] = val
        return out

    def matricization(self, t: int) -> np.ndarray:
        """Cut-t matricization restricted to its nonzero rows and columns."""
        if not 1 <= t <= self.n - 1:
            raise InvalidConfigError(f"cut index must be in 1..{self.n - 1}, got {t}")
        rows: dict = {}
        cols: dict = {}
        triples = []
        for img, val in self.entries.items():
            ri = rows.setdefault(img[:t], len(rows))
            ci = cols.setdefault(img[t:], len(cols))
            triples.append((ri, ci, val))
        if self.boundaries == "contracted":
            mat = np.zeros((len(rows), len(cols)), dtype=complex)
            for ri, ci, val in triples:
                mat[ri, ci] = val
        else:
            d2 = self.d * self.d
            mat = np.zeros((len(rows) * d2, len(cols)), dtype=complex)
            for ri, ci, val in triples:
                mat[ri * d2 : (ri + 1) * d2, ci] = val.reshape(-1)
        return mat


def routing_tensor(
    S,
    beta,
    boundary_l: int = 0,
    boundary_r: int = 0,
    boundaries: str = "contracted",
    site_cap: int = ROUTING_SITE_CAP,
    cap: int = FACTORIAL_CAP,
) -> RoutingTensor:
    """Evaluate every permutation wiring of one branch separately.

    With contracted boundaries the entry at sigma is
    sgn(sigma) d^{-n} (prod_cycles Tr) <r| path product |l>; with open
    boundaries the boundary matrix element is left as the d x d path matrix.
    """
    if boundaries not in ("contracted", "open"):
        raise InvalidConfigError(f"unknown boundaries mode {boundaries!r}")
    blocks = S.blocks if isinstance(S, PostSelectedSub) else np.asarray(S, dtype=complex)
    n, _, d, _ = blocks.shape
    if n > site_cap:
        raise CapacityError(f"routing tensor at n={n} exceeds the site cap {site_cap}")
    dressed = dress(blocks, normalize_beta(beta, d, n))
    scale = float(d) ** (-n)
    entries: dict = {}
    for pc in fusion_wiring(n, cap=cap):
        img = pc.perm.images
        factor = pc.perm.sign * scale
        for cyc in pc.cycle_steps:
            loop = dressed[cyc[0], img[cyc[0]]]
            for s in cyc[1:]:
                loop = dressed[s, img[s]] @ loop
            factor *= np.trace(loop)
        term = np.eye(d, dtype=complex)
        for s in pc.path_steps:
            term = dressed[s, img[s]] @ term
        if boundaries == "contracted":
            entries[img] = factor * term[boundary_r, boundary_l]
        else:
            entries[img] = factor * term
    return RoutingTensor(n=n, d=d, boundaries=boundaries, entries=entries)


@dataclass(frozen=True)
class ChiProfile:
    """Truncated cut ranks of a routing tensor in fusion order."""

    chis: tuple[int, ...]
    eps: float
    mode: str
    boundaries: str

    @property
    def chi_max(self) -> int:
        return max(self.chis)

    @property
    def n(self) -> int:
        return len(self.chis) + 1


def chi_profile(tensor: RoutingTensor, eps: float, mode: str = "relative") -> ChiProfile:
    """Per-cut truncated ranks; eps = 0 counts at machine precision.

    Every cut reports at least 1 so that degenerate (all-zero) branches keep
    a well-defined profile.
    """
    if eps < 0:
        raise InvalidConfigError(f"eps must be >= 0, got {eps}")
    chis = []
    for t in range(1, tensor.n):
        mat = tensor.matricization(t)
        sv = np.linalg.svd(mat, compute_uv=False)
        top = sv[0] if sv.size else 0.0
        if mode == "relative":
            threshold = (eps if eps > 0 else max(mat.shape) * np.finfo(float).eps) * top
        elif mode == "absolute":
            threshold = eps if eps > 0 else max(mat.shape) * np.finfo(float).eps * top
        else:
            raise InvalidConfigError(f"unknown mode {mode!r}")
        chis.append(max(1, int(np.count_nonzero(sv > threshold))))
    return ChiProfile(chis=tuple(chis), eps=eps, mode=mode, boundaries=tensor.boundaries)


@dataclass(frozen=True)
class WitnessMatrix:
    """Subset-indexed overlap matrix of prefix/suffix leg substitutions."""

    n: int
    t: int
    d: int
    subsets: tuple[tuple[int, ...], ...]
    matrix: np.ndarray
    rank: int
    max_offdiag: float

    @property
    def expected_rank(self) -> int:
        return comb(self.n, self.t)


def rank_witness(n: int, t: int, d: int, size_cap: int = WITNESS_CAP, cap: int = FACTORIAL_CAP) -> WitnessMatrix:
    """Numeric realization of the used-leg sector argument at cut t.

    For subsets I (prefix) and J (suffix complement), every dressed block is
    replaced by the identity on its designated column and zero elsewhere, the
    branch operator is evaluated by the generic path/cycle route, and its
    trace gives M[I, J]. At most one wiring survives each substitution, so M
    is diagonal with C(n, t) independent rows.
    """
    if not 0 < t < n:
        raise InvalidConfigError(f"cut must satisfy 0 < t < n, got t={t}, n={n}")
    size = comb(n, t)
    if size > size_cap:
        raise CapacityError(f"witness size C({n},{t}) = {size} exceeds the cap {size_cap}")
    subsets = tuple(itertools.combinations(range(n), t))
    eye = np.eye(d, dtype=complex)
    mat = np.zeros((size, size), dtype=complex)
    for jj, suffix_set in enumerate(subsets):
        complement = [u for u in range(n) if u not in suffix_set]
        for ii, prefix_set in enumerate(subsets):
            columns = list(prefix_set) + complement
            dressed = np.zeros((n, n, d, d), dtype=complex)
            for s in range(n):
                dressed[s, columns[s]] = eye
            op = operator_from_dressed(dressed, cap=cap, skip_zero_blocks=True)
            mat[ii, jj] = np.trace(op)
    off = 0.0
    if size > 1:
        off = float(np.max(np.abs(mat - np.diag(np.diag(mat)))))
    sv = np.linalg.svd(mat, compute_uv=False)
    tol = size * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    rank = int(np.count_nonzero(sv > tol))
    return WitnessMatrix(
        n=n, t=t, d=d, subsets=subsets, matrix=mat, rank=rank, max_offdiag=off
    )


@dataclass(frozen=True)
class BoundReport:
    """Exact ranks compared against the subset-sector count C(n, t) d^2."""

    n: int
    d: int
    chis: tuple[int, ...]
    bounds: tuple[int, ...]
    ratios: tuple[float, ...]
    within_bound: tuple[bool, ...]

    @property
    def ok(self) -> bool:
        return all(self.within_bound)


def theorem_bound_check(profile: ChiProfile, d: int) -> BoundReport:
    """Compare an exact-rank profile against C(n, t) d^2 per cut.

    Intended for profiles computed at eps = 0 on generic monitored
    instances; also records the ratios chi_t / C(n, t) used to track how the
    ranks grow against the sector count.
    """
    n = profile.n
    bounds = tuple(comb(n, t) * d * d for t in range(1, n))
    ratios = tuple(c / comb(n, t) for t, c in zip(range(1, n), profile.chis))
    within = tuple(c <= b for c, b in zip(profile.chis, bounds))
    return BoundReport(
        n=n, d=d, chis=profile.chis, bounds=bounds, ratios=ratios, within_bound=within
    )
