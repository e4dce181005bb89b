"""Instance generation and exact sampling of monitoring records.

A dilute instance places n particles in the last n of m blocks, each block
carrying d internal orbitals, and propagates them with a Haar-random unitary
on all d*m modes viewed as an m x m grid of d x d blocks. Monitoring reads
only per-block occupation; records with exactly n singly occupied blocks are
kept and define an n x n sub-grid of blocks.

Mode subsets are sampled exactly from the projection determinantal point
process p(J) = |det V_{J,I}|^2 induced by the n input-mode columns: keep an
orthonormal basis of the column span, draw a mode with probability
(row norm^2) / (modes remaining), then rotate the basis so one column holds
the drawn row's direction and drop it. Repeating this n times realizes the
chain rule of the determinantal distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    CapacityError,
    InvalidConfigError,
    PostSelectionError,
    SamplerDegeneracyError,
)
from .linalg import haar_unitary
from .rng import RngStream

#: Default bound on the dense single-particle dimension d*m.
DENSE_DIM_CAP = 512

#: Default budget of monitoring records per post-selection call.
MAX_ATTEMPTS = 200


@dataclass(frozen=True)
class DiluteConfig:
    """Dilute-regime geometry: n particles, d orbitals per block, m = ceil(kappa n^2)."""

    n: int
    d: int
    kappa: float = 0.5

    def __post_init__(self):
        if self.n < 1:
            raise InvalidConfigError(f"n must be >= 1, got {self.n}")
        if self.d < 2:
            raise InvalidConfigError(f"d must be >= 2, got {self.d}")
        if not self.kappa > 0:
            raise InvalidConfigError(f"kappa must be > 0, got {self.kappa}")
        if self.m < self.n:
            raise InvalidConfigError(
                f"m = ceil(kappa n^2) = {self.m} is below n = {self.n}; "
                "increase kappa"
            )

    @property
    def m(self) -> int:
        # Tiny slack so kappa*n*n that is integral up to float error is not
        # rounded up.
        return math.ceil(self.kappa * self.n * self.n - 1e-9)

    @property
    def dim(self) -> int:
        return self.d * self.m

    @property
    def input_blocks(self) -> tuple[int, ...]:
        return tuple(range(self.m - self.n, self.m))

    @property
    def input_modes(self) -> tuple[int, ...]:
        """One mode per input block (orbital 0; the choice is statistically
        immaterial under Haar-random propagators)."""
        return tuple(b * self.d for b in self.input_blocks)


@dataclass(frozen=True)
class PropagatorBlocks:
    """A d*m unitary propagator with access to its d x d blocks."""

    m: int
    d: int
    matrix: np.ndarray

    def block(self, j: int, k: int) -> np.ndarray:
        d = self.d
        return self.matrix[j * d : (j + 1) * d, k * d : (k + 1) * d]

    @property
    def dim(self) -> int:
        return self.d * self.m


def make_instance(cfg: DiluteConfig, rng: RngStream, dim_cap: int = DENSE_DIM_CAP) -> PropagatorBlocks:
    """Draw a Haar-random propagator for the configured geometry."""
    if cfg.dim > dim_cap:
        raise CapacityError(
            f"dense propagator dimension d*m = {cfg.dim} exceeds the cap {dim_cap}"
        )
    return PropagatorBlocks(m=cfg.m, d=cfg.d, matrix=haar_unitary(cfg.dim, rng))


@dataclass(frozen=True)
class MonitorRecord:
    """A sampled occupation pattern with its block coarse-graining."""

    modes: tuple[int, ...]
    flags: tuple[int, ...]
    collision_free: bool
    blocks: tuple[int, ...] | None

    @classmethod
    def from_modes(cls, modes, m: int, d: int) -> "MonitorRecord":
        modes = tuple(sorted(int(j) for j in modes))
        occupied = sorted({j // d for j in modes})
        flags = tuple(1 if b in set(occupied) else 0 for b in range(m))
        collision_free = len(occupied) == len(modes)
        return cls(
            modes=modes,
            flags=flags,
            collision_free=collision_free,
            blocks=tuple(occupied) if collision_free else None,
        )


def _householder_drop(q: np.ndarray, row: int) -> np.ndarray:
    """Rotate columns so the first carries all of row ``row``, then drop it.

    Input columns are orthonormal; the returned k-1 columns are orthonormal,
    vanish on ``row``, and span the subspace of the column span with zero
    amplitude there.
    """
    w = q[row, :].conj()
    norm = np.linalg.norm(w)
    v = w.copy()
    v[0] += np.exp(1j * np.angle(w[0])) * norm
    v /= np.linalg.norm(v)
    h = np.eye(q.shape[1], dtype=complex) - 2.0 * np.outer(v, v.conj())
    return (q @ h)[:, 1:]


def sample_mode_set(columns: np.ndarray, rng: RngStream) -> tuple[int, ...]:
    """One exact draw from the projection DPP of an orthonormal column frame."""
    q = np.array(columns, dtype=complex)
    dim, n = q.shape
    out = []
    for k in range(n, 0, -1):
        norms = np.einsum("ij,ij->i", q.conj(), q).real
        total = norms.sum()
        if abs(total / k - 1.0) > 1e-8:
            raise SamplerDegeneracyError(
                f"conditional probabilities sum to {total / k:.12f} per mode slot",
                defect=float(abs(total / k - 1.0)),
            )
        j = int(rng.gen.choice(dim, p=np.clip(norms / total, 0, None)))
        out.append(j)
        if k > 1:
            q = _householder_drop(q, j)
    return tuple(sorted(out))


def sample_mode_sets(columns: np.ndarray, rng: RngStream, shots: int, chunk: int = 256) -> np.ndarray:
    """Vectorized DPP draws: same chain rule as :func:`sample_mode_set`,
    batched over shots. Returns an (shots, n) array of sorted mode indices."""
    dim, n = columns.shape
    out = np.empty((shots, n), dtype=np.intp)
    done = 0
    while done < shots:
        b = min(chunk, shots - done)
        q = np.broadcast_to(columns, (b, dim, n)).astype(complex)
        picks = np.empty((b, n), dtype=np.intp)
        for step, k in enumerate(range(n, 0, -1)):
            norms = np.einsum("bij,bij->bi", q.conj(), q).real
            totals = norms.sum(axis=1)
            defect = np.max(np.abs(totals / k - 1.0))
            if defect > 1e-8:
                raise SamplerDegeneracyError(
                    f"conditional probabilities sum defect {defect:.3e}", defect=float(defect)
                )
            probs = np.clip(norms / totals[:, None], 0, None)
            cum = np.cumsum(probs, axis=1)
            u = rng.gen.random(b) * cum[:, -1]
            j = (cum < u[:, None]).sum(axis=1)
            j = np.minimum(j, dim - 1)
            picks[:, step] = j
            if k > 1:
                w = np.conj(q[np.arange(b), j, :])
                wnorm = np.linalg.norm(w, axis=1)
                v = w.copy()
                v[:, 0] += np.exp(1j * np.angle(w[:, 0])) * wnorm
                v /= np.linalg.norm(v, axis=1)[:, None]
                h = np.eye(k, dtype=complex)[None] - 2.0 * v[:, :, None] * v.conj()[:, None, :]
                q = np.matmul(q, h)[:, :, 1:]
        out[done : done + b] = np.sort(picks, axis=1)
        done += b
    return out


def sample_monitor_record(V: PropagatorBlocks, cfg: DiluteConfig, rng: RngStream) -> MonitorRecord:
    """Sample one monitoring record from the Born distribution |det V_{J,I}|^2."""
    cols = V.matrix[:, list(cfg.input_modes)]
    modes = sample_mode_set(cols, rng)
    return MonitorRecord.from_modes(modes, m=cfg.m, d=cfg.d)


@dataclass(frozen=True)
class PostSelectedSub:
    """The n x n grid of d x d propagator blocks fixed by a collision-free record."""

    n: int
    d: int
    blocks: np.ndarray  # shape (n, n, d, d); [t, k] = V_{selected[t], input[k]}
    selected_blocks: tuple[int, ...]

    def __post_init__(self):
        norms = np.linalg.svd(self.blocks.reshape(-1, self.d, self.d), compute_uv=False)
        if norms.size and norms.max() > 1.0 + 1e-10:
            raise InvalidConfigError(
                f"sub-block operator norm {norms.max():.12f} exceeds 1; "
                "blocks must come from a unitary"
            )

    def block(self, t: int, k: int) -> np.ndarray:
        return self.blocks[t, k]


def extract_sub(V: PropagatorBlocks, cfg: DiluteConfig, record: MonitorRecord) -> PostSelectedSub:
    if not record.collision_free:
        raise InvalidConfigError("cannot extract blocks from a collision record")
    n, d = cfg.n, cfg.d
    blocks = np.empty((n, n, d, d), dtype=complex)
    for t, l in enumerate(record.blocks):
        for k, b in enumerate(cfg.input_blocks):
            blocks[t, k] = V.block(l, b)
    return PostSelectedSub(n=n, d=d, blocks=blocks, selected_blocks=record.blocks)


def post_select(
    V: PropagatorBlocks,
    cfg: DiluteConfig,
    rng: RngStream,
    max_attempts: int = MAX_ATTEMPTS,
) -> tuple[MonitorRecord, PostSelectedSub, int]:
    """Repeat monitoring until a collision-free record appears.

    Returns the record, the block sub-grid it selects, and the number of
    records drawn. Exhausting the budget raises; the caller decides whether
    to draw a fresh propagator.
    """
    if max_attempts < 1:
        raise InvalidConfigError("max_attempts must be >= 1")
    for attempt in range(1, max_attempts + 1):
        record = sample_monitor_record(V, cfg, rng)
        if record.collision_free:
            return record, extract_sub(V, cfg, record), attempt
    raise PostSelectionError(
        f"no collision-free record in {max_attempts} attempts "
        f"(n={cfg.n}, m={cfg.m}, d={cfg.d})"
    )


def collision_rate_trials(
    V: PropagatorBlocks, cfg: DiluteConfig, rng: RngStream, shots: int
) -> int:
    """Number of collision-free records among ``shots`` Born samples."""
    cols = V.matrix[:, list(cfg.input_modes)]
    modes = sample_mode_sets(cols, rng, shots)
    blocks = modes // cfg.d  # rows stay sorted under integer division
    if cfg.n == 1:
        return shots
    collided = (np.diff(blocks, axis=1) == 0).any(axis=1)
    return int(shots - collided.sum())


def collision_free_rate_exact(n: int, m: int, d: int) -> float:
    """Probability of a collision-free record, averaged over Haar propagators.

    Evaluated both as C(m,n) d^n / C(dm,n) (exact rational) and as the
    telescoping product prod_i (1 - i/m) / (1 - i/dm); the two must agree to
    1e-12.
    """
    if d < 2:
        raise InvalidConfigError(f"d must be >= 2, got {d}")
    if n < 1 or m < n:
        raise InvalidConfigError(f"need m >= n >= 1, got n={n}, m={m}")
    exact = Fraction(math.comb(m, n) * d**n, math.comb(d * m, n))
    product = 1.0
    for i in range(n):
        product *= (1.0 - i / m) / (1.0 - i / (d * m))
    value = float(exact)
    if abs(value - product) > 1e-12 * max(1.0, abs(value)):
        raise ArithmeticError(
            f"closed forms disagree: {value} vs {product}"
        )
    return value


def collision_free_rate_asymptotic(kappa: float, d: int) -> float:
    """Large-n limit of the collision-free rate at m = kappa n^2."""
    if not kappa > 0:
        raise InvalidConfigError(f"kappa must be > 0, got {kappa}")
    if d < 2:
        raise InvalidConfigError(f"d must be >= 2, got {d}")
    return float(np.exp(-(1.0 - 1.0 / d) / (2.0 * kappa)))
