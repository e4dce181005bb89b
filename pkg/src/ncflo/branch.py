"""Branch operators of the monitored fusion chain, by two independent routes.

For fusion outcomes beta = (beta_1, ..., beta_n) the byproducts are absorbed
into dressed blocks B[t, k] = S[t, k]^T D_{beta_t}. Each permutation term of
the kernel then evaluates, along the fixed fusion order, to an ordered
product of dressed blocks over the open wiring path times a scalar trace for
every closed wiring loop, with one factor 1/d per fusion:

    T_sigma = d^{-n} (prod_cycles Tr(cycle product)) (path product),
    T(beta) = sum_sigma sgn(sigma) T_sigma.

:func:`branch_operator_pathcycle` sums these terms directly.
:func:`branch_operator_dense` never looks at the wiring: it contracts the
dense kernel against explicit Bell pairs and fusion projectors, and must
agree with the path route to 1e-10 (the package's primary cross-check).

Boundary amplitudes <r|T(beta)|l> for *all* d^{2n} outcomes come from
:func:`amplitude_table`, which applies one orthonormal pair-basis transform
per fusion step to the kernel; outcome index order puts beta_1 most
significant with each pair encoded as a*d + b.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DegenerateBranchError, InvalidConfigError
from .kernel import KERNEL_DIM_CAP, build_kernel
from .linalg import haar_unitary
from .model import PostSelectedSub, sample_mode_set
from .perms import FACTORIAL_CAP, fusion_wiring, permutation_table
from .rng import RngStream
from .weyl import all_weyl_matrices, weyl_matrix

#: Default bound on the intermediate state size d^(2n+1) of table builds.
TABLE_STATE_CAP = 1 << 27


def normalize_beta(beta, d: int, n: int | None = None) -> np.ndarray:
    """Outcome labels as an (n, 2) integer array reduced mod d."""
    arr = np.asarray(beta, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidConfigError(f"beta must be a sequence of (a, b) pairs, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise InvalidConfigError(f"beta has {arr.shape[0]} entries, expected {n}")
    return arr % d


def beta_to_index(beta, d: int) -> int:
    """Flat outcome index with beta_1 most significant, pair code a*d + b."""
    arr = normalize_beta(beta, d)
    idx = 0
    for a, b in arr:
        idx = idx * d * d + int(a) * d + int(b)
    return idx


def index_to_beta(index: int, n: int, d: int) -> np.ndarray:
    pairs = []
    for t in range(n - 1, -1, -1):
        code = (index // (d * d) ** t) % (d * d)
        pairs.append((code // d, code % d))
    return np.array(pairs, dtype=np.int64)


def dress(S, beta) -> np.ndarray:
    """Dressed block grid B[t, k] = S[t, k]^T D_{beta_t}."""
    blocks = S.blocks if isinstance(S, PostSelectedSub) else np.asarray(S, dtype=complex)
    n, _, d, _ = blocks.shape
    arr = normalize_beta(beta, d, n)
    byproducts = np.stack([weyl_matrix(d, int(a), int(b)) for a, b in arr])
    return np.einsum("tkyx,tyz->tkxz", blocks, byproducts)


def undress(dressed, beta) -> np.ndarray:
    """Inverse of :func:`dress` (right-multiply by D^dagger, transpose back)."""
    dressed = np.asarray(dressed, dtype=complex)
    n, _, d, _ = dressed.shape
    arr = normalize_beta(beta, d, n)
    inv = np.stack([weyl_matrix(d, int(a), int(b)).conj().T for a, b in arr])
    return np.einsum("tkxy,tyz->tkzx", dressed, inv)


@dataclass(frozen=True)
class BranchOperator:
    """A d x d branch operator with the route that produced it."""

    matrix: np.ndarray
    provenance: str  # "permutation-sum" | "dense-contraction"

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


def operator_from_dressed(dressed: np.ndarray, cap: int = FACTORIAL_CAP, skip_zero_blocks: bool = False) -> np.ndarray:
    """Signed path/cycle sum over all permutation wirings of dressed blocks.

    ``skip_zero_blocks`` drops terms containing an exactly-zero block before
    any multiplication; the result is unchanged, only cheaper for the sparse
    substitutions used by the rank witness.
    """
    n, _, d, _ = dressed.shape
    if n > cap:
        raise CapacityError(f"path/cycle sum at n={n} exceeds the factorial cap {cap}")
    nonzero = dressed.reshape(n, n, -1).any(axis=2) if skip_zero_blocks else None
    scale = float(d) ** (-n)
    total = np.zeros((d, d), dtype=complex)
    for pc in fusion_wiring(n, cap=cap):
        img = pc.perm.images
        if nonzero is not None and not all(nonzero[t, img[t]] for t in range(n)):
            continue
        factor = pc.perm.sign * scale
        for cyc in pc.cycle_steps:
            loop = dressed[cyc[0], img[cyc[0]]]
            for s in cyc[1:]:
                loop = dressed[s, img[s]] @ loop
            factor *= np.trace(loop)
            if factor == 0:
                break
        if factor == 0:
            continue
        term = np.eye(d, dtype=complex)
        for s in pc.path_steps:
            term = dressed[s, img[s]] @ term
        total += factor * term
    return total


def branch_operator_pathcycle(S, beta, cap: int = FACTORIAL_CAP) -> BranchOperator:
    """Branch operator via the signed path/cycle permutation sum."""
    return BranchOperator(
        matrix=operator_from_dressed(dress(S, beta), cap=cap),
        provenance="permutation-sum",
    )


def branch_operator_dense(S, beta, dim_cap: int = KERNEL_DIM_CAP, cap: int = FACTORIAL_CAP) -> BranchOperator:
    """Branch operator via dense contraction of the kernel with Bell fusions.

    The kernel input legs are Bell-paired to auxiliary registers, each fusion
    step projects the pair (previous auxiliary, output leg t) onto the basis
    vector whose update realizes the dressed byproduct D_{beta_t}, and the
    boundary legs stay open. Entirely independent of the wiring
    decomposition used by the permutation-sum route.
    """
    blocks = S.blocks if isinstance(S, PostSelectedSub) else np.asarray(S, dtype=complex)
    n, _, d, _ = blocks.shape
    arr = normalize_beta(beta, d, n)
    kern = build_kernel(blocks, dim_cap=dim_cap, cap=cap).reshape((d,) * (2 * n))
    # step 1 consumes output leg nu_1 against the open input-boundary column
    cur = np.tensordot(weyl_matrix(d, *arr[0]), kern, axes=([0], [0]))
    for t in range(2, n + 1):
        # axes: (l, nu_t..nu_n, alpha_{t-1}..alpha_n); nu_t at 1, alpha_{t-1} at n - t + 2
        cur = np.tensordot(weyl_matrix(d, *arr[t - 1]), cur, axes=([0, 1], [1, n - t + 2]))
    mat = cur.T * float(d) ** (-n)
    return BranchOperator(matrix=np.ascontiguousarray(mat), provenance="dense-contraction")


@dataclass(frozen=True)
class AmplitudeTable:
    """Boundary amplitudes <r|T(beta)|l> for every outcome beta."""

    n: int
    d: int
    boundary_l: int
    boundary_r: int
    amplitudes: np.ndarray  # shape (d^{2n},), beta_1 most significant

    @property
    def total_weight(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def amplitude(self, beta) -> complex:
        return complex(self.amplitudes[beta_to_index(beta, self.d)])


def _table_tensor(blocks: np.ndarray, boundary_l: int, dim_cap: int, state_cap: int, cap: int) -> np.ndarray:
    """All-outcome amplitude tensor with the output boundary leg kept open.

    Returns shape (d^2, ..., d^2, d): n outcome legs then the boundary leg.
    """
    n, _, d, _ = blocks.shape
    if d ** (2 * n + 1) > state_cap:
        raise CapacityError(
            f"amplitude table state d^(2n+1) = {d ** (2 * n + 1)} exceeds the cap {state_cap}"
        )
    kern = build_kernel(blocks, dim_cap=dim_cap, cap=cap).reshape((d,) * (2 * n))
    dmats = all_weyl_matrices(d)
    lvec = np.zeros(d, dtype=complex)
    lvec[boundary_l] = 1.0
    # pair transform rows are d^{-1/2} D_beta, an orthonormal operator basis
    first = (dmats @ lvec) / np.sqrt(d)
    cur = np.tensordot(first, kern, axes=([1], [0]))
    pair = dmats / np.sqrt(d)
    for t in range(2, n + 1):
        # axes: (c_1..c_{t-1}, nu_t..nu_n, alpha_{t-1}..alpha_n)
        cur = np.tensordot(pair, cur, axes=([1, 2], [t - 1, n]))
        cur = np.moveaxis(cur, 0, t - 1)
    return cur * float(d) ** (-n / 2.0)


def amplitude_table_full(
    S,
    boundary_l: int = 0,
    dim_cap: int = KERNEL_DIM_CAP,
    state_cap: int = TABLE_STATE_CAP,
    cap: int = FACTORIAL_CAP,
) -> np.ndarray:
    """Amplitudes for every outcome and every output boundary readout.

    Shape (d^{2n}, d); summing |.|^2 over both axes gives d^{-n} ||K||_F^2.
    """
    blocks = S.blocks if isinstance(S, PostSelectedSub) else np.asarray(S, dtype=complex)
    n, _, d, _ = blocks.shape
    tens = _table_tensor(blocks, boundary_l, dim_cap, state_cap, cap)
    return tens.reshape((d * d) ** n, d)


def amplitude_table(
    S,
    boundary_l: int = 0,
    boundary_r: int = 0,
    dim_cap: int = KERNEL_DIM_CAP,
    state_cap: int = TABLE_STATE_CAP,
    cap: int = FACTORIAL_CAP,
) -> AmplitudeTable:
    """Amplitude table at fixed boundary labels."""
    blocks = S.blocks if isinstance(S, PostSelectedSub) else np.asarray(S, dtype=complex)
    n, _, d, _ = blocks.shape
    full = amplitude_table_full(S, boundary_l, dim_cap, state_cap, cap)
    return AmplitudeTable(
        n=n,
        d=d,
        boundary_l=boundary_l,
        boundary_r=boundary_r,
        amplitudes=np.ascontiguousarray(full[:, boundary_r]),
    )


def conditional_distribution(table: AmplitudeTable) -> np.ndarray:
    """p(beta | record) from the amplitude table; mean of d^{2n} p is 1."""
    w = np.abs(table.amplitudes) ** 2
    total = w.sum()
    if total <= 0.0:
        raise DegenerateBranchError("all branch amplitudes vanish")
    return w / total


def sample_outcome(table: AmplitudeTable, rng: RngStream) -> np.ndarray:
    """Draw one outcome from the conditional branch distribution."""
    p = conditional_distribution(table)
    idx = int(rng.gen.choice(p.size, p=p))
    return index_to_beta(idx, table.n, table.d)


def born_sample_outcome(
    S,
    rng: RngStream,
    boundary_l: int = 0,
    boundary_r: int = 0,
    dim_cap: int = KERNEL_DIM_CAP,
    state_cap: int = TABLE_STATE_CAP,
    cap: int = FACTORIAL_CAP,
) -> tuple[np.ndarray, complex]:
    """Sequential chain-rule draw of an outcome, fusion step by fusion step.

    Equivalent in law to sampling from the full table, without materializing
    all outcome legs at once: the boundary readout is fixed first, then each
    step's pair transform is applied and one outcome leg collapsed. Returns
    the outcome and its amplitude.
    """
    blocks = S.blocks if isinstance(S, PostSelectedSub) else np.asarray(S, dtype=complex)
    n, _, d, _ = blocks.shape
    if d ** (2 * n) > state_cap:
        raise CapacityError("state exceeds the table cap")
    kern = build_kernel(blocks, dim_cap=dim_cap, cap=cap).reshape((d,) * (2 * n))
    cur = kern[..., boundary_r] if n >= 1 else kern
    dmats = all_weyl_matrices(d)
    lvec = np.zeros(d, dtype=complex)
    lvec[boundary_l] = 1.0
    first = (dmats @ lvec) / np.sqrt(d)
    cur = np.tensordot(first, cur, axes=([1], [0]))
    pair = dmats / np.sqrt(d)
    codes = []
    for t in range(1, n + 1):
        flat = cur.reshape(d * d, -1)
        weights = np.einsum("ij,ij->i", flat.conj(), flat).real
        total = weights.sum()
        if total <= 0.0:
            raise DegenerateBranchError("all branch amplitudes vanish")
        code = int(rng.gen.choice(d * d, p=weights / total))
        codes.append(code)
        cur = cur[code]
        if t < n:
            # axes now: (nu_{t+1}..nu_n, alpha_t..alpha_{n-1})
            cur = np.tensordot(pair, cur, axes=([1, 2], [0, n - t]))
    amplitude = complex(cur * float(d) ** (-n / 2.0))
    beta = np.array([(c // d, c % d) for c in codes], dtype=np.int64)
    return beta, amplitude


def commuting_control_instance(
    n: int, d: int, rng: RngStream, kappa: float = 0.5
) -> tuple[PostSelectedSub, np.ndarray]:
    """Reference instance with scalar blocks and phase-only byproducts.

    The scalars are the post-selected sub-matrix of a Haar unitary on the m
    blocks alone (the internal-label-free analogue of the physical pipeline,
    where every record is collision-free), so their statistics match the
    monitored ensemble while all dressed blocks are diagonal and commute.
    """
    if n < 1 or d < 2:
        raise InvalidConfigError(f"need n >= 1 and d >= 2, got n={n}, d={d}")
    m = max(n, math.ceil(kappa * n * n - 1e-9))
    u = haar_unitary(m, rng)
    modes = sample_mode_set(u[:, m - n :], rng)
    scalars = u[np.ix_(list(modes), list(range(m - n, m)))]
    eye = np.eye(d, dtype=complex)
    blocks = scalars[:, :, None, None] * eye[None, None]
    beta = np.stack(
        [np.zeros(n, dtype=np.int64), rng.gen.integers(0, d, size=n)], axis=1
    )
    sub = PostSelectedSub(n=n, d=d, blocks=blocks, selected_blocks=modes)
    return sub, beta


def fermionant(W: np.ndarray, k: complex, cap: int = FACTORIAL_CAP) -> complex:
    """Cycle-weighted permutation sum sum_pi sgn(pi) k^{#cyc(pi)} prod_t W[t, pi(t)].

    Interpolates the determinant (k = 1) and the signed permanent (k = -1).
    """
    W = np.asarray(W, dtype=complex)
    n = W.shape[0]
    if W.shape != (n, n):
        raise InvalidConfigError(f"W must be square, got {W.shape}")
    images, signs, ncyc = permutation_table(n, cap=cap)
    vals = W[np.arange(n)[None, :], images].prod(axis=1)
    return complex(np.sum(signs * np.power(complex(k), ncyc) * vals))


def cyclic_closure(S, beta, route: str = "pathcycle", cap: int = FACTORIAL_CAP) -> complex:
    """Trace of the branch operator over d: the boundary wire closed on a
    maximally entangled reference."""
    if route == "pathcycle":
        op = branch_operator_pathcycle(S, beta, cap=cap)
    elif route == "dense":
        op = branch_operator_dense(S, beta, cap=cap)
    else:
        raise InvalidConfigError(f"unknown route {route!r}")
    d = op.d
    return complex(np.trace(op.matrix) / d)
