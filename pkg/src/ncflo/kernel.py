"""The block-determinantal operator kernel and its Fock-space oracle.

The post-selected propagator sub-grid S induces on n qudits the operator

    K = sum_sigma sgn(sigma) (S_{1,sigma(1)} (x) ... (x) S_{n,sigma(n)}) P_{sigma^{-1}},

where P_sigma permutes tensor slots as P_sigma |v_1 ... v_n> =
|v_{sigma^{-1}(1)} ... v_{sigma^{-1}(n)}>. Matrix elements in the product
basis (slot 1 most significant) reduce to

    <nu|K|alpha> = sum_sigma sgn(sigma) prod_t (S_{t,sigma(t)})[nu_t, alpha_{sigma(t)}],

which is also the signed n x n minor of the full single-particle unitary, so
each element can be cross-checked against an ordinary determinant
(:func:`slater_amplitude`).
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import CapacityError, PauliExclusionError
from .model import PostSelectedSub, PropagatorBlocks
from .perms import FACTORIAL_CAP, Permutation, permutation_table, permutations

#: Default bound on the dense kernel dimension d**n.
KERNEL_DIM_CAP = 8192


def permutation_operator(perm: Permutation, d: int) -> np.ndarray:
    """Dense matrix of P_sigma on (C^d)^(x n), slot 1 most significant."""
    n = perm.n
    dim = d**n
    op = np.zeros((dim, dim), dtype=complex)
    # (P psi)[b_1..b_n] = psi[b_{sigma(1)}..b_{sigma(n)}]
    idx = np.arange(dim)
    digits = np.empty((n, dim), dtype=np.intp)
    rem = idx
    for t in range(n - 1, -1, -1):
        digits[t] = rem % d
        rem = rem // d
    src = np.zeros(dim, dtype=np.intp)
    for t in range(n):
        src = src * d + digits[perm.images[t]]
    op[idx, src] = 1.0
    return op


def _blocks_array(S) -> np.ndarray:
    if isinstance(S, PostSelectedSub):
        return S.blocks
    S = np.asarray(S, dtype=complex)
    if S.ndim == 2:  # scalar grid, d = 1
        return S[:, :, None, None]
    return S


def build_kernel(S, dim_cap: int = KERNEL_DIM_CAP, cap: int = FACTORIAL_CAP) -> np.ndarray:
    """Dense d^n x d^n kernel matrix from the (n, n, d, d) block grid."""
    blocks = _blocks_array(S)
    n, _, d, _ = blocks.shape
    if d**n > dim_cap:
        raise CapacityError(f"kernel dimension d^n = {d**n} exceeds the cap {dim_cap}")
    images, signs, _ = permutation_table(n, cap=cap)
    if d == 1:
        # Scalar blocks collapse to the ordinary determinant; vectorize the sum.
        vals = blocks[np.arange(n)[None, :], images, 0, 0]
        return np.array([[signs @ vals.prod(axis=1)]])
    out = np.zeros((d,) * (2 * n), dtype=complex)
    for img, sign in zip(images, signs):
        operands = []
        for t in range(n):
            operands.append(blocks[t, img[t]])
            operands.append([t, n + int(img[t])])
        operands.append(list(range(2 * n)))
        out += sign * np.einsum(*operands)
    return out.reshape(d**n, d**n)


def slater_amplitude(
    V: PropagatorBlocks,
    inputs: Sequence[tuple[int, int]],
    outputs: Sequence[tuple[int, int]],
) -> complex:
    """Transition amplitude between occupation patterns of the free evolution.

    ``inputs`` and ``outputs`` list (block, orbital) pairs; the amplitude is
    the determinant of the single-particle minor with rows taken from the
    output modes and columns from the input modes, in the order given.
    Determinant antisymmetry then carries the fermionic reordering sign, so
    canonically sorted lists give the +1-convention amplitude and swapping
    two entries flips the sign.
    """
    d = V.d
    rows = [b * d + a for (b, a) in outputs]
    cols = [b * d + a for (b, a) in inputs]
    if len(set(rows)) != len(rows):
        raise PauliExclusionError(f"repeated output mode in {outputs}")
    if len(set(cols)) != len(cols):
        raise PauliExclusionError(f"repeated input mode in {inputs}")
    if len(rows) != len(cols):
        raise ValueError("inputs and outputs must have equal length")
    minor = V.matrix[np.ix_(rows, cols)]
    return complex(np.linalg.det(minor))


def kernel_element_oracle(
    V: PropagatorBlocks,
    cfg_input_blocks: Sequence[int],
    selected_blocks: Sequence[int],
    out_labels: Sequence[int],
    in_labels: Sequence[int],
) -> complex:
    """Kernel matrix element computed through the Fock-space route."""
    inputs = list(zip(cfg_input_blocks, in_labels))
    outputs = list(zip(selected_blocks, out_labels))
    return slater_amplitude(V, inputs, outputs)
