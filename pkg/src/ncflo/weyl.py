"""Generalized Pauli (Weyl) operators, Bell states, and fusion updates.

Conventions on the d-level computational basis {|0>, ..., |d-1>}:

    X|k> = |k+1 mod d>,   Z|k> = zeta^k |k>,   zeta = exp(2i pi / d),

so ZX = zeta XZ, and the byproduct label (a, b) stands for X^a Z^b. The
maximally entangled pair is |Phi+> = d^{-1/2} sum_k |k, k>, and the Bell
basis vector for outcome (a, b) is (1 (x) D_{(a,b)}^dagger)|Phi+>.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, NcfloError, NormalizationError


def zeta(d: int) -> complex:
    return np.exp(2j * np.pi / d)


@dataclass(frozen=True)
class WeylOp:
    d: int
    a: int
    b: int
    matrix: np.ndarray

    @property
    def labels(self) -> tuple[int, int]:
        return (self.a, self.b)


def weyl(d: int, a: int, b: int) -> WeylOp:
    """The operator X^a Z^b with labels reduced mod d."""
    if d < 2:
        raise InvalidDimensionError(f"weyl requires d >= 2, got {d}")
    a %= d
    b %= d
    m = np.zeros((d, d), dtype=complex)
    w = zeta(d)
    for k in range(d):
        m[(k + a) % d, k] = w ** (b * k)
    return WeylOp(d=d, a=a, b=b, matrix=m)


def weyl_matrix(d: int, a: int, b: int) -> np.ndarray:
    return weyl(d, a, b).matrix


def all_weyl_matrices(d: int) -> np.ndarray:
    """Stack of all d^2 byproduct matrices, indexed by a*d + b."""
    return np.stack([weyl_matrix(d, a, b) for a in range(d) for b in range(d)])


def weyl_transpose_relabel(d: int, a: int, b: int) -> tuple[complex, int, int]:
    """Phase and labels such that (X^a Z^b)^T = phase * X^{a'} Z^{b'}.

    Transposition inverts the shift and keeps the phase operator, giving
    a' = -a mod d, b' = b, phase = zeta^{-ab}.
    """
    if d < 2:
        raise InvalidDimensionError(f"weyl_transpose_relabel requires d >= 2, got {d}")
    a %= d
    b %= d
    phase = zeta(d) ** (-(a * b))
    return complex(phase), (-a) % d, b


def bell_state(d: int, beta: tuple[int, int]) -> np.ndarray:
    """(1 (x) D_beta^dagger)|Phi+> as a length-d^2 vector, index x*d + y."""
    dmat = weyl_matrix(d, *beta)
    # components [x, y] = d^{-1/2} (D^dagger)_{y, x} = d^{-1/2} conj(D_{x, y})
    return (dmat.conj() / np.sqrt(d)).reshape(-1)


def _teleport_contraction(psi: np.ndarray, xi: np.ndarray, beta: tuple[int, int], d: int) -> np.ndarray:
    """Direct three-party evaluation: <Phi_beta|_{12} (psi_1 (x) (xi (x) 1)|Phi+>_{23})."""
    phi_beta = bell_state(d, beta).reshape(d, d)
    # (xi (x) 1)|Phi+> has components [y, z] = d^{-1/2} xi_{y, z}
    pair = xi / np.sqrt(d)
    return np.einsum("xy,x,yz->z", phi_beta.conj(), psi, pair)


def teleport_update(psi: np.ndarray, xi: np.ndarray, beta: tuple[int, int]) -> np.ndarray:
    """Single-fusion update on the boundary wire: d^{-1} xi^T D_beta^T |psi>.

    This is the raw form of the Bell-projection identity, with the byproduct
    appearing transposed; downstream modules absorb the transpose into a
    relabeled outcome (see :func:`weyl_transpose_relabel`). The closed form
    is cross-checked against the direct three-party contraction on every
    call and a mismatch raises.
    """
    psi = np.asarray(psi, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    d = psi.shape[0]
    if xi.shape != (d, d):
        raise InvalidDimensionError(f"xi must be {d}x{d}, got {xi.shape}")
    dmat = weyl_matrix(d, *beta)
    out = (xi.T @ dmat.T @ psi) / d
    direct = _teleport_contraction(psi, xi, beta, d)
    if not np.allclose(out, direct, atol=1e-12, rtol=0.0):
        raise NcfloError(
            "teleport_update self-check failed: closed form and direct "
            f"contraction differ by {np.max(np.abs(out - direct)):.3e}"
        )
    return out


# --- d=2 encode/decode gadget ------------------------------------------------

_CNOT_Q_TO_F = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)  # basis order |Q f>: 00, 01, 10, 11
_X_Q = np.array(
    [[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]], dtype=complex
)
ENCODER_D2 = _X_Q @ _CNOT_Q_TO_F
DECODER_D2 = _CNOT_Q_TO_F


@dataclass(frozen=True)
class GadgetReport:
    """Outcome of the two-qubit encode/decode consistency check."""

    codewords_ok: bool
    payload_preserved: bool
    collision_flagged: bool
    decoded_payload: np.ndarray
    max_error: float

    @property
    def ok(self) -> bool:
        return self.codewords_ok and self.payload_preserved and self.collision_flagged


def encode_decode_check_d2(payload: np.ndarray) -> GadgetReport:
    """Verify the two-qubit occupation gadget on a payload state.

    Checks that (a) the encoder maps |alpha>|0> to the one-hot codewords
    |1-alpha, alpha>, (b) the decoder maps c0|1,0> + c1|0,1> to
    (c0|1> + c1|0>) (x) |1> so the flag qubit reads 1 without resolving the
    payload, and (c) the out-of-code marker |1,1> decodes to flag 0.
    """
    payload = np.asarray(payload, dtype=complex)
    if payload.shape != (2,):
        raise InvalidDimensionError(f"payload must be a 2-vector, got {payload.shape}")
    if abs(np.linalg.norm(payload) - 1.0) > 1e-12:
        raise NormalizationError("payload must be normalized")

    errs = []
    # (a) codewords: E|alpha, 0> = |1-alpha, alpha>
    for alpha in (0, 1):
        src = np.zeros(4, dtype=complex)
        src[2 * alpha] = 1.0  # |alpha>_Q |0>_f
        want = np.zeros(4, dtype=complex)
        want[2 * (1 - alpha) + alpha] = 1.0
        errs.append(np.max(np.abs(ENCODER_D2 @ src - want)))
    codewords_ok = max(errs[:2]) < 1e-12

    # (b) decode of the single-particle sector at this payload
    c0, c1 = payload
    encoded = np.zeros(4, dtype=complex)
    encoded[2] = c0  # |1,0>
    encoded[1] = c1  # |0,1>
    decoded = DECODER_D2 @ encoded
    want = np.zeros(4, dtype=complex)
    want[2 * 1 + 1] = c0  # c0 |1>_Q |1>_f
    want[2 * 0 + 1] = c1  # c1 |0>_Q |1>_f
    perr = np.max(np.abs(decoded - want))
    errs.append(perr)
    payload_preserved = perr < 1e-12
    # Q-state at flag 1 in (|0>_Q, |1>_Q) order; the gadget swaps the basis,
    # so it reads (c1, c0).
    decoded_payload = np.array([decoded[1], decoded[3]])

    # (c) collision marker |1,1> -> flag 0
    marker = np.zeros(4, dtype=complex)
    marker[3] = 1.0
    out = DECODER_D2 @ marker
    flag0_mass = abs(out[0]) ** 2 + abs(out[2]) ** 2
    collision_flagged = abs(flag0_mass - 1.0) < 1e-12

    return GadgetReport(
        codewords_ok=codewords_ok,
        payload_preserved=payload_preserved,
        collision_flagged=collision_flagged,
        decoded_payload=decoded_payload,
        max_error=float(max(errs)),
    )
