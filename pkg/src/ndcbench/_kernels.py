"""Batched statevector kernels.

Every kernel acts in place on an array of shape ``(S, 2**n)``: ``S`` independent
trajectories sharing one instruction stream. Wire ``w`` is bit ``w`` of the
basis index (little-endian), so reshaping a row to ``(2**(n-1-w), 2, 2**w)``
exposes wire ``w`` on the middle axis.
"""

from __future__ import annotations

import numpy as np

SQ2 = 1.0 / np.sqrt(2.0)

MAT_H = np.array([[SQ2, SQ2], [SQ2, -SQ2]], dtype=complex)
MAT_X = np.array([[0, 1], [1, 0]], dtype=complex)
MAT_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
MAT_Z = np.array([[1, 0], [0, -1]], dtype=complex)
MAT_SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)
MAT_T = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex)


def mat_ry(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def mat_rz(angle: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]], dtype=complex)


def n_of(psi: np.ndarray) -> int:
    return int(psi.shape[1]).bit_length() - 1


def view1(psi: np.ndarray, w: int) -> np.ndarray:
    n = n_of(psi)
    return psi.reshape(psi.shape[0], 1 << (n - 1 - w), 2, 1 << w)


def view2(psi: np.ndarray, a: int, b: int) -> tuple[np.ndarray, int, int]:
    """Reshape exposing wires ``a`` and ``b``; returns the view and their axes."""
    n = n_of(psi)
    lo, hi = min(a, b), max(a, b)
    v = psi.reshape(psi.shape[0], 1 << (n - 1 - hi), 2, 1 << (hi - lo - 1), 2, 1 << lo)
    ax = {hi: 2, lo: 4}
    return v, ax[a], ax[b]


def apply_1q(psi: np.ndarray, mat: np.ndarray, w: int) -> None:
    v = view1(psi, w)
    a0 = v[:, :, 0, :].copy()
    a1 = v[:, :, 1, :]
    v[:, :, 0, :] = mat[0, 0] * a0 + mat[0, 1] * a1
    v[:, :, 1, :] = mat[1, 0] * a0 + mat[1, 1] * a1


def apply_x(psi: np.ndarray, w: int) -> None:
    v = view1(psi, w)
    v[:, :, ::-1, :] = v.copy()


def apply_z(psi: np.ndarray, w: int) -> None:
    view1(psi, w)[:, :, 1, :] *= -1


def apply_y(psi: np.ndarray, w: int) -> None:
    apply_x(psi, w)
    v = view1(psi, w)
    v[:, :, 0, :] *= -1j
    v[:, :, 1, :] *= 1j


def _index(ax_vals: dict[int, int]) -> tuple:
    idx = [slice(None)] * 6
    for ax, val in ax_vals.items():
        idx[ax] = val
    return tuple(idx)


def apply_cnot(psi: np.ndarray, c: int, t: int) -> None:
    v, ac, at = view2(psi, c, t)
    i10, i11 = _index({ac: 1, at: 0}), _index({ac: 1, at: 1})
    tmp = v[i10].copy()
    v[i10] = v[i11]
    v[i11] = tmp


def apply_swap(psi: np.ndarray, a: int, b: int) -> None:
    v, aa, ab = view2(psi, a, b)
    i01, i10 = _index({aa: 0, ab: 1}), _index({aa: 1, ab: 0})
    tmp = v[i01].copy()
    v[i01] = v[i10]
    v[i10] = tmp


def prob_one(psi: np.ndarray, w: int) -> np.ndarray:
    """Per-row probability that wire ``w`` reads 1."""
    half = view1(psi, w)[:, :, 1, :]
    return np.einsum("sij,sij->s", half.real, half.real) + np.einsum(
        "sij,sij->s", half.imag, half.imag
    )


def collapse(psi: np.ndarray, w: int, outcome: np.ndarray, p1: np.ndarray) -> None:
    """Project each row onto its ``outcome`` and renormalise."""
    v = view1(psi, w)
    keep = np.where(outcome == 1, p1, 1.0 - p1)
    one = outcome == 1
    v[one, :, 0, :] = 0
    v[~one, :, 1, :] = 0
    psi *= (1.0 / np.sqrt(keep))[:, None]


PAULI_APPLY = {1: apply_x, 2: apply_y, 3: apply_z}


def apply_pauli_rows(psi: np.ndarray, rows: np.ndarray, paulis: np.ndarray, w: int) -> None:
    """Apply Pauli ``paulis[k]`` (0=I, 1=X, 2=Y, 3=Z) to wire ``w`` of row ``rows[k]``."""
    for code in (1, 2, 3):
        sel = rows[paulis == code]
        if sel.size:
            sub = psi[sel]
            PAULI_APPLY[code](sub, w)
            psi[sel] = sub
