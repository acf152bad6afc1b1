"""Dense complex linear algebra kernel.

Everything here works on plain ``numpy.ndarray`` objects of dtype
``complex128``. Matrices are small (at most 64x64 for D=8 Liouvillians),
so no sparse formats are used.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-10


class InvalidDimensionError(ValueError):
    """Raised when matrix or Hilbert-space dimensions are inconsistent."""


class NotHermitianError(ValueError):
    pass


@dataclass(frozen=True)
class OperatorBasis:
    """Hilbert-Schmidt orthonormal set of traceless ``dim x dim`` operators.

    ``elements`` has shape ``(dim**2 - 1, dim, dim)``.
    """

    dim: int
    elements: np.ndarray

    def __len__(self) -> int:
        return self.elements.shape[0]

    def gram(self) -> np.ndarray:
        """Matrix of Hilbert-Schmidt products ``Tr[F_m^dag F_n]``."""
        flat = self.elements.reshape(len(self), -1)
        return flat.conj() @ flat.T

    def expand(self, coeffs: np.ndarray) -> np.ndarray:
        """Return ``sum_m coeffs[m] F_m``; ``coeffs`` may carry leading batch axes."""
        return np.tensordot(coeffs, self.elements, axes=([-1], [0]))

    def coefficients(self, op: np.ndarray) -> np.ndarray:
        """Components ``Tr[F_m^dag op]`` of ``op`` along the basis."""
        return np.einsum("mij,ij->m", self.elements.conj(), op)


def gell_mann_basis(d: int) -> OperatorBasis:
    """Generalized Gell-Mann matrices normalized to ``Tr[F^dag F] = 1``.

    Ordering: the symmetric elements ``(E_jk + E_kj)/sqrt(2)`` for ``j < k``
    in lexicographic order, then the antisymmetric elements
    ``(-i E_jk + i E_kj)/sqrt(2)`` in the same order, then the ``d - 1``
    diagonal elements ``diag(1, ..., 1, -l, 0, ..., 0)/sqrt(l(l+1))`` for
    ``l = 1..d-1``. For ``d = 2`` this is ``(sx, sy, sz)/sqrt(2)``.
    """
    if int(d) != d or d < 2:
        raise InvalidDimensionError(f"Hilbert dimension must be an integer >= 2, got {d}")
    d = int(d)
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    out = np.zeros((d * d - 1, d, d), dtype=complex)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    m = 0
    for j, k in pairs:
        out[m, j, k] = out[m, k, j] = inv_sqrt2
        m += 1
    for j, k in pairs:
        out[m, j, k] = -1j * inv_sqrt2
        out[m, k, j] = 1j * inv_sqrt2
        m += 1
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        out[m] = np.diag(diag / np.sqrt(l * (l + 1)))
        m += 1
    return OperatorBasis(d, out)


def product_basis(bases: Sequence[OperatorBasis]) -> tuple[OperatorBasis, list[slice]]:
    """Traceless orthonormal basis of a tensor-product space built from local bases.

    Each local set is completed with ``F_0 = 1/sqrt(d_j)`` and the global
    elements are ``F_{l_1} x ... x F_{l_n}`` for every label vector except
    all-zeros. Labels with a single nonzero entry come first, grouped by
    subsystem (subsystem ``j`` occupies the slice returned at position
    ``j``, in the order of its local basis); mixed labels follow in
    lexicographic order.
    """
    if not bases:
        raise InvalidDimensionError("need at least one local basis")
    dims = [b.dim for b in bases]
    completed = [
        np.concatenate([np.eye(b.dim, dtype=complex)[None] / np.sqrt(b.dim), b.elements])
        for b in bases
    ]
    n = len(bases)
    labels: list[tuple[int, ...]] = []
    slices = []
    for j, b in enumerate(bases):
        start = len(labels)
        for l in range(1, len(b) + 1):
            lab = [0] * n
            lab[j] = l
            labels.append(tuple(lab))
        slices.append(slice(start, len(labels)))
    for lab in product(*[range(d * d) for d in dims]):
        if sum(1 for l in lab if l) >= 2:
            labels.append(lab)
    D = int(np.prod(dims))
    elements = np.empty((len(labels), D, D), dtype=complex)
    for m, lab in enumerate(labels):
        op = np.ones((1, 1), dtype=complex)
        for j, l in enumerate(lab):
            op = np.kron(op, completed[j][l])
        elements[m] = op
    return OperatorBasis(D, elements), slices


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    return bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= tol * scale)


def partial_transpose(m: np.ndarray, dA: int, dB: int) -> np.ndarray:
    """Transpose the second tensor factor of an operator on ``C^dA x C^dB``.

    Works on stacks of matrices (leading batch axes are preserved).
    """
    m = np.asarray(m)
    n = dA * dB
    if m.shape[-2:] != (n, n):
        raise InvalidDimensionError(f"expected trailing shape {(n, n)}, got {m.shape[-2:]}")
    batch = m.shape[:-2]
    t = m.reshape(batch + (dA, dB, dA, dB))
    k = len(batch)
    axes = tuple(range(k)) + (k, k + 3, k + 2, k + 1)
    return t.transpose(axes).reshape(batch + (n, n))


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values; equals ``sum |eigenvalues|`` for Hermitian input."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidDimensionError(f"trace norm needs a square matrix, got shape {m.shape}")
    if is_hermitian(m):
        return float(np.sum(np.abs(np.linalg.eigvalsh(m))))
    return float(np.linalg.norm(m, "nuc"))


def hermitian_eigen(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors of a Hermitian matrix."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {m.shape}")
    if not is_hermitian(m):
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    return np.linalg.eigh(m)


def general_eigen(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Eigendecomposition ``m = V diag(w) V^-1`` of a general square matrix.

    Returns ``(w, V, V_inv, cond)`` where ``cond`` is the 2-norm condition
    number of ``V``. Callers decide what to do with ill-conditioned ``V``.
    """
    w, v = np.linalg.eig(m)
    cond = float(np.linalg.cond(v))
    if not np.isfinite(cond):
        return w, v, np.full_like(v, np.nan), cond
    return w, v, np.linalg.inv(v), cond
