"""Integration back-ends for ``d rho / dx = L(rho)``.

``Standard``
    Exact ``exp(x M)`` of the Liouville matrix through a general
    eigendecomposition, with a scaling-and-squaring fallback when the
    eigenvector matrix is ill-conditioned.
``CaoLu``
    Completely positive second-order scheme. One step of length ``dx`` is

        A''(.)A''^dag + dx * K_A' Q K_A' (.) + dx^2/2 * Q(Q(.))

    with ``J = -i H_eff``, ``A' = 1 + dx J / 2`` and
    ``A'' = 1 + dx J + (dx J)^2 / 2``. Every term is in Kraus form.

Channel matrices act on column-major ``vec`` of ``D x D`` operators.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .generator import GkslGenerator, apply_jump, effective_hamiltonian, liouville_matrix, unvec, vec
from .linalg import general_eigen

COND_LIMIT = 1e12


class Method(str, enum.Enum):
    STANDARD = "standard"
    CAOLU = "caolu"


class IllConditionedError(RuntimeError):
    """Eigenvector matrix too ill-conditioned for the diagonalization route."""


@dataclass(frozen=True)
class PropagatorConfig:
    method: Method = Method.CAOLU
    dx: float = 1e-3
    x_max: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "dx", float(self.dx))
        object.__setattr__(self, "x_max", float(self.x_max))
        if not 0 < self.dx < 1:
            raise ValueError(f"step dx must satisfy 0 < dx < 1, got {self.dx}")
        if self.x_max < self.dx:
            raise ValueError(f"horizon x_max={self.x_max} is shorter than dx={self.dx}")

    def grid(self) -> np.ndarray:
        """Scan points ``dx, 2 dx, ...`` up to the horizon, ending exactly at ``x_max``."""
        n = int(math.floor(self.x_max / self.dx + 1e-9))
        pts = np.arange(1, n + 1) * self.dx
        if self.x_max - pts[-1] > 1e-9 * self.dx:
            pts = np.append(pts, self.x_max)
        return pts


@dataclass(frozen=True)
class ChannelMatrix:
    dim_d: int
    matrix: np.ndarray

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dim_d)

    def trace_defect(self) -> float:
        """``max |vec(1)^T M - vec(1)^T|``; zero for trace-preserving maps."""
        row = vec(np.eye(self.dim_d))
        return float(np.max(np.abs(row @ self.matrix - row)))


class LiouvilleSpectrum:
    """Eigendecomposition of ``M`` reused for many evaluations of ``exp(x M)``."""

    def __init__(self, gen: GkslGenerator, cond_limit: float = COND_LIMIT):
        self.dim_d = gen.dim_d
        self.matrix = liouville_matrix(gen)
        w, v, vinv, cond = general_eigen(self.matrix)
        self.cond = cond
        if not cond <= cond_limit:
            raise IllConditionedError(
                f"Liouville eigenvector matrix has condition number {cond:.3e}; "
                "use the scaling-and-squaring exponential instead"
            )
        self.eigenvalues, self._v, self._vinv = w, v, vinv

    def exp(self, xs) -> np.ndarray:
        """``exp(x M)`` for a scalar ``x`` or a 1-D array of times (stacked result)."""
        xs = np.asarray(xs, dtype=float)
        e = np.exp(np.multiply.outer(xs, self.eigenvalues))
        return (self._v * e[..., None, :]) @ self._vinv


def standard_channel(gen: GkslGenerator, x: float) -> ChannelMatrix:
    if x < 0:
        raise ValueError("time must be non-negative")
    if x == 0:
        return ChannelMatrix(gen.dim_d, np.eye(gen.dim_d**2, dtype=complex))
    try:
        mat = LiouvilleSpectrum(gen).exp(x)
    except IllConditionedError:
        mat = scipy.linalg.expm(x * liouville_matrix(gen))
    return ChannelMatrix(gen.dim_d, mat)


def caolu_operators(gen: GkslGenerator, dx: float) -> tuple[np.ndarray, np.ndarray]:
    """The no-jump Kraus operators ``(A', A'')`` for a step ``dx``."""
    D = gen.dim_d
    j = -1j * effective_hamiltonian(gen)
    eye = np.eye(D, dtype=complex)
    a1 = eye + 0.5 * dx * j
    a2 = eye + dx * j + 0.5 * dx * dx * (j @ j)
    return a1, a2


def _check_dx(dx: float) -> None:
    if not 0 <= dx < 1:
        raise ValueError(f"step dx must satisfy 0 <= dx < 1, got {dx}")


def caolu_step(gen: GkslGenerator, rho: np.ndarray, dx: float) -> np.ndarray:
    """One step of the midpoint Kraus scheme on a ``D x D`` density matrix."""
    _check_dx(dx)
    if dx == 0:
        return np.array(rho, dtype=complex, copy=True)
    a1, a2 = caolu_operators(gen, dx)
    out = a2 @ rho @ a2.conj().T
    mid = a1 @ rho @ a1.conj().T
    out = out + dx * (a1 @ apply_jump(gen, mid) @ a1.conj().T)
    out = out + 0.5 * dx * dx * apply_jump(gen, apply_jump(gen, rho))
    return out


def caolu_step_choi(gen: GkslGenerator, choi: np.ndarray, dx: float) -> np.ndarray:
    """The same step applied as ``Phi x id`` to a ``D^2 x D^2`` state on ``A x B``."""
    _check_dx(dx)
    if dx == 0:
        return np.array(choi, dtype=complex, copy=True)
    eye = np.eye(gen.dim_d)
    a1, a2 = (np.kron(a, eye) for a in caolu_operators(gen, dx))
    lifted = np.array([np.kron(op, eye) for op in gen.lindblad_ops]).reshape(-1, *choi.shape)

    def jump(r):
        if lifted.shape[0] == 0:
            return np.zeros_like(r)
        return np.einsum("lij,jk,lmk->im", lifted, r, lifted.conj())

    out = a2 @ choi @ a2.conj().T
    out = out + dx * (a1 @ jump(a1 @ choi @ a1.conj().T) @ a1.conj().T)
    out = out + 0.5 * dx * dx * jump(jump(choi))
    return out


def caolu_superoperator(gen: GkslGenerator, dx: float) -> np.ndarray:
    """Channel matrix of one Cao-Lu step, assembled from its Kraus terms."""
    _check_dx(dx)
    a1, a2 = caolu_operators(gen, dx)
    q = np.zeros((gen.dim_d**2,) * 2, dtype=complex)
    for op in gen.lindblad_ops:
        q += np.kron(op.conj(), op)
    k1 = np.kron(a1.conj(), a1)
    return np.kron(a2.conj(), a2) + dx * (k1 @ q @ k1) + 0.5 * dx * dx * (q @ q)


def caolu_channel(gen: GkslGenerator, x: float, dx: float) -> ChannelMatrix:
    """Product of Cao-Lu steps covering ``[0, x]``; the last step is shortened."""
    n_full = int(math.floor(x / dx + 1e-9))
    rest = x - n_full * dx
    s = caolu_superoperator(gen, dx)
    mat = np.linalg.matrix_power(s, n_full) if n_full else np.eye(gen.dim_d**2, dtype=complex)
    if rest > 1e-9 * dx:
        mat = caolu_superoperator(gen, rest) @ mat
    return ChannelMatrix(gen.dim_d, mat)


def propagate(gen: GkslGenerator, rho0: np.ndarray, x: float, cfg: PropagatorConfig) -> np.ndarray:
    if x < 0:
        raise ValueError("time must be non-negative")
    if cfg.method is Method.STANDARD:
        return standard_channel(gen, x).apply(rho0)
    rho = np.array(rho0, dtype=complex, copy=True)
    n_full = int(math.floor(x / cfg.dx + 1e-9))
    for _ in range(n_full):
        rho = caolu_step(gen, rho, cfg.dx)
    rest = x - n_full * cfg.dx
    if rest > 1e-9 * cfg.dx:
        rho = caolu_step(gen, rho, rest)
    return rho


def channel(gen: GkslGenerator, x: float, cfg: PropagatorConfig) -> ChannelMatrix:
    if cfg.method is Method.STANDARD:
        return standard_channel(gen, x)
    return caolu_channel(gen, x, cfg.dx)
