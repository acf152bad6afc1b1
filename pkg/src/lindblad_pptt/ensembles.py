"""Seeded random matrix ensembles: Ginibre, trace/rank constrained Wishart, GUE.

Every sample in a Monte Carlo run owns an :class:`RngStream` keyed by
``(master_seed, stream_index)``. The stream is built from
``numpy.random.SeedSequence`` with the index as spawn key, so draws do
not depend on which worker handles the sample or in what order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .linalg import OperatorBasis, is_hermitian


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_index: int

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_index),))

    @property
    def sample_seed(self) -> int:
        """64-bit integer derived from the stream, recorded for provenance."""
        return int(self.seed_sequence().generate_state(1, np.uint64)[0])

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))


RngLike = Union[RngStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


@dataclass(frozen=True)
class KossakowskiMatrix:
    """PSD ``(D^2-1) x (D^2-1)`` matrix with its sampling metadata.

    ``basis`` is the operator basis the matrix is expressed in; ``None``
    means the generalized Gell-Mann basis of dimension ``dim_d``.
    """

    dim_d: int
    matrix: np.ndarray
    xi: float
    rank_bound: int
    basis: Optional[OperatorBasis] = None

    @property
    def size(self) -> int:
        return self.dim_d**2 - 1

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def numerical_rank(self) -> int:
        return int(np.sum(self.eigenvalues() > 1e-10 * self.xi))

    def check(self) -> None:
        """Raise ``ValueError`` if any of the structural invariants fails."""
        n = self.size
        if self.matrix.shape != (n, n):
            raise ValueError(f"Kossakowski matrix must be {n}x{n}, got {self.matrix.shape}")
        if not is_hermitian(self.matrix, 1e-12):
            raise ValueError("Kossakowski matrix is not Hermitian")
        ev = self.eigenvalues()
        if ev[0] < -1e-12 * self.xi:
            raise ValueError(f"Kossakowski matrix not PSD (min eigenvalue {ev[0]:.3e})")
        tr = float(np.trace(self.matrix).real)
        if abs(tr - self.xi) > 1e-10 * self.xi:
            raise ValueError(f"trace {tr} differs from target {self.xi}")
        if self.numerical_rank() > min(self.rank_bound, n):
            raise ValueError("rank exceeds rank bound")


def sample_ginibre(rows: int, cols: int, rng: RngLike) -> np.ndarray:
    """Complex Ginibre matrix; real and imaginary parts are i.i.d. standard normal."""
    if rows < 1 or cols < 1:
        raise ValueError("Ginibre shape must be positive")
    gen = as_generator(rng)
    return gen.standard_normal((rows, cols)) + 1j * gen.standard_normal((rows, cols))


def sample_kossakowski(D: int, xi: float, r: int, rng: RngLike) -> KossakowskiMatrix:
    """Wishart Kossakowski matrix ``xi * G^dag G / Tr[G^dag G]`` with ``G`` of shape ``r x (D^2-1)``."""
    if D < 2:
        raise ValueError(f"dimension must be >= 2, got {D}")
    n = D * D - 1
    if not 1 <= r <= n:
        raise ValueError(f"rank bound must lie in [1, {n}], got {r}")
    if not xi > 0:
        raise ValueError(f"trace target must be positive, got {xi}")
    g = sample_ginibre(r, n, rng)
    w = g.conj().T @ g
    w = 0.5 * (w + w.conj().T)
    w /= np.trace(w).real
    return KossakowskiMatrix(D, xi * w, float(xi), int(r))


def sample_gue_hamiltonian(D: int, rng: RngLike) -> np.ndarray:
    """GUE matrix ``(A + A^dag)/2`` for a standard complex Ginibre ``A``.

    Off-diagonal entries have variance 1 (1/2 per real part), diagonal
    entries are real with variance 1. No trace removal or rescaling is
    applied; the trace drops out of the commutator anyway.
    """
    if D < 2:
        raise ValueError(f"dimension must be >= 2, got {D}")
    a = sample_ginibre(D, D, rng)
    return 0.5 * (a + a.conj().T)


def mean_rate(k: KossakowskiMatrix) -> float:
    return float(np.trace(k.matrix).real) / k.size
