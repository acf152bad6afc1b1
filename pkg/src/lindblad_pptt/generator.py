"""GKSL generators built from a Kossakowski matrix and an optional Hamiltonian.

The generator acts on density matrices as

    L(rho) = -i k [H, rho] + sum_l ( L_l rho L_l^dag - 1/2 {L_l^dag L_l, rho} )

and the dimensionless time is ``x = gamma * t``. Liouville matrices use
column-major vectorization, ``vec(A X B) = (B^T kron A) vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ensembles import KossakowskiMatrix
from .linalg import InvalidDimensionError, OperatorBasis, dagger, gell_mann_basis, product_basis

EIG_CUTOFF = 1e-10


def basis_of(k: KossakowskiMatrix) -> OperatorBasis:
    return k.basis if k.basis is not None else gell_mann_basis(k.dim_d)


def lindblad_ops_from_kossakowski(k: KossakowskiMatrix, basis: Optional[OperatorBasis] = None) -> np.ndarray:
    """Lindblad operators ``sqrt(lam_l) sum_m conj(U[m, l]) F_m`` from ``K = U diag(lam) U^dag``.

    Only eigenvalues above ``1e-10 * xi`` produce an operator. Returns an
    array of shape ``(n_ops, D, D)``, ordered by decreasing rate.
    """
    basis = basis if basis is not None else basis_of(k)
    if basis.dim != k.dim_d or len(basis) != k.matrix.shape[0]:
        raise InvalidDimensionError(
            f"basis of dimension {basis.dim} does not match Kossakowski matrix of dimension {k.dim_d}"
        )
    lam, u = np.linalg.eigh(k.matrix)
    keep = lam > EIG_CUTOFF * k.xi
    lam, u = lam[keep][::-1], u[:, keep][:, ::-1]
    # conj(U) pairs F_{m'} rho F_m^dag with K_{m m'}; see the Kossakowski-form dissipator
    coeffs = np.sqrt(lam)[:, None] * u.conj().T
    return basis.expand(coeffs)


def kossakowski_dissipator(k: KossakowskiMatrix, rho: np.ndarray, basis: Optional[OperatorBasis] = None) -> np.ndarray:
    """Double-sum form ``sum K_{m m'} (F_m' rho F_m^dag - 1/2 {F_m^dag F_m', rho})``.

    Independent of the Lindblad-operator route; used as a cross-check.
    """
    basis = basis if basis is not None else basis_of(k)
    f = basis.elements
    fd = dagger(f)
    jump = np.einsum("ab,bij,jk,akl->il", k.matrix, f, rho, fd)
    g = np.einsum("ab,aij,bjk->ik", k.matrix, fd, f)
    return jump - 0.5 * (g @ rho + rho @ g)


@dataclass(frozen=True)
class GkslGenerator:
    """Dynamics descriptor: ``x``-time generator ``-ik[H, .] + D_K``."""

    dim_d: int
    kossakowski: KossakowskiMatrix
    hamiltonian: np.ndarray
    k: float = 0.0
    gamma: float = 1.0
    lindblad_ops: np.ndarray = field(default=None, repr=False)
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kossakowski.dim_d != self.dim_d:
            raise InvalidDimensionError("Kossakowski matrix dimension does not match generator")
        if self.hamiltonian.shape != (self.dim_d, self.dim_d):
            raise InvalidDimensionError("Hamiltonian has the wrong shape")
        if self.lindblad_ops is None:
            object.__setattr__(self, "lindblad_ops", lindblad_ops_from_kossakowski(self.kossakowski))

    @classmethod
    def from_kossakowski(cls, kmat: KossakowskiMatrix, hamiltonian=None, k: float = 0.0,
                         gamma: float = 1.0, provenance: Optional[dict] = None) -> "GkslGenerator":
        D = kmat.dim_d
        h = np.zeros((D, D), dtype=complex) if hamiltonian is None else np.asarray(hamiltonian, dtype=complex)
        return cls(D, kmat, h, float(k), float(gamma), provenance=dict(provenance or {}))

    @property
    def n_ops(self) -> int:
        return self.lindblad_ops.shape[0]

    def decay_operator(self) -> np.ndarray:
        """``sum_l L_l^dag L_l``."""
        ops = self.lindblad_ops
        if ops.shape[0] == 0:
            return np.zeros((self.dim_d, self.dim_d), dtype=complex)
        return np.einsum("lji,ljk->ik", ops.conj(), ops)


def apply_jump(gen: GkslGenerator, rho: np.ndarray) -> np.ndarray:
    ops = gen.lindblad_ops
    if ops.shape[0] == 0:
        return np.zeros_like(rho, dtype=complex)
    return np.einsum("lij,jk,lmk->im", ops, rho, ops.conj())


def apply_dissipator(gen: GkslGenerator, rho: np.ndarray) -> np.ndarray:
    g = gen.decay_operator()
    return apply_jump(gen, rho) - 0.5 * (g @ rho + rho @ g)


def apply_full_generator(gen: GkslGenerator, rho: np.ndarray) -> np.ndarray:
    h = gen.hamiltonian
    return -1j * gen.k * (h @ rho - rho @ h) + apply_dissipator(gen, rho)


def effective_hamiltonian(gen: GkslGenerator) -> np.ndarray:
    """Non-Hermitian ``k H - (i/2) sum L^dag L``."""
    return gen.k * gen.hamiltonian - 0.5j * gen.decay_operator()


def liouville_matrix(gen: GkslGenerator) -> np.ndarray:
    """``D^2 x D^2`` matrix ``M`` with ``vec(L(rho)) = M vec(rho)`` (column-major vec)."""
    D = gen.dim_d
    eye = np.eye(D)
    h = gen.hamiltonian
    g = gen.decay_operator()
    m = -1j * gen.k * (np.kron(eye, h) - np.kron(h.T, eye))
    for op in gen.lindblad_ops:
        m += np.kron(op.conj(), op)
    m -= 0.5 * (np.kron(eye, g) + np.kron(g.T, eye))
    return m


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, D: int) -> np.ndarray:
    return np.asarray(v).reshape((D, D), order="F")


@dataclass(frozen=True)
class LocalNoiseLayout:
    subsystem_dims: tuple
    blocks: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.subsystem_dims)
        object.__setattr__(self, "subsystem_dims", dims)
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if len(dims) != len(self.blocks) or not dims:
            raise InvalidDimensionError("need one Kossakowski block per subsystem")
        for d, kb in zip(dims, self.blocks):
            if kb.dim_d != d or kb.matrix.shape != (d * d - 1, d * d - 1):
                raise InvalidDimensionError(f"block for subsystem of dimension {d} has wrong shape")

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.subsystem_dims))


def embed_local_dissipators(layout: LocalNoiseLayout,
                            bases: Optional[Sequence[OperatorBasis]] = None) -> KossakowskiMatrix:
    """Global Kossakowski matrix of ``sum_j D_{K_j}`` acting on the joint space.

    The matrix is expressed in the product basis of :func:`product_basis`,
    where it is block diagonal with blocks ``(D/d_j) K_j`` followed by zeros.
    The returned object carries that basis.
    """
    if bases is None:
        bases = [basis_of(kb) for kb in layout.blocks]
    if [b.dim for b in bases] != list(layout.subsystem_dims):
        raise InvalidDimensionError("local bases do not match subsystem dimensions")
    if len(bases) == 1:
        kb = layout.blocks[0]
        return KossakowskiMatrix(kb.dim_d, kb.matrix.copy(), kb.xi, kb.rank_bound, bases[0])
    glob, slices = product_basis(bases)
    D = layout.total_dim
    n = D * D - 1
    mat = np.zeros((n, n), dtype=complex)
    xi = 0.0
    for d, kb, sl in zip(layout.subsystem_dims, layout.blocks, slices):
        scale = D // d
        mat[sl, sl] = scale * kb.matrix
        xi += scale * kb.xi
    rank = min(n, sum(kb.rank_bound for kb in layout.blocks))
    return KossakowskiMatrix(D, mat, xi, rank, glob)


# --- presets used by the CLI and analytic tests -------------------------------

def depolarizing_qubit(xi: float = 2.0) -> GkslGenerator:
    """Qubit depolarizing generator, ``K = (xi/3) 1``; Bloch vector decays as ``exp(-2 xi x / 3)``."""
    kmat = KossakowskiMatrix(2, (xi / 3.0) * np.eye(3, dtype=complex), float(xi), 3)
    return GkslGenerator.from_kossakowski(kmat, provenance={"preset": "depolarizing-qubit"})


def dephasing_qubit(xi: float = 2.0) -> GkslGenerator:
    """Rank-one ``K = xi e_z e_z^T``, i.e. a single Lindblad operator ``sqrt(xi/2) sz``."""
    m = np.zeros((3, 3), dtype=complex)
    m[2, 2] = xi
    kmat = KossakowskiMatrix(2, m, float(xi), 1)
    return GkslGenerator.from_kossakowski(kmat, provenance={"preset": "dephasing-qubit"})


def null_generator(D: int) -> GkslGenerator:
    n = D * D - 1
    kmat = KossakowskiMatrix(D, np.zeros((n, n), dtype=complex), 0.0, 1)
    return GkslGenerator.from_kossakowski(kmat, provenance={"preset": "null"})


# --- JSON serialization ---------------------------------------------------------

def _encode(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _decode(rows) -> np.ndarray:
    a = np.asarray(rows, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def generator_to_dict(gen: GkslGenerator) -> dict:
    kmat = gen.kossakowski
    if kmat.basis is None:
        basis = {"kind": "gell-mann"}
    else:
        basis = {"kind": "product", "subsystem_dims": gen.provenance.get("subsystem_dims")}
        if basis["subsystem_dims"] is None:
            raise ValueError("product-basis generators need 'subsystem_dims' in their provenance")
    return {
        "dim": gen.dim_d,
        "gamma": gen.gamma,
        "k": gen.k,
        "hamiltonian": _encode(gen.hamiltonian),
        "kossakowski": _encode(kmat.matrix),
        "xi": kmat.xi,
        "rank_bound": kmat.rank_bound,
        "basis": basis,
        "provenance": gen.provenance,
    }


def generator_from_dict(doc: dict) -> GkslGenerator:
    try:
        D = int(doc["dim"])
        basis_doc = doc.get("basis", {"kind": "gell-mann"})
        if basis_doc["kind"] == "gell-mann":
            basis = None
        elif basis_doc["kind"] == "product":
            dims = [int(d) for d in basis_doc["subsystem_dims"]]
            basis, _ = product_basis([gell_mann_basis(d) for d in dims])
        else:
            raise ValueError(f"unknown basis kind {basis_doc['kind']!r}")
        kmat = KossakowskiMatrix(D, _decode(doc["kossakowski"]), float(doc["xi"]),
                                 int(doc["rank_bound"]), basis)
        h = _decode(doc["hamiltonian"])
        return GkslGenerator.from_kossakowski(kmat, h, float(doc.get("k", 0.0)),
                                              float(doc.get("gamma", 1.0)), doc.get("provenance"))
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"malformed generator document: {exc}") from exc
