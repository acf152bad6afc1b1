"""Choi states, negativity and the positive-partial-transpose time search.

The Choi state of a channel with matrix ``C`` (column-major vec
convention) is ``rho[(i,a),(j,b)] = C[i + D j, a + D b] / D``; the first
tensor factor is the evolved system, the second the untouched reference.
The search evaluates the negativity of the Choi state on the grid
``x = dx, 2 dx, ...`` and stops at the first point where it is at most
``NEGATIVITY_TOL``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .generator import GkslGenerator, liouville_matrix
from .linalg import partial_transpose
from .propagators import (
    IllConditionedError,
    LiouvilleSpectrum,
    Method,
    PropagatorConfig,
    caolu_superoperator,
)

NEGATIVITY_TOL = 1e-10
# complex entries per evaluation buffer; bounds memory of batched scans
_BUFFER_ENTRIES = 2_000_000


@dataclass(frozen=True)
class ChoiState:
    dim_d: int
    matrix: np.ndarray

    def check(self, trace_tol: float = 1e-8, psd_tol: float = 1e-10) -> None:
        tr = np.trace(self.matrix).real
        if abs(tr - 1) > trace_tol:
            raise ValueError(f"Choi state trace {tr} differs from 1")
        ev = np.linalg.eigvalsh(self.matrix)
        if ev[0] < -psd_tol:
            raise ValueError(f"Choi state has negative eigenvalue {ev[0]:.3e}")


@dataclass(frozen=True)
class PpttResult:
    x_ppt: float
    censored: bool
    negativity_trace: Optional[tuple] = None

    def to_dict(self) -> dict:
        return {"x_ppt": self.x_ppt, "censored": self.censored}


def max_entangled_choi(D: int) -> ChoiState:
    if D < 2:
        raise ValueError("dimension must be >= 2")
    psi = np.eye(D, dtype=complex).reshape(-1) / np.sqrt(D)
    return ChoiState(D, np.outer(psi, psi.conj()))


def choi_of_channel(channel_matrix: np.ndarray, D: int) -> np.ndarray:
    """Choi matrix from channel matrices; leading batch axes are kept."""
    c = np.asarray(channel_matrix)
    batch = c.shape[:-2]
    k = len(batch)
    c4 = c.reshape(batch + (D, D, D, D))
    axes = tuple(range(k)) + (k + 1, k + 3, k, k + 2)
    return c4.transpose(axes).reshape(batch + (D * D, D * D)) / D


def choi_pt_of_channel(channel_matrix: np.ndarray, D: int) -> np.ndarray:
    """Partial transpose (on the reference) of the Choi matrix, in one reshuffle."""
    c = np.asarray(channel_matrix)
    batch = c.shape[:-2]
    k = len(batch)
    c4 = c.reshape(batch + (D, D, D, D))
    axes = tuple(range(k)) + (k + 1, k + 2, k, k + 3)
    return c4.transpose(axes).reshape(batch + (D * D, D * D)) / D


def negativity_from_eigenvalues(ev: np.ndarray) -> np.ndarray:
    """``1/2 sum (|l| - l)`` over the last axis."""
    return 0.5 * np.sum(np.abs(ev) - ev, axis=-1)


def negativity(rho, dims: Optional[tuple] = None) -> float:
    """Negativity of a bipartite state (``ChoiState`` or matrix with ``dims=(dA, dB)``)."""
    if isinstance(rho, ChoiState):
        m, (dA, dB) = rho.matrix, (rho.dim_d, rho.dim_d)
    else:
        m = np.asarray(rho)
        if dims is None:
            d = int(round(np.sqrt(m.shape[0])))
            dims = (d, d)
        dA, dB = dims
    ev = np.linalg.eigvalsh(partial_transpose(m, dA, dB))
    return float(negativity_from_eigenvalues(ev))


# --- channel evaluators over the scan grid ---------------------------------------

class _SpectralEvaluator:
    """``exp(x M)`` at arbitrary grid points from one eigendecomposition per sample."""

    def __init__(self, spectra: Sequence[LiouvilleSpectrum]):
        self.v = np.stack([s._v for s in spectra])
        self.w = np.stack([s.eigenvalues for s in spectra])
        self.vinv = np.stack([s._vinv for s in spectra])

    def take(self, keep: np.ndarray) -> None:
        self.v, self.w, self.vinv = self.v[keep], self.w[keep], self.vinv[keep]

    def block(self, start: int, xs: np.ndarray) -> np.ndarray:
        e = np.exp(xs[None, :, None] * self.w[:, None, :])
        return (self.v[:, None] * e[..., None, :]) @ self.vinv[:, None]


class _SteppingEvaluator:
    """Repeated application of a per-sample step matrix (Cao-Lu, or an expm fallback)."""

    def __init__(self, steps: np.ndarray, last_steps: Optional[np.ndarray], n_grid: int):
        self.steps = steps
        self.last = last_steps
        self.n_grid = n_grid
        B, n, _ = steps.shape
        self.current = np.broadcast_to(np.eye(n, dtype=complex), (B, n, n)).copy()

    def take(self, keep: np.ndarray) -> None:
        self.steps, self.current = self.steps[keep], self.current[keep]
        if self.last is not None:
            self.last = self.last[keep]

    def block(self, start: int, xs: np.ndarray) -> np.ndarray:
        B, n, _ = self.current.shape
        out = np.empty((B, len(xs), n, n), dtype=complex)
        cur = self.current
        for i in range(len(xs)):
            idx = start + i
            step = self.last if (self.last is not None and idx == self.n_grid - 1) else self.steps
            cur = step @ cur
            out[:, i] = cur
        self.current = cur
        return out


def _expm_steps(gen: GkslGenerator, dx: float) -> np.ndarray:
    return scipy.linalg.expm(dx * liouville_matrix(gen))


def _partial_rest(grid: np.ndarray, dx: float) -> Optional[float]:
    if np.isclose(grid[-1], len(grid) * dx, rtol=0, atol=1e-9 * dx):
        return None
    return float(grid[-1] - grid[-2]) if len(grid) > 1 else float(grid[-1])


def _stepping(gens, cfg: PropagatorConfig, grid: np.ndarray, step_fn) -> _SteppingEvaluator:
    rest = _partial_rest(grid, cfg.dx)
    steps = np.stack([step_fn(g, cfg.dx) for g in gens])
    last = np.stack([step_fn(g, rest) for g in gens]) if rest is not None else None
    return _SteppingEvaluator(steps, last, len(grid))


def pptt_search_batch(gens: Sequence[GkslGenerator], cfg: PropagatorConfig,
                      record_trace: bool = False, interpolate: bool = False,
                      tol: float = NEGATIVITY_TOL) -> list[PpttResult]:
    """PPTT of several same-dimension generators, scanned together.

    Each sample's arithmetic is independent of the others in the batch, so
    results do not depend on how samples are grouped.
    """
    gens = list(gens)
    if not gens:
        return []
    D = gens[0].dim_d
    if any(g.dim_d != D for g in gens):
        raise ValueError("all generators in a batch must share the Hilbert dimension")
    grid = cfg.grid()
    groups = []
    if cfg.method is Method.STANDARD:
        spectra, fallback = {}, []
        for i, g in enumerate(gens):
            try:
                spectra[i] = LiouvilleSpectrum(g)
            except IllConditionedError:
                fallback.append(i)
        if spectra:
            idx = list(spectra)
            groups.append((idx, _SpectralEvaluator([spectra[i] for i in idx])))
        if fallback:
            # measure-zero defective generators: exact scaling-and-squaring steps
            groups.append((fallback, _stepping([gens[i] for i in fallback], cfg, grid, _expm_steps)))
    else:
        groups.append((list(range(len(gens))), _stepping(gens, cfg, grid, caolu_superoperator)))
    results: list = [None] * len(gens)
    for idx, ev in groups:
        for i, res in zip(idx, _scan(ev, len(idx), D, grid, cfg, record_trace, interpolate, tol)):
            results[i] = res
    return results


def _scan(ev, B: int, D: int, grid: np.ndarray, cfg: PropagatorConfig, record_trace: bool,
          interpolate: bool, tol: float) -> list[PpttResult]:
    active = np.arange(B)
    x_out = np.full(B, float(cfg.x_max))
    censored = np.ones(B, dtype=bool)
    traces = [[] for _ in range(B)] if record_trace else None
    prev_min = np.full(B, -np.inf)
    chunk = max(1, min(256, _BUFFER_ENTRIES // (B * D**4)))
    start = 0
    while start < len(grid) and active.size:
        xs = grid[start:start + chunk]
        chans = ev.block(start, xs)
        eig = np.linalg.eigvalsh(choi_pt_of_channel(chans, D))
        neg = negativity_from_eigenvalues(eig)
        lam_min = eig[..., 0]
        if record_trace:
            for row, b in enumerate(active):
                traces[b].append(np.column_stack([xs, neg[row]]))
        hit = neg <= tol
        done = hit.any(axis=1)
        first = np.argmax(hit, axis=1)
        for row in np.flatnonzero(done):
            b = active[row]
            i = first[row]
            x = xs[i]
            if interpolate:
                lo = lam_min[row, i - 1] if i > 0 else prev_min[row]
                x_lo = xs[i - 1] if i > 0 else (grid[start - 1] if start > 0 else 0.0)
                hi = lam_min[row, i]
                if np.isfinite(lo) and hi != lo:
                    x = x_lo + (x - x_lo) * (-lo) / (hi - lo)
            x_out[b] = x
            censored[b] = False
        prev_min = lam_min[:, -1]
        keep = ~done
        if not keep.all():
            ev.take(keep)
            active = active[keep]
            prev_min = prev_min[keep]
        start += len(xs)
    results = []
    for b in range(B):
        tr = None
        if record_trace:
            arr = np.concatenate(traces[b]) if traces[b] else np.empty((0, 2))
            tr = (arr[:, 0], arr[:, 1])
        results.append(PpttResult(float(x_out[b]), bool(censored[b]), tr))
    return results


def pptt_search(gen: GkslGenerator, cfg: PropagatorConfig, record_trace: bool = False,
                interpolate: bool = False) -> PpttResult:
    return pptt_search_batch([gen], cfg, record_trace, interpolate)[0]


def write_negativity_trace(result: PpttResult, path) -> None:
    if result.negativity_trace is None:
        raise ValueError("result carries no negativity trace; search with record_trace=True")
    xs, ns = result.negativity_trace
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "negativity"])
        for x, n in zip(xs, ns):
            w.writerow([f"{x:.9g}", f"{n:.9g}"])
