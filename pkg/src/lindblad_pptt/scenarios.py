"""Noise-correlation scenarios and Monte Carlo ensemble execution.

Three ways of drawing a dissipator on ``D = d_1 * ... * d_n``:

* ``GLB``  one Wishart Kossakowski matrix on the full space;
* ``iLOC`` independent local matrices ``K_j``, embedded block-diagonally;
* ``cLOC`` one local matrix copied to every (isomorphic) subsystem.

For local scenarios with ``k = 0`` the channel factorizes into local
channels, and a product channel is PPT exactly when one factor is PPT
(partial-transpose spectra multiply). The default fast path therefore
searches each block separately: the iLOC time is the maximum over
blocks and the cLOC time equals the single-block time.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .ensembles import RngStream, sample_gue_hamiltonian, sample_kossakowski
from .generator import GkslGenerator, LocalNoiseLayout, embed_local_dissipators
from .pptt import PpttResult, pptt_search_batch
from .propagators import PropagatorConfig


class Correlation(str, enum.Enum):
    GLB = "glb"
    ILOC = "iloc"
    CLOC = "cloc"


TraceRule = Union[str, tuple]  # "canonical", "superlinear" or explicit values
RankRule = Union[str, tuple]  # "full", "matched" or explicit values


def _super_linear(d: int) -> float:
    return d * math.log2(d)


@dataclass(frozen=True)
class ScenarioSpec:
    """Subsystem layout, correlation class and Wishart sampling constraints.

    ``trace_rule``: ``"canonical"`` (trace ``d``), ``"superlinear"``
    (trace ``d log2 d``), or explicit values (one for GLB, one per block or
    a single broadcast value for local scenarios).
    ``rank_rule``: ``"full"`` (``d^2 - 1`` for every sampled matrix),
    ``"matched"`` (GLB rank ``sum_j (d_j^2 - 1)``; for local scenarios the
    same as full), or explicit values.
    """

    subsystem_dims: tuple
    correlation: Correlation = Correlation.GLB
    trace_rule: TraceRule = "canonical"
    rank_rule: RankRule = "full"
    k: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        dims = tuple(int(d) for d in self.subsystem_dims)
        if not dims or any(d < 2 for d in dims):
            raise ValueError(f"subsystem dimensions must all be >= 2, got {self.subsystem_dims}")
        object.__setattr__(self, "subsystem_dims", dims)
        object.__setattr__(self, "correlation", Correlation(self.correlation))
        if not isinstance(self.trace_rule, str):
            object.__setattr__(self, "trace_rule", tuple(float(v) for v in self.trace_rule))
        elif self.trace_rule not in ("canonical", "superlinear"):
            raise ValueError(f"unknown trace rule {self.trace_rule!r}")
        if not isinstance(self.rank_rule, str):
            object.__setattr__(self, "rank_rule", tuple(int(v) for v in self.rank_rule))
        elif self.rank_rule not in ("full", "matched"):
            raise ValueError(f"unknown rank rule {self.rank_rule!r}")
        if self.correlation is Correlation.CLOC and len(set(dims)) != 1:
            raise ValueError("cLOC needs isomorphic subsystems (all dimensions equal)")
        # resolve eagerly so invalid explicit values fail before any work starts
        xis, ranks = self.block_traces(), self.block_ranks()
        for d, x, r in zip(self.sampled_dims, xis, ranks):
            if not x > 0:
                raise ValueError(f"trace targets must be positive, got {x}")
            if not 1 <= r <= d * d - 1:
                raise ValueError(f"rank {r} out of range for dimension {d}")

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.subsystem_dims))

    @property
    def is_local(self) -> bool:
        return self.correlation is not Correlation.GLB

    @property
    def sampled_dims(self) -> tuple:
        """Dimensions of the independently sampled Kossakowski matrices."""
        if self.correlation is Correlation.GLB:
            return (self.total_dim,)
        if self.correlation is Correlation.CLOC:
            return (self.subsystem_dims[0],)
        return self.subsystem_dims

    def _explicit(self, values, n: int, what: str) -> tuple:
        if len(values) == 1:
            return tuple(values) * n
        if len(values) != n:
            raise ValueError(f"expected {n} explicit {what} values, got {len(values)}")
        return tuple(values)

    def block_traces(self) -> tuple:
        dims = self.sampled_dims
        if self.trace_rule == "canonical":
            return tuple(float(d) for d in dims)
        if self.trace_rule == "superlinear":
            return tuple(_super_linear(d) for d in dims)
        return self._explicit(self.trace_rule, len(dims), "trace")

    def block_ranks(self) -> tuple:
        dims = self.sampled_dims
        if self.rank_rule == "full":
            return tuple(d * d - 1 for d in dims)
        if self.rank_rule == "matched":
            if self.correlation is Correlation.GLB:
                return (min(sum(d * d - 1 for d in self.subsystem_dims), self.total_dim**2 - 1),)
            return tuple(d * d - 1 for d in dims)
        return self._explicit(self.rank_rule, len(dims), "rank")

    def embedded_trace(self) -> float:
        """Trace of the global Kossakowski matrix this scenario produces."""
        xis = self.block_traces()
        if self.correlation is Correlation.GLB:
            return xis[0]
        D = self.total_dim
        if self.correlation is Correlation.CLOC:
            xis = xis * len(self.subsystem_dims)
        return float(sum((D // d) * x for d, x in zip(self.subsystem_dims, xis)))

    def to_dict(self) -> dict:
        return {
            "subsystem_dims": list(self.subsystem_dims),
            "correlation": self.correlation.value,
            "trace_rule": self.trace_rule if isinstance(self.trace_rule, str) else list(self.trace_rule),
            "rank_rule": self.rank_rule if isinstance(self.rank_rule, str) else list(self.rank_rule),
            "k": self.k,
            "gamma": self.gamma,
            "block_traces": list(self.block_traces()),
            "block_ranks": list(self.block_ranks()),
            "embedded_trace": self.embedded_trace(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioSpec":
        tr, rk = doc.get("trace_rule", "canonical"), doc.get("rank_rule", "full")
        return cls(tuple(doc["subsystem_dims"]), doc.get("correlation", "glb"),
                   tr if isinstance(tr, str) else tuple(tr), rk if isinstance(rk, str) else tuple(rk),
                   float(doc.get("k", 0.0)), float(doc.get("gamma", 1.0)))


def draw_local_blocks(spec: ScenarioSpec, gen: np.random.Generator) -> list:
    """Local Kossakowski matrices in subsystem order (cLOC repeats one draw)."""
    xis, ranks = spec.block_traces(), spec.block_ranks()
    drawn = [sample_kossakowski(d, x, r, gen) for d, x, r in zip(spec.sampled_dims, xis, ranks)]
    if spec.correlation is Correlation.CLOC:
        drawn = drawn * len(spec.subsystem_dims)
    return drawn


def draw_generator(spec: ScenarioSpec, rng) -> GkslGenerator:
    """One random generator on the full space, drawn from the stream ``rng``."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    prov = {"subsystem_dims": list(spec.subsystem_dims), "correlation": spec.correlation.value}
    if isinstance(rng, RngStream):
        prov.update(master_seed=rng.master_seed, stream_index=rng.stream_index)
    if spec.correlation is Correlation.GLB:
        kmat = sample_kossakowski(spec.total_dim, spec.block_traces()[0], spec.block_ranks()[0], gen)
    else:
        blocks = draw_local_blocks(spec, gen)
        kmat = embed_local_dissipators(LocalNoiseLayout(spec.subsystem_dims, blocks))
    h = sample_gue_hamiltonian(spec.total_dim, gen) if spec.k != 0 else None
    return GkslGenerator.from_kossakowski(kmat, h, spec.k, spec.gamma, prov)


def compose_pptt_iloc(block_times: Sequence[PpttResult]) -> PpttResult:
    """Composite PPTT of a product of independent local channels: the latest block time."""
    if not block_times:
        raise ValueError("need at least one block result")
    return PpttResult(max(r.x_ppt for r in block_times), any(r.censored for r in block_times))


@dataclass(frozen=True)
class PpttSample:
    sample_index: int
    seed: int
    x_ppt: float
    censored: bool


@dataclass(frozen=True)
class PpttSampleSet:
    spec: Optional[ScenarioSpec]
    samples: tuple
    dx: float
    x_max: float
    master_seed: Optional[int]
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def x(self) -> np.ndarray:
        return np.array([s.x_ppt for s in self.samples], dtype=float)

    @property
    def censored(self) -> np.ndarray:
        return np.array([s.censored for s in self.samples], dtype=bool)

    def uncensored_x(self) -> np.ndarray:
        return self.x[~self.censored]

    def ecdf_values(self) -> np.ndarray:
        """Sample values for distribution functions; censored draws count as ``+inf``."""
        x = self.x
        x[self.censored] = np.inf
        return x


def _run_chunk(args) -> list:
    spec, cfg, master_seed, indices, fast_path = args
    streams = [RngStream(master_seed, i) for i in indices]
    use_blocks = fast_path and spec.is_local and spec.k == 0
    if not use_blocks:
        gens = [draw_generator(spec, s) for s in streams]
        res = pptt_search_batch(gens, cfg)
    else:
        per_sample = [draw_local_blocks(spec, s.generator()) for s in streams]
        n_blocks = len(spec.sampled_dims)
        block_results = []
        for j in range(n_blocks):
            gens = [GkslGenerator.from_kossakowski(blocks[j], None, 0.0, spec.gamma) for blocks in per_sample]
            block_results.append(pptt_search_batch(gens, cfg))
        res = [compose_pptt_iloc([block_results[j][i] for j in range(n_blocks)])
               for i in range(len(indices))]
    return [PpttSample(i, s.sample_seed, r.x_ppt, r.censored) for i, s, r in zip(indices, streams, res)]


def run_ensemble(spec: ScenarioSpec, n_samples: int, cfg: PropagatorConfig, master_seed: int,
                 workers: int = 1, fast_path: bool = True, chunk_size: int = 250,
                 progress=None) -> PpttSampleSet:
    """Draw ``n_samples`` generators and compute their PPTTs.

    Sample ``i`` uses ``RngStream(master_seed, i)``. Work is cut into fixed
    index chunks, so the output does not depend on ``workers``.
    ``progress`` is an optional callable receiving the number of finished samples.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    chunks = [list(range(a, min(a + chunk_size, n_samples))) for a in range(0, n_samples, chunk_size)]
    jobs = [(spec, cfg, master_seed, c, fast_path) for c in chunks]
    samples: list = []
    if workers <= 1:
        for job in jobs:
            samples.extend(_run_chunk(job))
            if progress:
                progress(len(samples))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_run_chunk, jobs):
                samples.extend(part)
                if progress:
                    progress(len(samples))
    samples.sort(key=lambda s: s.sample_index)
    use_blocks = fast_path and spec.is_local and spec.k == 0
    meta = {
        "method": cfg.method.value,
        "block_fast_path": bool(use_blocks),
        "code_version": __version__,
    }
    return PpttSampleSet(spec, tuple(samples), cfg.dx, cfg.x_max, int(master_seed), meta)


def rescale_samples(s: PpttSampleSet, xi_old: float, xi_new: float) -> PpttSampleSet:
    """Map PPTTs sampled at trace ``xi_old`` to trace ``xi_new``: ``x -> x xi_old / xi_new``."""
    if not (xi_old > 0 and xi_new > 0):
        raise ValueError("trace values must be positive")
    f = xi_old / xi_new
    new = tuple(replace(p, x_ppt=p.x_ppt * f) for p in s.samples)
    meta = dict(s.metadata, rescaled_by=f)
    return replace(s, samples=new, x_max=s.x_max * f, metadata=meta)


# --- serialization ----------------------------------------------------------------

CSV_HEADER = "sample_index,seed,x_ppt,censored"


def write_samples_csv(s: PpttSampleSet, path) -> None:
    lines = [CSV_HEADER]
    lines += [f"{p.sample_index},{p.seed},{p.x_ppt:.9g},{int(p.censored)}" for p in s.samples]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_samples_csv(path, dx: float = float("nan"), x_max: float = float("nan")) -> PpttSampleSet:
    """Parse a samples file; errors name the offending line."""
    with open(path, encoding="utf-8") as fh:
        rows = fh.read().splitlines()
    if not rows:
        raise ValueError(f"{path}: empty file")
    if rows[0].strip() != CSV_HEADER:
        raise ValueError(f"{path}:1: expected header {CSV_HEADER!r}, got {rows[0]!r}")
    samples = []
    for n, row in enumerate(rows[1:], start=2):
        if not row.strip():
            continue
        parts = row.split(",")
        try:
            if len(parts) != 4 or parts[3].strip() not in ("0", "1"):
                raise ValueError("expected 4 fields with censored in {0,1}")
            samples.append(PpttSample(int(parts[0]), int(parts[1]), float(parts[2]), parts[3].strip() == "1"))
        except ValueError as exc:
            raise ValueError(f"{path}:{n}: malformed row {row!r} ({exc})") from None
    if not samples:
        raise ValueError(f"{path}: no samples")
    samples.sort(key=lambda p: p.sample_index)
    return PpttSampleSet(None, tuple(samples), dx, x_max, None, {"source": str(path)})


def sample_set_metadata(s: PpttSampleSet) -> dict:
    return {
        "spec": s.spec.to_dict() if s.spec is not None else None,
        "dx": s.dx,
        "x_max": s.x_max,
        "master_seed": s.master_seed,
        "n_samples": len(s),
        **s.metadata,
    }
