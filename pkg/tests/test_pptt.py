import math

import numpy as np
import pytest
import scipy.linalg

from lindblad_pptt import pptt as P
from lindblad_pptt.ensembles import RngStream
from lindblad_pptt.generator import dephasing_qubit, depolarizing_qubit, kossakowski_dissipator
from lindblad_pptt.pptt import (
    ChoiState,
    choi_of_channel,
    choi_pt_of_channel,
    max_entangled_choi,
    negativity,
    pptt_search,
    pptt_search_batch,
    write_negativity_trace,
)
from lindblad_pptt.linalg import partial_transpose
from lindblad_pptt.propagators import IllConditionedError, PropagatorConfig, standard_channel
from lindblad_pptt.scenarios import ScenarioSpec, draw_generator

X_DEPOL = 0.75 * math.log(3)


def brute_pptt(kmat, dx, x_max):
    """Row-major Liouvillian from the double-sum dissipator, explicit Choi assembly."""
    D = kmat.dim_d
    E = lambda i, j: np.outer(np.eye(D)[i], np.eye(D)[j])
    M = np.zeros((D * D, D * D), complex)
    for a in range(D):
        for b in range(D):
            M[:, a * D + b] = kossakowski_dissipator(kmat, E(a, b)).reshape(-1)
    step = scipy.linalg.expm(dx * M)
    C = np.eye(D * D, dtype=complex)
    for n in range(1, int(round(x_max / dx)) + 1):
        C = step @ C
        pt = sum(np.kron((C @ E(i, j).reshape(-1)).reshape(D, D), E(j, i)) for i in range(D) for j in range(D)) / D
        ev = np.linalg.eigvalsh(pt)
        if 0.5 * np.sum(np.abs(ev) - ev) <= 1e-10:
            return n * dx
    return None


def test_bell_negativity_and_choi_of_identity():
    c = max_entangled_choi(3)
    c.check()
    assert np.isclose(negativity(c), 1.0)
    assert np.allclose(choi_of_channel(np.eye(9), 3), c.matrix)
    assert np.isclose(negativity(np.eye(4) / 4), 0)


def test_choi_reshuffles_match_definition():
    rng = np.random.default_rng(0)
    D = 3
    C = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
    ref = np.zeros((9, 9), complex)
    for i in range(D):
        for j in range(D):
            e = np.zeros((D, D))
            e[i, j] = 1
            out = (C @ e.reshape(-1, order="F")).reshape(D, D, order="F")
            ref += np.kron(out, e) / D
    assert np.allclose(choi_of_channel(C, D), ref)
    assert np.allclose(choi_pt_of_channel(C, D), partial_transpose(ref, D, D))
    batch = np.stack([C, 2 * C])
    assert np.allclose(choi_pt_of_channel(batch, D)[1], 2 * partial_transpose(ref, D, D))


@pytest.mark.parametrize("method", ["standard", "caolu"])
def test_depolarizing_analytic(method):
    r = pptt_search(depolarizing_qubit(), PropagatorConfig(method, 1e-3, 3))
    assert not r.censored
    assert abs(r.x_ppt - X_DEPOL) <= 0.002
    # first grid point past the crossing
    assert r.x_ppt >= X_DEPOL - 1e-9
    ri = pptt_search(depolarizing_qubit(), PropagatorConfig(method, 1e-3, 3), interpolate=True)
    assert abs(ri.x_ppt - X_DEPOL) < 1e-4


@pytest.mark.parametrize("method", ["standard", "caolu"])
def test_dephasing_never_ppt(method):
    r = pptt_search(dephasing_qubit(), PropagatorConfig(method, 1e-2, 5))
    assert r.censored and r.x_ppt == 5.0


@pytest.mark.parametrize("D,n", [(2, 6), (3, 2)])
def test_matches_bruteforce_oracle(D, n):
    spec = ScenarioSpec((D,))
    cfg = PropagatorConfig("standard", 2e-3, 4)
    for i in range(n):
        g = draw_generator(spec, RngStream(11, i))
        assert pptt_search(g, cfg).x_ppt == pytest.approx(brute_pptt(g.kossakowski, 2e-3, 4), abs=1e-12)


@pytest.mark.parametrize("method", ["standard", "caolu"])
def test_batch_composition_does_not_change_results(method):
    spec = ScenarioSpec((3,), k=1.0)
    gens = [draw_generator(spec, RngStream(5, i)) for i in range(6)]
    cfg = PropagatorConfig(method, 1e-3, 5)
    together = [r.x_ppt for r in pptt_search_batch(gens, cfg)]
    alone = [pptt_search(g, cfg).x_ppt for g in gens]
    reordered = [r.x_ppt for r in pptt_search_batch(gens[::-1], cfg)][::-1]
    assert together == alone == reordered


def test_ill_conditioned_fallback(monkeypatch):
    spec = ScenarioSpec((2,))
    gens = [draw_generator(spec, RngStream(3, i)) for i in range(3)]
    cfg = PropagatorConfig("standard", 1e-3, 4)
    ref = [r.x_ppt for r in pptt_search_batch(gens, cfg)]
    real = P.LiouvilleSpectrum

    def flaky(g, *a, **kw):
        if g is gens[1]:
            raise IllConditionedError("forced")
        return real(g, *a, **kw)

    monkeypatch.setattr(P, "LiouvilleSpectrum", flaky)
    got = [r.x_ppt for r in pptt_search_batch(gens, cfg)]
    assert got[0] == ref[0] and got[2] == ref[2]
    assert abs(got[1] - ref[1]) <= 1e-3


def test_negativity_trace_is_monotone_for_depolarizing(tmp_path):
    r = pptt_search(depolarizing_qubit(), PropagatorConfig("standard", 1e-2, 2), record_trace=True)
    xs, ns = r.negativity_trace
    assert np.all(np.diff(ns) <= 1e-12)
    i = int(np.argmin(np.abs(xs - r.x_ppt)))
    assert np.isclose(xs[i], r.x_ppt) and ns[i] <= 1e-10 < ns[i - 1]
    out = tmp_path / "trace.csv"
    write_negativity_trace(r, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "x,negativity" and len(lines) == len(xs) + 1
    with pytest.raises(ValueError):
        write_negativity_trace(pptt_search(depolarizing_qubit(), PropagatorConfig()), out)


def test_choi_state_stays_physical_along_flow():
    g = draw_generator(ScenarioSpec((3,), k=1.0), RngStream(0, 0))
    for x in (0.2, 1.0, 3.0):
        ChoiState(3, choi_of_channel(standard_channel(g, x).matrix, 3)).check()
