import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lindblad_pptt.ensembles import RngStream, sample_gue_hamiltonian, sample_kossakowski
from lindblad_pptt.generator import (
    GkslGenerator,
    LocalNoiseLayout,
    apply_dissipator,
    apply_full_generator,
    dephasing_qubit,
    depolarizing_qubit,
    embed_local_dissipators,
    generator_from_dict,
    generator_to_dict,
    kossakowski_dissipator,
    liouville_matrix,
    null_generator,
    unvec,
    vec,
)
from lindblad_pptt.linalg import InvalidDimensionError, gell_mann_basis


def rand_rho(rng, D):
    a = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    r = a @ a.conj().T
    return r / np.trace(r)


def rand_gen(D, seed, k=0.0, r=None):
    rng = np.random.default_rng(seed)
    km = sample_kossakowski(D, float(D), r or D * D - 1, rng)
    h = sample_gue_hamiltonian(D, rng) if k else None
    return GkslGenerator.from_kossakowski(km, h, k)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32), st.booleans())
def test_lindblad_route_matches_kossakowski_double_sum(D, seed, low_rank):
    g = rand_gen(D, seed, r=1 if low_rank else None)
    rho = rand_rho(np.random.default_rng(seed + 1), D)
    assert np.allclose(apply_dissipator(g, rho), kossakowski_dissipator(g.kossakowski, rho), atol=1e-12)
    assert g.n_ops == (1 if low_rank else D * D - 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32))
def test_generator_is_trace_free_and_hermiticity_preserving(D, seed):
    g = rand_gen(D, seed, k=1.0)
    rho = rand_rho(np.random.default_rng(seed), D)
    out = apply_full_generator(g, rho)
    assert abs(np.trace(out)) < 1e-12
    assert np.allclose(out, out.conj().T, atol=1e-12)


@pytest.mark.parametrize("D,k", [(2, 0.0), (3, 1.0), (4, 0.5)])
def test_liouville_matrix_matches_direct_action(D, k):
    g = rand_gen(D, 11, k=k)
    rho = rand_rho(np.random.default_rng(12), D)
    assert np.allclose(unvec(liouville_matrix(g) @ vec(rho), D), apply_full_generator(g, rho), atol=1e-12)
    # trace preservation in vec form: vec(1)^T M = 0
    assert np.allclose(vec(np.eye(D)) @ liouville_matrix(g), 0, atol=1e-12)


def test_lindblad_ops_are_traceless_and_ordered():
    g = rand_gen(3, 4)
    assert np.allclose(np.trace(g.lindblad_ops, axis1=1, axis2=2), 0, atol=1e-13)
    norms = np.einsum("lij,lij->l", g.lindblad_ops.conj(), g.lindblad_ops).real
    assert np.all(np.diff(norms) <= 1e-12)
    assert np.isclose(norms.sum(), g.kossakowski.xi)


def test_depolarizing_preset_contracts_bloch_vector():
    g = depolarizing_qubit()
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    # L(sx) = -(2 xi / 3) sx with xi = 2
    assert np.allclose(apply_full_generator(g, sx), -(4 / 3) * sx)


def test_dephasing_preset_single_sz_operator():
    g = dephasing_qubit()
    assert g.n_ops == 1
    assert np.allclose(g.lindblad_ops[0], np.diag([1, -1]))
    assert np.allclose(apply_full_generator(g, np.diag([1.0, 0.0])), 0)


def test_null_generator_has_no_ops():
    g = null_generator(3)
    assert g.n_ops == 0
    assert np.allclose(liouville_matrix(g), 0)


def _local_sum(dims, blocks, rho):
    """Sum of local dissipators, each lifted with identities on the other factors."""
    out = np.zeros_like(rho)
    for j, (d, kb) in enumerate(zip(dims, blocks)):
        g = GkslGenerator.from_kossakowski(kb)
        for op in g.lindblad_ops:
            parts = [np.eye(e) for e in dims]
            parts[j] = op
            big = parts[0]
            for p in parts[1:]:
                big = np.kron(big, p)
            out += big @ rho @ big.conj().T - 0.5 * (big.conj().T @ big @ rho + rho @ big.conj().T @ big)
    return out


@pytest.mark.parametrize("dims", [(2, 2), (3, 2), (2, 2, 2), (4, 2)])
def test_embedding_reproduces_sum_of_local_dissipators(dims):
    rng = np.random.default_rng(sum(dims))
    blocks = [sample_kossakowski(d, float(d), d * d - 1, rng) for d in dims]
    km = embed_local_dissipators(LocalNoiseLayout(dims, blocks))
    km.check()
    D = int(np.prod(dims))
    rho = rand_rho(rng, D)
    emb = GkslGenerator.from_kossakowski(km)
    ref = _local_sum(dims, blocks, rho)
    assert np.allclose(apply_dissipator(emb, rho), ref, atol=1e-12)
    assert np.allclose(kossakowski_dissipator(km, rho), ref, atol=1e-12)
    assert np.isclose(km.xi, sum(D // d * b.xi for d, b in zip(dims, blocks)))


def test_embedding_superlinear_trace():
    blocks = [sample_kossakowski(2, 2.0, 3, RngStream(0, j)) for j in range(2)]
    km = embed_local_dissipators(LocalNoiseLayout((2, 2), blocks))
    assert np.isclose(np.trace(km.matrix).real, 8.0, rtol=1e-12)


def test_layout_rejects_mismatch():
    blocks = [sample_kossakowski(2, 2.0, 3, RngStream(0, 0))]
    with pytest.raises(InvalidDimensionError):
        LocalNoiseLayout((3,), blocks)
    with pytest.raises(InvalidDimensionError):
        LocalNoiseLayout((2, 2), blocks)


def test_json_roundtrip_gell_mann_and_product():
    g = rand_gen(3, 9, k=1.0)
    g2 = generator_from_dict(json.loads(json.dumps(generator_to_dict(g))))
    assert np.allclose(liouville_matrix(g), liouville_matrix(g2))
    blocks = [sample_kossakowski(2, 2.0, 3, RngStream(1, j)) for j in range(2)]
    km = embed_local_dissipators(LocalNoiseLayout((2, 2), blocks))
    p = GkslGenerator.from_kossakowski(km, provenance={"subsystem_dims": [2, 2]})
    p2 = generator_from_dict(json.loads(json.dumps(generator_to_dict(p))))
    assert np.allclose(liouville_matrix(p), liouville_matrix(p2))


@pytest.mark.parametrize("doc", [{}, {"dim": 2}, {"dim": 2, "kossakowski": "x", "xi": 1, "rank_bound": 1,
                                                  "hamiltonian": []}])
def test_json_malformed(doc):
    with pytest.raises(ValueError):
        generator_from_dict(doc)


def test_basis_mismatch_rejected():
    km = sample_kossakowski(2, 2.0, 3, RngStream(0, 0))
    with pytest.raises(InvalidDimensionError):
        from lindblad_pptt.generator import lindblad_ops_from_kossakowski
        lindblad_ops_from_kossakowski(km, gell_mann_basis(3))
