import numpy as np
import pytest
import scipy.sparse as sp

from nonlocal_dd import (Kernel, ParameterError, QuadratureSpec, apply_operator, assemble_stiffness,
                         build_grid, export_matrix, extreme_eigenvalues, import_matrix, pair_weights)
from nonlocal_dd.assembly import MIDPOINT, quadratic_form_pairs
from oracles import (dense_stiffness, exact_weight, midpoint_weight, pair_sum_energy,
                     riemann_weight)


def cell_midpoint(d, n, delta, bc="neumann", norm="euclidean"):
    g = build_grid(d, n, delta, bc, layout="cell")
    return g, assemble_stiffness(g, Kernel.canonical(delta, norm), MIDPOINT)


def test_band_structure_under_midpoint():
    g, K = cell_midpoint(1, 20, 0.3)
    K = K.toarray()
    h2 = 0.05 ** 2
    row = K[10]
    off = row[np.arange(20) != 10]
    assert np.count_nonzero(off) == 12
    np.testing.assert_allclose(off[off != 0], -h2, rtol=1e-14)
    assert K[10, 10] == pytest.approx(0.03, rel=1e-14)
    assert np.count_nonzero(K[0, 1:]) == 6
    assert K[0, 0] == pytest.approx(0.015, rel=1e-14)


def test_stored_entry_count_by_neighbour_enumeration(tmp_path):
    g, K = cell_midpoint(1, 20, 0.3)
    c = g.element_center(np.arange(20))[:, 0]
    lower = sum(1 for i in range(20) for j in range(i) if abs(c[i] - c[j]) <= 0.3 * (1 + 1e-12))
    path = tmp_path / "k.mtx"
    export_matrix(K, path)
    header = path.read_text().splitlines()
    assert header[0] == "%%MatrixMarket matrix coordinate real symmetric"
    sizes = [line for line in header[1:] if not line.startswith("%")][0].split()
    assert int(sizes[2]) == 20 + lower == 119


def test_two_by_two_export_stores_three_entries(tmp_path):
    K = sp.csr_matrix(np.array([[2.0, -1.5], [-1.5, 2.0]]))
    path = tmp_path / "two.mtx"
    export_matrix(K, path)
    lines = [l for l in path.read_text().splitlines() if not l.startswith("%")]
    assert lines[0].split() == ["2", "2", "3"]
    assert (import_matrix(path) != K).nnz == 0


def test_round_trip_is_exact(tmp_path):
    g = build_grid(2, 5, 0.3)
    K = assemble_stiffness(g, Kernel.canonical(0.3))
    export_matrix(K, tmp_path / "k.mtx")
    K2 = import_matrix(tmp_path / "k.mtx")
    assert abs(K - K2).max() == 0.0


def test_export_failure_names_the_path(tmp_path):
    bad = tmp_path / "missing" / "k.mtx"
    with pytest.raises(OSError, match="missing"):
        export_matrix(sp.identity(2, format="csr"), bad)
    with pytest.raises(OSError, match="nope"):
        import_matrix(tmp_path / "nope.mtx")


@pytest.mark.parametrize("d, n, delta, bc", [
    (1, 10, 0.3, "neumann"), (1, 7, 0.45, "dirichlet"), (1, 4, 0.3, "dirichlet"),
    (2, 4, 0.3, "neumann"), (2, 3, 0.4, "dirichlet"),
])
def test_exact_assembly_matches_dense_oracle(d, n, delta, bc):
    g = build_grid(d, n, delta, bc)
    K = assemble_stiffness(g, Kernel.canonical(delta)).toarray()
    ref = dense_stiffness(g, exact_weight(g, delta))
    assert np.max(np.abs(K - ref)) <= 1e-12 * np.max(np.abs(ref))


@pytest.mark.parametrize("d, n, delta, norm", [(1, 10, 0.3, "euclidean"), (2, 4, 0.3, "euclidean"),
                                               (2, 4, 0.3, "max"), (3, 3, 0.4, "euclidean")])
def test_midpoint_assembly_matches_dense_oracle(d, n, delta, norm):
    g, K = cell_midpoint(d, n, delta, "dirichlet", norm)
    ref = dense_stiffness(g, midpoint_weight(g, delta, norm))
    assert np.max(np.abs(K.toarray() - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_dirichlet_entries_against_riemann_sum():
    g = build_grid(1, 4, 0.3, "dirichlet", layout="cell")
    K = assemble_stiffness(g, Kernel.canonical(0.3)).toarray()
    assert K.shape == (4, 4)
    ref = dense_stiffness(g, riemann_weight(g, 0.3))
    np.testing.assert_allclose(K, ref, atol=2e-3 * np.abs(ref).max())


def test_subdiv_one_is_midpoint_bit_for_bit():
    for layout in ("cell", "vertex"):
        g = build_grid(2, 5, 0.3, "dirichlet", layout)
        k = Kernel.canonical(0.3)
        a = assemble_stiffness(g, k, MIDPOINT)
        b = assemble_stiffness(g, k, QuadratureSpec.parse("subdiv:1"))
        assert (a != b).nnz == 0


def test_subdivision_converges_to_exact():
    g = build_grid(1, 10, 0.3, layout="cell")
    k = Kernel.canonical(0.3)
    exact = assemble_stiffness(g, k, "exact").toarray()
    errs = [np.abs(assemble_stiffness(g, k, f"subdiv:{q}").toarray() - exact).max() for q in (1, 2, 4, 8, 16)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    cauchy = [np.abs(assemble_stiffness(g, k, f"subdiv:{2 * q}").toarray()
                     - assemble_stiffness(g, k, f"subdiv:{q}").toarray()).max() for q in (1, 2, 4, 8)]
    assert all(b < a for a, b in zip(cauchy, cauchy[1:]))


@pytest.mark.parametrize("d, n, delta", [(1, 40, 0.3), (2, 8, 0.3)])
def test_structural_properties(d, n, delta):
    g = build_grid(d, n, delta)
    K = assemble_stiffness(g, Kernel.canonical(delta))
    scale = abs(K).max()
    assert abs(K - K.T).max() <= 1e-14 * scale
    assert np.all(K.diagonal() >= 0)
    off = K - sp.diags(K.diagonal())
    assert off.max() <= 0
    assert np.max(np.abs(K @ np.ones(K.shape[0]))) <= 1e-12 * scale
    rng = np.random.default_rng(0)
    for _ in range(100):
        u = rng.standard_normal(K.shape[0])
        assert u @ (K @ u) >= -1e-12 * (u @ u)


def test_dirichlet_is_positive_definite():
    g = build_grid(2, 6, 1 / 3, "dirichlet")
    K = assemble_stiffness(g, Kernel.canonical(1 / 3))
    rep = extreme_eigenvalues(K)
    assert rep.null_dim == 0 and rep.lambda_min_nonzero > 0


@pytest.mark.parametrize("bc", ["neumann", "dirichlet"])
def test_quadratic_form_identity(bc):
    g = build_grid(1, 8, 0.3, bc)
    kernel = Kernel.canonical(0.3)
    K = assemble_stiffness(g, kernel)
    u = np.random.default_rng(2).standard_normal(K.shape[0])
    direct = pair_sum_energy(g, exact_weight(g, 0.3), u)
    assert u @ (K @ u) == pytest.approx(direct, rel=1e-10)
    i, j, w = pair_weights(g, kernel)
    full = np.zeros(g.n_elements)
    full[g.interior_ids()] = u
    assert quadratic_form_pairs(i, j, w, full) == pytest.approx(direct, rel=1e-10)


def test_apply_operator():
    g = build_grid(1, 10, 0.3)
    K = assemble_stiffness(g, Kernel.canonical(0.3))
    N = K.shape[0]
    assert np.max(np.abs(apply_operator(K, np.ones(N)))) <= 1e-12
    e = np.zeros(N)
    e[3] = 1
    np.testing.assert_array_equal(apply_operator(K, e), K.toarray()[:, 3])
    rng = np.random.default_rng(5)
    u, v = rng.standard_normal((2, N))
    ref = dense_stiffness(g, exact_weight(g, 0.3))
    np.testing.assert_allclose(apply_operator(K, u), ref @ u, rtol=1e-12, atol=1e-15)
    assert u @ apply_operator(K, v) == pytest.approx(v @ apply_operator(K, u), rel=1e-13)
    with pytest.raises(ParameterError):
        apply_operator(K, np.ones(N + 1))


def test_worker_count_does_not_change_the_matrix():
    g = build_grid(2, 10, 0.3)
    k = Kernel.canonical(0.3)
    a = assemble_stiffness(g, k, workers=1)
    b = assemble_stiffness(g, k, workers=3)
    assert (a != b).nnz == 0


def test_thin_collar_is_rejected():
    g = build_grid(1, 10, 0.1, "dirichlet")
    with pytest.raises(ParameterError, match="collar"):
        assemble_stiffness(g, Kernel.canonical(0.3))


def test_scaled_kernel_scales_the_matrix():
    g = build_grid(1, 20, 0.3)
    a = assemble_stiffness(g, Kernel.canonical(0.3))
    b = assemble_stiffness(g, Kernel.scaled_1d(0.3))
    assert abs(b - a * 0.3 ** -3).max() <= 1e-13 * abs(b).max()


def test_exact_euclidean_3d_needs_subdivision():
    g = build_grid(3, 3, 0.4)
    with pytest.raises(ParameterError, match="subdiv"):
        assemble_stiffness(g, Kernel.canonical(0.4))
    K = assemble_stiffness(g, Kernel.canonical(0.4, "max"))
    assert K.shape == (64, 64)


@pytest.mark.parametrize("text", ["gauss", "subdiv:0", "subdiv:x"])
def test_bad_quadrature(text):
    with pytest.raises(ParameterError):
        QuadratureSpec.parse(text)
