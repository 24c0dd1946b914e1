"""Generalized eigensolver vs the dense verification oracle."""

import numpy as np
import pytest
from scipy import sparse

from conftest import random_connected_operator, random_operator
from manifold_index import manifold, spectral
from manifold_index.errors import ConvergenceError, ParameterError, SizeError


def make_pair(dense, mode="balanced", t=1.0):
    w = manifold.WeightMatrix(sparse.csr_matrix(np.asarray(dense, dtype=float)), t, mode)
    return w, manifold.mass_matrix(w)


def two_point_pair(kern=0.7):
    return make_pair([[kern, -kern], [-kern, kern]])


def a_angle(a_diag, u, v):
    """Angle between two vectors in the A-inner product."""
    num = abs(u @ (a_diag * v))
    den = np.sqrt(u @ (a_diag * u)) * np.sqrt(v @ (a_diag * v))
    return float(np.arccos(np.clip(num / den, -1.0, 1.0)))


def assert_bases_agree(a_diag, got, want, val_tol=1e-8, vec_tol=1e-6, cluster_gap=1e-6):
    """Eigenvalues must match to a max(1,.)-floored relative tolerance;
    eigenvectors up to sign within an A-norm angle, comparing subspaces for
    clusters of (near-)repeated eigenvalues."""
    p = got.count
    ref = want.values[:p]
    assert np.all(np.abs(got.values - ref) <= val_tol * np.maximum(1.0, np.abs(ref)))

    scale = max(1.0, float(np.max(np.abs(want.values))))
    clusters = []
    start = 0
    for i in range(1, p):
        if ref[i] - ref[i - 1] > cluster_gap * scale:
            clusters.append((start, i))
            start = i
    clusters.append((start, p))
    sq = np.sqrt(a_diag)
    for lo, hi in clusters:
        if hi == p and p < want.count and want.values[p] - ref[hi - 1] <= cluster_gap * scale:
            continue  # cluster truncated at the cut; vectors not comparable
        if hi - lo == 1:
            assert a_angle(a_diag, got.vectors[:, lo], want.vectors[:, lo]) <= vec_tol
        else:
            qa = np.linalg.qr(sq[:, None] * got.vectors[:, lo:hi])[0]
            qb = np.linalg.qr(sq[:, None] * want.vectors[:, lo:hi])[0]
            sv = np.linalg.svd(qa.T @ qb, compute_uv=False)
            assert np.arccos(np.clip(sv.min(), -1.0, 1.0)) <= vec_tol


class TestHandCases:
    def test_two_mutual_neighbors_eigenvalues(self):
        # W = [[w,-w],[-w,w]], A = diag(w,w): Wphi = lam*A*phi gives
        # lam=0 (constant) and lam=2 (alternating), for any kernel w.
        w, a = two_point_pair(0.7)
        for method in ("dense", "lanczos"):
            basis = spectral.solve_generalized(w, a, 2, method=method)
            assert np.allclose(basis.values, [0.0, 2.0], atol=1e-12)
            phi1 = basis.vectors[:, 0]
            assert abs(phi1[0] - phi1[1]) <= 1e-10

    def test_oracle_same_case(self):
        w, a = two_point_pair(0.7)
        basis = spectral.dense_oracle(w, a)
        assert np.allclose(basis.values, [0.0, 2.0], atol=1e-12)

    def test_oracle_identity_problem(self):
        w, a = make_pair(np.diag([1.0, 1.0, 1.0]), mode="paper")
        basis = spectral.dense_oracle(w, a)
        assert np.allclose(basis.values, 1.0, atol=1e-14)

    def test_oracle_path_graph_spectrum(self):
        graph = manifold.knn_graph(np.arange(10.0)[:, None], k=2)
        w = manifold.symmetrize(manifold.weight_tilde(graph, 1.0), 1.0, "balanced")
        basis = spectral.dense_oracle(w, manifold.mass_matrix(w))
        assert np.all(np.diff(basis.values) >= -1e-12)
        assert basis.values.min() >= -1e-10


class TestSolverOracleAgreement:
    def test_random_instances_both_modes(self, rng):
        for trial in range(12):
            n = int(rng.integers(20, 101))
            k = int(rng.integers(3, 11))
            mode = ("balanced", "paper")[trial % 2]
            graph, w, a = random_connected_operator(rng, n, k, mode)
            p = min(12, n - 1)
            got = spectral.solve_generalized(w, a, p, method="lanczos", seed=trial)
            want = spectral.dense_oracle(w, a)
            assert_bases_agree(a.diag, got, want)

    def test_dense_path_agrees_too(self, rng):
        for trial in range(6):
            n = int(rng.integers(10, 60))
            graph, w, a = random_connected_operator(rng, n, 4, "balanced")
            got = spectral.solve_generalized(w, a, min(8, n - 1), method="dense")
            want = spectral.dense_oracle(w, a)
            assert_bases_agree(a.diag, got, want)


class TestContracts:
    def test_residuals_and_a_orthonormality(self, rng):
        for trial in range(8):
            n = int(rng.integers(15, 80))
            mode = ("balanced", "paper")[trial % 2]
            _, w, a = random_operator(rng, n, 5, mode)
            p = min(10, n - 1)
            basis = spectral.solve_generalized(w, a, p, method="lanczos", seed=trial)
            assert spectral.residuals(w, a, basis).max() <= 1e-8
            gram = basis.vectors.T @ (a.diag[:, None] * basis.vectors)
            assert np.max(np.abs(gram - np.eye(p))) < 1e-8

    def test_balanced_mode_null_space(self, rng):
        for trial in range(6):
            n = int(rng.integers(15, 60))
            _, w, a = random_connected_operator(rng, n, 4, "balanced")
            basis = spectral.solve_generalized(w, a, min(6, n - 1), method="lanczos", seed=trial)
            assert basis.values.min() >= -1e-10
            assert basis.values[0] < 1e-10
            phi1 = basis.vectors[:, 0]
            phi1 = phi1 / np.abs(phi1).max()
            assert phi1.max() - phi1.min() < 1e-8

    def test_paper_mode_no_nonnegativity_assumed(self, rng):
        # only solver/oracle agreement is asserted for the paper variant
        _, w, a = random_connected_operator(rng, 40, 4, "paper")
        got = spectral.solve_generalized(w, a, 8, method="lanczos")
        want = spectral.dense_oracle(w, a)
        assert_bases_agree(a.diag, got, want)

    def test_sign_convention(self, rng):
        _, w, a = random_connected_operator(rng, 30, 4, "balanced")
        for basis in (
            spectral.solve_generalized(w, a, 5, method="dense"),
            spectral.solve_generalized(w, a, 5, method="lanczos"),
            spectral.dense_oracle(w, a),
        ):
            for j in range(basis.count):
                col = basis.vectors[:, j]
                assert col[np.argmax(np.abs(col))] > 0

    def test_deterministic(self, rng):
        _, w, a = random_connected_operator(rng, 50, 5, "balanced")
        b1 = spectral.solve_generalized(w, a, 6, method="lanczos", seed=3)
        b2 = spectral.solve_generalized(w, a, 6, method="lanczos", seed=3)
        assert np.array_equal(b1.values, b2.values)
        assert np.array_equal(b1.vectors, b2.vectors)


class TestDegenerate:
    def test_disconnected_pairs_share_zero_eigenvalue(self):
        pts = np.array([[0.0, 0.0], [0.0, 0.1], [10.0, 0.0], [10.0, 0.12]])
        graph = manifold.knn_graph(pts, k=1)
        w = manifold.symmetrize(manifold.weight_tilde(graph, 1.0), 1.0, "balanced")
        a = manifold.mass_matrix(w)
        want = spectral.dense_oracle(w, a)
        got = spectral.solve_generalized(w, a, 2, method="lanczos")
        assert np.allclose(want.values[:2], [0.0, 0.0], atol=1e-12)
        assert np.allclose(got.values, [0.0, 0.0], atol=1e-10)
        # compare the 2-dim null spaces, not individual vectors
        assert_bases_agree(a.diag, got, want)


class TestGuards:
    def test_p_out_of_range(self):
        w, a = two_point_pair()
        for p in (0, 3):
            with pytest.raises(ParameterError):
                spectral.solve_generalized(w, a, p)

    def test_unknown_method(self):
        w, a = two_point_pair()
        with pytest.raises(ParameterError):
            spectral.solve_generalized(w, a, 1, method="magic")

    def test_oracle_size_guard(self):
        n = 2001
        w = manifold.WeightMatrix(sparse.identity(n, format="csr"), 1.0, "paper")
        a = manifold.MassMatrix(np.ones(n))
        with pytest.raises(SizeError):
            spectral.dense_oracle(w, a)

    def test_convergence_error_reports_residual(self, rng):
        _, w, a = random_connected_operator(rng, 60, 4, "balanced")
        with pytest.raises(ConvergenceError):
            spectral.solve_generalized(w, a, 5, method="lanczos", max_steps=6)

    def test_dimension_mismatch(self):
        w, _ = two_point_pair()
        a = manifold.MassMatrix(np.ones(3))
        with pytest.raises(ParameterError):
            spectral.solve_generalized(w, a, 1)


def test_dump_eigenbasis(tmp_path):
    w, a = two_point_pair()
    basis = spectral.dense_oracle(w, a)
    path = tmp_path / "basis.csv"
    spectral.dump_eigenbasis(basis, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,eigenvalue,phi_1,phi_2"
    assert len(lines) == 3
