from fractions import Fraction

import numpy as np
import pytest
import sympy

from krein_spectra import (
    Case,
    ExtensionParams,
    Subspace,
    classify_case,
    kernel_k,
    q_perp_matrix,
    reconstruction_error,
    sufficient_checks,
    surviving_eigenspace,
    survey,
    theta_from_b,
    trace_range,
)
from krein_spectra.models import build_rank_one, build_seba
from krein_spectra.models.interval import xi_hat, xi_hat_perp
from krein_spectra.models.star import parallel_basis


def random_hermitian(rng, m):
    X = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return X + X.conj().T


def same_span(sub, vectors):
    other = Subspace.span(np.atleast_2d(vectors).T if np.ndim(vectors) == 1 else vectors)
    return sub.dim == other.dim and sub.contains(other, 1e-10) and other.contains(sub, 1e-10)


@pytest.fixture(scope="module")
def rank_one():
    # level 1 has a vanishing trace, level 2 is degenerate
    return build_rank_one(
        [-1.0, -2.5, -4.0, -7.0],
        [[0.8], [0.0], [0.3, -0.6], [1.1]],
        exact_zero=[[False], [True], [False, False], [False]],
    )


class TestTraceRange:
    @pytest.mark.parametrize("n", range(8))
    def test_interval(self, interval, n):
        assert same_span(trace_range(interval, n), xi_hat(n))

    def test_seba_nodal_point(self):
        m = build_seba(1, sympy.root(2, 4), (Fraction(1, 2), sympy.sqrt(2) / 2), 200)
        even = [i for i, p in enumerate(m.meta["pairs"]) if p[0][0] % 2 == 0]
        assert even
        for i in even:
            assert trace_range(m, i).dim == 0
            assert trace_range(m, i, exact=False).dim == 0

    @pytest.mark.parametrize("n", range(4))
    def test_star_parallel(self, star3, n):
        tr = trace_range(star3, n)
        assert tr.dim == 3
        assert same_span(tr, parallel_basis(3, n))


class TestKernelK:
    def test_pi_zero_full_eigenspace(self, star3):
        assert len(kernel_k(star3, 2, Subspace.zero(6))) == 3

    def test_interval_pi_full_trivial(self, interval):
        for n in range(10):
            assert kernel_k(interval, n, Subspace.full(2)) == []

    def test_seba_degenerate_combination(self):
        # on the square, (1,2) and (2,1) share a level; y is off both nodal sets
        m = build_seba(1, 1, (Fraction(1, 3), Fraction(1, 5)), 100)
        n = next(i for i, p in enumerate(m.meta["pairs"]) if p == ((1, 2), (2, 1)))
        ker = kernel_k(m, n, Subspace.full(1))
        assert len(ker) == 1
        vals = m.trace_data[n][0]
        assert np.all(np.abs(vals) > 0.1)
        assert abs(vals @ ker[0]) <= 1e-12

    def test_rank_one_degenerate(self, rank_one):
        ker = kernel_k(rank_one, 2, Subspace.full(1))
        assert len(ker) == 1
        assert abs(rank_one.trace_data[2][0] @ ker[0]) <= 1e-14


class TestClassify:
    def test_full_trace_range(self):
        assert classify_case(Subspace.full(1), Subspace.full(1)) == Case.CASE1

    def test_zero_trace_range(self):
        assert classify_case(Subspace.full(1), Subspace.zero(1)) == Case.TRACE_RANGE_ZERO

    def test_pi_zero(self):
        assert classify_case(Subspace.zero(2), Subspace.span([[1, 1]])) == Case.PI_ZERO

    def test_w_perp(self):
        for n in range(4):
            w = Subspace.span([xi_hat_perp(n)])
            assert classify_case(w, Subspace.span([xi_hat(n)])) == Case.CASE2


class TestSurviving:
    def test_rank_one_simple_levels(self, rank_one):
        ext = ExtensionParams.full([[0.7]])
        got = [surviving_eigenspace(rank_one, n, ext).preserved for n in range(4)]
        assert got == [False, True, True, False]

    def test_pi_zero_keeps_everything(self, star3):
        for n in range(4):
            r = surviving_eigenspace(star3, n, ExtensionParams.zero(6))
            assert r.case_tag == Case.PI_ZERO and r.dim_surviving == 3

    def test_case1_independent_of_theta(self, interval):
        rng = np.random.default_rng(0)
        w = Subspace.span([[1.0, 0.3 + 0.2j]])
        ref = None
        for _ in range(100):
            ext = ExtensionParams.from_subspace(w, [[rng.normal() * 10]])
            r = surviving_eigenspace(interval, 3, ext)
            assert r.case_tag == Case.CASE1
            sig = (r.preserved, r.dim_surviving, [tuple(np.round(v.psi, 12)) for v in r.eigenvectors])
            ref = sig if ref is None else ref
            assert sig == ref

    def test_case1_independent_of_theta_star(self, star3):
        rng = np.random.default_rng(4)
        # R(Pi) spans a parallel direction and a mixed one; no perp direction inside
        v1 = parallel_basis(3, 0)[:, 0]
        v2 = rng.normal(size=6)
        pi = Subspace.span(np.column_stack([v1, v2]))
        verdicts = set()
        for _ in range(100):
            ext = ExtensionParams.from_subspace(pi, random_hermitian(rng, 2))
            r = surviving_eigenspace(star3, 0, ext)
            assert r.case_tag == Case.CASE1
            verdicts.add((r.preserved, r.dim_surviving))
        assert verdicts == {(True, 1)}

    def test_case2_residuals(self, star3):
        rng = np.random.default_rng(7)
        for _ in range(30):
            B = random_hermitian(rng, 6)
            ext = theta_from_b(star3.meta["p0"], Subspace.full(6), B)
            for n in range(3):
                r = surviving_eigenspace(star3, n, ext)
                assert r.residual <= 1e-9
                assert r.eigenvectors or not r.preserved

    def test_case1_eigenvectors_killed_by_pi(self, star3):
        pi = Subspace.span(np.eye(6)[:, :3])
        ext = ExtensionParams.from_subspace(pi, np.eye(3))
        r = surviving_eigenspace(star3, 1, ext)
        for v in r.eigenvectors:
            assert not v.has_charge
            assert np.linalg.norm(pi.basis.conj().T @ star3.trace_data[1] @ v.psi) <= 1e-9

    def test_trace_range_zero_with_charge(self, rank_one):
        Qp, _ = q_perp_matrix(rank_one, 1)
        ext = ExtensionParams.full(-Qp)
        r = surviving_eigenspace(rank_one, 1, ext)
        assert r.case_tag == Case.TRACE_RANGE_ZERO
        assert r.dim_surviving == 2
        assert any(v.has_charge for v in r.eigenvectors)
        generic = surviving_eigenspace(rank_one, 1, ExtensionParams.full([[3.0]]))
        assert generic.dim_surviving == 1

    def test_reconstruction(self, interval, star3):
        ext = theta_from_b(interval.meta["p0"], Subspace.full(2), [[1.0, 0.5], [0.5, -2.0]])
        r = surviving_eigenspace(interval, 1, ext)
        assert r.preserved and r.eigenvectors[0].has_charge
        assert reconstruction_error(interval, ext, r.eigenvectors[0]) <= 1e-6
        B = np.zeros((6, 6))
        ext = theta_from_b(star3.meta["p0"], Subspace.full(6), B)
        for v in surviving_eigenspace(star3, 0, ext).eigenvectors:
            assert reconstruction_error(star3, ext, v) <= 1e-6

    def test_reconstruction_detects_non_eigenvector(self, interval):
        from krein_spectra.preservation import PerturbedVector

        ext = theta_from_b(interval.meta["p0"], Subspace.full(2), [[1.0, 0.2], [0.2, 3.0]])
        fake = PerturbedVector(0, np.array([1.0 + 0j]), np.zeros(2, complex))
        assert reconstruction_error(interval, ext, fake) > 1e-3

    def test_tolerance_sensitivity_flag(self, interval):
        flagged = []
        for delta in np.logspace(-12, -6, 25):
            ext = theta_from_b(interval.meta["p0"], Subspace.full(2), np.diag([delta, 0.0]))
            r = surviving_eigenspace(interval, 0, ext)
            if r.tolerance_sensitive:
                flagged.append((delta, r.diagnostics["min_singular_value"]))
        assert flagged
        for _, s in flagged:
            assert 1e-11 <= s <= 1e-7

    def test_survey_order_and_threads(self, star3):
        rng = np.random.default_rng(1)
        ext = theta_from_b(star3.meta["p0"], Subspace.full(6), random_hermitian(rng, 6))
        a = survey(star3, ext, [5, 0, 3, 1], threads=1)
        b = survey(star3, ext, [5, 0, 3, 1], threads=4)
        assert [r.level for r in a] == [0, 1, 3, 5]
        assert [(r.level, r.preserved) for r in a] == [(r.level, r.preserved) for r in b]


class TestSufficient:
    def test_star_shortcut(self, star3):
        rng = np.random.default_rng(2)
        for n in range(4):
            v = parallel_basis(3, n)[:, 1]
            comp = Subspace.span([v]).complement()
            X = comp.basis @ (rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3)))
            pi = Subspace.span(X)
            ext = ExtensionParams.from_subspace(pi, random_hermitian(rng, pi.dim))
            assert "trace_range_meets_pi_complement" in sufficient_checks(star3, n, ext)
            assert surviving_eigenspace(star3, n, ext).preserved

    def test_full_pi_no_shortcut(self, interval):
        ext = ExtensionParams.full(np.eye(2))
        assert sufficient_checks(interval, 0, ext) == []

    def test_simple_level_vanishing_trace(self, interval):
        w = Subspace.span([xi_hat_perp(2)])
        ext = ExtensionParams.from_subspace(w, [[1.3]])
        assert "simple_level_pi_trace_vanishes" in sufficient_checks(interval, 2, ext)
        assert surviving_eigenspace(interval, 2, ext).preserved

    def test_never_contradicts(self, star3, interval):
        rng = np.random.default_rng(9)
        for model in (star3, interval):
            m = model.boundary_dim
            for _ in range(40):
                k = int(rng.integers(0, m + 1))
                pi = Subspace.span(rng.normal(size=(m, k)), dim=m) if k else Subspace.zero(m)
                if rng.random() < 0.5 and pi.dim < m:
                    # force a trace direction into the complement of R(Pi)
                    v = trace_range(model, 0).basis[:, 0]
                    comp = Subspace.span([v]).complement()
                    pi = Subspace.span(comp.basis @ rng.normal(size=(m - 1, min(k, m - 1))), dim=m)
                ext = ExtensionParams.from_subspace(pi, random_hermitian(rng, pi.dim) if pi.dim else np.zeros((0, 0)))
                for n in range(3):
                    if sufficient_checks(model, n, ext):
                        assert surviving_eigenspace(model, n, ext).preserved
