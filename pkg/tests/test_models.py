import math
import warnings
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
import sympy

from krein_spectra import (
    ExactnessError,
    ExtensionParams,
    ModelValidationError,
    Subspace,
    TruncationError,
    green_apply,
    q_matrix,
    q_perp_matrix,
    surviving_eigenspace,
    theta_from_b,
)
from krein_spectra.models import (
    boundary_conditions_render,
    build_interval,
    build_rank_one,
    build_seba,
    build_star_graph,
    eigenfunction_eval,
    rationality_family,
    seba_common_spectrum_exact,
)
from krein_spectra.models.interval import preserved_pi_full, xi_hat, xi_hat_perp
from krein_spectra.models.seba import NearDegeneracyWarning, all_partners_vanish
from krein_spectra.models.star import b_perp, parallel_basis, perp_basis
from krein_spectra.spectral_core import EigenCoordVector

from oracles import fd

B4 = sympy.root(2, 4)


class TestInterval:
    @pytest.mark.parametrize("n", [0, 1, 5, 10])
    def test_trace_data(self, interval, n):
        k = n + 1
        expected = math.sqrt(2 / math.pi) * k * np.array([1.0, (-1) ** (k - 1)])
        assert np.allclose(interval.trace_data[n][:, 0], expected, rtol=1e-14)
        assert interval.levels[n] == pytest.approx(-(k**2))

    def test_trace_matches_derivatives(self, interval):
        # tau psi = (psi'(0), -psi'(a)) by finite differences of the eigenfunction
        h = 1e-6
        for n in range(4):
            f = lambda x: interval.eigenfunctions(n, np.array([x]))[0, 0]
            d0 = (f(h) - f(0)) / h
            da = (f(math.pi) - f(math.pi - h)) / h
            assert np.allclose(interval.trace_data[n][:, 0], [d0, -da], rtol=1e-4)

    def test_rejects_bad_length(self):
        with pytest.raises(ModelValidationError):
            build_interval(-1.0)

    def test_preserved_pi_full_exact(self):
        b = [[Fraction(1, 3), Fraction(2, 7)], [Fraction(2, 7), Fraction(-1, 3)]]
        # xi_hat_perp alternates between (1, -1) and (1, 1)
        assert preserved_pi_full(b, 0) == Fraction(-4, 7)
        assert preserved_pi_full(b, 1) == Fraction(4, 7)


class TestSebaGrouping:
    def test_square_multiplicities(self):
        m = build_seba(1, 1, (Fraction(1, 3), Fraction(1, 5)), 600)
        count = Counter()
        for p in range(1, 10):
            for q in range(1, 10):
                if math.pi**2 * (p * p + q * q) <= 600:
                    count[p * p + q * q] += 1
        got = {round(-lv / math.pi**2): d for lv, d in zip(m.levels, m.mult)}
        assert got == dict(count)

    def test_rational_ratio(self):
        # a^2/b^2 = 1/4: (2, 1) and (1, 2) coincide with... m^2 + n^2/4
        m = build_seba(1, 2, (Fraction(1, 3), Fraction(1, 5)), 400)
        brute = Counter()
        for p in range(1, 10):
            for q in range(1, 20):
                if math.pi**2 * (p * p + q * q / 4) <= 400:
                    brute[4 * p * p + q * q] += 1
        assert sorted(m.mult.tolist()) == sorted(brute.values())

    def test_irrational_ratio_all_simple(self):
        m = build_seba(1, B4, (Fraction(1, 3), Fraction(2, 5)), 2000)
        assert m.n_levels == 175
        assert np.all(m.mult == 1)

    def test_float_sides_warn_on_near_degeneracy(self):
        with pytest.warns(NearDegeneracyWarning):
            build_seba(1.0, 1.0 + 3e-7, (0.31, 0.47), 300)

    def test_float_sides_group_within_rtol(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            m = build_seba(1.0, 1.0 + 1e-13, (0.31, 0.47), 300)
        assert m.mult[1] == 2

    def test_requires_cutoff(self):
        with pytest.raises(ModelValidationError):
            build_seba(1, 1, (0.3, 0.4), None)

    def test_point_inside(self):
        with pytest.raises(ModelValidationError):
            build_seba(1, 1, (0.0, 0.4), 100)

    def test_undecidable_rationality(self):
        x = sympy.Symbol("x")
        with pytest.raises(ExactnessError):
            build_seba(1, 1, (x, Fraction(1, 2)), 100)


class TestSebaCommonSpectrum:
    def test_square_degenerate_levels_preserved(self):
        m = build_seba(1, 1, (Fraction(1, 3), Fraction(1, 5)), 800)
        exact = seba_common_spectrum_exact(m)
        family = rationality_family(m)
        degenerate = {i for i, d in enumerate(m.mult) if d >= 2}
        assert degenerate <= exact
        # (1, 2)/(2, 1) is degenerate but contains no multiple of 3 or 5
        missed = exact - family
        lvl = next(i for i, p in enumerate(m.meta["pairs"]) if p == ((1, 2), (2, 1)))
        assert lvl in missed

    def test_family_is_subset_when_partners_vanish(self):
        m = build_seba(1, 1, (Fraction(1, 2), Fraction(1, 2)), 800)
        assert all_partners_vanish(m) <= seba_common_spectrum_exact(m)

    @pytest.mark.parametrize(
        "point, rule",
        [
            ((Fraction(1, 2), sympy.sqrt(2) / 2), lambda p, q: p % 2 == 0),
            ((Fraction(1, 3), Fraction(2, 5)), lambda p, q: p % 3 == 0 or q % 5 == 0),
            ((sympy.sqrt(2) / 2, sympy.sqrt(3) / 3), lambda p, q: False),
        ],
    )
    def test_rationality_examples(self, point, rule):
        m = build_seba(1, B4, point, 2000)
        expected = {i for i, pr in enumerate(m.meta["pairs"]) if rule(*pr[0])}
        assert seba_common_spectrum_exact(m) == expected
        assert rationality_family(m) == expected

    @pytest.mark.parametrize("point", [(Fraction(1, 2), sympy.sqrt(2) / 2), (Fraction(1, 3), Fraction(2, 5))])
    def test_engine_agrees(self, point):
        m = build_seba(1, B4, point, 2000)
        ext = ExtensionParams.full([[0.0]])
        exact = seba_common_spectrum_exact(m)
        for flag in (True, False):
            got = {i for i in range(m.n_levels) if surviving_eigenspace(m, i, ext, exact=flag).preserved}
            assert got == exact

    def test_engine_square(self):
        m = build_seba(1, 1, (Fraction(1, 3), Fraction(1, 5)), 800)
        ext = ExtensionParams.full([[1.5]])
        got = {i for i in range(m.n_levels) if surviving_eigenspace(m, i, ext).preserved}
        assert got == seba_common_spectrum_exact(m)

    def test_float_point_has_no_exact_path(self):
        m = build_seba(1, 1, (0.3, 0.4), 200)
        with pytest.raises(ExactnessError):
            seba_common_spectrum_exact(m)

    def test_green_profile_matches_fd(self):
        m = build_seba(1, B4, (Fraction(1, 3), Fraction(2, 5)), 3e5)
        a, b = 1.0, float(B4)
        z = 5.0
        n1 = n2 = 119
        x1, x2, g, node = fd.rectangle_green(a, b, m.meta["point"], z, n1, n2)
        assert node == pytest.approx(m.meta["point"], abs=1e-12)
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        pts = np.column_stack([X1.ravel(), X2.ravel()])
        vec = green_apply(m, z, np.array([1.0]), m.n_levels)
        vals, err = eigenfunction_eval(m, vec, pts)
        cell = (x1[1] - x1[0]) * (x2[1] - x2[0])
        diff = math.sqrt(np.sum(np.abs(vals.reshape(n1, n2) - g) ** 2) * cell)
        ref = math.sqrt(np.sum(np.abs(g) ** 2) * cell)
        assert err < 1e-2 * ref
        assert diff <= 1e-2 * ref


class TestStar:
    def test_single_edge_is_interval(self, interval):
        s = build_star_graph(1, math.pi)
        for lam in (-0.25, 2.0, -3.7 + 1j):
            assert np.allclose(q_matrix(s, lam)[0], q_matrix(interval, lam)[0], atol=1e-13)
        for n in range(5):
            assert np.allclose(q_perp_matrix(s, n)[0], q_perp_matrix(interval, n)[0], atol=1e-13)
            assert np.allclose(s.trace_data[n], interval.trace_data[n])

    def test_bases_orthonormal(self):
        for n in range(3):
            P = np.hstack([parallel_basis(4, n), perp_basis(4, n)])
            assert np.allclose(P.T @ P, np.eye(8))

    def test_det_b_perp_law(self, star3):
        rng = np.random.default_rng(5)
        for _ in range(20):
            X = rng.normal(size=(6, 6))
            B = X + X.T
            ext = theta_from_b(star3.meta["p0"], Subspace.full(6), B)
            for n in range(3):
                det = abs(np.linalg.det(b_perp(B, n)))
                assert surviving_eigenspace(star3, n, ext).preserved == (det <= 1e-9 * np.linalg.norm(B, 2) ** 3)

    def test_det_b_perp_singular(self, star3):
        rng = np.random.default_rng(6)
        for n in range(3):
            P = perp_basis(3, n)
            X = rng.normal(size=(6, 6))
            B = X + X.T
            u = P[:, 0]
            # make u B_perp-null: B P e1 orthogonal to every perp column
            B = B - np.outer(B @ u, u) - np.outer(u, B @ u) + (u @ B @ u) * np.outer(u, u)
            assert abs(np.linalg.det(b_perp(B, n))) < 1e-12
            ext = theta_from_b(star3.meta["p0"], Subspace.full(6), B)
            r = surviving_eigenspace(star3, n, ext)
            assert r.preserved and r.dim_surviving >= 1

    def test_partial_pi_kernel(self, star3):
        # Pi kills xi_hat on edge 0, so psi on edge 0 alone survives for any Theta
        rng = np.random.default_rng(8)
        n = 2
        v = parallel_basis(3, n)[:, 0]
        comp = Subspace.span([v]).complement()
        ext = ExtensionParams.from_subspace(comp, np.diag(rng.normal(size=5)))
        r = surviving_eigenspace(star3, n, ext)
        assert r.preserved
        x = np.linspace(0.1, 3.0, 7)
        for vec in r.eigenvectors:
            on_other = eigenfunction_eval(star3, vec, np.column_stack([np.ones_like(x), x]))[0]
            on_first = eigenfunction_eval(star3, vec, np.column_stack([np.zeros_like(x), x]))[0]
            assert np.max(np.abs(on_first)) > 0.1
            assert np.max(np.abs(on_other)) < 1e-8

    def test_bad_edge_count(self):
        with pytest.raises(ModelValidationError):
            build_star_graph(0)


class TestRankOne:
    def test_fitted_tail_bounds_data(self):
        lv = -np.arange(1, 50, dtype=float) ** 2
        m = build_rank_one(lv, [[1.0]] * 49)
        ratio = 1 / lv**2
        for N in range(1, 48):
            assert ratio[N:].sum() <= m.tail(N) + 1e-15

    def test_mismatched_rows(self):
        with pytest.raises(ModelValidationError):
            build_rank_one([-1.0, -2.0], [[1.0]])
        with pytest.raises(ModelValidationError):
            build_rank_one([-1.0], [[1.0, 2.0]], exact_zero=[[True]])


class TestRender:
    def test_dirichlet(self, interval):
        assert boundary_conditions_render(ExtensionParams.zero(2), interval) == ["Dirichlet (unperturbed)"]

    def test_neumann(self, interval):
        ext = theta_from_b(interval.meta["p0"], Subspace.full(2), np.zeros((2, 2)))
        assert boundary_conditions_render(ext, interval) == ["-phi'(0) = 0", "phi'(a) = 0"]

    def test_robin_full(self, interval):
        lines = boundary_conditions_render((Subspace.full(2), np.diag([2.0, -0.5])), interval)
        assert lines == ["2 phi(0) - phi'(0) = 0", "-0.5 phi(a) + phi'(a) = 0"]

    def test_rank_one_weighted(self, interval):
        w = Subspace.span([[1.0, 1.0]])
        lines = boundary_conditions_render((w, [[0.0]]), interval)
        assert lines[0] == "0.707107 phi(0) - 0.707107 phi(a) = 0"
        assert lines[1] == "-0.707107 phi'(0) + 0.707107 phi'(a) = 0"

    def test_single_endpoint_robin(self, interval):
        lines = boundary_conditions_render((Subspace.span([[1.0, 0.0]]), [[3.0]]), interval)
        assert lines == ["-phi(a) = 0", "3 phi(0) - phi'(0) = 0"]

    def test_round_trip_through_theta(self, interval):
        B = np.array([[1.0, 0.25], [0.25, -1.0]])
        ext = theta_from_b(interval.meta["p0"], Subspace.full(2), B)
        assert boundary_conditions_render(ext, interval) == boundary_conditions_render((Subspace.full(2), B), interval)

    def test_star_labels(self, star3):
        ext = theta_from_b(star3.meta["p0"], Subspace.full(6), np.zeros((6, 6)))
        lines = boundary_conditions_render(ext, star3)
        assert lines[0] == "-phi_1'(0) = 0"
        assert lines[5] == "phi_3'(a) = 0"

    def test_general_form(self, star3):
        pi = Subspace.span(np.eye(6)[:, :2])
        lines = boundary_conditions_render((pi, np.eye(2)), star3)
        assert len(lines) == 6
        assert "phi_2(0) = 0" in lines

    def test_unsupported_model(self, ):
        m = build_seba(1, 1, (0.3, 0.4), 100)
        with pytest.raises(ModelValidationError):
            boundary_conditions_render(ExtensionParams.full([[0.0]]), m)


class TestEvaluation:
    def test_pure_eigenfunction(self, interval):
        x = np.linspace(0, math.pi, 11)
        vec = EigenCoordVector.from_levels(interval, 10, {(3, 0): 1.0})
        vals, err = eigenfunction_eval(interval, vec, x)
        assert err == 0.0
        assert np.allclose(vals, math.sqrt(2 / math.pi) * np.sin(4 * x), atol=1e-14)

    def test_new_eigenvector_satisfies_robin(self, interval):
        from krein_spectra import new_eigenvalues
        from krein_spectra.spectral_core import eigenvector_of_new

        b = 1.0
        ext = ExtensionParams.from_subspace(Subspace.span([[1.0, 0.0]]), [[b + 1 / math.pi]])
        evs = new_eigenvalues(interval, ext, (-0.95, -0.05))
        assert evs
        vec = eigenvector_of_new(interval, evs[0])
        h = 1e-6
        vals, _ = eigenfunction_eval(interval, vec, np.array([0.0, h, math.pi - 1e-9, math.pi]))
        assert abs(vals[3]) < 1e-12 * max(1.0, abs(vals[0]))
        assert (vals[1] - vals[0]) / h == pytest.approx(b * vals[0], rel=1e-4)

    def test_dirichlet_perturbed_vector(self, interval):
        ext = theta_from_b(interval.meta["p0"], Subspace.span([[0.0, 1.0]]), [[0.0]])
        r = surviving_eigenspace(interval, 1, ext)
        for v in r.eigenvectors:
            vals, _ = eigenfunction_eval(interval, v, np.array([0.0]))
            assert abs(vals[0]) <= 1e-10

    def test_truncation_error(self):
        m = build_seba(1, B4, (Fraction(1, 3), Fraction(2, 5)), 300)
        vec = green_apply(m, 1.0, np.array([1.0]), m.n_levels)
        with pytest.raises(TruncationError):
            eigenfunction_eval(m, vec, np.array([[0.5, 0.5]]), trunc=5, tol=1e-6)
