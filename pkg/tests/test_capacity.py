"""Capacity solvers: closed form, lattice search, gradient ascent."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asymcap.capacity import (
    AlphabetLimitError,
    CapacityResult,
    SolverOptions,
    capacity_closed_form_bsc,
    capacity_gap,
    capacity_grid,
    capacity_optimize,
    input_mutual_information,
    mutual_information_gradient,
    simplex_project,
    sweep_capacity_surface,
)
from asymcap.info import (
    DimensionMismatch,
    DomainError,
    Pmf,
    TransitionMatrix,
    binary_entropy,
    bsc,
)

# Frozen reference values (high-precision evaluations rounded to float64).
CAP_01_01 = 0.3199229542717202      # 1 - H(0.18)
CAP_01_02 = 0.1732536275073821      # 1 - H(0.26)
CAP_005_005 = 0.5470574518127168    # 1 - H(0.095)
CAP_BSC_011 = 0.500084041835472     # 1 - H(0.11), classical capacity
GAP_01_01 = 0.21108145213899862     # H(0.18) - H(0.1)
CAP_025_025 = 0.045565997075035035  # 1 - H(0.375)

TOL = 1e-12


def _random_stochastic(rng, rows, cols, floor=0.02):
    m = rng.random((rows, cols)) + floor
    return TransitionMatrix(m / m.sum(axis=1, keepdims=True))


class TestClosedForm:
    def test_noiseless(self):
        r = capacity_closed_form_bsc(0.0, 0.0)
        assert r.capacity == 1.0
        np.testing.assert_array_equal(r.argmax_px, [0.5, 0.5])
        assert r.solver == "closed_form"

    @pytest.mark.parametrize("p1", [0.0, 0.2, 0.37, 0.5])
    def test_half_perturbation_erases_everything(self, p1):
        assert capacity_closed_form_bsc(p1, 0.5).capacity == pytest.approx(0.0, abs=TOL)

    def test_frozen_values(self):
        assert capacity_closed_form_bsc(0.1, 0.1).capacity == pytest.approx(CAP_01_01, abs=TOL)
        assert capacity_closed_form_bsc(0.1, 0.2).capacity == pytest.approx(CAP_01_02, abs=TOL)
        assert capacity_closed_form_bsc(0.05, 0.05).capacity == pytest.approx(CAP_005_005, abs=TOL)

    def test_no_perturbation_reduces_to_channel_capacity(self):
        assert capacity_closed_form_bsc(0.11, 0.0).capacity == pytest.approx(CAP_BSC_011, abs=TOL)

    @pytest.mark.parametrize("bad", [(-0.1, 0.2), (0.2, 1.3)])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            capacity_closed_form_bsc(*bad)

    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
    )
    @settings(max_examples=60)
    def test_flip_symmetry(self, p1, p2):
        c = capacity_closed_form_bsc(p1, p2).capacity
        assert capacity_closed_form_bsc(1 - p1, p2).capacity == pytest.approx(c, abs=1e-12)
        assert capacity_closed_form_bsc(p1, 1 - p2).capacity == pytest.approx(c, abs=1e-12)

    def test_strict_dominance_by_unperturbed_capacity(self):
        for p1 in (0.05, 0.2, 0.45):
            for p2 in (0.05, 0.2, 0.45):
                c = capacity_closed_form_bsc(p1, p2).capacity
                assert c < 1 - binary_entropy(p1)
        # equality when the perturbation vanishes
        assert capacity_closed_form_bsc(0.2, 0.0).capacity == pytest.approx(
            1 - binary_entropy(0.2), abs=TOL
        )


class TestGrid:
    def test_bsc_matches_closed_form(self):
        r = capacity_grid(bsc(0.1), bsc(0.1), 1e-3)
        assert abs(r.capacity - CAP_01_01) < 1e-5
        assert np.abs(r.argmax_px - 0.5).max() < 1e-3
        assert r.solver == "grid"
        assert r.residual == pytest.approx(1e-3)

    def test_identity_perturbation_gives_channel_capacity(self):
        r = capacity_grid(bsc(0.11), TransitionMatrix.identity(2), 1e-3)
        assert abs(r.capacity - CAP_BSC_011) < 1e-5

    def test_useless_channel_is_flat_zero(self):
        useless = TransitionMatrix([[0.6, 0.4], [0.6, 0.4]])
        r = capacity_grid(useless, TransitionMatrix.identity(2), 0.05)
        assert abs(r.capacity) < 1e-12

    def test_exact_ties_break_to_first_lattice_point(self):
        ident = TransitionMatrix.identity(2)
        r = capacity_grid(ident, ident, resolution=1.0)
        # both lattice points score exactly 0 bits; the first one wins
        assert r.capacity == 0.0
        np.testing.assert_array_equal(r.argmax_px, [0.0, 1.0])
        assert r.iterations == 2

    def test_alphabet_limit(self):
        rng = np.random.default_rng(0)
        with pytest.raises(AlphabetLimitError):
            capacity_grid(_random_stochastic(rng, 5, 2), _random_stochastic(rng, 5, 2), 0.1)

    def test_lattice_size_guard(self):
        rng = np.random.default_rng(0)
        with pytest.raises(DomainError):
            capacity_grid(_random_stochastic(rng, 4, 2), _random_stochastic(rng, 4, 2), 1e-3)

    def test_iterations_counts_lattice_points(self):
        r = capacity_grid(bsc(0.1), bsc(0.2), 0.01)
        assert r.iterations == 101


class TestOptimize:
    def test_bsc_matches_closed_form(self):
        r = capacity_optimize(bsc(0.1), bsc(0.2))
        assert abs(r.capacity - CAP_01_02) < 1e-6
        assert r.solver == "gradient"

    def test_flat_objective_returns_uniform(self):
        # at half perturbation every input law scores zero; the uniform
        # start must win the tie so the maximizer is pinned
        r = capacity_optimize(bsc(0.3), bsc(0.5))
        assert r.capacity == pytest.approx(0.0, abs=TOL)
        np.testing.assert_array_equal(r.argmax_px, [0.5, 0.5])

    def test_identity_perturbation_matches_grid(self):
        pyx = bsc(0.11)
        ident = TransitionMatrix.identity(2)
        r = capacity_optimize(pyx, ident)
        g = capacity_grid(pyx, ident, 1e-3)
        assert abs(r.capacity - g.capacity) < 2e-3
        assert abs(r.capacity - CAP_BSC_011) < 1e-6

    @pytest.mark.parametrize("seed", [101, 202, 303])
    def test_ternary_agrees_with_grid(self, seed):
        rng = np.random.default_rng(seed)
        pyx = _random_stochastic(rng, 3, 2)
        pux = _random_stochastic(rng, 3, 3)
        r = capacity_optimize(pyx, pux)
        g = capacity_grid(pyx, pux, 1e-3)
        assert abs(r.capacity - g.capacity) < 2e-3

    def test_non_convergence_reported_not_raised(self):
        rng = np.random.default_rng(77)
        pyx = _random_stochastic(rng, 3, 3, floor=0.05)
        pux = _random_stochastic(rng, 3, 3, floor=0.05)
        opts = SolverOptions(max_iterations=2, restarts=1)
        r = capacity_optimize(pyx, pux, opts)
        assert r.iterations == 2
        assert r.residual > opts.convergence_tol

    def test_fixed_step_rule(self):
        r = capacity_optimize(bsc(0.1), bsc(0.2), SolverOptions(step_size_rule="fixed"))
        assert abs(r.capacity - CAP_01_02) < 1e-9

    def test_deterministic(self):
        rng = np.random.default_rng(55)
        pyx = _random_stochastic(rng, 3, 3)
        pux = _random_stochastic(rng, 3, 2)
        a = capacity_optimize(pyx, pux)
        b = capacity_optimize(pyx, pux)
        assert a.capacity == b.capacity
        np.testing.assert_array_equal(a.argmax_px, b.argmax_px)

    def test_options_validation(self):
        with pytest.raises(DomainError):
            SolverOptions(restarts=0)
        with pytest.raises(DomainError):
            SolverOptions(grid_resolution=0.0)
        with pytest.raises(DomainError):
            SolverOptions(convergence_tol=-1.0)
        with pytest.raises(DomainError):
            SolverOptions(step_size_rule="newton")

    def test_input_size_mismatch(self):
        with pytest.raises(DimensionMismatch):
            capacity_optimize(bsc(0.1), TransitionMatrix.identity(3))


class TestGradient:
    @pytest.mark.parametrize("seed", [3, 14, 15])
    def test_matches_central_differences(self, seed):
        rng = np.random.default_rng(seed)
        nx = int(rng.integers(2, 5))
        pyx = _random_stochastic(rng, nx, int(rng.integers(2, 5)))
        pux = _random_stochastic(rng, nx, int(rng.integers(2, 5)))
        w = rng.random(nx) + 0.1
        p = w / w.sum()
        g = mutual_information_gradient(p, pyx, pux)
        h = 1e-6
        fd = np.zeros(nx)
        for i in range(nx):
            e = np.zeros(nx)
            e[i] = h
            fd[i] = (
                input_mutual_information(p + e, pyx, pux)
                - input_mutual_information(p - e, pyx, pux)
            ) / (2 * h)
        assert np.abs(g - fd).max() / max(np.abs(fd).max(), 1e-9) < 1e-4

    def test_symmetric_instance_has_symmetric_gradient(self):
        g = mutual_information_gradient(np.array([0.5, 0.5]), bsc(0.1), bsc(0.2))
        assert g[0] == pytest.approx(g[1], abs=1e-12)

    def test_mi_at_uniform_equals_closed_form(self):
        val = input_mutual_information(np.array([0.5, 0.5]), bsc(0.1), bsc(0.1))
        assert val == pytest.approx(CAP_01_01, abs=TOL)


class TestSimplexProject:
    def test_known_points(self):
        np.testing.assert_allclose(simplex_project(np.array([2.0, 0.0])), [1.0, 0.0])
        np.testing.assert_allclose(simplex_project(np.array([0.6, 0.6])), [0.5, 0.5])

    @given(st.lists(st.floats(min_value=-5, max_value=5), min_size=1, max_size=6))
    @settings(max_examples=80)
    def test_output_on_simplex(self, vals):
        p = simplex_project(np.array(vals))
        assert np.all(p >= 0.0)
        assert p.sum() == pytest.approx(1.0, abs=1e-9)

    def test_fixed_point_on_simplex(self):
        p = np.array([0.2, 0.3, 0.5])
        np.testing.assert_allclose(simplex_project(p), p, atol=1e-12)


class TestGap:
    def test_identity_perturbation_no_loss(self):
        assert capacity_gap(Pmf.uniform(2), bsc(0.1), TransitionMatrix.identity(2)) == 0.0

    def test_frozen_value(self):
        g = capacity_gap(Pmf.uniform(2), bsc(0.1), bsc(0.1))
        assert g == pytest.approx(GAP_01_01, abs=TOL)

    def test_half_perturbation_loses_everything(self):
        g = capacity_gap(Pmf.uniform(2), bsc(0.2), bsc(0.5))
        assert g == pytest.approx(1 - binary_entropy(0.2), abs=TOL)

    def test_permutation_perturbation_within_clamp(self):
        flip = TransitionMatrix([[0.0, 1.0], [1.0, 0.0]])
        assert abs(capacity_gap(Pmf.uniform(2), bsc(0.1), flip)) < 1e-12

    @pytest.mark.parametrize("seed", [1, 2, 3, 4])
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        nx = int(rng.integers(2, 5))
        w = rng.random(nx) + 0.05
        px = Pmf(w / w.sum())
        pyx = _random_stochastic(rng, nx, int(rng.integers(2, 4)))
        pux = _random_stochastic(rng, nx, int(rng.integers(2, 4)))
        assert capacity_gap(px, pyx, pux) >= 0.0

    def test_alphabet_mismatch(self):
        with pytest.raises(DimensionMismatch):
            capacity_gap(Pmf.uniform(3), bsc(0.1), bsc(0.1))


class TestSweepSurface:
    def test_row_major_order_and_values(self):
        rows = sweep_capacity_surface([0.0, 0.1], [0.0, 0.2])
        assert [(r[0], r[1]) for r in rows] == [(0.0, 0.0), (0.0, 0.2), (0.1, 0.0), (0.1, 0.2)]
        for p1, p2, cap, gap in rows:
            q = p1 + p2 - 2 * p1 * p2
            assert cap == pytest.approx(1 - binary_entropy(q), abs=TOL)
            assert gap == pytest.approx(binary_entropy(q) - binary_entropy(p1), abs=TOL)

    def test_no_perturbation_column_has_zero_gap(self):
        rows = sweep_capacity_surface([0.0, 0.1, 0.3], [0.0])
        assert all(r[3] == 0.0 for r in rows)

    def test_half_crossover_row_has_zero_capacity(self):
        rows = sweep_capacity_surface([0.5], [0.0, 0.1, 0.4])
        assert all(abs(r[2]) < TOL for r in rows)

    def test_symmetry_in_arguments(self):
        a = {(r[0], r[1]): r[2] for r in sweep_capacity_surface([0.1, 0.3], [0.1, 0.3])}
        for (p1, p2), c in a.items():
            assert c == pytest.approx(a[(p2, p1)], abs=1e-12)

    def test_quarter_point(self):
        (row,) = sweep_capacity_surface([0.25], [0.25])
        assert row[2] == pytest.approx(CAP_025_025, abs=TOL)

    def test_rejects_values_beyond_half(self):
        with pytest.raises(DomainError):
            sweep_capacity_surface([0.6], [0.1])

    def test_monotone_in_both_noises(self):
        grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
        caps = {(r[0], r[1]): r[2] for r in sweep_capacity_surface(grid, grid)}
        for i, p1 in enumerate(grid[:-1]):
            for p2 in grid:
                assert caps[(grid[i + 1], p2)] <= caps[(p1, p2)] + 1e-12
                assert caps[(p2, grid[i + 1])] <= caps[(p2, p1)] + 1e-12


class TestCapacityResult:
    def test_argmax_read_only(self):
        r = capacity_closed_form_bsc(0.1, 0.1)
        with pytest.raises(ValueError):
            r.argmax_px[0] = 0.9
