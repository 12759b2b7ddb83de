import math

import numpy as np
import pytest

from fracplap.errors import HypothesisError, KernelAdmissibilityError
from fracplap.model import DomainSpec, Field
from fracplap.operators import (
    KERNEL_SHAPES,
    box_window_integral,
    convolve_kernel,
    discretize_kernel,
    global_mass,
    gradient_faces,
    local_l2_ball,
    p_laplacian,
    p_laplacian_power,
)


def domain_1d(L=4.0, n=64):
    return DomainSpec(half_width=L, n=n)


def test_box_kernel_height_matches_support():
    # unit mass spread over [-2 delta0, 2 delta0] gives height 1/(4 delta0)
    d = domain_1d()
    kern = discretize_kernel("box", 0.5, 0.05, d)
    x = d.axis_coords()
    inside = np.abs(x) < 1.0 - d.h / 2.0
    assert np.allclose(kern.values[inside], 0.5, rtol=1e-13)
    assert kern.values[d.n // 2] == np.max(kern.values)


@pytest.mark.parametrize("shape", KERNEL_SHAPES)
@pytest.mark.parametrize("dim,n", [(1, 64), (2, 48)])
def test_kernel_unit_integral(shape, dim, n):
    d = DomainSpec(half_width=4.0, n=n)
    kern = discretize_kernel(shape, 0.5, 1e-4, d, dim=dim)
    assert kern.dim == dim
    assert np.all(kern.values >= 0.0)
    assert math.isclose(float(np.sum(kern.values)) * d.h ** dim, 1.0,
                        rel_tol=1e-13)


def test_gaussian_kernel_floor_on_sensing_box():
    d = DomainSpec(half_width=8.0, n=128)
    kern = discretize_kernel("gaussian", 0.5, 0.1, d)
    x = d.axis_coords()
    box = np.abs(x) <= 0.5
    assert float(np.min(kern.values[box])) > 0.1


def test_kernel_floor_violation_raises():
    d = domain_1d()
    with pytest.raises(KernelAdmissibilityError):
        discretize_kernel("box", 0.5, 0.6, d)


def test_kernel_geometry_guards():
    d = domain_1d()
    with pytest.raises(KernelAdmissibilityError):
        discretize_kernel("box", 1.0, 0.05, d)       # delta0 = L/4 exactly
    with pytest.raises(KernelAdmissibilityError):
        discretize_kernel("box", -0.5, 0.05, d)
    with pytest.raises(KernelAdmissibilityError):
        discretize_kernel("box", 0.5, 0.0, d)
    with pytest.raises(KernelAdmissibilityError):
        discretize_kernel("pyramid", 0.5, 0.05, d)
    with pytest.raises(KernelAdmissibilityError):
        discretize_kernel("box", 0.5, 0.05, d, dim=3)


def test_convolution_preserves_constants():
    d = domain_1d()
    kern = discretize_kernel("triangle", 0.5, 1e-3, d)
    out = convolve_kernel(Field.constant(d, 0.7), kern)
    assert np.allclose(out.values, 0.7, rtol=1e-13)


def test_convolution_matches_direct_sum_1d():
    d = DomainSpec(half_width=2.0, n=32)
    kern = discretize_kernel("box", 0.25, 0.1, d)
    rng = np.random.default_rng(8)
    u = rng.uniform(0.0, 1.0, d.n)
    out = convolve_kernel(Field(u, d), kern)
    n = d.n
    direct = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += kern.values[(i - j + n // 2) % n] * u[j]
        direct[i] = acc * d.h
    assert np.allclose(out.values, direct, rtol=1e-10, atol=1e-13)


def test_convolution_matches_direct_sum_2d():
    d = DomainSpec(half_width=2.0, n=16)
    kern = discretize_kernel("gaussian", 0.3, 1e-6, d, dim=2)
    rng = np.random.default_rng(9)
    u = rng.uniform(0.0, 1.0, (d.n, d.n))
    out = convolve_kernel(Field(u, d), kern)
    n = d.n
    direct = np.zeros((n, n))
    for i1 in range(n):
        for i2 in range(n):
            acc = 0.0
            for j1 in range(n):
                for j2 in range(n):
                    acc += kern.values[(i1 - j1 + n // 2) % n,
                                       (i2 - j2 + n // 2) % n] * u[j1, j2]
            direct[i1, i2] = acc * d.h ** 2
    assert np.allclose(out.values, direct, rtol=1e-10, atol=1e-12)


def test_convolution_grid_guard():
    from fracplap.errors import GridMismatchError

    d = domain_1d()
    kern = discretize_kernel("box", 0.5, 0.05, d)
    other = DomainSpec(half_width=4.0, n=32)
    with pytest.raises(GridMismatchError):
        convolve_kernel(Field.constant(other, 1.0), kern)


# ---------------------------------------------------------------------------
# flux-form diffusion
# ---------------------------------------------------------------------------

def test_gradient_faces_constant_is_zero():
    d = domain_1d()
    (g,) = gradient_faces(Field.constant(d, 2.0))
    assert np.all(g == 0.0)


def test_gradient_faces_sawtooth():
    d = DomainSpec(half_width=1.0, n=16)
    f = Field(d.axis_coords().copy(), d)
    (g,) = gradient_faces(f)
    assert np.allclose(g[:-1], 1.0, rtol=1e-12)
    # the wrap face sees the full saw jump
    assert math.isclose(g[-1], 1.0 - d.n, rel_tol=1e-12)


def test_gradient_faces_linearity():
    d = domain_1d(n=32)
    rng = np.random.default_rng(12)
    u = rng.standard_normal(d.n)
    v = rng.standard_normal(d.n)
    (gu,) = gradient_faces(Field(u, d))
    (gv,) = gradient_faces(Field(v, d))
    (gs,) = gradient_faces(Field(2.0 * u - 3.0 * v, d))
    assert np.allclose(gs, 2.0 * gu - 3.0 * gv, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("p", [1.2, 1.5, 2.0])
def test_p_laplacian_of_constant_vanishes(p):
    d = domain_1d()
    out = p_laplacian(Field.constant(d, 1.3), p)
    assert np.allclose(out.values, 0.0, atol=1e-14)


def test_p2_matches_spectral_symbol():
    d = DomainSpec(half_width=4.0, n=128)
    x = d.axis_coords()
    kappa = 3
    u = np.sin(np.pi * kappa * x / d.half_width)
    out = p_laplacian(Field(u, d), 2.0, eps_reg=1.0)  # eps is inert at p = 2
    lam = -(2.0 * np.sin(np.pi * kappa / d.n) / d.h) ** 2
    assert np.allclose(out.values, lam * u, rtol=1e-11, atol=1e-11)


def test_p2_is_the_centered_stencil():
    d = domain_1d(n=32)
    rng = np.random.default_rng(2)
    u = rng.standard_normal(d.n)
    out = p_laplacian(Field(u, d), 2.0)
    stencil = (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / d.h ** 2
    assert np.allclose(out.values, stencil, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("dim,n", [(1, 64), (2, 32)])
def test_p_laplacian_conserves_mass(dim, n):
    d = DomainSpec(half_width=4.0, n=n)
    rng = np.random.default_rng(100)
    for _ in range(20):
        u = rng.uniform(0.0, 2.0, d.shape(dim))
        out = p_laplacian(Field(u, d), 1.5, eps_reg=1e-6)
        total = float(np.sum(out.values)) * d.h ** dim
        scale = float(np.sum(np.abs(out.values))) * d.h ** dim
        assert abs(total) <= 1e-12 * max(1.0, scale)


def test_p_laplacian_rejects_bad_exponent():
    d = domain_1d()
    f = Field.constant(d, 1.0)
    with pytest.raises(HypothesisError):
        p_laplacian(f, 1.0)
    with pytest.raises(HypothesisError):
        p_laplacian(f, 2.5)
    with pytest.raises(HypothesisError):
        p_laplacian(f, 1.5, eps_reg=0.0)


def test_power_form_falls_through_at_m_one():
    d = domain_1d(n=32)
    rng = np.random.default_rng(4)
    u = rng.uniform(0.1, 1.0, d.n)
    a = p_laplacian(Field(u, d), 1.5)
    b = p_laplacian_power(Field(u, d), 1.5, 1.0)
    assert np.array_equal(a.values, b.values)


def test_power_form_is_stencil_of_the_cube():
    # at p = 2 the coefficient is identically one, so the operator is
    # the plain centered Laplacian applied to u^3
    d = domain_1d(n=48)
    x = d.axis_coords()
    u = 1.0 + 0.1 * np.sin(np.pi * x / d.half_width)
    out = p_laplacian_power(Field(u, d), 2.0, 3.0)
    v = u ** 3
    stencil = (np.roll(v, -1) - 2.0 * v + np.roll(v, 1)) / d.h ** 2
    assert np.allclose(out.values, stencil, rtol=1e-12, atol=1e-12)


def test_power_form_constant_and_negatives():
    d = domain_1d()
    assert np.allclose(p_laplacian_power(Field.constant(d, 0.8), 1.5, 2.5).values,
                       0.0, atol=1e-14)
    rng = np.random.default_rng(6)
    u = rng.standard_normal(d.n)
    out = p_laplacian_power(Field(u, d), 1.5, 2.0)
    clamped = p_laplacian_power(Field(np.maximum(u, 0.0), d), 1.5, 2.0)
    assert np.allclose(out.values, clamped.values, rtol=1e-13, atol=1e-13)
    with pytest.raises(HypothesisError):
        p_laplacian_power(Field(u, d), 1.5, 0.5)


def test_power_form_conserves_mass():
    d = DomainSpec(half_width=4.0, n=32)
    rng = np.random.default_rng(7)
    u = rng.uniform(0.0, 2.0, (d.n, d.n))
    out = p_laplacian_power(Field(u, d), 1.8, 2.5)
    total = float(np.sum(out.values)) * d.h ** 2
    scale = float(np.sum(np.abs(out.values))) * d.h ** 2
    assert abs(total) <= 1e-12 * max(1.0, scale)


# ---------------------------------------------------------------------------
# integrals
# ---------------------------------------------------------------------------

def test_global_mass_values():
    d = DomainSpec(half_width=3.0, n=24)
    assert math.isclose(global_mass(Field.constant(d, 1.0)), 6.0, rel_tol=1e-14)
    assert global_mass(Field.constant(d, 0.0)) == 0.0
    d2 = DomainSpec(half_width=1.0, n=64)
    x = d2.axis_coords()
    f = Field(np.sin(np.pi * x) ** 2, d2)
    assert math.isclose(global_mass(f), 1.0, rel_tol=1e-12)


def test_global_mass_2d():
    d = DomainSpec(half_width=2.0, n=16)
    assert math.isclose(global_mass(Field.constant(d, 0.5, dim=2)),
                        0.5 * 16.0, rel_tol=1e-14)


def test_window_integral_of_constant():
    d = DomainSpec(half_width=2.0, n=32)
    out = box_window_integral(Field.constant(d, 0.7), 0.5)
    assert np.allclose(out.values, 0.7, rtol=1e-13)       # (2 delta) c = c here


def test_window_integral_matches_direct_sum():
    d = DomainSpec(half_width=2.0, n=32)
    rng = np.random.default_rng(21)
    u = rng.uniform(0.0, 1.0, d.n)
    delta = 0.5
    out = box_window_integral(Field(u, d), delta)
    x = d.axis_coords()
    w = np.where(np.abs(x) < delta - 1e-12, 1.0,
                 np.where(np.abs(x) <= delta + 1e-12, 0.5, 0.0))
    n = d.n
    direct = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += w[(i - j + n // 2) % n] * u[j]
        direct[i] = acc * d.h
    assert np.allclose(out.values, direct, rtol=1e-10, atol=1e-13)


def test_window_integral_radius_guard():
    d = DomainSpec(half_width=2.0, n=32)
    f = Field.constant(d, 1.0)
    with pytest.raises(HypothesisError):
        box_window_integral(f, 0.0)
    with pytest.raises(HypothesisError):
        box_window_integral(f, 1.5)


def test_local_l2_ball_constant_and_scaling():
    d = DomainSpec(half_width=2.0, n=32)
    out = local_l2_ball(Field.constant(d, 0.5), 0.5)
    assert np.allclose(out.values, 0.25, rtol=1e-13)      # (2 delta) c^2
    rng = np.random.default_rng(30)
    u = rng.uniform(0.0, 1.0, d.n)
    one = local_l2_ball(Field(u, d), 0.5)
    two = local_l2_ball(Field(2.0 * u, d), 0.5)
    assert np.allclose(two.values, 4.0 * one.values, rtol=1e-12)


def test_local_l2_ball_clamps_negative_input():
    d = DomainSpec(half_width=2.0, n=32)
    out = local_l2_ball(Field.constant(d, -1.0), 0.5)
    assert np.allclose(out.values, 0.0, atol=1e-15)
