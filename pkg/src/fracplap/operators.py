"""Spatial operators on the periodic grid: competition-kernel
discretization and convolution, the regularized p-Laplacian in flux
form, and windowed local integrals.

All operators work on 1D (n,) or 2D (n, n) samples of the periodic box
(-L, L)^dim.  Fluxes live on faces (between cell i and i+1 along each
axis), which makes the discrete p-Laplacian conservative: its grid sum
telescopes to zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, HypothesisError, KernelAdmissibilityError
from .model import DomainSpec, Field

KERNEL_SHAPES = ("box", "triangle", "gaussian")

# relative slack when classifying a grid coordinate as on/inside a radius
_EDGE_TOL = 1e-9


# --------------------------------------------------------------------------
# competition kernel
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelGrid:
    """Competition kernel sampled on the centered grid.

    ``values`` puts the kernel origin at index n//2 along every axis
    (the grid point x = 0).  Admissibility: nonnegative values, unit
    discrete integral, and a strict floor eta on the sensing box
    ||x||_inf <= delta0.
    """

    values: np.ndarray
    domain: DomainSpec
    shape_name: str
    delta0: float
    eta: float

    @property
    def dim(self) -> int:
        return self.values.ndim


def _centered_coords(domain: DomainSpec, dim: int):
    """Per-axis coordinates of the centered grid, origin at index n//2."""
    x = domain.axis_coords()
    if dim == 1:
        return (x,)
    return np.meshgrid(x, x, indexing="ij")


def _axis_trapezoid_weights(x: np.ndarray, radius: float) -> np.ndarray:
    """Indicator of |x| <= radius with half weight on the exact edge.

    The half-weighted edge makes the row sum of weights times h equal
    2*radius exactly whenever radius is a grid multiple, which keeps
    constant-field windowed integrals exact.
    """
    tol = _EDGE_TOL * max(1.0, radius)
    w = np.where(np.abs(x) < radius - tol, 1.0, 0.0)
    w = np.where(np.abs(np.abs(x) - radius) <= tol, 0.5, w)
    return w


def discretize_kernel(shape: str, delta0: float, eta: float,
                      domain: DomainSpec, dim: int = 1) -> KernelGrid:
    """Sample a competition kernel on the grid and normalize it.

    Shapes: ``box`` (constant on ||x||_inf <= 2 delta0), ``triangle``
    (hat in ||x||_inf of radius 2 delta0), ``gaussian`` (std delta0,
    truncated at Euclidean radius 6 delta0).  The result is rescaled to
    unit discrete integral; the sensing-box floor min J > eta is then
    checked and violations raise KernelAdmissibilityError.
    """
    if shape not in KERNEL_SHAPES:
        raise KernelAdmissibilityError(
            f"unknown kernel shape {shape!r}; expected one of {KERNEL_SHAPES}")
    if not (delta0 > 0 and math.isfinite(delta0)):
        raise KernelAdmissibilityError(f"delta0 must be positive, got {delta0}")
    if not (eta > 0 and math.isfinite(eta)):
        raise KernelAdmissibilityError(f"eta must be positive, got {eta}")
    if not delta0 < domain.half_width / 4.0:
        raise KernelAdmissibilityError(
            f"sensing radius delta0 = {delta0} must be below L/4 = "
            f"{domain.half_width / 4.0} so the support fits the box")
    if dim not in (1, 2):
        raise KernelAdmissibilityError(f"dim must be 1 or 2, got {dim}")

    x = domain.axis_coords()
    if shape == "box":
        w = _axis_trapezoid_weights(x, 2.0 * delta0)
        vals = w if dim == 1 else np.multiply.outer(w, w)
    elif shape == "triangle":
        coords = _centered_coords(domain, dim)
        rinf = np.abs(coords[0]) if dim == 1 else np.maximum(np.abs(coords[0]),
                                                             np.abs(coords[1]))
        vals = np.maximum(0.0, 1.0 - rinf / (2.0 * delta0))
    else:
        coords = _centered_coords(domain, dim)
        r2 = coords[0] ** 2 if dim == 1 else coords[0] ** 2 + coords[1] ** 2
        vals = np.exp(-r2 / (2.0 * delta0 ** 2))
        vals = np.where(r2 > (6.0 * delta0) ** 2, 0.0, vals)

    h = domain.h
    total = float(np.sum(vals)) * h ** dim
    if total <= 0:
        raise KernelAdmissibilityError(
            f"kernel {shape!r} has empty support on this grid (h = {h:.4g})")
    vals = vals / total

    # floor on the sensing box ||x||_inf <= delta0
    coords = _centered_coords(domain, dim)
    rinf = np.abs(coords[0]) if dim == 1 else np.maximum(np.abs(coords[0]),
                                                         np.abs(coords[1]))
    ball = rinf <= delta0 * (1.0 + _EDGE_TOL)
    floor = float(np.min(vals[ball]))
    if not floor > eta:
        raise KernelAdmissibilityError(
            f"kernel floor {floor:.6g} on the sensing box does not exceed "
            f"eta = {eta}; choose a smaller eta (or a larger kernel)")
    return KernelGrid(values=vals, domain=domain, shape_name=shape,
                      delta0=delta0, eta=eta)


def _check_same_grid(a_domain: DomainSpec, b_domain: DomainSpec,
                     a_shape, b_shape) -> None:
    if a_domain != b_domain or a_shape != b_shape:
        raise GridMismatchError(
            f"operands live on different grids: {a_domain} {a_shape} vs "
            f"{b_domain} {b_shape}")


def convolve_kernel(field: Field, kernel: KernelGrid) -> Field:
    """Periodic convolution (J * u)(x) = sum_y J(x - y) u(y) h^dim via FFT."""
    _check_same_grid(field.domain, kernel.domain, field.values.shape,
                     kernel.values.shape)
    n = field.domain.n
    shifted = kernel.values
    for ax in range(field.dim):
        shifted = np.roll(shifted, -(n // 2), axis=ax)
    spec = np.fft.rfftn(field.values) * np.fft.rfftn(shifted)
    out = np.fft.irfftn(spec, s=field.values.shape,
                        axes=tuple(range(field.dim)))
    out *= field.domain.h ** field.dim
    return Field(out, field.domain)


# --------------------------------------------------------------------------
# p-Laplacian in flux form
# --------------------------------------------------------------------------

def gradient_faces(field: Field):
    """Forward differences on faces: g_ax[i] = (u[i+1] - u[i]) / h.

    Returns one array per axis; the face at index i sits between cell i
    and cell i+1 (periodic wrap on the last face).
    """
    h = field.domain.h
    return tuple((np.roll(field.values, -1, axis=ax) - field.values) / h
                 for ax in range(field.dim))


def _face_gradient_norm_sq(values: np.ndarray, h: float):
    """|grad u|^2 reconstructed on the faces of each axis.

    The normal component is the face difference itself; the transverse
    component in 2D is the mean of the centered differences of the two
    cells sharing the face (equivalently the mean of the four adjacent
    one-sided differences).
    """
    dim = values.ndim
    normals = [(np.roll(values, -1, axis=ax) - values) / h for ax in range(dim)]
    if dim == 1:
        return normals, [normals[0] ** 2]
    norm_sq = []
    for ax in range(dim):
        other = 1 - ax
        centered = (np.roll(values, -1, axis=other)
                    - np.roll(values, 1, axis=other)) / (2.0 * h)
        transverse = 0.5 * (centered + np.roll(centered, -1, axis=ax))
        norm_sq.append(normals[ax] ** 2 + transverse ** 2)
    return normals, norm_sq


def face_diffusivity(values: np.ndarray, domain: DomainSpec, p: float,
                     eps_reg: float, m: float = 1.0):
    """Per-axis face coefficients of the regularized p-Laplacian.

    For m = 1 the coefficient is (|grad u|^2 + eps^2)^((p-2)/2) on each
    face.  For m != 1 the operator acts on v = u^m and the returned
    coefficient carries the chain factor m * u_face^(m-1) so that
    div(coef * grad u) linearizes div(|grad v|^(p-2) grad v); negative
    cell values are clamped to zero inside the powers only.
    """
    if not (1.0 < p <= 2.0):
        raise HypothesisError(f"p must lie in (1, 2], got {p}")
    if eps_reg < 0 or (eps_reg == 0 and p < 2.0):
        raise HypothesisError(
            f"eps_reg must be positive for p < 2, got {eps_reg}")
    h = domain.h
    if m == 1.0:
        grad_source = values
    else:
        grad_source = np.where(values > 0.0, values, 0.0) ** m
    _, norm_sq = _face_gradient_norm_sq(grad_source, h)
    coeffs = [(g2 + eps_reg ** 2) ** ((p - 2.0) / 2.0) for g2 in norm_sq]
    if m != 1.0:
        clamped = np.where(values > 0.0, values, 0.0)
        for ax in range(values.ndim):
            face_u = 0.5 * (clamped + np.roll(clamped, -1, axis=ax))
            coeffs[ax] = coeffs[ax] * (m * face_u ** (m - 1.0))
    return coeffs


def diffusion_apply(coeffs, values: np.ndarray, domain: DomainSpec) -> np.ndarray:
    """div(a grad u) for frozen face coefficients a, flux form."""
    h = domain.h
    out = np.zeros_like(values)
    for ax in range(values.ndim):
        flux = coeffs[ax] * (np.roll(values, -1, axis=ax) - values) / h
        out += (flux - np.roll(flux, 1, axis=ax)) / h
    return out


def p_laplacian(field: Field, p: float, eps_reg: float = 1e-6) -> Field:
    """Regularized p-Laplacian div((|grad u|^2 + eps^2)^((p-2)/2) grad u).

    At p = 2 the coefficient is exactly one and the operator reduces to
    the standard centered Laplacian stencil.
    """
    coeffs = face_diffusivity(field.values, field.domain, p, eps_reg)
    return Field(diffusion_apply(coeffs, field.values, field.domain), field.domain)


def p_laplacian_power(field: Field, p: float, m: float,
                      eps_reg: float = 1e-6) -> Field:
    """p-Laplacian of the power v = u^m, flux form on v.

    m = 1 falls through to ``p_laplacian`` unchanged; otherwise
    negative u is clamped to zero inside the power only (the field
    itself is never modified).
    """
    if m == 1.0:
        return p_laplacian(field, p, eps_reg)
    if m < 1.0:
        raise HypothesisError(f"porous-medium exponent must be >= 1, got {m}")
    v = np.where(field.values > 0.0, field.values, 0.0) ** m
    coeffs = face_diffusivity(v, field.domain, p, eps_reg)
    return Field(diffusion_apply(coeffs, v, field.domain), field.domain)


# --------------------------------------------------------------------------
# integrals
# --------------------------------------------------------------------------

def global_mass(field: Field) -> float:
    """Discrete integral sum(u) h^dim over the periodic box.

    numpy's pairwise reduction is used: a fixed, deterministic
    summation order (and more accurate than a running left fold).
    """
    return float(np.sum(field.values)) * field.domain.h ** field.dim


def box_window_integral(field: Field, delta: float) -> Field:
    """Moving-window integral int_{||y-x||_inf <= delta} u(y) dy.

    Uses the trapezoid convention on the window edge (half weight at
    exactly delta), so a constant field integrates to (2 delta)^dim c
    exactly when delta is a grid multiple.  Evaluated by periodic FFT
    convolution with the unnormalized window.
    """
    domain = field.domain
    if not (0 < delta <= domain.half_width / 2.0):
        raise HypothesisError(
            f"window radius must lie in (0, L/2], got {delta} with "
            f"L = {domain.half_width}")
    x = domain.axis_coords()
    w = _axis_trapezoid_weights(x, delta)
    window = w if field.dim == 1 else np.multiply.outer(w, w)
    n = domain.n
    for ax in range(field.dim):
        window = np.roll(window, -(n // 2), axis=ax)
    spec = np.fft.rfftn(field.values) * np.fft.rfftn(window)
    out = np.fft.irfftn(spec, s=field.values.shape,
                        axes=tuple(range(field.dim)))
    out *= domain.h ** field.dim
    return Field(out, domain)


def local_l2_ball(field: Field, delta: float) -> Field:
    """Windowed squared mass int_{||y-x||_inf <= delta} u(y)^2 dy.

    Negative u is clamped to zero inside the square, matching the
    convention used by every power of the state in this module.
    """
    clamped = np.where(field.values > 0.0, field.values, 0.0)
    return box_window_integral(Field(clamped ** 2, field.domain), delta)
