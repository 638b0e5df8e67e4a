"""Scalar functionals and algebraic identities of the constrained problem.

Everything here is a lattice quadrature of a whole-space integral: the mass,
the homogeneous seminorm, the focusing term, the energy E, the virial
functional Q whose zero set carves the constraint manifold out of the mass
sphere, and the dilation u^lam(x) = lam^(N/2) u(lam x) together with the
fibering map lam -> E(u^lam) and its unique maximizer.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, ScalePrecisionLoss, ZeroField
from .grid import Field, ModelParams
from .spectral import dilate_values, hs_seminorm_sq, riesz_convolve

# rescale contract: warn when mass leaks past this, fail past the hard bound
MASS_LEAK_WARN = 1e-8
MASS_DRIFT_FAIL = 1e-6


@dataclass(frozen=True)
class FunctionalReport:
    """Mass, seminorm, focusing term, energy and virial value of one field."""

    mass: float
    hs_sq: float
    nonlinear: float
    energy: float
    q_value: float


@dataclass(frozen=True)
class FiberingPoint:
    """Unique positive maximizer of the fibering map and the energy there."""

    lambda0: float
    energy_at_max: float


def nonlinear_term(u: Field, params: ModelParams) -> float:
    """Focusing term: ||u||_{p+2}^{p+2} (power) or the double convolution D(u)."""
    g = u.grid
    dens = (u.values.real**2 + u.values.imag**2)
    if params.is_power:
        return float(g.cell_volume * np.sum(dens ** ((params.p + 2.0) / 2.0)))
    conv = riesz_convolve(Field(g, dens.astype(np.complex128)), params.gamma)
    return float(g.cell_volume * np.sum(conv.values.real * dens))


def energy_from(hs_sq: float, nonlinear: float, params: ModelParams) -> float:
    if params.is_power:
        return 0.5 * hs_sq - nonlinear / (params.p + 2.0)
    return 0.5 * hs_sq - 0.25 * nonlinear


def q_from(hs_sq: float, nonlinear: float, params: ModelParams) -> float:
    if params.is_power:
        N, p = params.dim, params.p
        return params.s * hs_sq - N * p / (2.0 * (p + 2.0)) * nonlinear
    return params.s * hs_sq - 0.25 * params.gamma * nonlinear


def report(u: Field, params: ModelParams) -> FunctionalReport:
    """All five scalars of one field by lattice quadrature."""
    if u.grid.dim != params.dim:
        raise GridMismatch(
            f"field dimension {u.grid.dim} does not match model dimension {params.dim}"
        )
    hs = hs_seminorm_sq(u, params.s)
    nl = nonlinear_term(u, params)
    return FunctionalReport(
        mass=u.mass(),
        hs_sq=hs,
        nonlinear=nl,
        energy=energy_from(hs, nl, params),
        q_value=q_from(hs, nl, params),
    )


def rescale(u: Field, lam: float) -> Field:
    """Mass-preserving dilation u^lam(x) = lam^(N/2) u(lam x), spectrally resampled."""
    if not lam > 0:
        raise ZeroField(f"dilation parameter must be positive, got {lam}")
    grid = u.grid
    vals = lam ** (grid.dim / 2.0) * dilate_values(u.values, grid, lam)
    out = Field(grid, vals)
    m0 = u.mass()
    if m0 > 0.0:
        drift = abs(out.mass() - m0) / m0
        if drift > MASS_DRIFT_FAIL:
            raise ScalePrecisionLoss(
                f"rescale by {lam} drifted mass by {drift:.3e} (> {MASS_DRIFT_FAIL})"
            )
        if drift > MASS_LEAK_WARN:
            warnings.warn(
                f"rescale by {lam}: relative mass leak {drift:.3e}", stacklevel=2
            )
    return out


def scaled_nonlinear_degree(params: ModelParams) -> float:
    """Exponent d with nonlinear(u^lam) = lam^d nonlinear(u)."""
    if params.is_power:
        return params.dim * params.p / 2.0
    return params.gamma


def fibering_energy(hs_sq: float, nonlinear: float, lam: float, params: ModelParams) -> float:
    """g(lam) = E(u^lam) from the scalars of u."""
    d = scaled_nonlinear_degree(params)
    coef = 1.0 / (params.p + 2.0) if params.is_power else 0.25
    return 0.5 * lam ** (2.0 * params.s) * hs_sq - coef * lam**d * nonlinear


def fibering_q(hs_sq: float, nonlinear: float, lam: float, params: ModelParams) -> float:
    """Q(u^lam) from the scalars of u."""
    return q_from(lam ** (2.0 * params.s) * hs_sq,
                  lam ** scaled_nonlinear_degree(params) * nonlinear, params)


def fibering_lambda0(hs_sq: float, nonlinear: float, params: ModelParams) -> float:
    """Closed form for the unique critical point of g."""
    if hs_sq <= 0.0 or nonlinear <= 0.0:
        raise ZeroField("fibering maximizer undefined for a vanishing field")
    s = params.s
    if params.is_power:
        N, p = params.dim, params.p
        tau = 2.0 * s * (p + 2.0) * hs_sq / (N * p * nonlinear)
        return tau ** (2.0 / (N * p - 4.0 * s))
    g = params.gamma
    tau = 4.0 * s * hs_sq / (g * nonlinear)
    return tau ** (1.0 / (g - 2.0 * s))


def fibering_max_energy(hs_sq: float, nonlinear: float, params: ModelParams) -> float:
    """Closed form for max_lam E(u^lam).

    Power case: ((Np-4s)/(2Np)) (2s(p+2)/(Np))^(4s/(Np-4s)) A^(Np/(Np-4s)) / B^(4s/(Np-4s)).
    Hartree case, by the same change of variables with D(u^lam) = lam^gamma D(u):
    ((g-2s)/(2g)) (4s/g)^(2s/(g-2s)) A^(g/(g-2s)) / B^(2s/(g-2s)).
    """
    if hs_sq <= 0.0 or nonlinear <= 0.0:
        raise ZeroField("fibering maximizer undefined for a vanishing field")
    s = params.s
    A, B = hs_sq, nonlinear
    if params.is_power:
        N, p = params.dim, params.p
        e = N * p - 4.0 * s
        return (
            (e / (2.0 * N * p))
            * (2.0 * s * (p + 2.0) / (N * p)) ** (4.0 * s / e)
            * A ** (N * p / e)
            / B ** (4.0 * s / e)
        )
    g = params.gamma
    e = g - 2.0 * s
    return (e / (2.0 * g)) * (4.0 * s / g) ** (2.0 * s / e) * A ** (g / e) / B ** (2.0 * s / e)


def fibering_maximizer(u: Field, params: ModelParams) -> FiberingPoint:
    """Unique lam0 > 0 maximizing E(u^lam); lam0 = 1 exactly on the constraint manifold."""
    rep = report(u, params)
    lam0 = fibering_lambda0(rep.hs_sq, rep.nonlinear, params)
    return FiberingPoint(
        lambda0=lam0,
        energy_at_max=fibering_max_energy(rep.hs_sq, rep.nonlinear, params),
    )


def _normalized_residual(terms: list) -> float:
    total = sum(terms)
    scale = sum(abs(t) for t in terms)
    if scale == 0.0:
        return 0.0
    return abs(total) / scale


def pohozaev_residual(u: Field, omega: float, params: ModelParams) -> float:
    """Scale-free defect of the Pohozaev identity at (u, omega)."""
    rep = report(u, params)
    if rep.mass == 0.0:
        raise ZeroField("Pohozaev residual undefined for the zero field")
    N, s = params.dim, params.s
    if params.is_power:
        coef = 2.0 * N / (params.p + 2.0)
    else:
        coef = (2.0 * N - params.gamma) / 2.0
    terms = [(N - 2.0 * s) * rep.hs_sq, N * omega * rep.mass, -coef * rep.nonlinear]
    return _normalized_residual(terms)


def nehari_residual(u: Field, omega: float, params: ModelParams) -> float:
    """Scale-free defect of the Euler-Lagrange pairing <J'(u), u> = 0."""
    rep = report(u, params)
    if rep.mass == 0.0:
        raise ZeroField("Nehari residual undefined for the zero field")
    terms = [rep.hs_sq, omega * rep.mass, -rep.nonlinear]
    return _normalized_residual(terms)


def action(u: Field, omega: float, params: ModelParams) -> float:
    """J_omega(u) = E(u) + (omega/2) ||u||^2."""
    rep = report(u, params)
    return rep.energy + 0.5 * omega * rep.mass


def gn_ratio(u: Field, params: ModelParams) -> float:
    """Interpolation quotient whose supremum is the sharp constant.

    Invariant under both the mass-preserving dilation and amplitude scaling.
    """
    rep = report(u, params)
    if rep.mass == 0.0 or rep.hs_sq == 0.0:
        raise ZeroField("ratio undefined for the zero field")
    s = params.s
    if params.is_power:
        N, p = params.dim, params.p
        return rep.nonlinear / (
            rep.hs_sq ** (N * p / (4.0 * s))
            * rep.mass ** (((p + 2.0) - p * N / (2.0 * s)) / 2.0)
        )
    g = params.gamma
    return rep.nonlinear / (
        rep.hs_sq ** (g / (2.0 * s)) * rep.mass ** ((4.0 * s - g) / (2.0 * s))
    )


def constrained_surplus(rep: FunctionalReport, params: ModelParams) -> float:
    """E - (2/(Np)) Q  (power) or E - Q/gamma (Hartree); equals a positive
    multiple of the seminorm, which makes the constrained energy coercive."""
    if params.is_power:
        return rep.energy - 2.0 / (params.dim * params.p) * rep.q_value
    return rep.energy - rep.q_value / params.gamma


def surplus_coefficient(params: ModelParams) -> float:
    """The multiple: (Np-4s)/(2Np) (power) or (gamma-2s)/(2 gamma) (Hartree)."""
    s = params.s
    if params.is_power:
        N, p = params.dim, params.p
        return (N * p - 4.0 * s) / (2.0 * N * p)
    g = params.gamma
    return (g - 2.0 * s) / (2.0 * g)
