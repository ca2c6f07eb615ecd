"""
First-order response to a fully localized (point-defect) potential.

The perturbation V(r) = lam * delta3(r - r0) reduces the first-order
correction to a single time integral of the free propagator from the
source times the unperturbed amplitude history at the source:

    psi1(t, r) = -(i e lam / hbar) (m / (2 pi i hbar))^{3/2}
                 rho0^l e^{i pbar z0 / hbar}
                 int_0^t dt' (t - t')^{-3/2}
                 exp[ i m (r - r0)^2 / (2 hbar (t - t')) - i pbar^2 t'/(2 m hbar) ]
                 exp[ -i (l + 3/2) arctan(t'/t_d)
                      - (1 - i t'/t_d) (rho0^2 + (z0 - pbar t'/m)^2)
                        / (2 width(t')^2) ]

The upper endpoint carries a (t - t')^{-3/2} singularity under a rapidly
rotating phase; substituting u = 1/(t - t') maps it onto the improper
Fresnel-tail form handled by ``numerics.integrate_fresnel_tail`` with
oscillation rate c = m (r - r0)^2 / (2 hbar) > 0.  Evaluation inside a
small guard ball around the source is refused: the rate c degenerates
there and the correction is physically singular at the source point.

The correction is exactly linear in lam, and near the beam axis it is
approximately independent of the polar angle: it carries no orbital
angular momentum of its own, which is precisely why it splits the
l-fold central vortex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lg_core import PacketParams, SpacetimePoint
from .numerics import (
    QuadratureConfig,
    integrate_adaptive_many,
    integrate_fresnel_tail,
)

SOURCE_GUARD_RADIUS = 1e-3
"""Minimum |r - r0| (a.u.) at which the correction is evaluated."""


class TooCloseToSourceError(ValueError):
    """Evaluation point lies inside the guard ball around the source."""


@dataclass(frozen=True)
class DeltaPerturbation:
    """Point-defect potential: coupling lam at (rho0, phi0=0, z0)."""

    lam: float
    rho0: float
    z0: float
    phi0: float = 0.0

    def __post_init__(self):
        if self.phi0 != 0.0:
            raise ValueError("the source azimuth is fixed at phi0 = 0")
        if self.rho0 < 0:
            raise ValueError("rho0 must be >= 0")


def _source_envelope(params: PacketParams, pert: DeltaPerturbation, t):
    """Envelope s(t') of the time integrand, excluding the Fresnel phase.

    Smooth, and constant in the u = 1/(t - t') variable as u -> infinity
    (t' -> t); contains the packet's amplitude history at the source.
    """
    td = params.t_diffraction
    pb = params.pbar
    m = params.mass
    hb = params.hbar
    l = params.l
    rho0 = pert.rho0
    z0 = pert.z0

    def s_of_tp(tp):
        sp2 = (1.0 + (tp / td) ** 2) / params.sigma**2
        return np.exp(
            -1j * pb * pb * tp / (2.0 * m * hb)
            - 1j * (l + 1.5) * np.arctan2(tp, td)
            - (1.0 - 1j * tp / td) / (2.0 * sp2) * (rho0**2 + (z0 - pb * tp / m) ** 2)
        )

    def s_of_u(u):
        return s_of_tp(t - 1.0 / np.asarray(u, dtype=float))

    return s_of_u


def _prefactor(params: PacketParams, pert: DeltaPerturbation):
    m, hb = params.mass, params.hbar
    return (
        -(1j * params.charge * pert.lam / hb)
        * (m / (2.0 * math.pi * hb)) ** 1.5
        * np.exp(-0.75j * math.pi)
        / (math.pi**0.75 * params.sqrt_factorial_l)
        * pert.rho0**params.l
        * np.exp(1j * params.pbar * pert.z0 / hb)
    )


def phase_rate(pt_or_xyz, pert: DeltaPerturbation, params: PacketParams):
    """Fresnel oscillation rate c = m |r - r0|^2 / (2 hbar)."""
    x, y, z = pt_or_xyz
    d2 = (x - pert.rho0) ** 2 + y**2 + (z - pert.z0) ** 2
    return params.mass * d2 / (2.0 * params.hbar)


def psi1_delta(pt: SpacetimePoint, params: PacketParams, pert: DeltaPerturbation,
               cfg: QuadratureConfig) -> complex:
    """First-order point-defect correction at one spacetime point.

    Raises TooCloseToSourceError inside the guard ball and requires t > 0.
    Exactly linear in the coupling lam.
    """
    if pt.t <= 0:
        raise ValueError("psi1_delta requires t > 0")
    dist2 = (pt.x - pert.rho0) ** 2 + pt.y**2 + (pt.z - pert.z0) ** 2
    if dist2 < SOURCE_GUARD_RADIUS**2:
        raise TooCloseToSourceError(
            f"evaluation point within {SOURCE_GUARD_RADIUS} a.u. of the source"
        )
    c = params.mass * dist2 / (2.0 * params.hbar)
    s = _source_envelope(params, pert, pt.t)
    kernel = integrate_fresnel_tail(c, 1.0 / pt.t, s, cfg)
    return complex(_prefactor(params, pert) * kernel)


def psi1_delta_batch(t, x, y, z, params: PacketParams, pert: DeltaPerturbation,
                     cfg: QuadratureConfig):
    """Vectorized point-defect correction on aligned coordinate arrays.

    Identical mathematics to :func:`psi1_delta`, with the quadrature
    batched over points: the envelope s(u) is shared, only the Fresnel
    rate c and the constant prefactor phase vary per point.
    """
    if t <= 0:
        raise ValueError("psi1_delta requires t > 0")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.size > 4096:
        # bound the engine's per-round panel arrays
        zz = np.broadcast_to(np.asarray(z, dtype=float), x.shape)
        out = np.empty(x.size, dtype=complex)
        for k in range(0, x.size, 4096):
            out[k : k + 4096] = psi1_delta_batch(
                t, x[k : k + 4096], y[k : k + 4096], zz[k : k + 4096], params, pert, cfg
            )
        return out
    z = np.broadcast_to(np.asarray(z, dtype=float), x.shape)
    dist2 = (x - pert.rho0) ** 2 + y * y + (z - pert.z0) ** 2
    if np.any(dist2 < SOURCE_GUARD_RADIUS**2):
        raise TooCloseToSourceError(
            f"evaluation point within {SOURCE_GUARD_RADIUS} a.u. of the source"
        )
    c = params.mass * dist2 / (2.0 * params.hbar)
    U = 1.0 / t
    s = _source_envelope(params, pert, t)

    T = max(cfg.tail_switch_u, 2.0 * U)
    bounds = [U]
    while bounds[-1] < T:
        bounds.append(min(2.0 * bounds[-1], T))
    seeds = [list(zip(bounds[:-1], bounds[1:]))] * x.size

    def q(jobs, u):
        u = np.asarray(u, dtype=float)
        return s(u) * np.exp(1j * c[jobs] * (u - U)) / np.sqrt(u)

    body, _ = integrate_adaptive_many(q, None, cfg, seeds=seeds)
    tails = _tail_batch(c, T, s, U)

    ph0 = np.exp(1j * np.mod(c * U, 2.0 * math.pi))
    return _prefactor(params, pert) * ph0 * (body + tails)


def _tail_batch(c, T, s, u0):
    """Integration-by-parts tails for many Fresnel rates, shared envelope.

    The envelope derivative stencil at T is point-independent; only the
    1/(ic)^k powers and the boundary phase vary per point.
    """
    fd = 1e-3 * T
    uu = T + np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * fd
    g = np.asarray(s(uu), dtype=complex) / np.sqrt(uu)
    g0 = g[2]
    g1 = (g[3] - g[1]) / (2.0 * fd)
    g2 = (g[3] - 2.0 * g[2] + g[1]) / fd**2
    g3 = (g[4] - 2.0 * g[3] + 2.0 * g[1] - g[0]) / (2.0 * fd**3)

    ic = 1j * c
    phase = np.exp(1j * np.mod(c * (T - u0), 2.0 * math.pi))
    return phase * (-g0 / ic + g1 / ic**2 - g2 / ic**3 + g3 / ic**4)
