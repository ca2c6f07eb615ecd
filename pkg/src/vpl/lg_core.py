"""
Unperturbed twisted-packet physics.

All quantities are in Hartree atomic units (hbar = m_e = |e| = 1).  The
initial state is a Laguerre-Gaussian packet with radial index zero,
orbital projection l >= 1, momentum-space width ``sigma`` and central
longitudinal momentum ``pbar``:

    psi0 = sigma^{3/2} / (pi^{3/4} sqrt(l!)) (sigma rho)^l
           e^{i pbar z / hbar} e^{i l phi} exp(-sigma^2 (rho^2 + z^2) / 2)

Free evolution spreads the transverse and longitudinal widths together,

    width(t) = (1/sigma) sqrt(1 + t^2 / t_d^2),   t_d = m / (sigma^2 hbar),

and multiplies in the usual Gouy-type phase -(l + 3/2) arctan(t/t_d).
``q_factor`` is the longitudinal profile that factors out of every
transverse cross-section, normalized so the plane-wave and kinetic phases
ride along with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True)
class PacketParams:
    """Defining parameters of the initial twisted packet (atomic units)."""

    sigma: float
    pbar: float
    l: int
    mass: float = 1.0
    charge: float = -1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if int(self.l) != self.l or self.l < 1:
            raise ValueError("l must be an integer >= 1")
        if not self.mass > 0:
            raise ValueError("mass must be > 0")
        if self.hbar != 1.0:
            raise ValueError("hbar is fixed to 1 (atomic units)")
        object.__setattr__(self, "l", int(self.l))

    @property
    def t_diffraction(self) -> float:
        """Spreading timescale t_d = m / (sigma^2 hbar)."""
        return self.mass / (self.sigma**2 * self.hbar)

    def sigma_perp(self, t):
        """Packet width (1/sigma) sqrt(1 + t^2/t_d^2) at time t >= 0."""
        return (1.0 / self.sigma) * np.sqrt(1.0 + (t / self.t_diffraction) ** 2)

    @property
    def sqrt_factorial_l(self) -> float:
        # lgamma keeps this finite far beyond the l <= 8 production range
        return math.exp(0.5 * gammaln(self.l + 1))


@dataclass(frozen=True)
class SpacetimePoint:
    """Event (t, x, y, z) in atomic units."""

    t: float
    x: float
    y: float
    z: float

    @property
    def rho(self) -> float:
        return math.hypot(self.x, self.y)

    @property
    def phi(self) -> float:
        return math.atan2(self.y, self.x)


def psi0_grid(x, y, z, params: PacketParams):
    """Initial packet on broadcastable coordinate arrays."""
    s = params.sigma
    l = params.l
    x, y, z = np.broadcast_arrays(*np.atleast_1d(x, y, z))
    rho = np.hypot(x, y)
    azim = (x + 1j * y) ** l  # rho^l e^{il phi} without an atan2 call
    pref = s**1.5 / (math.pi**0.75 * params.sqrt_factorial_l) * s**l
    return (
        pref
        * azim
        * np.exp(1j * params.pbar * z / params.hbar - 0.5 * s * s * (z * z + rho * rho))
    )


def psi0(pt: SpacetimePoint, params: PacketParams) -> complex:
    """Initial wave function; exactly zero on the axis for l >= 1."""
    return complex(psi0_grid(pt.x, pt.y, pt.z, params)[0])


def phi0(px, py, pz, params: PacketParams):
    """Momentum representation of the initial packet.

    Convention: phi0(p) = integral dr e^{-i p r / hbar} psi0(r), so
    Parseval reads  integral |phi0|^2 d^3p / (2 pi hbar)^3 = 1.
    """
    s = params.sigma
    hb = params.hbar
    l = params.l
    px, py, pz = np.broadcast_arrays(*np.atleast_1d(px, py, pz))
    azim = ((px + 1j * py) / (s * hb)) ** l
    pref = 2.0**1.5 * math.pi**0.75 / ((1j**l) * params.sqrt_factorial_l * s**1.5)
    gauss = np.exp(
        -((pz - params.pbar) ** 2) / (2.0 * s * s * hb * hb)
        - (px * px + py * py) / (2.0 * s * s * hb * hb)
    )
    return pref * azim * gauss


def psi_free_grid(t, x, y, z, params: PacketParams):
    """Freely spreading packet on broadcastable coordinate arrays (t >= 0)."""
    l = params.l
    hb = params.hbar
    td = params.t_diffraction
    sp = params.sigma_perp(t)
    x, y, z = np.broadcast_arrays(*np.atleast_1d(x, y, z))
    rho2 = x * x + y * y
    azim = (x + 1j * y) ** l
    zc = z - params.pbar * t / params.mass
    pref = 1.0 / (math.pi**0.75 * params.sqrt_factorial_l * sp ** (l + 1.5))
    phase = (
        -1j * params.pbar**2 * t / (2.0 * params.mass * hb)
        + 1j * params.pbar * z / hb
        - 1j * (l + 1.5) * math.atan2(t, td)
    )
    envelope = -(1.0 - 1j * t / td) / (2.0 * sp * sp) * (rho2 + zc * zc)
    return pref * azim * np.exp(phase + envelope)


def psi_free(pt: SpacetimePoint, params: PacketParams) -> complex:
    """Free-evolution wave function; coincides with psi0 at t = 0."""
    return complex(psi_free_grid(pt.t, pt.x, pt.y, pt.z, params)[0])


def q_factor(t, z, params: PacketParams):
    """Longitudinal profile Q(t, z) common to all transverse sections.

    Defined through the longitudinal momentum integral

        int dp_z/(2 pi hbar) e^{i p_z z/hbar} e^{-i p_z^2 t/(2 m hbar)}
            exp(-(p_z - pbar)^2 / (2 sigma^2 hbar^2))
        = sigma / sqrt(2 pi) * Q(t, z).

    Gaussian envelope centered at z = pbar t / m with width sigma_perp(t).
    """
    hb = params.hbar
    td = params.t_diffraction
    sp = params.sigma_perp(t)
    z = np.asarray(z, dtype=float)
    zc = z - params.pbar * t / params.mass
    phase = (
        1j * params.pbar * z / hb
        - 1j * params.pbar**2 * t / (2.0 * params.mass * hb)
        - 0.5j * math.atan2(t, td)
    )
    out = np.exp(phase - (1.0 - 1j * t / td) / (2.0 * sp * sp) * zc * zc) / np.sqrt(
        params.sigma * sp
    )
    return out if out.shape else complex(out)
