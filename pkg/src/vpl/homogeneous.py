"""
Exact evolution in a spatially homogeneous, time-dependent field.

A potential V(t, x) = -E(t) x cannot change the packet's structure: a
chain of gauge transformations (momentum kick, quadratic phase, moving
frame) maps the problem onto free evolution,

    psi(t, r) = e^{-i e A(t) x / hbar}
                exp[-(i e^2 / 2 m hbar) int_0^t A^2 dt']
                psi_free(t, x - s(t), y, z),

with A(t) = -int_0^t E dt' and drift s(t) = -(e/m) int_0^t A dt'.  The
density is therefore the unperturbed one rigidly shifted along x, which
is the module's main testable identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lg_core import PacketParams, SpacetimePoint, psi_free_grid


@dataclass(frozen=True)
class HomogeneousField:
    """Field strength E(t) along x: constant, sinusoid, or tabulated."""

    profile: str
    E0: float = 0.0
    omega: float = 0.0
    times: tuple = field(default=())
    values: tuple = field(default=())

    def __post_init__(self):
        if self.profile not in ("constant", "sinusoid", "tabulated"):
            raise ValueError(f"unknown field profile {self.profile!r}")
        if self.profile == "sinusoid" and self.omega == 0.0:
            raise ValueError("sinusoid profile needs omega != 0")
        if self.profile == "tabulated" and len(self.times) < 2:
            raise ValueError("tabulated profile needs at least two samples")

    @classmethod
    def constant(cls, E0):
        return cls(profile="constant", E0=E0)

    @classmethod
    def sinusoid(cls, E0, omega):
        return cls(profile="sinusoid", E0=E0, omega=omega)

    @classmethod
    def tabulated(cls, times, values):
        return cls(profile="tabulated", times=tuple(times), values=tuple(values))

    def strength(self, t):
        """E(t) (piecewise-continuous; tabulated profiles interpolate)."""
        t = np.asarray(t, dtype=float)
        if self.profile == "constant":
            out = np.full(t.shape, self.E0)
        elif self.profile == "sinusoid":
            out = self.E0 * np.sin(self.omega * t)
        else:
            out = np.interp(t, self.times, self.values)
        return out if out.shape else float(out)


def _tabulated_chain(field: HomogeneousField, t):
    """Exact A(t), int_0^t A, int_0^t A^2 for a piecewise-linear table.

    The interpolated E is piecewise linear, so A is piecewise quadratic
    and A^2 piecewise quartic; segments are integrated exactly (3-point
    Gauss handles the quartic).
    """
    times = np.asarray(field.times, dtype=float)
    values = np.asarray(field.values, dtype=float)
    if t > times[-1]:
        raise ValueError("requested time beyond the tabulated profile")
    gl_x, gl_w = np.polynomial.legendre.leggauss(3)

    a_acc = 0.0
    ia_acc = 0.0
    ia2_acc = 0.0
    prev_t = times[0]
    for k in range(1, len(times) + 1):
        seg_end = times[k] if k < len(times) else t
        end = min(seg_end, t)
        h = end - prev_t
        if h <= 0:
            break
        e0 = np.interp(prev_t, times, values)
        e1 = np.interp(end, times, values)
        slope = (e1 - e0) / h
        # A on this segment: A(tau) = a_acc - e0 tau - slope tau^2/2
        ia_acc += a_acc * h - e0 * h * h / 2.0 - slope * h**3 / 6.0
        tau = 0.5 * h * (gl_x + 1.0)
        a_seg = a_acc - e0 * tau - 0.5 * slope * tau * tau
        ia2_acc += 0.5 * h * float(gl_w @ (a_seg * a_seg))
        a_acc += -e0 * h - 0.5 * slope * h * h
        prev_t = end
        if end >= t:
            break
    return a_acc, ia_acc, ia2_acc


def vector_potential(t, field: HomogeneousField) -> float:
    """A(t) = -int_0^t E dt' (closed forms for constant and sinusoid)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if field.profile == "constant":
        return -field.E0 * t
    if field.profile == "sinusoid":
        return (field.E0 / field.omega) * (np.cos(field.omega * t) - 1.0)
    return _tabulated_chain(field, t)[0]


def displacement(t, field: HomogeneousField, params: PacketParams) -> float:
    """Classical drift s(t) = -(e/m) int_0^t A dt' of a particle at rest."""
    if t < 0:
        raise ValueError("t must be >= 0")
    e, m = params.charge, params.mass
    if field.profile == "constant":
        return e * field.E0 * t * t / (2.0 * m)
    if field.profile == "sinusoid":
        w = field.omega
        return -(e / m) * (field.E0 / w) * (np.sin(w * t) / w - t)
    return -(e / m) * _tabulated_chain(field, t)[1]


def _squared_potential_phase(t, field: HomogeneousField, params: PacketParams) -> float:
    """(e^2 / 2 m hbar) int_0^t A^2 dt' (a global quadratic-gauge phase)."""
    e, m, hb = params.charge, params.mass, params.hbar
    if field.profile == "constant":
        integral = field.E0**2 * t**3 / 3.0
    elif field.profile == "sinusoid":
        w = field.omega
        integral = (field.E0 / w) ** 2 * (
            1.5 * t + np.sin(2.0 * w * t) / (4.0 * w) - 2.0 * np.sin(w * t) / w
        )
    else:
        integral = _tabulated_chain(field, t)[2]
    return e * e * integral / (2.0 * m * hb)


def gauge_factors(t, x, field: HomogeneousField, params: PacketParams):
    """The two unimodular gauge phases (kick factor, quadratic factor)."""
    a_t = vector_potential(t, field)
    kick = np.exp(-1j * params.charge * a_t * np.asarray(x) / params.hbar)
    quad = np.exp(-1j * _squared_potential_phase(t, field, params))
    return kick, quad


def psi_homogeneous_grid(t, x, y, z, params: PacketParams, field: HomogeneousField):
    """Exact wave function on broadcastable coordinate arrays (t >= 0)."""
    kick, quad = gauge_factors(t, x, field, params)
    shift = displacement(t, field, params)
    return kick * quad * psi_free_grid(t, np.asarray(x, dtype=float) - shift, y, z, params)


def psi_homogeneous(pt: SpacetimePoint, params: PacketParams, field: HomogeneousField) -> complex:
    """Exact wave function; reduces to the initial packet at t = 0."""
    return complex(psi_homogeneous_grid(pt.t, pt.x, pt.y, pt.z, params, field)[0])
