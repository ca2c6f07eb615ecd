"""
First-order response to a static transverse ramp field.

The perturbing potential is one-dimensional,

    V(x) = -E0 d f((x - a)/d),       f(|xi| >= 1) = sign(xi),
    f(xi) = sin(pi xi / 2)  inside  (-1, 1),

so its Fourier transform splits into a step part (a principal-value pole)
and a smooth odd remainder with transform

    ghat(eta) = (2i/eta) (4 eta^2 - pi^2 + pi^2 cos eta) / (4 eta^2 - pi^2).

Working in momentum space, the first-order correction to a twisted packet
collapses to a single dimensionless momentum-transfer integral.  The
transverse Gaussian integrals produce the polynomial kernel

    big_xi = sigma^l (i y + beta hbar)^l exp(-beta^2 / (4 alpha)),
    alpha = (1 + i t/t_d) / (2 sigma^2 hbar^2),
    beta  = x/hbar - xi (t - t') / (m d),

which the module exposes both as the collapsed closed form
(``xi_closed_form``) and as the raw double sum over Gaussian moments
(``xi_double_sum``); their equality is a strong internal consistency
check.  Pulling the static x-Gaussian out of big_xi leaves the
time-kernel

    i_l(t, x, y, xi) = int_0^t dtau exp(A tau^2 + B tau) (w - C tau)^l,
    w = x + i y,
    A = -xi^2/(4 alpha m^2 d^2),
    B = (xi/(2 m d)) (x/(alpha hbar) - i hbar xi / d),
    C = hbar xi/(m d),

and the full correction is a prefactor times the regularized
momentum-kernel integral of h(xi) = i_l * e^{-i a xi/d} * e^{i xi x/d}
(see ``numerics.integrate_pv_kernel``).

Two evaluation routes exist for i_l: the contract route integrates the
tau kernel adaptively (``i_l_kernel``); the production route used by the
map evaluator combines a phase-budgeted fixed Gauss-Legendre rule with an
endpoint asymptotic series at large momentum transfer, fully vectorized
over xi.  The two are asserted equal in the test-suite across the
operating envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lg_core import PacketParams, SpacetimePoint, q_factor
from .numerics import QuadratureConfig, integrate_adaptive, integrate_pv_kernel_many

_DOUBLE_FACT = [1.0, 1.0, 3.0, 15.0, 105.0]  # (2n-1)!! for n = 0..4


@dataclass(frozen=True)
class XFieldPerturbation:
    """Transverse ramp field: strength E0, center a, width d (a.u.)."""

    E0: float
    a: float
    d: float

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("field width d must be > 0")


def profile_f(xi):
    """Dimensionless ramp profile: -1 below, sine ramp inside, +1 above."""
    xi = np.asarray(xi, dtype=float)
    out = np.where(xi >= 1.0, 1.0, np.where(xi <= -1.0, -1.0, np.sin(0.5 * np.pi * xi)))
    return out if out.shape else float(out)


def profile_g(xi):
    """Smooth remainder g = f - (2 theta - 1); vanishes for |xi| > 1."""
    xi = np.asarray(xi, dtype=float)
    step = np.where(xi >= 0.0, 1.0, -1.0)
    out = np.where(np.abs(xi) >= 1.0, 0.0, np.sin(0.5 * np.pi * xi) - step)
    return out if out.shape else float(out)


_GHAT_SLOPE = (math.pi**2 - 8.0) / math.pi**2
_GHAT_CUBIC = -(1.0 / 12.0 + 32.0 / math.pi**4 - 4.0 / math.pi**2)


def ghat(eta):
    """Fourier transform of the ramp remainder g (odd, purely imaginary).

    ghat(eta) = (2i/eta)(4 eta^2 - pi^2 + pi^2 cos eta)/(4 eta^2 - pi^2)

    Removable points are evaluated through exact factored forms: near
    eta = 0 a two-term odd Taylor series (slope i(pi^2-8)/pi^2); near
    |eta| = pi/2 the identity
    N/D = [4(pi+u) - pi^2 sin(u)/u] / (4 eta (pi + u)),  u = |eta| - pi/2,
    whose value at u = 0 is i(4-pi)/pi.
    """
    eta = np.asarray(eta, dtype=float)
    scalar = eta.shape == ()
    eta = np.atleast_1d(eta)
    out = np.empty(eta.shape, dtype=complex)

    small = np.abs(eta) < 1e-3
    u = np.abs(eta) - 0.5 * np.pi
    near_half = (np.abs(u) < 0.25) & ~small
    rest = ~(small | near_half)

    es = eta[small]
    out[small] = 1j * es * (_GHAT_SLOPE + _GHAT_CUBIC * es * es)

    en = eta[near_half]
    un = np.abs(en) - 0.5 * np.pi
    ratio = (4.0 * (np.pi + un) - np.pi**2 * np.sinc(un / np.pi)) / (4.0 * (np.pi + un))
    out[near_half] = 2j * np.sign(en) * ratio / np.abs(en)

    er = eta[rest]
    # half-angle form of the numerator avoids the O(1) cancellation of
    # 4eta^2 - pi^2 + pi^2 cos(eta) at small eta
    num = 4.0 * er * er - 2.0 * np.pi**2 * np.sin(0.5 * er) ** 2
    out[rest] = 2j / er * num / (4.0 * er * er - np.pi**2)
    return complex(out[0]) if scalar else out


def _alpha(t, params: PacketParams):
    return (1.0 + 1j * t / params.t_diffraction) / (2.0 * params.sigma**2 * params.hbar**2)


def _beta(t, tp, x, xi, params: PacketParams, d):
    return x / params.hbar - xi * (t - tp) / (params.mass * d)


def xi_closed_form(t, tp, x, y, xi, params: PacketParams, d):
    """Collapsed transverse kernel sigma^l (iy + beta hbar)^l e^{-beta^2/4alpha}."""
    l = params.l
    al = _alpha(t, params)
    be = _beta(t, tp, x, xi, params, d)
    return params.sigma**l * (1j * y + be * params.hbar) ** l * np.exp(-be * be / (4.0 * al))


def xi_double_sum(t, tp, x, y, xi, params: PacketParams, d):
    """Same kernel as the raw double sum over transverse Gaussian moments.

    Only the leading term survives analytically; this form exists to test
    that cancellation numerically.
    """
    l = params.l
    hb = params.hbar
    al = _alpha(t, params)
    be = _beta(t, tp, x, xi, params, d)
    base = 1j * y + be * hb
    total = 0.0 * base
    for n in range(l // 2 + 1):
        cn = (-1.0) ** n * math.comb(l, 2 * n) * _DOUBLE_FACT[n] / 2.0**n
        for k in range((l - 2 * n) // 2 + 1):
            ck = math.comb(l - 2 * n, 2 * k) * _DOUBLE_FACT[k] / 2.0**k
            total = total + cn * ck * (4.0 * hb * hb * al) ** (n + k) * base ** (
                l - 2 * n - 2 * k
            )
    return params.sigma**l * np.exp(-be * be / (4.0 * al)) * total


def _i_l_quadrature(t, w, A, B, C, l, cfg):
    def integrand(tau):
        return np.exp(A * tau * tau + B * tau) * (w - C * tau) ** l

    return integrate_adaptive(integrand, 0.0, t, cfg)


class _IlEvaluator:
    """Evaluates i_l for one packet/field geometry, single or batched."""

    # fixed-rule sizing: 24-point Gauss-Legendre resolves ~30 rad per
    # panel at full precision; 16 leaves a margin of ~2x
    NODES_PER_PANEL = 24
    RAD_PER_PANEL = 16.0
    MAX_NODES = 60000

    def __init__(self, t, params: PacketParams, d):
        self.t = float(t)
        self.params = params
        self.d = float(d)
        self.l = params.l
        al = _alpha(t, params)
        self.alpha = al
        m, hb = params.mass, params.hbar
        # per-unit-xi coefficient building blocks
        self._A_of_xi = -1.0 / (4.0 * al * m * m * d * d)  # times xi^2
        self._B_lin = 1.0 / (2.0 * m * d * al * hb)  # times xi*x
        self._B_quad = -1j * hb / (2.0 * m * d * d)  # times xi^2
        self._C_lin = hb / (m * d)  # times xi
        self._gl_nodes, self._gl_w = np.polynomial.legendre.leggauss(self.NODES_PER_PANEL)

    def coefficients(self, x, xi):
        A = self._A_of_xi * xi * xi
        B = self._B_lin * xi * x + self._B_quad * xi * xi
        C = self._C_lin * xi
        return A, B, C

    def adaptive(self, x, y, xi, cfg):
        """Contract route: adaptive tau quadrature (exact at xi = 0)."""
        w = x + 1j * y
        if xi == 0.0:
            return self.t * w**self.l
        A, B, C = self.coefficients(x, xi)
        return _i_l_quadrature(self.t, w, A, B, C, self.l, cfg)

    def batch(self, x, y, xi):
        """Production route, vectorized over aligned (x, y, xi) arrays.

        Splits pairs into three regimes: exact (xi = 0), endpoint
        asymptotics (oscillation fast enough that the interior Gaussian
        saddle is dead), and phase-budgeted fixed-rule quadrature.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        xi = np.asarray(xi, dtype=float)
        w = x + 1j * y
        out = np.empty(x.shape, dtype=complex)

        zero = xi == 0.0
        if np.any(zero):
            out[zero] = self.t * w[zero] ** self.l

        live = ~zero
        if not np.any(live):
            return out
        A, B, C = self.coefficients(x[live], xi[live])
        wl = w[live]

        # interior saddle magnitude exp(Re B^2/(4a)); endpoint series is
        # valid once the saddle is negligible and the 1/B powers shrink
        a = -A
        saddle_log = (B * B / (4.0 * a)).real
        absB2 = np.abs(B) ** 2
        series_ratio = 2.0 * np.abs(A) * 28.0 / absB2
        use_series = (saddle_log < -46.0) & (series_ratio < 0.08)

        vals = np.empty(wl.shape, dtype=complex)
        if np.any(use_series):
            vals[use_series] = self._endpoint_series(
                wl[use_series], A[use_series], B[use_series], C[use_series]
            )
        quad = ~use_series
        if np.any(quad):
            vals[quad] = self._fixed_rule(wl[quad], A[quad], B[quad], C[quad])
        out[live] = vals
        return out

    def _endpoint_series(self, w, A, B, C, max_terms=28):
        """i_l ≈ Σ_k (-1)^{k+1} g^{(k)}(0) / B^{k+1}, g = e^{A tau^2}(w - C tau)^l.

        The polynomial factor contributes finitely many derivatives; the
        Gaussian contributes A-powers whose decay is guaranteed by the
        ``series_ratio`` gate.
        """
        l = self.l
        # derivative table of (w - C tau)^l at 0: v_k = l!/(l-k)! (-C)^k w^{l-k}
        vk = np.zeros((l + 1,) + w.shape, dtype=complex)
        for k in range(l + 1):
            vk[k] = math.perm(l, k) * (-C) ** k * w ** (l - k)
        total = np.zeros(w.shape, dtype=complex)
        invB = 1.0 / B
        sign = -1.0
        # g^{(k)}(0) = sum over even j of C(k,j) j!/(j/2)! A^{j/2} v_{k-j}
        for k in range(max_terms):
            gk = np.zeros(w.shape, dtype=complex)
            for j in range(0, k + 1, 2):
                if k - j > l:
                    continue
                gk += (math.comb(k, j) * math.factorial(j) // math.factorial(j // 2)) * A ** (
                    j // 2
                ) * vk[k - j]
            total += sign * gk * invB ** (k + 1)
            sign = -sign
        return total

    def _fixed_rule(self, w, A, B, C):
        """Phase-budgeted composite Gauss-Legendre over the live support."""
        t = self.t
        re_a = -A.real
        re_b = B.real
        sig_tau = np.where(re_a > 0.0, 1.0 / np.sqrt(2.0 * np.maximum(re_a, 1e-300)), np.inf)
        tau_peak = np.clip(np.where(re_a > 0.0, re_b / (2.0 * np.maximum(re_a, 1e-300)), t), 0.0, t)
        t_cut = np.minimum(t, tau_peak + 10.0 * sig_tau)

        phase = (
            np.abs(A.imag) * t_cut * t_cut
            + np.abs(B.imag) * t_cut
            + self.l * np.pi
        )
        env = np.where(np.isfinite(sig_tau), 1.5 * t_cut / sig_tau, 0.0)
        panels = np.maximum(1, np.ceil(np.maximum(phase / self.RAD_PER_PANEL, env)).astype(int)) + 1
        panels = np.minimum(panels, self.MAX_NODES // self.NODES_PER_PANEL)

        out = np.empty(w.shape, dtype=complex)
        for p in np.unique(panels):
            idx = np.flatnonzero(panels == p)
            edges = np.linspace(0.0, 1.0, p + 1)
            mid = 0.5 * (edges[1:] + edges[:-1])
            half = 0.5 * (edges[1] - edges[0])
            tau_unit = mid[None, :, None] + half * self._gl_nodes[None, None, :]
            # slab the pair axis so (pairs, panels, nodes) temporaries
            # stay bounded regardless of the batch size
            step = max(1, int(1.2e6 / (p * self.NODES_PER_PANEL)))
            for k0 in range(0, idx.size, step):
                m = idx[k0 : k0 + step]
                tau = t_cut[m][:, None, None] * tau_unit
                ex = np.exp(
                    A[m][:, None, None] * tau * tau + B[m][:, None, None] * tau
                ) * (w[m][:, None, None] - C[m][:, None, None] * tau) ** self.l
                out[m] = (t_cut[m] * half) * np.einsum("pij,j->p", ex, self._gl_w)
        return out


def i_l_kernel(t, x, y, xi, params: PacketParams, pert: XFieldPerturbation, cfg: QuadratureConfig):
    """Time kernel by adaptive quadrature (the contract evaluation route)."""
    return _IlEvaluator(t, params, pert.d).adaptive(float(x), float(y), float(xi), cfg)


def psi1_xfield_batch(t, x, y, z, params: PacketParams, pert: XFieldPerturbation,
                      cfg: QuadratureConfig, il_route="fast"):
    """First-order ramp-field correction on aligned coordinate arrays.

    ``il_route`` selects the inner time-kernel evaluation: "fast" uses the
    vectorized fixed-rule/asymptotic evaluator, "adaptive" the contract
    quadrature route (slow; used for cross-validation).
    """
    if t <= 0:
        raise ValueError("psi1_xfield requires t > 0")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.size > 192:
        # bound the momentum-kernel engine's per-round panel arrays
        out = np.empty(x.size, dtype=complex)
        for k in range(0, x.size, 192):
            out[k : k + 192] = psi1_xfield_batch(
                t, x[k : k + 192], y[k : k + 192], z, params, pert, cfg, il_route=il_route
            )
        return out
    l = params.l
    d = pert.d
    hb = params.hbar
    td = params.t_diffraction
    sp = params.sigma_perp(t)
    ev = _IlEvaluator(t, params, d)
    w = x + 1j * y

    def h(jobs, xi):
        xi = np.asarray(xi, dtype=float)
        if il_route == "fast":
            il = ev.batch(x[jobs], y[jobs], xi)
        else:
            il = np.array(
                [ev.adaptive(x[j], y[j], q, cfg) for j, q in zip(jobs, xi)], dtype=complex
            )
        return il * np.exp(1j * xi * (x[jobs] - pert.a) / d)

    h0 = t * w**l
    kernel = integrate_pv_kernel_many(h, x.size, cfg, h0=h0, warn_tail=False)

    coupling = -params.charge * pert.E0 * d * d
    rho2 = x * x + y * y
    pref = (
        -1j
        / (2.0 * hb * d)
        * math.pi**-1.75
        / params.sqrt_factorial_l
        * params.sigma**1.5
        * (1.0 - 1j * t / td) ** (l + 1)
        / (params.sigma * sp) ** (2 * l + 2)
        * params.sigma**l
        * q_factor(t, z, params)
        * np.exp(-rho2 * (1.0 - 1j * t / td) / (2.0 * sp * sp))
    )
    return pref * coupling * kernel


def psi1_xfield(pt: SpacetimePoint, params: PacketParams, pert: XFieldPerturbation,
                cfg: QuadratureConfig, il_route="fast") -> complex:
    """First-order correction at one spacetime point; linear in E0."""
    vals = psi1_xfield_batch(pt.t, pt.x, pt.y, pt.z, params, pert, cfg, il_route=il_route)
    return complex(vals[0])
