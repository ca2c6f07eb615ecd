"""
Quadrature engines shared by all physics modules.

Three integration problems recur throughout the package:

1. Ordinary adaptive integration of complex-valued integrands on a finite
   interval (``integrate_adaptive``).

2. The regularized momentum-kernel integral

       I = 2iπ² ∫ dξ [h(ξ) − h(0)] cos ξ / (ξ (4ξ² − π²))

   which is the regular-Riemann rewriting of ∫ dξ h(ξ)[ĝ(ξ) − 2i P(1/ξ)]
   for the sine-ramp field profile (``integrate_pv_kernel``).  The kernel
   has removable points at ξ = 0 and ξ = ±π/2 that are evaluated through
   guarded limit forms.

3. Improper oscillatory "Fresnel tail" integrals

       ∫_U^∞ u^{-1/2} e^{i c u} s(u) du,   c > 0,

   that arise from the endpoint of the point-source time integral after
   the substitution u = 1/(t − t') (``integrate_fresnel_tail``).  A finite
   stretch is integrated adaptively; the remainder is summed by repeated
   integration by parts against e^{icu}.

Adaptive scheme
---------------
Panels carry a 15-point Gauss-Legendre estimate.  A panel is accepted when
the sum of its two half-panel estimates agrees with the parent estimate to
the panel's share of the global tolerance; otherwise the halves become new
panels (bisection).  The one-level-lag comparison plays the role of the
embedded error estimate of a Gauss-Kronrod pair while only ever using
values that are reused at the next level.  The subdivision sequence is a
pure function of the integrand values, so results are deterministic and
independent of any batching or parallel chunking.

The engine processes many independent integrals at once
(``integrate_adaptive_many``): each round evaluates every pending panel of
every job in a single vectorized call, which is what makes per-point
quadrature affordable on dense grids.

All integrands must accept numpy arrays of abscissae and return arrays of
complex values.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import fresnel as _fresnel_cs

__all__ = [
    "QuadratureConfig",
    "NonConvergenceError",
    "InvalidPhaseError",
    "TailTruncationWarning",
    "integrate_adaptive",
    "integrate_adaptive_many",
    "integrate_pv_kernel",
    "integrate_pv_kernel_many",
    "integrate_fresnel_tail",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)


class NonConvergenceError(RuntimeError):
    """Raised when the subdivision budget is exhausted above tolerance.

    Carries the best available estimate and its error so the caller can
    decide whether to degrade gracefully.
    """

    def __init__(self, message, best_estimate=None, error_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class InvalidPhaseError(ValueError):
    """Oscillation rate ``c`` of a Fresnel tail integral is not positive."""


class TailTruncationWarning(UserWarning):
    """The integrand was not negligible at the truncation boundary."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and truncation controls for every numerical integral.

    rel_tol / abs_tol
        Target for the estimated error: err <= max(abs_tol, rel_tol*|I|).
    max_subdivisions
        Panel-split budget per integral.
    xi_cutoff
        Half-width of the truncated momentum-kernel integration window.
    tail_switch_u
        Abscissa beyond which Fresnel tails switch to the integration-by-
        parts asymptotics.
    singularity_guard_delta
        Half-width around the removable kernel points inside which guarded
        limit evaluation replaces direct evaluation.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-14
    max_subdivisions: int = 4000
    xi_cutoff: float = 60.0
    tail_switch_u: float = 30.0
    singularity_guard_delta: float = 1e-4

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be >= 0")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if not self.xi_cutoff > math.pi / 2 + self.singularity_guard_delta:
            raise ValueError(
                "xi_cutoff must exceed pi/2 + singularity_guard_delta so the "
                "removable kernel points lie inside the integration window"
            )
        if self.tail_switch_u <= 0:
            raise ValueError("tail_switch_u must be > 0")


def _panel_estimates(f, jobs, a, b):
    """15-point Gauss-Legendre estimates for a batch of panels.

    ``jobs`` labels which integral each panel belongs to; ``f(jobs, x)``
    must evaluate the per-job integrand at abscissae ``x``.  Returns the
    panel values together with their L1 masses, which set the achievable
    rounding floor of oscillatory (cancelling) panels.
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    j = np.repeat(jobs, _GL_NODES.size)
    vals = np.asarray(f(j, x.ravel()), dtype=complex).reshape(x.shape)
    return half * (vals @ _GL_WEIGHTS), half * (np.abs(vals) @ _GL_WEIGHTS)


def integrate_adaptive_many(f, intervals, cfg, seeds=None):
    """Integrate many independent complex integrals in lock-step.

    Parameters
    ----------
    f : callable
        Vectorized integrand ``f(job_indices, x) -> complex array``.
    intervals : sequence of (a, b)
        One finite interval per job (used when ``seeds`` is None).
    cfg : QuadratureConfig
    seeds : optional list of lists of (a, b)
        Initial panelization per job.  Useful to pre-concentrate panels,
        e.g. geometrically towards an endpoint spike.

    Returns
    -------
    values, errors : complex ndarray, float ndarray

    Raises
    ------
    NonConvergenceError
        If any job exhausts ``cfg.max_subdivisions`` panel splits while the
        error estimate is still above tolerance.  The exception carries the
        best estimates for *all* jobs.
    """
    njobs = len(intervals) if seeds is None else len(seeds)
    if seeds is None:
        seeds = [[iv] for iv in intervals]

    seg_job = []
    seg_a = []
    seg_b = []
    for j, segs in enumerate(seeds):
        for (a, b) in segs:
            if b < a:
                raise ValueError("interval endpoints must satisfy a <= b")
            seg_job.append(j)
            seg_a.append(a)
            seg_b.append(b)
    seg_job = np.asarray(seg_job, dtype=np.intp)
    seg_a = np.asarray(seg_a, dtype=float)
    seg_b = np.asarray(seg_b, dtype=float)

    total_len = np.zeros(njobs)
    np.add.at(total_len, seg_job, seg_b - seg_a)
    total_len[total_len == 0.0] = 1.0

    accepted = np.zeros(njobs, dtype=complex)
    accepted_err = np.zeros(njobs)
    accepted_l1 = np.zeros(njobs)
    splits = np.zeros(njobs, dtype=np.intp)

    # degenerate zero-length jobs are already done
    live = seg_b > seg_a
    for j in np.flatnonzero(~np.isin(np.arange(njobs), seg_job[live])):
        accepted[j] = 0.0
    seg_job, seg_a, seg_b = seg_job[live], seg_a[live], seg_b[live]

    if seg_job.size:
        seg_val, seg_l1 = _panel_estimates(f, seg_job, seg_a, seg_b)
    else:
        seg_val, seg_l1 = np.zeros(0, complex), np.zeros(0)

    while seg_job.size:
        mid = 0.5 * (seg_a + seg_b)
        child_job = np.repeat(seg_job, 2)
        child_a = np.empty(child_job.size)
        child_b = np.empty(child_job.size)
        child_a[0::2], child_b[0::2] = seg_a, mid
        child_a[1::2], child_b[1::2] = mid, seg_b
        child_val, child_l1 = _panel_estimates(f, child_job, child_a, child_b)
        refined = child_val[0::2] + child_val[1::2]
        refined_l1 = child_l1[0::2] + child_l1[1::2]
        seg_err = np.abs(refined - seg_val)

        cur_total = accepted.copy()
        np.add.at(cur_total, seg_job, refined)
        tol_job = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(cur_total))
        # a strongly cancelling integral can never resolve below the
        # rounding floor of its own L1 mass; treat that as converged
        job_l1 = accepted_l1.copy()
        np.add.at(job_l1, seg_job, refined_l1)
        tol_job = np.maximum(tol_job, 1024.0 * np.finfo(float).eps * job_l1)

        pend_err = np.zeros(njobs)
        np.add.at(pend_err, seg_job, seg_err)
        job_done = (accepted_err + pend_err) <= tol_job

        seg_tol = 0.9 * tol_job[seg_job] * (seg_b - seg_a) / total_len[seg_job]
        # oscillatory panels cannot resolve below the rounding floor set by
        # their L1 mass (the panel value is smaller by cancellation, and
        # phases of ~1e3 rad carry ~2e-13 relative trig noise); splitting
        # below that floor would never terminate
        floor = 1024.0 * np.finfo(float).eps * (refined_l1 + seg_l1)
        ok = (seg_err <= np.maximum(seg_tol, floor)) | job_done[seg_job]

        np.add.at(accepted, seg_job[ok], refined[ok])
        np.add.at(accepted_err, seg_job[ok], seg_err[ok])
        np.add.at(accepted_l1, seg_job[ok], refined_l1[ok])

        bad = ~ok
        np.add.at(splits, seg_job[bad], 1)
        if np.any(splits > cfg.max_subdivisions):
            worst = np.flatnonzero(splits > cfg.max_subdivisions)
            best = accepted.copy()
            np.add.at(best, seg_job[bad], refined[bad])
            err = accepted_err + pend_err
            raise NonConvergenceError(
                f"adaptive quadrature exhausted {cfg.max_subdivisions} "
                f"subdivisions for job(s) {worst.tolist()[:8]}",
                best_estimate=best if njobs > 1 else best[0],
                error_estimate=err if njobs > 1 else err[0],
            )

        keep = np.repeat(bad, 2)
        seg_job = child_job[keep]
        seg_a = child_a[keep]
        seg_b = child_b[keep]
        seg_val = child_val[keep]
        seg_l1 = child_l1[keep]

    return accepted, accepted_err


def integrate_adaptive(f, a, b, cfg):
    """Adaptively integrate a complex-valued integrand on [a, b].

    ``f`` must accept a numpy array of abscissae.  Returns the integral
    estimate; the estimated error satisfies err <= max(abs_tol,
    rel_tol*|I|).  Deterministic for fixed inputs and config.
    """
    if b < a:
        raise ValueError("integrate_adaptive requires a <= b")
    vals, _ = integrate_adaptive_many(lambda j, x: f(x), [(a, b)], cfg)
    return complex(vals[0])


def _pv_kernel_factor(xi, guard):
    """cos ξ / (4ξ² − π²) with the removable points ±π/2 made explicit.

    Near |ξ| = π/2 the equivalent form −sin(u)/(4u(π+u)), u = |ξ| − π/2,
    is used; it is exact and finite (value −1/(4π) at u = 0).
    """
    xi = np.asarray(xi, dtype=float)
    u = np.abs(xi) - 0.5 * np.pi
    near = np.abs(u) < max(guard, 1e-8)
    out = np.empty_like(xi)
    ud = u[near]
    out[near] = -np.sinc(ud / np.pi) / (4.0 * (np.pi + ud))
    xf = xi[~near]
    out[~near] = np.cos(xf) / (4.0 * xf * xf - np.pi * np.pi)
    return out


def integrate_pv_kernel_many(h, njobs, cfg, h0=None, warn_tail=True):
    """Batch version of :func:`integrate_pv_kernel`.

    ``h(job_indices, xi) -> complex array`` evaluates every job's momentum
    function at the given abscissae.  ``h0`` optionally supplies the exact
    h(0) per job (useful when it has a cheap closed form).
    """
    cut = cfg.xi_cutoff
    guard = cfg.singularity_guard_delta
    all_jobs = np.arange(njobs, dtype=np.intp)
    if h0 is None:
        h0 = np.asarray(h(all_jobs, np.zeros(njobs)), dtype=complex)
    else:
        h0 = np.asarray(h0, dtype=complex)

    if warn_tail:
        edge = np.abs(
            np.asarray(
                h(np.concatenate([all_jobs, all_jobs]), np.concatenate([np.full(njobs, -cut), np.full(njobs, cut)])),
                dtype=complex,
            )
        )
        if np.any(edge > max(cfg.abs_tol, 1e-300)):
            warnings.warn(
                f"|h| = {edge.max():.3e} at |xi| = {cut:g}; truncated tail "
                "may exceed abs_tol",
                TailTruncationWarning,
                stacklevel=2,
            )

    # difference quotients just outside the guard window stand in for the
    # removable [h(ξ)−h(0)]/ξ factor inside it (direct evaluation there
    # loses ~8 digits to cancellation)
    hp = np.asarray(h(all_jobs, np.full(njobs, guard)), dtype=complex)
    hm = np.asarray(h(all_jobs, np.full(njobs, -guard)), dtype=complex)
    dq_pos = (hp - h0) / guard
    dq_neg = (hm - h0) / (-guard)

    def integrand(jobs, xi):
        xi = np.asarray(xi, dtype=float)
        small = np.abs(xi) < guard
        dq = np.empty(xi.shape, dtype=complex)
        if np.any(~small):
            js, xs = jobs[~small], xi[~small]
            dq[~small] = (np.asarray(h(js, xs), dtype=complex) - h0[js]) / xs
        if np.any(small):
            dq[small] = np.where(xi[small] >= 0.0, dq_pos[jobs[small]], dq_neg[jobs[small]])
        return 2j * np.pi**2 * dq * _pv_kernel_factor(xi, guard)

    seeds = [[(-cut, -1.0), (-1.0, 0.0), (0.0, 1.0), (1.0, cut)]] * njobs
    vals, _ = integrate_adaptive_many(integrand, None, cfg, seeds=seeds)
    return vals


def integrate_pv_kernel(h, cfg):
    """Evaluate I = 2iπ² ∫ dξ [h(ξ) − h(0)] cos ξ / (ξ(4ξ² − π²)).

    This is the regular form of ∫ dξ h(ξ)[ĝ(ξ) − 2i P(1/ξ)]; no principal
    value is needed because the h(0) subtraction removes the 1/ξ pole.
    The integral is truncated at |ξ| = cfg.xi_cutoff, which the caller
    must justify through decay of h (checked: a TailTruncationWarning is
    emitted when |h| at the cutoff exceeds abs_tol).

    ``h`` must be vectorized over numpy arrays of ξ.
    """
    vals = integrate_pv_kernel_many(lambda j, x: h(x), 1, cfg)
    return complex(vals[0])


def _fresnel_halfline(c, x0):
    """Closed form of ∫_{x0}^∞ e^{i c v²} dv via Fresnel sine/cosine."""
    w = x0 * math.sqrt(2.0 * c / math.pi)
    s, cc = _fresnel_cs(w)
    return math.sqrt(math.pi / (2.0 * c)) * ((0.5 - cc) + 1j * (0.5 - s))


def fresnel_halfline_u(c, U):
    """Closed form of ∫_U^∞ u^{-1/2} e^{i c u} du (u = v² reduction)."""
    return 2.0 * _fresnel_halfline(c, math.sqrt(U))


def _ibp_tail(c, T, s, u0=0.0, n_terms=4, fd_step=None):
    """∫_T^∞ u^{-1/2} e^{ic(u-u0)} s(u) du by integration by parts.

    Returns (value, error_estimate).  Derivatives of the envelope
    g(u) = u^{-1/2} s(u) are taken by central differences; the error is
    estimated from the first omitted term.
    """
    if fd_step is None:
        fd_step = 1e-3 * T
    # five-point stencil values of g around T
    offs = np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * fd_step
    uu = T + offs
    g = np.asarray(s(uu), dtype=complex) / np.sqrt(uu)
    g0 = g[2]
    g1 = (g[3] - g[1]) / (2.0 * fd_step)
    g2 = (g[3] - 2.0 * g[2] + g[1]) / fd_step**2
    g3 = (g[4] - 2.0 * g[3] + 2.0 * g[1] - g[0]) / (2.0 * fd_step**3)
    ders = [g0, g1, g2, g3][:n_terms]

    # I = e^{ic(T-u0)} Σ_k (-1)^{k+1} g^{(k)}(T) / (ic)^{k+1}
    phase = np.exp(1j * c * (T - u0))
    total = 0.0 + 0.0j
    ic = 1j * c
    for k, gk in enumerate(ders):
        total += (-1) ** (k + 1) * phase * gk / ic ** (k + 1)
    # next-term estimate assuming the power-law envelope keeps decaying
    g_next = abs(ders[-1]) * (n_terms - 0.5) / T + 1e-300
    err = g_next / c ** (n_terms + 1)
    return total, err


def integrate_fresnel_tail(c, U, s, cfg):
    """Improper oscillatory integral ∫_U^∞ u^{-1/2} e^{icu} s(u) du.

    The envelope ``s`` must be smooth with bounded low-order derivatives
    and approach a constant as u → ∞.  The stretch [U, T] is integrated
    adaptively with geometric panel seeding (the physically interesting
    contribution is often a narrow sliver at the lower endpoint); beyond
    T = max(tail_switch_u, 2U) the remainder is evaluated by repeated
    integration by parts, doubling T until the truncation estimate meets
    tolerance.

    Raises InvalidPhaseError for c <= 0.  ``s`` must be vectorized.
    """
    if c <= 0:
        raise InvalidPhaseError(f"Fresnel tail requires c > 0, got c = {c}")
    if U <= 0:
        raise ValueError("lower endpoint U must be > 0")

    # phase measured from U: at large c the absolute phase c*u exceeds the
    # range where trig keeps relative accuracy, but c*(u-U) stays small
    # wherever the envelope is alive
    ph0 = np.exp(1j * math.fmod(c * U, 2.0 * math.pi))

    def q(u):
        u = np.asarray(u, dtype=float)
        return np.asarray(s(u), dtype=complex) * np.exp(1j * c * (u - U)) / np.sqrt(u)

    T = max(cfg.tail_switch_u, 2.0 * U)
    # geometric seeding towards U resolves endpoint-concentrated envelopes
    bounds = [U]
    while bounds[-1] < T:
        bounds.append(min(2.0 * bounds[-1], T))
    seeds = [list(zip(bounds[:-1], bounds[1:]))]
    vals, errs = integrate_adaptive_many(lambda j, x: q(x), [(U, T)], cfg, seeds=seeds)
    body = complex(vals[0])

    tail, tail_err = _ibp_tail(c, T, s, u0=U)
    tol = max(cfg.abs_tol, cfg.rel_tol * (abs(body + tail) + abs(body - tail)))
    doublings = 0
    while tail_err > tol and doublings < 12:
        vals, _ = integrate_adaptive_many(lambda j, x: q(x), [(T, 2.0 * T)], cfg)
        body += complex(vals[0])
        T *= 2.0
        tail, tail_err = _ibp_tail(c, T, s, u0=U)
        tol = max(cfg.abs_tol, cfg.rel_tol * abs(body + tail))
        doublings += 1
    if tail_err > tol:
        raise NonConvergenceError(
            f"Fresnel tail asymptotics did not reach tolerance at T = {T:g}",
            best_estimate=ph0 * (body + tail),
            error_estimate=tail_err,
        )
    return ph0 * (body + tail)
