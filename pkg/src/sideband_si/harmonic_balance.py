"""Mean-field harmonic balance for the side-band doublet.

The optical field is expanded as a pump line plus blue and red side-bands
offset by -Omega + delta/2 and +Omega + delta/2; the mechanics as a doublet
around Omega.  Substituting into the Langevin equations and keeping only
those harmonics gives a small set of complex algebraic equations, solved
here with a damped Newton iteration and a finite-difference Jacobian.

The side-band equations are homogeneous in the side-band amplitudes, so the
phonon doublet amplitude is pinned (real, ``phonon_amplitude``) and the
pump amplitude is fixed to the real value sqrt(nbar).  Blue and red
side-bands decouple at this order; each is solved for its own complex
offset, and the blue one is the reported ``delta``.

Residuals are written in pole-free form, i.e. the phonon relations are
multiplied through by (i delta + Gamma) rather than divided by it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .closed_form import si_linearized
from .errors import JacobianSingular, NonConvergence, ParameterError
from .params import OmParams, mean_displacement

FD_STEP = 1e-7
MAX_HALVINGS = 20


@dataclass(frozen=True)
class HbState:
    """Harmonic-balance unknowns.

    ``delta`` is the blue-line offset (complex; its real part is the SI),
    ``delta_red`` the offset solved from the red line.  Optical amplitudes
    are in sqrt(photon) units, mechanical ones in sqrt(phonon) units.
    """

    delta: complex
    a0: float
    ab: complex = 0j
    ar: complex = 0j
    bb: complex = 1 + 0j
    br: complex = 1 + 0j
    delta_red: complex | None = None
    abb: complex | None = None
    arr: complex | None = None

    def __post_init__(self):
        if self.a0 < 0 or isinstance(self.a0, complex):
            raise ParameterError("gauge requires a real, non-negative pump amplitude")
        vals = [self.delta, self.ab, self.ar, self.bb, self.br]
        vals += [v for v in (self.delta_red, self.abb, self.arr) if v is not None]
        if not all(np.isfinite(complex(v)) for v in vals):
            raise ParameterError("harmonic-balance amplitudes must be finite")

    @property
    def red_offset(self):
        return self.delta if self.delta_red is None else self.delta_red


@dataclass(frozen=True)
class HbSolution:
    state: HbState
    residual_norm: float
    iterations: int
    converged: bool
    tolerance: float
    blocks: dict = field(default_factory=dict, compare=False)
    delta2: float | None = None
    nu_bb: complex | None = None
    nu_rr: complex | None = None

    @property
    def delta(self):
        return self.state.delta.real

    @property
    def order2_ratio(self):
        if self.delta2 is None:
            return None
        return self.delta2 / self.state.delta.real


def _line_factors(p: OmParams, nbar, delta, delta_red):
    om, k, g0 = p.mech_freq, p.optical_decay, p.coupling
    _, x0 = mean_displacement(p, nbar)
    shift = 1j * g0 * x0
    return {
        "blue": 1j * (-om + 0.5 * delta) + 0.5 * k - shift,
        "red": 1j * (om + 0.5 * delta_red) + 0.5 * k - shift,
        "blue2": 1j * (-2 * om + delta) + 0.5 * k - shift,
        "red2": 1j * (2 * om + delta_red) + 0.5 * k - shift,
        "x0": x0,
    }


def residual_blocks(s: HbState, p: OmParams, nbar):
    """Complex residuals of each balance equation, keyed by name.

    ``phonon_red``/``phonon_blue`` relate the mechanical doublet to the
    optical beat notes; ``blue``/``red`` are the side-band lines of the
    optical equation; ``mean_field`` is the pump line, which lacks the drive
    term and is reported for diagnosis only.  Second-order lines appear
    when ``abb``/``arr`` are set.
    """
    if nbar < 0:
        raise ParameterError("nbar must be >= 0")
    gm, k, g0 = p.mech_decay, p.optical_decay, p.coupling
    d, dr = s.delta, s.red_offset
    a0 = s.a0
    f = _line_factors(p, nbar, d, dr)
    abb = 0j if s.abb is None else s.abb
    arr = 0j if s.arr is None else s.arr
    out = {
        "phonon_red": (-1j * dr + gm) * s.br + 2j * g0 * (np.conj(s.ar) * a0 + np.conj(arr) * s.ar),
        "phonon_blue": (1j * d + gm) * s.bb + 2j * g0 * (a0 * s.ab + np.conj(s.ab) * abb),
        "blue": f["blue"] * s.ab - 1j * g0 * (a0 * s.bb + abb * np.conj(s.bb)),
        "red": f["red"] * s.ar - 1j * g0 * (a0 * np.conj(s.br) + arr * s.br),
        "mean_field": 0.5 * k * a0 - 1j * g0 * (a0 * f["x0"] + s.ab * np.conj(s.bb) + s.ar * s.br),
    }
    if s.abb is not None:
        out["blue2"] = f["blue2"] * s.abb - 1j * g0 * s.ab * s.bb
    if s.arr is not None:
        out["red2"] = f["red2"] * s.arr - 1j * g0 * s.ar * np.conj(s.br)
    return out


def _scale(p, s):
    return p.mech_freq * max(abs(s.bb), abs(s.br), 1.0)


def hb_residual(s: HbState, p: OmParams, nbar, include_mean_field=False):
    """Stacked real residual vector of the solved balance equations.

    Each complex residual is divided by Omega times the pinned phonon
    amplitude and split into real and imaginary parts.  The pump line is
    left out unless ``include_mean_field`` is set, because it carries no
    drive term and is not one of the solved equations.
    """
    blocks = residual_blocks(s, p, nbar)
    if not include_mean_field:
        blocks.pop("mean_field")
    z = np.array(list(blocks.values()), dtype=complex) / _scale(p, s)
    return np.column_stack([z.real, z.imag]).ravel()


def _fd_jacobian(fun, x, f0, xscale):
    n = x.size
    J = np.empty((f0.size, n))
    for j in range(n):
        h = FD_STEP * max(abs(x[j]), xscale[j])
        xp = x.copy()
        xp[j] += h
        J[:, j] = (fun(xp) - f0) / (xp[j] - x[j])
    return J


def damped_newton(fun, x0, xscale, tol, max_iter):
    """Newton (Gauss-Newton for overdetermined ``fun``) with step halving.

    Returns ``(x, residual_norm, iterations, converged)``.
    """
    x = np.asarray(x0, dtype=float).copy()
    xscale = np.asarray(xscale, dtype=float)
    f = fun(x)
    norm = float(np.linalg.norm(f))
    it = 0
    while norm > tol and it < max_iter:
        it += 1
        J = _fd_jacobian(fun, x, f, xscale)
        if not np.all(np.isfinite(J)):
            raise JacobianSingular("non-finite Jacobian")
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[-1] <= 1e-13 * sv[0] or sv[0] == 0:
            raise JacobianSingular(f"Jacobian condition number {sv[0] / max(sv[-1], 1e-300):.3g}")
        if J.shape[0] == J.shape[1]:
            step = np.linalg.solve(J, -f)
        else:
            step = np.linalg.lstsq(J, -f, rcond=None)[0]
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            xn = x + t * step
            fn = fun(xn)
            nn = float(np.linalg.norm(fn))
            if np.isfinite(nn) and nn < norm:
                break
            t *= 0.5
        else:
            return x, norm, it, False
        x, f, norm = xn, fn, nn
    return x, norm, it, norm <= tol


def _c(x, i):
    return complex(x[i], x[i + 1])


def _pair(z):
    return [z.real, z.imag]


def _initial_state(p, nbar, phonon_amplitude, initial):
    a0 = math.sqrt(nbar)
    if isinstance(initial, HbState):
        return initial
    if initial is not None and "delta" in initial:
        d0 = complex(initial["delta"])
    else:
        d0 = complex(_lin(p, nbar))
    s = HbState(delta=d0, a0=a0, bb=complex(phonon_amplitude), br=complex(phonon_amplitude), delta_red=d0)
    f = _line_factors(p, nbar, d0, d0)
    g0 = p.coupling
    ab = 1j * g0 * a0 * s.bb / f["blue"]
    ar = 1j * g0 * a0 * np.conj(s.br) / f["red"]
    return replace(s, ab=complex(ab), ar=complex(ar))


def _lin(p, nbar):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return si_linearized(p, nbar).delta


def _solve_side(p, nbar, state, side, tol, max_iter, order2):
    om = p.mech_freq
    scale = _scale(p, state)

    if side == "blue":
        def unpack(x):
            kw = dict(delta=_c(x, 0), ab=_c(x, 2))
            if order2:
                kw["abb"] = _c(x, 4)
            return replace(state, **kw)

        names = ["phonon_blue", "blue"] + (["blue2"] if order2 else [])
        x0 = _pair(state.delta) + _pair(state.ab) + (_pair(state.abb) if order2 else [])
    else:
        def unpack(x):
            kw = dict(delta_red=_c(x, 0), ar=_c(x, 2))
            if order2:
                kw["arr"] = _c(x, 4)
            return replace(state, **kw)

        names = ["phonon_red", "red"] + (["red2"] if order2 else [])
        x0 = _pair(state.red_offset) + _pair(state.ar) + (_pair(state.arr) if order2 else [])

    def fun(x):
        b = residual_blocks(unpack(x), p, nbar)
        z = np.array([b[n] for n in names]) / scale
        return np.column_stack([z.real, z.imag]).ravel()

    ascale = max(abs(state.a0) * p.coupling / om * scale / om, 1e-300)
    xscale = [om, om, ascale, ascale] + ([ascale, ascale] if order2 else [])
    x, norm, it, ok = damped_newton(fun, x0, xscale, tol, max_iter)
    return unpack(x), norm, it, ok


def _finish(p, nbar, state, iters, ok, tol):
    sc = _scale(p, state)
    blocks = {k: abs(v) / sc for k, v in residual_blocks(state, p, nbar).items()}
    norm = float(np.linalg.norm(hb_residual(state, p, nbar)))
    return HbSolution(state, norm, iters, ok and norm <= tol, tol, blocks)


def hb_solve(p: OmParams, nbar, tol=1e-10, max_iter=50, initial=None, phonon_amplitude=1.0):
    """Solve the first-order harmonic-balance equations.

    Parameters
    ----------
    p : OmParams
    nbar : float
        Intracavity photon number; the pump amplitude is fixed to sqrt(nbar).
    tol : float
        Target norm of the scaled residual (dimensionless).
    max_iter : int
    initial : HbState or dict, optional
        Starting point.  By default delta comes from the linearized closed
        form and the side-band amplitudes from back-substitution.
    phonon_amplitude : float
        Pinned amplitude of each phonon side-band.

    Returns
    -------
    HbSolution

    Raises
    ------
    NonConvergence
        When ``max_iter`` is exhausted or no damped step lowers the residual.
        The best solution is attached as ``exc.best``.
    JacobianSingular
    """
    if not nbar >= 0:
        raise ParameterError("nbar must be >= 0")
    if phonon_amplitude <= 0:
        raise ParameterError("phonon_amplitude must be positive")
    s = _initial_state(p, nbar, phonon_amplitude, initial)
    s, nb, ib, okb = _solve_side(p, nbar, s, "blue", tol / math.sqrt(2), max_iter, False)
    s, nr, ir, okr = _solve_side(p, nbar, s, "red", tol / math.sqrt(2), max_iter, False)
    sol = _finish(p, nbar, s, ib + ir, okb and okr, tol)
    if not sol.converged:
        raise NonConvergence(f"harmonic balance residual {sol.residual_norm:.3g} > {tol:g}", best=sol)
    return sol


def _measure_frequency(L, source, src_freq, amp0, span, samples=65, tol=1e-12, max_iter=100):
    """Fit ``a * exp(i nu t)`` against a source line over a finite window.

    Minimises sum_t |L(nu) a e^{i nu t} - source e^{i src_freq t}|^2 from
    the symmetric guess nu = 0.  Only the balance of the window decides
    where the line sits, so ``nu`` is measured rather than imposed.
    """
    t = np.linspace(0.0, span, samples)
    ref = abs(source) or 1.0
    target = source * np.exp(1j * src_freq * t) / ref
    scale = 1.0 / span

    def fun(x):
        nu = complex(x[2], x[3]) * scale
        a = complex(x[0], x[1])
        z = L(nu) * a * np.exp(1j * nu * t) / ref - target
        return np.concatenate([z.real, z.imag])

    x0 = [amp0.real, amp0.imag, 0.0, 0.0]
    xs = [max(abs(amp0), 1e-300)] * 2 + [1.0, 1.0]
    x, norm, it, ok = damped_newton(fun, x0, xs, tol, max_iter)
    return complex(x[2], x[3]) * scale, complex(x[0], x[1]), ok


def hb_solve_order2(p: OmParams, nbar, tol=1e-10, max_iter=50, initial=None, phonon_amplitude=1.0):
    """Harmonic balance including the second-order side-bands.

    After the coupled solve (first- and second-order amplitudes together),
    the frequency of each second-order line is measured: its balance
    equation is fitted over a window of length ~1/|delta| with the line
    frequency left free and started from the symmetric value.  ``delta2``
    is the sum of the measured blue and red offsets, i.e. the second-order
    inequivalence on the same scale as the first-order ``delta``.
    """
    first = hb_solve(p, nbar, tol=tol, max_iter=max_iter, initial=initial, phonon_amplitude=phonon_amplitude)
    s = first.state
    f = _line_factors(p, nbar, s.delta, s.red_offset)
    g0 = p.coupling
    s = replace(
        s,
        abb=complex(1j * g0 * s.ab * s.bb / f["blue2"]),
        arr=complex(1j * g0 * s.ar * np.conj(s.br) / f["red2"]),
    )
    s, nb, ib, okb = _solve_side(p, nbar, s, "blue", tol / math.sqrt(2), max_iter, True)
    s, nr, ir, okr = _solve_side(p, nbar, s, "red", tol / math.sqrt(2), max_iter, True)
    sol = _finish(p, nbar, s, first.iterations + ib + ir, okb and okr, tol)
    if not sol.converged:
        raise NonConvergence(f"order-2 harmonic balance residual {sol.residual_norm:.3g} > {tol:g}", best=sol)

    om, k = p.mech_freq, p.optical_decay
    _, x0 = mean_displacement(p, nbar)
    shift = 1j * g0 * x0
    span = 1.0 / max(abs(s.delta), abs(s.red_offset), 1e-9 * om)
    nu_bb, _, ok1 = _measure_frequency(
        lambda nu: 1j * (-2 * om + nu) + 0.5 * k - shift,
        1j * g0 * s.ab * s.bb,
        s.delta,
        s.abb,
        span,
    )
    # red beat a_r conj(b_r): the conjugated phonon line contributes conj(delta)/2
    nu_rr, _, ok2 = _measure_frequency(
        lambda nu: 1j * (2 * om + nu) + 0.5 * k - shift,
        1j * g0 * s.ar * np.conj(s.br),
        s.red_offset.real,
        s.arr,
        span,
    )
    if not (ok1 and ok2):
        raise NonConvergence("second-order line frequency fit did not converge", best=sol)
    return replace(sol, delta2=float(nu_bb.real + nu_rr.real), nu_bb=nu_bb, nu_rr=nu_rr)
