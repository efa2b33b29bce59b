"""Cross-module invariant suite behind the ``verify`` CLI command.

Each check pairs a scratch-built computation with an independent route
(adaptive quadrature, finite differences, a second formulation, or an exact
algebraic identity) and reports pass/fail at the tolerances of the module
contracts.  A growth rate >= 50 switches to the stress profile: integration
steps shrink and the orbit tolerances relax to 1e-7, since the orbit then
spikes on a time scale ~1/beta.

``perturb_k`` deliberately inconsistency-injects the orbit's modulus while
keeping (a, b, alpha, beta); the product invariant x(t) x(t-1) = a b is the
designed tripwire for that fault.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from . import ddesim, spectrum
from .elliptic import (
    HOPF_RATE,
    Modulus,
    complete_e,
    complete_k,
    jacobi,
    modulus_from_rate,
    rate_from_modulus,
    sn_integral_log,
)
from .orbit import OrbitParams, build_orbit

__all__ = ["CheckResult", "run_checks", "format_table"]

_K_GRID = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _k_quad(k: float) -> float:
    f = lambda th: 1.0 / math.sqrt(1.0 - (k * math.sin(th)) ** 2)
    return quad(f, 0.0, math.pi / 2, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def _e_quad(k: float) -> float:
    f = lambda th: math.sqrt(1.0 - (k * math.sin(th)) ** 2)
    return quad(f, 0.0, math.pi / 2, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


# -- elliptic ---------------------------------------------------------------


def _check_k_e_vs_quadrature():
    worst = 0.0
    for k in _K_GRID:
        worst = max(
            worst,
            abs(complete_k(k) - _k_quad(k)),
            abs(complete_e(k) - _e_quad(k)),
        )
    return worst <= 1e-12, f"max |AGM - quadrature| = {worst:.2e} (tol 1e-12)"


def _check_bracket_monotone():
    vals = []
    for k in _K_GRID:
        m = Modulus.from_k(k)
        vals.append(2.0 * complete_e(m) - complete_k(m) * m.kc2)
    positive = all(v > 0.0 for v in vals)
    increasing = all(b > a for a, b in zip(vals, vals[1:]))
    return positive and increasing, f"2E - (1-k^2)K in [{vals[0]:.4f}, {vals[-1]:.4f}]"


def _check_k_kc2_limit():
    m = Modulus.from_k(1.0 - 1e-6)
    v = complete_k(m) * m.kc2
    return v < 0.01, f"K(k)(1-k^2) = {v:.2e} at k = 1-1e-6 (< 0.01)"


def _check_rate_monotone_roundtrip():
    rates = [rate_from_modulus(k) for k in _K_GRID]
    increasing = all(b > a for a, b in zip(rates, rates[1:]))
    worst = 0.0
    for r in (5.0, 10.0, 40.0, 200.0):
        worst = max(worst, abs(rate_from_modulus(modulus_from_rate(r)) - r) / r)
    return increasing and worst <= 1e-11, (
        f"rate(modulus(r)) round-trip rel err {worst:.2e} (tol 1e-11); monotone={increasing}"
    )


def _check_jacobi_identities():
    worst = 0.0
    for k in (0.1, 0.5, 0.9, 0.99):
        m = Modulus.from_k(k)
        big_k = complete_k(m)
        u = np.linspace(-8.0 * big_k, 8.0 * big_k, 1000)
        sn, cn, dn = jacobi(u, m)
        worst = max(
            worst,
            float(np.max(np.abs(sn * sn + cn * cn - 1.0))),
            float(np.max(np.abs(dn * dn + k * k * sn * sn - 1.0))),
        )
        if float(np.min(dn * dn + k * k - 1.0)) < -1e-12:
            return False, "dn fell below the complementary modulus"
    return worst <= 1e-12, f"max identity defect {worst:.2e} (tol 1e-12)"


def _check_jacobi_special_values():
    worst = 0.0
    for k in (0.1, 0.5, 0.9, 0.99):
        m = Modulus.from_k(k)
        big_k = complete_k(m)
        q = jacobi(big_k, m)
        h = jacobi(2.0 * big_k, m)
        f = jacobi(4.0 * big_k + 0.37, m)
        g = jacobi(0.37, m)
        worst = max(
            worst,
            abs(q.sn - 1.0), abs(q.cn), abs(q.dn - m.kc),
            abs(h.sn), abs(h.cn + 1.0), abs(h.dn - 1.0),
            abs(f.sn - g.sn), abs(f.cn - g.cn), abs(f.dn - g.dn),
        )
    return worst <= 1e-12, f"quarter/half/full-period defect {worst:.2e} (tol 1e-12)"


def _check_jacobi_derivatives():
    h = 1e-6
    worst = 0.0
    for k in (0.1, 0.5, 0.9, 0.99):
        m = Modulus.from_k(k)
        big_k = complete_k(m)
        for u in np.linspace(-2.0 * big_k, 2.0 * big_k, 25):
            plus, minus, mid = jacobi(u + h, m), jacobi(u - h, m), jacobi(u, m)
            worst = max(
                worst,
                abs((plus.sn - minus.sn) / (2 * h) - mid.cn * mid.dn),
                abs((plus.cn - minus.cn) / (2 * h) + mid.sn * mid.dn),
                abs((plus.dn - minus.dn) / (2 * h) + k * k * mid.sn * mid.cn),
            )
    return worst <= 1e-6, f"max FD derivative defect {worst:.2e} (tol 1e-6)"


def _check_sn_log_derivative():
    h = 1e-5
    worst = 0.0
    for k in (0.1, 0.5, 0.9):
        m = Modulus.from_k(k)
        for u in np.linspace(-3.0, 3.0, 25):
            fd = (sn_integral_log(u + h, m) - sn_integral_log(u - h, m)) / (2 * h)
            worst = max(worst, abs(fd - k * jacobi(u, m).sn))
    return worst <= 1e-8, f"max |d/du log(dn-k cn) - k sn| = {worst:.2e} (tol 1e-8)"


# -- orbit ------------------------------------------------------------------


def _orbit_checks(p: OrbitParams, p_true: OrbitParams, stress: bool):
    a, b, r = p.a, float(p.b), p.r
    rng = np.random.default_rng(20260810)
    tol_rel = 1e-7 if stress else 1e-10
    tol_inv = 1e-7 if stress else 1e-9
    tol_quad = 1e-7 if stress else 1e-8

    def build_invariants():
        p_true.validate()
        return True, "beta = 2K, r alpha/(beta k) = 2, rate(k) = r all hold"

    def period_two():
        t = rng.uniform(0.0, 10.0, 1000)
        dev = float(np.max(np.abs(p.x_at(t + 2.0) - p.x_at(t)))) / a
        return dev <= tol_rel, f"period-2 closure rel dev {dev:.2e} (tol {tol_rel:g})"

    def product_invariant():
        t = rng.uniform(-5.0, 5.0, 1000)
        dev = float(np.max(np.abs(p.x_at(t) * p.x_at(t - 1.0) - a * b))) / (a * b)
        # near k = 1 the relative accuracy of x at the geometric-mean
        # crossings is limited by (Jacobi phase noise)/kc
        tol = max(tol_inv, 50.0 * 2.2e-16 / float(p_true.modulus.kc))
        return dev <= tol, f"x(t)x(t-1)=ab rel dev {dev:.2e} (tol {tol:.2g})"

    def window_sum():
        worst = 0.0
        for t in rng.uniform(0.0, 4.0, 4):
            val = quad(lambda s: p.x_at(t - s), 0.0, 2.0,
                       epsabs=1e-11, epsrel=1e-11, limit=400)[0]
            worst = max(worst, abs(val - 2.0))
        return worst <= tol_quad, f"|int_0^2 x(t-s)ds - 2| = {worst:.2e} (tol {tol_quad:g})"

    def reflection():
        s = rng.uniform(0.0, 3.0, 200)
        worst = 0.0
        for n in (-1, 0, 1):
            worst = max(worst, float(np.max(np.abs(p.x_at(2 * n + s) - p.x_at(2 * n - s)))) / a)
        return worst <= tol_rel, f"x(2n+s)=x(2n-s) rel dev {worst:.2e} (tol {tol_rel:g})"

    def extremes():
        t = np.linspace(-1.0, 1.0, 4001)
        x = p.x_at(t)
        hi, lo = float(np.max(x)), float(np.min(x))
        ok = abs(hi - a) <= 1e-9 * a and lo >= b * (1.0 - 1e-9) and abs(x[2000] - a) <= 1e-12 * a
        return ok, f"max = {hi:.6g} at t=0 (a = {a:.6g}), min = {lo:.3g} (b = {b:.3g})"

    def duffing_residual():
        h = 1e-4
        scale = max(1.0, (p.beta / 5.13) ** 4)  # FD truncation grows like beta^4
        tol = 1e-5 * scale
        worst = 0.0
        for t in np.linspace(0.05, 1.95, 20):
            ypp = (p.y_at(t + h) - 2.0 * p.y_at(t) + p.y_at(t - h)) / (h * h)
            y = p.y_at(t)
            worst = max(worst, abs(ypp + r * y * (a + b - 0.5 * r * y * y)))
        return worst <= tol, f"Duffing residual {worst:.2e} (tol {tol:.2g})"

    def y_derivative_initial():
        h = 1e-5
        scale = max(1.0, (p.beta / 5.13) ** 3 * p.alpha)
        tol = 1e-6 * scale
        fd = (p.y_at(h) - p.y_at(-h)) / (2.0 * h)
        dev = abs(fd - (a - b))
        return dev <= tol, f"|y'(0) - (a-b)| = {dev:.2e} (tol {tol:.2g})"

    def mean_over_unit():
        dev = abs(p_true.mean_over_unit() - 1.0)
        return dev <= 1e-10, f"|int_0^1 x - 1| = {dev:.2e} (tol 1e-10)"

    def conservation():
        t = rng.uniform(-5.0, 5.0, 1000)
        dev = float(np.max(np.abs(p.conserved_quantity(t) - (a + b))))
        return dev <= tol_inv, f"x + ab/x + (r/2)y^2 = a+b dev {dev:.2e} (tol {tol_inv:g})"

    return [
        ("orbit/build-invariants", build_invariants),
        ("orbit/period-two", period_two),
        ("orbit/product-invariant", product_invariant),
        ("orbit/window-sum", window_sum),
        ("orbit/reflection-symmetry", reflection),
        ("orbit/extremes", extremes),
        ("orbit/duffing-residual", duffing_residual),
        ("orbit/y-derivative-initial", y_derivative_initial),
        ("orbit/mean-over-unit", mean_over_unit),
        ("orbit/conservation", conservation),
    ]


# -- spectrum ---------------------------------------------------------------


def _check_verdict_boundary():
    for rr in (1.0, 2.0, 4.0, 4.9):
        rep = spectrum.find_roots(rr)
        if rep.verdict != "stable":
            return False, f"r={rr}: got {rep.verdict}, expected stable"
    rep = spectrum.find_roots(HOPF_RATE)
    if rep.verdict != "critical":
        return False, f"r=pi^2/2: got {rep.verdict}, expected critical"
    for rr in (5.0, 6.0, 10.0):
        rep = spectrum.find_roots(rr)
        if rep.verdict != "unstable":
            return False, f"r={rr}: got {rep.verdict}, expected unstable"
    return True, "stable below pi^2/2, critical at it, unstable above"


def _check_conjugate_and_bound():
    rep = spectrum.find_roots(6.0)
    vals = [c.value for c in rep.roots]
    worst = max(min(abs(z.conjugate() - w) for w in vals) for z in vals)
    if worst > 1e-10:
        return False, f"conjugate closure defect {worst:.2e}"
    for z in vals:
        if z.real > 0.0 and abs(z) > 6.0 + 1e-8:
            return False, f"unstable root {z} violates |lambda| <= r"
    return True, f"{len(vals)} roots closed under conjugation; RHP bound holds"


def _check_split_form():
    rep = spectrum.find_roots(6.0)
    worst = 0.0
    for c in rep.roots:
        mu, om = c.re, c.im
        re_int = quad(lambda s: math.exp(-mu * s) * math.cos(om * s), 0.0, 1.0,
                      epsabs=1e-12, epsrel=1e-12)[0]
        im_int = quad(lambda s: math.exp(-mu * s) * math.sin(om * s), 0.0, 1.0,
                      epsabs=1e-12, epsrel=1e-12)[0]
        worst = max(worst, abs(mu + 6.0 * re_int), abs(om - 6.0 * im_int))
    return worst <= 1e-9, f"split-form residual {worst:.2e} (tol 1e-9)"


def _check_winding_consistency():
    # find_roots raises on any count mismatch; exercise two window shapes
    n1 = len(spectrum.find_roots(6.0).roots)
    n2 = len(spectrum.find_roots(6.0, rect=(-10.0, 7.0, -7.0 * math.pi, 7.0 * math.pi)).roots)
    return n2 <= n1, f"{n1} roots in default window, {n2} in narrower window"


# -- ddesim -----------------------------------------------------------------


def _ddesim_checks(p_true: OrbitParams, stress: bool):
    r = p_true.r
    a, b = p_true.a, float(p_true.b)
    h = 2.5e-4 if stress else 1e-3
    h_reduced = 1.25e-4 if stress else 1e-3
    tol_cross = 1e-5 if stress else 1e-6
    tol_equiv = 5e-5 if stress else 1e-6
    tol_cons = 1e-7 if stress else 1e-8

    def equilibrium():
        tr = ddesim.integrate_dde(lambda t: 1.0, 5.0, 10.0, 1e-2)
        dev = max(float(np.max(np.abs(tr.x - 1.0))), float(np.max(np.abs(tr.y))))
        return dev <= 1e-12, f"phi=1 stays at (1, 0): dev {dev:.2e} (tol 1e-12)"

    def stable_regime():
        tr = ddesim.integrate_dde(lambda t: 1.2, 3.0, 200.0, 1e-2)
        dev = abs(float(tr.x[-1]) - 1.0)
        return dev <= 1e-3, f"r=3: |x(200) - 1| = {dev:.2e} (tol 1e-3)"

    def cross_check():
        tr = ddesim.integrate_dde(p_true.x_at, r, 5.0, h)
        dev = float(np.max(np.abs(tr.x - p_true.x_at(tr.t))))
        return dev <= tol_cross, f"DDE vs closed form sup dev {dev:.2e} (tol {tol_cross:g})"

    def convergence_order():
        d1 = float(np.max(np.abs(
            ddesim.integrate_dde(p_true.x_at, r, 5.0, h).x
            - p_true.x_at(np.arange(int(round(5.0 / h)) + 1) * h))))
        h2 = h / 2.0
        d2 = float(np.max(np.abs(
            ddesim.integrate_dde(p_true.x_at, r, 5.0, h2).x
            - p_true.x_at(np.arange(int(round(5.0 / h2)) + 1) * h2))))
        ratio = d1 / d2 if d2 > 0.0 else math.inf
        return ratio >= 8.0, f"halving h: error {d1:.2e} -> {d2:.2e}, ratio {ratio:.1f} (>= 8)"

    def four_dim_invariants():
        tra, trb = ddesim.integrate_four_dim(a, b, r, 10.0, h)
        d1 = float(np.max(np.abs(tra.y + trb.y)))
        d2 = float(np.max(np.abs(tra.x * trb.x - a * b)))
        ok = d1 <= 1e-9 and d2 <= max(1e-9, 1e-9 * a * b)
        return ok, f"y1+y2 dev {d1:.2e}, x1 x2 - ab dev {d2:.2e} (tol 1e-9)"

    def reduced_conservation():
        tr = ddesim.integrate_reduced(a, b, r, 10.0, h_reduced)
        cons = tr.x + a * b / tr.x + 0.5 * r * tr.y**2
        dev = float(np.max(np.abs(cons - (a + b))))
        return dev <= tol_cons, f"reduced-flow conservation dev {dev:.2e} (tol {tol_cons:g})"

    def formulation_equivalence():
        tr_dde = ddesim.integrate_dde(p_true.x_at, r, 5.0, h)
        tr_four, _ = ddesim.integrate_four_dim(a, b, r, 5.0, h)
        tr_red = ddesim.integrate_reduced(a, b, r, 5.0, h)
        d12 = float(np.max(np.abs(tr_dde.x - tr_four.x)))
        d13 = float(np.max(np.abs(tr_dde.x - tr_red.x)))
        d23 = float(np.max(np.abs(tr_four.x - tr_red.x)))
        worst = max(d12, d13, d23)
        return worst <= tol_equiv, f"pairwise sup dev {worst:.2e} (tol {tol_equiv:g})"

    def positivity():
        tr = ddesim.integrate_dde(p_true.x_at, r, 5.0, h)
        return bool(np.all(tr.x > 0.0)), "all samples positive"

    def sirs_conservation():
        params = ddesim.SirsParams(beta=3.0, gamma=1.0, tau=2.0)
        i_eq = ddesim.endemic_equilibrium(params)
        st = ddesim.integrate_sirs(params, lambda s: 0.9 * i_eq, 1000.0, 0.01)
        d_total = float(np.max(np.abs(st.s + st.i + st.r - 1.0)))
        n_tau = round(params.tau / st.step)
        worst_r = 0.0
        for idx in (len(st.t) // 2, len(st.t) - 1):
            integ = ddesim._composite_simpson(st.i[idx - n_tau : idx + 1], st.step)
            worst_r = max(worst_r, abs(params.gamma * integ - st.r[idx]))
        ok = d_total <= 1e-9 and worst_r <= 1e-7
        return ok, f"S+I+R-1 dev {d_total:.2e} (tol 1e-9); R-identity dev {worst_r:.2e} (tol 1e-7)"

    return [
        ("ddesim/equilibrium", equilibrium),
        ("ddesim/stable-regime", stable_regime),
        ("ddesim/closedform-cross-check", cross_check),
        ("ddesim/convergence-order", convergence_order),
        ("ddesim/four-dim-invariants", four_dim_invariants),
        ("ddesim/reduced-conservation", reduced_conservation),
        ("ddesim/formulation-equivalence", formulation_equivalence),
        ("ddesim/positivity", positivity),
        ("ddesim/sirs-conservation", sirs_conservation),
    ]


def run_checks(r: float = 10.0, perturb_k: float = 0.0) -> list[CheckResult]:
    """Run every module invariant at its contract tolerance; returns results.

    ``r`` sets the orbit/simulation growth rate (r >= 50 engages the stress
    profile).  ``perturb_k`` injects a modulus inconsistency into the orbit
    under test without touching (a, b, alpha, beta).
    """
    if r <= HOPF_RATE:
        raise ValueError("verification needs r > pi^2/2 so an orbit exists")
    stress = r >= 50.0
    p_true = build_orbit(r)
    p = p_true
    if perturb_k:
        k_new = p_true.k + perturb_k
        if not 0.0 <= k_new < 1.0 - 1e-9:
            k_new = p_true.k - abs(perturb_k)
        p = dataclasses.replace(p_true, modulus=Modulus.from_k(k_new))

    named: list[tuple[str, Callable]] = [
        ("elliptic/k-e-vs-quadrature", _check_k_e_vs_quadrature),
        ("elliptic/bracket-positive-increasing", _check_bracket_monotone),
        ("elliptic/k-kc2-limit", _check_k_kc2_limit),
        ("elliptic/rate-monotone-roundtrip", _check_rate_monotone_roundtrip),
        ("elliptic/jacobi-identities", _check_jacobi_identities),
        ("elliptic/jacobi-special-values", _check_jacobi_special_values),
        ("elliptic/jacobi-derivatives", _check_jacobi_derivatives),
        ("elliptic/sn-log-derivative", _check_sn_log_derivative),
    ]
    named += _orbit_checks(p, p_true, stress)
    named += [
        ("spectrum/verdict-boundary", _check_verdict_boundary),
        ("spectrum/conjugate-and-bound", _check_conjugate_and_bound),
        ("spectrum/split-form", _check_split_form),
        ("spectrum/winding-consistency", _check_winding_consistency),
    ]
    named += _ddesim_checks(p_true, stress)

    results = []
    for name, fn in named:
        try:
            passed, detail = fn()
        except Exception as exc:  # fail loudly, but report the whole table
            passed, detail = False, f"exception: {exc}"
        results.append(CheckResult(name, bool(passed), detail))
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(c.name) for c in results)
    lines = [
        f"{c.name:<{width}}  {'PASS' if c.passed else 'FAIL'}  {c.detail}"
        for c in results
    ]
    n_fail = sum(not c.passed for c in results)
    lines.append(
        f"{len(results) - n_fail}/{len(results)} checks passed"
        + (f" ({n_fail} FAILED)" if n_fail else "")
    )
    return "\n".join(lines)
