"""Closed-form period-2 orbit of x'(t) = r x(t) (1 - integral_0^1 x(t-s) ds).

For r above the Hopf threshold pi^2/2 the orbit is

    x(t) = a * ((1-k) / (dn(beta t, k) - k cn(beta t, k)))^2
         = a * ((dn(beta t, k) + k cn(beta t, k)) / (1+k))^2,
    y(t) = alpha * sn(beta t, k),

where y(t) = integral_{t-1}^t x(s) ds - 1, the modulus solves
rate_from_modulus(k) = r, and

    a = K(k) (1+k)^2 / (2E(k) - (1-k^2) K(k)),
    b = K(k) (1-k)^2 / (2E(k) - (1-k^2) K(k)),
    alpha = sqrt(2/r) (sqrt(a) - sqrt(b)),   beta = sqrt(r/2) (sqrt(a) + sqrt(b)).

``a = x(0)`` is the orbit maximum and ``b = x(1)`` the minimum.  For growth
rates beyond ~700 the minimum ``b`` underflows double precision and is kept
as an ``mpmath.mpf`` (it decays like exp(-r)); ``a``, ``alpha`` and ``beta``
always stay well within double range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import mpmath
import numpy as np

from .elliptic import (
    HOPF_RATE,
    Modulus,
    _complete_k_e,
    jacobi,
    modulus_from_rate,
    rate_from_modulus,
)

__all__ = ["OrbitParams", "build_orbit"]

# Below this minimum the direct formula for b would underflow; switch to mpf.
_B_DIRECT_MIN = 1e-280

# Dual-form agreement is asserted only while 1-k is representable enough for
# the naive first form to be meaningful.
_DUAL_FORM_K_MAX = 1.0 - 1e-6


@dataclass(frozen=True)
class OrbitParams:
    """Parameters (r, k, a, b, alpha, beta) of one period-2 orbit.

    Instances from :func:`build_orbit` satisfy (and are checked for):
    ``a > b > 0``, ``k = (sqrt(a)-sqrt(b))/(sqrt(a)+sqrt(b))``,
    ``beta = 2 K(k)``, ``r*alpha/(beta*k) = 2`` and
    ``rate_from_modulus(k) = r``.
    """

    r: float
    modulus: Modulus
    a: float
    b: Union[float, mpmath.mpf]
    alpha: float
    beta: float

    @property
    def k(self) -> float:
        return self.modulus.k

    def validate(self, tol: float = 1e-10) -> None:
        """Re-check the defining invariants; raises ValueError on violation."""
        if not self.a > self.b > 0.0:
            raise ValueError("orbit requires a > b > 0")
        big_k = _complete_k_e(self.modulus)[0]
        if abs(self.beta - 2.0 * big_k) > tol * self.beta:
            raise ValueError("beta != 2K(k)")
        k = self.modulus.k
        if k > 1e-12:
            sqa, sqb = math.sqrt(self.a), mpmath.sqrt(self.b)
            k_ab = float((sqa - sqb) / (sqa + sqb))
            if abs(k_ab - k) > 1e-12 * max(k, 1.0):
                raise ValueError("k != (sqrt(a)-sqrt(b))/(sqrt(a)+sqrt(b))")
            if abs(self.r * self.alpha / (self.beta * k) - 2.0) > tol:
                raise ValueError("r*alpha/(beta*k) != 2")
        if abs(rate_from_modulus(self.modulus) - self.r) > tol * self.r:
            raise ValueError("rate_from_modulus(k) != r")

    # -- evaluation ---------------------------------------------------------

    def x_at(self, t):
        """Orbit x(t) (scalar or ndarray t); always positive.

        Evaluates whichever algebraic form has the denominator farther from
        zero and, away from k ~ 1, asserts the two forms agree to 1e-10
        relative (a live consistency check on the Jacobi values).
        """
        m = self.modulus
        u = np.asarray(t, dtype=float) * self.beta
        _, cn, dn = jacobi(u, m)
        cn = np.atleast_1d(np.asarray(cn, dtype=float))
        dn = np.atleast_1d(np.asarray(dn, dtype=float))
        k = m.k
        one_minus_k = m.kc2 / (1.0 + k)
        neg = cn < 0.0
        ratio = np.empty_like(cn)
        # cn >= 0: dn + k*cn is a sum of positives; cn < 0: dn - k*cn is
        ratio[~neg] = (dn[~neg] + k * cn[~neg]) / (1.0 + k)
        ratio[neg] = one_minus_k / (dn[neg] - k * cn[neg])
        out = self.a * ratio * ratio
        if __debug__ and k <= _DUAL_FORM_K_MAX:
            first = self.a * ((1.0 - k) / (dn - k * cn)) ** 2
            second = self.a * ((dn + k * cn) / (1.0 + k)) ** 2
            assert np.all(np.abs(first - second) <= 1e-10 * np.abs(out)), (
                "the two closed-form expressions for x(t) disagree"
            )
        if not np.all(out > 0.0):
            raise ValueError("orbit x(t) underflowed to zero at this growth rate")
        if np.ndim(t) == 0:
            return float(out[0])
        return out

    def y_at(self, t):
        """Orbit y(t) = alpha * sn(beta t, k) = integral_{t-1}^t x(s) ds - 1."""
        sn = jacobi(np.asarray(t, dtype=float) * self.beta, self.modulus).sn
        return self.alpha * sn

    def mean_over_unit(self) -> float:
        """integral_0^1 x(t) dt in closed form: a (k^2 - 1 + 4E/beta) / (1+k)^2.

        Evaluates k^2 - 1 as -kc^2 to stay exact near k = 1.  Equals 1 for
        parameters built by :func:`build_orbit`.
        """
        m = self.modulus
        big_e = _complete_k_e(m)[1]
        return self.a * (4.0 * big_e / self.beta - m.kc2) / (1.0 + m.k) ** 2

    def conserved_quantity(self, t):
        """x(t) + a*b/x(t) + (r/2) y(t)^2, constant and equal to a + b."""
        x = self.x_at(t)
        y = self.y_at(t)
        ab = float(self.a * self.b)
        return x + ab / x + 0.5 * self.r * y * y

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        """JSON object {r, k, a, b, alpha, beta} with 17 significant digits."""
        fields = [
            ("r", self.r),
            ("k", self.k),
            ("a", self.a),
            ("b", self.b),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ]
        parts = []
        for name, value in fields:
            if isinstance(value, mpmath.mpf):
                num = mpmath.nstr(value, 17, strip_zeros=False)
            else:
                num = format(float(value), ".17g")
            parts.append(f'"{name}": {num}')
        return "{" + ", ".join(parts) + "}"


def build_orbit(r: float) -> OrbitParams:
    """Construct the period-2 orbit parameters for growth rate r > pi^2/2.

    Raises ValueError for r <= pi^2/2, where no periodic orbit exists and the
    equilibrium x = 1 is the only positive bounded solution.
    """
    r = float(r)
    if not math.isfinite(r) or r <= HOPF_RATE:
        raise ValueError(f"no periodic orbit for r <= pi^2/2 (got r={r!r})")
    m = modulus_from_rate(r)
    big_k, big_e = _complete_k_e(m)
    denom = 2.0 * big_e - big_k * m.kc2
    one_plus = 1.0 + m.k
    a = big_k * one_plus * one_plus / denom
    if isinstance(m.kc, float) and m.kc >= _B_DIRECT_MIN:
        one_minus = m.kc * m.kc / one_plus
        b = big_k * one_minus * one_minus / denom
        if b == 0.0:
            b = None
    else:
        b = None
    if b is None:
        kc_mp = m.kc if isinstance(m.kc, mpmath.mpf) else mpmath.mpf(m.kc)
        one_minus_mp = kc_mp * kc_mp / one_plus
        b_mp = big_k * one_minus_mp * one_minus_mp / denom
        b = float(b_mp) if b_mp >= 1e-300 else b_mp
    # sqrt(a) - sqrt(b) = k (sqrt(a) + sqrt(b)) exactly, by the definition of k
    sq_sum = float(math.sqrt(a) + mpmath.sqrt(b))
    alpha = math.sqrt(2.0 / r) * m.k * sq_sum
    beta = math.sqrt(0.5 * r) * sq_sum
    params = OrbitParams(r=r, modulus=m, a=a, b=b, alpha=alpha, beta=beta)
    params.validate()
    return params
