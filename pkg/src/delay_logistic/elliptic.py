"""Complete elliptic integrals, Jacobi elliptic functions, and the modulus/growth-rate map.

Everything here is built from the arithmetic-geometric mean (AGM):

* ``complete_k`` / ``complete_e`` run the AGM with the sum-of-squares
  correction term for E.
* ``jacobi`` records the AGM sequence (a descending Landen transformation)
  and recovers sn/cn/dn by the backward phase recursion
  ``phi[n-1] = (phi[n] + asin((c[n]/a[n]) sin phi[n])) / 2``.
* ``rate_from_modulus`` evaluates ``2*K*(2*E - (1-k^2)*K)``, the map from the
  elliptic modulus to the growth rate at which the period-2 orbit exists;
  ``modulus_from_rate`` inverts it by safeguarded bisection/Newton.

The modulus is kept together with its complement ``kc = sqrt(1-k^2)``.  For
growth rates beyond roughly 80 the complement is so small that ``k`` rounds
to 1.0 in double precision; the complement (stored as an ``mpmath.mpf`` once
it drops below the double-precision floor) remains the faithful description,
and K and E switch to their logarithmic asymptotics, which are exact to
double precision in that regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import mpmath
import numpy as np

__all__ = [
    "Modulus",
    "JacobiTriple",
    "as_modulus",
    "complete_k",
    "complete_e",
    "jacobi",
    "sn_integral_log",
    "rate_from_modulus",
    "modulus_from_rate",
    "HOPF_RATE",
]

LN4 = math.log(4.0)

#: Growth rate below which the positive equilibrium is stable: pi^2/2.
HOPF_RATE = math.pi * math.pi / 2.0

# Complement below this is handled by the logarithmic asymptotics of K and E
# (relative truncation error O(kc^4 log^2 kc) < 1e-30 there).
_KC_ASYMPTOTIC = 1e-8

# Smallest complement the double-precision Jacobi evaluation accepts.
_KC_JACOBI_MIN = 1e-250

_AGM_MAX_ITER = 64


@dataclass(frozen=True)
class Modulus:
    """Elliptic modulus k in [0, 1) together with its complement kc = sqrt(1-k^2).

    ``kc`` is authoritative near k = 1: it may be an ``mpmath.mpf`` when the
    true complement underflows double precision (``k`` then rounds to 1.0,
    which is the closest representable description).
    """

    k: float
    kc: Union[float, mpmath.mpf]

    def __post_init__(self) -> None:
        if not (math.isfinite(self.k) and 0.0 <= self.k <= 1.0):
            raise ValueError(f"modulus k={self.k!r} outside [0, 1)")
        if not self.kc > 0.0:
            raise ValueError("complementary modulus must be positive (k < 1)")
        resid = float(self.k * self.k + self.kc * self.kc) - 1.0
        if abs(resid) > 1e-12:
            raise ValueError(f"k^2 + kc^2 = 1 violated by {resid:.3e}")

    @classmethod
    def from_k(cls, k: float) -> "Modulus":
        k = float(k)
        if not (math.isfinite(k) and 0.0 <= k < 1.0):
            raise ValueError(f"modulus k={k!r} outside [0, 1)")
        if k >= 1.0 - 1e-12:
            # doubles cannot separate such k from 1; construct from the
            # complement instead (modulus_from_rate does this internally)
            raise ValueError("modulus k >= 1 - 1e-12 is outside the supported domain")
        return cls(k, math.sqrt((1.0 - k) * (1.0 + k)))

    @classmethod
    def from_complement(cls, kc: Union[float, mpmath.mpf]) -> "Modulus":
        if not kc > 0.0 or kc > 1.0:
            raise ValueError(f"complementary modulus kc={kc!r} outside (0, 1]")
        kc2 = float(kc * kc)
        k = math.sqrt(1.0 - kc2) if kc2 < 1.0 else 0.0
        if isinstance(kc, mpmath.mpf) and kc > 1e-300:
            kc = float(kc)
        return cls(k, kc)

    @property
    def ln_kc(self) -> float:
        """Natural log of the complement (finite for every legal modulus)."""
        if isinstance(self.kc, mpmath.mpf):
            return float(mpmath.log(self.kc))
        return math.log(self.kc)

    @property
    def kc2(self) -> float:
        """Complement squared as a double; underflows to 0.0 harmlessly."""
        return float(self.kc * self.kc)


class JacobiTriple(NamedTuple):
    """Values of sn, cn, dn at a common argument and modulus."""

    sn: Union[float, np.ndarray]
    cn: Union[float, np.ndarray]
    dn: Union[float, np.ndarray]


ModulusLike = Union[Modulus, float, int]


def as_modulus(k: ModulusLike) -> Modulus:
    if isinstance(k, Modulus):
        return k
    return Modulus.from_k(float(k))


def _agm_record(k: float, kc: float) -> tuple[list[float], list[float]]:
    """AGM sequences a_n, c_n starting from (1, kc, k), until |a-b| <= 1e-16 a."""
    a_seq = [1.0]
    c_seq = [k]
    a, b = 1.0, kc
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) <= 1e-16 * a:
            return a_seq, c_seq
        c = 0.5 * (a - b)
        a_new, b_new = 0.5 * (a + b), math.sqrt(a * b)
        if a_new == a and b_new == b:  # |a-b| at the rounding floor (~1 ulp)
            return a_seq, c_seq
        a, b = a_new, b_new
        a_seq.append(a)
        c_seq.append(c)
    raise RuntimeError("AGM failed to converge")  # pragma: no cover


def _k_e_from_record(a_seq: list[float], c_seq: list[float]) -> tuple[float, float]:
    big_k = math.pi / (2.0 * a_seq[-1])
    csum = 0.0
    p = 0.5
    for j, c in enumerate(c_seq):
        if j > 0:
            p *= 2.0
        csum += p * c * c
    return big_k, big_k * (1.0 - csum)


def _complete_k_e(m: Modulus) -> tuple[float, float]:
    kc = m.kc
    if isinstance(kc, mpmath.mpf) or kc < _KC_ASYMPTOTIC:
        big = LN4 - m.ln_kc  # log(4/kc)
        kc2 = m.kc2
        return big + 0.25 * (big - 1.0) * kc2, 1.0 + 0.5 * (big - 0.5) * kc2
    return _k_e_from_record(*_agm_record(m.k, kc))


def complete_k(k: ModulusLike) -> float:
    """Complete elliptic integral of the first kind,
    K(k) = int_0^{pi/2} (1 - k^2 sin^2 t)^{-1/2} dt."""
    return _complete_k_e(as_modulus(k))[0]


def complete_e(k: ModulusLike) -> float:
    """Complete elliptic integral of the second kind,
    E(k) = int_0^{pi/2} sqrt(1 - k^2 sin^2 t) dt."""
    return _complete_k_e(as_modulus(k))[1]


def jacobi(u, k: ModulusLike) -> JacobiTriple:
    """Jacobi elliptic functions (sn, cn, dn) at argument ``u``, modulus ``k``.

    Accepts a scalar or ndarray argument.  The argument is range-reduced
    modulo the real period 4K before the Landen/phase recursion, so large
    arguments (|u| up to ~1e4) keep full absolute accuracy.
    """
    m = as_modulus(k)
    u_arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u_arr)):
        raise ValueError("jacobi argument must be finite")
    scalar = u_arr.ndim == 0
    uu = np.atleast_1d(u_arr)

    if m.k == 0.0:
        sn, cn, dn = np.sin(uu), np.cos(uu), np.ones_like(uu)
    else:
        kc = m.kc
        if isinstance(kc, mpmath.mpf) or kc < _KC_JACOBI_MIN:
            raise ValueError("modulus too close to 1 for double-precision Jacobi values")
        a_seq, c_seq = _agm_record(m.k, kc)
        n = len(a_seq) - 1
        period = 2.0 * math.pi / a_seq[-1]  # 4K
        uu = uu - period * np.round(uu / period)
        phi = (2.0**n * a_seq[-1]) * uu
        phi1 = phi
        for j in range(n, 0, -1):
            s = np.clip((c_seq[j] / a_seq[j]) * np.sin(phi), -1.0, 1.0)
            if j == 1:
                phi1 = phi
            phi = 0.5 * (phi + np.arcsin(s))
        sn = np.sin(phi)
        cn = np.cos(phi)
        if n == 0:
            dn = np.hypot(kc, m.k * cn)
        else:
            dnfac = np.cos(phi1 - phi)
            near_quarter = np.abs(dnfac) < 0.1
            # dn = cn / cos(phi1 - phi) is 0/0 at the quarter period; the
            # identity dn^2 = kc^2 + k^2 cn^2 is exact and well conditioned there
            dn = np.where(
                near_quarter,
                np.hypot(kc, m.k * cn),
                cn / np.where(near_quarter, 1.0, dnfac),
            )

    if scalar:
        return JacobiTriple(float(sn[0]), float(cn[0]), float(dn[0]))
    return JacobiTriple(sn, cn, dn)


def sn_integral_log(u, k: ModulusLike):
    """log((dn(u,k) - k*cn(u,k)) / (1-k)), which equals k * int_0^u sn(v,k) dv.

    Rejects k = 0, where the antiderivative degenerates.  Uses
    (dn - k*cn) * (dn + k*cn) = 1 - k^2 to pick the cancellation-free branch.
    """
    m = as_modulus(k)
    if m.k == 0.0:
        raise ValueError("sn_integral_log is undefined at k = 0")
    _, cn, dn = jacobi(u, m)
    cn = np.atleast_1d(np.asarray(cn, dtype=float))
    dn = np.atleast_1d(np.asarray(dn, dtype=float))
    one_minus_k = m.kc2 / (1.0 + m.k)
    pos = cn >= 0.0
    ratio = np.empty_like(cn)
    ratio[pos] = (1.0 + m.k) / (dn[pos] + m.k * cn[pos])
    ratio[~pos] = (dn[~pos] - m.k * cn[~pos]) / one_minus_k
    out = np.log(ratio)
    if np.ndim(u) == 0:
        return float(out[0])
    return out


def rate_from_modulus(k: ModulusLike) -> float:
    """The growth rate r = 2K(k) * (2E(k) - (1-k^2) K(k)) at which a modulus-k
    period-2 orbit exists.  Strictly increasing, pi^2/2 at k = 0."""
    m = as_modulus(k)
    big_k, big_e = _complete_k_e(m)
    return 2.0 * big_k * (2.0 * big_e - big_k * m.kc2)


def _rate_and_slope_wrt_ln_kc(ln_kc: float) -> tuple[float, float]:
    """Rate and its derivative with respect to log(kc), for the near-1 solve."""
    kc = math.exp(ln_kc) if ln_kc >= -700.0 else mpmath.exp(ln_kc)
    m = Modulus.from_complement(kc)
    big_k, big_e = _complete_k_e(m)
    kc2 = m.kc2
    rate = 2.0 * big_k * (2.0 * big_e - big_k * kc2)
    # dL/dk = 4 E K'(k) with K' = (E/kc^2 - K)/k, and dk/dln_kc = -kc^2/k;
    # this branch only runs for kc <= 0.15, so k^2 = 1 - kc2 >= 0.97
    slope = -4.0 * big_e * (big_e - big_k * kc2) / (1.0 - kc2)
    return rate, slope


def _rate_and_slope_wrt_k(k: float) -> tuple[float, float]:
    m = Modulus.from_k(k)
    big_k, big_e = _complete_k_e(m)
    kc2 = m.kc2
    rate = 2.0 * big_k * (2.0 * big_e - big_k * kc2)
    k_prime = (big_e / kc2 - big_k) / k if k > 0.0 else 0.0
    return rate, 4.0 * big_e * k_prime


# Rate at k = 0.99; above this the solve runs in log-complement space where
# double resolution is uniform all the way to the Hopf-infinite limit.
_RATE_K_SPACE_MAX = rate_from_modulus(Modulus.from_k(0.99))


def modulus_from_rate(r: float) -> Modulus:
    """Invert the modulus -> rate map: the unique k in (0,1) with rate(k) = r.

    Requires r > pi^2/2.  Safeguarded bisection plus Newton polish; the
    result satisfies |rate(k) - r| <= 1e-12 * r.  Supported for r up to 1e6
    (the modulus complement is then ~4*exp(-r/4), carried as an mpf once it
    underflows double precision).
    """
    r = float(r)
    if not math.isfinite(r) or r <= HOPF_RATE:
        raise ValueError(f"no modulus exists for rate r={r!r} <= pi^2/2")
    if r > 1e6:
        raise ValueError("rate above 1e6 is outside the supported range")
    tol = 1e-12 * r

    if r <= _RATE_K_SPACE_MAX:
        lo, hi = 0.0, 0.991
        f_lo = HOPF_RATE - r
        x = min(math.sqrt((r - HOPF_RATE) / HOPF_RATE), 0.9)  # small-k seed
        for _ in range(200):
            fx, slope = _rate_and_slope_wrt_k(x)
            fx -= r
            if abs(fx) <= tol:
                return Modulus.from_k(x)
            if fx * f_lo > 0.0:
                lo = x
                f_lo = fx
            else:
                hi = x
            step = fx / slope if slope > 0.0 else math.inf
            x_new = x - step
            if not lo < x_new < hi:
                x_new = 0.5 * (lo + hi)
            if x_new == x:
                break
            x = x_new
        if abs(fx) > tol:
            raise RuntimeError(f"modulus bracket stalled at rate r={r!r}")
        return Modulus.from_k(x)

    # near-1 regime: solve in ln(kc).  rate ~ 4*(log 4 - ln_kc), slope -> -4.
    lo = math.log(math.sqrt(1.0 - 0.99**2))  # matches k = 0.99
    hi_guess = LN4 - r / 4.0
    x = hi_guess
    f_lo = _rate_and_slope_wrt_ln_kc(lo)[0] - r
    hi = hi_guess - 8.0  # rate(hi) > r certainly
    for _ in range(200):
        fx, slope = _rate_and_slope_wrt_ln_kc(x)
        fx -= r
        if abs(fx) <= tol:
            break
        if fx * f_lo > 0.0:
            lo = x
            f_lo = fx
        else:
            hi = x
        x_new = x - fx / slope
        if not hi < x_new < lo:
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            break
        x = x_new
    else:  # pragma: no cover
        raise RuntimeError(f"modulus solve failed to converge at rate r={r!r}")
    if abs(fx) > tol:
        raise RuntimeError(f"modulus solve stalled at rate r={r!r}")
    kc = math.exp(x) if x >= -700.0 else mpmath.exp(mpmath.mpf(x))
    return Modulus.from_complement(kc)
