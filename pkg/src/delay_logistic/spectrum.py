"""Roots of the characteristic equation of the linearization at x = 1.

The linearization of the delay equation at its positive equilibrium has
characteristic function

    F(lambda) = lambda + r * (1 - exp(-lambda)) / lambda,

an entire function once the removable singularity at 0 is filled with
F(0) = r.  Roots are located inside a search rectangle by the argument
principle: the winding number of F around each box is a Gauss-Legendre
boundary integral of F'/F (node count doubled until the integer stabilizes),
boxes are quadrisected until they isolate single roots, and Newton's method
polishes each root to absolute residual <= 1e-12.

A conjugate pair sits exactly on the imaginary axis at omega = (2n+1)*pi
when r = ((2n+1)*pi)^2 / 2; the pair crosses with d(Re lambda)/dr =
1/(4 + (r/omega)^2) > 0, which is what ``hopf_crossing_derivative`` returns.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "CharRoot",
    "SpectrumReport",
    "char_function",
    "char_derivative",
    "find_roots",
    "hopf_crossing_derivative",
    "track_root",
    "ContourError",
]

_SERIES_RADIUS = 1e-4
# (1 - exp(-z))/z = sum (-z)^n / (n+1)!, kept through z^6
_G_COEF = [1.0, -1 / 2, 1 / 6, -1 / 24, 1 / 120, -1 / 720, 1 / 5040]
_GP_COEF = [-1 / 2, 1 / 3, -1 / 8, 1 / 30, -1 / 144, 1 / 840]


class ContourError(RuntimeError):
    """The boundary winding integral failed to stabilize (root on/near contour)."""


def _polyval(coefs, z):
    acc = np.zeros_like(z) if isinstance(z, np.ndarray) else 0.0
    for c in reversed(coefs):
        acc = acc * z + c
    return acc


def char_function(lam, r: float):
    """F(lambda) = lambda + r (1 - e^-lambda)/lambda, with F(0) = r.

    Scalar complex or ndarray argument; a truncated series handles
    |lambda| < 1e-4 where the direct quotient cancels.
    """
    if r <= 0.0:
        raise ValueError("growth rate r must be positive")
    if isinstance(lam, np.ndarray):
        small = np.abs(lam) < _SERIES_RADIUS
        safe = np.where(small, 1.0, lam)
        with np.errstate(invalid="ignore", over="ignore"):
            g = np.where(small, _polyval(_G_COEF, lam), (1.0 - np.exp(-safe)) / safe)
        return lam + r * g
    lam = complex(lam)
    if abs(lam) < _SERIES_RADIUS:
        return lam + r * _polyval(_G_COEF, lam)
    return lam + r * (1.0 - cmath.exp(-lam)) / lam


def char_derivative(lam, r: float):
    """F'(lambda) = 1 + r (e^-lambda (1 + lambda) - 1) / lambda^2."""
    if isinstance(lam, np.ndarray):
        small = np.abs(lam) < _SERIES_RADIUS
        safe = np.where(small, 1.0, lam)
        with np.errstate(invalid="ignore", over="ignore"):
            gp = np.where(
                small,
                _polyval(_GP_COEF, lam),
                (np.exp(-safe) * (1.0 + safe) - 1.0) / (safe * safe),
            )
        return 1.0 + r * gp
    lam = complex(lam)
    if abs(lam) < _SERIES_RADIUS:
        return 1.0 + r * _polyval(_GP_COEF, lam)
    return 1.0 + r * (cmath.exp(-lam) * (1.0 + lam) - 1.0) / (lam * lam)


@dataclass(frozen=True)
class CharRoot:
    """A located characteristic root with its verified residual."""

    value: complex
    residual: float

    @property
    def re(self) -> float:
        return self.value.real

    @property
    def im(self) -> float:
        return self.value.imag


@dataclass(frozen=True)
class SpectrumReport:
    """Roots inside a search rectangle, sorted rightmost-first, with verdict."""

    r: float
    rect: tuple[float, float, float, float]
    roots: tuple[CharRoot, ...]
    verdict: str  # "stable" | "unstable" | "critical"

    @property
    def rightmost(self) -> CharRoot:
        return self.roots[0]

    def to_json(self) -> str:
        items = ", ".join(
            '{"re": %s, "im": %s, "residual": %s}'
            % (format(c.re, ".17g"), format(c.im, ".17g"), format(c.residual, ".3g"))
            for c in self.roots
        )
        return '{"r": %s, "verdict": "%s", "roots": [%s]}' % (
            format(self.r, ".17g"),
            self.verdict,
            items,
        )


_GAUSS_PANEL = 16


@lru_cache(maxsize=4)
def _gauss_nodes(n: int):
    return np.polynomial.legendre.leggauss(n)


def _side_nodes(a: complex, b: complex, panels: int):
    """Composite Gauss-Legendre nodes/weights on the segment [a, b]."""
    x, w = _gauss_nodes(_GAUSS_PANEL)
    seg = (b - a) / panels
    mids = a + seg * (np.arange(panels) + 0.5)
    z = (mids[:, None] + (0.5 * seg) * x[None, :]).ravel()
    wz = np.broadcast_to((0.5 * seg) * w, (panels, _GAUSS_PANEL)).ravel()
    return z, wz


def _winding_number(rect, r: float) -> int:
    """Zeros of F inside the rectangle, by (1/2 pi i) * contour of F'/F.

    Composite Gauss-Legendre per side (16-node panels, 64 nodes per side to
    start), panel count doubled until two consecutive levels produce the same
    integer with residual < 0.05.
    """
    re_lo, re_hi, im_lo, im_hi = rect
    corners = [
        complex(re_lo, im_lo),
        complex(re_hi, im_lo),
        complex(re_hi, im_hi),
        complex(re_lo, im_hi),
    ]
    prev = None
    for panels in (4, 8, 16, 32, 64, 128, 256):
        total = 0.0j
        for a, b in zip(corners, corners[1:] + corners[:1]):
            z, wz = _side_nodes(a, b, panels)
            total += np.sum(wz * char_derivative(z, r) / char_function(z, r))
        wind = total / (2j * math.pi)
        nearest = round(wind.real)
        ok = abs(wind.imag) < 0.05 and abs(wind.real - nearest) < 0.05
        if ok and prev == nearest:
            return int(nearest)
        prev = nearest if ok else None
    raise ContourError(f"winding integral failed to stabilize on {rect}")


def _winding_with_retry(rect, r: float) -> tuple[int, tuple]:
    """Winding count, nudging the box outward (1e-6 steps) if a root sits on it."""
    re_lo, re_hi, im_lo, im_hi = rect
    scale = max(1.0, re_hi - re_lo, im_hi - im_lo)
    for attempt in range(6):
        d = attempt * 1e-6 * scale
        box = (re_lo - d, re_hi + d, im_lo - d, im_hi + d)
        try:
            return _winding_number(box, r), box
        except ContourError:
            if attempt == 5:
                raise
    raise ContourError("unreachable")  # pragma: no cover


def _newton_root(z0: complex, r: float, max_iter: int = 80):
    z = complex(z0)
    for _ in range(max_iter):
        f = char_function(z, r)
        if abs(f) <= 1e-13:
            return z
        d = char_derivative(z, r)
        if d == 0.0:
            return None
        z2 = z - f / d
        if abs(z2 - z) <= 1e-16 * max(1.0, abs(z2)):
            z = z2
            break
        z = z2
    return z if abs(char_function(z, r)) <= 1e-12 else None


def _inside(z: complex, rect, margin: float = 0.0) -> bool:
    re_lo, re_hi, im_lo, im_hi = rect
    return (re_lo - margin <= z.real <= re_hi + margin) and (
        im_lo - margin <= z.imag <= im_hi + margin
    )


def _isolate(rect, r: float, depth: int = 0) -> list[complex]:
    count, box = _winding_with_retry(rect, r)
    if count == 0:
        return []
    re_lo, re_hi, im_lo, im_hi = box
    diag = math.hypot(re_hi - re_lo, im_hi - im_lo)
    if count == 1 and diag < 1.0:
        z0 = complex(0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi))
        root = _newton_root(z0, r)
        if root is not None and _inside(root, box, margin=1e-9 * max(1.0, diag)):
            return [root]
    if depth > 48 or diag < 1e-7:
        raise RuntimeError(
            f"count mismatch: cannot isolate {count} root(s) in box of size {diag:.2e}"
        )
    # midpoints slightly off-center: roots sit on symmetry lines (the real
    # axis in particular), and a centered cut would run straight through them
    mid_re = re_lo + 0.5037 * (re_hi - re_lo)
    mid_im = im_lo + 0.5037 * (im_hi - im_lo)
    found: list[complex] = []
    for sub in (
        (re_lo, mid_re, im_lo, mid_im),
        (mid_re, re_hi, im_lo, mid_im),
        (re_lo, mid_re, mid_im, im_hi),
        (mid_re, re_hi, mid_im, im_hi),
    ):
        found.extend(_isolate(sub, r, depth + 1))
    return found


def _dedupe(roots: list[complex], tol: float = 1e-6) -> list[complex]:
    unique: list[complex] = []
    for z in roots:
        if all(abs(z - u) > tol for u in unique):
            unique.append(z)
    return unique


def default_rect(r: float) -> tuple[float, float, float, float]:
    """Re in [-20, max(r,1)+1], Im in [-12 pi, 12 pi]: covers the first six
    conjugate pairs, and every root with positive real part satisfies
    |lambda| <= r."""
    return (-20.0, max(r, 1.0) + 1.0, -12.0 * math.pi, 12.0 * math.pi)


def find_roots(r: float, rect=None) -> SpectrumReport:
    """Locate all characteristic roots in the rectangle and judge stability.

    The winding count of the full rectangle must match the number of isolated
    roots (after conjugate-duplicate removal); otherwise a RuntimeError is
    raised rather than returning a silently incomplete spectrum.
    """
    if r <= 0.0:
        raise ValueError("growth rate r must be positive")
    if rect is None:
        rect = default_rect(r)
    re_lo, re_hi, im_lo, im_hi = (float(v) for v in rect)
    if not (re_hi > re_lo and im_hi > im_lo):
        raise ValueError("degenerate search rectangle")
    if re_hi < r:
        raise ValueError(
            "right edge of the rectangle must reach Re = r "
            "(roots with positive real part satisfy |lambda| <= r)"
        )
    rect = (re_lo, re_hi, im_lo, im_hi)

    total, box = _winding_with_retry(rect, r)
    roots = _dedupe(_isolate(box, r))
    if len(roots) != total:
        raise RuntimeError(
            f"count mismatch: {total} roots by winding, {len(roots)} isolated"
        )
    roots.sort(key=lambda z: (-z.real, -z.imag))
    char_roots = tuple(CharRoot(z, abs(char_function(z, r))) for z in roots)
    for c in char_roots:
        if c.residual > 1e-10:
            raise RuntimeError(f"root {c.value} has residual {c.residual:.2e}")
    if not char_roots:
        raise RuntimeError("no roots in rectangle; widen the search window")
    mu = char_roots[0].re
    verdict = "critical" if abs(mu) <= 1e-8 else ("unstable" if mu > 0.0 else "stable")
    return SpectrumReport(r=r, rect=rect, roots=char_roots, verdict=verdict)


def hopf_crossing_derivative(r: float, omega: float) -> float:
    """d(Re lambda)/dr of the critical pair at a purely imaginary crossing:
    1 / (4 + (r/omega)^2).

    (r, omega) must actually be a critical pair, i.e. F(i omega) = 0 to 1e-8.
    """
    resid = abs(char_function(1j * omega, r))
    if resid > 1e-8:
        raise ValueError(
            f"(r={r!r}, omega={omega!r}) is not a critical pair; |F(i omega)| = {resid:.2e}"
        )
    return 1.0 / (4.0 + (r / omega) ** 2)


def track_root(lam0: complex, r_values) -> list[complex]:
    """Newton continuation of a single root along a sequence of r values."""
    out = []
    z = complex(lam0)
    for r in r_values:
        z = _newton_root(z, float(r))
        if z is None:
            raise RuntimeError(f"continuation lost the root at r={r!r}")
        out.append(z)
    return out
