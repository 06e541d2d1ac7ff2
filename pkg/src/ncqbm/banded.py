"""Banded crossed-product arithmetic over the circle.

Elements are finite sums  a = sum_k f_k(U) V^k  with f_k a function on the
circle [0,1).  Under the locked torus conventions:

    product:  (f(U) V^k)(g(U) V^j) = f(x) g(x - k theta) (U) V^{k+j}
    adjoint:  band j of a* is  conj(f_{-j}(x - j theta))

Band functions are stored as N uniform grid samples, optionally paired with an
exact piecewise descriptor (constant / linear / sqrt-of-quadratic pieces) so
that analytically constructed elements evaluate exactly off the grid.  All
norms are grid sup-norms.

The trapezoid projection lives here: a Hermitian element with bands
{-1, 0, 1}, plateau profile f_0 and bump f_1 = sqrt(f_0 - f_0^2) on the
descending ramp, with trace equal to the effective rotation angle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

import numpy as np

from .torus import AlgebraContext

DEFAULT_GRID = 4096

# Bands whose grid sup-norm is at or below this are dropped from the element.
BAND_DROP_TOL = 1e-15


def _frac(x: float) -> float:
    f = x - math.floor(x)
    # x - floor(x) rounds to 1.0 for tiny negative x; fold back into [0, 1).
    return f if f < 1.0 else 0.0


# -- exact piecewise descriptors ---------------------------------------------------


@dataclass(frozen=True)
class Piece:
    """One piece of an exact circle-function descriptor.

    The piece covers [start, start + length) mod 1 and is evaluated in the
    local coordinate u = (x - start) mod 1 in [0, length):

        kind "const":    params (c,)          value c
        kind "linear":   params (c0, c1)      value c0 + c1 u
        kind "sqrtquad": params (q0, q1, q2)  value sqrt(max(q0 + q1 u + q2 u^2, 0))

    The base value is real; `scale` carries any complex multiplier.  Local
    coordinates make circle shifts exact: shifting only moves `start`.
    """

    start: float
    length: float
    kind: str
    params: tuple
    scale: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        if not (0.0 < self.length <= 1.0):
            raise ValueError("piece length must lie in (0, 1]")
        if self.kind not in ("const", "linear", "sqrtquad"):
            raise ValueError(f"unknown piece kind {self.kind!r}")

    def base_values(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "const":
            return np.full_like(u, self.params[0])
        if self.kind == "linear":
            c0, c1 = self.params
            return c0 + c1 * u
        q0, q1, q2 = self.params
        return np.sqrt(np.clip(q0 + u * (q1 + q2 * u), 0.0, None))

    def base_integral(self) -> float:
        length = self.length
        if self.kind == "const":
            return self.params[0] * length
        if self.kind == "linear":
            c0, c1 = self.params
            return c0 * length + c1 * length * length / 2.0
        return _sqrtquad_integral(self.params, 0.0, length)


def _sqrtquad_integral(params: tuple, lo: float, hi: float) -> float:
    """Integral of sqrt(max(q0 + q1 u + q2 u^2, 0)) over [lo, hi], q2 < 0.

    Writes the quadratic as -q2 (u - r1)(r2 - u) and uses the circular-segment
    antiderivative.  Only the concave case arises here (bump profiles).
    """
    q0, q1, q2 = params
    if q2 >= 0.0:
        raise ValueError("sqrtquad integral implemented for concave quadratics only")
    disc = q1 * q1 - 4.0 * q0 * q2
    if disc <= 0.0:
        return 0.0
    sq = math.sqrt(disc)
    r1 = (-q1 + sq) / (2.0 * q2)
    r2 = (-q1 - sq) / (2.0 * q2)
    r1, r2 = min(r1, r2), max(r1, r2)
    a = max(lo, r1)
    b = min(hi, r2)
    if b <= a:
        return 0.0
    scale = math.sqrt(-q2)
    mid = (r1 + r2) / 2.0
    rad = (r2 - r1) / 2.0

    def anti(u: float) -> float:
        w = max(-1.0, min(1.0, (u - mid) / rad))
        return ((u - mid) * math.sqrt(max((u - r1) * (r2 - u), 0.0)) / 2.0
                + rad * rad / 2.0 * math.asin(w))

    return scale * (anti(b) - anti(a))


class ExactPiecewise:
    """A finite union of non-overlapping pieces; zero off their supports."""

    __slots__ = ("pieces",)

    def __init__(self, pieces: Iterable[Piece]) -> None:
        self.pieces = tuple(pieces)

    def eval(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for piece in self.pieces:
            u = np.mod(x - piece.start, 1.0)
            u[u >= 1.0] = 0.0  # mod can round up to 1.0 for tiny negatives
            mask = u < piece.length
            if np.any(mask):
                out[mask] += piece.scale * piece.base_values(u[mask])
        return out

    def shifted(self, s: float) -> "ExactPiecewise":
        """Descriptor of x -> f(s + x): supports move, local data unchanged."""
        return ExactPiecewise(
            Piece(_frac(p.start - s), p.length, p.kind, p.params, p.scale)
            for p in self.pieces)

    def conjugated(self) -> "ExactPiecewise":
        return ExactPiecewise(
            Piece(p.start, p.length, p.kind, p.params, p.scale.conjugate())
            for p in self.pieces)

    def scaled(self, z: complex) -> "ExactPiecewise":
        return ExactPiecewise(
            Piece(p.start, p.length, p.kind, p.params, p.scale * z)
            for p in self.pieces)

    def integral(self) -> complex:
        return sum(p.scale * p.base_integral() for p in self.pieces)


# -- circle functions -----------------------------------------------------------------

_GRID_CACHE: dict[int, np.ndarray] = {}


def grid(n: int) -> np.ndarray:
    """The uniform grid j/n, cached."""
    if n not in _GRID_CACHE:
        _GRID_CACHE[n] = np.arange(n, dtype=float) / n
    return _GRID_CACHE[n]


class CircleFunction:
    """Complex function on [0,1): N grid samples plus optional exact descriptor.

    The grid size should be a power of two.  When an exact descriptor is
    present, off-grid evaluation uses it; otherwise values are linearly
    interpolated between neighbouring samples (periodic).
    """

    __slots__ = ("n", "samples", "exact")

    def __init__(self, samples: np.ndarray,
                 exact: Optional[ExactPiecewise] = None) -> None:
        samples = np.asarray(samples, dtype=complex)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        self.n = samples.shape[0]
        self.samples = samples
        self.exact = exact

    @classmethod
    def from_exact(cls, exact: ExactPiecewise, n: int = DEFAULT_GRID) -> "CircleFunction":
        return cls(exact.eval(grid(n)), exact)

    @classmethod
    def zero(cls, n: int = DEFAULT_GRID) -> "CircleFunction":
        return cls(np.zeros(n, dtype=complex))

    @classmethod
    def const(cls, value: complex, n: int = DEFAULT_GRID) -> "CircleFunction":
        exact = ExactPiecewise([Piece(0.0, 1.0, "const", (1.0,), complex(value))])
        return cls(np.full(n, complex(value)), exact)

    def eval_at(self, x: np.ndarray) -> np.ndarray:
        if self.exact is not None:
            return self.exact.eval(x)
        pos = np.mod(np.asarray(x, dtype=float), 1.0) * self.n
        i0 = np.floor(pos).astype(np.int64)
        w = pos - i0
        i0 = np.mod(i0, self.n)
        i1 = np.mod(i0 + 1, self.n)
        return self.samples[i0] * (1.0 - w) + self.samples[i1] * w

    def sup(self) -> float:
        return float(np.max(np.abs(self.samples))) if self.n else 0.0

    def integral(self) -> complex:
        if self.exact is not None:
            return complex(self.exact.integral())
        return complex(np.mean(self.samples))

    def conjugate(self) -> "CircleFunction":
        exact = self.exact.conjugated() if self.exact is not None else None
        return CircleFunction(np.conj(self.samples), exact)

    def exact_matches_grid(self, tol: float = 1e-14) -> bool:
        if self.exact is None:
            return True
        return float(np.max(np.abs(self.exact.eval(grid(self.n)) - self.samples))) <= tol


# -- banded elements ---------------------------------------------------------------------


class BandedElement:
    """Finite sum over bands k of f_k(U) V^k in a fixed-angle banded algebra."""

    __slots__ = ("context", "n", "bands")

    def __init__(self, context: AlgebraContext, bands: Mapping[int, CircleFunction],
                 n: Optional[int] = None) -> None:
        self.context = context
        kept: dict[int, CircleFunction] = {}
        sizes = {f.n for f in bands.values()}
        if len(sizes) > 1:
            raise ValueError("all bands must share one grid size")
        if n is None:
            n = sizes.pop() if sizes else DEFAULT_GRID
        self.n = n
        for k, f in bands.items():
            if f.n != n:
                raise ValueError("band grid size mismatch")
            sup = f.sup()
            # Non-finite bands are kept so that overflow in an iteration
            # surfaces instead of vanishing through the drop rule.
            if sup > BAND_DROP_TOL or not math.isfinite(sup):
                kept[int(k)] = f
        self.bands = kept

    @classmethod
    def identity(cls, context: AlgebraContext, n: int = DEFAULT_GRID) -> "BandedElement":
        return cls(context, {0: CircleFunction.const(1.0, n)}, n)

    @classmethod
    def from_band(cls, context: AlgebraContext, k: int, f: CircleFunction) -> "BandedElement":
        return cls(context, {k: f}, f.n)

    def band(self, k: int) -> CircleFunction:
        f = self.bands.get(k)
        return f if f is not None else CircleFunction.zero(self.n)

    def band_sups(self) -> dict[int, float]:
        return {k: f.sup() for k, f in sorted(self.bands.items())}

    def off_diagonal_sup(self) -> float:
        """Largest sup-norm among bands k != 0."""
        return max((f.sup() for k, f in self.bands.items() if k != 0), default=0.0)

    def __sub__(self, other: "BandedElement") -> "BandedElement":
        self._check(other)
        keys = set(self.bands) | set(other.bands)
        out = {k: CircleFunction(self.band(k).samples - other.band(k).samples)
               for k in keys}
        return BandedElement(self.context, out, self.n)

    def __add__(self, other: "BandedElement") -> "BandedElement":
        self._check(other)
        keys = set(self.bands) | set(other.bands)
        out = {k: CircleFunction(self.band(k).samples + other.band(k).samples)
               for k in keys}
        return BandedElement(self.context, out, self.n)

    def _check(self, other: "BandedElement") -> None:
        if self.context.theta != other.context.theta:
            raise ValueError("incompatible theta")
        if self.n != other.n:
            raise ValueError("grid size mismatch")

    def __repr__(self) -> str:
        sups = ", ".join(f"{k}: {s:.3g}" for k, s in self.band_sups().items())
        return (f"BandedElement(theta={self.context.theta:.12g}, n={self.n}, "
                f"band sups {{{sups}}})")


def banded_mul(a: BandedElement, b: BandedElement) -> BandedElement:
    """(f_k V^k)(g_j V^j) accumulates f_k(x) g_j(x - k theta) at band k + j."""
    a._check(b)
    theta = a.context.theta
    x = grid(a.n)
    acc: dict[int, np.ndarray] = {}
    for k, f in a.bands.items():
        fa = f.samples
        for j, g in b.bands.items():
            gs = g.eval_at(x - k * theta) if k != 0 else g.samples
            key = k + j
            if key in acc:
                acc[key] += fa * gs
            else:
                acc[key] = fa * gs
    return BandedElement(a.context, {k: CircleFunction(v) for k, v in acc.items()}, a.n)


def star_banded(a: BandedElement) -> BandedElement:
    """Adjoint: band j of a* is conj(f_{-j}(x - j theta))."""
    theta = a.context.theta
    x = grid(a.n)
    out: dict[int, CircleFunction] = {}
    for k, f in a.bands.items():
        j = -k
        samples = np.conj(f.eval_at(x - j * theta)) if j != 0 else np.conj(f.samples)
        exact = f.exact.shifted(-j * theta).conjugated() if f.exact is not None else None
        out[j] = CircleFunction(samples, exact)
    return BandedElement(a.context, out, a.n)


def translate_action(a: BandedElement, s: float, t: float) -> BandedElement:
    """Torus translation: band k maps to f_k(s + x) e^{2 pi i k t}."""
    x = grid(a.n)
    out: dict[int, CircleFunction] = {}
    for k, f in a.bands.items():
        phase = np.exp(2j * np.pi * k * t)
        samples = f.eval_at(x + s) * phase
        exact = f.exact.shifted(s).scaled(phase) if f.exact is not None else None
        out[k] = CircleFunction(samples, exact)
    return BandedElement(a.context, out, a.n)


def trace_banded(a: BandedElement) -> complex:
    """Canonical trace: the integral of the band-0 function."""
    return a.band(0).integral()


def supdiff(a: BandedElement, b: BandedElement) -> float:
    """Sup over bands and grid of |a - b|."""
    a._check(b)
    keys = set(a.bands) | set(b.bands)
    out = 0.0
    for k in keys:
        out = max(out, float(np.max(np.abs(a.band(k).samples - b.band(k).samples))))
    return out


# -- projection checks --------------------------------------------------------------------


@dataclass
class ProjectionReport:
    is_projection: bool
    sup_idempotent: float
    sup_hermitian: float
    band_residuals: dict[int, float]
    trace: complex
    tol: float


def is_projection(a: BandedElement, tol: float = 1e-10) -> ProjectionReport:
    """Checks a^2 = a and a* = a in grid sup-norm, with per-band residuals."""
    sq = banded_mul(a, a)
    diff = sq - a
    band_res = {k: f.sup() for k, f in sorted(diff.bands.items())}
    for k in sorted(set(a.bands) | set(sq.bands)):
        band_res.setdefault(k, 0.0)
    sup_sq = max(band_res.values(), default=0.0)
    sup_st = supdiff(star_banded(a), a)
    ok = sup_sq <= tol and sup_st <= tol
    return ProjectionReport(ok, sup_sq, sup_st, band_res, trace_banded(a), tol)


@dataclass
class MembershipReport:
    member: bool
    far_band_sup: float
    pairing_residual: float
    hermitian_band0_residual: float


def member_of_X(a: BandedElement, tol: float = 1e-10) -> MembershipReport:
    """Membership in the Hermitian three-band class.

    Requires bands outside {-1, 0, 1} below tol, a real band 0, and the
    Hermitian pairing f_{-1}(t) = conj(f_1(t + theta)).  The pairing needs
    f_1 at off-grid points: exact when band 1 carries a descriptor, linearly
    interpolated otherwise, so for grid-only elements the residual carries an
    interpolation term of order (slope of f_1) / n and callers should pick tol
    accordingly.
    """
    theta = a.context.theta
    x = grid(a.n)
    far = max((f.sup() for k, f in a.bands.items() if abs(k) > 1), default=0.0)
    herm0 = float(np.max(np.abs(np.imag(a.band(0).samples)))) if a.bands.get(0) else 0.0
    f1_shift = a.band(1).eval_at(x + theta)
    pairing = float(np.max(np.abs(a.band(-1).samples - np.conj(f1_shift))))
    ok = far <= tol and pairing <= tol and herm0 <= tol
    return MembershipReport(ok, far, pairing, herm0)


# -- trapezoid projection -------------------------------------------------------------------


@dataclass(frozen=True)
class RieffelProjectionSpec:
    """Parameters of the trapezoid projection at angle {scale_k * theta}.

    The projection lives in the banded copy generated by the k-th powers of
    the torus unitaries, whose rotation angle is the fractional part
    theta_e = {scale_k * theta}.  Validity needs 0 < epsilon < theta_e and
    theta_e + epsilon <= 1 (otherwise the bump wraps onto the ascending ramp
    and the trapezoid identities fail).
    """

    theta: float
    epsilon: float
    scale_k: int = 1

    def __post_init__(self) -> None:
        if not (0.0 < self.theta < 1.0):
            raise ValueError("theta must lie in (0,1)")
        if int(self.scale_k) != self.scale_k or self.scale_k < 1:
            raise ValueError("scale_k must be a positive integer")
        theta_e = self.effective_angle
        if theta_e == 0.0:
            raise ValueError(f"effective angle frac({self.scale_k} * theta) vanishes")
        if not (0.0 < self.epsilon < theta_e):
            raise ValueError(
                f"epsilon out of range: need 0 < epsilon < {theta_e}")

    @property
    def effective_angle(self) -> float:
        return _frac(self.scale_k * self.theta)


def build_rieffel_projection(spec: RieffelProjectionSpec,
                             n: int = DEFAULT_GRID) -> BandedElement:
    """The trapezoid projection: bands {-1, 0, 1}, trace = effective angle.

    f_0 ramps linearly from 0 to 1 on [0, eps], holds 1 on [eps, theta_e],
    ramps back down on [theta_e, theta_e + eps]; f_1 = sqrt(f_0 - f_0^2) on
    the descending ramp; f_{-1}(t) = conj(f_1(t + theta_e)).
    """
    theta_e = spec.effective_angle
    eps = spec.epsilon
    if theta_e + eps > 1.0:
        raise ValueError("epsilon out of range: bump wraps past the ascending ramp")
    f0_pieces = [
        Piece(0.0, eps, "linear", (0.0, 1.0 / eps)),
        Piece(theta_e, eps, "linear", (1.0, -1.0 / eps)),
    ]
    if theta_e > eps:
        f0_pieces.insert(1, Piece(eps, theta_e - eps, "const", (1.0,)))
    bump = (0.0, 1.0 / eps, -1.0 / (eps * eps))
    f1_pieces = [Piece(theta_e, eps, "sqrtquad", bump)]
    fm1_pieces = [Piece(0.0, eps, "sqrtquad", bump)]
    ctx = AlgebraContext(theta_e)
    bands = {
        0: CircleFunction.from_exact(ExactPiecewise(f0_pieces), n),
        1: CircleFunction.from_exact(ExactPiecewise(f1_pieces), n),
        -1: CircleFunction.from_exact(ExactPiecewise(fm1_pieces), n),
    }
    return BandedElement(ctx, bands, n)


def indicator_banded(context: AlgebraContext, arcs: Iterable[tuple[float, float]],
                     n: int = DEFAULT_GRID) -> BandedElement:
    """Diagonal element chi_S(U) for a union of half-open arcs [a, b) in [0,1)."""
    pieces = [Piece(a, b - a, "const", (1.0,)) for a, b in arcs if b > a]
    if not pieces:
        return BandedElement(context, {}, n)
    return BandedElement(context,
                         {0: CircleFunction.from_exact(ExactPiecewise(pieces), n)}, n)


# -- serialization -----------------------------------------------------------------------------


def circle_to_csv(f: CircleFunction) -> str:
    """CSV rows 'index,re,im', one per grid sample."""
    lines = ["index,re,im"]
    for i, v in enumerate(f.samples):
        lines.append(f"{i},{v.real!r},{v.imag!r}")
    return "\n".join(lines) + "\n"


def save_banded(a: BandedElement, directory: str | Path, basename: str) -> Path:
    """Writes one CSV per band plus a JSON manifest mapping k -> CSV filename."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest: dict[str, str] = {}
    for k in sorted(a.bands):
        fname = f"{basename}_band_{k}.csv"
        (directory / fname).write_text(circle_to_csv(a.bands[k]))
        manifest[str(k)] = fname
    meta = {"theta": a.context.theta, "n": a.n, "bands": manifest}
    path = directory / f"{basename}.json"
    path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return path
