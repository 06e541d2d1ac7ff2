"""Exit times of the Brownian flow through shrinking projection plateaus.

For an irrational angle theta the continued-fraction denominators k_n give
angles v_n = ||k_n theta|| (distance to the nearest integer) tending to zero.
At level n the trapezoid projection with effective angle v_n and
eps_n = v_n / 2 has plateau [v_n/2, v_n); the state angle x_n = 3 v_n / 4
sits at its centre, a distance v_n / 4 from both edges.  The flow translates
the plateau by the first Brownian component, so the state survives exactly
while the running translate keeps x_n inside: a first-exit problem for W from
[-v_n/4, v_n/4], with closed-form mean a^2 / sigma^2 at half-width a.

Two Monte Carlo engines estimate the mean exit time gamma_n:

* reduced: per-path first exit of |W| from the interval, gamma = mean tau;
* operator: per-path running interval-set state [eps - min W, theta_e - max W]
  with survival of the state angle, gamma = trapezoid rule over the survival
  curve with a truncated, bounded tail.

Both engines evaluate survival through identical float comparisons, so their
per-path indicators agree exactly; they differ in how time is integrated.

The small-v asymptotics gamma ~ c1 v^{2/n0} + c2 v^{4/n0} yield an effective
dimension and mean-curvature invariant; a classical circle benchmark with
chordal radii recovers d = 2, H^2 = 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .banded import RieffelProjectionSpec
from .flow import stream_rng

DEFAULT_SIGMA2 = 2.0
STEPS_PER_MEAN_EXIT = 4096
SURVIVAL_TRUNCATION = 1e-4
ENGINE_CHUNK = 4096


# -- continued fractions and the family -----------------------------------------------


def convergents(theta: float, count: int) -> list[int]:
    """Denominators q_1..q_count of the continued fraction of theta.

    Raises for rational theta (the expansion terminates, so the denominators
    are eventually undefined) and for count > 20 (beyond double precision).
    """
    if not (0.0 < theta < 1.0):
        raise ValueError("theta must lie in (0,1)")
    if count < 1 or count > 20:
        raise ValueError("count must be between 1 and 20")
    x = theta
    q_mm, q_m = 0, 1
    out: list[int] = []
    while len(out) < count:
        if x < 1e-12:
            raise ValueError("rational theta: continued fraction terminates")
        x = 1.0 / x
        a = math.floor(x)
        if a > 10 ** 9:
            raise ValueError("rational theta: continued fraction terminates")
        q = a * q_m + q_mm
        q_mm, q_m = q_m, q
        out.append(q)
        x -= a
    if x < 1e-12:
        raise ValueError("rational theta: continued fraction terminates")
    return out


def reduced_angle(x: float) -> float:
    """Distance from x to the nearest integer."""
    return abs(x - round(x))


@dataclass(frozen=True)
class ExitLevel:
    index: int
    k: int
    v: float

    @property
    def epsilon(self) -> float:
        return self.v / 2.0

    @property
    def state_angle(self) -> float:
        return 3.0 * self.v / 4.0

    @property
    def half_width(self) -> float:
        """Distance from the state angle to either plateau edge."""
        return self.v / 4.0

    def projection_spec(self) -> RieffelProjectionSpec:
        # The projection lives in the angle variable of U^{+-k}; its
        # effective rotation parameter is the reduced angle v.
        return RieffelProjectionSpec(theta=self.v, epsilon=self.epsilon, scale_k=1)


@dataclass(frozen=True)
class ExitFamily:
    """Shrinking family of plateau exit problems along the convergents of theta."""

    theta: float
    ks: tuple[int, ...]
    levels: tuple[ExitLevel, ...] = field(init=False)

    def __post_init__(self) -> None:
        levels = []
        for i, k in enumerate(self.ks):
            v = reduced_angle(k * self.theta)
            if v <= 0.0:
                raise ValueError(f"angle k*theta is an integer at k={k}")
            levels.append(ExitLevel(i, int(k), v))
        vs = [lev.v for lev in levels]
        if any(b >= a for a, b in zip(vs, vs[1:])):
            raise ValueError("reduced angles v_n must decrease strictly")
        object.__setattr__(self, "levels", tuple(levels))

    @classmethod
    def from_convergents(cls, theta: float, count: int) -> "ExitFamily":
        return cls(theta, tuple(convergents(theta, count)))

    @classmethod
    def golden(cls, count: int = 6) -> "ExitFamily":
        return cls.from_convergents((math.sqrt(5.0) - 1.0) / 2.0, count)

    @property
    def v(self) -> list[float]:
        return [lev.v for lev in self.levels]


def exit_time_oracle_exact(a: float, sigma2: float) -> float:
    """Closed-form mean exit time of Brownian motion from [-a, a], started at 0."""
    if a <= 0.0 or sigma2 <= 0.0:
        raise ValueError("half-width and sigma2 must be positive")
    return a * a / sigma2


# -- survival engines ---------------------------------------------------------------------


def _exit_steps(n_paths: int, lo: float, hi: float, step_scale: float,
                seed: int, level_tag: int, engine: str,
                max_steps: int) -> np.ndarray:
    """First step index at which each path leaves [lo, hi], both engines.

    reduced: survival is the closed condition lo <= W <= hi checked on the
    current value.  operator: the running interval-set state [eps - min W,
    theta_e - max W] must contain the state angle, i.e. min W >= lo and
    max W <= hi.  min(a,b) >= c is float-identical to (a >= c) & (b >= c),
    so the two masks agree bitwise and the engines stay path-aligned.
    """
    out = np.zeros(n_paths, dtype=np.int64)
    done = 0
    chunk_index = 0
    while done < n_paths:
        size = min(ENGINE_CHUNK, n_paths - done)
        rng = stream_rng(seed, 3, level_tag, chunk_index)
        w = np.zeros(size)
        idx = np.arange(size, dtype=np.int64)
        if engine == "operator":
            run_min = np.zeros(size)
            run_max = np.zeros(size)
        step = 0
        while idx.size:
            step += 1
            if step > max_steps:
                raise RuntimeError("exit-time simulation exceeded the step cap")
            w = w + rng.normal(size=idx.size) * step_scale
            if engine == "operator":
                run_min = np.minimum(run_min, w)
                run_max = np.maximum(run_max, w)
                alive = (run_min >= lo) & (run_max <= hi)
            else:
                alive = (w >= lo) & (w <= hi)
            if not alive.all():
                dead = ~alive
                out[done + idx[dead]] = step
                w = w[alive]
                idx = idx[alive]
                if engine == "operator":
                    run_min = run_min[alive]
                    run_max = run_max[alive]
        done += size
        chunk_index += 1
    return out


@dataclass
class GammaEstimate:
    gamma: float
    stderr: float
    engine: str
    v: float
    n_paths: int
    dt: float
    sigma2: float
    seed: int
    truncation_bound: float
    truncation_flagged: bool
    mean_steps: float


def _default_dt(half_width: float, sigma2: float) -> float:
    # Mean exit needs ~STEPS_PER_MEAN_EXIT steps: increments are a/64, and the
    # discrete-monitoring bias ~2 * 0.5826 * sigma*sqrt(dt)/a ~ 1.8% is uniform
    # across levels, so log-log slopes are preserved.
    return (half_width * half_width / sigma2) / STEPS_PER_MEAN_EXIT


def gamma_estimate(family: ExitFamily, index: int, engine: str = "reduced",
                   n_paths: int = 10_000, dt: Optional[float] = None,
                   seed: int = 0, sigma2: float = DEFAULT_SIGMA2,
                   truncation: float = SURVIVAL_TRUNCATION) -> GammaEstimate:
    """Monte Carlo mean exit time gamma_n for one family level."""
    if engine not in ("reduced", "operator"):
        raise ValueError("engine must be 'reduced' or 'operator'")
    level = family.levels[index]
    a = level.half_width
    eps, theta_e, x0 = level.epsilon, level.v, level.state_angle
    lo = eps - x0
    hi = theta_e - x0
    if dt is None:
        dt = _default_dt(a, sigma2)
    step_scale = math.sqrt(sigma2 * dt)
    max_steps = STEPS_PER_MEAN_EXIT * 4096
    exits = _exit_steps(n_paths, lo, hi, step_scale, seed, index, engine, max_steps)
    if engine == "reduced":
        taus = exits.astype(float) * dt
        gamma = float(np.mean(taus))
        stderr = float(np.std(taus, ddof=1) / math.sqrt(n_paths))
        bound = 0.0
        flagged = False
    else:
        # Survival-curve quadrature with a truncated tail.  S(t_j) is the
        # fraction with exit step > j; the left-rectangle sum telescopes to
        # mean(min(e, J)) * dt, and the trapezoid correction subtracts the
        # half-cells at both ends.
        horizon = int(np.quantile(exits, 1.0 - truncation)) if truncation > 0 else int(exits.max())
        horizon = max(horizon, 1)
        capped = np.minimum(exits, horizon)
        s_end = float(np.mean(exits > horizon))
        rect = float(np.mean(capped)) * dt
        gamma = rect - dt * (1.0 - s_end) / 2.0
        stderr = float(np.std(capped.astype(float) * dt, ddof=1) / math.sqrt(n_paths))
        bound = s_end * exit_time_oracle_exact(a, sigma2)
        flagged = bound > 0.01 * gamma
    return GammaEstimate(gamma=gamma, stderr=stderr, engine=engine, v=level.v,
                         n_paths=n_paths, dt=dt, sigma2=sigma2, seed=seed,
                         truncation_bound=bound, truncation_flagged=flagged,
                         mean_steps=float(np.mean(exits)))


@dataclass
class SurvivalComparison:
    indicators_equal: bool
    max_step_difference: int
    reduced: GammaEstimate
    operator: GammaEstimate


def run_survival_comparison(family: ExitFamily, index: int, n_paths: int = 2000,
                            seed: int = 0, sigma2: float = DEFAULT_SIGMA2,
                            dt: Optional[float] = None) -> SurvivalComparison:
    """Runs both engines on identical increment streams and compares paths.

    Per-path survival indicators are determined by the exit step, so exact
    boolean equality of the indicator processes is exact equality of the exit
    steps.
    """
    level = family.levels[index]
    a = level.half_width
    if dt is None:
        dt = _default_dt(a, sigma2)
    lo = level.epsilon - level.state_angle
    hi = level.v - level.state_angle
    scale = math.sqrt(sigma2 * dt)
    cap = STEPS_PER_MEAN_EXIT * 4096
    e_red = _exit_steps(n_paths, lo, hi, scale, seed, index, "reduced", cap)
    e_op = _exit_steps(n_paths, lo, hi, scale, seed, index, "operator", cap)
    diff = int(np.max(np.abs(e_red - e_op))) if n_paths else 0
    red = gamma_estimate(family, index, "reduced", n_paths, dt, seed, sigma2)
    op = gamma_estimate(family, index, "operator", n_paths, dt, seed, sigma2)
    return SurvivalComparison(indicators_equal=bool(np.array_equal(e_red, e_op)),
                              max_step_difference=diff, reduced=red, operator=op)


# -- asymptotics ------------------------------------------------------------------------------


@dataclass
class AsymptoticsFit:
    slope: float
    n0: int
    c1: float
    c2: float
    slope_residual: float
    pairs: list[tuple[float, float, float]]


def fit_asymptotics(pairs: Sequence[tuple[float, float, float]]) -> AsymptoticsFit:
    """Fits gamma ~ c1 v^{2/n0} + c2 v^{4/n0} to (v, gamma, stderr) pairs.

    The log-log slope picks the order n0 in 1..6 with 2/n0 nearest the slope;
    a residual above 0.25 means no clean power law: "no asymptotic detected".
    Weighted least squares uses 1/stderr^2 when standard errors are provided
    (zero or missing stderr falls back to unit weight).
    """
    pairs = [(float(v), float(g), float(s) if s else 0.0) for v, g, s in pairs]
    if len(pairs) < 4:
        raise ValueError("need at least 4 (v, gamma, stderr) pairs")
    vs = np.array([p[0] for p in pairs])
    gs = np.array([p[1] for p in pairs])
    ss = np.array([p[2] for p in pairs])
    if vs.min() <= 0.0 or gs.min() <= 0.0:
        raise ValueError("v and gamma must be positive")
    if vs.max() / vs.min() < 10.0 * (1.0 - 1e-9):
        raise ValueError("pairs must span at least a decade in v")
    # Log-log slope, weights by delta method (gamma/stderr)^2.
    x = np.log(vs)
    y = np.log(gs)
    w = np.ones(len(vs))
    has_err = ss > 0.0
    w[has_err] = (gs[has_err] / ss[has_err]) ** 2
    xbar = np.average(x, weights=w)
    ybar = np.average(y, weights=w)
    slope = float(np.sum(w * (x - xbar) * (y - ybar)) / np.sum(w * (x - xbar) ** 2))
    n0 = min(range(1, 7), key=lambda n: abs(slope - 2.0 / n))
    residual = abs(slope - 2.0 / n0)
    if residual > 0.25:
        raise ValueError(f"no asymptotic detected: slope {slope:.3f} is not near 2/n0")
    design = np.column_stack([vs ** (2.0 / n0), vs ** (4.0 / n0)])
    wls = np.ones(len(vs))
    wls[has_err] = 1.0 / ss[has_err] ** 2
    sw = np.sqrt(wls)
    coef, *_ = np.linalg.lstsq(design * sw[:, None], gs * sw, rcond=None)
    return AsymptoticsFit(slope=slope, n0=n0, c1=float(coef[0]), c2=float(coef[1]),
                          slope_residual=residual, pairs=pairs)


@dataclass
class InvariantReport:
    n0: int
    c1: float
    c2: float
    alpha: float
    d: float
    h_squared: float
    h: float
    h_imaginary: bool


def extract_invariants(n0: int, c1: float, c2: float) -> InvariantReport:
    """Effective dimension and mean-curvature invariant from fit coefficients.

    alpha_n0 = 2 Gamma(1/2)^{n0} / Gamma(n0/2);
    d = (1 / (2 c1)) (n0 / alpha)^{2/n0} + 1;
    H^2 = 8 (d + 1) c2 (alpha / n0)^{4/n0}.
    Negative H^2 (possible for noisy or vanishing c2) is flagged rather than
    silently truncated.
    """
    if n0 < 1 or c1 <= 0.0:
        raise ValueError("need n0 >= 1 and c1 > 0")
    alpha = 2.0 * math.gamma(0.5) ** n0 / math.gamma(n0 / 2.0)
    d = (1.0 / (2.0 * c1)) * (n0 / alpha) ** (2.0 / n0) + 1.0
    h2 = 8.0 * (d + 1.0) * c2 * (alpha / n0) ** (4.0 / n0)
    imaginary = h2 < 0.0
    h = math.sqrt(h2) if not imaginary else math.sqrt(-h2)
    return InvariantReport(n0=n0, c1=c1, c2=c2, alpha=alpha, d=d,
                           h_squared=h2, h=h, h_imaginary=imaginary)


# -- reference checks ------------------------------------------------------------------------


@dataclass
class SeriesCheck:
    c2: float
    c4: float
    reference_c2: float
    reference_c4: float
    c2_matches: bool
    note: str


def paper_series_check() -> SeriesCheck:
    """Taylor coefficients of g(v) = 2 sin^2(v/8) + (2/3) sin^4(v/8).

    The v^2 coefficient must equal 1/32 (asserted by callers to 1e-8).  The
    v^4 coefficient is computed and reported next to the reference value
    1/6144 without being asserted: the two quartic contributions of g cancel
    exactly, so the computed value is ~0 and the discrepancy is deliberate
    to surface.
    """

    def g(v: float) -> float:
        s = math.sin(v / 8.0)
        return 2.0 * s * s + (2.0 / 3.0) * s ** 4

    def second(h: float) -> float:
        return (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h)

    def fourth(h: float) -> float:
        return (g(2 * h) - 4 * g(h) + 6 * g(0.0) - 4 * g(-h) + g(-2 * h)) / h ** 4

    h2 = 1e-2
    c2 = (4.0 * second(h2 / 2) - second(h2)) / 3.0 / 2.0
    h4 = 5e-2
    c4 = (4.0 * fourth(h4 / 2) - fourth(h4)) / 3.0 / 24.0
    ref2, ref4 = 1.0 / 32.0, 1.0 / 6144.0
    return SeriesCheck(
        c2=c2, c4=c4, reference_c2=ref2, reference_c4=ref4,
        c2_matches=abs(c2 - ref2) <= 1e-8,
        note=("v^4 coefficient computed from the series is reported, not "
              "asserted; the quartic terms of the two summands cancel."))


@dataclass
class CircleBenchmark:
    eps: list[float]
    means: list[float]
    n0: int
    c1: float
    c2: float
    d: float
    h_squared: float


def classical_circle_benchmark(eps_list: Optional[Sequence[float]] = None,
                               sigma2: float = DEFAULT_SIGMA2) -> CircleBenchmark:
    """Exit times from chordal caps of the unit circle, extraction sanity check.

    A cap of chordal radius eps has geodesic half-width a = 2 arcsin(eps/2);
    the exact mean exit time a^2/sigma2 fitted as c1 eps^2 + c2 eps^4 must
    recover dimension d = 1 + 1/(2 c1) = 2 and H^2 = 8 (d+1) c2 = 1 for the
    unit circle at sigma2 = 2.
    """
    if eps_list is None:
        eps_list = np.geomspace(0.02, 0.2, 8)
    eps = [float(e) for e in eps_list]
    means = [exit_time_oracle_exact(2.0 * math.asin(e / 2.0), sigma2) for e in eps]
    fit = fit_asymptotics([(e, m, 0.0) for e, m in zip(eps, means)])
    d = 1.0 + 1.0 / (2.0 * fit.c1)
    h2 = 8.0 * (d + 1.0) * fit.c2
    return CircleBenchmark(eps=eps, means=means, n0=fit.n0, c1=fit.c1,
                           c2=fit.c2, d=d, h_squared=h2)


# -- report assembly -----------------------------------------------------------------------------


@dataclass
class AsymptoticsReport:
    family: ExitFamily
    estimates: list[GammaEstimate]
    fit: AsymptoticsFit
    invariants: InvariantReport
    series: SeriesCheck

    def to_csv(self) -> str:
        lines = ["n,k_n,v_n,gamma_n,stderr"]
        for level, est in zip(self.family.levels, self.estimates):
            lines.append(f"{level.index},{level.k},{level.v!r},"
                         f"{est.gamma!r},{est.stderr!r}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "theta": self.family.theta,
            "engine": self.estimates[0].engine if self.estimates else None,
            "slope": self.fit.slope,
            "n0": self.fit.n0,
            "c1": self.fit.c1,
            "c2": self.fit.c2,
            "d": self.invariants.d,
            "H": self.invariants.h,
            "H_squared": self.invariants.h_squared,
            "H_imaginary": self.invariants.h_imaginary,
            "series_check": {
                "c2": self.series.c2,
                "c2_reference": self.series.reference_c2,
                "c2_matches": self.series.c2_matches,
                "c4": self.series.c4,
                "c4_reference": self.series.reference_c4,
            },
        }
        return json.dumps(payload, sort_keys=True)


def run_exit_asymptotics(family: ExitFamily, engine: str = "reduced",
                         n_paths: int = 10_000, seed: int = 0,
                         sigma2: float = DEFAULT_SIGMA2,
                         dt: Optional[float] = None) -> AsymptoticsReport:
    """Estimates gamma over the family, fits the power law, extracts invariants."""
    estimates = [gamma_estimate(family, i, engine, n_paths, dt, seed + i, sigma2)
                 for i in range(len(family.levels))]
    fit = fit_asymptotics([(e.v, e.gamma, e.stderr) for e in estimates])
    invariants = extract_invariants(fit.n0, fit.c1, fit.c2)
    return AsymptoticsReport(family=family, estimates=estimates, fit=fit,
                             invariants=invariants, series=paper_series_check())
