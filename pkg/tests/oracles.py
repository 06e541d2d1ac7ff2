"""Independent oracles used by the test suite.

Everything in this module is intentionally implemented from first principles,
without importing algorithmic code from the package under test (only data
types are consumed), so that agreement is evidence rather than tautology.

Oracles provided:

* clock-and-shift matrix representation of the rational-angle twisted torus
  (q x q unitaries with U V = e^{2 pi i p/q} V U),
* Fourier synthesis of band functions from Laurent coefficients (cross-checks
  the banded crossed-product arithmetic against the coefficient arithmetic),
* alternating-product lattice meet for explicitly represented q x q matrices,
* first-exit statistics of one-dimensional Brownian motion from a symmetric
  interval (closed-form mean a^2 / sigma^2),
* Taylor coefficients by central differences with one Richardson step.
"""

from __future__ import annotations

import math

import numpy as np


# -- clock and shift -------------------------------------------------------------


def clock_shift_matrices(p: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """q x q unitaries with U V = e^{2 pi i p/q} V U.

    U is the clock diag(1, w, w^2, ...) with w = e^{2 pi i p / q}; V is the
    cyclic shift V e_j = e_{j+1}.  Then (U V) e_j = w^{j+1} e_{j+1} while
    (V U) e_j = w^j e_{j+1}, so U V = w V U.
    """
    omega = np.exp(2j * np.pi * p / q)
    u = np.diag(omega ** np.arange(q))
    v = np.zeros((q, q), dtype=complex)
    for j in range(q):
        v[(j + 1) % q, j] = 1.0
    return u, v


def represent(coeffs: dict[tuple[int, int], complex], p: int, q: int) -> np.ndarray:
    """Matrix image sum a_{mn} U^m V^n under the clock-and-shift representation."""
    u, v = clock_shift_matrices(p, q)
    out = np.zeros((q, q), dtype=complex)
    for (m, n), c in coeffs.items():
        out += c * (np.linalg.matrix_power(u, m % q)
                    @ np.linalg.matrix_power(v, n % q)
                    * _wrap_phase(m, n, p, q))
    return out


def _wrap_phase(m: int, n: int, p: int, q: int) -> complex:
    """Phase correction for reducing U^m to U^{m mod q} and V^n to V^{n mod q}.

    U^q = I and V^q = I in the clock-and-shift picture, and the reduction
    U^m V^n = U^{m mod q} V^{n mod q} needs no extra phase because U^q and V^q
    are central and equal to the identity.  Kept explicit for clarity.
    """
    return 1.0


def matrix_trace_normalized(mat: np.ndarray) -> complex:
    return complex(np.trace(mat)) / mat.shape[0]


# -- Fourier band synthesis -------------------------------------------------------


def synthesize_band(coeffs: dict[tuple[int, int], complex], band: int,
                    n_grid: int) -> np.ndarray:
    """Grid samples of f_band(x) = sum_m a_{m,band} e^{2 pi i m x}."""
    x = np.arange(n_grid) / n_grid
    out = np.zeros(n_grid, dtype=complex)
    for (m, n), c in coeffs.items():
        if n == band:
            out += c * np.exp(2j * np.pi * m * x)
    return out


# -- matrix lattice meet ------------------------------------------------------------


def matrix_meet(p_mat: np.ndarray, q_mat: np.ndarray, n_iter: int = 60) -> np.ndarray:
    """Alternating-product meet lim_n (PQ)^n of two orthogonal projections."""
    r = p_mat @ q_mat
    for _ in range(n_iter):
        r = r @ r
    return r


# -- Brownian exit -------------------------------------------------------------------


def exit_time_mean_exact(a: float, sigma2: float) -> float:
    """E[tau] for B with variance rate sigma2 started at 0, exiting [-a, a]."""
    return a * a / sigma2


def exit_time_var_exact(a: float, sigma2: float) -> float:
    """Var[tau] for the same exit problem (standard BM scaling: 2 a^4 / 3)."""
    return 2.0 * a ** 4 / (3.0 * sigma2 ** 2)


# -- Taylor coefficients ----------------------------------------------------------------


def taylor_coeff_2(f, h: float = 1e-2) -> float:
    """Coefficient of v^2 at 0 for an even function, Richardson-extrapolated."""

    def d2(step: float) -> float:
        return (f(step) - 2.0 * f(0.0) + f(-step)) / step ** 2

    fine, coarse = d2(h / 2), d2(h)
    return (4.0 * fine - coarse) / 3.0 / 2.0


def taylor_coeff_4(f, h: float = 5e-2) -> float:
    """Coefficient of v^4 at 0 for an even function, Richardson-extrapolated."""

    def d4(step: float) -> float:
        return (f(2 * step) - 4 * f(step) + 6 * f(0.0) - 4 * f(-step)
                + f(-2 * step)) / step ** 4

    fine, coarse = d4(h / 2), d4(h)
    return (4.0 * fine - coarse) / 3.0 / math.factorial(4)


# -- continued fractions -------------------------------------------------------------------


def convergent_denominators_oracle(theta: float, count: int) -> list[int]:
    """Denominators q_1, q_2, ... of the continued fraction of theta.

    Plain recurrence q_n = a_n q_{n-1} + q_{n-2} with q_{-1} = 0, q_0 = 1; the
    integer part a_0 is consumed without emitting a denominator.  For the
    golden angle this yields 1, 2, 3, 5, 8, 13, ...  Stops early if the
    expansion terminates (rational input).
    """
    x = theta - math.floor(theta)
    q_mm, q_m = 0, 1
    out: list[int] = []
    while len(out) < count:
        if x < 1e-12:
            break
        x = 1.0 / x
        a = math.floor(x)
        q = a * q_m + q_mm
        q_mm, q_m = q_m, q
        out.append(q)
        x -= a
    return out
