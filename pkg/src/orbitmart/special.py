"""Special functions backing the closed-form orbit ranks.

Everything here is scalar, pure, and deterministic: the regularized
incomplete beta function, the relative surface area of a hyperspherical
cap, and Student-t upper tails.  The cap area and the t tail are two
routes to the same quantity; keeping both allows the rank formulas to be
cross-checked against each other at runtime and in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "Tolerance",
    "NumericsError",
    "reg_inc_beta",
    "cap_measure",
    "t_upper_tail",
]


class NumericsError(ArithmeticError):
    """Raised when an iterative evaluation fails to converge."""

    def __init__(self, message: str, **inputs):
        self.inputs = inputs
        detail = ", ".join(f"{k}={v!r}" for k, v in inputs.items())
        super().__init__(f"{message} ({detail})" if detail else message)


@dataclass(frozen=True)
class Tolerance:
    """Accuracy budget for iterative special-function evaluation.

    rel_eps is the target relative error of the continued fraction;
    max_iter bounds the number of Lentz iterations before giving up.
    """

    rel_eps: float = 1e-12
    max_iter: int = 300

    def __post_init__(self):
        if not (0.0 < self.rel_eps <= 1e-6):
            raise ValueError(f"rel_eps must be in (0, 1e-6], got {self.rel_eps}")
        if self.max_iter < 50:
            raise ValueError(f"max_iter must be >= 50, got {self.max_iter}")


_DEFAULT_TOL = Tolerance()

# Smallest magnitude Lentz denominators are clamped to, to avoid division
# blow-ups when a partial denominator passes through zero.
_LENTZ_TINY = 1e-300


def _beta_cont_frac(a: float, b: float, x: float, tol: Tolerance) -> float:
    """Continued fraction for the incomplete beta, by the modified Lentz method.

    Valid (and rapidly convergent) for x < (a + 1) / (a + b + 2); the
    caller applies the symmetry switch to stay in that regime.
    """
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _LENTZ_TINY:
        d = _LENTZ_TINY
    d = 1.0 / d
    h = d
    for m in range(1, tol.max_iter + 1):
        m2 = 2 * m
        # Even step.
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _LENTZ_TINY:
            d = _LENTZ_TINY
        c = 1.0 + aa / c
        if abs(c) < _LENTZ_TINY:
            c = _LENTZ_TINY
        d = 1.0 / d
        h *= d * c
        # Odd step.
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _LENTZ_TINY:
            d = _LENTZ_TINY
        c = 1.0 + aa / c
        if abs(c) < _LENTZ_TINY:
            c = _LENTZ_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol.rel_eps:
            return h
    raise NumericsError(
        "incomplete beta continued fraction did not converge",
        a=a, b=b, x=x, max_iter=tol.max_iter,
    )


def reg_inc_beta(x: float, a: float, b: float, tol: Tolerance | None = None) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Parameters
    ----------
    x : float in [0, 1]
    a, b : float > 0
    tol : Tolerance, optional
        Accuracy budget; defaults to rel_eps=1e-12, max_iter=300.

    Returns
    -------
    float in [0, 1], the CDF of a Beta(a, b) variable at x.

    Raises
    ------
    ValueError
        If the arguments are outside the stated domain.
    NumericsError
        If the continued fraction fails to converge within the budget.
    """
    if tol is None:
        tol = _DEFAULT_TOL
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must be in [0, 1], got {x}")
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"a and b must be positive, got a={a}, b={b}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Symmetry switch keeps the continued fraction in its fast regime.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cont_frac(a, b, x, tol) / a
    return 1.0 - front * _beta_cont_frac(b, a, 1.0 - x, tol) / b


def cap_measure(c: float, m: int, tol: Tolerance | None = None) -> float:
    """Relative surface area of the hyperspherical cap {u in S^(m-1) : u_i > c}.

    The sphere S^(m-1) is the unit sphere in m-dimensional space and the
    cap is cut by a single coordinate threshold c.  In closed form,

        cap_measure(c, m) = 1/2 * I_{1-c^2}((m-1)/2, 1/2)        for c >= 0,
        cap_measure(c, m) = 1 - cap_measure(-c, m)               for c < 0,

    which is strictly decreasing in c (for m >= 2), equals 1/2 at c = 0,
    and hits 0 and 1 at c = 1 and c = -1.

    For m = 1 the "sphere" is the two-point set {-1, +1}; the measure of
    the strict cap is then 1/2 on the open interval and 0/1 at the ends.
    """
    if m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    if not (-1.0 <= c <= 1.0):
        raise ValueError(f"c must be in [-1, 1], got {c}")
    if c >= 1.0:
        return 0.0
    if c <= -1.0:
        return 1.0
    if c == 0.0:
        return 0.5
    if m == 1:
        return 0.5
    x = 1.0 - c * c
    half_cap = 0.5 * reg_inc_beta(x, 0.5 * (m - 1), 0.5, tol)
    return half_cap if c > 0.0 else 1.0 - half_cap


def t_upper_tail(t: float, nu: int, tol: Tolerance | None = None) -> float:
    """Upper tail P(T > t) of a Student t variable with nu degrees of freedom.

    Evaluated through the incomplete beta as 1/2 * I_{nu/(nu+t^2)}(nu/2, 1/2)
    for t >= 0 (mirrored for t < 0).  Agrees with cap_measure through the
    substitution c = t / sqrt(nu + t^2), m = nu + 1.
    """
    if nu < 1:
        raise ValueError(f"nu must be a positive integer, got {nu}")
    if t == 0.0:
        return 0.5
    x = nu / (nu + t * t)
    half_tail = 0.5 * reg_inc_beta(x, 0.5 * nu, 0.5, tol)
    return half_tail if t > 0.0 else 1.0 - half_tail
