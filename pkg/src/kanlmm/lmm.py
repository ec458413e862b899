"""Linear multistep schemes and their discovery-side bookkeeping.

Coefficients for the Adams-Bashforth, Adams-Moulton, and backward
differentiation families are generated from the order conditions with
exact rational arithmetic and converted to floats once at the end.
Scheme convention, with x_n the state at t_n and f the field:

    (1/h) * sum_{m=0}^{M} alpha_m x_{n-m} = sum_{m=0}^{M} beta_m f(x_{n-m})

normalized so alpha_0 > 0.  The module also provides the residual
operator, an empirical-order fit, index-window bookkeeping for the
grid-value linear system, one-sided difference weights, and the root
condition on the beta polynomial.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import numpy.typing as npt

Array = npt.NDArray[np.float64]

FAMILIES = ("ab", "am", "bdf")
MAX_STEPS = 6


class DegenerateFitError(RuntimeError):
    """Raised when an order fit would run on saturated (noise-level) data."""


@dataclass(frozen=True)
class LmmScheme:
    """One member of a multistep family.

    ``alpha`` and ``beta`` are indexed by the history offset m = 0..steps,
    so ``alpha[0]`` multiplies the newest state.  ``order`` is the exact
    consistency order p of the scheme.
    """

    family: str
    steps: int
    alpha: Array
    beta: Array
    order: int

    @property
    def explicit(self) -> bool:
        return bool(self.beta[0] == 0.0)

    @property
    def beta_support(self) -> tuple[int, int]:
        """(min, max) offsets m with beta_m != 0."""
        nz = np.nonzero(self.beta)[0]
        if nz.size == 0:
            raise ValueError("scheme has an all-zero beta row")
        return int(nz.min()), int(nz.max())


def _solve_exact(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination with partial pivoting over the rationals."""
    n = len(b)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular order-condition system")
        m[col], m[pivot] = m[pivot], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [v - factor * w for v, w in zip(m[r], m[col])]
    return [m[i][n] for i in range(n)]


def _order_condition_row(alpha: list[Fraction], beta: list[Fraction], j: int) -> Fraction:
    """Residual of the j-th order condition for given exact coefficients.

    Condition: sum_m alpha_m (-m)^j = j * sum_m beta_m (-m)^(j-1), with
    the j = 0 case reading sum_m alpha_m = 0.
    """
    lhs = sum(a * Fraction(-m) ** j for m, a in enumerate(alpha))
    if j == 0:
        return lhs
    rhs = j * sum(b * Fraction(-m) ** (j - 1) for m, b in enumerate(beta))
    return lhs - rhs


def _generate_exact(family: str, steps: int) -> tuple[list[Fraction], list[Fraction], int]:
    m = steps
    zero, one = Fraction(0), Fraction(1)
    if family == "ab":
        # alpha fixed to x_n - x_{n-1}; solve p = M conditions for beta_1..beta_M.
        alpha = [one, -one] + [zero] * (m - 1)
        p = m
        a = [[Fraction(-mm) ** (j - 1) for mm in range(1, m + 1)] for j in range(1, p + 1)]
        b = [sum(al * Fraction(-mm) ** j for mm, al in enumerate(alpha)) / j for j in range(1, p + 1)]
        beta_tail = _solve_exact(a, b)
        beta = [zero] + beta_tail
    elif family == "am":
        # Same alpha, beta_0 free: p = M + 1 conditions for beta_0..beta_M.
        alpha = [one, -one] + [zero] * (m - 1)
        p = m + 1
        a = [[Fraction(-mm) ** (j - 1) for mm in range(0, m + 1)] for j in range(1, p + 1)]
        b = [sum(al * Fraction(-mm) ** j for mm, al in enumerate(alpha)) / j for j in range(1, p + 1)]
        beta = _solve_exact(a, b)
    else:
        # BDF: beta = e_0; alpha from p = M conditions plus consistency
        # sum alpha = 0, normalized so the f coefficient is 1.  With only
        # beta_0 nonzero the rhs is 1 for j = 1 and 0 otherwise.
        beta = [one] + [zero] * m
        p = m
        a = [[Fraction(-mm) ** j for mm in range(0, m + 1)] for j in range(0, p + 1)]
        b = [zero, one] + [zero] * (p - 1)
        alpha = _solve_exact(a, b)
    return alpha, beta, p


def scheme(family: str, steps: int) -> LmmScheme:
    """Return the ``steps``-step member of ``family`` ("ab", "am", "bdf").

    AB is explicit of order ``steps``; AM is implicit of order
    ``steps + 1``; BDF is implicit of order ``steps``.  Steps are
    supported for 1..6 (beyond 6 the BDF members lose zero-stability and
    the classical tables stop).
    """
    fam = family.lower()
    if fam not in FAMILIES:
        raise ValueError(f"unknown family {family!r}, expected one of {FAMILIES}")
    if not 1 <= steps <= MAX_STEPS:
        raise ValueError(f"steps must be in 1..{MAX_STEPS}, got {steps}")
    alpha, beta, p = _generate_exact(fam, steps)
    assert all(_order_condition_row(alpha, beta, j) == 0 for j in range(p + 1))
    assert alpha[0] > 0
    return LmmScheme(
        family=fam,
        steps=steps,
        alpha=np.array([float(a) for a in alpha]),
        beta=np.array([float(b) for b in beta]),
        order=p,
    )


def all_schemes() -> list[LmmScheme]:
    """All 18 supported schemes (3 families x 6 step counts)."""
    return [scheme(f, m) for f in FAMILIES for m in range(1, MAX_STEPS + 1)]


def residual(sch: LmmScheme, times: Array, states: Array, field) -> Array:
    """Multistep residual of a trajectory against a candidate field.

    r_n = (1/h) sum_m alpha_m x_{n-m} - sum_m beta_m field(x_{n-m}) for
    n = steps..N1, returned as an array of shape (N1 - steps + 1, d).
    ``times`` must be equidistant.
    """
    times = np.asarray(times, dtype=np.float64)
    states = np.asarray(states, dtype=np.float64)
    if states.ndim != 2 or times.shape[0] != states.shape[0]:
        raise ValueError("states must be (n_points, d) aligned with times")
    n1 = states.shape[0] - 1
    m = sch.steps
    if n1 < m:
        raise ValueError(f"need at least steps+1 = {m + 1} points, got {n1 + 1}")
    h = (times[-1] - times[0]) / n1
    if h <= 0 or not np.allclose(np.diff(times), h, rtol=0.0, atol=1e-9 * max(abs(h), 1.0)):
        raise ValueError("times must be strictly increasing and equidistant")
    fvals = np.apply_along_axis(field, 1, states)
    out = np.zeros((n1 - m + 1, states.shape[1]))
    for mm in range(m + 1):
        window = slice(m - mm, n1 + 1 - mm)
        out += (sch.alpha[mm] / h) * states[window] - sch.beta[mm] * fvals[window]
    return out


def empirical_order(sch: LmmScheme, field, solution, h_list, t0: float = 0.0, t1: float = 1.0) -> float:
    """Fitted log-log slope of the max residual norm against step size.

    ``solution(ts)`` must return exact states (len(ts), d); the residual
    of the exact solution is the truncation error, so the slope should
    approach the scheme's order.
    """
    hs = np.asarray(sorted(h_list, reverse=True), dtype=np.float64)
    if hs.size < 3:
        raise ValueError("need at least 3 step sizes for a slope fit")
    if np.any(hs <= 0):
        raise ValueError("step sizes must be positive")
    errs = []
    for h in hs:
        n1 = int(round((t1 - t0) / h))
        ts = t0 + h * np.arange(n1 + 1)
        states = np.asarray(solution(ts), dtype=np.float64)
        r = residual(sch, ts, states, field)
        errs.append(np.max(np.abs(r)))
    errs = np.asarray(errs)
    if np.all(errs < 1e-14):
        raise DegenerateFitError(
            "residuals are at rounding level for every step size; order fit is meaningless"
        )
    slope, _ = np.polyfit(np.log(hs), np.log(errs), 1)
    return float(slope)


@dataclass(frozen=True)
class IndexWindow:
    """Index bookkeeping for recovering grid values of f from one trajectory.

    For a trajectory with samples 0..n1 and a scheme with beta support
    [m_min, m_max], the multistep equations for n = steps..n1 involve
    the unknowns f(x_r), ..., f(x_q).  ``aux_count`` is the number of
    one-sided-difference rows needed to square the system, defined as
    tau - (n1 - steps + 1); the alternative count q - (n1 - steps + 1)
    obtained by ignoring the left offset r is exposed for reporting and
    differs from ``aux_count`` by r - 1, so the two coincide exactly
    when r = 1.
    """

    n1: int
    steps: int
    r: int
    q: int
    aux_count: int

    @property
    def tau(self) -> int:
        """Number of unknown grid values, q - r + 1."""
        return self.q - self.r + 1

    @property
    def aux_count_ignoring_offset(self) -> int:
        return self.q - (self.n1 - self.steps + 1)


def index_window(sch: LmmScheme, n1: int) -> IndexWindow:
    """Window of grid indices whose f-values enter the multistep equations."""
    if n1 < sch.steps:
        raise ValueError(f"trajectory must have n1 >= steps, got n1={n1} steps={sch.steps}")
    m_min, m_max = sch.beta_support
    r = sch.steps - m_max
    q = n1 - m_min
    tau = q - r + 1
    aux = tau - (n1 - sch.steps + 1)
    return IndexWindow(n1=n1, steps=sch.steps, r=r, q=q, aux_count=aux)


def fdm_coefficients(order: int) -> Array:
    """Weights of the forward difference u'(t_n) ~ (1/h) sum_m mu_m u_{n+m}.

    Exact for polynomials of degree ``order``; uses the order + 1 nodes
    m = 0..order, solved exactly from the moment conditions
    sum_m mu_m m^j = [j == 1] * j! for j = 0..order.
    """
    if not 1 <= order <= 7:
        raise ValueError(f"difference order must be in 1..7, got {order}")
    n = order + 1
    a = [[Fraction(m) ** j for m in range(n)] for j in range(n)]
    b = [Fraction(1) if j == 1 else Fraction(0) for j in range(n)]
    mu = _solve_exact(a, b)
    return np.array([float(v) for v in mu])


@dataclass(frozen=True)
class RootConditionReport:
    """Roots of the beta polynomial and the strict stability verdict.

    ``satisfied`` means every root has modulus < 1 - 1e-12.  Roots within
    1e-12 of the unit circle are flagged as ``boundary`` so marginal cases
    are reported rather than silently passed or failed.
    """

    roots: npt.NDArray[np.complex128]
    satisfied: bool
    boundary: bool
    max_modulus: float


def root_condition(sch: LmmScheme, window: IndexWindow | None = None) -> RootConditionReport:
    """Check the root condition for the grid-value recursion.

    The forward substitution that recovers grid values amplifies
    perturbations through the polynomial
    p(z) = sum_{i=m_min}^{m_max} beta_i z^(m_max - i); the recursion is
    stable when all roots lie strictly inside the unit circle.  A scheme
    with a single nonzero beta gives a constant polynomial and the
    condition holds vacuously.  ``window`` is accepted for signature
    symmetry with the assembly routines; the verdict depends only on the
    scheme.
    """
    del window
    m_min, m_max = sch.beta_support
    coeffs = sch.beta[m_min : m_max + 1]
    if coeffs.size == 1:
        return RootConditionReport(
            roots=np.zeros(0, dtype=np.complex128), satisfied=True, boundary=False, max_modulus=0.0,
        )
    roots = np.roots(coeffs)
    mods = np.abs(roots)
    return RootConditionReport(
        roots=roots,
        satisfied=bool(np.all(mods < 1.0 - 1e-12)),
        boundary=bool(np.any(np.abs(mods - 1.0) <= 1e-12)),
        max_modulus=float(mods.max()),
    )
