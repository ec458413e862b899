"""Error metrics and theoretical bound calculators.

The bound calculators are "what-if" evaluators: the regularity of an
unknown field is unobservable, so the caller supplies Holder parameters
and the functions evaluate the closed-form expressions.  The VC shape
value is the dimension-dependent factor of the approximation lower
bound, known only up to a constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.integrate import solve_ivp

from . import kan as kan_mod
from .bspline import eval_basis_derivative
from .kan import KanNetwork
from .odeint import IntegrationError

Array = npt.NDArray[np.float64]

LIPSCHITZ_GRID = 4096


@dataclass(frozen=True)
class HolderSpec:
    """Holder-continuity parameters: |f(x)-f(y)| <= lam * |x-y|**alpha.

    ``radius`` is the half-width R of the centered input box the bound
    is evaluated over.
    """

    alpha: float
    lam: float = 1.0
    radius: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.lam <= 0 or self.radius <= 0:
            raise ValueError("lam and radius must be positive")

    def omega(self, r: float) -> float:
        """Modulus of continuity omega(r) = lam * r**alpha."""
        if r < 0:
            raise ValueError("modulus argument must be nonnegative")
        return self.lam * r ** self.alpha


@dataclass(frozen=True)
class BoundsReport:
    """Evaluated bounds plus the inputs they came from."""

    upper_bound: float
    upper_bound_unit_box: float
    vc_shape: float
    inputs: dict
    notes: str


def l2_seminorm(values) -> float:
    """Root mean square over the window: sqrt((1/tau) * sum |v_n|^2)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("seminorm of an empty value set is undefined")
    return float(np.sqrt(np.mean(np.abs(v) ** 2)))


def _check_bound_args(k: int, g: int, n_hidden: int, d: int):
    if k < 1 or g < 1 or n_hidden < 1 or d < 1:
        raise ValueError("k, G, N, d must all be >= 1")


def _mesh_term(k: int, g: int) -> float:
    """min{ sqrt(2)/sqrt(k-1), sqrt(1/3) * sqrt(k)/G }; only the G branch at k=1.

    The first branch is the spline quasi-interpolation radius and is
    undefined at k = 1; the min structure keeps the G branch valid alone.
    """
    g_branch = math.sqrt(1.0 / 3.0) * math.sqrt(k) / g
    if k == 1:
        return g_branch
    return min(math.sqrt(2.0) / math.sqrt(k - 1.0), g_branch)


def upper_bound(holder: HolderSpec, k: int, g: int, n_hidden: int, d: int,
                lipschitz: float) -> float:
    """Approximation error bound over the box of half-width ``holder.radius``.

    lam * N * (L*d + 1) * R**alpha * mesh_term**alpha, where mesh_term is
    the min of the degree and grid branches.  Monotone non-increasing in
    G, linear in N.
    """
    _check_bound_args(k, g, n_hidden, d)
    if lipschitz < 0:
        raise ValueError("lipschitz constant must be nonnegative")
    mesh = _mesh_term(k, g)
    return holder.lam * n_hidden * (lipschitz * d + 1.0) * holder.radius ** holder.alpha * mesh ** holder.alpha


def upper_bound_unit_box(holder: HolderSpec, k: int, g: int, n_hidden: int, d: int,
                         lipschitz: float) -> float:
    """Unit-box variant: N * (L*d + 1) * omega(mesh_term)."""
    _check_bound_args(k, g, n_hidden, d)
    if lipschitz < 0:
        raise ValueError("lipschitz constant must be nonnegative")
    return n_hidden * (lipschitz * d + 1.0) * holder.omega(_mesh_term(k, g))


def vc_lower_bound_shape(k: int, g: int, n_hidden: int, d: int, alpha: float) -> float:
    """Shape factor (N*P*(d+1)*(d+N+1)*ln((d+1)*P))**(-alpha/d), P = G+k-1.

    This is the best-approximation lower bound modulo its unknown
    constant.  Evaluated in the log domain so large d and N cannot
    overflow; the value always lies in (0, 1) and tends to 1 as d grows
    with N = 2d+1.
    """
    _check_bound_args(k, g, n_hidden, d)
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    p = g + k - 1
    log_base = (
        math.log(n_hidden) + math.log(p) + math.log(d + 1.0)
        + math.log(d + n_hidden + 1.0) + math.log(math.log((d + 1.0) * p))
    )
    return math.exp(-alpha / d * log_base)


def piece_count(k: int, g: int) -> tuple[int, int]:
    """(pieces, basis_count) for a clamped degree-k basis with G intervals.

    The VC argument counts P = G + k - 1 polynomial pieces per activation
    (interior breakpoints only), while the basis itself has G + k
    functions; both counts are reported so they are never conflated.
    """
    if k < 1 or g < 1:
        raise ValueError("k and G must be >= 1")
    return g + k - 1, g + k


def bounds_report(holder: HolderSpec, k: int, g: int, n_hidden: int, d: int,
                  lipschitz: float) -> BoundsReport:
    """All bound calculators evaluated on one parameter set."""
    pieces, basis_count = piece_count(k, g)
    return BoundsReport(
        upper_bound=upper_bound(holder, k, g, n_hidden, d, lipschitz),
        upper_bound_unit_box=upper_bound_unit_box(holder, k, g, n_hidden, d, lipschitz),
        vc_shape=vc_lower_bound_shape(k, g, n_hidden, d, holder.alpha),
        inputs={
            "k": k, "G": g, "N": n_hidden, "d": d,
            "L": lipschitz, "alpha": holder.alpha, "lam": holder.lam,
            "R": holder.radius, "P_pieces": pieces, "basis_count": basis_count,
        },
        notes="lower bound holds modulo an unknown constant; "
              "upper bound assumes the supplied Holder parameters",
    )


def lipschitz_estimate(net: KanNetwork, grid: int = LIPSCHITZ_GRID) -> float:
    """Upper estimate of the network's Lipschitz constant (Euclidean metric).

    Per edge, the maximum |spline derivative| over a dense grid, chained
    through the two layers:  L = max_m sum_j L_out[m,j] * sum_i L_in[j,i]
    with the affine rescaling slopes folded in.  Sampling can only
    underestimate the per-edge maxima slightly; with splines of modest
    degree on 4096 points the estimate dominates observed difference
    quotients in practice.
    """
    ts = np.linspace(0.0, 1.0, grid)
    d_in = eval_basis_derivative(net.inner_basis, ts)
    d_out = eval_basis_derivative(net.outer_basis, ts)
    in_slope = 1.0 / (net.input_hi - net.input_lo)
    hid_slope = 1.0 / (net.hidden_hi - net.hidden_lo)
    # (grid, hidden, d_in) edge derivatives, max over the grid
    inner_max = np.abs(np.einsum("gq,jiq->gji", d_in, net.inner_coeffs)).max(axis=0)
    inner_max = inner_max * in_slope[None, :]
    l_hidden = inner_max.sum(axis=1)  # Lipschitz of each z_j w.r.t. x
    outer_max = np.abs(np.einsum("gq,mjq->gmj", d_out, net.outer_coeffs)).max(axis=0)
    per_output = (outer_max * hid_slope) @ l_hidden
    return float(per_output.max()) if per_output.size else 0.0


def gronwall_envelope(z0: float, eps: float, lipschitz: float, t) -> Array:
    """Perturbation envelope (||z(0)|| + eps*t) * exp(L*t)."""
    t = np.asarray(t, dtype=np.float64)
    return (z0 + eps * t) * np.exp(lipschitz * t)


def gronwall_study(model, field, x0, t_list, rtol: float = 1e-13, atol: float = 1e-13):
    """Max-norm state discrepancy between two fields at each horizon.

    ``model`` may be a KanNetwork or any state->derivative callable; both
    fields are integrated once over [0, max(t_list)] and compared exactly
    at the listed times.  Returns a list of (T, error) pairs.
    """
    t_list = sorted(float(t) for t in t_list)
    if not t_list or t_list[0] <= 0:
        raise ValueError("horizons must be positive")
    if isinstance(model, KanNetwork):
        net = model
        model_field = lambda y: kan_mod.forward(net, y)  # noqa: E731
    else:
        model_field = model
    x0 = np.asarray(x0, dtype=np.float64)
    t_max = t_list[-1]

    def run(f):
        sol = solve_ivp(lambda _t, y: f(y), (0.0, t_max), x0, method="DOP853",
                        rtol=rtol, atol=atol, t_eval=t_list)
        if not sol.success:
            raise IntegrationError(sol.message or "integration failed")
        if not np.all(np.isfinite(sol.y)):
            raise IntegrationError("integration produced non-finite states")
        return sol.y  # (d, len(t_list))

    ref = run(field)
    learned = run(model_field)
    gaps = np.max(np.abs(ref - learned), axis=0)
    return [(t, float(e)) for t, e in zip(t_list, gaps)]


def fit_log_linear(xs, ys) -> tuple[float, float]:
    """Slope and correlation of log(y) against x (exponential-growth fit)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.log(np.asarray(ys, dtype=np.float64))
    slope, _ = np.polyfit(xs, ys, 1)
    corr = np.corrcoef(xs, ys)[0, 1]
    return float(slope), float(corr)
