"""Multistep residual losses over a spline network and full-batch Adam.

The plain loss J_h is the mean squared multistep residual of the network
over the trajectory; the augmented loss J_ah adds collocation rows that
pin the earliest window values to one-sided difference estimates, making
the minimizer unique the same way the augmented linear system is.  Both
losses are quadratic in the network outputs, so their output-space
gradient is a sparse scatter of the residual rows and the coefficient
gradient follows from one backward pass.

Training is deterministic: full-batch gradients, a seeded initializer,
and a fixed summation order; a given (config, trajectory) pair always
produces bitwise-identical parameters.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np
import numpy.typing as npt

from . import kan, lmm
from .analysis import l2_seminorm
from .kan import BatchEvaluator, KanNetwork
from .lmm import LmmScheme
from .odeint import Trajectory

Array = npt.NDArray[np.float64]

LOSS_KINDS = ("jh", "jah")
INPUT_MARGIN = 0.05
DIVERGENCE_LIMIT = 1e12


class TrainingDivergedError(RuntimeError):
    """Loss blew past the divergence guard; carries the iteration index."""

    def __init__(self, iteration: int, loss: float):
        super().__init__(f"loss diverged at iteration {iteration}: {loss!r}")
        self.iteration = iteration
        self.loss = loss


@dataclass
class TrainConfig:
    """Hyperparameters for one training run.

    ``iterations = 0`` is allowed and returns the freshly initialized
    network, which makes initialization effects observable.
    """

    family: str = "am"
    steps: int = 1
    degree: int = 3
    intervals: int = 64
    hidden: int | None = None
    learning_rate: float = 0.01
    iterations: int = 2200
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    loss_kind: str = "jah"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}, got {self.loss_kind!r}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("adam betas must lie in [0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass
class TrainReport:
    """What happened during a run, sufficient to reproduce and to judge it."""

    loss_trace: Array
    final_loss: float
    best_loss: float
    best_iteration: int
    wall_clock_s: float
    seed: int
    config: dict = field(default_factory=dict)
    seminorm_error: float | None = None
    seminorm_error_components: list | None = None


class ResidualStencil:
    """Precomputed data terms of J_h / J_ah for one (scheme, trajectory) pair.

    Exposes the loss and its gradient with respect to the network values
    U[n] ~ u(x_n) stacked over every grid state.  The multistep residual
    rows read R = sum_m beta_m U[shift_m] - b with b the (1/h) alpha
    combination of the data; the augmented variant adds identity rows
    U[r..r+aux-1] - c with c the one-sided difference estimates.
    """

    def __init__(self, scheme: LmmScheme, traj: Trajectory, kind: str):
        if kind not in LOSS_KINDS:
            raise ValueError(f"loss kind must be one of {LOSS_KINDS}, got {kind!r}")
        m, n1 = scheme.steps, traj.n_steps
        needed = m if kind == "jh" else m + scheme.order
        if n1 < needed:
            raise ValueError(f"trajectory too short: need n1 >= {needed}, got {n1}")
        self.scheme = scheme
        self.kind = kind
        self.window = lmm.index_window(scheme, n1)
        h = traj.h
        x = traj.states
        self.shifts = [slice(m - mm, n1 + 1 - mm) for mm in range(m + 1)]
        self.b = np.zeros((n1 - m + 1, traj.dim))
        for mm, sl in enumerate(self.shifts):
            self.b += (scheme.alpha[mm] / h) * x[sl]
        rows = self.b.shape[0]
        if kind == "jh":
            self.aux_slice = slice(0, 0)
            self.c = np.zeros((0, traj.dim))
            self.norm = float(rows)
        else:
            w = self.window
            mu = lmm.fdm_coefficients(scheme.order)
            self.c = np.zeros((w.aux_count, traj.dim))
            for j, n in enumerate(range(w.r, w.r + w.aux_count)):
                self.c[j] = mu @ x[n : n + scheme.order + 1] / h
            self.aux_slice = slice(w.r, w.r + w.aux_count)
            self.norm = float(w.tau)

    def lmm_residual(self, u: Array) -> Array:
        res = -self.b
        for mm, sl in enumerate(self.shifts):
            beta = self.scheme.beta[mm]
            if beta != 0.0:
                res = res + beta * u[sl]
        return res

    def loss(self, u: Array) -> float:
        value = float(np.sum(self.lmm_residual(u) ** 2))
        if self.kind == "jah":
            value += float(np.sum((u[self.aux_slice] - self.c) ** 2))
        return value / self.norm

    def loss_and_grad(self, u: Array) -> tuple[float, Array]:
        res = self.lmm_residual(u)
        grad = np.zeros_like(u)
        for mm, sl in enumerate(self.shifts):
            beta = self.scheme.beta[mm]
            if beta != 0.0:
                grad[sl] += (2.0 * beta / self.norm) * res
        value = float(np.sum(res ** 2))
        if self.kind == "jah":
            aux_res = u[self.aux_slice] - self.c
            value += float(np.sum(aux_res ** 2))
            grad[self.aux_slice] += (2.0 / self.norm) * aux_res
        return value / self.norm, grad


def loss_jh(net: KanNetwork, traj: Trajectory, scheme: LmmScheme) -> float:
    """Mean squared multistep residual of the network on the trajectory."""
    stencil = ResidualStencil(scheme, traj, "jh")
    return stencil.loss(kan.forward(net, traj.states))


def loss_jah(net: KanNetwork, traj: Trajectory, scheme: LmmScheme) -> float:
    """Augmented loss: multistep residual plus one-sided collocation rows."""
    stencil = ResidualStencil(scheme, traj, "jah")
    return stencil.loss(kan.forward(net, traj.states))


def input_range_from_states(states: Array, margin: float = INPUT_MARGIN) -> Array:
    """Per-coordinate (lo, hi) of the data, padded by ``margin`` of the span."""
    lo = states.min(axis=0)
    hi = states.max(axis=0)
    span = hi - lo
    flat = span < 1e-12
    pad = np.where(flat, 0.5, margin * span)
    return np.column_stack([lo - pad, hi + pad])


def train(config: TrainConfig, traj: Trajectory,
          true_field=None) -> tuple[KanNetwork, TrainReport]:
    """Fit a network to one trajectory by Adam on the selected residual loss.

    Full-batch gradients, fixed learning rate, bias-corrected first and
    second moments; the returned network carries the best-loss iterate
    seen during the run (initialization included).  When ``true_field``
    is given, the report also carries the windowed root-mean-square gap
    between the learned and true fields at the grid states.
    """
    t_start = time.perf_counter()
    scheme = lmm.scheme(config.family, config.steps)
    stencil = ResidualStencil(scheme, traj, config.loss_kind)

    net = kan.init_network(
        d_in=traj.dim,
        d_out=traj.dim,
        hidden=config.hidden,
        degree=config.degree,
        intervals=config.intervals,
        input_range=input_range_from_states(traj.states),
        seed=config.seed,
    )
    evaluator = BatchEvaluator(net, traj.states)
    n_inner = net.inner_coeffs.size
    inner_shape, outer_shape = net.inner_coeffs.shape, net.outer_coeffs.shape
    params = kan.get_params(net)

    def split(p: Array) -> tuple[Array, Array]:
        return p[:n_inner].reshape(inner_shape), p[n_inner:].reshape(outer_shape)

    def evaluate(p: Array) -> tuple[float, Array]:
        inner, outer = split(p)
        u = evaluator.forward(inner, outer)
        return stencil.loss_and_grad(u)[0], u

    m_state = np.zeros_like(params)
    v_state = np.zeros_like(params)
    trace = np.zeros(config.iterations)
    best_loss = np.inf
    best_params = params.copy()
    best_iteration = 0

    for it in range(config.iterations):
        inner, outer = split(params)
        u = evaluator.forward(inner, outer)
        loss, grad_u = stencil.loss_and_grad(u)
        if not np.isfinite(loss) or loss > DIVERGENCE_LIMIT:
            raise TrainingDivergedError(it, loss)
        trace[it] = loss
        if loss < best_loss:
            best_loss = loss
            best_params = params.copy()
            best_iteration = it
        g_inner, g_outer = evaluator.backward(outer, grad_u)
        grad = np.concatenate([g_inner.ravel(), g_outer.ravel()])
        t = it + 1
        m_state = config.beta1 * m_state + (1.0 - config.beta1) * grad
        v_state = config.beta2 * v_state + (1.0 - config.beta2) * grad * grad
        m_hat = m_state / (1.0 - config.beta1 ** t)
        v_hat = v_state / (1.0 - config.beta2 ** t)
        params = params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)

    final_loss, _ = evaluate(params)
    if not np.isfinite(final_loss) or final_loss > DIVERGENCE_LIMIT:
        raise TrainingDivergedError(config.iterations, final_loss)
    if final_loss < best_loss:
        best_loss = final_loss
        best_params = params.copy()
        best_iteration = config.iterations

    kan.set_params(net, best_params)
    report = TrainReport(
        loss_trace=trace,
        final_loss=final_loss,
        best_loss=float(best_loss),
        best_iteration=best_iteration,
        wall_clock_s=time.perf_counter() - t_start,
        seed=config.seed,
        config=asdict(config),
    )
    if true_field is not None:
        _, u_best = evaluate(best_params)
        w = stencil.window
        sl = slice(w.r, w.q + 1)
        fvals = np.apply_along_axis(true_field, 1, traj.states)
        err = u_best[sl] - fvals[sl]
        report.seminorm_error = l2_seminorm(np.linalg.norm(err, axis=1))
        report.seminorm_error_components = [l2_seminorm(err[:, c]) for c in range(err.shape[1])]
    return net, report


def fit_report_seminorm(net: KanNetwork, traj: Trajectory, scheme: LmmScheme, true_field) -> float:
    """Windowed RMS gap between the network and a known field at grid states."""
    w = lmm.index_window(scheme, traj.n_steps)
    sl = slice(w.r, w.q + 1)
    u = kan.forward(net, traj.states[sl])
    fvals = np.apply_along_axis(true_field, 1, traj.states[sl])
    return l2_seminorm(np.linalg.norm(u - fvals, axis=1))
