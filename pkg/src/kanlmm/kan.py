"""Two-layer network with learnable B-spline edge activations.

The network computes, for input x in R^d_in,

    y_m = sum_j phi_out[m,j]( z_j ),    z_j = sum_i phi_in[j,i]( x_i ),

where every phi is a spline sum_q c_q B_q(.) over a shared basis per
layer.  Input coordinates are affinely rescaled from their data range
into the inner basis domain [0, 1]; hidden sums are rescaled into [0, 1]
over a range calibrated once at initialization, so both bases stay
static during training.  Inputs falling outside either range are
clamped, extending the splines as constants.

All learnable state lives in two dense coefficient arrays:

    inner_coeffs (hidden, d_in, inner_size)   hidden-major, then input, then basis
    outer_coeffs (d_out, hidden, outer_size)  output-major, then hidden, then basis

The flat parameter vector is inner_coeffs.ravel() followed by
outer_coeffs.ravel(), both in C order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .bspline import BSplineBasis, eval_basis, eval_basis_derivative, make_basis

Array = npt.NDArray[np.float64]

MODEL_VERSION = 1
CORNER_ENUM_LIMIT = 10  # enumerate all 2^d input-box corners only up to here
CALIBRATION_SAMPLES = 1024


class ModelFormatError(ValueError):
    """A model document is malformed or inconsistent."""


class ModelVersionError(ModelFormatError):
    """A model document has an unsupported version tag."""


@dataclass
class KanNetwork:
    """Two-layer spline network; see the module docstring for the layout."""

    inner_basis: BSplineBasis
    outer_basis: BSplineBasis
    input_lo: Array
    input_hi: Array
    hidden_lo: float
    hidden_hi: float
    inner_coeffs: Array
    outer_coeffs: Array

    def __post_init__(self):
        self.input_lo = np.asarray(self.input_lo, dtype=np.float64)
        self.input_hi = np.asarray(self.input_hi, dtype=np.float64)
        self.inner_coeffs = np.asarray(self.inner_coeffs, dtype=np.float64)
        self.outer_coeffs = np.asarray(self.outer_coeffs, dtype=np.float64)
        hidden, d_in, p_in = self.inner_coeffs.shape
        d_out, hidden2, p_out = self.outer_coeffs.shape
        if hidden2 != hidden:
            raise ValueError("inner and outer coefficient arrays disagree on hidden width")
        if p_in != self.inner_basis.size or p_out != self.outer_basis.size:
            raise ValueError("coefficient vectors must match their basis size")
        if self.input_lo.shape != (d_in,) or self.input_hi.shape != (d_in,):
            raise ValueError("input_range must provide one (lo, hi) pair per input")
        if np.any(self.input_hi <= self.input_lo) or not self.hidden_hi > self.hidden_lo:
            raise ValueError("all rescaling ranges must have positive width")

    @property
    def d_in(self) -> int:
        return self.inner_coeffs.shape[1]

    @property
    def hidden(self) -> int:
        return self.inner_coeffs.shape[0]

    @property
    def d_out(self) -> int:
        return self.outer_coeffs.shape[0]

    @property
    def degree(self) -> int:
        return self.inner_basis.degree

    @property
    def intervals(self) -> int:
        return self.inner_basis.intervals

    @property
    def n_params(self) -> int:
        return self.inner_coeffs.size + self.outer_coeffs.size


def init_network(d_in: int, d_out: int | None = None, hidden: int | None = None,
                 degree: int = 3, intervals: int = 64,
                 input_range=None, seed: int = 0) -> KanNetwork:
    """Random network with Xavier-uniform coefficients and a calibrated hidden range.

    Defaults: d_out = d_in and hidden = 2*d_in + 1.  ``input_range`` is a
    (d_in, 2) array of per-coordinate data ranges; omitted, the unit box.
    Coefficients are drawn uniformly from [-s, s] with s = sqrt(6/(fan_in
    + fan_out)) counted at the node owning the activation: (d_in + d_out)
    for inner edges, (hidden + 0) for outer edges.

    The hidden range is set by pushing the input-box corners (all 2^d_in
    when d_in <= 10, else 1024 random sign corners) plus 1024 uniform
    samples through the inner layer and padding the observed span by 10%
    on each side.  Draw order is fixed (inner coefficients, calibration
    points, outer coefficients) so a seed pins down the whole network.
    """
    if d_in < 1:
        raise ValueError(f"d_in must be >= 1, got {d_in}")
    d_out = d_in if d_out is None else d_out
    hidden = 2 * d_in + 1 if hidden is None else hidden
    if d_out < 1 or hidden < 1:
        raise ValueError("d_out and hidden must be >= 1")
    if input_range is None:
        input_range = np.column_stack([np.zeros(d_in), np.ones(d_in)])
    input_range = np.asarray(input_range, dtype=np.float64)
    if input_range.shape != (d_in, 2):
        raise ValueError(f"input_range must be (d_in, 2), got {input_range.shape}")
    lo, hi = input_range[:, 0].copy(), input_range[:, 1].copy()
    if np.any(hi <= lo):
        raise ValueError("each input range must have positive width")

    inner_basis = make_basis(degree, intervals)
    outer_basis = make_basis(degree, intervals)
    rng = np.random.default_rng(seed)

    s_in = np.sqrt(6.0 / (d_in + d_out))
    inner = rng.uniform(-s_in, s_in, size=(hidden, d_in, inner_basis.size))

    if d_in <= CORNER_ENUM_LIMIT:
        bits = ((np.arange(2 ** d_in)[:, None] >> np.arange(d_in)) & 1).astype(np.float64)
    else:
        bits = rng.integers(0, 2, size=(CALIBRATION_SAMPLES, d_in)).astype(np.float64)
    corners = lo + bits * (hi - lo)
    interior = rng.uniform(lo, hi, size=(CALIBRATION_SAMPLES, d_in))
    probe = np.vstack([corners, interior])
    xhat = np.clip((probe - lo) / (hi - lo), 0.0, 1.0)
    basis_vals = eval_basis(inner_basis, xhat.ravel()).reshape(*xhat.shape, inner_basis.size)
    z = np.einsum("biq,jiq->bj", basis_vals, inner)
    z_lo, z_hi = float(z.min()), float(z.max())
    span = z_hi - z_lo
    if span < 1e-12:
        z_lo, z_hi, span = z_lo - 0.5, z_hi + 0.5, 1.0
    hidden_lo = z_lo - 0.1 * span
    hidden_hi = z_hi + 0.1 * span

    s_out = np.sqrt(6.0 / hidden)
    outer = rng.uniform(-s_out, s_out, size=(d_out, hidden, outer_basis.size))

    return KanNetwork(
        inner_basis=inner_basis, outer_basis=outer_basis,
        input_lo=lo, input_hi=hi,
        hidden_lo=hidden_lo, hidden_hi=hidden_hi,
        inner_coeffs=inner, outer_coeffs=outer,
    )


class BatchEvaluator:
    """Forward/backward passes over a fixed sample batch.

    The inner basis matrices depend only on the samples, so they are
    computed once and reused across every training iteration; only the
    hidden-layer basis must be re-evaluated when coefficients move.
    """

    def __init__(self, net: KanNetwork, x: Array):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != net.d_in:
            raise ValueError(f"batch must be (n, {net.d_in})")
        if not np.all(np.isfinite(x)):
            raise ValueError("batch contains non-finite samples")
        self.net = net
        xhat = np.clip((x - net.input_lo) / (net.input_hi - net.input_lo), 0.0, 1.0)
        self.inner_vals = eval_basis(net.inner_basis, xhat.ravel()).reshape(
            x.shape[0], net.d_in, net.inner_basis.size
        )
        self.hidden_slope = 1.0 / (net.hidden_hi - net.hidden_lo)
        self._outer_vals = None
        self._outer_derivs = None
        self._inside = None

    def forward(self, inner_coeffs: Array, outer_coeffs: Array) -> Array:
        net = self.net
        z = np.einsum("biq,jiq->bj", self.inner_vals, inner_coeffs)
        zraw = (z - net.hidden_lo) * self.hidden_slope
        zhat = np.clip(zraw, 0.0, 1.0)
        self._inside = (zraw > 0.0) & (zraw < 1.0)
        self._outer_vals = eval_basis(net.outer_basis, zhat.ravel()).reshape(
            zhat.shape[0], net.hidden, net.outer_basis.size
        )
        self._outer_derivs = eval_basis_derivative(net.outer_basis, zhat.ravel()).reshape(
            self._outer_vals.shape
        )
        return np.einsum("bjq,mjq->bm", self._outer_vals, outer_coeffs)

    def backward(self, outer_coeffs: Array, upstream: Array) -> tuple[Array, Array]:
        """Gradients of sum_b <upstream_b, forward_b> from the last forward pass."""
        if self._outer_vals is None:
            raise RuntimeError("backward requires a preceding forward pass")
        grad_outer = np.einsum("bm,bjq->mjq", upstream, self._outer_vals)
        carrier = np.einsum("bm,mjq->bjq", upstream, outer_coeffs)
        dz = (carrier * self._outer_derivs).sum(axis=2)
        dz *= self.hidden_slope
        dz *= self._inside
        grad_inner = np.einsum("bj,biq->jiq", dz, self.inner_vals)
        return grad_inner, grad_outer


def forward(net: KanNetwork, x) -> Array:
    """Evaluate the network at one point (d_in,) or a batch (n, d_in)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    out = BatchEvaluator(net, batch).forward(net.inner_coeffs, net.outer_coeffs)
    return out[0] if single else out


def gradient(net: KanNetwork, x, upstream) -> Array:
    """Flat gradient of <upstream, forward(net, x)> in parameter order."""
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if not np.all(np.isfinite(upstream)):
        raise ValueError("upstream vector must be finite")
    single = x.ndim == 1
    batch = x[None, :] if single else x
    w = upstream[None, :] if single else upstream
    ev = BatchEvaluator(net, batch)
    ev.forward(net.inner_coeffs, net.outer_coeffs)
    grad_inner, grad_outer = ev.backward(net.outer_coeffs, w)
    return np.concatenate([grad_inner.ravel(), grad_outer.ravel()])


def get_params(net: KanNetwork) -> Array:
    return np.concatenate([net.inner_coeffs.ravel(), net.outer_coeffs.ravel()])


def set_params(net: KanNetwork, vec: Array) -> None:
    vec = np.asarray(vec, dtype=np.float64)
    n_in = net.inner_coeffs.size
    if vec.shape != (net.n_params,):
        raise ValueError(f"expected {net.n_params} parameters, got {vec.shape}")
    net.inner_coeffs = vec[:n_in].reshape(net.inner_coeffs.shape).copy()
    net.outer_coeffs = vec[n_in:].reshape(net.outer_coeffs.shape).copy()


def to_document(net: KanNetwork) -> dict:
    """Plain-dict model document; all arrays as nested lists."""
    return {
        "version": MODEL_VERSION,
        "d_in": net.d_in,
        "N": net.hidden,
        "d_out": net.d_out,
        "k": net.degree,
        "G": net.intervals,
        "input_range": np.column_stack([net.input_lo, net.input_hi]).tolist(),
        "hidden_range": [net.hidden_lo, net.hidden_hi],
        "inner_coeffs": net.inner_coeffs.tolist(),
        "outer_coeffs": net.outer_coeffs.tolist(),
    }


def serialize(net: KanNetwork) -> str:
    """JSON model document (numbers printed exactly round-trippable)."""
    return json.dumps(to_document(net), indent=1)


_DOCUMENT_KEYS = {"version", "d_in", "N", "d_out", "k", "G",
                  "input_range", "hidden_range", "inner_coeffs", "outer_coeffs"}


def deserialize(text: str) -> KanNetwork:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not a valid model document: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    missing = _DOCUMENT_KEYS - set(doc)
    if missing:
        raise ModelFormatError(f"model document is missing keys: {sorted(missing)}")
    extra = set(doc) - _DOCUMENT_KEYS
    if extra:
        raise ModelFormatError(f"model document has unknown keys: {sorted(extra)}")
    if doc["version"] != MODEL_VERSION:
        raise ModelVersionError(
            f"unsupported model version {doc['version']!r}, expected {MODEL_VERSION}"
        )
    try:
        d_in, n, d_out = int(doc["d_in"]), int(doc["N"]), int(doc["d_out"])
        k, g = int(doc["k"]), int(doc["G"])
        input_range = np.asarray(doc["input_range"], dtype=np.float64)
        hidden_range = [float(v) for v in doc["hidden_range"]]
        inner = np.asarray(doc["inner_coeffs"], dtype=np.float64)
        outer = np.asarray(doc["outer_coeffs"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"model document has malformed fields: {exc}") from None
    if input_range.shape != (d_in, 2) or len(hidden_range) != 2:
        raise ModelFormatError("model ranges do not match the declared dimensions")
    if inner.shape != (n, d_in, g + k) or outer.shape != (d_out, n, g + k):
        raise ModelFormatError("coefficient arrays do not match the declared shape")
    try:
        return KanNetwork(
            inner_basis=make_basis(k, g), outer_basis=make_basis(k, g),
            input_lo=input_range[:, 0], input_hi=input_range[:, 1],
            hidden_lo=hidden_range[0], hidden_hi=hidden_range[1],
            inner_coeffs=inner, outer_coeffs=outer,
        )
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None


def save_model(net: KanNetwork, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize(net))
        fh.write("\n")


def load_model(path) -> KanNetwork:
    with open(path) as fh:
        return deserialize(fh.read())
