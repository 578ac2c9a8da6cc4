"""Gradient-descent training and its closed-form spectral surrogates."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from gramscope.data import substream
from gramscope.network import NetworkState, preactivations

_STREAM_BATCH = 21


class DivergenceError(RuntimeError):
    def __init__(self, step):
        super().__init__(f"non-finite loss at step {step}")
        self.step = step


@dataclass(frozen=True)
class TrainConfig:
    eta: float
    steps: int
    batch: Optional[int] = None  # None = full-batch gradient descent
    record_every: int = 1
    kappa: float = 0.01  # failure-probability budget, reported only
    loss: str = "quadratic"
    seed: int = 0  # batch-sampling stream
    train_output: bool = False
    snapshot_steps: Sequence[int] = ()
    stop_loss: float = 0.0  # stop at the first recorded step at or below this

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("learning rate must be nonnegative")
        if self.loss not in ("quadratic", "cross-entropy"):
            raise ValueError(f"unknown loss {self.loss!r}")


@dataclass
class Trajectory:
    steps: np.ndarray
    loss: np.ndarray
    residuals: np.ndarray  # one row per recorded step: u - y (or class encoding)
    max_drift: np.ndarray
    movement_ok: Optional[np.ndarray] = None
    snapshots: Dict[int, np.ndarray] = field(default_factory=dict)
    final_W: Optional[np.ndarray] = None

    def residual_norms(self):
        return np.linalg.norm(self.residuals, axis=1)


def _should_record(step, total, every):
    return step % every == 0 or step == total


def _run_quadratic(net, data, y, spec, cfg, batch_size):
    """Shared GD/SGD loop for the quadratic loss; ``batch_size == n`` with a
    sorted index draw reproduces full-batch descent bitwise."""
    X = data.X
    n = data.n
    y = np.asarray(y, dtype=float)
    W = net.W.copy()
    a = net.a.copy()
    W0 = net.W
    scale = net.c_phi / np.sqrt(net.m)
    sgd = batch_size is not None
    gen = substream(cfg.seed, _STREAM_BATCH) if sgd else None

    rec_steps: List[int] = []
    rec_loss: List[float] = []
    rec_resid: List[np.ndarray] = []
    rec_drift: List[float] = []
    snapshots = {}
    snap_wanted = set(int(s) for s in cfg.snapshot_steps)

    def bias(Z):
        if net.b is not None:
            Z += net.b[:, None]
        return Z

    def record(step, r):
        loss_val = 0.5 * float(r @ r)
        if not np.isfinite(loss_val):
            raise DivergenceError(step)
        rec_steps.append(step)
        rec_loss.append(loss_val)
        rec_resid.append(r.copy())
        rec_drift.append(float(np.sqrt(np.max(np.sum((W - W0) ** 2, axis=1)))))
        if step in snap_wanted:
            snapshots[step] = W.copy()

    Z = bias(W @ X)
    r = scale * (spec.f(Z).T @ a) - y
    record(0, r)
    for step in range(1, cfg.steps + 1):
        if sgd:
            idx = np.sort(gen.permutation(n)[:batch_size])
            Xb = X[:, idx]
            phi_b, dphi_b = spec.f_and_df(bias(W @ Xb))
            rb = scale * (phi_b.T @ a) - y[idx]
            coeff = (a[:, None] * dphi_b) * rb[None, :]
            grad = (scale * (n / batch_size)) * (coeff @ Xb.T)
            if cfg.train_output:
                grad_a = (scale * (n / batch_size)) * (phi_b @ rb)
        else:
            phi_b, dphi_b = spec.f_and_df(bias(W @ X))
            rb = scale * (phi_b.T @ a) - y
            coeff = (a[:, None] * dphi_b) * rb[None, :]
            grad = scale * (coeff @ X.T)
            if cfg.train_output:
                grad_a = scale * (phi_b @ rb)
        W -= cfg.eta * grad
        if cfg.train_output:
            a -= cfg.eta * grad_a
        if _should_record(step, cfg.steps, cfg.record_every):
            Z = bias(W @ X)
            r = scale * (spec.f(Z).T @ a) - y
            record(step, r)
            if cfg.stop_loss > 0.0 and rec_loss[-1] <= cfg.stop_loss:
                break

    return Trajectory(
        steps=np.array(rec_steps),
        loss=np.array(rec_loss),
        residuals=np.array(rec_resid),
        max_drift=np.array(rec_drift),
        snapshots=snapshots,
        final_W=W,
    )


def train_gd(net, data, spec, cfg, y=None):
    """Full-batch gradient descent on the quadratic loss (hidden layer
    trained; output weights frozen unless ``cfg.train_output``)."""
    if cfg.loss != "quadratic":
        raise ValueError("train_gd runs the quadratic loss")
    return _run_quadratic(net, data, data.y if y is None else y, spec, cfg, None)


def train_sgd(net, data, spec, cfg, y=None):
    """Minibatch descent with the gradient scaled by ``n / batch``.

    Batches are drawn uniformly without replacement from a seeded stream;
    with ``batch == n`` the trajectory is bitwise identical to
    :func:`train_gd`.
    """
    if cfg.loss != "quadratic":
        raise ValueError("train_sgd runs the quadratic loss")
    b = cfg.batch
    if b is None or not 1 <= b <= data.n:
        raise ValueError("batch size must lie in [1, n]")
    return _run_quadratic(net, data, data.y if y is None else y, spec, cfg, b)


def movement_condition(traj, spec, n, lambda_min):
    """Flag recorded steps whose weight drift stays within
    ``lambda_min / (4 alpha beta n)``; attaches and returns the flags."""
    if lambda_min <= 0:
        raise ValueError("lambda_min must be positive")
    denom = 4.0 * spec.lipschitz_alpha * spec.smooth_beta * n
    # piecewise-linear activations (zero smoothness constant) never move the
    # Gram entries through curvature; the bound is vacuous there
    bound = lambda_min / denom if denom > 0 else float("inf")
    flags = traj.max_drift <= bound
    traj.movement_ok = flags
    return flags


@dataclass(frozen=True)
class PredictedResidual:
    value: float
    stable: bool


def spectral_predict(spectrum, u0, y, eta, c_phi, t):
    """Closed-form residual norm of linearized descent after ``t`` steps:

    ``sqrt( sum_i (1 - eta c^2 lam_i)^{2t} (v_i^T (y - u0))^2 )``.

    ``stable`` is False when ``eta c^2 lam_max >= 1``.
    """
    r0 = np.asarray(y, dtype=float) - np.asarray(u0, dtype=float)
    proj = spectrum.eigenvectors.T @ r0
    decay = 1.0 - eta * c_phi**2 * spectrum.eigenvalues
    val = float(np.sqrt(np.sum(decay ** (2 * t) * proj**2)))
    return PredictedResidual(value=val, stable=bool(eta * c_phi**2 * spectrum.lam_max < 1.0))


def flow_surrogate(spectrum, u0, y, t):
    """Gradient-flow residual vector
    ``y - u(t) = sum_i e^{-lam_i t} v_i v_i^T (y - u0)``."""
    r0 = np.asarray(y, dtype=float) - np.asarray(u0, dtype=float)
    proj = spectrum.eigenvectors.T @ r0
    return spectrum.eigenvectors @ (np.exp(-spectrum.eigenvalues * t) * proj)


def softmax(F):
    F = F - np.max(F, axis=1, keepdims=True)
    E = np.exp(F)
    return E / np.sum(E, axis=1, keepdims=True)


def class_encoding(probs, labels, C):
    """Flatten class probabilities and one-hot labels into the
    ``C (i - 1) + q`` index layout; returns ``(u_tilde, y_tilde)``."""
    n = probs.shape[0]
    u = probs.reshape(n * C)
    yt = np.zeros(n * C)
    yt[np.arange(n) * C + labels] = 1.0
    return u, yt


def train_multiclass(net, data, labels, spec, cfg):
    """Cross-entropy descent of a C-output network (hidden layer trained).

    Records the residual as ``||y_tilde - u_tilde||`` in the flattened class
    encoding.
    """
    if cfg.loss != "cross-entropy":
        raise ValueError("train_multiclass runs the cross-entropy loss")
    labels = np.asarray(labels, dtype=int)
    C = net.n_outputs
    if np.any((labels < 0) | (labels >= C)):
        raise ValueError("labels must lie in [0, C)")
    X = data.X
    W = net.W.copy()
    A = net.a
    W0 = net.W
    scale = net.c_phi / np.sqrt(net.m)

    rec_steps, rec_loss, rec_resid, rec_drift = [], [], [], []

    def evaluate(step):
        Z = preactivations(NetworkState(W, A, net.b, net.scheme, net.seed,
                                        net.activation, net.c_phi), X)
        phi = spec.f(Z)
        F = scale * (phi.T @ A)  # n x C logits
        P = softmax(F)
        loss_val = -float(np.sum(np.log(P[np.arange(data.n), labels] + 1e-300)))
        if not np.isfinite(loss_val):
            raise DivergenceError(step)
        u, yt = class_encoding(P, labels, C)
        rec_steps.append(step)
        rec_loss.append(loss_val)
        rec_resid.append(u - yt)
        rec_drift.append(float(np.sqrt(np.max(np.sum((W - W0) ** 2, axis=1)))))
        return Z, P

    Z, P = evaluate(0)
    for step in range(1, cfg.steps + 1):
        Ydelta = P.copy()
        Ydelta[np.arange(data.n), labels] -= 1.0  # dL/dF
        coeff = spec.df(Z) * (A @ Ydelta.T)  # m x n
        W -= cfg.eta * scale * (coeff @ X.T)
        if _should_record(step, cfg.steps, cfg.record_every):
            Z, P = evaluate(step)
        else:
            Znew = W @ X
            if net.b is not None:
                Znew += net.b[:, None]
            Z = Znew
            P = softmax(scale * (spec.f(Z).T @ A))

    return Trajectory(
        steps=np.array(rec_steps),
        loss=np.array(rec_loss),
        residuals=np.array(rec_resid),
        max_drift=np.array(rec_drift),
        final_W=W,
    )


def finite_difference_check(net, data, y, spec, h=1e-5, n_coords=200, seed=0):
    """Compare the analytic hidden-layer gradient against central differences.

    Coordinates whose preactivation sits within ``10 h`` of a kink are
    excluded (the derivative jump makes the comparison meaningless there).
    Returns the max relative error over the sampled coordinates.
    """
    from gramscope.network import grad_W

    X = data.X if hasattr(data, "X") else np.asarray(data)
    y = np.asarray(y, dtype=float)
    analytic = grad_W(net, data, y, spec)
    gen = np.random.default_rng(seed)
    m, d = net.W.shape
    total = m * d
    coords = gen.choice(total, size=min(n_coords, total), replace=False)
    scale = net.c_phi / np.sqrt(net.m)

    def loss(W):
        Z = W @ X
        if net.b is not None:
            Z = Z + net.b[:, None]
        u = scale * (spec.f(Z).T @ net.a)
        return 0.5 * np.sum((y - u) ** 2)

    worst = 0.0
    base_Z = preactivations(net, X)
    for c in coords:
        k, j = divmod(int(c), d)
        if spec.kink is not None:
            # a coordinate bump of h moves z_ki by at most h * |x_ji|
            if np.min(np.abs(base_Z[k] - spec.kink.location)) < 10.0 * h:
                continue
        Wp = net.W.copy()
        Wp[k, j] += h
        Wm = net.W.copy()
        Wm[k, j] -= h
        fd = (loss(Wp) - loss(Wm)) / (2.0 * h)
        err = abs(fd - analytic[k, j]) / max(abs(analytic[k, j]), abs(fd), 1e-10)
        worst = max(worst, float(err))
    return worst
