"""Dataset generation and validation.

All generators produce unit-norm columns (the normalization assumption every
bound relies on) and record two measured quantities: ``delta``, the minimum
pairwise subspace separation ``min_{i != j} ||(I - x_i x_i^T) x_j||``, and
``d_eff``, the numerical dimension of the span.  Randomness comes from
counter-based Philox substreams keyed by ``(seed, stream, column)`` so the
output is reproducible regardless of generation order.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

RANK_RTOL = 1e-10

# stream tags for keyed substreams
_STREAM_FRAME = 1
_STREAM_LABELS = 2
_STREAM_COLUMN = 3
_STREAM_NOISE = 4


def substream(seed, stream, index=0):
    """Philox generator keyed by ``(seed, stream, index)``.

    Philox keys are two 64-bit words: the seed fills the first, the stream
    tag and a per-item index (column, attempt, chunk, ...) pack into the
    second, so substreams are independent and order-free.
    """
    if not 0 <= index < 2**48:
        raise ValueError("substream index out of range")
    key = np.array(
        [np.uint64(seed) & np.uint64(2**64 - 1),
         (np.uint64(stream) << np.uint64(48)) | np.uint64(index)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


class InfeasibleDatasetError(RuntimeError):
    """Rejection sampling could not reach the requested separation."""


def pairwise_separation(X):
    """``min_{i != j} ||(I - x_i x_i^T) x_j||`` for unit columns."""
    n = X.shape[1]
    if n < 2:
        return float("inf")
    K = np.clip(X.T @ X, -1.0, 1.0)
    off = ~np.eye(n, dtype=bool)
    # ||(I - x x^T) y|| = sqrt(1 - <x, y>^2) for unit x, y
    return float(np.sqrt(np.min(1.0 - K[off] ** 2)))


def effective_rank(X, rtol=RANK_RTOL):
    s = np.linalg.svd(X, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


@dataclass(frozen=True)
class SmoothedSpec:
    """Record of an in-span Gaussian perturbation applied to a base dataset."""

    sigma: float
    base: "Dataset"
    seed: int


@dataclass(frozen=True)
class Dataset:
    """Unit-norm data matrix with labels and measured separation metadata."""

    X: np.ndarray  # d x n, unit-norm columns
    y: np.ndarray  # n labels
    delta: float
    d_eff: int
    seed: int
    smoothed_from: Optional[SmoothedSpec] = None

    @property
    def n(self):
        return self.X.shape[1]

    @property
    def dim(self):
        return self.X.shape[0]

    def validate(self, atol=1e-12):
        norms = np.linalg.norm(self.X, axis=0)
        if np.max(np.abs(norms - 1.0)) > atol:
            raise ValueError("columns are not unit norm")
        if abs(pairwise_separation(self.X) - self.delta) > max(atol, 1e-12):
            raise ValueError("stored delta does not match recomputation")
        if effective_rank(self.X) != self.d_eff:
            raise ValueError("stored effective dimension does not match")
        return True


def make_dataset(X, y, seed, smoothed_from=None):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    return Dataset(
        X=X,
        y=y,
        delta=pairwise_separation(X),
        d_eff=effective_rank(X),
        seed=int(seed),
        smoothed_from=smoothed_from,
    )


def preprocess_unit(raw, labels=None, seed=0):
    """Lift raw columns onto the unit sphere.

    Rescales all columns by one common factor so each has norm at most
    ``1/sqrt(2)``, appends a coordinate bringing every norm to exactly
    ``1/sqrt(2)``, then appends a constant ``1/sqrt(2)`` coordinate.  With
    this lift, a Euclidean gap between raw points implies a subspace
    separation of the output.
    """
    raw = np.asarray(raw, dtype=float)
    norms = np.linalg.norm(raw, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("zero column cannot be lifted to the sphere")
    scale = 1.0 / (np.sqrt(2.0) * np.max(norms))
    Xs = raw * scale
    fill = np.sqrt(np.maximum(0.0, 0.5 - np.sum(Xs**2, axis=0)))
    const = np.full(raw.shape[1], 1.0 / np.sqrt(2.0))
    X = np.vstack([Xs, fill, const])
    X /= np.linalg.norm(X, axis=0)  # remove residual roundoff
    if labels is None:
        labels = substream(seed, _STREAM_LABELS).choice([-1.0, 1.0], raw.shape[1])
    return make_dataset(X, labels, seed)


def circle_lift(n, d, seed):
    """``n`` equally spaced directions on a circle, lifted into ``d`` dimensions.

    Points sit at angles ``pi * j / n`` (equal spacing of the spanned lines,
    so no pair is antipodal and the minimum pairwise angle is ``pi/n``) and
    are embedded by a random orthonormal 2-frame.  Labels are uniform +-1.
    """
    if n < 2:
        raise ValueError("need at least two points")
    if d < 2:
        raise ValueError("ambient dimension must be at least 2")
    theta = np.pi * np.arange(n) / n
    plane = np.vstack([np.cos(theta), np.sin(theta)])
    gen = substream(seed, _STREAM_FRAME)
    frame, _ = np.linalg.qr(gen.standard_normal((d, 2)))
    X = frame @ plane
    X /= np.linalg.norm(X, axis=0)
    y = substream(seed, _STREAM_LABELS).choice([-1.0, 1.0], n)
    return make_dataset(X, y, seed)


def _column_batch(seed, attempt, d, n):
    """n independent d-vectors from per-column substreams."""
    cols = np.empty((d, n))
    for j in range(n):
        cols[:, j] = substream(seed, _STREAM_COLUMN, attempt * 4096 + j).standard_normal(d)
    return cols


def low_dim_embed(n, d_prime, d, min_delta, seed, max_attempts=1000):
    """Unit vectors spanning exactly ``d_prime`` dimensions with separation
    at least ``min_delta``.

    Candidates mix an orthonormal frame with Gaussian noise at decreasing
    mixing weights and are rejection-sampled until the measured separation
    meets the request; large ``min_delta`` with many points is reported as
    infeasible once the attempt budget is exhausted.
    """
    if d_prime > d:
        raise ValueError("span dimension cannot exceed ambient dimension")
    if n < d_prime:
        raise ValueError("need at least d_prime points to span d_prime dimensions")
    # noise-mix weights, from fully random down to exactly orthonormal
    gammas = [4.0, 2.0, 1.0, 0.6, 0.35, 0.2, 0.12, 0.07, 0.04, 0.02, 0.01, 0.0]
    for attempt in range(max_attempts):
        gamma = gammas[min(attempt // max(1, max_attempts // len(gammas)), len(gammas) - 1)]
        if min_delta >= 1.0 and n == d_prime:
            gamma = 0.0
        base_gen = substream(seed, _STREAM_FRAME, attempt)
        Q, _ = np.linalg.qr(base_gen.standard_normal((d_prime, d_prime)))
        cols = Q[:, np.arange(n) % d_prime] + gamma * _column_batch(seed, attempt, d_prime, n)
        cols /= np.linalg.norm(cols, axis=0)
        if effective_rank(cols) != d_prime:
            continue
        if pairwise_separation(cols) >= min_delta - 1e-12:
            frame, _ = np.linalg.qr(substream(seed, _STREAM_FRAME, max_attempts).standard_normal((d, d_prime)))
            X = frame @ cols
            X /= np.linalg.norm(X, axis=0)
            y = substream(seed, _STREAM_LABELS).choice([-1.0, 1.0], n)
            return make_dataset(X, y, seed)
    raise InfeasibleDatasetError(
        f"could not reach separation {min_delta} with n={n}, d'={d_prime} "
        f"in {max_attempts} attempts"
    )


def span_basis(X, rtol=RANK_RTOL):
    """Orthonormal basis (columns) of the numerical span of the data."""
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    r = int(np.count_nonzero(s > rtol * s[0]))
    return U[:, :r]


def smoothed(base, sigma, seed):
    """Perturb a dataset by in-span Gaussian noise and renormalize.

    Ambient Gaussian noise is projected onto the span of the base data
    before being added, so the span (and ``d_eff``) is preserved.
    """
    if sigma <= 0:
        raise ValueError("noise scale must be positive")
    U = span_basis(base.X)
    gen = substream(seed, _STREAM_NOISE)
    noise = U @ (sigma * gen.standard_normal((U.shape[1], base.n)))
    X = base.X + noise
    X /= np.linalg.norm(X, axis=0)
    spec = SmoothedSpec(sigma=float(sigma), base=base, seed=int(seed))
    return make_dataset(X, base.y.copy(), seed, smoothed_from=spec)


def save_csv(dataset, path):
    """One point per line: the coordinates then the label, 17 significant digits."""
    with open(path, "w", newline="\n") as fh:
        for i in range(dataset.n):
            vals = list(dataset.X[:, i]) + [dataset.y[i]]
            fh.write(",".join(format(v, ".17g") for v in vals) + "\n")


def load_csv(path, seed=0):
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    X = rows[:, :-1].T
    y = rows[:, -1]
    return make_dataset(X, y, seed)
