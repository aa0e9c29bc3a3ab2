"""Metric contexts: nearest-neighbour stores, grid quantisation, parameters.

The learner only needs, for each new context, an earlier trial whose context
is (approximately) nearest.  :class:`MetricStore` supplies that with two exact
backends: a vectorised linear scan and a uniform grid with ring search for
euclidean contexts.  Ties always go to the earliest trial.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

BACKENDS = ("exact", "grid")


def euclidean(a, b):
    """Euclidean distances from each row of ``a`` to the point ``b``."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return np.sqrt(np.sum(diff * diff, axis=-1))


class MetricStore:
    """Growing set of contexts answering nearest-neighbour queries.

    Parameters
    ----------
    dim : int
        Context dimension.
    backend : {"exact", "grid"}
        ``exact`` scans every stored point (any metric).  ``grid`` buckets
        euclidean points into cubes of side ``cell`` and searches rings of
        cubes outward; it is also exact.
    metric : callable, optional
        ``metric(points, x) -> distances``; only for the exact backend.
    cell : float, optional
        Grid cube side (default 1/16).

    Attributes
    ----------
    c : float
        Approximation factor guaranteed by the backend (1 for both).
    """

    def __init__(self, dim, backend="exact", metric=None, cell=None):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
        if backend == "grid" and metric is not None:
            raise ValueError("the grid backend only supports the euclidean metric")
        self.dim = int(dim)
        self.backend = backend
        self.metric = metric or euclidean
        self.c = 1.0
        self.cell = float(cell) if cell is not None else 1.0 / 16
        self._pts = np.empty((16, self.dim))
        self._idx = np.empty(16, dtype=np.int64)
        self._n = 0
        self._seen = {}
        self._cells = {}
        self._lo = None
        self._hi = None
        self._inserts = 0

    def __len__(self):
        return self._n

    @property
    def points(self):
        return self._pts[: self._n]

    @property
    def indices(self):
        return self._idx[: self._n]

    def _vector(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise ValueError(f"context has dimension {x.shape[0]}, store expects {self.dim}")
        return x

    def insert(self, x, index=None):
        """Store ``x`` labelled with trial ``index`` (defaults to insertion count).

        Re-inserting a stored point keeps the earlier index.
        """
        x = self._vector(x)
        self._inserts += 1
        if index is None:
            index = self._inserts
        key = x.tobytes()
        if key in self._seen:
            row = self._seen[key]
            if index < self._idx[row]:
                self._idx[row] = index
            return
        if self._n == self._pts.shape[0]:
            self._pts = np.concatenate([self._pts, np.empty_like(self._pts)])
            self._idx = np.concatenate([self._idx, np.empty_like(self._idx)])
        row = self._n
        self._pts[row] = x
        self._idx[row] = index
        self._n += 1
        self._seen[key] = row
        if self.backend == "grid":
            cell = self._cell_of(x)
            self._cells.setdefault(cell, []).append(row)
            arr = np.array(cell)
            self._lo = arr if self._lo is None else np.minimum(self._lo, arr)
            self._hi = arr if self._hi is None else np.maximum(self._hi, arr)

    def _cell_of(self, x):
        return tuple(int(v) for v in np.floor(x / self.cell))

    def query(self, x):
        """Return ``(point, index)`` of the nearest stored context.

        Among equally near points the one with the smallest trial index wins.
        """
        x = self._vector(x)
        if self._n == 0:
            raise LookupError("nearest-neighbour query on an empty store")
        if self.backend == "grid":
            row = self._grid_query(x)
        else:
            d = self.metric(self.points, x)
            row = self._best(np.arange(self._n), d)
        return self._pts[row].copy(), int(self._idx[row])

    def _best(self, rows, dists):
        m = dists.min()
        ties = rows[dists == m]
        return int(ties[np.argmin(self._idx[ties])])

    def _grid_query(self, x):
        home = np.array(self._cell_of(x))
        # rings beyond the occupied box are empty
        reach = int(max(np.max(np.abs(home - self._lo)), np.max(np.abs(home - self._hi))))
        best_rows = []
        best = math.inf
        for r in range(reach + 1):
            if (2 * r + 1) ** self.dim > 4 * self._n:
                d = euclidean(self.points, x)
                return self._best(np.arange(self._n), d)
            for off in itertools.product(range(-r, r + 1), repeat=self.dim):
                if max(abs(o) for o in off) != r:
                    continue
                rows = self._cells.get(tuple(int(h + o) for h, o in zip(home, off)))
                if rows:
                    best_rows.extend(rows)
            if best_rows:
                rows = np.array(best_rows)
                d = euclidean(self._pts[rows], x)
                best = d.min()
                # any point in ring r+1 or beyond is at least r*cell away; an
                # exact tie there could carry an earlier index, so stop only
                # when strictly closer
                if best < r * self.cell:
                    return self._best(rows, d)
        rows = np.array(best_rows)
        return self._best(rows, euclidean(self._pts[rows], x))


class SimilarityReduction:
    """Turn a stream of contexts into similar-trial indices.

    Trial ``t``'s similar trial is the earliest trial holding the nearest
    earlier context.
    """

    def __init__(self, dim, backend="exact", **kwargs):
        self.store = MetricStore(dim, backend=backend, **kwargs)
        self.t = 0

    def observe(self, x):
        """Register the next context; return its similar trial (``None`` first)."""
        self.t += 1
        parent = None
        if self.t > 1:
            parent = self.store.query(x)[1]
        self.store.insert(x, self.t)
        return parent


def similar_trials(contexts, backend="exact", **kwargs):
    """Similar-trial map ``{t: n(t)}`` for a whole context sequence."""
    contexts = np.asarray(contexts, dtype=float)
    if contexts.ndim == 1:
        contexts = contexts[:, None]
    red = SimilarityReduction(contexts.shape[1], backend=backend, **kwargs)
    out = {}
    for t, x in enumerate(contexts, start=1):
        p = red.observe(x)
        if p is not None:
            out[t] = p
    return out


class GridQuantiser:
    """Round contexts in ``[0, 1]^d`` to the grid of multiples of ``1/q``."""

    def __init__(self, q, d=None):
        if int(q) < 1:
            raise ValueError(f"q must be a positive integer, got {q}")
        self.q = int(q)
        self.d = d

    def __call__(self, z):
        return quantise(z, self.q, self.d)


def quantise(z, q, d=None):
    """Nearest multiple of ``1/q`` per component; exact halves round down."""
    z = np.asarray(z, dtype=float)
    if d is not None and z.reshape(-1).shape[0] != d:
        raise ValueError(f"context has dimension {z.size}, expected {d}")
    if np.any(z < 0.0) or np.any(z > 1.0) or np.any(np.isnan(z)):
        raise ValueError("context components must lie in [0, 1]")
    return np.ceil(z * q - 0.5) / q


def default_params(T, K, d):
    """Grid resolution ``q = ceil((T/K)^(1/(d+1)))`` and ``rho = q^((d-1)/2)``."""
    if T < K or K < 2 or d < 1:
        raise ValueError(f"need T >= K >= 2 and d >= 1, got T={T}, K={K}, d={d}")
    q = max(1, math.ceil((T / K) ** (1.0 / (d + 1))))
    # settle float rounding exactly: q is the least integer with q^(d+1) K >= T
    while q > 1 and (q - 1) ** (d + 1) * K >= T:
        q -= 1
    while q ** (d + 1) * K < T:
        q += 1
    return q, float(q) ** ((d - 1) / 2.0)


def gamma_margin(x, yhat, X, metric=None):
    """Distance from ``x`` to the nearest context in ``X`` labelled differently.

    ``yhat`` is a labelling function (callable) or a sequence of labels for
    ``X`` paired with the label of ``x`` as ``(labels, label_of_x)``.
    Returns ``inf`` when every context shares the label of ``x``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    x = np.asarray(x, dtype=float).reshape(-1)
    if callable(yhat):
        labels = np.array([yhat(row if row.size > 1 else row[0]) for row in X])
        own = yhat(x if x.size > 1 else x[0])
    else:
        labels, own = yhat
        labels = np.asarray(labels)
    mask = labels != own
    if not np.any(mask):
        return math.inf
    d = (metric or euclidean)(X[mask], x)
    return float(d.min())
