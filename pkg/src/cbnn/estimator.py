"""scikit-learn style facade over the learner and the similarity reduction.

The learner is online and only sees the loss of the action it plays, so the
facade keeps the usual estimator conventions (constructor arguments are
hyper-parameters, learned state ends in ``_``, ``get_params``/``set_params``
and ``clone`` work) while exposing the trial protocol through
:meth:`CBNNBandit.act` and :meth:`CBNNBandit.update`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .canprop import CBNN
from .metric import MetricStore, SimilarityReduction


class CBNNBandit(BaseEstimator):
    """Online nearest-neighbour contextual bandit.

    Parameters
    ----------
    horizon : int
        Number of trials the learner will see (``T``).
    n_actions : int
        Number of actions (``K``); any value ``>= 2``.
    rho : float
        Learning-rate scale.
    backend : {"exact", "grid"}
        Nearest-neighbour backend used to find each trial's similar trial.
    random_state : int or None
        Seed for the learner's sampling.

    Examples
    --------
    >>> import numpy as np
    >>> X = np.random.default_rng(0).random((50, 2))
    >>> L = np.zeros((50, 3)); L[:, 0] = 1.0
    >>> bandit = CBNNBandit(horizon=50, n_actions=3, random_state=0).fit(X, L)
    >>> bandit.actions_.shape
    (50,)
    """

    def __init__(self, horizon=1000, n_actions=2, rho=1.0, backend="exact", random_state=None):
        self.horizon = horizon
        self.n_actions = n_actions
        self.rho = rho
        self.backend = backend
        self.random_state = random_state

    def _start(self, dim):
        self.learner_ = CBNN(self.horizon, self.n_actions, rho=self.rho, seed=self.random_state, pad=True)
        self.reduction_ = SimilarityReduction(dim, backend=self.backend)
        self.n_features_in_ = dim
        self._store = MetricStore(dim, backend=self.backend)
        self._played = []
        self._losses = []

    # ------------------------------------------------------------------
    # trial protocol

    def act(self, x):
        """Register context ``x`` as the next trial and return the sampled action."""
        x = np.asarray(x, dtype=float).ravel()
        if not hasattr(self, "learner_"):
            self._start(x.shape[0])
        elif x.shape[0] != self.n_features_in_:
            raise ValueError(f"context has {x.shape[0]} features, expected {self.n_features_in_}")
        parent = self.reduction_.observe(x)
        action = self.learner_.choose_action(parent)
        self._store.insert(x, len(self._played))
        self._played.append(action)
        return action

    def update(self, loss):
        """Report the loss of the action returned by the last :meth:`act`."""
        check_is_fitted(self, "learner_")
        self.learner_.feedback(loss)
        self._losses.append(float(loss))
        return self

    # ------------------------------------------------------------------
    # batch conveniences

    def partial_fit(self, X, losses):
        """Play one trial per row of ``X``; ``losses`` is the full ``(n, K)`` loss table.

        Only the entry of the chosen action is revealed to the learner.
        """
        X = check_array(X, dtype=float)
        losses = check_array(losses, dtype=float)
        if losses.shape != (X.shape[0], self.n_actions):
            raise ValueError(f"losses must have shape ({X.shape[0]}, {self.n_actions}), got {losses.shape}")
        for x, row in zip(X, losses):
            a = self.act(x)
            self.update(row[a])
        return self

    def fit(self, X, losses):
        """Reset the learner and run it over the whole sequence."""
        for name in ("learner_", "reduction_"):
            if hasattr(self, name):
                delattr(self, name)
        return self.partial_fit(X, losses)

    def predict(self, X):
        """Nearest-neighbour rule: the action played at the closest stored context."""
        check_is_fitted(self, "learner_")
        X = check_array(X, dtype=float)
        played = np.asarray(self._played)
        return np.array([played[self._store.query(x)[1]] for x in X], dtype=np.int64)

    @property
    def actions_(self):
        check_is_fitted(self, "learner_")
        return np.asarray(self._played, dtype=np.int64)

    @property
    def losses_(self):
        check_is_fitted(self, "learner_")
        return np.asarray(self._losses)
