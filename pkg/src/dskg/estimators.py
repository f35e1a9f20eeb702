"""scikit-learn style wrappers around the solvers.

Nothing is learned from data here: ``fit`` validates the hyper-parameters
and freezes the derived objects (grid, constants), while ``predict`` and
``transform`` run the solvers on each row of ``X``.  Rows of field-valued
inputs hold ``u0`` followed by ``u1`` flattened on the configured grid.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .blowup import integrate_w
from .params import PhysicalParams, derive_constants
from .propagator import direct_solve, picard_solve
from .scattering import compute_asymptotic_state
from .spectral import Field, Grid


class _FieldEstimator(BaseEstimator):
    def __init__(self, n=1, c=1.0, hbar=1.0, H=0.0, mass=1.0, lam=1.0, N=64, L=20.0,
                 T=1.0, dt=1e-3, method="direct", equation="shifted_cubic", dealias=True):
        self.n = n
        self.c = c
        self.hbar = hbar
        self.H = H
        self.mass = mass
        self.lam = lam
        self.N = N
        self.L = L
        self.T = T
        self.dt = dt
        self.method = method
        self.equation = equation
        self.dealias = dealias

    def fit(self, X=None, y=None):
        if self.method not in ("direct", "picard"):
            raise ValueError(f"method must be 'direct' or 'picard', got {self.method!r}")
        self.params_ = PhysicalParams(n=self.n, c=self.c, hbar=self.hbar, H=self.H,
                                      mass=self.mass, lam=self.lam)
        self.derived_ = derive_constants(self.params_)
        self.grid_ = Grid(self.n, self.N, self.L)
        if X is not None:
            self._split(X)
        return self

    def _split(self, X):
        X = check_array(X, dtype=float)
        size = int(np.prod(self.grid_.shape))
        if X.shape[1] != 2 * size:
            raise ValueError(f"rows must hold u0 and u1 ({2 * size} values), got {X.shape[1]}")
        return X[:, :size], X[:, size:]

    def _trajectory(self, u0, u1):
        g = self.grid_
        a, b = Field(g, u0.reshape(g.shape)), Field(g, u1.reshape(g.shape))
        if self.method == "picard":
            traj, _ = picard_solve(a, b, self.T, self.params_, self.derived_, dt=self.dt,
                                   dealias=self.dealias)
            return traj
        return direct_solve(a, b, self.T, self.dt, self.equation, self.params_, self.derived_,
                            dealias=self.dealias)


class KleinGordonEvolver(TransformerMixin, _FieldEstimator):
    """Evolves each row of initial data to time ``T``.

    ``predict`` returns ``u(T)``; ``transform`` returns ``(u(T), u_t(T))``
    in the same row layout as the input.
    """

    def predict(self, X):
        check_is_fitted(self, "grid_")
        U0, U1 = self._split(X)
        return np.stack([self._trajectory(a, b).u[-1].ravel() for a, b in zip(U0, U1)])

    def transform(self, X):
        check_is_fitted(self, "grid_")
        U0, U1 = self._split(X)
        out = []
        for a, b in zip(U0, U1):
            tr = self._trajectory(a, b)
            out.append(np.concatenate([tr.u[-1].ravel(), tr.ut[-1].ravel()]))
        return np.stack(out)


class ScatteringEstimator(TransformerMixin, _FieldEstimator):
    """Maps initial data to the asymptotic free data ``(u_+0, u_+1)``."""

    def __init__(self, n=1, c=1.0, hbar=1.0, H=0.5, mass=1.0, lam=1.0, N=64, L=40.0,
                 T=60.0, dt=1e-2, method="direct", equation="shifted_cubic", dealias=True,
                 tail_tol=1e-6):
        super().__init__(n=n, c=c, hbar=hbar, H=H, mass=mass, lam=lam, N=N, L=L, T=T, dt=dt,
                         method=method, equation=equation, dealias=dealias)
        self.tail_tol = tail_tol

    def transform(self, X):
        check_is_fitted(self, "grid_")
        U0, U1 = self._split(X)
        out = []
        for a, b in zip(U0, U1):
            tr = self._trajectory(a, b)
            ast = compute_asymptotic_state(tr, self.params_, self.derived_,
                                           tail_tol=self.tail_tol, dealias=self.dealias)
            out.append(np.concatenate([ast.u_plus0.samples.ravel(), ast.u_plus1.samples.ravel()]))
        return np.stack(out)


class BlowupEstimator(BaseEstimator):
    """Predicts blow-up times of the scalar comparison dynamics for rows ``(w0, w1)``.

    Rows without blow-up before ``t_max`` predict ``inf``.
    """

    def __init__(self, n=1, c=1.0, hbar=1.0, H=0.5, mass=1.0, p=2.0, r_support=1.0,
                 b_model="exact_b", t_max=100.0, rtol=1e-12):
        self.n = n
        self.c = c
        self.hbar = hbar
        self.H = H
        self.mass = mass
        self.p = p
        self.r_support = r_support
        self.b_model = b_model
        self.t_max = t_max
        self.rtol = rtol

    def fit(self, X=None, y=None):
        self.params_ = PhysicalParams(n=self.n, c=self.c, hbar=self.hbar, H=self.H,
                                      mass=self.mass, p=self.p, mass_squared_sign=-1)
        self.derived_ = derive_constants(self.params_)
        if self.derived_.Q > 0:
            raise ValueError(f"blow-up needs Q <= 0, got {self.derived_.Q}")
        return self

    def predict(self, X):
        check_is_fitted(self, "derived_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError("rows must be (w0, w1)")
        out = []
        for w0, w1 in X:
            wt = integrate_w(w0, w1, self.params_, self.derived_, b_model=self.b_model,
                             r_support0=self.r_support, t_max=self.t_max, rtol=self.rtol)
            out.append(math.inf if wt.blowup_time is None else wt.blowup_time)
        return np.array(out)
