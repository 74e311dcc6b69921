"""Markov operator of neighbourhood averaging and its steady state.

The transition matrix is the column-normalised (A + I): entry (i, j) is
(A_ij + I_ij)/(k_j + 1), so multiplying a d x n parameter matrix by it on
the right performs one synchronous round of include-self neighbourhood
averaging. Its stationary vector's l2 norm is the asymptotic compression
factor of per-node parameter spread and hence the inverse of the
initialisation gain.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DegenerateInput, DisconnectedGraph, EmptySample, NotConverged, UnknownFamily
from .graph import Graph


@dataclass(frozen=True)
class MarkovMatrix:
    """Column-stochastic averaging operator in CSC form.

    data_rowform holds the same sparsity pattern read as CSR (the pattern
    of A + I is symmetric), which is what right-multiplication kernels
    need: entry p of row i carries 1/(deg[indices[p]] + 1).
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    data_rowform: np.ndarray

    def matvec(self, x):
        """A' @ x."""
        return _kernels.csc_matvec(self.indptr, self.indices, self.data, x)

    def left_apply(self, z):
        """A' @ Z for a dense (n, d) block, one averaging sweep per column."""
        return _kernels.csc_matmat_dense(self.indptr, self.indices, self.data_rowform, z)

    def right_apply_t(self, wt):
        """(W @ A')^T given W^T as an (n, d) C-contiguous block."""
        return _kernels.csc_matmat_dense(self.indptr, self.indices, self.data, wt)

    def dense(self):
        out = np.zeros((self.n, self.n))
        for j in range(self.n):
            rows = self.indices[self.indptr[j]:self.indptr[j + 1]]
            out[rows, j] = self.data[self.indptr[j]:self.indptr[j + 1]]
        return out


@dataclass(frozen=True)
class SteadyState:
    pi: np.ndarray
    norm: float
    iterations: int
    residual: float


@dataclass(frozen=True)
class MixingEstimate:
    second_eigenvalue_modulus: float
    relaxation_time: float
    empirical_rounds: Optional[int] = None


def markov_from_graph(g: Graph) -> MarkovMatrix:
    n = g.n
    nnz = n + 2 * g.m
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(g.degree + 1, out=indptr[1:])
    indices = np.empty(nnz, dtype=np.int64)
    data = np.empty(nnz, dtype=np.float64)
    inv = 1.0 / (g.degree + 1.0)
    for j in range(n):
        nb = g.neighbors(j)
        pos = int(np.searchsorted(nb, j))
        lo = indptr[j]
        indices[lo:lo + pos] = nb[:pos]
        indices[lo + pos] = j
        indices[lo + pos + 1:indptr[j + 1]] = nb[pos:]
        data[lo:indptr[j + 1]] = inv[j]
    data_rowform = inv[indices]
    for a in (indptr, indices, data, data_rowform):
        a.flags.writeable = False
    return MarkovMatrix(n=n, indptr=indptr, indices=indices,
                        data=data, data_rowform=data_rowform)


def _component_count_ok(m: MarkovMatrix) -> bool:
    return _kernels.bfs_reach_count(m.indptr, m.indices, 0) == m.n


def steady_state_exact(m: MarkovMatrix, tol=1e-12, max_iter=1_000_000) -> SteadyState:
    """Stationary vector by power iteration with sum renormalisation.

    Stops when the infinity-norm residual ||A'x - x|| drops below tol.
    Raises DisconnectedGraph upfront when the operator has more than one
    component, NotConverged (with the best iterate) on iteration budget
    exhaustion.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not _component_count_ok(m):
        raise DisconnectedGraph("operator has multiple components")
    x = np.full(m.n, 1.0 / m.n)
    residual = np.inf
    for it in range(1, max_iter + 1):
        y = m.matvec(x)
        residual = float(np.max(np.abs(y - x)))
        x = y / y.sum()
        if residual <= tol:
            return SteadyState(pi=x, norm=float(np.linalg.norm(x)),
                               iterations=it, residual=residual)
    raise NotConverged(
        f"power iteration did not reach tol={tol} in {max_iter} iterations",
        best=SteadyState(pi=x, norm=float(np.linalg.norm(x)),
                         iterations=max_iter, residual=residual),
        residual=residual)


def vsteady_norm_from_degrees(degree_sample, n_estimate) -> float:
    """Norm estimate from polled degrees: sqrt(<(k+1)^2> / (n <k+1>^2)).

    Exact when the sample is the full degree sequence and n_estimate = n.
    """
    sample = np.asarray(degree_sample, dtype=np.float64)
    if sample.size == 0:
        raise EmptySample("degree sample is empty")
    if n_estimate < 1:
        raise ValueError(f"n_estimate must be >= 1, got {n_estimate}")
    kp1 = sample + 1.0
    return float(np.sqrt((kp1 ** 2).mean() / (n_estimate * kp1.mean() ** 2)))


def vsteady_norm_from_family(family, n_estimate, fitted_exponent=None) -> float:
    """Norm from a family-level scaling law, n^(-alpha).

    regular_like (ER, k-regular, lattice, complete) pins alpha = 0.5;
    heavy-tailed families need a fitted exponent.
    """
    if n_estimate < 1:
        raise ValueError(f"n_estimate must be >= 1, got {n_estimate}")
    if family == "regular_like":
        alpha = 0.5
    elif family in ("ba", "powerlaw"):
        if fitted_exponent is None:
            raise UnknownFamily(f"family {family!r} needs a fitted exponent")
        alpha = float(fitted_exponent)
    else:
        raise UnknownFamily(f"unknown family {family!r}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"exponent must be in (0, 1], got {alpha}")
    return float(n_estimate ** (-alpha))


def fit_scaling_exponent(points) -> float:
    """Negated log-log slope of norm vs n; 0.5 for 1/sqrt(n) scaling.

    Repeated n values (seed replicates) are allowed; at least three
    distinct sizes are needed for a meaningful fit.
    """
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise DegenerateInput("need at least 3 points")
    ns = np.array([p[0] for p in pts])
    vs = np.array([p[1] for p in pts])
    if len(np.unique(ns)) < 3:
        raise DegenerateInput("need at least 3 distinct n values")
    if np.any(vs <= 0) or np.any(ns <= 0):
        raise DegenerateInput("norms and sizes must be positive")
    slope = np.polyfit(np.log(ns), np.log(vs), 1)[0]
    return float(-slope)


def mixing_estimate(m: MarkovMatrix, method="spectral", tol=1e-3,
                    spectral_tol=1e-10, max_iter=2_000_000, seed=0) -> MixingEstimate:
    """Relaxation-time proxy from the spectral gap, or empirical rounds.

    spectral: |lambda_2| by power iteration on the operator deflated by
    the stationary component (applied twice per step so both spectrum ends
    fold onto the modulus). empirical: rounds until the worst-start total
    variation distance to pi falls below tol.
    """
    if not _component_count_ok(m):
        raise DisconnectedGraph("operator has multiple components")
    pi = steady_state_exact(m, tol=1e-13, max_iter=max_iter).pi
    if method == "spectral":
        lam = _second_modulus(m, pi, spectral_tol, max_iter, seed)
        relax = 1.0 / (1.0 - lam) if lam < 1.0 else np.inf
        return MixingEstimate(second_eigenvalue_modulus=lam, relaxation_time=relax)
    if method == "empirical":
        rounds = _empirical_rounds(m, pi, tol, max_iter)
        lam = _second_modulus(m, pi, max(spectral_tol, 1e-8), max_iter, seed)
        relax = 1.0 / (1.0 - lam) if lam < 1.0 else np.inf
        return MixingEstimate(second_eigenvalue_modulus=lam,
                              relaxation_time=relax, empirical_rounds=rounds)
    raise ValueError(f"unknown method {method!r}")


def _deflate(m, pi, x):
    return m.matvec(x) - pi * x.sum()


def _second_modulus(m, pi, tol, max_iter, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(m.n)
    x -= pi * x.sum()
    nrm = np.linalg.norm(x)
    if nrm == 0:
        return 0.0
    x /= nrm
    estimate = np.nan
    for _ in range(max_iter):
        y = _deflate(m, pi, _deflate(m, pi, x))
        ny = np.linalg.norm(y)
        if ny < 1e-300:
            return 0.0
        new_est = float(np.sqrt(ny))
        x = y / ny
        if np.isfinite(estimate) and abs(new_est - estimate) <= tol:
            return new_est
        estimate = new_est
    raise NotConverged("second-eigenvalue iteration stalled",
                       best=estimate, residual=np.nan)


def _empirical_rounds(m, pi, tol, max_iter):
    p = np.eye(m.n)
    for rounds in range(1, max_iter + 1):
        p = m.left_apply(p)
        tv = 0.5 * np.abs(p - pi[:, None]).sum(axis=0).max()
        if tv <= tol:
            return rounds
    raise NotConverged(f"TV distance above {tol} after {max_iter} rounds",
                       best=None, residual=float(tv))
