"""Karhunen-Loeve decomposition of an empirical ensemble.

The centred ensemble induces the operator ``x -> (<v0_i, x>)_i`` from the
space into ``L^2`` of the empirical measure. In whitened coordinates
(``G = L L^T`` on the space side, ``W^{1/2}`` on the sample side) that operator
is the plain matrix ``W^{1/2} D0 L``, whose SVD yields the expansion

    v_i = E(v) + sum_r sqrt(lambda_r) Y_r(omega_i) phi_r .
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from . import _backend
from .ensemble import expectation, make_ensemble
from .errors import DimMismatch, MOutOfRange, NonFiniteInput
from .space import SpaceSpec, orthonormalize, space_from_dict, space_to_dict

__all__ = [
    "KleDecomposition",
    "decompose",
    "truncate",
    "truncation_error",
    "reconstruct",
    "naturality_gap",
    "kle_to_dict",
    "kle_from_dict",
]

DEFAULT_RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class KleDecomposition:
    """Result of :func:`decompose`.

    Attributes
    ----------
    space : SpaceSpec
    mean : ndarray, shape (d,)
    lambdas : ndarray, shape (R,)
        Covariance eigenvalues, nonincreasing and positive.
    phis : ndarray, shape (R, d)
        G-orthonormal modes, one per row.
    scores : ndarray, shape (N, R)
        ``scores[i, r] = Y_r(omega_i)``; weight-orthonormal with zero weighted mean.
    weights : ndarray, shape (N,)
    rank_tol : float
    """

    space: SpaceSpec
    mean: np.ndarray
    lambdas: np.ndarray
    phis: np.ndarray
    scores: np.ndarray
    weights: np.ndarray
    rank_tol: float = DEFAULT_RANK_TOL

    @property
    def rank(self):
        return int(self.lambdas.size)

    @property
    def total_variance(self):
        return math.fsum(self.lambdas)


def decompose(ens, rank_tol=DEFAULT_RANK_TOL):
    """Compute the KL expansion of ``ens``.

    Singular values ``sigma_r <= rank_tol * sigma_1`` are discarded. The sign of
    each ``(Y_r, phi_r)`` pair is fixed so that the largest-magnitude
    coefficient of ``phi_r`` is positive (first index on ties).
    """
    if not (np.all(np.isfinite(ens.samples)) and np.all(np.isfinite(ens.weights))):
        raise NonFiniteInput("ensemble contains NaN or Inf")
    space = ens.space
    w = np.asarray(ens.weights)
    mean = expectation(ens)
    d0 = ens.samples - mean
    sqrt_w = np.sqrt(w)

    M = sqrt_w[:, None] * space.factor.whiten_rows(d0)
    U, s, Vt = la.svd(M, full_matrices=False, lapack_driver="gesvd")
    if s.size == 0 or not s[0] > 0:
        keep = 0
    else:
        keep = int(np.count_nonzero(s > rank_tol * s[0]))

    U, s, Vt = U[:, :keep], s[:keep], Vt[:keep]
    phis = space.factor.unwhiten_rows(Vt)
    scores = U / sqrt_w[:, None]

    if keep:
        lead = np.argmax(np.abs(phis), axis=1)
        signs = np.where(phis[np.arange(keep), lead] < 0, -1.0, 1.0)
        phis = phis * signs[:, None]
        scores = scores * signs[None, :]

    lambdas = s**2
    for arr in (mean, lambdas, phis, scores):
        arr.setflags(write=False)
    return KleDecomposition(space, mean, lambdas, phis, scores, w, float(rank_tol))


def _check_m(kle, M):
    if not isinstance(M, (int, np.integer)) or not 0 <= M <= kle.rank:
        raise MOutOfRange(f"M must be an integer in [0, {kle.rank}], got {M!r}")
    return int(M)


def truncate(kle, M):
    """First ``M`` modes and the tail ``sum_{r > M} lambda_r``."""
    M = _check_m(kle, M)
    return [kle.phis[r].copy() for r in range(M)], math.fsum(kle.lambdas[M:])


def truncation_error(ens, subspace_basis):
    """Mean squared residual ``E ||(I - P_S) v0||^2`` for ``S = span(subspace_basis)``."""
    space = ens.space
    v0 = ens.samples - expectation(ens)
    basis = np.asarray(subspace_basis, dtype=float)
    if basis.size == 0:
        basis = np.empty((0, space.dim))
    Q, GQ = orthonormalize(space, basis)
    return float(_backend.residual_energy(v0, space.apply_gram(v0), Q, GQ, ens.weights))


def reconstruct(kle, M):
    """Ensemble of the ``M``-term truncations ``E(v) + sum_{r<=M} sqrt(lambda_r) Y_r phi_r``."""
    M = _check_m(kle, M)
    rows = (kle.scores[:, :M] * np.sqrt(kle.lambdas[:M])) @ kle.phis[:M]
    return make_ensemble(kle.space, kle.mean + rows, kle.weights)


def naturality_gap(ens, T, target):
    """Largest discrepancy in the commuting square for the operator ``T``.

    For every canonical basis vector ``k`` of ``target`` compares the induced
    operator of the pushed-forward ensemble ``T v`` applied to ``k`` with the
    induced operator of ``v`` applied to ``T* k``, where ``T*`` is the adjoint
    with respect to both Gram matrices. Returns the maximum weighted ``L^2``
    norm of the difference; the ensemble is expected to be centred.
    """
    T = np.asarray(T, dtype=float)
    src = ens.space
    if T.shape != (target.dim, src.dim):
        raise DimMismatch(f"T has shape {T.shape}, expected ({target.dim}, {src.dim})")
    V = ens.samples
    w = ens.weights

    # Left: H_{Tv} k = <T v_i, k>_tgt
    pushed = V @ T.T
    left = target.apply_gram(pushed)  # column k is H_{Tv} e_k

    # Right: H_v (T* e_k), T* = G_src^{-1} T^T G_tgt
    right = src.apply_gram(V) @ _adjoint(T, src, target)

    diff = left - right
    return float(np.sqrt(np.max(w @ diff**2))) if diff.size else 0.0


def _adjoint(T, src, target):
    """Matrix of ``T*`` with ``<T x, y>_tgt = <x, T* y>_src``, shape ``(d_src, d_tgt)``."""
    gt = target.apply_gram(T.T)  # T^T G_tgt
    return src.solve_gram(gt.T).T


def _plain(arr):
    return (np.asarray(arr) + 0.0).tolist()  # + 0.0 turns -0.0 into 0.0


def kle_to_dict(kle):
    return {
        "space": space_to_dict(kle.space),
        "weights": _plain(kle.weights),
        "mean": _plain(kle.mean),
        "lambdas": _plain(kle.lambdas),
        "phis": _plain(kle.phis),
        "scores": _plain(kle.scores),
        "rank_tol": kle.rank_tol,
    }


def kle_from_dict(obj, space=None):
    if space is None:
        space = space_from_dict(obj["space"])
    lambdas = np.array(obj["lambdas"], dtype=float).reshape(-1)
    R = lambdas.size
    phis = np.array(obj["phis"], dtype=float).reshape(R, space.dim)
    scores = np.array(obj["scores"], dtype=float)
    n = scores.shape[0] if scores.ndim == 2 else len(obj["weights"])
    scores = scores.reshape(n, R)
    weights = np.array(obj.get("weights", np.full(n, 1.0 / n)), dtype=float)
    mean = np.array(obj["mean"], dtype=float)
    return KleDecomposition(space, mean, lambdas, phis, scores, weights, float(obj["rank_tol"]))
