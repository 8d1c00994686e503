"""Empirical random elements: ``N`` weighted samples of a space-valued variable."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, InvalidWeights, MalformedRow, NonFiniteInput
from .space import SpaceSpec

__all__ = [
    "Ensemble",
    "make_ensemble",
    "expectation",
    "center",
    "h_apply",
    "cov_apply",
    "bochner_norm_sq",
    "ensemble_to_csv",
    "ensemble_from_csv",
]

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Samples ``v(omega_i)`` (rows of ``samples``) with probabilities ``weights``.

    Construct through :func:`make_ensemble`, which validates and freezes the
    arrays.
    """

    space: SpaceSpec
    samples: np.ndarray
    weights: np.ndarray

    @property
    def n(self):
        return self.samples.shape[0]


def make_ensemble(space, samples, weights=None):
    """Validate samples and weights into an :class:`Ensemble`.

    ``weights`` defaults to uniform ``1/N``. Weights must be strictly positive
    and sum to one within ``1e-12``; zero-weight samples are rejected rather
    than dropped.
    """
    X = np.array(samples, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, space.dim) if space.dim == 1 else X.reshape(1, -1)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DimMismatch("samples must be a non-empty N x d array")
    if X.shape[1] != space.dim:
        raise DimMismatch(f"samples have {X.shape[1]} columns, space has dim {space.dim}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("samples contain NaN or Inf")
    n = X.shape[0]
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.array(weights, dtype=float).reshape(-1)
        if w.shape != (n,):
            raise InvalidWeights(f"{w.size} weights for {n} samples")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InvalidWeights("weights must be finite and strictly positive")
        if abs(math.fsum(w) - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidWeights(f"weights sum to {math.fsum(w)!r}, not 1")
    X.setflags(write=False)
    w.setflags(write=False)
    return Ensemble(space, X, w)


def expectation(ens):
    """Weighted sample mean ``sum_i w_i v_i``."""
    return ens.weights @ ens.samples


def center(ens):
    """Ensemble of ``v_i - E(v)`` with the same weights."""
    return make_ensemble(ens.space, ens.samples - expectation(ens), ens.weights)


def h_apply(ens, x):
    """The induced Hilbert-Schmidt operator: ``x -> (<v_i, x>)_i``.

    Applied to the samples as given; pass a centred ensemble to get the
    operator of ``v - E(v)``.
    """
    x = ens.space.check_point(x)
    return ens.samples @ ens.space.apply_gram(x)


def cov_apply(ens, x):
    """Covariance operator ``x -> E(<v0, x> v0)`` with ``v0 = v - E(v)``."""
    x = ens.space.check_point(x)
    v0 = ens.samples - expectation(ens)
    return (ens.weights * (v0 @ ens.space.apply_gram(x))) @ v0


def bochner_norm_sq(ens):
    """``sum_i w_i <v_i, v_i>``, the squared norm in ``L^2(Omega, H)``."""
    X = ens.samples
    return float(ens.weights @ np.einsum("ij,ij->i", ens.space.apply_gram(X), X))


def ensemble_to_csv(ens):
    """Serialise as ``sample_id,w,c0,...`` with 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample_id", "w"] + [f"c{j}" for j in range(ens.space.dim)])
    for i, (wi, row) in enumerate(zip(ens.weights, ens.samples)):
        writer.writerow([i, _fmt(wi)] + [_fmt(v) for v in row])
    return buf.getvalue()


def ensemble_from_csv(text, space):
    """Parse :func:`ensemble_to_csv` output against ``space``.

    Raises :class:`MalformedRow` with a 1-based line number on bad input.
    """
    lines = text.splitlines()
    rows = []
    header = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = [f.strip() for f in next(csv.reader([line]))]
        if header is None:
            header = fields
            expected = ["sample_id", "w"] + [f"c{j}" for j in range(space.dim)]
            if header != expected:
                raise MalformedRow(lineno, f"expected header sample_id,w,c0..c{space.dim - 1}")
            continue
        if len(fields) != space.dim + 2:
            raise MalformedRow(lineno, f"expected {space.dim + 2} fields, got {len(fields)}")
        try:
            vals = [float(f) for f in fields[1:]]
        except ValueError as exc:
            raise MalformedRow(lineno, str(exc)) from None
        rows.append(vals)
    if header is None:
        raise MalformedRow(1, "empty ensemble file")
    if not rows:
        raise MalformedRow(len(lines), "no samples")
    arr = np.array(rows)
    return make_ensemble(space, arr[:, 1:], arr[:, 0])


def _fmt(x):
    return format(float(x), ".17g")
