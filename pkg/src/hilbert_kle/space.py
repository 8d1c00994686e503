"""Finite-dimensional Hilbert-space realisations.

A space is ``R^d`` with the inner product ``<x, y> = x @ G @ y`` for a
symmetric positive definite Gram matrix ``G``. Points of the space are plain
1-D float arrays of coefficients in the canonical basis; collections of points
are 2-D arrays with one point per row.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from . import _backend
from .errors import BlockMismatch, DegenerateBasis, DimMismatch, NonSPDGram

__all__ = [
    "GramFactor",
    "SpaceSpec",
    "make_space",
    "grid_l2_space",
    "inner",
    "norm_sq",
    "orthonormalize",
    "project",
    "space_to_dict",
    "space_from_dict",
    "save_space",
    "load_space",
]

GRAM_KINDS = ("identity", "diagonal", "dense")
SYMMETRY_RTOL = 1e-12
PIVOT_RTOL = 1e-10


@dataclass(frozen=True)
class GramFactor:
    """Lower-triangular ``L`` with ``G = L @ L.T``.

    For identity and diagonal Grams only the diagonal of ``L`` is stored.
    """

    kind: str
    diag: np.ndarray | None = None
    lower: np.ndarray | None = None

    def matrix(self, dim):
        if self.kind == "identity":
            return np.eye(dim)
        if self.kind == "diagonal":
            return np.diag(self.diag)
        return self.lower.copy()

    def whiten_rows(self, X):
        """Rows ``x`` mapped to ``x @ L``; Euclidean products of the result are G-products."""
        if self.kind == "identity":
            return np.array(X, dtype=float)
        if self.kind == "diagonal":
            return X * self.diag
        return X @ self.lower

    def unwhiten_rows(self, Z):
        """Inverse of :meth:`whiten_rows`."""
        if self.kind == "identity":
            return np.array(Z, dtype=float)
        if self.kind == "diagonal":
            return Z / self.diag
        # x @ L = z  <=>  L.T @ x = z
        return la.solve_triangular(self.lower, np.asarray(Z).T, lower=True, trans="T").T


@dataclass(frozen=True, eq=False)
class SpaceSpec:
    """A validated Hilbert-space realisation.

    Use :func:`make_space` (or :func:`grid_l2_space`) rather than constructing
    this directly; the constructor does not validate.

    Attributes
    ----------
    dim : int
        Coefficient dimension ``d``.
    gram_kind : {"identity", "diagonal", "dense"}
    gram_values : ndarray or None
        Diagonal weights (shape ``(d,)``) or the symmetrised dense Gram
        (shape ``(d, d)``); ``None`` for the identity.
    blocks : tuple of (int, int) or None
        ``(Q, base_dim)`` vector-field layout; component ``q`` occupies the
        coefficient slice ``[q * base_dim, (q + 1) * base_dim)``.
    factor : GramFactor
    """

    dim: int
    gram_kind: str
    gram_values: np.ndarray | None
    blocks: tuple[int, int] | None
    factor: GramFactor = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, SpaceSpec):
            return NotImplemented
        if (self.dim, self.gram_kind, self.blocks) != (other.dim, other.gram_kind, other.blocks):
            return False
        if self.gram_values is None:
            return other.gram_values is None
        return np.array_equal(self.gram_values, other.gram_values)

    __hash__ = None

    def gram_matrix(self):
        if self.gram_kind == "identity":
            return np.eye(self.dim)
        if self.gram_kind == "diagonal":
            return np.diag(self.gram_values)
        return self.gram_values.copy()

    def apply_gram(self, X):
        """``X @ G`` for a point or a stack of row points."""
        X = np.asarray(X, dtype=float)
        if self.gram_kind == "identity":
            return X.copy()
        if self.gram_kind == "diagonal":
            return X * self.gram_values
        return X @ self.gram_values

    def solve_gram(self, X):
        """``X @ inv(G)`` for a point or a stack of row points."""
        X = np.asarray(X, dtype=float)
        if self.gram_kind == "identity":
            return X.copy()
        if self.gram_kind == "diagonal":
            return X / self.gram_values
        return la.cho_solve((self.factor.lower, True), X.T).T

    def block_slice(self, q):
        if self.blocks is None:
            raise BlockMismatch("space has no block layout")
        base = self.blocks[1]
        return slice(q * base, (q + 1) * base)

    def check_point(self, x, name="x"):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimMismatch(f"{name} has shape {x.shape}, expected ({self.dim},)")
        return x


def make_space(dim, gram="identity", blocks=None):
    """Build a validated :class:`SpaceSpec`.

    Parameters
    ----------
    dim : int
    gram : str, array_like or tuple
        ``"identity"``; a 1-D array of positive weights (diagonal Gram); a 2-D
        SPD array (dense Gram); or an explicit ``(kind, values)`` pair.
    blocks : (int, int), optional
        ``(Q, base_dim)`` with ``Q * base_dim == dim``.

    Raises
    ------
    NonSPDGram
        Non-positive diagonal weights, an asymmetric dense Gram, or a failed
        Cholesky factorisation.
    BlockMismatch
        ``Q * base_dim != dim``.
    """
    dim = int(dim)
    if dim < 1:
        raise DimMismatch(f"dim must be >= 1, got {dim}")
    kind, values = _normalise_gram(gram)

    if kind == "identity":
        values = None
        factor = GramFactor("identity")
    elif kind == "diagonal":
        values = np.array(values, dtype=float).reshape(-1)
        if values.shape != (dim,):
            raise DimMismatch(f"diagonal Gram has {values.size} weights, expected {dim}")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise NonSPDGram("diagonal Gram weights must be finite and strictly positive")
        factor = GramFactor("diagonal", diag=np.sqrt(values))
    else:
        values = np.array(values, dtype=float)
        if values.ndim == 1 and values.size == dim * dim:
            values = values.reshape(dim, dim)
        if values.shape != (dim, dim):
            raise DimMismatch(f"dense Gram has shape {values.shape}, expected ({dim}, {dim})")
        if not np.all(np.isfinite(values)):
            raise NonSPDGram("dense Gram has non-finite entries")
        scale = np.max(np.abs(values))
        if np.max(np.abs(values - values.T)) > SYMMETRY_RTOL * scale:
            raise NonSPDGram("dense Gram is not symmetric")
        values = 0.5 * (values + values.T)
        try:
            lower = la.cholesky(values, lower=True)
        except la.LinAlgError as exc:
            raise NonSPDGram(f"dense Gram is not positive definite: {exc}") from None
        factor = GramFactor("dense", lower=lower)

    if values is not None:
        values.setflags(write=False)

    if blocks is not None:
        q, base = (int(b) for b in blocks)
        if q < 1 or base < 1 or q * base != dim:
            raise BlockMismatch(f"blocks {q} x {base} do not tile dim {dim}")
        blocks = (q, base)

    return SpaceSpec(dim, kind, values, blocks, factor)


def _normalise_gram(gram):
    if gram is None:
        return "identity", None
    if isinstance(gram, str):
        if gram.lower() != "identity":
            raise ValueError(f"gram {gram!r} needs values; pass (kind, values)")
        return "identity", None
    if isinstance(gram, tuple) and len(gram) == 2 and isinstance(gram[0], str):
        kind = gram[0].lower()
        if kind not in GRAM_KINDS:
            raise ValueError(f"unknown Gram kind {gram[0]!r}")
        return kind, gram[1]
    arr = np.asarray(gram, dtype=float)
    if arr.ndim == 1:
        return "diagonal", arr
    if arr.ndim == 2:
        return "dense", arr
    raise ValueError("gram must be 'identity', a 1-D or a 2-D array")


def grid_l2_space(m, n, channels=1):
    """Space of piecewise-constant images on an ``m x n`` grid over the unit square.

    Each pixel cell has area ``1 / (m * n)``, so the inner product of two images
    is ``sum(a * b) / (m * n)`` summed over channels. Coefficients are laid out
    channel-major, row-major within a channel.
    """
    m, n, channels = int(m), int(n), int(channels)
    if min(m, n, channels) < 1:
        raise DimMismatch("grid sizes and channel count must be >= 1")
    cells = m * n
    dim = cells * channels
    return make_space(dim, ("diagonal", np.full(dim, 1.0 / cells)), blocks=(channels, cells))


def inner(space, x, y):
    """``<x, y>`` in ``space``."""
    x = space.check_point(x, "x")
    y = space.check_point(y, "y")
    return float(space.apply_gram(x) @ y)


def norm_sq(space, x):
    return inner(space, x, x)


def orthonormalize(space, basis):
    """G-orthonormalise the rows of ``basis`` by modified Gram-Schmidt.

    Returns ``(Q, GQ)`` with ``GQ = Q @ G``.

    Raises
    ------
    DegenerateBasis
        A pivot (remaining squared norm) fell below ``1e-10`` times the largest
        squared norm in the basis.
    """
    B = np.asarray(basis, dtype=float)
    if B.ndim == 1:
        B = B.reshape(1, -1) if B.size else B.reshape(0, space.dim)
    if B.ndim != 2 or B.shape[1] != space.dim:
        raise DimMismatch(f"basis has shape {B.shape}, expected (k, {space.dim})")
    if B.shape[0] == 0:
        return B.copy(), B.copy()
    if not np.all(np.isfinite(B)):
        raise DegenerateBasis("basis has non-finite entries")
    Q, GQ, failed = _backend.g_orthonormalize(B, space.apply_gram(B), PIVOT_RTOL)
    if failed >= 0:
        raise DegenerateBasis(f"basis vector {failed} is numerically dependent on its predecessors")
    return Q, GQ


def project(space, x, basis):
    """G-orthogonal projection of ``x`` (a point or stacked rows) onto ``span(basis)``."""
    X = np.asarray(x, dtype=float)
    if X.shape[-1] != space.dim:
        raise DimMismatch(f"x has trailing dimension {X.shape[-1]}, expected {space.dim}")
    Q, GQ = orthonormalize(space, basis)
    return (X @ GQ.T) @ Q


def space_to_dict(space):
    if space.gram_kind == "identity":
        values = []
    else:
        values = np.asarray(space.gram_values).reshape(-1).tolist()
    blocks = None if space.blocks is None else {"q": space.blocks[0], "base_dim": space.blocks[1]}
    return {"dim": space.dim, "gram": {"kind": space.gram_kind, "values": values}, "blocks": blocks}


def space_from_dict(obj):
    gram = obj.get("gram") or {"kind": "identity"}
    kind = gram.get("kind", "identity")
    blocks = obj.get("blocks")
    if blocks is not None:
        blocks = (blocks["q"], blocks["base_dim"])
    if kind == "identity":
        return make_space(obj["dim"], "identity", blocks)
    return make_space(obj["dim"], (kind, gram["values"]), blocks)


def save_space(space, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(space_to_dict(space), fh, indent=2)
        fh.write("\n")


def load_space(path):
    with open(path, encoding="utf-8") as fh:
        return space_from_dict(json.load(fh))
