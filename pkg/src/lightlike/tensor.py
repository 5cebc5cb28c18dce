"""Tensor calculus on a single coordinate chart.

Index convention, fixed once for the whole package: a tensor value stores one
array axis per slot, in slot order, and its ``signature`` is a string over
``{"u", "l"}`` (upper/contravariant, lower/covariant).  Derivative-producing
operations put the new covariant slot first, so ``gradient(f, p)[i]`` is
``∂_i f`` and a covariant derivative of a (0,2) field is indexed ``[i, j, l]``
for ``(∇_i g)_{jl}``.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import expr as ex
from .expr import ScalarExpression

MAX_DIM = 8
DEFAULT_STEP = 1e-5


class TensorError(ValueError):
    pass


class SignatureError(TensorError):
    pass


class FiniteDifferenceError(TensorError):
    """A central-difference stencil hit a point where the callback is undefined."""


def chart_point(p: Sequence[float], dim: int) -> np.ndarray:
    """Validate ``p`` as a point of an ``dim``-dimensional chart."""
    arr = np.asarray(p, dtype=float)
    if arr.shape != (dim,):
        raise TensorError(f"chart point must have shape ({dim},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise TensorError("chart point has non-finite coordinates")
    return arr


def _check_signature(signature: str) -> str:
    if any(c not in "ul" for c in signature):
        raise SignatureError(f"signature must be a string over 'u'/'l', got {signature!r}")
    return signature


@dataclass(frozen=True)
class TensorValue:
    """Components of a tensor at one point.

    ``symmetries`` lists slot pairs the components are declared symmetric in;
    the declaration is checked exactly at construction.
    """

    components: np.ndarray
    signature: str
    symmetries: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        _check_signature(self.signature)
        comps = np.array(self.components, dtype=float)
        if comps.ndim != len(self.signature):
            raise SignatureError(
                f"{comps.ndim} axes for signature {self.signature!r}")
        if comps.ndim and len(set(comps.shape)) != 1:
            raise TensorError(f"all axes must have equal length, got {comps.shape}")
        for a, b in self.symmetries:
            if self.signature[a] != self.signature[b]:
                raise SignatureError(f"slots {a} and {b} differ in variance")
            if not np.array_equal(comps, np.swapaxes(comps, a, b)):
                raise TensorError(f"components are not symmetric in slots {a}, {b}")
        comps.flags.writeable = False
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return self.components.shape[0] if self.components.ndim else 0

    @property
    def rank(self) -> tuple[int, int]:
        return self.signature.count("u"), self.signature.count("l")

    def __array__(self, dtype=None, copy=None):
        return self.components if dtype is None else self.components.astype(dtype)


class TensorField(abc.ABC):
    """A tensor-valued function of a chart point with partial derivatives."""

    signature: str
    dim: int
    #: partials are exact (symbolic) rather than finite-difference estimates
    exact_partials: bool = True

    @abc.abstractmethod
    def components(self, p: np.ndarray) -> np.ndarray:
        ...

    @abc.abstractmethod
    def partial_components(self, p: np.ndarray, i: int) -> np.ndarray:
        ...

    def gradient(self, p: np.ndarray) -> np.ndarray:
        """All first partials stacked on a new leading axis."""
        return np.stack([self.partial_components(p, i) for i in range(self.dim)])

    def evaluate(self, p: Sequence[float]) -> TensorValue:
        return TensorValue(self.components(chart_point(p, self.dim)), self.signature)

    def partial(self, p: Sequence[float], i: int) -> TensorValue:
        if not 0 <= i < self.dim:
            raise TensorError(f"coordinate index {i} out of range")
        return TensorValue(self.partial_components(chart_point(p, self.dim), i), self.signature)


def _check_dim(dim: int) -> int:
    if not 1 <= dim <= MAX_DIM:
        raise TensorError(f"chart dimension must be in 1..{MAX_DIM}, got {dim}")
    return dim


class ExpressionField(TensorField):
    """Field whose components are closed-form expressions; partials are symbolic."""

    exact_partials = True

    def __init__(self, signature: str, grid):
        self.signature = _check_signature(signature)
        grid = np.asarray(grid, dtype=object)
        if grid.ndim != len(signature):
            raise SignatureError(f"grid has {grid.ndim} axes for signature {signature!r}")
        flat = list(grid.flat)
        if not flat:
            raise TensorError("empty component grid")
        dims = {e.dimension for e in flat}
        if len(dims) != 1:
            raise TensorError("component expressions disagree on the chart dimension")
        self.dim = _check_dim(dims.pop())
        if grid.ndim and set(grid.shape) != {self.dim}:
            raise TensorError(f"grid shape {grid.shape} does not match dimension {self.dim}")
        self.grid = grid
        self._shape = grid.shape
        self._flat = flat

    @cached_property
    def _derivatives(self) -> list[list[ScalarExpression]]:
        return [[e.differentiate(i) for e in self._flat] for i in range(self.dim)]

    def components(self, p):
        return np.array([e.evaluate(p) for e in self._flat], dtype=float).reshape(self._shape)

    def partial_components(self, p, i):
        return np.array([e.evaluate(p) for e in self._derivatives[i]],
                        dtype=float).reshape(self._shape)

    def derivative_field(self, i: int) -> "ExpressionField":
        return ExpressionField(self.signature, np.array(self._derivatives[i], dtype=object)
                               .reshape(self._shape))

    def __repr__(self):
        return f"ExpressionField({self.signature!r}, {[str(e) for e in self._flat]})"


class CallbackField(TensorField):
    """Field given by an opaque function; partials by central differences of step ``h``."""

    exact_partials = False

    def __init__(self, signature: str, dim: int, func: Callable[[np.ndarray], object],
                 h: float = DEFAULT_STEP):
        self.signature = _check_signature(signature)
        self.dim = _check_dim(dim)
        self.func = func
        self.h = h

    def components(self, p):
        value = np.asarray(self.func(np.asarray(p, dtype=float)), dtype=float)
        expected = (self.dim,) * len(self.signature)
        if value.shape != expected:
            raise SignatureError(f"callback returned shape {value.shape}, expected {expected}")
        return value

    def partial_components(self, p, i):
        p = np.asarray(p, dtype=float)
        step = np.zeros(self.dim)
        step[i] = self.h
        try:
            fp = self.components(p + step)
            fm = self.components(p - step)
        except (ArithmeticError, ValueError) as exc:
            if isinstance(exc, SignatureError):
                raise
            raise FiniteDifferenceError(
                f"stencil failure for ∂_{i} at {p.tolist()} with h={self.h}: {exc}") from exc
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise FiniteDifferenceError(
                f"non-finite stencil value for ∂_{i} at {p.tolist()} with h={self.h}")
        return (fp - fm) / (2.0 * self.h)


class DerivedField(TensorField):
    """Field assembled from other fields, with caller-supplied partials."""

    def __init__(self, signature: str, dim: int,
                 components: Callable[[np.ndarray], np.ndarray],
                 partial: Callable[[np.ndarray, int], np.ndarray],
                 exact_partials: bool = True):
        self.signature = _check_signature(signature)
        self.dim = _check_dim(dim)
        self._components = components
        self._partial = partial
        self.exact_partials = exact_partials

    def components(self, p):
        return self._components(p)

    def partial_components(self, p, i):
        return self._partial(p, i)


# --------------------------------------------------------------------------
# constructors

def field_from_strings(signature: str, entries, dim: int, parameters=None) -> ExpressionField:
    """Parse a nested list of expression strings (or numbers) into a field."""
    arr = np.asarray(entries, dtype=object)
    grid = np.empty(arr.shape, dtype=object)
    for idx, src in np.ndenumerate(arr):
        grid[idx] = ex.parse_expression(str(src), dim, parameters)
    return ExpressionField(signature, grid)


def constant_field(values, signature: str) -> ExpressionField:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != len(signature):
        raise SignatureError(f"{arr.ndim} axes for signature {signature!r}")
    dim = arr.shape[0] if arr.ndim else 1
    grid = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        grid[idx] = ex.constant(v, dim)
    return ExpressionField(signature, grid)


def zero_field(signature: str, dim: int) -> ExpressionField:
    return constant_field(np.zeros((dim,) * len(signature)), signature)


def coordinate_vector(i: int, dim: int) -> ExpressionField:
    """The coordinate frame field ∂/∂x_i."""
    return constant_field(np.eye(dim)[i], "u")


def coordinate_covector(i: int, dim: int) -> ExpressionField:
    """The coordinate coframe field dx_i."""
    return constant_field(np.eye(dim)[i], "l")


# --------------------------------------------------------------------------
# operations

def evaluate_field(f: TensorField, p) -> TensorValue:
    return f.evaluate(p)


def partial_field(f: TensorField, p, i: int) -> TensorValue:
    return f.partial(p, i)


def _require(f: TensorField, signature: str, what: str):
    if f.signature != signature:
        raise SignatureError(f"{what} must have signature {signature!r}, got {f.signature!r}")


def lie_bracket(X: TensorField, Y: TensorField, p) -> TensorValue:
    """[X, Y]^k = X^i ∂_i Y^k - Y^i ∂_i X^k."""
    _require(X, "u", "X")
    _require(Y, "u", "Y")
    if X.dim != Y.dim:
        raise TensorError("fields live on charts of different dimension")
    p = chart_point(p, X.dim)
    x, y = X.components(p), Y.components(p)
    return TensorValue(x @ Y.gradient(p) - y @ X.gradient(p), "u")


def bracket_field(X: TensorField, Y: TensorField) -> TensorField:
    """The vector field [X, Y]; symbolic when both inputs are expression-backed."""
    _require(X, "u", "X")
    _require(Y, "u", "Y")
    n = X.dim
    if isinstance(X, ExpressionField) and isinstance(Y, ExpressionField):
        grid = np.empty(n, dtype=object)
        params = {}
        for e in list(X.grid) + list(Y.grid):
            params.update(e.parameters)
        for k in range(n):
            node = ex.ZERO
            for i in range(n):
                node = ex.add(node, ex.mul(X.grid[i].ast, Y.grid[k].differentiate(i).ast))
                node = ex.sub(node, ex.mul(Y.grid[i].ast, X.grid[k].differentiate(i).ast))
            grid[k] = ScalarExpression(node, n, params)
        return ExpressionField("u", grid)
    h = getattr(X, "h", None) or getattr(Y, "h", None) or DEFAULT_STEP
    return CallbackField("u", n, lambda p: lie_bracket(X, Y, p).components, h=h)


def exterior_derivative_1form(tau: TensorField, p) -> TensorValue:
    """(dτ)_{ij} = ∂_i τ_j - ∂_j τ_i, so that (dτ)(X, Y) = Xτ(Y) - Yτ(X) - τ([X, Y])."""
    _require(tau, "l", "τ")
    p = chart_point(p, tau.dim)
    d = tau.gradient(p)
    return TensorValue(d - d.T, "ll")


def lie_derivative_metric(xi: TensorField, g: TensorField, p) -> TensorValue:
    """(L_ξ g)_{ij} = ξ^k ∂_k g_{ij} + g_{kj} ∂_i ξ^k + g_{ik} ∂_j ξ^k."""
    _require(xi, "u", "ξ")
    _require(g, "ll", "g")
    p = chart_point(p, g.dim)
    x = xi.components(p)
    gp = g.components(p)
    dxi = xi.gradient(p)  # dxi[i, k] = ∂_i ξ^k
    transport = np.einsum("k,kij->ij", x, g.gradient(p))
    return TensorValue(transport + dxi @ gp + gp @ dxi.T, "ll")


def lie_derivative_1form(xi: TensorField, tau: TensorField, p) -> TensorValue:
    """(L_ξ τ)_j = ξ^k ∂_k τ_j + τ_k ∂_j ξ^k."""
    _require(xi, "u", "ξ")
    _require(tau, "l", "τ")
    p = chart_point(p, tau.dim)
    return TensorValue(xi.components(p) @ tau.gradient(p) + xi.gradient(p) @ tau.components(p), "l")


def tensor_product(a: TensorValue, b: TensorValue) -> TensorValue:
    if a.dim != b.dim and a.signature and b.signature:
        raise TensorError("tensor product of values on different dimensions")
    return TensorValue(np.multiply.outer(a.components, b.components), a.signature + b.signature)


def contract(a: TensorValue, b: TensorValue, pairs: Sequence[tuple[int, int]]) -> TensorValue:
    """Contract slot ``i`` of ``a`` against slot ``j`` of ``b`` for each ``(i, j)`` in ``pairs``.

    Each pair must join an upper slot with a lower one.  Remaining slots of
    ``a`` come first, then those of ``b``.
    """
    sa = [i for i, _ in pairs]
    sb = [j for _, j in pairs]
    for i, j in pairs:
        if {a.signature[i], b.signature[j]} != {"u", "l"}:
            raise SignatureError(
                f"cannot contract slot {i} ({a.signature[i]}) with slot {j} ({b.signature[j]})")
    comps = np.tensordot(a.components, b.components, axes=(sa, sb))
    sig = "".join(c for k, c in enumerate(a.signature) if k not in sa) + \
          "".join(c for k, c in enumerate(b.signature) if k not in sb)
    return TensorValue(comps, sig)
