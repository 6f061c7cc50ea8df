"""Reverse-mode automatic differentiation over complex-valued arrays.

Tensors wrap float64 or complex128 numpy arrays.  Gradients of a *real*
scalar loss are stored in the real-pair convention: for a complex tensor z,
``z.grad = dL/dRe(z) + 1j * dL/dIm(z)``.  Differentiating through the real
and imaginary parts separately sidesteps non-holomorphic operations (Re,
modulus, principal angle) that a holomorphic chain rule could not handle.

Backward rules worth noting:

* ``angle``: dL/dz = g * 1j * z / max(|z|^2, 1e-24); the clamp keeps the
  gradient finite when a correlation is nearly zero.
* ``abs`` at zero uses subgradient 0.
* ``wrap_phase`` shifts by a constant multiple of 2*pi, so its derivative is
  1 almost everywhere and no gradient flows through the branch jump.

A central finite-difference oracle (:func:`finite_diff`) and a generic
gradient checker (:func:`grad_check`) validate every rule.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field

import numpy as np

from . import ctensor

_GRAD_ENABLED = True
_ANGLE_CLAMP = 1e-24


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the context (pure inference)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape`` along the axes broadcasting expanded."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


class Tensor:
    """A node in the computation graph."""

    __slots__ = ("value", "grad", "requires_grad", "_parents", "_vjps", "name")

    def __init__(self, value, requires_grad: bool = False, name: str | None = None,
                 _parents=(), _vjps=()):
        v = np.asarray(value)
        if v.dtype != np.complex128 and v.dtype != np.float64:
            v = v.astype(np.complex128 if np.iscomplexobj(v) else np.float64)
        self.value = v
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._vjps = _vjps
        self.name = name

    # ------------------------------------------------------------------
    @property
    def shape(self):
        return self.value.shape

    @property
    def is_complex(self) -> bool:
        return self.value.dtype == np.complex128

    def item(self) -> float:
        return float(self.value.real) if self.is_complex else float(self.value)

    def detach(self) -> "Tensor":
        return Tensor(self.value)

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g: np.ndarray):
        g = _unbroadcast(np.asarray(g), self.value.shape)
        if self.is_complex:
            g = g.astype(np.complex128)
        else:
            g = np.asarray(g.real, dtype=np.float64)
        if self.grad is None:
            self.grad = np.array(g)  # materialize: vjps may hand back views
        else:
            self.grad = self.grad + g

    def backward(self):
        """Reverse pass from this real scalar; fills .grad on every leaf."""
        if self.value.size != 1:
            raise ValueError("backward() requires a scalar loss")
        if self.is_complex:
            raise ValueError("backward() requires a real-valued loss")
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.value, dtype=np.float64)
        for node in reversed(order):
            if node.grad is None:
                continue
            g = node.grad
            for parent, vjp in zip(node._parents, node._vjps):
                parent._accumulate(vjp(g))

    # ------------------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        tag = self.name or "tensor"
        return f"<{tag} {self.value.dtype.name}{list(self.value.shape)}>"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(value, name: str | None = None) -> Tensor:
    return Tensor(np.array(value), requires_grad=True, name=name)


def _node(value, pairs, name=None) -> Tensor:
    """Create a graph node from (input, vjp) pairs, dropping dead branches."""
    if _GRAD_ENABLED:
        live = [(t, f) for t, f in pairs if t.requires_grad]
        if live:
            parents, vjps = zip(*live)
            return Tensor(value, requires_grad=True, name=name,
                          _parents=parents, _vjps=vjps)
    return Tensor(value, name=name)


# ----------------------------------------------------------------------
# arithmetic
# ----------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _node(a.value + b.value, [(a, lambda g: g), (b, lambda g: g)])


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _node(a.value - b.value, [(a, lambda g: g), (b, lambda g: -g)])


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _node(-a.value, [(a, lambda g: -g)])


def mul(a, b) -> Tensor:
    """Elementwise product; complex factors follow the real-pair chain rule."""
    a, b = as_tensor(a), as_tensor(b)
    av, bv = a.value, b.value
    return _node(av * bv, [(a, lambda g: g * np.conj(bv)),
                           (b, lambda g: g * np.conj(av))])


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    av, bv = a.value, b.value
    inv = 1.0 / bv
    return _node(av * inv,
                 [(a, lambda g: g * np.conj(inv)),
                  (b, lambda g: -g * np.conj(av * inv * inv))])


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    av, bv = a.value, b.value

    def _hT(x):
        return np.conj(np.swapaxes(x, -1, -2))

    return _node(av @ bv, [(a, lambda g: g @ _hT(bv)),
                           (b, lambda g: _hT(av) @ g)])


def conj(a) -> Tensor:
    a = as_tensor(a)
    return _node(np.conj(a.value), [(a, lambda g: np.conj(g))])


def real(a) -> Tensor:
    a = as_tensor(a)
    return _node(np.asarray(a.value.real, dtype=np.float64), [(a, lambda g: g)])


def imag(a) -> Tensor:
    a = as_tensor(a)
    return _node(np.asarray(a.value.imag, dtype=np.float64),
                 [(a, lambda g: 1j * g)])


def absolute(a) -> Tensor:
    """Modulus; subgradient 0 at the origin."""
    a = as_tensor(a)
    av = a.value
    r = np.abs(av)
    safe = np.where(r == 0.0, 1.0, r)
    unit = np.where(r == 0.0, 0.0, av / safe)
    return _node(np.asarray(r, dtype=np.float64), [(a, lambda g: g * unit)])


def abs2(a) -> Tensor:
    """Squared modulus as a real tensor: |z|^2 = Re(z)^2 + Im(z)^2."""
    a = as_tensor(a)
    av = a.value
    return _node(np.asarray(av.real**2 + av.imag**2, dtype=np.float64),
                 [(a, lambda g: 2.0 * g * av)])


def angle(a) -> Tensor:
    """Principal argument in (-pi, pi], angle(0) = 0, clamped backward."""
    a = as_tensor(a)
    av = a.value
    denom = np.maximum(av.real**2 + av.imag**2, _ANGLE_CLAMP)
    return _node(np.asarray(ctensor.angle(av), dtype=np.float64),
                 [(a, lambda g: g * (1j * av) / denom)])


def cis(a) -> Tensor:
    """Unit phasor exp(1j * phi) of a real phase tensor."""
    a = as_tensor(a)
    w = np.exp(1j * a.value)
    return _node(w, [(a, lambda g: (np.conj(w) * g).imag)])


def exp(a) -> Tensor:
    a = as_tensor(a)
    v = np.exp(a.value)
    return _node(v, [(a, lambda g: g * np.conj(v))])


def log(a) -> Tensor:
    a = as_tensor(a)
    return _node(np.log(a.value), [(a, lambda g: g / a.value)])


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    v = np.sqrt(a.value)
    return _node(v, [(a, lambda g: g / (2.0 * v))])


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.value > 0
    return _node(np.where(mask, a.value, 0.0), [(a, lambda g: g * mask)])


# ----------------------------------------------------------------------
# structure
# ----------------------------------------------------------------------

def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    old = a.value.shape
    return _node(a.value.reshape(shape), [(a, lambda g: g.reshape(old))])


def swapaxes(a, ax1: int, ax2: int) -> Tensor:
    a = as_tensor(a)
    return _node(np.swapaxes(a.value, ax1, ax2),
                 [(a, lambda g: np.swapaxes(g, ax1, ax2))])


def concat(parts, axis: int = 0) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    sizes = [p.value.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def vjp_for(i):
        return lambda g: np.split(g, splits, axis=axis)[i]

    return _node(np.concatenate([p.value for p in parts], axis=axis),
                 [(p, vjp_for(i)) for i, p in enumerate(parts)])


def take_rows(a, index) -> Tensor:
    """Select entry ``index[b]`` from each row b of a rank-2 tensor."""
    a = as_tensor(a)
    index = np.asarray(index, dtype=np.intp)
    rows = np.arange(a.value.shape[0])

    def vjp(g):
        out = np.zeros_like(a.value)
        np.add.at(out, (rows, index), g)
        return out

    return _node(a.value[rows, index], [(a, vjp)])


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    shape = a.value.shape

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g, shape)
        gg = g if keepdims else np.expand_dims(g, axis)
        return np.broadcast_to(gg, shape)

    return _node(a.value.sum(axis=axis, keepdims=keepdims), [(a, vjp)])


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        n = a.value.size
    else:
        n = a.value.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


# ----------------------------------------------------------------------
# fused real ops
# ----------------------------------------------------------------------

def softmax_lastaxis(a) -> Tensor:
    """Stabilized softmax along the last axis of a real tensor."""
    a = as_tensor(a)
    shifted = a.value - a.value.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    w = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        return w * (g - (g * w).sum(axis=-1, keepdims=True))

    return _node(w, [(a, vjp)])


def log_softmax_lastaxis(a) -> Tensor:
    a = as_tensor(a)
    shifted = a.value - a.value.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = shifted - lse
    w = np.exp(out)

    def vjp(g):
        return g - w * g.sum(axis=-1, keepdims=True)

    return _node(out, [(a, vjp)])


def wrap_phase(a) -> Tensor:
    """Wrap real angles into (-pi, pi); derivative 1 almost everywhere.

    The wrap is a shift by a per-entry constant multiple of 2*pi computed
    from the forward value, so the jump set carries no gradient.
    """
    a = as_tensor(a)
    wrapped = ctensor.wrap_phase(a.value)
    return _node(np.asarray(wrapped, dtype=np.float64), [(a, lambda g: g)])


def dropout(a, p: float, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; identity when p == 0 or no generator is given."""
    a = as_tensor(a)
    if p <= 0.0 or rng is None:
        return a
    keep = (rng.random(a.value.shape) >= p) / (1.0 - p)
    return mul(a, keep)


# ----------------------------------------------------------------------
# numeric oracle
# ----------------------------------------------------------------------

def _float_view(x: np.ndarray) -> np.ndarray:
    """Flat float64 view of a float/complex array (re, im interleaved)."""
    return x.view(np.float64).reshape(-1)


def finite_diff(f, params: dict, h: float = 1e-5) -> dict:
    """Central-difference gradients of ``f(params) -> float``.

    ``params`` maps names to numpy arrays (modified in place during probing
    and restored afterwards).  Returns arrays of the same dtype/shape with
    d f / d component in the real-pair layout.
    """
    grads = {}
    for name, arr in params.items():
        flat = _float_view(arr)
        g = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f(params)
            flat[i] = orig - h
            fm = f(params)
            flat[i] = orig
            g[i] = (fp - fm) / (2.0 * h)
        grads[name] = g.view(arr.dtype).reshape(arr.shape) if arr.dtype == np.complex128 \
            else g.reshape(arr.shape)
    return grads


@dataclass
class GradCheckReport:
    """Outcome of an analytic-vs-numeric gradient comparison."""

    max_rel_err: float
    per_tensor: dict = field(default_factory=dict)
    tol: float = 1e-5

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_rel_err) and self.max_rel_err <= self.tol)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        worst = max(self.per_tensor, key=self.per_tensor.get) if self.per_tensor else "-"
        return (f"grad check {status}: max rel err {self.max_rel_err:.3e} "
                f"(tol {self.tol:.1e}, worst tensor '{worst}')")


def rel_err(ga: np.ndarray, gn: np.ndarray) -> np.ndarray:
    ga64 = _float_view(np.ascontiguousarray(ga))
    gn64 = _float_view(np.ascontiguousarray(gn))
    denom = np.maximum(np.maximum(np.abs(ga64), np.abs(gn64)), 1e-8)
    return np.abs(ga64 - gn64) / denom


def grad_check(loss_fn, params: dict, tol: float = 1e-5, h: float = 1e-5) -> GradCheckReport:
    """Compare backward() gradients of ``loss_fn`` against finite differences.

    ``loss_fn`` maps a dict of leaf Tensors to a real scalar Tensor; ``params``
    maps names to numpy arrays used as the evaluation point.
    """
    leaves = {name: parameter(arr.copy(), name=name) for name, arr in params.items()}
    loss = loss_fn(leaves)
    loss.backward()
    analytic = {name: (t.grad if t.grad is not None else np.zeros_like(t.value))
                for name, t in leaves.items()}

    def f(raw):
        with no_grad():
            frozen = {name: Tensor(arr) for name, arr in raw.items()}
            return loss_fn(frozen).item()

    numeric = finite_diff(f, {k: v.copy() for k, v in params.items()}, h=h)
    per_tensor = {name: float(rel_err(analytic[name], numeric[name]).max())
                  for name in params}
    worst = max(per_tensor.values()) if per_tensor else 0.0
    return GradCheckReport(max_rel_err=worst, per_tensor=per_tensor, tol=tol)
