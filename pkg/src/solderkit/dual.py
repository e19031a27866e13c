"""Forward-mode dual numbers carrying a full gradient.

A :class:`Dual` holds a value and the vector of its first partial derivatives
with respect to the seeded coordinates.  Values may themselves be duals of an
enclosing seeding, which is how chart-map Jacobians are differentiated once
more without any second-order machinery: every seeding gets a fresh ``tag`` and
a dual with a lower tag is treated as a constant by one with a higher tag.

Elementary functions dispatch through numpy (``np.exp(d)`` calls ``d.exp()``),
so component functions written with ``np.*`` work on floats and duals alike.
"""

from __future__ import annotations

import itertools

import numpy as np

_tags = itertools.count(1)


def new_tag() -> int:
    return next(_tags)


class Dual:
    __slots__ = ("val", "grad", "tag")

    def __init__(self, val, grad, tag: int = 0):
        self.val = val
        self.grad = grad
        self.tag = tag

    def __repr__(self):
        return f"Dual({self.val!r}, {self.grad!r}, tag={self.tag})"

    def _split(self, other):
        # (value, gradient) of `other` as seen from this seeding, or None to defer
        if isinstance(other, Dual):
            if other.tag == self.tag:
                return other.val, other.grad
            if other.tag < self.tag:
                return other, 0.0
            return None
        if isinstance(other, np.ndarray):
            return None
        return other, 0.0

    def _defer(self, other, reflected):
        # Python skips the reflected method for same-type operands, so a
        # higher-tag dual on the right has to be handed the operation directly
        if isinstance(other, Dual):
            return getattr(other, reflected)(self)
        return NotImplemented

    def _chain(self, f, df):
        return Dual(f, self.grad * df, self.tag)

    def __add__(self, other):
        s = self._split(other)
        if s is None:
            return self._defer(other, "__radd__")
        return Dual(self.val + s[0], self.grad + s[1], self.tag)

    __radd__ = __add__

    def __sub__(self, other):
        s = self._split(other)
        if s is None:
            return self._defer(other, "__rsub__")
        return Dual(self.val - s[0], self.grad - s[1], self.tag)

    def __rsub__(self, other):
        s = self._split(other)
        if s is None:
            return self._defer(other, "__sub__")
        return Dual(s[0] - self.val, s[1] - self.grad, self.tag)

    def __mul__(self, other):
        s = self._split(other)
        if s is None:
            return self._defer(other, "__rmul__")
        v, g = s
        if isinstance(g, float) and g == 0.0:
            return Dual(self.val * v, self.grad * v, self.tag)
        return Dual(self.val * v, self.grad * v + g * self.val, self.tag)

    __rmul__ = __mul__

    def __truediv__(self, other):
        s = self._split(other)
        if s is None:
            return self._defer(other, "__rtruediv__")
        v, g = s
        if real(v) == 0.0:
            raise ZeroDivisionError("dual division by zero")
        if isinstance(g, float) and g == 0.0:
            return Dual(self.val / v, self.grad / v, self.tag)
        return Dual(self.val / v, (self.grad * v - g * self.val) / (v * v), self.tag)

    def __rtruediv__(self, other):
        s = self._split(other)
        if s is None:
            return self._defer(other, "__truediv__")
        v, g = s
        if real(self.val) == 0.0:
            raise ZeroDivisionError("dual division by zero")
        return Dual(v / self.val, (g * self.val - self.grad * v) / (self.val * self.val), self.tag)

    def __neg__(self):
        return Dual(-self.val, -self.grad, self.tag)

    def __pos__(self):
        return self

    def __pow__(self, p):
        if isinstance(p, Dual):
            return np.exp(p * np.log(self))
        if p == 0:
            return Dual(self.val * 0 + 1.0, self.grad * 0.0, self.tag)
        if p == 1:
            return self
        if p == 2:
            return self * self
        return self._chain(self.val ** p, p * self.val ** (p - 1))

    def __rpow__(self, base):
        return np.exp(self * np.log(base))

    def exp(self):
        e = np.exp(self.val)
        return self._chain(e, e)

    def log(self):
        return self._chain(np.log(self.val), 1.0 / self.val)

    def sqrt(self):
        r = np.sqrt(self.val)
        return self._chain(r, 0.5 / r)

    def sin(self):
        return self._chain(np.sin(self.val), np.cos(self.val))

    def cos(self):
        return self._chain(np.cos(self.val), -np.sin(self.val))

    def tan(self):
        c = np.cos(self.val)
        return self._chain(np.tan(self.val), 1.0 / (c * c))

    def sinh(self):
        return self._chain(np.sinh(self.val), np.cosh(self.val))

    def cosh(self):
        return self._chain(np.cosh(self.val), np.sinh(self.val))

    def tanh(self):
        t = np.tanh(self.val)
        return self._chain(t, 1.0 - t * t)

    def arctan(self):
        return self._chain(np.arctan(self.val), 1.0 / (1.0 + self.val * self.val))


def real(x) -> float:
    """Innermost real value of a possibly nested dual."""
    while isinstance(x, Dual):
        x = x.val
    return float(x)


def seed(point, tag: int | None = None) -> list[Dual]:
    """Independent dual variables at `point`, one gradient slot per coordinate."""
    tag = new_tag() if tag is None else tag
    m = len(point)
    eye = np.eye(m)
    return [Dual(point[i], eye[i], tag) for i in range(m)]


def split_jet(values, m: int, tag: int):
    """Separate an array of duals (or constants) into value and gradient arrays.

    The gradient axis is appended last.  Entries that are not duals of `tag`
    are constants and get a zero gradient.
    """
    arr = np.asarray(values, dtype=object)
    val = np.empty(arr.shape, dtype=object)
    grad = np.empty(arr.shape + (m,), dtype=object)
    for idx in np.ndindex(arr.shape):
        x = arr[idx]
        if isinstance(x, Dual) and x.tag == tag:
            val[idx] = x.val
            grad[idx] = x.grad
        else:
            val[idx] = x
            grad[idx] = np.zeros(m)
    return val, grad


def to_float(arr) -> np.ndarray:
    out = np.asarray(arr, dtype=object)
    return np.vectorize(real, otypes=[float])(out) if out.size else out.astype(float)


def jet(fn, point):
    """Value and Jacobian of ``fn`` at ``point`` as float arrays.

    ``fn`` maps a sequence of coordinates to a (nested) array; the Jacobian has
    the derivative index as its last axis.
    """
    tag = new_tag()
    xs = seed(np.asarray(point, dtype=float), tag)
    val, grad = split_jet(fn(xs), len(xs), tag)
    return to_float(val), to_float(grad)


def jacobian_at(fn, coords) -> np.ndarray:
    """Jacobian of ``fn`` at ``coords``, where coords may be duals of an outer seeding.

    Entries of the result are of the same kind as the coordinates, so the result
    can be differentiated by the enclosing seeding.
    """
    tag = new_tag()
    m = len(coords)
    eye = np.eye(m)
    xs = [Dual(coords[i], eye[i], tag) for i in range(m)]
    _, grad = split_jet(fn(xs), m, tag)
    return grad


def solve(a, b):
    """Solve ``a @ x = b`` by Gauss-Jordan elimination with partial pivoting.

    Works on object arrays of duals; pivots are chosen on real parts.
    """
    a = np.array(a, dtype=object)
    b = np.array(b, dtype=object)
    vec = b.ndim == 1
    if vec:
        b = b[:, None]
    n = a.shape[0]
    aug = np.concatenate([a, b], axis=1)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(real(aug[r, col])))
        if abs(real(aug[piv, col])) < 1e-300:
            raise np.linalg.LinAlgError("singular matrix")
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] = aug[col] / aug[col, col]
        for r in range(n):
            if r != col:
                aug[r] = aug[r] - aug[r, col] * aug[col]
    x = aug[:, n:]
    return x[:, 0] if vec else x
