"""Second-order jets: exact value, gradient and Hessian propagation.

A ``Jet`` carries a truncated multivariate Taylor expansion of order two,
vectorised over a leading batch axis.  It is the multivariate form of a
second-order nested dual number: seeding ``n`` coordinates with
:func:`variables` and pushing them through ordinary arithmetic yields
exact first and second partial derivatives, with no step size involved.

Shapes: ``val`` is ``(B,)``, ``grad`` is ``(B, n)``, ``hess`` is ``(B, n, n)``.
"""

from __future__ import annotations

import numpy as np


class Jet:
    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 100  # make ndarray <op> Jet defer to Jet

    def __init__(self, val, grad, hess):
        self.val = val
        self.grad = grad
        self.hess = hess

    @property
    def nvars(self) -> int:
        return self.grad.shape[-1]

    @classmethod
    def constant(cls, value, batch: int, n: int) -> "Jet":
        val = np.broadcast_to(np.asarray(value, dtype=float), (batch,)).copy()
        return cls(val, np.zeros((batch, n)), np.zeros((batch, n, n)))

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.val.shape[0], self.nvars)

    # -- unary chain rule --------------------------------------------------
    def _apply(self, f, df, ddf) -> "Jet":
        g = self.grad
        return Jet(
            f,
            df[:, None] * g,
            df[:, None, None] * self.hess + ddf[:, None, None] * (g[:, :, None] * g[:, None, :]),
        )

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)
        return Jet(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val - other.val, self.grad - other.grad, self.hess - other.hess)
        return Jet(self.val - other, self.grad, self.hess)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if other.ndim == 0:
                return Jet(self.val * other, self.grad * other, self.hess * other)
            return Jet(self.val * other, self.grad * other[:, None], self.hess * other[:, None, None])
        a, b = self, other
        ga, gb = a.grad, b.grad
        cross = ga[:, :, None] * gb[:, None, :]
        return Jet(
            a.val * b.val,
            a.val[:, None] * gb + b.val[:, None] * ga,
            a.val[:, None, None] * b.hess + b.val[:, None, None] * a.hess + cross + cross.transpose(0, 2, 1),
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        inv = 1.0 / self.val
        return self._apply(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)):
            if p == 0:
                return Jet.constant(1.0, self.val.shape[0], self.nvars)
            if p < 0:
                return (self ** (-p)).reciprocal()
            result, base, k = None, self, int(p)
            while k:
                if k & 1:
                    result = base if result is None else result * base
                k >>= 1
                if k:
                    base = base * base
            return result
        p = float(p)
        v = self.val
        return self._apply(v**p, p * v ** (p - 1.0), p * (p - 1.0) * v ** (p - 2.0))

    # -- elementary functions ----------------------------------------------
    def sqrt(self):
        s = np.sqrt(self.val)
        return self._apply(s, 0.5 / s, -0.25 / (s * self.val))

    def exp(self):
        e = np.exp(self.val)
        return self._apply(e, e, e)

    def log(self):
        v = self.val
        return self._apply(np.log(v), 1.0 / v, -1.0 / (v * v))

    def sin(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._apply(s, c, -s)

    def cos(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._apply(c, -s, -c)

    def __repr__(self) -> str:
        return f"Jet(batch={self.val.shape[0]}, nvars={self.nvars})"


def variables(points) -> list[Jet]:
    """Seed one jet per coordinate column of ``points`` (shape ``(B, n)``)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    batch, n = pts.shape
    out = []
    for i in range(n):
        grad = np.zeros((batch, n))
        grad[:, i] = 1.0
        out.append(Jet(pts[:, i].copy(), grad, np.zeros((batch, n, n))))
    return out


# Generic elementary functions: dispatch on Jet, fall back to numpy.
def sqrt(v):
    return v.sqrt() if isinstance(v, Jet) else np.sqrt(v)


def sin(v):
    return v.sin() if isinstance(v, Jet) else np.sin(v)


def cos(v):
    return v.cos() if isinstance(v, Jet) else np.cos(v)


def exp(v):
    return v.exp() if isinstance(v, Jet) else np.exp(v)


def log(v):
    return v.log() if isinstance(v, Jet) else np.log(v)


def value(v):
    return v.val if isinstance(v, Jet) else v
