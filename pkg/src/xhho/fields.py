"""Scalar data fields: a smooth part plus multiples of enrichment functions.

Splitting the known non-smooth part off lets the quadrature dispatch treat
it with the same rules as the enrichment basis functions.
"""
import numpy as np

from .integrals import CellCols, FaceCols, FnColumn, SmoothColumn


def _zero(x):
    return np.zeros(len(x))


def _zero_grad(x):
    return np.zeros((len(x), 2))


class Field:
    """``v = smooth + sum_i coef_i * part_i``.

    Parameters
    ----------
    value, gradient, laplacian : callable or None
        Smooth part; ``None`` means zero.
    parts : sequence of (coef, EnrichmentFunction, kind)
        ``kind`` is ``"value"`` (the function itself) or ``"laplacian"``.
    """

    def __init__(self, value=None, gradient=None, laplacian=None, parts=()):
        self.has_smooth = value is not None
        self.smooth_value = value if value is not None else _zero
        self.smooth_gradient = gradient if gradient is not None else _zero_grad
        self.smooth_laplacian = laplacian if laplacian is not None else _zero
        self.parts = tuple((float(c), fn, kind) for c, fn, kind in parts)
        for _, _, kind in self.parts:
            if kind not in ("value", "laplacian"):
                raise ValueError("unknown part kind %r" % kind)

    def value(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.array(self.smooth_value(x), dtype=float)
        for c, fn, kind in self.parts:
            out = out + c * (fn.value(x) if kind == "value" else fn.laplacian(x))
        return out

    def gradient(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.array(self.smooth_gradient(x), dtype=float)
        for c, fn, kind in self.parts:
            if kind != "value":
                raise ValueError("gradient of a Laplacian part is not available")
            out = out + c * fn.gradient(x)
        return out

    def laplacian(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.array(self.smooth_laplacian(x), dtype=float)
        for c, fn, kind in self.parts:
            if kind != "value":
                raise ValueError("Laplacian of a Laplacian part is not available")
            out = out + c * fn.laplacian(x)
        return out

    __call__ = value

    # -- raw column views used by the local integrators

    def cell_cols(self):
        """``(cols, coefs)`` with ``v = sum_i coefs[i] * cols.extra[i]``."""
        extra, coefs = [], []
        if self.has_smooth:
            extra.append(SmoothColumn(self.smooth_value, self.smooth_gradient, self.smooth_laplacian))
            coefs.append(1.0)
        for c, fn, kind in self.parts:
            extra.append(FnColumn(fn, kind))
            coefs.append(c)
        return CellCols(0, poly=np.zeros((0, 1)), extra=extra), np.array(coefs)

    def face_cols(self):
        cols, coefs = self.cell_cols()
        return FaceCols(0, np.zeros((0, 1)), [c.value_term() for c in cols.extra]), coefs

    @property
    def is_zero(self):
        return not self.has_smooth and not self.parts


def zero_field():
    return Field()
