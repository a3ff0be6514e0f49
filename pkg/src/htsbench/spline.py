"""Natural cubic spline interpolation (tridiagonal solve, zero second

derivative at both endpoints).
"""

from __future__ import annotations

import numpy as np


def solve_tridiagonal(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray,
                      rhs: np.ndarray) -> np.ndarray:
    """Thomas algorithm for a tridiagonal system.

    ``sub[i]`` multiplies x[i-1] in row i (sub[0] unused), ``sup[i]``
    multiplies x[i+1] (sup[-1] unused). The system must be nonsingular.
    """
    n = diag.size
    c = np.zeros(n)
    d = np.zeros(n)
    c[0] = sup[0] / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - sub[i] * c[i - 1]
        if i < n - 1:
            c[i] = sup[i] / denom
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom
    x = np.zeros(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


class NaturalCubicSpline:
    """Interpolating cubic through (x, y) with natural boundary conditions.

    Requires strictly increasing x and at least two points; two points give
    the straight line through them.
    """

    def __init__(self, x: np.ndarray, y: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.ndim != 1 or x.size < 2 or x.shape != y.shape:
            raise ValueError("need two or more (x, y) pairs of equal length")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x positions must be strictly increasing")
        self.x = x
        self.y = y
        self.second_derivs = self._fit(x, y)

    @staticmethod
    def _fit(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        n = x.size
        m2 = np.zeros(n)
        if n == 2:
            return m2
        h = np.diff(x)
        # Interior rows i=1..n-2 of the standard natural-spline system.
        sub = h[:-1].copy()
        diag = 2.0 * (h[:-1] + h[1:])
        sup = h[1:].copy()
        slope = np.diff(y) / h
        rhs = 6.0 * np.diff(slope)
        m2[1:-1] = solve_tridiagonal(sub, diag, sup, rhs)
        return m2

    def __call__(self, query: np.ndarray) -> np.ndarray:
        q = np.asarray(query, dtype=np.float64)
        idx = np.searchsorted(self.x, q, side="right") - 1
        idx = np.clip(idx, 0, self.x.size - 2)
        x0 = self.x[idx]
        x1 = self.x[idx + 1]
        h = x1 - x0
        a = (x1 - q) / h
        b = (q - x0) / h
        m0 = self.second_derivs[idx]
        m1 = self.second_derivs[idx + 1]
        return (a * self.y[idx] + b * self.y[idx + 1]
                + ((a ** 3 - a) * m0 + (b ** 3 - b) * m1) * h ** 2 / 6.0)
