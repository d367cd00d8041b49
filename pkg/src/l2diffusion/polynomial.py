"""Truncated multivariate polynomials of low total degree.

Coefficients are stored sparsely as ``{exponent tuple: coefficient}``.  Every
product is truncated at the polynomial's ``degree`` so composition never
builds terms that would be thrown away.
"""

from __future__ import annotations

from itertools import product
from math import comb

import numpy as np


class Poly:
    __slots__ = ("nvars", "degree", "coeffs")

    def __init__(self, nvars: int, degree: int, coeffs=None):
        self.nvars = nvars
        self.degree = degree
        self.coeffs: dict[tuple[int, ...], complex] = {}
        if coeffs:
            for k, v in coeffs.items():
                if sum(k) <= degree and v != 0:
                    self.coeffs[tuple(k)] = v

    # constructors -----------------------------------------------------------

    @classmethod
    def constant(cls, nvars, degree, c):
        return cls(nvars, degree, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars, degree, i, shift=0.0):
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, degree, {(0,) * nvars: shift, tuple(e): 1.0})

    @classmethod
    def linear(cls, coefs, degree, const=0.0):
        n = len(coefs)
        out = {(0,) * n: const}
        for i, c in enumerate(coefs):
            e = [0] * n
            e[i] = 1
            out[tuple(e)] = c
        return cls(n, degree, out)

    # arithmetic -------------------------------------------------------------

    def _wrap(self, other):
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return Poly.constant(self.nvars, self.degree, other)

    def __add__(self, other):
        other = self._wrap(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return Poly(self.nvars, min(self.degree, other.degree), out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, self.degree, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(self.nvars, self.degree, {k: v * other for k, v in self.coeffs.items()})
        deg = min(self.degree, other.degree)
        out: dict = {}
        for ka, va in self.coeffs.items():
            da = sum(ka)
            for kb, vb in other.coeffs.items():
                if da + sum(kb) > deg:
                    continue
                k = tuple(a + b for a, b in zip(ka, kb))
                out[k] = out.get(k, 0.0) + va * vb
        return Poly(self.nvars, deg, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Poly.constant(self.nvars, self.degree, 1.0)
        for _ in range(n):
            out = out * self
        return out

    # calculus and evaluation ------------------------------------------------

    def diff(self, i: int) -> "Poly":
        out = {}
        for k, v in self.coeffs.items():
            if k[i]:
                e = list(k)
                e[i] -= 1
                out[tuple(e)] = v * k[i]
        return Poly(self.nvars, max(self.degree - 1, 0), out)

    def coefficient(self, *exponents) -> complex:
        return self.coeffs.get(tuple(exponents), 0.0)

    def homogeneous(self, d: int) -> "Poly":
        return Poly(self.nvars, self.degree, {k: v for k, v in self.coeffs.items() if sum(k) == d})

    def __call__(self, *x):
        total = 0.0
        for k, v in self.coeffs.items():
            term = v
            for xi, ei in zip(x, k):
                if ei:
                    term = term * xi**ei
            total = total + term
        return total

    def compose(self, subs: list["Poly"]) -> "Poly":
        """Substitute ``subs[i]`` for variable ``i``."""
        if len(subs) != self.nvars:
            raise ValueError("need one substitution per variable")
        deg = min(self.degree, min(s.degree for s in subs))
        nv = subs[0].nvars
        powers = []
        for i, s in enumerate(subs):
            top = max((k[i] for k in self.coeffs), default=0)
            p = [Poly.constant(nv, deg, 1.0)]
            for _ in range(top):
                p.append(p[-1] * s)
            powers.append(p)
        out = Poly(nv, deg)
        for k, v in self.coeffs.items():
            term = Poly.constant(nv, deg, v)
            for i, ei in enumerate(k):
                if ei:
                    term = term * powers[i][ei]
            out = out + term
        return out

    def __repr__(self):
        return f"Poly(nvars={self.nvars}, degree={self.degree}, terms={len(self.coeffs)})"


def monomials(nvars: int, degree: int):
    """All exponent tuples of total degree exactly ``degree``."""
    return [k for k in product(range(degree + 1), repeat=nvars) if sum(k) == degree]


def binomial_half(n: int) -> float:
    """Generalised binomial coefficient ``C(-1/2, n)``."""
    return (-1) ** n * comb(2 * n, n) / 4**n


def inverse_distance_taylor(a: float, b: float, degree: int) -> Poly:
    """Taylor polynomial of ``1 / |(a + u, b + v)|`` in ``(u, v)``."""
    rho2 = a * a + b * b
    u = Poly.variable(2, degree, 0)
    v = Poly.variable(2, degree, 1)
    s = (2.0 * a * u + u * u + 2.0 * b * v + v * v) * (1.0 / rho2)
    out = Poly(2, degree)
    sn = Poly.constant(2, degree, 1.0)
    for n in range(degree + 1):
        out = out + sn * binomial_half(n)
        sn = sn * s
    return out * (1.0 / np.sqrt(rho2))
