"""Multivariate power series over the Witt ring, truncated at a total
degree bound.

Coefficients live in a WittContext; monomials above the bound are dropped
silently.  Each series carries a validity degree: coefficients of total
degree up to ``valid`` are trusted, higher ones are unknown.  The
Frobenius lift acts by sigma on coefficients and x_i -> x_i^p on
variables, which multiplies validity by p (capped at the bound).
"""

from __future__ import annotations


class TruncatedSeries:
    __slots__ = ("ctx", "nvars", "dmax", "coeffs", "valid")

    def __init__(self, ctx, nvars, dmax, coeffs=None, valid=None):
        self.ctx = ctx
        self.nvars = nvars
        self.dmax = dmax
        self.coeffs = {}
        if coeffs:
            for expo, c in coeffs.items():
                if sum(expo) <= dmax and not c.is_zero():
                    self.coeffs[tuple(expo)] = c
        self.valid = dmax if valid is None else min(valid, dmax)

    # -- constructors ----------------------------------------------------------

    @staticmethod
    def zero(ctx, nvars, dmax):
        return TruncatedSeries(ctx, nvars, dmax)

    @staticmethod
    def constant(ctx, nvars, dmax, value):
        s = TruncatedSeries(ctx, nvars, dmax)
        value = ctx.scalar(value)
        if not value.is_zero():
            s.coeffs[(0,) * nvars] = value
        return s

    @staticmethod
    def variable(ctx, nvars, dmax, i, power=1):
        s = TruncatedSeries(ctx, nvars, dmax)
        expo = [0] * nvars
        expo[i] = power
        if power <= dmax:
            s.coeffs[tuple(expo)] = ctx.one
        return s

    # -- ring operations ---------------------------------------------------------

    def _like(self, coeffs, valid):
        out = TruncatedSeries(self.ctx, self.nvars, self.dmax)
        out.coeffs = {e: c for e, c in coeffs.items() if not c.is_zero()}
        out.valid = min(valid, self.dmax)
        return out

    def __add__(self, other):
        coeffs = dict(self.coeffs)
        for e, c in other.coeffs.items():
            if e in coeffs:
                coeffs[e] = coeffs[e] + c
            else:
                coeffs[e] = c
        return self._like(coeffs, min(self.valid, other.valid))

    def __sub__(self, other):
        coeffs = dict(self.coeffs)
        for e, c in other.coeffs.items():
            if e in coeffs:
                coeffs[e] = coeffs[e] - c
            else:
                coeffs[e] = -c
        return self._like(coeffs, min(self.valid, other.valid))

    def __neg__(self):
        return self._like({e: -c for e, c in self.coeffs.items()},
                          self.valid)

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            c = self.ctx.scalar(other)
            return self._like({e: v * c for e, v in self.coeffs.items()},
                              self.valid)
        dmax = self.dmax
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                deg = sum(e1) + sum(e2)
                if deg > dmax:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                prod = c1 * c2
                if e in out:
                    out[e] = out[e] + prod
                else:
                    out[e] = prod
        return self._like(out, min(self.valid, other.valid))

    __rmul__ = __mul__

    def scale_p(self, k):
        """Multiply by p^k (k >= 0)."""
        m = self.ctx.p ** k
        return self._like({e: c * m for e, c in self.coeffs.items()},
                          self.valid)

    def is_zero(self):
        return not self.coeffs

    def is_zero_through(self, degree):
        return all(c.is_zero() for e, c in self.coeffs.items()
                   if sum(e) <= degree)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):  # pragma: no cover
        raise TypeError("series are not hashable")

    # -- structure maps ---------------------------------------------------------

    def frobenius_lift(self):
        """sigma on coefficients, x_i -> x_i^p; monomials escaping the
        truncation are dropped and validity is scaled accordingly."""
        p = self.ctx.p
        out = {}
        for e, c in self.coeffs.items():
            pe = tuple(p * a for a in e)
            if sum(pe) <= self.dmax:
                out[pe] = c.frobenius()
        return self._like(out, min(self.dmax, p * self.valid + p - 1))

    def partial(self, i):
        """Formal partial derivative."""
        out = {}
        for e, c in self.coeffs.items():
            if e[i] == 0:
                continue
            de = list(e)
            de[i] -= 1
            out[tuple(de)] = c * e[i]
        return self._like(out, max(self.valid - 1, 0))

    def evaluate(self, point):
        """Value at a tuple of scalars (uses every stored coefficient)."""
        ctx = self.ctx
        acc = ctx.zero
        powers = [[ctx.one] for _ in range(self.nvars)]
        for i, z in enumerate(point):
            col = powers[i]
            for _ in range(self.dmax):
                col.append(col[-1] * z)
        for e, c in self.coeffs.items():
            term = c
            for i, a in enumerate(e):
                if a:
                    term = term * powers[i][a]
            acc = acc + term
        return acc

    def constant_term(self):
        return self.coeffs.get((0,) * self.nvars, self.ctx.zero)

    def coefficient(self, expo):
        return self.coeffs.get(tuple(expo), self.ctx.zero)

    def support_degrees(self):
        return sorted({sum(e) for e in self.coeffs})

    def __repr__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for e in sorted(self.coeffs, key=lambda t: (sum(t), t)):
            c = self.coeffs[e]
            mono = "*".join(f"x{i}^{a}" if a > 1 else f"x{i}"
                            for i, a in enumerate(e) if a)
            terms.append(f"{c!r}{'*' + mono if mono else ''}")
        return " + ".join(terms)
