"""Sparse multivariate polynomials with exact derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from horolab.errors import DomainError

MAX_DEGREE = 12


@dataclass(frozen=True)
class Polynomial:
    """``sum_k coefs[k] * prod_i t_i ** exps[k, i]`` in ``nvars`` variables."""

    nvars: int
    exps: tuple
    coefs: tuple

    def __post_init__(self):
        merged = {}
        for e, c in zip(self.exps, self.coefs):
            e = tuple(int(v) for v in e)
            if len(e) != self.nvars or min(e, default=0) < 0:
                raise DomainError(f"bad exponent {e} for {self.nvars} variables")
            merged[e] = merged.get(e, 0.0) + float(c)
        items = sorted((e, c) for e, c in merged.items() if c != 0.0)
        object.__setattr__(self, "exps", tuple(e for e, _ in items))
        object.__setattr__(self, "coefs", tuple(c for _, c in items))
        if self.degree > MAX_DEGREE:
            raise DomainError(f"degree {self.degree} exceeds cap {MAX_DEGREE}")

    @classmethod
    def from_terms(cls, nvars: int, terms) -> "Polynomial":
        """``terms`` is an iterable of ``(exponent tuple, coefficient)``."""
        terms = list(terms)
        return cls(nvars, tuple(tuple(e) for e, _ in terms), tuple(c for _, c in terms))

    @classmethod
    def constant(cls, nvars: int, c: float) -> "Polynomial":
        return cls.from_terms(nvars, [((0,) * nvars, c)])

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars, (), ())

    @classmethod
    def coordinate(cls, nvars: int, i: int) -> "Polynomial":
        e = [0] * nvars
        e[i] = 1
        return cls.from_terms(nvars, [(tuple(e), 1.0)])

    def terms(self):
        return list(zip(self.exps, self.coefs))

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.exps), default=0)

    def is_zero(self) -> bool:
        return not self.coefs

    def is_separable(self) -> bool:
        """True when every monomial involves at most one variable."""
        return all(sum(1 for v in e if v) <= 1 for e in self.exps)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if t.shape[-1] != self.nvars:
            raise DomainError(f"expected points with {self.nvars} coordinates")
        out = np.zeros(t.shape[:-1])
        if not self.coefs:
            return out
        top = np.max(np.array(self.exps), axis=0)
        powers = []
        for i in range(self.nvars):
            p = [None, t[..., i]]
            for _ in range(2, top[i] + 1):
                p.append(p[-1] * t[..., i])
            powers.append(p)
        for e, c in zip(self.exps, self.coefs):
            term = None
            for i, k in enumerate(e):
                if k:
                    term = powers[i][k] if term is None else term * powers[i][k]
            out = out + (c if term is None else c * term)
        return out

    def diff(self, i: int) -> "Polynomial":
        terms = []
        for e, c in zip(self.exps, self.coefs):
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                terms.append((tuple(ne), c * e[i]))
        return Polynomial.from_terms(self.nvars, terms)

    def grad(self) -> list["Polynomial"]:
        return [self.diff(i) for i in range(self.nvars)]

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial.from_terms(self.nvars, self.terms() + other.terms())

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, float)):
            return Polynomial.from_terms(self.nvars, [(e, c * other) for e, c in self.terms()])
        terms = [(tuple(a + b for a, b in zip(e1, e2)), c1 * c2)
                 for e1, c1 in self.terms() for e2, c2 in other.terms()]
        return Polynomial.from_terms(self.nvars, terms)

    __rmul__ = __mul__

    def univariate_parts(self):
        """For a separable polynomial: constant and per-variable coefficient lists."""
        if not self.is_separable():
            raise DomainError("polynomial has mixed monomials")
        const = 0.0
        parts = [dict() for _ in range(self.nvars)]
        for e, c in self.terms():
            nz = [i for i, v in enumerate(e) if v]
            if not nz:
                const += c
            else:
                parts[nz[0]][e[nz[0]]] = c
        return const, parts

    def to_config(self):
        return [[list(e), c] for e, c in self.terms()]

    @classmethod
    def from_config(cls, nvars: int, data) -> "Polynomial":
        return cls.from_terms(nvars, [(tuple(e), float(c)) for e, c in data])
