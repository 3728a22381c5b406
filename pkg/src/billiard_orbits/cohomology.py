"""Finitely presented graded-commutative algebras over F_p.

Monomials are exponent tuples over an ordered generator list.  Products are
brought into increasing generator order with the Koszul sign
``(-1)^{|a||b|}`` for every transposition; in odd characteristic, squares of
odd-degree generators vanish.  Relations that are single monomials are
applied by discarding divisible monomials, the remaining relations by exact
Gaussian elimination over F_p one degree at a time.

The two presentations built here are the mod-p cohomology rings of the
cyclic configuration spaces

    G(X, p) = {(x_1, .., x_p) in X^p : x_i != x_{i+1} (indices mod p)}

for ``X = R^d`` and ``X = S^{d-1}``.  Their top degrees corroborate the
closed-form index values used for the trajectory bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import InvalidParams

__all__ = [
    "GradedAlgebra",
    "BettiTable",
    "IndexBound",
    "CrossCheckFailure",
    "is_prime",
    "build_plane_conf_algebra",
    "build_sphere_conf_algebra",
    "power_check",
    "index_and_bound",
    "trajectory_bound",
]

MAX_P = 13
MAX_D = 6


class CrossCheckFailure(AssertionError):
    """A computed algebra disagrees with the closed-form index value."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % k for k in range(2, int(n**0.5) + 1))


def _rref_mod(rows: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over F_p; returns (nonzero rows, pivot columns)."""
    A = np.array(rows, dtype=np.int64) % p
    n_rows, n_cols = A.shape
    pivots = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        k = r + nz[0]
        if k != r:
            A[[r, k]] = A[[k, r]]
        A[r] = (A[r] * pow(int(A[r, c]), -1, p)) % p
        others = np.flatnonzero(A[:, c])
        others = others[others != r]
        if others.size:
            A[others] = (A[others] - np.outer(A[others, c], A[r])) % p
        pivots.append(c)
        r += 1
    return A[:r], pivots


@dataclass
class BettiTable:
    dims: dict[int, int]

    @property
    def top_degree(self) -> int:
        return max(n for n, v in self.dims.items() if v)

    @property
    def total(self) -> int:
        return sum(self.dims.values())

    def nonzero(self) -> dict[int, int]:
        return {n: v for n, v in sorted(self.dims.items()) if v}

    def to_dict(self) -> dict:
        return {"dims": {str(n): v for n, v in self.nonzero().items()}, "top_degree": self.top_degree}


@dataclass
class _Degree:
    monomials: list[tuple]
    index: dict[tuple, int]
    rows: np.ndarray
    pivots: list[int]
    basis: list[tuple]


@dataclass
class GradedAlgebra:
    """Graded-commutative algebra over F_p given by generators and relations.

    Parameters
    ----------
    p : int
        Prime characteristic of the coefficient field.
    generators : list of (name, degree)
        Degrees must be positive.
    relations : list of list of (coeff, word)
        Each relation is a sum of ``coeff * g_{w1} g_{w2} ...`` where the
        word lists generator names in the order written; words are sorted
        with Koszul signs.  Single-term relations become monomial relations.
    """

    p: int
    generators: list[tuple[str, int]]
    relations: list = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        if not is_prime(self.p):
            raise InvalidParams(f"coefficient field needs a prime, got {self.p}")
        if any(deg <= 0 for _, deg in self.generators):
            raise InvalidParams("generator degrees must be positive")
        self._names = {name: i for i, (name, _) in enumerate(self.generators)}
        self._deg = np.array([deg for _, deg in self.generators], dtype=int)
        self._zero: list[tuple] = []
        self._polys: list[dict] = []
        for rel in self.relations:
            poly = self.poly(rel)
            if len(poly) == 0:
                continue
            if len(poly) == 1:
                self._zero.append(next(iter(poly)))
            else:
                self._polys.append(poly)
        if self.p != 2:
            # graded commutativity kills squares of odd generators; recorded explicitly
            for i, deg in enumerate(self._deg):
                if deg % 2:
                    sq = tuple(2 if j == i else 0 for j in range(len(self._deg)))
                    if sq not in self._zero:
                        self._zero.append(sq)
        for poly in self._polys:
            degs = {self.degree(m) for m in poly}
            if len(degs) != 1:
                raise InvalidParams(f"relation is not homogeneous: {self.format(poly)}")
        self._max_exp = []
        for i in range(self.ngens):
            pure = [z[i] for z in self._zero if sum(z) == z[i]]
            self._max_exp.append(min(pure) - 1 if pure else 10**9)
        # pure powers and square-free pairs get fast paths; anything else is scanned
        self._pair_mask = [0] * self.ngens
        self._other_zero = []
        for z in self._zero:
            support = [i for i, e in enumerate(z) if e]
            if len(support) == 2 and sum(z) == 2:
                i, j = support
                self._pair_mask[i] |= 1 << j
                self._pair_mask[j] |= 1 << i
            elif len(support) != 1:
                self._other_zero.append(z)
        self._cache: dict[int, _Degree] = {}
        self._mono_cache: dict[int, list[tuple]] = {}

    # -- monomials -------------------------------------------------------------

    @property
    def ngens(self) -> int:
        return len(self.generators)

    def degree(self, m: tuple) -> int:
        return int(np.dot(m, self._deg))

    def gen(self, name: str) -> tuple:
        i = self._names[name]
        return tuple(1 if j == i else 0 for j in range(self.ngens))

    def is_zero_monomial(self, m: tuple) -> bool:
        mask = 0
        for i, e in enumerate(m):
            if e:
                if e > self._max_exp[i] or self._pair_mask[i] & mask:
                    return True
                mask |= 1 << i
        return any(all(a >= b for a, b in zip(m, z)) for z in self._other_zero)

    def _koszul(self, m1: tuple, m2: tuple) -> int:
        """Sign of sorting ``m1 * m2`` into increasing generator order."""
        if self.p == 2:
            return 1
        odd = [(a * d) % 2 for a, d in zip(m1, self._deg)]
        # each generator of m2 moves past the generators of m1 with larger index
        swaps = 0
        for j, b in enumerate(m2):
            if b and self._deg[j] % 2:
                swaps += b * sum(odd[j + 1:])
        return -1 if swaps % 2 else 1

    def mul_monomials(self, m1: tuple, m2: tuple) -> tuple[int, tuple]:
        """Sign and sorted product; sign 0 if the product vanishes."""
        prod = tuple(a + b for a, b in zip(m1, m2))
        if self.is_zero_monomial(prod):
            return 0, prod
        return self._koszul(m1, m2), prod

    def word(self, names) -> tuple[int, tuple]:
        """Sign and monomial of an ordered product of generator names (no relations applied)."""
        sign, m = 1, tuple([0] * self.ngens)
        for name in names:
            g = self.gen(name)
            sign *= self._koszul(m, g)
            m = tuple(a + b for a, b in zip(m, g))
        return sign, m

    def poly(self, terms) -> dict:
        """Polynomial ``{monomial: coeff}`` from ``[(coeff, word), ...]``."""
        out: dict[tuple, int] = {}
        for coeff, names in terms:
            sign, m = self.word(names)
            out[m] = (out.get(m, 0) + sign * coeff) % self.p
        return {m: c for m, c in out.items() if c}

    def monomials(self, n: int) -> list[tuple]:
        """Monomials of degree ``n`` not killed by monomial relations."""
        if n in self._mono_cache:
            return self._mono_cache[n]
        out = []
        k = self.ngens

        def rec(i, rem, cur, used):
            if i == k or rem == 0:
                if rem == 0:
                    m = tuple(cur)
                    if not self.is_zero_monomial(m):
                        out.append(m)
                return
            deg = int(self._deg[i])
            top = min(rem // deg, self._max_exp[i])
            if used & self._pair_mask[i]:
                top = 0
            for e in range(top + 1):
                cur[i] = e
                rec(i + 1, rem - e * deg, cur, used | (1 << i) if e else used)
            cur[i] = 0

        rec(0, n, [0] * k, 0)
        # products of many generators first so they become pivots; basis favours few factors
        out.sort(key=lambda m: (-sum(m), tuple(-e for e in m)))
        self._mono_cache[n] = out
        return out

    # -- per-degree linear algebra ----------------------------------------------

    def _degree_data(self, n: int) -> _Degree:
        if n in self._cache:
            return self._cache[n]
        mons = self.monomials(n)
        index = {m: i for i, m in enumerate(mons)}
        rows = []
        for rel in self._polys:
            e = self.degree(next(iter(rel)))
            if e > n:
                continue
            for m in self.monomials(n - e):
                row = np.zeros(len(mons), dtype=np.int64)
                for r, c in rel.items():
                    sign, prod = self.mul_monomials(m, r)
                    if sign:
                        row[index[prod]] += sign * c
                if np.any(row % self.p):
                    rows.append(row)
        if rows:
            R, piv = _rref_mod(np.array(rows), self.p)
        else:
            R, piv = np.zeros((0, len(mons)), dtype=np.int64), []
        pivset = set(piv)
        basis = [m for i, m in enumerate(mons) if i not in pivset]
        data = _Degree(mons, index, R, piv, basis)
        self._cache[n] = data
        return data

    def basis(self, n: int) -> list[tuple]:
        return list(self._degree_data(n).basis)

    def dim(self, n: int) -> int:
        return len(self._degree_data(n).basis)

    def normal_form(self, poly: dict) -> dict:
        """Reduce a homogeneous polynomial to a combination of basis monomials."""
        poly = {m: c % self.p for m, c in poly.items() if c % self.p and not self.is_zero_monomial(m)}
        if not poly:
            return {}
        degs = {self.degree(m) for m in poly}
        if len(degs) != 1:
            raise InvalidParams("normal_form expects a homogeneous polynomial")
        data = self._degree_data(degs.pop())
        v = np.zeros(len(data.monomials), dtype=np.int64)
        for m, c in poly.items():
            v[data.index[m]] = c
        for row, c in zip(data.rows, data.pivots):
            if v[c]:
                v = (v - v[c] * row) % self.p
        return {data.monomials[i]: int(v[i]) for i in np.flatnonzero(v)}

    def multiply(self, a: dict, b: dict) -> dict:
        out: dict[tuple, int] = {}
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                sign, m = self.mul_monomials(m1, m2)
                if sign:
                    out[m] = (out.get(m, 0) + sign * c1 * c2) % self.p
        return self.normal_form({m: c for m, c in out.items() if c})

    def element(self, *names: str) -> dict:
        sign, m = self.word(names)
        return self.normal_form({m: sign})

    def betti(self, max_degree: int = 400) -> BettiTable:
        """Dimensions per degree, proven to vanish beyond the last nonzero degree.

        Once ``max generator degree`` consecutive degrees are zero, every
        higher monomial has a zero factor, so the scan stops there.
        """
        window = int(self._deg.max()) if self.ngens else 1
        dims = {0: self.dim(0)}
        zeros = 0
        for n in range(1, max_degree + 1):
            dims[n] = self.dim(n)
            zeros = zeros + 1 if dims[n] == 0 else 0
            if zeros >= window:
                return BettiTable({k: v for k, v in dims.items()})
        raise InvalidParams(f"{self.name or 'algebra'} does not vanish below degree {max_degree}")

    # -- self-checks -------------------------------------------------------------

    def _basis_elements(self, table: BettiTable):
        for n in sorted(table.nonzero()):
            for m in self.basis(n):
                yield m

    def check_graded_commutativity(self) -> bool:
        """``ab = (-1)^{|a||b|} ba`` for all pairs of basis monomials."""
        basis = list(self._basis_elements(self.betti()))
        for a, b in itertools.product(basis, repeat=2):
            ab = self.multiply({a: 1}, {b: 1})
            ba = self.multiply({b: 1}, {a: 1})
            sign = (-1) ** (self.degree(a) * self.degree(b))
            diff = {m: (ab.get(m, 0) - sign * ba.get(m, 0)) % self.p for m in set(ab) | set(ba)}
            if any(diff.values()):
                return False
        return True

    def check_confluence(self) -> bool:
        """Reducing ``(a b) g`` and ``a (b g)`` agrees for basis ``a, b`` and generators ``g``."""
        basis = list(self._basis_elements(self.betti()))
        gens = [self.gen(name) for name, _ in self.generators]
        for a, b, g in itertools.product(basis, basis, gens):
            left = self.multiply(self.multiply({a: 1}, {b: 1}), {g: 1})
            right = self.multiply({a: 1}, self.multiply({b: 1}, {g: 1}))
            if left != right:
                return False
        return True

    def format(self, poly: dict) -> str:
        if not poly:
            return "0"
        parts = []
        for m, c in sorted(poly.items()):
            factors = []
            for (name, _), e in zip(self.generators, m):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            mono = "*".join(factors) or "1"
            parts.append(mono if c == 1 else f"{c}*{mono}")
        return " + ".join(parts)


# -- presentations -------------------------------------------------------------------


def _check_prime(p: int, *, odd: bool):
    if not is_prime(p) or (odd and p == 2):
        kind = "an odd prime" if odd else "a prime"
        raise InvalidParams(f"p must be {kind}, got {p}")
    if p > MAX_P:
        raise InvalidParams(f"p = {p} exceeds the supported range p <= {MAX_P}")


def build_plane_conf_algebra(d: int, p: int) -> GradedAlgebra:
    """Cohomology of G(R^d, p) with F_p coefficients.

    ``p`` square-zero generators ``s_1 .. s_p`` of degree ``d - 1``, cyclically
    permuted by the rotation of indices, and one relation: the sum of the
    ``p`` cyclic products ``s_i s_{i+1} .. s_{i+p-2}`` (each omits one
    generator), with each word sorted into increasing index order.
    """
    if d < 2 or d > MAX_D:
        raise InvalidParams(f"d must be in [2, {MAX_D}], got {d}")
    _check_prime(p, odd=False)
    names = [f"s_{i}" for i in range(1, p + 1)]
    rels = [[(1, (n, n))] for n in names]
    cyclic = [(1, tuple(names[(i + k) % p] for k in range(p - 1))) for i in range(p)]
    rels.append(cyclic)
    return GradedAlgebra(p, [(n, d - 1) for n in names], rels, name=f"H*(G(R^{d},{p}))")


def _divided_power_relations(prefix: str, top: int):
    rels = []
    for i in range(1, top + 1):
        for j in range(i, top + 1):
            si, sj = f"{prefix}_{i}", f"{prefix}_{j}"
            if i + j <= top:
                rels.append([(1, (si, sj)), (-comb(i + j, i), (f"{prefix}_{i + j}",))])
            else:
                rels.append([(1, (si, sj))])
    return rels


def build_sphere_conf_algebra(d: int, p: int) -> GradedAlgebra:
    """Cohomology of G(S^{d-1}, p) with F_p coefficients.

    Even ``d >= 4``: ``u`` in degree ``d - 1`` and ``s_i`` in degree ``i(d - 2)``
    for ``i = 1 .. p-2``.  Odd ``d >= 3``: ``w`` in degree ``2d - 3`` and ``t_i``
    in degree ``i(2d - 4)`` for ``i = 1 .. (p-3)/2``.  In both cases the odd
    class squares to zero and ``x_i x_j = binom(i+j, i) x_{i+j}``, truncated
    to zero past the last index.
    """
    if d < 3 or d > MAX_D:
        raise InvalidParams(f"d must be in [3, {MAX_D}], got {d}")
    _check_prime(p, odd=True)
    if d % 2 == 0:
        odd_name, odd_deg, prefix, step, top = "u", d - 1, "s", d - 2, p - 2
    else:
        odd_name, odd_deg, prefix, step, top = "w", 2 * d - 3, "t", 2 * d - 4, (p - 3) // 2
    gens = [(odd_name, odd_deg)] + [(f"{prefix}_{i}", i * step) for i in range(1, top + 1)]
    rels = [[(1, (odd_name, odd_name))]] + _divided_power_relations(prefix, top)
    return GradedAlgebra(p, gens, rels, name=f"H*(G(S^{d - 1},{p}))")


def power_check(algebra: GradedAlgebra, generator: str, k: int) -> dict:
    """Normal form of ``generator^k``, built up one factor at a time."""
    if k < 1:
        raise InvalidParams("k must be >= 1")
    g = algebra.element(generator)
    acc = g
    for _ in range(k - 1):
        acc = algebra.multiply(acc, g)
        if not acc:
            break
    return acc


# -- index arithmetic --------------------------------------------------------------


def trajectory_bound(d: int, p: int) -> int:
    return (d - 2) * (p - 1) + 2


@dataclass(frozen=True)
class IndexBound:
    d: int
    p: int
    hind_plane: int
    hind_sphere: int
    dim_bound: int
    cat_bound: int
    trajectory_bound: int
    stiefel_index: int
    plane_top_degree: int
    sphere_top_degree: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def index_and_bound(d: int, p: int, *, cross_check: bool = True) -> IndexBound:
    """Closed-form index values and the trajectory bound, corroborated by the algebras.

    Raises
    ------
    CrossCheckFailure
        If the top degree of a computed ring disagrees with the closed form.
    """
    if d < 3:
        raise InvalidParams(f"d must be >= 3, got {d}")
    _check_prime(p, odd=True)
    hind_plane = (d - 1) * (p - 1)
    hind_sphere = (d - 2) * (p - 1) + 1
    plane_top = sphere_top = -1
    if cross_check:
        plane_top = build_plane_conf_algebra(d, p).betti().top_degree
        sphere_top = build_sphere_conf_algebra(d, p).betti().top_degree
        if plane_top != hind_plane:
            raise CrossCheckFailure(f"plane ring top degree {plane_top} != {hind_plane}")
        if sphere_top != hind_sphere:
            raise CrossCheckFailure(f"sphere ring top degree {sphere_top} != {hind_sphere}")
    return IndexBound(
        d=d,
        p=p,
        hind_plane=hind_plane,
        hind_sphere=hind_sphere,
        dim_bound=(d - 2) * (p - 1) + 1,
        cat_bound=hind_sphere + 1,
        trajectory_bound=trajectory_bound(d, p),
        stiefel_index=2 * d - 3,
        plane_top_degree=plane_top,
        sphere_top_degree=sphere_top,
    )
