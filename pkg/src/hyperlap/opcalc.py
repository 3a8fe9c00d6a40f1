"""Operational calculus: polynomial symbols, the characteristic set at
infinity, the Koszul complex with its explicit contraction homotopy, and
division by the symbol through the transform pair.

Polynomial arithmetic is exact over complex rationals (pairs of Fractions):
the homotopy identities are coefficient-level equalities and must not see
floating point.  Numeric evaluation converts at the boundary.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CapTooSmall, CoefficientMismatch, DegreeOverflow, EmptyHPC, PoleOnChain,
    SolvabilityFail, ZeroOperator,
)
from .geometry import ClosedConicSet, Direction, in_hpc


class QQi:
    """Gaussian rationals a + b i with exact Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def of(x) -> "QQi":
        if isinstance(x, QQi):
            return x
        if isinstance(x, complex):
            return QQi(Fraction(x.real).limit_denominator(10 ** 12),
                       Fraction(x.imag).limit_denominator(10 ** 12))
        return QQi(x)

    def __add__(self, o):
        o = QQi.of(o)
        return QQi(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __sub__(self, o):
        return self + (-QQi.of(o))

    def __rsub__(self, o):
        return QQi.of(o) + (-self)

    def __mul__(self, o):
        o = QQi.of(o)
        return QQi(self.re * o.re - self.im * o.im,
                   self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = QQi.of(o)
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero in QQi")
        return QQi((self.re * o.re + self.im * o.im) / d,
                   (self.im * o.re - self.re * o.im) / d)

    def __eq__(self, o):
        o = QQi.of(o)
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return str(self.re)
        return f"({self.re}+{self.im}i)"


@dataclass(frozen=True)
class MultiPoly:
    """Sparse multivariate polynomial: exponent tuples -> QQi, no zeros."""

    coeffs: tuple  # of (exponent tuple, QQi)
    n: int

    @staticmethod
    def of(data: dict, n: int) -> "MultiPoly":
        clean = []
        for ex, c in sorted(data.items()):
            c = QQi.of(c)
            if not c.is_zero():
                if len(ex) != n:
                    raise ValueError("exponent arity mismatch")
                clean.append((tuple(int(e) for e in ex), c))
        return MultiPoly(tuple(clean), n)

    @staticmethod
    def zero(n: int) -> "MultiPoly":
        return MultiPoly((), n)

    @staticmethod
    def const(c, n: int) -> "MultiPoly":
        return MultiPoly.of({(0,) * n: QQi.of(c)}, n)

    @staticmethod
    def variable(k: int, n: int) -> "MultiPoly":
        ex = [0] * n
        ex[k - 1] = 1
        return MultiPoly.of({tuple(ex): QQi(1)}, n)

    def items(self):
        return self.coeffs

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        if not self.coeffs:
            return -1
        return max(sum(ex) for ex, _ in self.coeffs)

    def __add__(self, o):
        if not isinstance(o, MultiPoly):
            o = MultiPoly.const(o, self.n)
        d = self.as_dict()
        for ex, c in o.coeffs:
            d[ex] = d.get(ex, QQi(0)) + c
        return MultiPoly.of(d, self.n)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(tuple((ex, -c) for ex, c in self.coeffs), self.n)

    def __sub__(self, o):
        if not isinstance(o, MultiPoly):
            o = MultiPoly.const(o, self.n)
        return self + (-o)

    def __mul__(self, o):
        if not isinstance(o, MultiPoly):
            o = MultiPoly.const(o, self.n)
        d: dict = {}
        for e1, c1 in self.coeffs:
            for e2, c2 in o.coeffs:
                ex = tuple(a + b for a, b in zip(e1, e2))
                d[ex] = d.get(ex, QQi(0)) + c1 * c2
        return MultiPoly.of(d, self.n)

    __rmul__ = __mul__

    def homogeneous_part(self, deg: int) -> "MultiPoly":
        return MultiPoly(tuple((ex, c) for ex, c in self.coeffs
                               if sum(ex) == deg), self.n)

    def eval(self, point) -> complex:
        pt = np.asarray(point, dtype=complex)
        total = 0.0 + 0.0j
        for ex, c in self.coeffs:
            term = c.to_complex()
            for v, e in zip(pt, ex):
                if e:
                    term = term * v ** e
            total += term
        return total

    def eval_grid(self, *coords) -> np.ndarray:
        """Vectorized evaluation on broadcastable coordinate arrays."""
        out = None
        for ex, c in self.coeffs:
            term = np.full(np.broadcast(*coords).shape, c.to_complex())
            for v, e in zip(coords, ex):
                if e:
                    term = term * np.asarray(v) ** e
            out = term if out is None else out + term
        if out is None:
            return np.zeros(np.broadcast(*coords).shape, dtype=complex)
        return out

    def __repr__(self):
        if not self.coeffs:
            return "0"
        bits = []
        for ex, c in self.coeffs:
            mono = "*".join(f"zeta{k+1}^{e}" if e > 1 else f"zeta{k+1}"
                            for k, e in enumerate(ex) if e)
            bits.append(f"{c!r}" + (f"*{mono}" if mono else ""))
        return " + ".join(bits)


@dataclass(frozen=True)
class DiffOp:
    """Constant-coefficient operator P(d/dx); the same sparse data read in
    the partial-derivative alphabet D1..Dn."""

    poly: MultiPoly

    @property
    def n(self) -> int:
        return self.poly.n

    @property
    def order(self) -> int:
        return self.poly.degree

    def symbol(self) -> MultiPoly:
        """Full symbol P(zeta) (D_k -> zeta_k; exact for the transform
        identity zeta_k L(u) = L(d_k u))."""
        return self.poly


def parse_diffop(text: str, n: int | None = None) -> DiffOp:
    """Operators from strings like "D1^2 - D2 + 1" (exact rationals)."""
    from .expr import Add, Const, Div, Mul, Neg, Pow, Sub, Var, parse

    ast = parse(text)
    seen = [0]

    def conv(e) -> MultiPoly:
        if isinstance(e, Const):
            return MultiPoly.const(QQi.of(complex(e.value)), nmax)
        if isinstance(e, Var):
            if not (e.name.startswith("D") and e.name[1:].isdigit()):
                raise ValueError(f"operators use variables D1..Dn, got {e.name!r}")
            k = int(e.name[1:])
            seen[0] = max(seen[0], k)
            return MultiPoly.variable(k, nmax)
        if isinstance(e, Add):
            return conv(e.a) + conv(e.b)
        if isinstance(e, Sub):
            return conv(e.a) - conv(e.b)
        if isinstance(e, Mul):
            return conv(e.a) * conv(e.b)
        if isinstance(e, Neg):
            return -conv(e.a)
        if isinstance(e, Pow):
            base = conv(e.base)
            if e.k < 0:
                raise ValueError("operator powers must be nonnegative")
            out = MultiPoly.const(1, nmax)
            for _ in range(e.k):
                out = out * base
            return out
        if isinstance(e, Div):
            den = conv(e.b)
            if den.degree > 0:
                raise ValueError("operators cannot divide by D-terms")
            c = den.as_dict().get((0,) * nmax, QQi(0))
            num = conv(e.a)
            return MultiPoly.of({ex: v / c for ex, v in num.coeffs}, nmax)
        raise ValueError(f"node {type(e).__name__} not allowed in an operator")

    # two passes: first to find the arity, then to build
    import re as _re

    ks = [int(m) for m in _re.findall(r"D(\d+)", text)]
    nmax = n if n is not None else max(ks, default=1)
    poly = conv(ast)
    return DiffOp(poly)


def principal_symbol(P: DiffOp) -> MultiPoly:
    """Top-degree homogeneous part of the symbol."""
    if P.poly.is_zero():
        raise ZeroOperator("the zero operator has no principal symbol")
    return P.poly.homogeneous_part(P.order)


# ---------------------------------------------------------------------------
# characteristic directions and solvability
# ---------------------------------------------------------------------------


def _sphere_grid(n: int, mesh: float):
    """Directions covering S^{2n-1} with chordal step <= mesh; yields
    (zeta rows, weights irrelevant).  n = 1: the unit circle; n = 2: the
    torus parametrization (rho, phi1, phi2)."""
    if n == 1:
        m = max(8, int(math.ceil(2 * math.pi / mesh)))
        th = np.linspace(0.0, 2 * math.pi, m, endpoint=False)
        return np.exp(1j * th)[:, None]
    m_rho = max(6, int(math.ceil(0.5 * math.pi / mesh)))
    m_phi = max(8, int(math.ceil(2 * math.pi / mesh)))
    rho = np.linspace(0.0, 0.5 * math.pi, m_rho)
    phi = np.linspace(0.0, 2 * math.pi, m_phi, endpoint=False)
    out = []
    for r in rho:
        z1 = math.cos(r) * np.exp(1j * phi)
        z2 = math.sin(r) * np.exp(1j * phi)
        Z1, Z2 = np.meshgrid(z1, z2)
        out.append(np.stack([Z1.ravel(), Z2.ravel()], axis=1))
    return np.concatenate(out, axis=0)


@dataclass
class CharReport:
    mesh: float
    tol: float
    flagged: np.ndarray  # (m, n) complex directions with min|sigma| < tol*scale
    min_value: float
    scales: tuple

    def to_csv_rows(self):
        rows = []
        for z in self.flagged:
            vals = [f"{c.real:.6f}" for c in z] + [f"{c.imag:.6f}" for c in z]
            rows.append(vals)
        return rows


def char_infinity(gens: Sequence[DiffOp], mesh: float = 0.02,
                  tol: float | None = None, chunk: int = 200000) -> CharReport:
    """Grid scan of Char at infinity: directions where every principal
    symbol nearly vanishes.  Thresholds are relative to per-symbol scales,
    so coefficient rescaling cannot move the flagged set; the default
    threshold 3*mesh matches the symbol variation across one grid cell, so
    the flagged set tracks the characteristic set at mesh resolution."""
    if tol is None:
        tol = 3.0 * mesh
    n = gens[0].n
    symbols = [principal_symbol(P) for P in gens]
    grid = _sphere_grid(n, mesh)
    scales = []
    probe = grid[:: max(1, len(grid) // 4096)]
    for s in symbols:
        vals = np.abs(s.eval_grid(*(probe[:, k] for k in range(n))))
        scales.append(float(np.max(vals)) + 1e-300)
    flagged = []
    min_val = math.inf
    for lo in range(0, len(grid), chunk):
        zb = grid[lo: lo + chunk]
        m = None
        # characteristic = every generator's symbol vanishes, so flag where
        # the max of the relative |sigma_i| stays under the threshold
        for s, sc in zip(symbols, scales):
            v = np.abs(s.eval_grid(*(zb[:, k] for k in range(n)))) / sc
            m = v if m is None else np.maximum(m, v)
        min_val = min(min_val, float(np.min(m)))
        flagged.append(zb[m < tol])
    flagged = np.concatenate(flagged, axis=0) if flagged else np.zeros((0, n))
    return CharReport(mesh, tol, flagged, min_val, tuple(scales))


@dataclass
class SolvabilityVerdict:
    solvable: bool
    min_symbol: float
    worst_direction: tuple
    margin: float


def check_solvable(P: DiffOp, K: ClosedConicSet, mesh: float = 0.02,
                   margin: float | None = None) -> SolvabilityVerdict:
    """min over HPC{K}-grid directions of |sigma(P)|, relative to scale;
    the verdict is an epsilon-margin statement, never set-emptiness.

    The default margin 5*mesh covers the symbol variation across a grid
    cell: a true zero inside HPC cannot hide between grid points.
    """
    if margin is None:
        margin = 5.0 * mesh
    n = P.n
    sym = principal_symbol(P)
    grid = _sphere_grid(n, mesh)
    keep = np.array([in_hpc(K, Direction.of(z, space="complexified")) for z in grid])
    if not np.any(keep):
        raise EmptyHPC("no grid direction lies in HPC{K}")
    zb = grid[keep]
    vals = np.abs(sym.eval_grid(*(zb[:, k] for k in range(n))))
    scale = float(np.max(np.abs(sym.eval_grid(*(grid[:, k] for k in range(n)))))) + 1e-300
    rel = vals / scale
    i = int(np.argmin(rel))
    return SolvabilityVerdict(bool(rel[i] > margin), float(rel[i]),
                              tuple(zb[i].tolist()), margin)


# ---------------------------------------------------------------------------
# Koszul complex
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KoszulElement:
    """Cochain sum of f_I (x) e_I over strictly increasing tuples I."""

    degree: int
    parts: tuple  # of (index tuple, MultiPoly)
    ell: int
    n: int

    @staticmethod
    def of(parts: dict, ell: int, n: int, degree: int | None = None) -> "KoszulElement":
        clean = []
        deg = degree
        for idx, p in sorted(parts.items()):
            idx = tuple(idx)
            if list(idx) != sorted(set(idx)):
                raise ValueError("indices must be strictly increasing")
            if any(not (1 <= i <= ell) for i in idx):
                raise ValueError("index out of range")
            if deg is None:
                deg = len(idx)
            if len(idx) != deg:
                raise ValueError("mixed degrees in one element")
            if not p.is_zero():
                clean.append((idx, p))
        if deg is None:
            deg = 0
        return KoszulElement(deg, tuple(clean), ell, n)

    def as_dict(self) -> dict:
        return dict(self.parts)

    def is_zero(self) -> bool:
        return not self.parts

    def __add__(self, o: "KoszulElement") -> "KoszulElement":
        d = self.as_dict()
        for idx, p in o.parts:
            d[idx] = d.get(idx, MultiPoly.zero(self.n)) + p
        return KoszulElement.of(d, self.ell, self.n, self.degree)

    def __sub__(self, o: "KoszulElement") -> "KoszulElement":
        return self + o.scale(QQi(-1))

    def scale(self, c) -> "KoszulElement":
        return KoszulElement.of(
            {idx: MultiPoly.const(c, self.n) * p for idx, p in self.parts},
            self.ell, self.n, self.degree)

    def mul_poly(self, q: MultiPoly) -> "KoszulElement":
        return KoszulElement.of({idx: q * p for idx, p in self.parts},
                                self.ell, self.n, self.degree)


def _sort_sign(idx: tuple) -> tuple:
    """(sorted tuple, permutation sign) or (None, 0) on a repeat."""
    idx = list(idx)
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
            elif idx[j] == idx[j + 1]:
                return None, 0
    return tuple(idx), sign


def koszul_d(e: KoszulElement, polys: Sequence[MultiPoly]) -> KoszulElement:
    """d(f (x) e_I) = sum_j P_j f (x) e_j ^ e_I."""
    ell = e.ell
    if e.degree >= ell:
        raise DegreeOverflow(f"degree {e.degree} element in a rank-{ell} complex")
    if e.is_zero():
        return KoszulElement.of({}, ell, e.n, e.degree + 1)
    out: dict = {}
    for idx, p in e.parts:
        for j, Pj in enumerate(polys, start=1):
            s_idx, sign = _sort_sign((j,) + idx)
            if sign == 0:
                continue
            add = Pj * p
            if sign < 0:
                add = -add
            out[s_idx] = out.get(s_idx, MultiPoly.zero(e.n)) + add
    return KoszulElement.of(out, ell, e.n, e.degree + 1)


def koszul_s(e: KoszulElement, coeffs: Sequence[MultiPoly]) -> KoszulElement:
    """Contraction s(sum f_alpha e_alpha) = sum_beta sum_j a_j f_{j beta} e_beta,
    with f on arbitrary sequences read through the alternating extension."""
    if e.degree == 0:
        return KoszulElement.of({}, e.ell, e.n, 0)
    table = e.as_dict()
    out: dict = {}
    for beta in itertools.combinations(range(1, e.ell + 1), e.degree - 1):
        acc = MultiPoly.zero(e.n)
        for j, aj in enumerate(coeffs, start=1):
            s_idx, sign = _sort_sign((j,) + beta)
            if sign == 0:
                continue
            f = table.get(s_idx)
            if f is None:
                continue
            add = aj * f
            if sign < 0:
                add = -add
            acc = acc + add
        if not acc.is_zero():
            out[beta] = acc
    return KoszulElement.of(out, e.ell, e.n, e.degree - 1)


def koszul_homotopy_check(polys: Sequence[MultiPoly],
                          coeffs: Sequence[MultiPoly],
                          h: MultiPoly,
                          elements: Sequence[KoszulElement]) -> dict:
    """Verify h = sum a_j P_j and then the Cartan identity

        (s o d + d o s)(e) = h e     exactly, per test element.

    (With d prepending e_j and s contracting the first index through the
    alternating extension, the graded commutator of the odd operators s, d
    is their anticommutator; that is the identity that holds on the nose.)
    """
    acc = MultiPoly.zero(h.n)
    for a, P in zip(coeffs, polys):
        acc = acc + a * P
    if not (acc - h).is_zero():
        raise CoefficientMismatch("h != sum_j a_j P_j")
    rows = []
    ok = True
    for e in elements:
        lhs = KoszulElement.of({}, e.ell, e.n, e.degree)
        if e.degree < len(polys):
            lhs = lhs + koszul_s(koszul_d(e, polys), coeffs)
        if e.degree > 0:
            lhs = lhs + koszul_d(koszul_s(e, coeffs), polys)
        rhs = e.mul_poly(h)
        resid = lhs - rhs
        good = resid.is_zero()
        ok = ok and good
        rows.append((e, good))
    return {"ok": ok, "rows": rows}


# ---------------------------------------------------------------------------
# bounded-degree regular-sequence consistency
# ---------------------------------------------------------------------------


def _monomials(n: int, max_deg: int):
    out = []
    for deg in range(max_deg + 1):
        for ex in itertools.combinations_with_replacement(range(n), deg):
            mono = [0] * n
            for k in ex:
                mono[k] += 1
            out.append(tuple(mono))
    return out


def _solve_exact(A: list, b: list) -> bool:
    """Consistency of A x = b over QQi by Gaussian elimination (A: rows)."""
    rows = [row[:] + [bv] for row, bv in zip(A, b)]
    m = len(rows)
    ncols = len(rows[0]) - 1 if rows else 0
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, m) if not rows[i][c].is_zero()), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c]
        rows[r] = [v / inv for v in rows[r]]
        for i in range(m):
            if i != r and not rows[i][c].is_zero():
                f = rows[i][c]
                rows[i] = [vi - f * vr for vi, vr in zip(rows[i], rows[r])]
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if not rows[i][-1].is_zero():
            return False
    return True


@dataclass
class RegSeqVerdict:
    consistent: bool
    degree_cap: int
    first_failure_degree: int | None


def regular_sequence_check_bounded(polys: Sequence[MultiPoly],
                                   D: int) -> RegSeqVerdict:
    """Koszul cohomology at position ell-1 vanishes in coefficient degrees
    <= D: every cocycle there is a coboundary, checked by exact linear
    algebra.  A "consistent up to degree D" statement, never a proof."""
    ell = len(polys)
    n = polys[0].n
    if D < sum(max(p.degree, 0) for p in polys):
        raise CapTooSmall("degree cap below the sum of generator degrees")
    if any(p.is_zero() for p in polys):
        return RegSeqVerdict(False, D, 0)
    if ell == 1:
        return RegSeqVerdict(True, D, None)  # multiplication by P != 0 is injective
    if ell != 2:
        raise NotImplementedError("bounded check implemented for ell <= 2 (n <= 2)")
    P1, P2 = polys
    maxd = max(P1.degree, P2.degree)
    monos_f = _monomials(n, D)
    idx_f = {m: i for i, m in enumerate(monos_f)}
    monos_g = _monomials(n, D + maxd)
    idx_g = {m: i for i, m in enumerate(monos_g)}

    def mult_matrix(P: MultiPoly, src, dst_idx):
        A = [[QQi(0)] * len(src) for _ in range(len(dst_idx))]
        for j, mono in enumerate(src):
            for ex, c in P.coeffs:
                tgt = tuple(a + b for a, b in zip(mono, ex))
                if tgt in dst_idx:
                    A[dst_idx[tgt]][j] = A[dst_idx[tgt]][j] + c
        return A

    # cocycles at position 1: (f, g) with P1 g - P2 f = 0; check each basis
    # nullvector is P1*h, P2*h for some h of degree <= D
    M1 = mult_matrix(P1, monos_f, idx_g)
    M2 = mult_matrix(P2, monos_f, idx_g)
    # kernel of [ -P2 | P1 ] acting on (f, g)
    rows = len(monos_g)
    cols = 2 * len(monos_f)
    A = [[QQi(0)] * cols for _ in range(rows)]
    for i in range(rows):
        for j in range(len(monos_f)):
            A[i][j] = -M2[i][j]
            A[i][j + len(monos_f)] = M1[i][j]
    null = _nullspace(A)
    for vec in null:
        f = vec[: len(monos_f)]
        g = vec[len(monos_f):]
        # solve P1 h = f and P2 h = g simultaneously
        H1 = mult_matrix(P1, monos_f, idx_f)
        H2 = mult_matrix(P2, monos_f, idx_f)
        big = [row[:] for row in H1] + [row[:] for row in H2]
        rhs = list(f) + list(g)
        if not _solve_exact(big, rhs):
            deg = max((sum(monos_f[j]) for j, v in enumerate(f) if not v.is_zero()),
                      default=0)
            degg = max((sum(monos_f[j]) for j, v in enumerate(g) if not v.is_zero()),
                       default=0)
            return RegSeqVerdict(False, D, max(deg, degg))
    return RegSeqVerdict(True, D, None)


def _nullspace(A: list) -> list:
    """Basis of ker(A) over QQi (A: list of rows)."""
    m = len(A)
    ncols = len(A[0]) if m else 0
    rows = [row[:] for row in A]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, m) if not rows[i][c].is_zero()), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c]
        rows[r] = [v / inv for v in rows[r]]
        for i in range(m):
            if i != r and not rows[i][c].is_zero():
                f = rows[i][c]
                rows[i] = [vi - f * vr for vi, vr in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [QQi(0)] * ncols
        vec[fc] = QQi(1)
        for pr, pc in enumerate(pivots):
            vec[pc] = -rows[pr][fc]
        basis.append(vec)
    return basis


# ---------------------------------------------------------------------------
# solve: u = IL( L(f) / P )
# ---------------------------------------------------------------------------


def symbol_roots_1d(P: DiffOp) -> np.ndarray:
    """Finite zeros of the 1D symbol via the companion matrix."""
    deg = P.order
    c = np.zeros(deg + 1, dtype=complex)
    for ex, q in P.poly.coeffs:
        c[deg - ex[0]] = q.to_complex()
    return np.roots(c) if deg > 0 else np.array([])


def apply_diffop(P: DiffOp, u):
    """P(d/dx) u term by term (exact on both expression- and
    quadrature-backed terms)."""
    from .hyperfun import Hyperfunction, derivative, zero_hyperfunction

    out = None
    for ex, c in P.poly.coeffs:
        v = u
        for k, e in enumerate(ex, start=1):
            for _ in range(e):
                v = derivative(v, k)
        v = c.to_complex() * v
        out = v if out is None else out + v
    return out if out is not None else zero_hyperfunction(u.n)


def solve(P: DiffOp, f, K: ClosedConicSet | None = None,
          margin: float = 0.35, tol: float = 1e-9,
          chain=None):
    """Operational-calculus solution u = IL( L(f) / P(zeta) ) of P u = f.

    1D: the symbol's finite roots are located and the inverse chain's base
    is raised above them with the requested margin; SolvabilityFail when
    the symbol vanishes in HPC{K}, PoleOnChain when no admissible chain
    clears the roots.
    """
    from .analytic import AnalyticFunction, GrowthCertificate, WedgeDescriptor
    from .chains import make_inverse_chain
    from .laplace import CachedDualEvaluator, inverse

    if K is None:
        K = f.support_hint
    if P.n != 1 or f.n != 1:
        raise NotImplementedError("the solver drives the 1D transform pair")
    if P.order == 0:
        c = P.poly.as_dict().get((0,), QQi(0))
        if c.is_zero():
            raise SolvabilityFail("the zero operator is not solvable")
        return (1.0 / c.to_complex()) * f
    verdict = check_solvable(P, K, mesh=0.05)
    if not verdict.solvable:
        raise SolvabilityFail(
            f"principal symbol dips to {verdict.min_symbol:.2e} of scale at "
            f"direction {verdict.worst_direction}")
    roots = symbol_roots_1d(P)
    if chain is None:
        base = 1.0
        if len(roots):
            need = float(np.max(roots.real)) + margin
            base = max(base, need + 0.2)
        chain = make_inverse_chain([1.0], c0=base, c1=0.5, p=0.5,
                                   zeros=tuple(roots.tolist()), margin=margin)
    else:
        chain.check_margin(zeros=tuple(roots.tolist()), margin=margin)
    T = CachedDualEvaluator(f, tol=tol * 1e-1)
    sym = P.symbol()

    def g(zeta):
        zeta = np.asarray(zeta, dtype=complex)
        den = sym.eval_grid(zeta)
        if np.any(np.abs(den) < 1e-13):
            raise PoleOnChain("symbol zero met on the evaluation set")
        return T(zeta) / den

    dual = WedgeDescriptor.of(".", base="re+")
    gfun = AnalyticFunction(g, dual, GrowthCertificate(0.0, 10.0),
                            varnames=("zeta1",))
    return inverse(gfun, K, chain=chain, tol=tol)
