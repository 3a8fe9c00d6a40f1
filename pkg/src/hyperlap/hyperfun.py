"""Hyperfunction representations and the duality probes used to test them.

A hyperfunction is a finite sum of boundary values of exponential-type
holomorphic functions on orthant wedges (the intuitive representation).
Cohomology classes cannot be compared bit-wise, so equality at desk scale
means: pairings against a fixed battery of polynomial-Gaussian test
densities agree.  The single global sign convention is anchored by
``pairing(delta(0), phi) == phi(0)``; every other sign in the package is
derived from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .analytic import AnalyticFunction, GrowthCertificate, WedgeDescriptor
from .chains import Path1D, QuadratureResult, integrate_path, integrate_product, line_segment
from .errors import DomainMismatch, GrowthMismatch, SupportLeak
from .expr import (
    Const, Div, Expr, ExpF, LogF, Mul, Neg, Pow, Sub, Var,
    diff, evaluate, parse, to_string, variables,
)
from .geometry import ClosedConicSet

TWO_PI_I = 2j * math.pi


# ---------------------------------------------------------------------------
# terms and hyperfunctions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WedgeBV:
    """One boundary-value summand coeff * b_wedge(F)."""

    wedge: WedgeDescriptor
    F: AnalyticFunction
    coeff: complex = 1.0

    def __post_init__(self):
        if self.F.domain.signs != self.wedge.signs:
            raise DomainMismatch(
                f"term wedge {self.wedge.signs} != function domain {self.F.domain.signs}"
            )


@dataclass(frozen=True)
class Hyperfunction:
    terms: tuple
    support_hint: ClosedConicSet
    n: int = 1

    def __post_init__(self):
        for t in self.terms:
            if t.wedge.n != self.n:
                raise ValueError("mixed dimensions in one hyperfunction")

    def __add__(self, other: "Hyperfunction") -> "Hyperfunction":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        return Hyperfunction(self.terms + other.terms,
                             _support_union(self.support_hint, other.support_hint), self.n)

    def __rmul__(self, c: complex) -> "Hyperfunction":
        return Hyperfunction(
            tuple(replace(t, coeff=t.coeff * c) for t in self.terms),
            self.support_hint, self.n)

    def is_zero(self) -> bool:
        return not self.terms


def zero_hyperfunction(n: int = 1) -> Hyperfunction:
    origin = [0.0] * n
    return Hyperfunction((), ClosedConicSet.of(origin, []), n)


def _support_union(a: ClosedConicSet, b: ClosedConicSet) -> ClosedConicSet:
    v = np.minimum(a.a, b.a)
    gens = list(a.cone.generators) + list(b.cone.generators)
    return ClosedConicSet.of(v.tolist(), gens)


def _upper(n=1):
    return WedgeDescriptor.of("+" * n)


def _lower(n=1):
    return WedgeDescriptor.of("-" * n)


def delta(a) -> Hyperfunction:
    """Dirac delta at a; 1D directly, 2D as the tensor product of 1D deltas.

    Defining function -1/(2 pi i (z - a)) on the upper wedge and its negative
    below; the coefficients are the global sign anchor.
    """
    if np.ndim(a) == 0:
        a = complex(a).real
        F = Div(Const(1), Sub(Var("z1"), Const(a)))
        cert = GrowthCertificate(H=0.0, C=25.0)
        up = WedgeBV(_upper(), AnalyticFunction(F, _upper(), cert), -1.0 / TWO_PI_I)
        dn = WedgeBV(_lower(), AnalyticFunction(F, _lower(), cert), +1.0 / TWO_PI_I)
        return Hyperfunction((up, dn), ClosedConicSet.of([a], []), 1)
    a = np.asarray(a, dtype=float)
    if a.size != 2:
        raise ValueError("delta implemented for n in {1, 2}")
    return tensor_product(delta(a[0]), delta(a[1]))


def heaviside_exp(c: complex = 0.0, a: float = 0.0) -> Hyperfunction:
    """Y(x - a) e^{c (x - a)}: the exponential-type generator on [a, oo].

    Defining function -(1/2 pi i) e^{c(z-a)} log(-(z-a)) with the principal
    log, which places the branch cut exactly on the support ray [a, oo).
    """
    c = complex(c)
    a = float(a)
    za = Sub(Var("z1"), Const(a))
    F = Mul(Const(-1.0 / TWO_PI_I),
            Mul(ExpF(Mul(Const(c), za)), LogF(Neg(za), math.pi)))
    cert = GrowthCertificate(H=abs(c) + 0.1, C=10.0)
    up = WedgeBV(_upper(), AnalyticFunction(F, _upper(), cert), 1.0)
    dn = WedgeBV(_lower(), AnalyticFunction(F, _lower(), cert), -1.0)
    return Hyperfunction((up, dn), ClosedConicSet.of([a], [[1.0]]), 1)


def boundary_value(F: AnalyticFunction, alpha: str | Sequence[str],
                   support: ClosedConicSet | None = None) -> Hyperfunction:
    """Single-term hyperfunction b_alpha(F)."""
    sg = tuple(alpha)
    if F.domain.signs != sg:
        raise DomainMismatch(f"F lives on {F.domain.signs}, requested wedge {sg}")
    n = len(sg)
    if support is None:
        support = ClosedConicSet.of([0.0] * n, [g for g in np.eye(n).tolist()])
    return Hyperfunction((WedgeBV(WedgeDescriptor.of(sg), F, 1.0),), support, n)


def _rename_expr(e: Expr, mapping: dict) -> Expr:
    if isinstance(e, Var):
        return Var(mapping.get(e.name, e.name))
    if isinstance(e, Const):
        return e
    kids = {
        "Add": ("a", "b"), "Sub": ("a", "b"), "Mul": ("a", "b"), "Div": ("a", "b"),
    }
    name = type(e).__name__
    if name in kids:
        cls = type(e)
        return cls(_rename_expr(e.a, mapping), _rename_expr(e.b, mapping))
    if isinstance(e, Pow):
        return Pow(_rename_expr(e.base, mapping), e.k)
    if isinstance(e, Neg):
        return Neg(_rename_expr(e.a, mapping))
    if isinstance(e, ExpF):
        return ExpF(_rename_expr(e.a, mapping))
    if isinstance(e, LogF):
        return LogF(_rename_expr(e.a, mapping), e.cut)
    raise TypeError(name)


def tensor_product(u1: Hyperfunction, u2: Hyperfunction) -> Hyperfunction:
    """u1(x1) (x) u2(x2): four orthant terms from two 1D representations."""
    if u1.n != 1 or u2.n != 1:
        raise ValueError("tensor_product combines two 1D hyperfunctions")
    terms = []
    for t1 in u1.terms:
        for t2 in u2.terms:
            sg = (t1.wedge.signs[0], t2.wedge.signs[0])
            wd = WedgeDescriptor.of(sg)
            e1 = t1.F.fn
            e2 = t2.F.fn
            if not isinstance(e1, Expr) or not isinstance(e2, Expr):
                raise ValueError("tensor_product needs expression-backed terms")
            expr = Mul(e1, _rename_expr(e2, {"z1": "z2"}))
            cert = GrowthCertificate(
                H=t1.F.growth.H + t2.F.growth.H + 0.05,
                C=t1.F.growth.C * t2.F.growth.C,
                H_axes=(t1.F.growth.H, t2.F.growth.H))
            terms.append(WedgeBV(wd, AnalyticFunction(expr, wd, cert),
                                 t1.coeff * t2.coeff))
    v1, v2 = u1.support_hint, u2.support_hint
    vertex = [float(v1.a[0]), float(v2.a[0])]
    gens = []
    for g in v1.cone.generators:
        gens.append([float(g[0]), 0.0])
    for g in v2.cone.generators:
        gens.append([0.0, float(g[0])])
    return Hyperfunction(tuple(terms), ClosedConicSet.of(vertex, gens), 2)


def multiply_expr(u: Hyperfunction, e: Expr) -> Hyperfunction:
    """Multiply by an entire expression in z1..zn (e.g. -x_k for the
    derivative rules); growth certificates keep H and inflate C."""
    terms = []
    for t in u.terms:
        if isinstance(t.F.fn, Expr):
            fn = Mul(e, t.F.fn)
            F = AnalyticFunction(fn, t.F.domain,
                                 GrowthCertificate(t.F.growth.H + 0.1, t.F.growth.C * 10))
        else:
            base = t.F

            def fn(*zs, _b=base, _e=e):
                names = _b.names()
                return evaluate(_e, dict(zip(names, zs))) * _b(*zs)

            F = AnalyticFunction(fn, t.F.domain,
                                 GrowthCertificate(t.F.growth.H + 0.1, t.F.growth.C * 10))
        terms.append(WedgeBV(t.wedge, F, t.coeff))
    return Hyperfunction(tuple(terms), u.support_hint, u.n)


def derivative(u: Hyperfunction, k: int = 1) -> Hyperfunction:
    """d/dx_k term by term: expressions differentiate symbolically,
    quadrature-backed wedge functions via their own differentiate()."""
    terms = []
    var = f"z{k}"
    for t in u.terms:
        if isinstance(t.F.fn, Expr):
            fn = diff(t.F.fn, var)
            F = AnalyticFunction(fn, t.F.domain,
                                 GrowthCertificate(t.F.growth.H, t.F.growth.C * 40))
        elif hasattr(t.F.fn, "differentiate"):
            F = AnalyticFunction(t.F.fn.differentiate(k), t.F.domain, t.F.growth)
        else:
            raise TypeError("term carries no differentiable representation")
        terms.append(WedgeBV(t.wedge, F, t.coeff))
    return Hyperfunction(tuple(terms), u.support_hint, u.n)


# ---------------------------------------------------------------------------
# test densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestDensity:
    """Entire density p(x) exp(-sum a_k (x_k - c_k)^2) with decay data.

    The pairing needs |phi(x + iy)| <= C exp(-a|x-c|^2 + b|y|^2) on a strip;
    the polynomial-Gaussian class satisfies it by inspection, and the decay
    data is what the growth checks consume.  2D densities built as products
    keep their 1D ``factors`` so transform pairings can factorize.
    """

    expr: Expr
    n: int = 1
    a: tuple = (1.0,)
    centers: tuple = (0.0,)
    b: float | None = None
    C: float = 1.0
    factors: tuple | None = None

    def __post_init__(self):
        if self.b is None:
            object.__setattr__(self, "b", max(self.a) * 1.5)

    def names(self):
        return tuple(f"z{k+1}" for k in range(self.n))

    def __call__(self, *zs):
        return evaluate(self.expr, dict(zip(self.names(), zs)))

    def on_reals(self, *xs):
        return self(*(np.asarray(x, dtype=complex) for x in xs))


def gaussian_density(center: float = 0.0, scale: float = 1.0, power: int = 0,
                     coeff: float = 1.0) -> TestDensity:
    """coeff * (x - center)^power * exp(-scale (x - center)^2)."""
    x = Sub(Var("z1"), Const(center))
    g = ExpF(Neg(Mul(Const(scale), Pow(x, 2))))
    e = g if power == 0 else Mul(Pow(x, power), g)
    if coeff != 1.0:
        e = Mul(Const(coeff), e)
    peak = max(1.0, (power / (2 * math.e * scale)) ** (power / 2)) if power else 1.0
    return TestDensity(e, 1, (scale,), (center,), C=abs(coeff) * peak * 4)


def density_battery(n: int = 1, count: int = 20) -> list[TestDensity]:
    """The fixed 20-density battery used as the equality oracle."""
    cat: list[TestDensity] = []
    specs = [
        (0.0, 1.0, 0), (0.0, 1.0, 1), (0.0, 1.0, 2), (0.0, 2.5, 0),
        (0.7, 1.0, 0), (0.7, 1.8, 1), (-0.8, 1.0, 0), (-0.8, 1.3, 2),
        (1.3, 1.0, 0), (1.3, 2.0, 1), (2.1, 1.2, 0), (2.1, 1.0, 2),
        (-1.6, 1.5, 1), (0.3, 3.0, 0), (-0.4, 2.2, 3), (1.8, 1.6, 0),
        (0.9, 1.1, 3), (-2.3, 1.4, 0), (2.8, 1.9, 1), (0.0, 0.7, 0),
    ]
    for c, s, p in specs[:count]:
        cat.append(gaussian_density(c, s, p))
    if n == 1:
        return cat
    if n == 2:
        out = []
        for k in range(count):
            d1 = cat[k % len(cat)]
            d2 = cat[(3 * k + 7) % len(cat)]
            e = Mul(d1.expr, _rename_expr(d2.expr, {"z1": "z2"}))
            out.append(TestDensity(e, 2, (d1.a[0], d2.a[0]),
                                   (d1.centers[0], d2.centers[0]),
                                   b=max(d1.b, d2.b), C=d1.C * d2.C,
                                   factors=(d1, d2)))
        return out
    raise ValueError("battery implemented for n in {1, 2}")


# ---------------------------------------------------------------------------
# pairing
# ---------------------------------------------------------------------------


def _pairing_halfwidth(term: WedgeBV, phi: TestDensity, delta_y: float,
                       axis: int, tol_tail: float) -> float:
    """Sampled truncation: extend T until the integrand tail is negligible.

    This is also the growth-domination certificate: if the product still
    fails to decay at the cap the density does not dominate the term.
    """
    a = phi.a[axis]
    c = phi.centers[axis]
    H = term.F.growth.H
    T = max(5.0, abs(c) + math.sqrt((math.log(max(term.F.growth.C * phi.C, 2.0) / tol_tail)
                                     + H * 10 + phi.b * delta_y ** 2) / a))
    return min(T, 60.0)


def _term_line(term_axis_sign: str, delta_y: float, T: float) -> Path1D:
    s = +1.0 if term_axis_sign == "+" else -1.0
    y = 1j * s * delta_y
    return Path1D((line_segment(-T + y, T + y),))


def pairing(u: Hyperfunction, phi: TestDensity, push_in: float = 0.5,
            tol: float = 1e-10, tol_tail: float = 1e-16,
            direct: bool = False) -> complex:
    """<u, phi> = sum over terms of coeff * int_{gamma_alpha} F phi dz.

    gamma_alpha is the real axis pushed into the term's wedge by ``push_in``
    and oriented like M; the result is independent of the push-in distance
    (tested).  GrowthMismatch when the sampled decay certificate fails.

    Quadrature-backed terms expose a Fubini-swapped fast path (the same
    double integral with the zeta-chain outermost); ``direct=True`` forces
    the contour route for cross-checks.
    """
    if u.n != phi.n:
        raise ValueError("dimension mismatch between hyperfunction and density")
    total = 0.0 + 0.0j
    for term in u.terms:
        if not direct and hasattr(term.F.fn, "pair_against"):
            total += term.coeff * term.F.fn.pair_against(phi, push_in, tol)
        elif u.n == 1:
            total += term.coeff * _pair_term_1d(term, phi, push_in, tol, tol_tail)
        else:
            total += term.coeff * _pair_term_2d(term, phi, push_in, tol, tol_tail)
    return complex(total)


def _decay_guard(fvals: np.ndarray, where: str):
    head = np.max(np.abs(fvals[: len(fvals) // 3])) if len(fvals) else 0.0
    tail = np.max(np.abs(fvals[-max(1, len(fvals) // 6):]))
    if tail > max(head, 1e-300) * 1e-3 and tail > 1e-12:
        raise GrowthMismatch(
            f"integrand fails to decay on the {where} contour (tail {tail:.2e})")


def _pair_term_1d(term: WedgeBV, phi: TestDensity, push_in, tol, tol_tail) -> complex:
    T = _pairing_halfwidth(term, phi, push_in, 0, tol_tail)
    path = _term_line(term.wedge.signs[0], push_in, T)

    def f(z):
        return term.F(z) * phi(z)

    # sampled decay certificate along the right tail
    s = +1.0 if term.wedge.signs[0] == "+" else -1.0
    probe = np.linspace(0.3 * T, T, 24) + 1j * s * push_in
    _decay_guard(f(probe), "pairing")
    return integrate_path(f, path, tol).value


def _pair_term_2d(term: WedgeBV, phi: TestDensity, push_in, tol, tol_tail) -> complex:
    T1 = _pairing_halfwidth(term, phi, push_in, 0, tol_tail)
    T2 = _pairing_halfwidth(term, phi, push_in, 1, tol_tail)
    p1 = _term_line(term.wedge.signs[0], push_in, T1)
    p2 = _term_line(term.wedge.signs[1], push_in, T2)

    def f2(z1, z2):
        return term.F(z1, z2) * phi(z1, z2)

    return integrate_product(f2, p1, p2, tol).value


def _probe_scale(width: float, sharpness: float = 150.0) -> float:
    """Sharpness leaving negligible Gaussian mass outside a width-sized box."""
    return max(24.0, sharpness / width ** 2)


def support_test(u: Hyperfunction, box, tol: float = 1e-7,
                 densities_per_box: int = 3) -> bool:
    """True iff a battery of Gaussians localized in the probe box all pair
    below tol.  The box must sit at positive distance from the support."""
    quad_tol = max(tol * 1e-2, 1e-9)
    if u.n == 1:
        lo, hi = float(box[0]), float(box[1])
        width = hi - lo
        scale = _probe_scale(width)
        push = min(0.4, 0.8 / math.sqrt(scale))
        centers = np.linspace(lo + 0.25 * width, hi - 0.25 * width, densities_per_box)
        for c in centers:
            val = pairing(u, gaussian_density(c, scale), push_in=push, tol=quad_tol)
            if abs(val) >= tol:
                return False
        return True
    (l1, h1), (l2, h2) = box
    s1 = _probe_scale(h1 - l1, 60.0)
    s2 = _probe_scale(h2 - l2, 60.0)
    push = min(0.4, 0.8 / math.sqrt(max(s1, s2)))
    for c1, c2 in ((l1 + 0.3 * (h1 - l1), l2 + 0.3 * (h2 - l2)),
                   (l1 + 0.7 * (h1 - l1), l2 + 0.7 * (h2 - l2))):
        d1, d2 = gaussian_density(c1, s1), gaussian_density(c2, s2)
        e = Mul(d1.expr, _rename_expr(d2.expr, {"z1": "z2"}))
        phi = TestDensity(e, 2, (s1, s2), (c1, c2), C=d1.C * d2.C,
                          factors=(d1, d2))
        if abs(pairing(u, phi, push_in=push, tol=quad_tol)) >= tol:
            return False
    return True


# ---------------------------------------------------------------------------
# cutoff pairs
# ---------------------------------------------------------------------------


def _mollifier(t):
    """exp(-1/t) for t > 0, 0 otherwise (vectorized)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smoothstep(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    m1 = _mollifier(s)
    m2 = _mollifier(1.0 - np.asarray(s, dtype=float))
    return m1 / (m1 + m2 + 1e-300)


def smoothstep_deriv(s):
    """Exact derivative of smoothstep: a b (t^-2 + (1-t)^-2) / (a+b)^2."""
    t = np.asarray(s, dtype=float)
    a = _mollifier(t)
    b = _mollifier(1.0 - t)
    out = np.zeros_like(t)
    inside = (t > 0) & (t < 1)
    ti, ai, bi = t[inside], a[inside], b[inside]
    out[inside] = ai * bi * (ti ** -2 + (1 - ti) ** -2) / (ai + bi) ** 2
    return out


@dataclass(frozen=True)
class Cutoff:
    """Radial C-infinity bump around the tube of a 1D support set.

    chi = 1 where dist(z, K) <= r0, chi = 0 where dist >= r1; built from the
    e^{-1/t} mollifier.
    """

    r0: float = 0.5
    r1: float = 1.0
    K: ClosedConicSet | None = None

    def __post_init__(self):
        if not (0 < self.r0 < self.r1):
            raise ValueError("need 0 < r0 < r1")

    def _dist_parts(self, z):
        """(distance, d dist/d zbar) for the 1D tube around K."""
        z = np.asarray(z, dtype=complex)
        a = float(self.K.a[0])
        gens = self.K.cone.generators
        if not gens:  # point support
            w = z - a
            d = np.abs(w)
            dd = np.where(d > 0, w / np.maximum(2 * d, 1e-300), 0.0)
            return d, dd
        s = float(np.sign(gens[0][0]))  # ray direction
        w = (z - a) * s  # reduce to the right-pointing ray
        on_ray = w.real >= 0
        d_ray = np.abs(w.imag)
        dd_ray = np.sign(w.imag) * (0.5j) * s  # d|y|/dzbar, chain rule for s
        d_pt = np.abs(w)
        dd_pt = (z - a) / np.maximum(2 * d_pt, 1e-300)
        d = np.where(on_ray, d_ray, d_pt)
        dd = np.where(on_ray, dd_ray, dd_pt)
        return d, dd

    def chi(self, z):
        d, _ = self._dist_parts(z)
        s = (self.r1 - d) / (self.r1 - self.r0)
        return smoothstep(s)

    def dbar_chi(self, z):
        """d chi / d zbar (coefficient of the (0,1)-part)."""
        d, dd = self._dist_parts(z)
        s = (self.r1 - d) / (self.r1 - self.r0)
        return (-smoothstep_deriv(s) / (self.r1 - self.r0)) * dd


def glue_single_F(u: Hyperfunction, probes: np.ndarray | None = None,
                  rtol: float = 1e-8):
    """Cech single-function form: S = sum_+ cF on the upper side and
    S = -sum_- cF below, checked to glue across R left of the support.

    Returns a vectorized callable; DomainMismatch when the two sides fail
    to agree at the probe points (the class has no single-F form then).
    """
    if u.n != 1:
        raise ValueError("single-F gluing is the 1D construction")
    ups = [(t.coeff, t.F) for t in u.terms if t.wedge.signs[0] == "+"]
    dns = [(t.coeff, t.F) for t in u.terms if t.wedge.signs[0] == "-"]

    def s_up(z):
        z = np.asarray(z, dtype=complex)
        return sum((c * F(z) for c, F in ups), np.zeros(z.shape, complex))

    def s_dn(z):
        z = np.asarray(z, dtype=complex)
        return -sum((c * F(z) for c, F in dns), np.zeros(z.shape, complex))

    if probes is None:
        b = float(np.min(u.support_hint.a))
        probes = b - np.linspace(0.4, 2.4, 6)
    probes = np.asarray(probes, dtype=complex)
    vu = s_up(probes + 1e-9j)
    vd = s_dn(probes - 1e-9j)
    scale = np.max(np.abs(vu)) + np.max(np.abs(vd)) + 1e-30
    if np.max(np.abs(vu - vd)) > rtol * scale + 1e-14:
        raise DomainMismatch("terms do not glue to a single defining function")

    def S(z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.zeros(z.shape, dtype=complex)
        up = z.imag >= 0
        if np.any(up):
            out[up] = s_up(z[up])
        if np.any(~up):
            out[~up] = s_dn(z[~up])
        return out

    return S


@dataclass(frozen=True)
class CechDolbeaultPair:
    """Cutoff-realized pair (nu1~, nu01~) ready for the support-bounded
    transform:

        nu01~ = chi * S            (coefficient of dz)
        nu1~  = (dbar chi) * S     (coefficient of dzbar ^ dz)

    For n = 2 the pair is a tensor product of two 1D pairs (separable
    sources only).
    """

    source: Hyperfunction
    cutoff: Cutoff
    S: object  # callable or (callable, callable) for n = 2
    factors: tuple | None = None

    @property
    def n(self) -> int:
        return self.source.n

    def nu01(self, z):
        return self.cutoff.chi(z) * self.S(z)

    def nu1(self, z):
        return self.cutoff.dbar_chi(z) * self.S(z)

    def support_radius(self) -> float:
        return self.cutoff.r1

    def validate(self, rng: np.random.Generator | None = None, tol: float = 5e-5) -> dict:
        """Sampled invariants: samplers vanish outside the tube, and
        dbar nu01~ = nu1~ off K by central finite differences."""
        rng = rng or np.random.default_rng(7)
        a = float(self.cutoff.K.a[0])
        cand = a + rng.uniform(-3, 8, 400) + 1j * rng.uniform(-4, 4, 400)
        d, _ = self.cutoff._dist_parts(cand)
        far = cand[d >= self.cutoff.r1 + 0.3][:40]
        leak = float(np.max(np.abs(self.nu01(far))) + np.max(np.abs(self.nu1(far))))
        cand2 = a + rng.uniform(-2, 8, 800) + 1j * rng.uniform(-2, 2, 800)
        d2, _ = self.cutoff._dist_parts(cand2)
        mid = cand2[(d2 > self.cutoff.r0 + 0.05) & (d2 < self.cutoff.r1 - 0.05)
                    & (np.abs(cand2.imag) > 1e-3)][:40]
        h = 1e-5
        dx = (self.nu01(mid + h) - self.nu01(mid - h)) / (2 * h)
        dy = (self.nu01(mid + 1j * h) - self.nu01(mid - 1j * h)) / (2 * h)
        dbar = 0.5 * (dx + 1j * dy)
        resid = float(np.max(np.abs(dbar - self.nu1(mid)) / (np.abs(self.nu1(mid)) + 1.0)))
        return {"leak": leak, "dbar_residual": resid,
                "ok": leak < 1e-13 and resid < tol}


def to_pair(u: Hyperfunction, cutoff: Cutoff | None = None,
            r0: float = 0.5, r1: float = 1.0) -> CechDolbeaultPair:
    """Cutoff representative of u; SupportLeak when the chi = 1 plateau
    fails to cover the claimed support."""
    if u.is_zero():
        K = u.support_hint
        co = cutoff or Cutoff(r0, r1, K)
        return CechDolbeaultPair(u, co, lambda z: np.zeros(np.shape(z), complex))
    if u.n == 1:
        K = u.support_hint
        co = cutoff or Cutoff(r0, r1, K)
        if co.K is None:
            co = Cutoff(co.r0, co.r1, K)
        # plateau must cover K: the tube is centred on K itself, so only a
        # mismatched explicit cutoff can leak
        if co.K is not None:
            same_vertex = abs(float(co.K.a[0]) - float(K.a[0])) <= co.r0
            gens_ok = set(tuple(g) for g in co.K.cone.generators) >= set(
                tuple(g) for g in K.cone.generators)
            if not (same_vertex and gens_ok):
                raise SupportLeak("cutoff plateau does not cover the support")
        S = glue_single_F(u)
        return CechDolbeaultPair(u, co, S)
    if u.n == 2:
        raise NotImplementedError(
            "2D pairs are built with tensor_pair from two 1D pairs")
    raise ValueError("pairs implemented for n in {1, 2}")


def tensor_pair(p1: CechDolbeaultPair, p2: CechDolbeaultPair,
                source: Hyperfunction) -> CechDolbeaultPair:
    """Separable 2D pair; forward transforms factor across it."""
    return CechDolbeaultPair(source, p1.cutoff, (p1.S, p2.S), factors=(p1, p2))
