"""Integration cycles and the adaptive quadrature engine.

The base rule is Gauss-Kronrod 15(7): the 7-point Gauss value is embedded in
the 15-point Kronrod value and the difference drives recursive bisection
(max depth 40).  Error bookkeeping follows QUADPACK's heuristic

    err = wid * min(1, (200 |K - G| / wid)^{3/2}),   wid = sum |w_i f_i|,

which in practice over-covers the true error by a comfortable factor; the
"error honesty" acceptance criterion pins that down quantitatively.

Integrands are vectorized: a segment hands the integrand a numpy array of
complex points and expects an array back.  An integrand may itself be
array-valued (shape (..., m) per point batch) -- nested transforms exploit
this to batch an inner quadrature over all outer nodes at once.  In that
case the local error is the max over components.

Unbounded (tail) segments must carry a damping certificate sigma > 0 with
|integrand| <= C e^{-sigma t}; the tail is truncated at T with
C e^{-sigma T}/sigma < tol/10 and integrated adaptively on [0, T].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    MarginViolation,
    MissingDampingCertificate,
    NoConvergence,
)

MAX_DEPTH = 40

# QUADPACK dqk15 nodes and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full node/weight vectors on [-1, 1], fixed order left to right;
# indices 1,3,5,7,9,11,13 carry the embedded 7-point Gauss rule
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
_WK = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
_WGAUSS = np.zeros(15)
for _i, _w in zip(range(1, 14, 2), [_WG[0], _WG[1], _WG[2], _WG[3], _WG[2], _WG[1], _WG[0]]):
    _WGAUSS[_i] = _w


@dataclass(frozen=True)
class QuadratureResult:
    value: object  # complex or ndarray
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        if self.error_estimate < 0:
            raise ValueError("error estimate must be nonnegative")


@dataclass(frozen=True)
class Segment:
    """Smooth parametrized piece t in [0,1] -> z(t) with derivative dz/dt.

    ``sigma``/``damp_C`` form the damping certificate of an unbounded piece
    (|integrand(z(t_raw))| <= C e^{-sigma t_raw} on the raw parameter);
    finite segments leave sigma = None.
    """

    zfun: Callable[[np.ndarray], np.ndarray]
    dzfun: Callable[[np.ndarray], np.ndarray]
    unbounded: bool = False
    sigma: float | None = None
    damp_C: float = 1.0

    def endpoints(self) -> tuple[complex, complex]:
        t = np.array([0.0, 1.0])
        z = self.zfun(t)
        return complex(z[0]), complex(z[1])


def line_segment(z0: complex, z1: complex) -> Segment:
    z0, z1 = complex(z0), complex(z1)
    return Segment(lambda t: z0 + (z1 - z0) * t, lambda t: np.full_like(t, z1 - z0, dtype=complex))


def tail_segment(z0: complex, direction: complex, sigma: float, C: float = 1.0) -> Segment:
    """Ray z0 + t*direction, t in [0, oo), damping |f| <= C e^{-sigma t}."""
    if sigma is None or sigma <= 0:
        raise MissingDampingCertificate(
            f"tail needs a positive damping rate, got sigma={sigma}"
        )
    z0, d = complex(z0), complex(direction)
    return Segment(lambda t: z0 + d * t, lambda t: np.full_like(t, d, dtype=complex),
                   unbounded=True, sigma=float(sigma), damp_C=float(C))


def curve_segment(zfun, dzfun, unbounded=False, sigma=None, C=1.0) -> Segment:
    return Segment(zfun, dzfun, unbounded, sigma, C)


@dataclass(frozen=True)
class Path1D:
    """Oriented chain of segments; ``signs`` lets a loop reuse a segment
    with reversed orientation without re-parametrizing it."""

    segments: tuple
    signs: tuple = ()
    orientation: int = 1
    closed: bool = False

    def __post_init__(self):
        if not self.signs:
            object.__setattr__(self, "signs", tuple(1 for _ in self.segments))
        if len(self.signs) != len(self.segments):
            raise ValueError("signs/segments length mismatch")
        if self.closed:
            self._check_closed()

    def _check_closed(self):
        ends = []
        for seg, s in zip(self.segments, self.signs):
            if seg.unbounded:
                return  # closed through infinity; nothing to check
            a, b = seg.endpoints()
            ends.append((a, b) if s > 0 else (b, a))
        for (a0, b0), (a1, b1) in zip(ends, ends[1:] + ends[:1]):
            if abs(b0 - a1) > 1e-12:
                raise ValueError("closed path fails to connect end-to-start")

    def reversed(self) -> "Path1D":
        return Path1D(self.segments, self.signs, -self.orientation, self.closed)


def _truncation(seg: Segment, tol: float) -> float:
    """Tail truncation T with damp_C * e^{-sigma T} / sigma < tol/10."""
    if seg.sigma is None or seg.sigma <= 0:
        raise MissingDampingCertificate("unbounded segment without certificate")
    target = max(tol, 1e-300) / 10.0
    T = math.log(max(10.0 * seg.damp_C / (seg.sigma * target), 10.0)) / seg.sigma
    return max(T, 4.0 / seg.sigma)


def _kronrod_panel(f, zfun, dzfun, a: float, b: float):
    """One GK15 panel on parameter interval [a, b]; returns (K, G, wid).

    Array-valued integrands return shape (15, ...) with the node axis
    first; the velocity broadcasts across the trailing batch axes.
    """
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    t = mid + half * _NODES
    z = zfun(t)
    fv = np.asarray(f(z), dtype=complex)
    dz = np.asarray(dzfun(t), dtype=complex)
    if fv.ndim > 1:
        dz = dz.reshape((len(t),) + (1,) * (fv.ndim - 1))
    w = fv * dz
    if w.ndim == 1:
        K = half * np.dot(_WK, w)
        G = half * np.dot(_WGAUSS, w)
        wid = half * float(np.dot(_WK, np.abs(w)))
    else:
        K = half * np.tensordot(_WK, w, axes=(0, 0))
        G = half * np.tensordot(_WGAUSS, w, axes=(0, 0))
        wid = half * float(np.max(np.tensordot(_WK, np.abs(w), axes=(0, 0))))
    return K, G, wid


def _panel_error(K, G, wid: float) -> float:
    diff = np.max(np.abs(np.asarray(K) - np.asarray(G)))
    if wid <= 0.0:
        return float(diff)
    scaled = 200.0 * diff / wid
    return float(wid * min(1.0, scaled * math.sqrt(scaled)))


_EPS = float(np.finfo(float).eps)
_MAX_PANELS = 4000


def _adaptive(f, zfun, dzfun, a: float, b: float, tol: float):
    """Globally adaptive bisection: always refine the worst panel until the
    summed error estimate meets the budget.

    Panels stop refining at the bisection depth cap or at the roundoff
    floor (the K-G deviation cannot drop below ~eps times the local mass);
    NoConvergence fires only when the budget is genuinely unreachable.
    Accumulation order is fixed (sorted by position) for determinism.
    """
    import heapq

    K, G, wid = _kronrod_panel(f, zfun, dzfun, a, b)
    evals = 15
    err = _panel_error(K, G, wid)
    seq = 0  # heap tiebreak; keeps ndarray payloads out of comparisons
    heap = [(-err, seq, a, b, 0, K, err)]
    done = []
    total_err = err
    while total_err > tol and heap and (len(heap) + len(done)) < _MAX_PANELS:
        neg, _, lo, hi, depth, val, perr = heapq.heappop(heap)
        floor = 50.0 * _EPS * max(abs(np.max(np.abs(np.asarray(val)))), 1e-300)
        if depth >= MAX_DEPTH or perr <= floor:
            done.append((lo, val, perr, depth))
            if not heap:
                break
            continue
        mid = 0.5 * (lo + hi)
        out = []
        for la, lb in ((lo, mid), (mid, hi)):
            Kv, Gv, w = _kronrod_panel(f, zfun, dzfun, la, lb)
            evals += 15
            e = _panel_error(Kv, Gv, w)
            out.append((la, lb, Kv, e))
        total_err += out[0][3] + out[1][3] - perr
        for la, lb, Kv, e in out:
            seq += 1
            heapq.heappush(heap, (-e, seq, la, lb, depth + 1, Kv, e))
    pieces = done + [(lo, val, e, d) for _, _, lo, hi, d, val, e in heap]
    if not pieces:
        pieces = [(a, K, err, 0)]
    total_err = float(sum(p[2] for p in pieces))
    if total_err > 50.0 * max(tol, 1e-14) and any(p[3] >= MAX_DEPTH for p in pieces):
        raise NoConvergence(
            f"max bisection depth {MAX_DEPTH}: error estimate {total_err:.3e} "
            f"never reached tolerance {tol:.1e}")
    if (len(heap) + len(done)) >= _MAX_PANELS and total_err > 50.0 * max(tol, 1e-14):
        raise NoConvergence(
            f"panel budget {_MAX_PANELS} exhausted at error {total_err:.3e}")
    pieces.sort(key=lambda p: p[0])
    total = pieces[0][1]
    for p in pieces[1:]:
        total = total + p[1]
    return total, total_err, evals


def _integrate_segment(f, seg: Segment, tol: float):
    if seg.unbounded:
        T = _truncation(seg, tol)
        return _adaptive(f, lambda t: seg.zfun(t * T), lambda t: seg.dzfun(t * T) * T,
                         0.0, 1.0, tol)
    return _adaptive(f, seg.zfun, seg.dzfun, 0.0, 1.0, tol)


def integrate_path(f, path: Path1D, tol: float = 1e-9) -> QuadratureResult:
    """Adaptive integral of a vectorized integrand along an oriented chain."""
    nseg = len(path.segments)
    total = None
    err = 0.0
    evals = 0
    for seg, s in zip(path.segments, path.signs):
        v, e, n = _integrate_segment(f, seg, tol / max(1, nseg))
        v = v * (s * path.orientation)
        total = v if total is None else total + v
        err += e
        evals += n
    return QuadratureResult(total, err, evals)


def stokes_check(f, gamma1: Path1D, gamma2: Path1D, tol: float = 1e-9) -> float:
    """|int_g1 f - int_g2 f| for homotopic chains; Cauchy's theorem says ~0."""
    r1 = integrate_path(f, gamma1, tol)
    r2 = integrate_path(f, gamma2, tol)
    return float(np.max(np.abs(np.asarray(r1.value) - np.asarray(r2.value))))


def integrate_product(f2, path1: Path1D, path2: Path1D, tol: float = 1e-9) -> QuadratureResult:
    """Iterated integral of f2(z1, z2) (Fubini, outer = factor 1).

    ``f2`` must broadcast: called with z1 of shape (m,1) and z2 of shape (k,).
    """
    inner_err = [0.0]
    inner_evals = [0]

    def outer_integrand(z1):
        z1 = np.asarray(z1, dtype=complex)

        def inner(z2):
            vals = np.asarray(f2(z1[:, None], np.asarray(z2)[None, :]))
            return np.moveaxis(vals, 1, 0)  # inner node axis first

        r = integrate_path(inner, path2, tol)
        inner_err[0] = max(inner_err[0], r.error_estimate)
        inner_evals[0] += r.evaluations * len(z1)
        return np.asarray(r.value)

    r = integrate_path(outer_integrand, path1, tol)
    # combined estimate: outer error plus inner error amplified by the
    # outer path measure (coarse but conservative at desk scale)
    return QuadratureResult(r.value, r.error_estimate + inner_err[0], r.evaluations + inner_evals[0])


# ---------------------------------------------------------------------------
# concrete chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RayLoop:
    """Clockwise loop around the ray closure(a + R_+ d) in one variable.

    Two straight legs leave the anchor a - eps*d at slope +/- kappa; the
    upper leg runs outward, the lower leg returns, so the cycle winds
    clockwise around every point of the ray.  The traversal direction is
    anchored by the delta normalization test.
    """

    vertex: complex
    direction: complex = 1.0
    standoff: float = 0.3
    kappa: float = 0.35

    def __post_init__(self):
        if abs(self.direction) == 0:
            raise ValueError("direction must be nonzero")
        if self.standoff <= 0 or not (0 < self.kappa < 6):
            raise ValueError("need standoff > 0 and slope in (0, 6)")

    @property
    def anchor(self) -> complex:
        d = self.direction / abs(self.direction)
        return self.vertex - self.standoff * d

    def _leg(self, side: int, sigma: float, C: float) -> Segment:
        d = self.direction / abs(self.direction)
        theta = math.atan(self.kappa)
        dirn = d * complex(math.cos(theta), side * math.sin(theta))
        return tail_segment(self.anchor, dirn, sigma, C)

    def legs(self, sigma: float, C: float = 1.0) -> tuple[Segment, Segment]:
        """(upper leg, lower leg), both outward-oriented."""
        return self._leg(+1, sigma, C), self._leg(-1, sigma, C)

    def to_path(self, sigma: float, C: float = 1.0) -> Path1D:
        up, dn = self.legs(sigma, C)
        return Path1D((up, dn), (1, -1), closed=True)

    def distance_to(self, z: complex) -> float:
        """Distance from z to the loop trace (sampled minimization)."""
        ts = np.linspace(0.0, 60.0, 4001)
        best = math.inf
        for side in (+1, -1):
            d = self.direction / abs(self.direction)
            theta = math.atan(self.kappa)
            dirn = d * complex(math.cos(theta), side * math.sin(theta))
            pts = self.anchor + dirn * ts
            best = min(best, float(np.min(np.abs(pts - z))))
        return best


def infra_linear(c0: float, c1: float, p: float):
    """Profile family psi(t) = c0 + c1 (1+t)^p with 0 < p < 1.

    Infra-linearity psi(t)/t -> 0 holds symbolically for every member since
    p < 1; the constructor is the only way chains acquire profiles, which
    keeps path-independence testable.
    """
    if not (0.0 < p < 1.0):
        raise ValueError("profile exponent must satisfy 0 < p < 1")
    if c0 < 0 or c1 < 0 or (c0 == 0 and c1 == 0):
        raise ValueError("profile must be nonnegative and nontrivial")

    def psi(t):
        return c0 + c1 * np.power(1.0 + t, p)

    def dpsi(t):
        return c1 * p * np.power(1.0 + t, p - 1.0)

    psi.params = (c0, c1, p)
    psi.deriv = dpsi
    return psi


@dataclass(frozen=True)
class InverseChain:
    """Bromwich-type chain zeta = psi(|eta|) xi0 + i eta, eta in M* \\ {0}.

    For n = 1 the chain is the two outward tails eta = +/- t; for n = 2 it
    is the orthant family zeta = a* + psi(|eta|)(|eta_1|/|eta|, |eta_2|/|eta|)
    + i eta over the four open quadrants of eta-space.
    """

    xi0: tuple
    c0: float
    c1: float
    p: float
    a_star: tuple | None = None
    margin: float = 0.0
    zeros: tuple = ()

    @property
    def n(self) -> int:
        return len(self.xi0)

    @property
    def psi(self):
        return infra_linear(self.c0, self.c1, self.p)

    @property
    def psi_hat(self):
        """Anchored profile psi(r) - psi(0), vanishing at r = 0.

        The n = 2 orthant pieces must meet continuously at eta = 0 or the
        four quadrant chains fail to close; the anchored profile is the
        psi-hat(0) = 0 normalization."""
        psi = self.psi
        base = float(psi(0.0))

        def ph(t):
            return psi(t) - base

        ph.deriv = psi.deriv
        ph.params = psi.params
        return ph

    # n = 1 geometry -------------------------------------------------------

    def point(self, eta):
        """n=1 chain point at height eta (vectorized)."""
        psi = self.psi
        xi = float(np.asarray(self.xi0)[0])
        return psi(np.abs(eta)) * xi + 1j * eta

    def piece(self, side: int):
        """Outward-parametrized half chain (t >= 0, eta = side * t) and the
        complex velocity dzeta/dt."""
        psi = self.psi
        xi = float(np.asarray(self.xi0)[0])

        def zf(t):
            return psi(t) * xi + 1j * side * t

        def dzf(t):
            return psi.deriv(t) * xi + 1j * side * np.ones_like(t)

        return zf, dzf

    # n = 2 geometry -------------------------------------------------------

    def point2(self, eta1, eta2):
        """n=2 chain point over eta = (eta1, eta2) with the coupled profile."""
        if self.a_star is None:
            raise ValueError("n=2 chain needs an anchor a*")
        psi = self.psi_hat
        r = np.sqrt(eta1 ** 2 + eta2 ** 2)
        r = np.where(r == 0, 1.0, r)
        a = np.asarray(self.a_star, dtype=float)
        z1 = a[0] + psi(r) * np.abs(eta1) / r + 1j * eta1
        z2 = a[1] + psi(r) * np.abs(eta2) / r + 1j * eta2
        return z1, z2

    def check_margin(self, zeros=None, margin=None, tmax: float = 400.0) -> float:
        """Sampled min distance from declared zeros; MarginViolation if close."""
        zeros = self.zeros if zeros is None else tuple(zeros)
        margin = self.margin if margin is None else float(margin)
        if not zeros:
            return math.inf
        ts = np.concatenate([np.linspace(0, 4, 2001), np.geomspace(4, tmax, 2000)])
        best = math.inf
        if self.n == 1:
            for side in (+1, -1):
                zf, _ = self.piece(side)
                pts = zf(ts)
                for z0 in zeros:
                    best = min(best, float(np.min(np.abs(pts - complex(z0)))))
        else:
            grid = np.linspace(-30, 30, 241)
            E1, E2 = np.meshgrid(grid, grid)
            z1, z2 = self.point2(E1, E2)
            for z0 in zeros:
                dist = np.sqrt(np.abs(z1 - z0[0]) ** 2 + np.abs(z2 - z0[1]) ** 2)
                best = min(best, float(np.min(dist)))
        if best < margin:
            raise MarginViolation(
                f"chain approaches a declared zero to {best:.4g} < margin {margin:.4g}"
            )
        return best


def make_inverse_chain(
    xi0,
    c0: float = 1.0,
    c1: float = 0.5,
    p: float = 0.5,
    zeros: Sequence[complex] = (),
    margin: float = 0.0,
    a_star=None,
) -> InverseChain:
    """Build and certify an infra-linear inverse chain."""
    xi0 = np.asarray(xi0, dtype=float)
    xi0 = xi0 / np.linalg.norm(xi0)
    infra_linear(c0, c1, p)  # validates the family member
    ch = InverseChain(tuple(xi0.tolist()), float(c0), float(c1), float(p),
                      None if a_star is None else tuple(np.asarray(a_star, float).tolist()),
                      float(margin), tuple(zeros))
    if zeros:
        ch.check_margin()
    return ch


# JSON encoding per the external-interface contract


def chain_to_json(obj) -> dict:
    if isinstance(obj, RayLoop):
        return {
            "kind": "rayloop",
            "a": [obj.vertex.real, obj.vertex.imag],
            "eps": obj.standoff,
            "kappa": obj.kappa,
        }
    if isinstance(obj, InverseChain):
        out = {
            "kind": "inverse",
            "xi0": list(obj.xi0),
            "psi": {"c0": obj.c0, "c1": obj.c1, "p": obj.p},
        }
        if obj.a_star is not None:
            out["a_star"] = list(obj.a_star)
        return out
    raise TypeError(f"not a chain: {type(obj).__name__}")


def chain_from_json(obj: dict):
    if obj["kind"] == "rayloop":
        a = obj["a"]
        vertex = complex(a[0], a[1]) if isinstance(a, (list, tuple)) else complex(a)
        return RayLoop(vertex, 1.0, obj.get("eps", 0.3), obj.get("kappa", 0.35))
    if obj["kind"] == "inverse":
        psi = obj["psi"]
        return make_inverse_chain(obj["xi0"], psi["c0"], psi["c1"], psi["p"],
                                  a_star=obj.get("a_star"))
    raise ValueError(f"unknown chain kind {obj.get('kind')!r}")


def sample_points_csv(obj, count: int = 200) -> list[tuple]:
    """(t, Re z, Im z) samples for external plotting."""
    rows = []
    ts = np.linspace(0.0, 20.0, count)
    if isinstance(obj, RayLoop):
        for side, leg in zip((1, -1), obj.legs(sigma=1.0)):
            pts = leg.zfun(ts)
            rows += [(float(side * t), float(z.real), float(z.imag)) for t, z in zip(ts, pts)]
    elif isinstance(obj, InverseChain) and obj.n == 1:
        for side in (1, -1):
            zf, _ = obj.piece(side)
            pts = zf(ts)
            rows += [(float(side * t), float(z.real), float(z.imag)) for t, z in zip(ts, pts)]
    else:
        raise TypeError("sampling implemented for 1D chains")
    return rows
