"""Wedge domains, growth certificates, and analytic-function carriers.

A GrowthCertificate is a claim checked on finite sample sets, not a proof:
the function classes here are analytically defined and desk-scale sampling
is the honest substitute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .expr import Expr, evaluate

SIGNS = ("+", "-", ".")


@dataclass(frozen=True)
class WedgeDescriptor:
    """Orthant wedge Omega_alpha = M x^ sqrt(-1)Gamma_alpha.

    ``signs`` constrains Im z_k to be positive ("+"), negative ("-"), or
    unconstrained (".").  ``base`` is "full" (all of M), "re+" (right
    half-space per coordinate, used by dual-variable carriers), or a named
    box tag.
    """

    n: int
    signs: tuple
    base: str = "full"

    def __post_init__(self):
        if len(self.signs) != self.n:
            raise ValueError("sign vector length must equal the dimension")
        if any(s not in SIGNS for s in self.signs):
            raise ValueError(f"signs must be drawn from {SIGNS}")
        if self.base == "full" and all(s == "." for s in self.signs):
            raise ValueError("need at least one constrained coordinate")

    @staticmethod
    def of(signs: str | Sequence[str], base: str = "full") -> "WedgeDescriptor":
        sg = tuple(signs)
        return WedgeDescriptor(len(sg), sg, base)

    def contains(self, z, margin: float = 0.0) -> bool:
        """True when every constrained Im z_k clears the margin."""
        zz = np.atleast_2d(np.asarray(z, dtype=complex))
        for k, s in enumerate(self.signs):
            if s == "+" and not np.all(zz[:, k].imag > margin):
                return False
            if s == "-" and not np.all(zz[:, k].imag < -margin):
                return False
        if self.base == "re+" and not np.all(zz.real > margin):
            return False
        return True

    def push_vector(self) -> np.ndarray:
        """Unit-ish imaginary direction pointing into the wedge."""
        v = np.zeros(self.n)
        for k, s in enumerate(self.signs):
            v[k] = 1.0 if s == "+" else (-1.0 if s == "-" else 0.0)
        nrm = np.linalg.norm(v)
        return v / nrm if nrm else v

    def sample_points(self, rng: np.random.Generator, count: int, radius: float = 3.0):
        """Interior sample points, one row per point."""
        if self.base == "re+":
            x = rng.uniform(0.05, radius, size=(count, self.n))
        else:
            x = rng.uniform(-radius, radius, size=(count, self.n))
        y = rng.uniform(0.05, radius, size=(count, self.n))
        for k, s in enumerate(self.signs):
            if s == "-":
                y[:, k] = -y[:, k]
            elif s == ".":
                y[:, k] = rng.uniform(-radius, radius, size=count)
        return x + 1j * y


@dataclass(frozen=True)
class GrowthCertificate:
    """Claim |f(z)| <= C exp(H |z|); optional infra-h reference and schedule.

    ``H_axes`` optionally refines H per coordinate for product-type terms
    (|F| <= C exp(sum_k H_k |z_k|)); chain damping checks prefer it.
    """

    H: float = 0.0
    C: float = 1.0
    h_ref: object = None  # support-function handle for infra-h claims
    eps_schedule: tuple = (0.1,)
    H_axes: tuple | None = None

    def __post_init__(self):
        if not (math.isfinite(self.H) and self.H >= 0):
            raise ValueError("H must be finite and >= 0")
        if not (math.isfinite(self.C) and self.C > 0):
            raise ValueError("C must be finite and > 0")


_VARSETS = {1: ("z1",), 2: ("z1", "z2")}


@dataclass(frozen=True)
class AnalyticFunction:
    """Expression- or closure-backed holomorphic function on a wedge.

    ``fn`` is either an Expr in the variables z1..zn (zeta1..zetan for dual
    side carriers) or a vectorized callable; callables are how the inverse
    transform materializes its quadrature-backed wedge functions.
    """

    fn: object
    domain: WedgeDescriptor
    growth: GrowthCertificate = GrowthCertificate()
    varnames: tuple = ()

    def names(self) -> tuple:
        if self.varnames:
            return self.varnames
        return _VARSETS.get(self.domain.n, tuple(f"z{k+1}" for k in range(self.domain.n)))

    def __call__(self, *zs):
        """Evaluate at points; each argument is one coordinate (scalar/array)."""
        if callable(self.fn) and not isinstance(self.fn, Expr):
            return self.fn(*zs)
        env = dict(zip(self.names(), zs))
        return evaluate(self.fn, env)

    def eval_points(self, pts):
        """Evaluate on an (m, n) array of points."""
        pts = np.atleast_2d(np.asarray(pts, dtype=complex))
        return self(*(pts[:, k] for k in range(self.domain.n)))


@dataclass
class GrowthReport:
    violations: list
    worst_ratio: float
    checked: int

    @property
    def ok(self) -> bool:
        return not self.violations


def check_growth(f: AnalyticFunction, samples) -> GrowthReport:
    """Verify |f(z)| <= C exp(H |z|) at the samples; DomainError off-wedge."""
    pts = np.atleast_2d(np.asarray(samples, dtype=complex))
    for row in pts:
        if not f.domain.contains(row[None, :]):
            raise DomainError(f"sample {row} outside the wedge {f.domain.signs}")
    vals = np.abs(f.eval_points(pts))
    radii = np.linalg.norm(pts, axis=1)
    bound = f.growth.C * np.exp(f.growth.H * radii)
    ratio = vals / bound
    bad = [
        (pts[i].tolist(), float(ratio[i]))
        for i in np.nonzero(ratio > 1.0 + 1e-9)[0]
    ]
    worst = float(np.max(ratio)) if ratio.size else 0.0
    return GrowthReport(bad, worst, int(pts.shape[0]))


def check_infra_exponential(
    f: AnalyticFunction,
    h: Callable[[np.ndarray], float],
    eps: float,
    rays: Sequence[tuple],
    C: float | None = None,
) -> GrowthReport:
    """Verify e^{|zeta| h(pi(zeta))} |f(zeta)| <= C e^{eps |zeta|} per ray sample.

    ``rays`` is a sequence of (zeta0 unit vector, radii grid).  ``h`` maps a
    unit direction to the support-function value.  When C is None it is
    calibrated on the first third of each ray and must then hold on the rest.
    """
    violations = []
    worst = 0.0
    checked = 0
    for zeta0, ts in rays:
        zeta0 = np.asarray(zeta0, dtype=complex)
        ts = np.asarray(ts, dtype=float)
        pts = np.outer(ts, zeta0)
        if not f.domain.contains(pts):
            raise DomainError("ray leaves the declared domain")
        vals = np.abs(f.eval_points(pts))
        hval = float(h(zeta0))
        lhs = np.exp(ts * hval) * vals
        rhs = np.exp(eps * ts)
        ratio = lhs / rhs
        if C is None:
            cal = max(1.0, float(np.max(ratio[: max(1, len(ts) // 3)])) * (1 + 1e-9))
        else:
            cal = C
        r = ratio / cal
        worst = max(worst, float(np.max(r)))
        checked += len(ts)
        for i in np.nonzero(r > 1.0 + 1e-9)[0]:
            violations.append(((ts[i] * zeta0).tolist(), float(r[i])))
    return GrowthReport(violations, worst, checked)
