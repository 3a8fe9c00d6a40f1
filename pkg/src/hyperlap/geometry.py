"""Conic/convex geometry on the radial compactification.

Closed conic sets K = closure(a + G) are stored as (vertex, polyhedral cone)
data; every predicate is evaluated on the finite generator list, so duality
and half-space-at-infinity (HPC) tests are exact for polyhedral cones.
The sphere at infinity is never materialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyHPC, ImproperCone

UNIT_TOL = 1e-12


def as_vector(coords: Sequence[float]) -> np.ndarray:
    v = np.asarray(coords, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("a vector needs at least one coordinate")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector coordinates must be finite")
    return v


@dataclass(frozen=True)
class Direction:
    """Point of M*_inf or E*_inf, identified with a unit vector.

    ``space`` is "base" for real directions (M*/M) and "complexified" for
    directions of E*/E, in which case ``unit`` holds complex entries.
    """

    unit: tuple
    space: str = "base"

    def __post_init__(self):
        u = np.asarray(self.unit)
        norm = float(np.linalg.norm(u))
        if abs(norm - 1.0) > UNIT_TOL:
            raise ValueError(f"direction must be unit length, got |u| = {norm}")
        if self.space not in ("base", "complexified"):
            raise ValueError(f"unknown space tag {self.space!r}")

    @staticmethod
    def of(coords: Sequence[complex], space: str = "base") -> "Direction":
        u = np.asarray(coords, dtype=complex if space == "complexified" else float)
        norm = np.linalg.norm(u)
        if norm == 0:
            raise ValueError("zero vector has no direction")
        return Direction(tuple((u / norm).tolist()), space)

    @property
    def vec(self) -> np.ndarray:
        return np.asarray(self.unit)

    @property
    def real_part(self) -> np.ndarray:
        return np.real(np.asarray(self.unit))

    @property
    def dim(self) -> int:
        return len(self.unit)


@dataclass(frozen=True)
class PolyhedralCone:
    """R_+-conic hull of finitely many generators."""

    generators: tuple = ()
    dim: int = 0

    @staticmethod
    def of(gens: Sequence[Sequence[float]], dim: int | None = None) -> "PolyhedralCone":
        rows = [as_vector(g) for g in gens]
        for g in rows:
            if np.allclose(g, 0.0):
                raise ValueError("cone generators must be nonzero")
        if rows:
            n = rows[0].size
            if any(g.size != n for g in rows):
                raise ValueError("generator dimensions disagree")
        else:
            if dim is None:
                raise ValueError("empty generator list needs an explicit dim")
            n = dim
        return PolyhedralCone(tuple(tuple(g.tolist()) for g in rows), n)

    @property
    def gen_matrix(self) -> np.ndarray:
        if not self.generators:
            return np.zeros((0, self.dim))
        return np.asarray(self.generators, dtype=float)

    def is_trivial(self) -> bool:
        return len(self.generators) == 0

    def contains(self, x: Sequence[float], tol: float = 1e-9) -> bool:
        """Membership in the convex conic hull (nonnegative combination)."""
        x = as_vector(x)
        if self.is_trivial():
            return bool(np.linalg.norm(x) <= tol)
        G = self.gen_matrix.T  # n x k
        # nonnegative least squares via projected gradient is overkill at
        # desk scale; n <= 2 admits the direct angular test, higher n falls
        # back to scipy.
        if self.dim == 1:
            s = np.sign(G[0])
            return bool(np.all(s * x[0] >= -tol) if np.all(s == s[0]) else True)
        if self.dim == 2 and not self.is_convex():
            raise ValueError("membership test implemented for convex cones")
        if self.dim == 2:
            if np.linalg.norm(x) <= tol:
                return True
            angs = sorted(math.atan2(g[1], g[0]) for g in self.gen_matrix)
            xa = math.atan2(x[1], x[0])
            # convex proper cone: check x lies inside the angular span
            lo, hi = self._angular_span()
            d = (xa - lo) % (2 * math.pi)
            return bool(d <= (hi - lo) + tol or (2 * math.pi - d) <= tol)
        from scipy.optimize import nnls

        sol, resid = nnls(G, x)
        return bool(resid <= tol * max(1.0, np.linalg.norm(x)))

    def _angular_span(self) -> tuple[float, float]:
        """For n = 2: (lo, hi) with hi - lo < 2*pi covering all generators."""
        angs = sorted(math.atan2(g[1], g[0]) for g in self.gen_matrix)
        k = len(angs)
        best_gap, best_i = -1.0, 0
        for i in range(k):
            nxt = angs[(i + 1) % k] + (2 * math.pi if i == k - 1 else 0.0)
            gap = nxt - angs[i]
            if gap > best_gap:
                best_gap, best_i = gap, i
        lo = angs[(best_i + 1) % k]
        hi = lo + (2 * math.pi - best_gap)
        return lo, hi

    def is_convex(self) -> bool:
        """True when the generator hull equals the stored cone (our cones are
        hulls by construction, so this only rejects opening angles >= pi in
        the plane)."""
        if self.is_trivial() or self.dim == 1 or len(self.generators) == 1:
            return True
        if self.dim == 2:
            lo, hi = self._angular_span()
            return hi - lo < math.pi + 1e-12
        return True  # n > 2: hull is convex by definition

    def is_proper(self) -> bool:
        """Exists xi0 with <g, xi0> > 0 for every generator."""
        if self.is_trivial():
            return True
        if self.dim == 1:
            s = np.sign(self.gen_matrix[:, 0])
            return bool(np.all(s == s[0]))
        if self.dim == 2:
            lo, hi = self._angular_span()
            return hi - lo < math.pi - 1e-12
        from scipy.optimize import linprog

        G = self.gen_matrix
        k, n = G.shape
        # maximize t subject to G xi >= t, -1 <= xi <= 1
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A_ub = np.hstack([-G, np.ones((k, 1))])
        res = linprog(c, A_ub=A_ub, b_ub=np.zeros(k), bounds=[(-1, 1)] * n + [(None, None)])
        return bool(res.success and -res.fun > 1e-9)

    def interior_direction(self) -> np.ndarray:
        """A unit xi0 with <g, xi0> > 0 for all generators (cone proper)."""
        if not self.is_proper():
            raise ImproperCone("cone is not properly contained in a half space")
        if self.is_trivial():
            e = np.zeros(self.dim)
            e[0] = 1.0
            return e
        if self.dim == 1:
            return np.array([np.sign(self.gen_matrix[0, 0])])
        if self.dim == 2:
            lo, hi = self._angular_span()
            mid = 0.5 * (lo + hi)
            return np.array([math.cos(mid), math.sin(mid)])
        v = self.gen_matrix.mean(axis=0)
        return v / np.linalg.norm(v)


@dataclass(frozen=True)
class ClosedConicSet:
    """K = closure(a + G) inside the radial compactification of M."""

    vertex: tuple
    cone: PolyhedralCone

    @staticmethod
    def of(vertex: Sequence[float], gens: Sequence[Sequence[float]]) -> "ClosedConicSet":
        v = as_vector(vertex)
        cone = PolyhedralCone.of(gens, dim=v.size)
        if cone.generators and cone.dim != v.size:
            raise ValueError("vertex/cone dimensions disagree")
        return ClosedConicSet(tuple(v.tolist()), cone)

    @property
    def a(self) -> np.ndarray:
        return np.asarray(self.vertex, dtype=float)

    @property
    def dim(self) -> int:
        return len(self.vertex)

    def contains(self, x: Sequence[float], tol: float = 1e-9) -> bool:
        return self.cone.contains(as_vector(x) - self.a, tol=tol)


@dataclass(frozen=True)
class HalfSpaceFamily:
    """Finite family of half spaces {x : <x, xi> >= h}; an outer hull of K."""

    entries: tuple  # of (Direction, float)

    def contains(self, x: Sequence[float], tol: float = 1e-9) -> bool:
        x = as_vector(x)
        return all(float(np.dot(x, d.real_part)) >= h - tol for d, h in self.entries)

    def margin(self, x: Sequence[float]) -> float:
        """min over entries of <x, xi> - h; negative outside the hull."""
        x = as_vector(x)
        return min(float(np.dot(x, d.real_part)) - h for d, h in self.entries)


def support_function(K: ClosedConicSet, xi: Direction) -> float:
    """inf over K of <x, Re xi>: <a, xi> when xi dominates every generator,
    -inf when some generator escapes, +inf reserved for an empty trace."""
    x0 = xi.real_part
    n0 = np.linalg.norm(x0)
    if n0 == 0:
        # purely imaginary complexified direction: Re<x, i eta> = 0 on M
        return 0.0
    G = K.cone.gen_matrix
    if G.shape[0] and np.min(G @ x0) < 0:
        return -math.inf
    return float(np.dot(K.a, x0))


def dual_cone(G: PolyhedralCone) -> PolyhedralCone:
    """Generator description of the closed dual; open-dual membership is the
    strict test `dual_contains_open`."""
    if not G.is_proper():
        raise ImproperCone("dual open cone of an improper cone is empty")
    if G.is_trivial():
        raise ImproperCone("dual of the trivial cone is the whole space; no generators")
    M = G.gen_matrix
    if G.dim == 1:
        return PolyhedralCone.of([[float(np.sign(M[0, 0]))]])
    if G.dim == 2:
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        cands = [rot @ g for g in M] + [-(rot @ g) for g in M] + [g for g in M]
        feas = [c for c in cands if np.all(M @ c >= -1e-12)]
        # keep the two extreme rays: widest angular pair
        feas = [c / np.linalg.norm(c) for c in feas]
        uniq: list[np.ndarray] = []
        for c in feas:
            if not any(np.linalg.norm(c - u) < 1e-9 for u in uniq):
                uniq.append(c)
        cone = PolyhedralCone.of(uniq)
        lo, hi = cone._angular_span()
        return PolyhedralCone.of(
            [[math.cos(lo), math.sin(lo)], [math.cos(hi), math.sin(hi)]]
        )
    raise NotImplementedError("dual generator description implemented for n <= 2")


def dual_contains_open(G: PolyhedralCone, zeta: Sequence[complex]) -> bool:
    """zeta in G-dual-open iff Re<g, zeta> > 0 for every generator (exact)."""
    z = np.asarray(zeta)
    M = G.gen_matrix
    if M.shape[0] == 0:
        return True
    return bool(np.all(np.real(M @ z) > 0))


def in_hpc(K: ClosedConicSet, zeta: Direction) -> bool:
    """Membership of a direction at infinity in HPC{K}.

    For K = closure(a + G) the directions of closure(K) at infinity are the
    generator directions, so the test is Re<g, zeta> > 0 on generators;
    compact K (trivial cone) has HPC = all of E*_inf.
    """
    return dual_contains_open(K.cone, zeta.vec)


def halfspace_hull(K: ClosedConicSet, directions: Sequence[Direction]) -> HalfSpaceFamily:
    """Outer polyhedral hull of convex regular K from sampled HPC directions."""
    if not K.cone.is_convex():
        raise ValueError("halfspace_hull requires a convex cone")
    entries = []
    for d in directions:
        if not in_hpc(K, d):
            continue
        h = support_function(K, d)
        if h == -math.inf:
            continue
        entries.append((d, h))
    if not entries:
        raise EmptyHPC("no supplied direction lies in HPC{K}")
    return HalfSpaceFamily(tuple(entries))


def fan(n_dirs: int, lo: float, hi: float) -> list[Direction]:
    """Evenly spread plane directions with angles in [lo, hi]."""
    return [
        Direction.of([math.cos(t), math.sin(t)])
        for t in np.linspace(lo, hi, n_dirs)
    ]


# JSON encoding per the external-interface contract


def _num(x: float) -> float | str:
    if x == math.inf:
        return "+inf"
    if x == -math.inf:
        return "-inf"
    return float(x)


def cone_to_json(K: ClosedConicSet) -> dict:
    return {
        "vertex": [float(v) for v in K.vertex],
        "generators": [[float(c) for c in g] for g in K.cone.generators],
    }


def cone_from_json(obj: dict) -> ClosedConicSet:
    return ClosedConicSet.of(obj["vertex"], obj.get("generators", []))


def direction_to_json(d: Direction) -> dict:
    u = np.asarray(d.unit)
    if d.space == "complexified":
        return {"unit": [[float(c.real), float(c.imag)] for c in u]}
    return {"unit": [float(c) for c in u]}


def direction_from_json(obj: dict) -> Direction:
    u = obj["unit"]
    if u and isinstance(u[0], (list, tuple)):
        return Direction.of([complex(re, im) for re, im in u], space="complexified")
    return Direction.of(u)


def halfspaces_to_json(fam: HalfSpaceFamily) -> list[dict]:
    return [{"xi": direction_to_json(d), "bound": _num(h)} for d, h in fam.entries]
