"""Convex sets of probability measures on a finite scenario model.

A RiskSet is a polytope inside the probability simplex, carried in dual
representation: a vertex list (authoritative for evaluation) and/or a list of
extra linear inequalities over the weights (authoritative for intersection).
Conversions are lazy, cached and idempotent.  The core primitive is the
linear-fractional maximization ``sup Q(a;B)/Q(B)``, computed exactly as a
vertex maximum or as a homogenized LP.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog, nnls
from scipy.spatial import ConvexHull, QhullError

from .config import DEFAULT, Config
from .errors import (
    EmptyIntersectionError,
    EmptyKernelError,
    EngineError,
    OutOfRangeError,
    SchemaError,
    SizeBoundError,
)
from .scenario import Claim, ScenarioModel, condexp


@dataclass(frozen=True)
class Measure:
    """Probability weights over outcomes (nonnegative, summing to one)."""

    weights: np.ndarray


def measure(weights, n: Optional[int] = None) -> Measure:
    """Validate and normalize a weight vector into a Measure."""
    w = np.asarray(weights, dtype=float).copy()
    if w.ndim != 1 or (n is not None and w.shape != (n,)):
        raise SchemaError("measure weight vector has wrong shape")
    if np.any(w < -1e-9):
        raise SchemaError("measure weights must be nonnegative")
    w = np.maximum(w, 0.0)
    total = w.sum()
    if abs(total - 1.0) > 1e-9:
        raise SchemaError(f"measure weights sum to {total!r}, expected 1")
    return Measure(w / total)


@dataclass(frozen=True)
class LinearConstraint:
    """One inequality ``a . q <= b`` over measure weights."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "b", float(self.b))


@dataclass(frozen=True)
class Kernel:
    """One-step conditional distribution of an atom over its sub-atoms."""

    stage: int
    atom: int
    target_stage: int
    children: tuple[int, ...]
    probs: np.ndarray


def _weights_of(q) -> np.ndarray:
    return np.asarray(getattr(q, "weights", q), dtype=float)


def _dedup_rows(rows: np.ndarray, tol: float) -> np.ndarray:
    """Drop rows equal to an earlier row in the max norm."""
    kept: list[np.ndarray] = []
    for r in rows:
        if not any(np.max(np.abs(r - k)) <= tol for k in kept):
            kept.append(r)
    return np.array(kept) if kept else rows[:0]


def _in_hull(points: np.ndarray, x: np.ndarray, tol: float) -> bool:
    """Convex-combination membership via nonnegative least squares."""
    if len(points) == 0:
        return False
    A = np.vstack([points.T, np.ones(len(points))])
    b = np.concatenate([x, [1.0]])
    _, resid = nnls(A, b)
    return resid <= tol * (1.0 + np.abs(b).max())

def _extreme_rows(rows: np.ndarray, tol: float) -> np.ndarray:
    """Reduce deduplicated rows to the extreme points of their convex hull."""
    rows = _dedup_rows(rows, tol)
    if len(rows) <= 2:
        return rows
    keep = [i for i in range(len(rows))
            if not _in_hull(np.delete(rows, i, axis=0), rows[i], tol)]
    return rows[keep]


def _sorted_rows(rows: np.ndarray) -> np.ndarray:
    if len(rows) <= 1:
        return rows
    order = np.lexsort(rows.T[::-1])
    return rows[order]


# -- H-rep -> V-rep: incremental cutting over the simplex -------------------

def _is_vertex(w: np.ndarray, rows: list[tuple[np.ndarray, float]], atol: float) -> bool:
    """A feasible point is a vertex iff its active normals span R^n."""
    n = len(w)
    normals = [np.ones(n) / np.sqrt(n)]
    for i in range(n):
        if w[i] <= atol:
            e = np.zeros(n)
            e[i] = 1.0
            normals.append(e)
    for a, b in rows:
        if abs(a @ w - b) <= atol:
            normals.append(a)
    if len(normals) < n:
        return False
    return np.linalg.matrix_rank(np.array(normals), tol=1e-8) == n


def _enumerate_vertices(n: int, constraints: Sequence[LinearConstraint],
                        config: Config) -> np.ndarray:
    """Vertices of the simplex cut by the given inequalities.

    Each inequality cuts the current vertex set: surviving vertices stay
    vertices, and new ones appear on the cutting hyperplane as crossings of
    keep/drop vertex pairs, filtered by the active-rank test.
    """
    if n > config.max_outcomes:
        raise SizeBoundError(f"{n} outcomes exceed the bound of {config.max_outcomes}")
    atol = config.dedup_tol
    rows: list[tuple[np.ndarray, float]] = []
    pending: list[tuple[np.ndarray, float]] = []
    for c in constraints:
        nrm = float(np.linalg.norm(c.a))
        if nrm <= 1e-15:
            if c.b < -1e-12:
                return np.empty((0, n))
            continue
        pending.append((c.a / nrm, c.b / nrm))

    if pending:
        stacked = _dedup_rows(np.array([np.concatenate([a, [b]]) for a, b in pending]),
                              1e-12)
        pending = [(r[:-1], float(r[-1])) for r in stacked]

    verts = np.eye(n)
    for a, b in pending:
        rows.append((a, b))
        vals = verts @ a
        keep_mask = vals <= b + atol
        if keep_mask.all():
            continue
        kept = verts[keep_mask]
        dropped = verts[~keep_mask]
        dropped_vals = vals[~keep_mask]
        crossings = []
        for u, fu in zip(kept, vals[keep_mask]):
            for v, fv in zip(dropped, dropped_vals):
                denom = fv - fu
                if denom <= 1e-13:
                    continue
                lam = (b - fu) / denom
                w = u + np.clip(lam, 0.0, 1.0) * (v - u)
                crossings.append(w)
        pieces = [kept]
        if crossings:
            cand = _dedup_rows(np.array(crossings), atol)
            good = [w for w in cand if _is_vertex(w, rows, atol)]
            if good:
                pieces.append(np.array(good))
        verts = _dedup_rows(np.vstack(pieces), atol) if len(kept) or crossings else verts[:0]
        if len(verts) > config.work_bound:
            raise SizeBoundError(
                f"vertex enumeration exceeded the work bound of {config.work_bound}")
        if len(verts) == 0:
            break
    return _sorted_rows(verts)


# -- V-rep -> H-rep: affine hull plus facet enumeration ---------------------

def _facets(verts: np.ndarray, tol: float = 1e-9) -> list[LinearConstraint]:
    """Inequalities describing the hull of ``verts`` (equalities as pairs)."""
    v0 = verts[0]
    diffs = verts - v0
    _, svals, vt = np.linalg.svd(diffs, full_matrices=True)
    smax = svals[0] if len(svals) else 0.0
    rank = int(np.sum(svals > tol * max(1.0, smax)))
    basis = vt[:rank]
    comp = vt[rank:]

    cons: list[LinearConstraint] = []
    for w in comp:
        c = float(w @ v0)
        cons.append(LinearConstraint(w, c))
        cons.append(LinearConstraint(-w, -c))
    if rank == 1:
        x = diffs @ basis[0]
        base = float(basis[0] @ v0)
        cons.append(LinearConstraint(basis[0], base + float(x.max())))
        cons.append(LinearConstraint(-basis[0], -(base + float(x.min()))))
    elif rank >= 2:
        coords = diffs @ basis.T
        try:
            hull = ConvexHull(coords)
        except QhullError as exc:
            raise EngineError(f"facet enumeration failed: {exc}") from exc
        A = hull.equations[:, :-1] @ basis
        b = -hull.equations[:, -1] + A @ v0
        worst = float((verts @ A.T - b).max())
        if worst > 10 * tol:
            raise EngineError("facet enumeration lost precision")
        # triangulated facets repeat the same hyperplane once per simplex
        rows = _dedup_rows(np.column_stack([A, b]), tol)
        cons.extend(LinearConstraint(r[:-1], r[-1]) for r in rows)
    return cons


class RiskSet:
    """Convex set of test measures with lazy dual representation."""

    def __init__(self, model: ScenarioModel, vertices=None, constraints=None,
                 config: Optional[Config] = None):
        if vertices is None and constraints is None:
            raise SchemaError("a RiskSet needs vertices or constraints")
        self.model = model
        self.config = config or model.config
        self._vertices: Optional[np.ndarray] = None
        self._constraints: Optional[tuple[LinearConstraint, ...]] = None
        if vertices is not None:
            rows = np.array([measure(_weights_of(v), model.n).weights for v in vertices])
            if len(rows) == 0:
                raise SchemaError("vertex list may not be empty")
            self._vertices = rows
        if constraints is not None:
            cons = []
            for c in constraints:
                c = c if isinstance(c, LinearConstraint) else LinearConstraint(*c)
                if c.a.shape != (model.n,):
                    raise SchemaError("constraint row length does not match outcomes")
                cons.append(c)
            self._constraints = tuple(cons)

    @classmethod
    def from_vertices(cls, model, vertices, config=None) -> "RiskSet":
        return cls(model, vertices=vertices, config=config)

    @classmethod
    def from_constraints(cls, model, constraints, config=None) -> "RiskSet":
        return cls(model, constraints=constraints, config=config)

    @property
    def has_vertices(self) -> bool:
        return self._vertices is not None

    @property
    def has_constraints(self) -> bool:
        return self._constraints is not None

    @property
    def vertices(self) -> np.ndarray:
        if self._vertices is None:
            verts = _enumerate_vertices(self.model.n, self._constraints, self.config)
            if len(verts) == 0:
                raise EmptyIntersectionError("constraint system has no probability solution")
            self._vertices = verts
        return self._vertices

    @property
    def constraints(self) -> tuple[LinearConstraint, ...]:
        if self._constraints is None:
            self._constraints = tuple(_facets(self.vertices))
        return self._constraints

    def is_relevant(self) -> bool:
        """Every outcome receives positive mass from at least one vertex."""
        return bool((self.vertices > 0).any(axis=0).all())

    def __repr__(self):
        rep = []
        if self._vertices is not None:
            rep.append(f"{len(self._vertices)} vertices")
        if self._constraints is not None:
            rep.append(f"{len(self._constraints)} constraints")
        return f"RiskSet({', '.join(rep)}, n={self.model.n})"


def simplex_set(model: ScenarioModel) -> RiskSet:
    """The full probability simplex (all point masses) on the model."""
    return RiskSet.from_vertices(model, np.eye(model.n))


def singleton(model: ScenarioModel, q) -> RiskSet:
    return RiskSet.from_vertices(model, [_weights_of(q)])


# -- densities and kernels ---------------------------------------------------

def density(model: ScenarioModel, q, stage) -> tuple[np.ndarray, np.ndarray]:
    """Density of ``q`` w.r.t. the reference, and its stage restriction.

    Returns the pointwise ratio and its conditional expectation under the
    reference at ``stage`` (the density of the restriction of ``q``).
    """
    w = _weights_of(q)
    lam = w / model.reference
    lam_t = condexp(model.reference, lam, stage, model).values
    return lam, lam_t


def node_kernel(model: ScenarioModel, q, s, t, atom_id: int) -> Kernel:
    """Conditional distribution of ``q`` on a stage-``s`` atom over stage-``t``
    sub-atoms; the reference kernel on atoms of zero mass."""
    st_s, st_t = model.stage(s), model.stage(t)
    if st_t.index <= st_s.index:
        raise OutOfRangeError("kernel target stage must come after the source stage")
    atoms_s = model.atoms(st_s)
    if not 0 <= atom_id < len(atoms_s):
        raise OutOfRangeError(f"atom id {atom_id} out of range at stage {st_s.label}")
    children = model.sub_atoms(st_s, st_t, atom_id)
    w = _weights_of(q)
    idx = list(atoms_s[atom_id])
    src = w if w[idx].sum() > 0 else model.reference
    total = src[idx].sum()
    atoms_t = model.atoms(st_t)
    probs = np.array([src[list(atoms_t[c])].sum() for c in children]) / total
    return Kernel(st_s.index, atom_id, st_t.index, tuple(children), probs)


def kernel_polytope(rs: RiskSet, s, t, atom_id: int) -> list[Kernel]:
    """Extreme one-step kernels of the set at one atom.

    By the perspective identity, the conditional kernels of the whole set are
    exactly the convex hull of the charged vertices' kernels.
    """
    model = rs.model
    st_s, st_t = model.stage(s), model.stage(t)
    if st_t.index <= st_s.index:
        raise OutOfRangeError("kernel target stage must come after the source stage")
    atom = model.atoms(st_s)[atom_id]
    idx = list(atom)
    children = model.sub_atoms(st_s, st_t, atom_id)
    child_idx = [list(model.atoms(st_t)[c]) for c in children]
    V = rs.vertices
    masses = V[:, idx].sum(axis=1)
    charged = masses > 0
    if not charged.any():
        raise EmptyKernelError(
            f"no vertex charges atom {atom_id} at stage {st_s.label}",
            stage=st_s.label, atom=atom_id)
    rows = np.stack([V[charged][:, ci].sum(axis=1) for ci in child_idx], axis=1)
    rows = rows / masses[charged][:, None]
    rows = _extreme_rows(rows, rs.config.dedup_tol)
    rows = _sorted_rows(rows)
    return [Kernel(st_s.index, atom_id, st_t.index, tuple(children), r) for r in rows]


# -- the linear-fractional primitive ----------------------------------------

def maximize_ratio(rs: RiskSet, numerator, atom: Iterable[int],
                   prefer: str = "auto") -> float:
    """``sup { sum_B Q a / Q(B) : Q in rs, Q(B) > 0 }``.

    With vertices the supremum is the maximum over charged vertices (the ratio
    of a mixture is a mass-weighted average of vertex ratios).  With only
    constraints it is solved as a homogenized LP.  ``prefer`` forces a route
    ("vertices" or "lp").
    """
    idx = list(atom)
    if not idx:
        raise OutOfRangeError("empty atom")
    a = np.asarray(numerator, dtype=float)
    if prefer == "lp" or (prefer == "auto" and not rs.has_vertices and rs.has_constraints):
        return _maximize_ratio_lp(rs, a, idx)
    V = rs.vertices
    masses = V[:, idx].sum(axis=1)
    charged = masses > 0
    if not charged.any():
        raise EmptyKernelError(f"no vertex charges atom {tuple(idx)}")
    vals = (V[charged][:, idx] @ a[idx]) / masses[charged]
    return float(vals.max())


def _maximize_ratio_lp(rs: RiskSet, a: np.ndarray, idx: list[int]) -> float:
    """Homogenization: y = Q / Q(B), extra scale variable s = 1 / Q(B)."""
    n = rs.model.n
    cons = rs.constraints
    c = np.zeros(n + 1)
    c[idx] = -a[idx]
    A_ub = None
    b_ub = None
    if cons:
        A_ub = np.array([np.concatenate([co.a, [-co.b]]) for co in cons])
        b_ub = np.zeros(len(cons))
    mass_row = np.zeros(n + 1)
    mass_row[idx] = 1.0
    sum_row = np.concatenate([np.ones(n), [-1.0]])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub,
                  A_eq=np.vstack([sum_row, mass_row]), b_eq=[0.0, 1.0],
                  bounds=[(0, None)] * (n + 1), method="highs")
    if res.status == 2:
        raise EmptyKernelError(f"no measure in the set charges atom {tuple(idx)}")
    if res.status != 0:
        raise EngineError(f"ratio LP failed with status {res.status}")
    return float(-res.fun)


# -- membership, inclusion, intersection -------------------------------------

def member(rs: RiskSet, q, tol: Optional[float] = None) -> bool:
    """Membership at tolerance: constraint evaluation when an H-representation
    exists, otherwise convex-combination feasibility against the vertices."""
    tol = rs.config.tol if tol is None else tol
    w = _weights_of(q)
    if w.shape != (rs.model.n,):
        raise SchemaError("measure length does not match the model")
    if w.min() < -tol or abs(w.sum() - 1.0) > tol:
        return False
    if rs.has_constraints:
        return all(c.a @ w <= c.b + tol * (1 + abs(c.b)) for c in rs.constraints)
    return _in_hull(rs.vertices, w, tol)


def includes(rs1: RiskSet, rs2: RiskSet, tol: Optional[float] = None) -> bool:
    """Every vertex of ``rs2`` is a member of ``rs1``."""
    _check_same_model(rs1, rs2)
    return all(member(rs1, v, tol) for v in rs2.vertices)


def set_equal(rs1: RiskSet, rs2: RiskSet, tol: Optional[float] = None) -> bool:
    return includes(rs1, rs2, tol) and includes(rs2, rs1, tol)


def vertex_enumeration(rs: RiskSet) -> RiskSet:
    """Materialize the V-representation; idempotent when already present."""
    if rs.has_vertices:
        return rs
    return RiskSet.from_vertices(rs.model, rs.vertices, config=rs.config)


def intersect(rs1: RiskSet, rs2: RiskSet) -> RiskSet:
    """Intersection by concatenating H-representations.

    The result carries constraints only; vertices are re-enumerated on demand.
    Raises EMPTY_INTERSECTION when no probability measure satisfies both.
    """
    _check_same_model(rs1, rs2)
    cons = list(rs1.constraints) + list(rs2.constraints)
    n = rs1.model.n
    if cons:
        A_ub = np.array([c.a for c in cons])
        b_ub = np.array([c.b for c in cons])
    else:
        A_ub = b_ub = None
    res = linprog(np.zeros(n), A_ub=A_ub, b_ub=b_ub,
                  A_eq=np.ones((1, n)), b_eq=[1.0],
                  bounds=[(0, None)] * n, method="highs")
    if res.status == 2:
        raise EmptyIntersectionError("the intersection contains no probability measure")
    if res.status != 0:
        raise EngineError(f"feasibility LP failed with status {res.status}")
    return RiskSet.from_constraints(rs1.model, cons, config=rs1.config)


def _check_same_model(rs1: RiskSet, rs2: RiskSet):
    m1, m2 = rs1.model, rs2.model
    if m1 is m2:
        return
    if (m1.outcomes != m2.outcomes or len(m1.stages) != len(m2.stages)
            or any(a.label != b.label for a, b in zip(m1.stages, m2.stages))
            or m1.partitions != m2.partitions):
        raise SchemaError("risk sets live on different models")
