"""Conditional coherent risk evaluation and reserving.

``rho`` evaluates the worst-case conditional price per atom, ``eta`` composes
the per-stage measures backward into the minimal dominating time-consistent
chain, and reserve plans telescope a claim into a premium plus per-period
acceptable increments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import linprog

from .errors import EngineError, InfeasibleError, NotMeasurableError, SchemaError
from .riskset import RiskSet, maximize_ratio
from .scenario import Claim, ScenarioModel


def rho(rs: RiskSet, claim: Claim, stage) -> Claim:
    """Worst-case conditional price of a claim at a stage, atom by atom.

    At the final stage this is the identity.
    """
    model = rs.model
    st = model.stage(stage)
    x = np.asarray(claim.values, dtype=float)
    if st.index == model.final_stage.index:
        return Claim(x.copy(), st.index)
    out = np.empty(model.n)
    for atom in model.atoms(st):
        out[list(atom)] = maximize_ratio(rs, x, atom)
    return Claim(out, st.index)


@dataclass(frozen=True)
class Chain:
    """Evaluation dates plus their test sets.

    ``sets`` is either a single RiskSet (used at every date) or one RiskSet per
    listed date.  Dates must be strictly increasing and precede the final
    stage, which always prices by identity.
    """

    model: ScenarioModel
    stage_indices: tuple[int, ...]
    sets: Union[RiskSet, tuple[RiskSet, ...]]

    @classmethod
    def single(cls, rs: RiskSet, stages: Optional[Sequence] = None) -> "Chain":
        model = rs.model
        if stages is None:
            idx = tuple(range(len(model.stages) - 1))
        else:
            idx = tuple(model.stage(s).index for s in stages)
        return cls(model, idx, rs)

    @classmethod
    def per_stage(cls, model: ScenarioModel, stages: Sequence,
                  sets: Sequence[RiskSet]) -> "Chain":
        if len(stages) != len(sets):
            raise SchemaError("need exactly one risk set per chain stage")
        idx = tuple(model.stage(s).index for s in stages)
        return cls(model, idx, tuple(sets))

    def __post_init__(self):
        final = self.model.final_stage.index
        if not self.stage_indices:
            raise SchemaError("chain needs at least one evaluation date")
        if any(b <= a for a, b in zip(self.stage_indices, self.stage_indices[1:])):
            raise SchemaError("chain stages must be strictly increasing")
        if self.stage_indices[-1] >= final:
            raise SchemaError("chain stages must precede the final stage")

    @property
    def is_single_set(self) -> bool:
        return isinstance(self.sets, RiskSet)

    def set_at(self, position: int) -> RiskSet:
        return self.sets if self.is_single_set else self.sets[position]


@dataclass(frozen=True)
class AdaptedProcess:
    """One claim per date (each measurable there), e.g. the eta recursion."""

    stage_indices: tuple[int, ...]
    claims: tuple[Claim, ...]

    def at(self, stage_index: int) -> Claim:
        return self.claims[self.stage_indices.index(stage_index)]


def eta(chain: Chain, claim: Claim) -> AdaptedProcess:
    """Backward composition of the chain, the minimal dominating
    time-consistent price process: identity at the end, then one ``rho`` per
    listed date."""
    model = chain.model
    final = model.final_stage.index
    current = Claim(np.asarray(claim.values, dtype=float).copy(), final)
    stages = [final]
    claims = [current]
    for pos in range(len(chain.stage_indices) - 1, -1, -1):
        current = rho(chain.set_at(pos), current, chain.stage_indices[pos])
        stages.append(chain.stage_indices[pos])
        claims.append(current)
    return AdaptedProcess(tuple(reversed(stages)), tuple(reversed(claims)))


def is_acceptable(rs: RiskSet, claim: Claim, tol: Optional[float] = None) -> bool:
    """True when the time-0 price of the claim is at most zero (one-sided)."""
    tol = rs.config.tol if tol is None else tol
    return float(rho(rs, claim, 0).values[0]) <= tol


def cone_member(rs: RiskSet, claim: Claim, s, s_next,
                tol: Optional[float] = None) -> bool:
    """Membership of the one-period trading cone at (s, s_next).

    Requires measurability at ``s_next`` (violations raise NOT_MEASURABLE,
    distinct from a mere risk violation) and nonpositive stage-``s`` price on
    every atom.
    """
    model = rs.model
    tol = rs.config.tol if tol is None else tol
    st_s, st_n = model.stage(s), model.stage(s_next)
    if st_n.index <= st_s.index:
        raise SchemaError("cone stages must be ordered")
    if not model.is_measurable(claim.values, st_n, tol):
        raise NotMeasurableError(
            f"claim is not measurable at stage {st_n.label}", stage=st_n.label)
    return bool(np.all(rho(rs, claim, st_s).values <= tol))


def decompose_acceptance(rs: RiskSet, claim: Claim) -> list[Claim]:
    """Split a claim into per-period cone increments summing to it.

    Solves the feasibility LP: one increment per adjacent stage pair,
    measurable at the later stage, with every vertex expectation nonpositive
    on every earlier-stage atom (which linearizes the vertex-max price
    exactly).  Raises INFEASIBLE when no split exists; with an acceptable
    input that is the witness that the chain is not time-consistent.
    """
    model = rs.model
    x = np.asarray(claim.values, dtype=float)
    V = rs.vertices
    n_stages = len(model.stages)
    if n_stages < 2:
        raise SchemaError("need at least two stages to decompose")

    blocks = []  # (stage position s, atoms of s+1) per increment variable block
    offsets = [0]
    for s in range(n_stages - 1):
        blocks.append((s, model.atoms(s + 1)))
        offsets.append(offsets[-1] + len(blocks[-1][1]))
    n_var = offsets[-1]

    # sum of increments reproduces the claim outcome by outcome
    A_eq = np.zeros((model.n, n_var))
    for (s, atoms), off in zip(blocks, offsets):
        ids = model.atom_ids(s + 1)
        for w in range(model.n):
            A_eq[w, off + ids[w]] += 1.0
    b_eq = x

    rows = []
    for (s, atoms), off in zip(blocks, offsets):
        ids = model.atom_ids(s + 1)
        for atom in model.atoms(s):
            for v in V:
                row = np.zeros(n_var)
                for w in atom:
                    row[off + ids[w]] += v[w]
                rows.append(row)
    A_ub = np.array(rows)
    b_ub = np.zeros(len(rows))

    res = linprog(np.zeros(n_var), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(None, None)] * n_var, method="highs")
    if res.status == 2:
        raise InfeasibleError("claim admits no acceptance decomposition")
    if res.status != 0:
        raise EngineError(f"decomposition LP failed with status {res.status}")

    out = []
    for (s, atoms), off in zip(blocks, offsets):
        vals = np.empty(model.n)
        for a, atom in enumerate(atoms):
            vals[list(atom)] = res.x[off + a]
        out.append(Claim(vals, s + 1))
    return out


@dataclass(frozen=True)
class ReservePlan:
    """Premium plus adapted acceptable increments telescoping to the claim."""

    premium: float
    stage_indices: tuple[int, ...]  # increment u_s is measurable at the next stage
    increments: tuple[Claim, ...]
    time_consistent: bool
    warning: Optional[str] = None

    def total(self, model: ScenarioModel) -> np.ndarray:
        out = np.full(model.n, self.premium)
        for inc in self.increments:
            out = out + inc.values
        return out


def reserve_plan(chain: Chain, claim: Claim,
                 time_consistent: Optional[bool] = None) -> ReservePlan:
    """Mark-to-market reserve schedule built from the eta recursion.

    The premium is the time-0 eta price and each increment is one eta
    difference, so the plan telescopes exactly and every increment prices to
    zero at its own date.  For chains that are not time-consistent the eta
    prices dominate the chain's own, and a warning records that the plan is
    the conservative repair.  Pass ``time_consistent`` when the caller has
    already run the check (the consistency module provides it).
    """
    if time_consistent is None:
        from .consistency import chain_time_consistent
        time_consistent = chain_time_consistent(chain)
    process = eta(chain, claim)
    premium = float(process.claims[0].values[0])
    stages = []
    incs = []
    for pos in range(len(process.stage_indices) - 1):
        diff = process.claims[pos + 1].values - process.claims[pos].values
        stages.append(process.stage_indices[pos])
        incs.append(Claim(diff, process.stage_indices[pos + 1]))
    warning = None
    if not time_consistent:
        warning = ("chain is not time-consistent; plan uses the minimal "
                   "dominating prices, premium may exceed the quoted price")
    return ReservePlan(premium, tuple(stages), tuple(incs), time_consistent, warning)
