"""Financial / intermediate market decomposition and product-space pricing.

Half-step stages refine each period by the next financial information
(``G_{t+} = G_t v F_{t+1}``).  The financial part of a pricing set fixes its
(t -> t+) kernels, the intermediate part its (t+ -> t+1) kernels; reserve
plans split accordingly into hedgeable and residual increments.  On product
spaces, a financial pricing set extends by independence and combines with any
intermediate set into a time-consistent global pricing mechanism.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence

import numpy as np

from .consistency import is_mstable, paste_assembly, project
from .errors import EngineError, NotCoarserError, SchemaError
from .risk import Chain, cone_member, eta, rho
from .riskset import RiskSet, intersect, set_equal, simplex_set, vertex_enumeration
from .scenario import Claim, ScenarioModel, validate_model


def _whole_times(model: ScenarioModel) -> int:
    """Horizon of a plain model; rejects grids with half-steps or gaps."""
    times = [st.time for st in model.stages]
    if any(st.half for st in model.stages) or times != list(range(len(times))):
        raise SchemaError("expected a plain grid 0,1,...,T without half-steps")
    return times[-1]


def _canon(partition, n: int) -> list[tuple[int, ...]]:
    return sorted((tuple(sorted(int(i) for i in atom)) for atom in partition),
                  key=lambda a: a[0])


def _atom_ids_of(partition, n: int) -> np.ndarray:
    ids = np.empty(n, dtype=int)
    for a, atom in enumerate(partition):
        ids[list(atom)] = a
    return ids


def _common_refinement(p1, p2, n: int) -> list[list[int]]:
    ids1, ids2 = _atom_ids_of(p1, n), _atom_ids_of(p2, n)
    cells: dict[tuple[int, int], list[int]] = {}
    for w in range(n):
        cells.setdefault((int(ids1[w]), int(ids2[w])), []).append(w)
    return list(cells.values())


@dataclass(frozen=True)
class MarketModel:
    """Refined model with grid ``0, 0+, 1, ..., T`` plus the financial
    partitions that generated the half-steps."""

    model: ScenarioModel
    fin_partitions: tuple[tuple[tuple[int, ...], ...], ...]  # F_0 .. F_T

    @property
    def horizon(self) -> int:
        return self.model.final_stage.time

    def whole(self, t: int):
        return self.model.stage(str(t))

    def half(self, t: int):
        return self.model.stage(f"{t}+")


def build_refined(model: ScenarioModel, financial_partitions) -> MarketModel:
    """Insert half-step stages carrying ``G_t v F_{t+1}``.

    ``financial_partitions`` maps whole times (1..T; 0 optional and trivial)
    to partitions coarser than the model's own at the same time.
    """
    T = _whole_times(model)
    validate_model(model).raise_if_invalid()
    n = model.n
    fins: list[list[tuple[int, ...]]] = []
    by_time = {int(k): v for k, v in dict(financial_partitions).items()}
    for t in range(T + 1):
        if t == 0:
            part = by_time.get(0, [tuple(range(n))])
        elif t in by_time:
            part = by_time[t]
        else:
            raise SchemaError(f"missing financial partition for time {t}")
        part = _canon(part, n)
        if sorted(w for atom in part for w in atom) != list(range(n)):
            raise SchemaError(f"financial partition at time {t} is not a partition")
        ids_g = model.atom_ids(str(t))
        ids_f = _atom_ids_of(part, n)
        for atom in model.atoms(str(t)):
            if len({int(ids_f[w]) for w in atom}) != 1:
                raise NotCoarserError(
                    f"financial partition at time {t} is not coarser than the model's",
                    time=t)
        if t == 0 and len(part) != 1:
            raise NotCoarserError("financial partition at time 0 must be trivial", time=0)
        fins.append(part)

    grid = []
    partitions = []
    for t in range(T + 1):
        grid.append(str(t))
        partitions.append(model.atoms(str(t)))
        if t < T:
            grid.append(f"{t}+")
            partitions.append(_common_refinement(model.atoms(str(t)), fins[t + 1], n))
    refined = ScenarioModel(model.outcomes, grid, partitions, model.reference,
                            config=model.config)
    validate_model(refined).raise_if_invalid()
    return MarketModel(refined, tuple(tuple(p) for p in fins))


def _step_sources(mm: MarketModel, rs: RiskSet, financial: bool):
    """One kernel source per adjacent pair of the refined grid: the set on its
    own steps, free elsewhere."""
    sources = []
    for st in mm.model.stages[:-1]:
        own = (not st.half) if financial else st.half
        sources.append(rs if own else None)
    return sources


def qf(rs: RiskSet, mm: MarketModel) -> RiskSet:
    """Financial part: all measures whose (t -> t+) kernels the set allows.

    Equals the intersection of the per-period projections; assembled directly
    from the set's financial-step kernels with free intermediate steps.
    """
    return paste_assembly(mm.model, _step_sources(mm, rs, financial=True), rs.config)


def qi(rs: RiskSet, mm: MarketModel) -> RiskSet:
    """Intermediate part: all measures whose (t+ -> t+1) kernels the set allows."""
    return paste_assembly(mm.model, _step_sources(mm, rs, financial=False), rs.config)


def qf_by_projection(rs: RiskSet, mm: MarketModel) -> RiskSet:
    """Intersection-of-projections route for the financial part (slower;
    kept as an independent cross-check of the assembly route)."""
    parts = [project(rs, str(t), f"{t}+") for t in range(mm.horizon)]
    return vertex_enumeration(reduce(intersect, parts))


def qi_by_projection(rs: RiskSet, mm: MarketModel) -> RiskSet:
    parts = [project(rs, f"{t}+", str(t + 1)) for t in range(mm.horizon)]
    return vertex_enumeration(reduce(intersect, parts))


@dataclass(frozen=True)
class FiReport:
    """Decomposition diagnostics for a pricing set on a refined model."""

    mstable: bool
    equals_intersection: bool
    parts_agree: bool          # the two verdicts above match, as they must
    qf_mstable: bool
    qi_mstable: bool
    qi_of_qf_is_simplex: bool
    qf_of_qi_is_simplex: bool


def check_fi(rs: RiskSet, mm: MarketModel) -> FiReport:
    qf_set = qf(rs, mm)
    qi_set = qi(rs, mm)
    eq = set_equal(rs, vertex_enumeration(intersect(qf_set, qi_set)))
    mst = is_mstable(rs)
    full = simplex_set(mm.model)
    return FiReport(
        mstable=mst,
        equals_intersection=eq,
        parts_agree=(eq == mst),
        qf_mstable=is_mstable(qf_set),
        qi_mstable=is_mstable(qi_set),
        qi_of_qf_is_simplex=set_equal(qi(qf_set, mm), full),
        qf_of_qi_is_simplex=set_equal(qf(qi_set, mm), full),
    )


@dataclass(frozen=True)
class SplitReservePlan:
    """Premium plus per-period financial and intermediate increments."""

    premium: float
    fin_increments: tuple[Claim, ...]   # u^F_t, measurable at t+
    int_increments: tuple[Claim, ...]   # u^I_t, measurable at t+1
    time_consistent: bool
    warning: Optional[str] = None

    def total(self, model: ScenarioModel) -> np.ndarray:
        out = np.full(model.n, self.premium)
        for inc in self.fin_increments:
            out = out + inc.values
        for inc in self.int_increments:
            out = out + inc.values
        return out


def split_reserve(rs: RiskSet, mm: MarketModel, claim: Claim) -> SplitReservePlan:
    """Reserve schedule split into hedgeable and residual increments.

    Both kinds of increment are differences of the backward recursion, so they
    price to zero at their own date; the split telescopes to the claim.
    """
    model = mm.model
    tc = is_mstable(rs)
    process = eta(Chain.single(rs), claim)
    premium = float(process.claims[0].values[0])
    fin_incs = []
    int_incs = []
    for t in range(mm.horizon):
        e_t = process.at(mm.whole(t).index).values
        e_half = process.at(mm.half(t).index).values
        e_next = process.at(mm.whole(t + 1).index).values
        uf = Claim(e_half - e_t, mm.half(t).index)
        ui = Claim(e_next - e_half, mm.whole(t + 1).index)
        if not cone_member(rs, uf, mm.whole(t), mm.half(t)):
            raise EngineError(f"financial increment at time {t} failed its cone check")
        if not cone_member(rs, ui, mm.half(t), mm.whole(t + 1)):
            raise EngineError(f"intermediate increment at time {t} failed its cone check")
        fin_incs.append(uf)
        int_incs.append(ui)
    warning = None
    if not tc:
        warning = ("set is not time-consistent on the refined grid; plan uses "
                   "the minimal dominating prices")
    return SplitReservePlan(premium, tuple(fin_incs), tuple(int_incs), tc, warning)


# -- product spaces -----------------------------------------------------------

@dataclass(frozen=True)
class ProductModel:
    """Rectangle product of a financial and an intermediate factor.

    Product outcomes are ordered intermediate-major: index(i, f) =
    i * n_financial + f.
    """

    fin: ScenarioModel
    inter: ScenarioModel
    market: MarketModel

    @property
    def model(self) -> ScenarioModel:
        return self.market.model

    def index(self, i: int, f: int) -> int:
        return i * self.fin.n + f

    def fin_of(self, outcome: int) -> int:
        return outcome % self.fin.n

    def inter_of(self, outcome: int) -> int:
        return outcome // self.fin.n


def product_space(fin: ScenarioModel, inter: ScenarioModel) -> ProductModel:
    """Build the product model with ``G_t = F_t x I_t`` and
    ``G_{t+} = F_{t+1} x I_t`` and factorized reference."""
    T = _whole_times(fin)
    if _whole_times(inter) != T:
        raise SchemaError("factor models must share the horizon")
    validate_model(fin).raise_if_invalid()
    validate_model(inter).raise_if_invalid()
    n = fin.n * inter.n
    outcomes = [f"({io},{fo})" for io in inter.outcomes for fo in fin.outcomes]
    reference = np.array([inter.reference[i] * fin.reference[f]
                          for i in range(inter.n) for f in range(fin.n)])

    def rect(p_fin, p_int):
        return [[i * fin.n + f for i in ai for f in af]
                for ai in p_int for af in p_fin]

    grid = []
    partitions = []
    for t in range(T + 1):
        grid.append(str(t))
        partitions.append(rect(fin.atoms(str(t)), inter.atoms(str(t))))
        if t < T:
            grid.append(f"{t}+")
            partitions.append(rect(fin.atoms(str(t + 1)), inter.atoms(str(t))))
    model = ScenarioModel(outcomes, grid, partitions, reference, config=fin.config)
    validate_model(model).raise_if_invalid()
    fins = [rect(fin.atoms(str(t)), [tuple(range(inter.n))]) for t in range(T + 1)]
    fins_canon = tuple(tuple(_canon(p, n)) for p in fins)
    return ProductModel(fin, inter, MarketModel(model, fins_canon))


def extend_pi(pi: RiskSet, pm: ProductModel) -> RiskSet:
    """Extend a financial pricing set by independence: each vertex becomes its
    product with the intermediate reference."""
    rows = []
    for v in pi.vertices:
        rows.append(np.array([pm.inter.reference[i] * v[f]
                              for i in range(pm.inter.n) for f in range(pm.fin.n)]))
    return RiskSet.from_vertices(pm.model, rows, config=pm.model.config)


def psi_build(pi: RiskSet, phi: RiskSet, pm: ProductModel,
              check: bool = True) -> RiskSet:
    """Global pricing set agreeing with ``pi`` financially and ``phi`` on the
    residual risk: the financial part of the extension intersected with the
    intermediate part of ``phi``.  Assembled directly by pasting the
    extension's financial-step kernels with ``phi``'s intermediate-step
    kernels, which is the same set.  With ``check`` the construction verifies
    that both parts are recovered and the result is pasting-stable."""
    hat_pi = extend_pi(pi, pm)
    sources = [hat_pi if not st.half else phi for st in pm.model.stages[:-1]]
    q = paste_assembly(pm.model, sources, pm.model.config)
    if check:
        if not set_equal(qf(q, pm.market), qf(hat_pi, pm.market)):
            raise EngineError("financial part was not recovered")
        if not set_equal(qi(q, pm.market), qi(phi, pm.market)):
            raise EngineError("intermediate part was not recovered")
        if not is_mstable(q):
            raise EngineError("constructed set is not pasting-stable")
    return q


def is_purely_financial(pm: ProductModel, claim: Claim,
                        tol: Optional[float] = None) -> bool:
    """Structural test: constant across the intermediate factor per financial
    outcome."""
    tol = pm.model.config.tol if tol is None else tol
    v = np.asarray(claim.values, dtype=float)
    for f in range(pm.fin.n):
        col = v[[pm.index(i, f) for i in range(pm.inter.n)]]
        if np.ptp(col) > tol:
            return False
    return True


def fin_restriction(pm: ProductModel, claim: Claim) -> Claim:
    """Financial-factor claim of a purely financial product claim."""
    v = np.asarray(claim.values, dtype=float)
    return Claim(np.array([v[pm.index(0, f)] for f in range(pm.fin.n)]),
                 pm.fin.final_stage.index)


def lift_financial(pm: ProductModel, values) -> np.ndarray:
    """Lift a financial-factor vector to the product outcome space."""
    v = np.asarray(values, dtype=float)
    return np.array([v[pm.fin_of(w)] for w in range(pm.model.n)])


def psi_verify(pi: RiskSet, phi: RiskSet, pm: ProductModel, q: RiskSet,
               claims: Sequence[Claim]) -> dict:
    """Report the construction identities on sampled claims: the backward
    composition through both parts, and financial agreement when the
    financial pricing is itself time-consistent."""
    hat_pi = extend_pi(pi, pm)
    qf_part = qf(hat_pi, pm.market)
    qi_part = qi(phi, pm.market)
    tol = pm.model.config.tol
    comp_dev = 0.0
    for x in claims:
        for t in range(pm.market.horizon):
            inner = rho(q, x, str(t + 1))
            mid = rho(qi_part, inner, f"{t}+")
            lhs = rho(qf_part, mid, str(t)).values
            rhs = rho(q, x, str(t)).values
            comp_dev = max(comp_dev, float(np.max(np.abs(lhs - rhs))))
    pi_consistent = is_mstable(pi)
    fin_dev = 0.0
    if pi_consistent:
        for x in claims:
            if not is_purely_financial(pm, x):
                continue
            fx = fin_restriction(pm, x)
            for t in range(pm.market.horizon):
                lifted = lift_financial(pm, rho(pi, fx, str(t)).values)
                got = rho(q, x, str(t)).values
                fin_dev = max(fin_dev, float(np.max(np.abs(got - lifted))))
    return {
        "qf_recovered": set_equal(qf(q, pm.market), qf_part),
        "qi_recovered": set_equal(qi(q, pm.market), qi_part),
        "mstable": is_mstable(q),
        "composition_max_dev": comp_dev,
        "composition_ok": comp_dev <= tol,
        "pi_time_consistent": pi_consistent,
        "financial_agreement_max_dev": fin_dev,
        "financial_agreement_ok": fin_dev <= tol,
    }


@dataclass(frozen=True)
class OnePeriodPremium:
    premium: float
    fin_values: np.ndarray        # worst-case value per financial outcome
    fin_increment: Claim          # hedgeable part, financial-only payoff
    int_increment: Claim          # residual part


def one_period_premium(p_fin: RiskSet, p_int: RiskSet, h: Claim,
                       pm: ProductModel) -> OnePeriodPremium:
    """Two-stage premium of a one-period product claim.

    First the intermediate pricing is applied per financial outcome, turning
    the claim into a purely financial one; then the financial pricing prices
    that.  Both increments of the resulting split are certified acceptable
    against their own pricing sets.
    """
    if pm.market.horizon != 1:
        raise SchemaError("one-period premium needs a horizon-1 product model")
    tol = pm.model.config.tol
    v = np.asarray(h.values, dtype=float)
    fin_vals = np.empty(pm.fin.n)
    for f in range(pm.fin.n):
        col = Claim(v[[pm.index(i, f) for i in range(pm.inter.n)]])
        fin_vals[f] = float(rho(p_int, col, 0).values[0])
    premium = float(rho(p_fin, Claim(fin_vals), 0).values[0])

    uf = Claim(lift_financial(pm, fin_vals - premium), pm.market.half(0).index)
    ui = Claim(v - lift_financial(pm, fin_vals), pm.model.final_stage.index)
    if float(rho(p_fin, Claim(fin_vals - premium), 0).values[0]) > tol:
        raise EngineError("financial increment failed its acceptability check")
    for f in range(pm.fin.n):
        col = Claim(ui.values[[pm.index(i, f) for i in range(pm.inter.n)]])
        if float(rho(p_int, col, 0).values[0]) > tol:
            raise EngineError("intermediate increment failed its acceptability check")
    return OnePeriodPremium(premium, fin_vals, uf, ui)
