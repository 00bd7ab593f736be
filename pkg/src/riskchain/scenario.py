"""Finite filtered scenario models.

A model is an ordered outcome space, a stage grid (whole times with optional
half-steps, ``0 < 0+ < 1 < ... < T``), one refining partition per stage and a
full-support reference measure.  Claims are bounded payoff vectors over the
outcomes; the only probabilistic primitive is the per-atom conditional
expectation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import DEFAULT, Config
from .errors import (
    ModelError,
    NotMeasurableError,
    OutOfRangeError,
    SchemaError,
    SizeBoundError,
)

_LABEL_RE = re.compile(r"^(\d+)(\+?)$")


@dataclass(frozen=True)
class Stage:
    """One date on the grid: ``label`` is ``"t"`` or ``"t+"``."""

    index: int
    label: str
    time: int
    half: bool

    @property
    def key(self) -> tuple[int, int]:
        return (self.time, 1 if self.half else 0)


def parse_stage_label(label: str) -> tuple[int, bool]:
    m = _LABEL_RE.match(str(label).strip())
    if not m:
        raise SchemaError(f"bad stage label {label!r}, expected 't' or 't+'")
    return int(m.group(1)), m.group(2) == "+"


def _canonical_atoms(atoms: Sequence[Sequence[int]], n: int) -> list[tuple[int, ...]]:
    """Sort outcomes inside atoms and atoms by smallest member; check cover."""
    out = []
    seen: set[int] = set()
    for atom in atoms:
        tup = tuple(sorted(int(i) for i in atom))
        if not tup:
            raise SchemaError("empty atom in partition")
        if tup[0] < 0 or tup[-1] >= n:
            raise SchemaError(f"outcome index out of range in atom {tup}")
        if seen.intersection(tup):
            raise SchemaError(f"overlapping atoms at {tup}")
        seen.update(tup)
        out.append(tup)
    if len(seen) != n:
        raise SchemaError("partition does not cover every outcome")
    return sorted(out, key=lambda a: a[0])


class ScenarioModel:
    """Outcomes, stage grid, refining partitions and reference measure.

    The constructor enforces structural sanity only (well-formed labels and
    partitions); the three semantic invariants (trivial root, discrete final
    stage, refinement, full support) are checked by :func:`validate_model`.
    """

    def __init__(self, outcomes, grid, partitions, reference, config: Config = DEFAULT):
        self.outcomes = [str(o) for o in outcomes]
        self.n = len(self.outcomes)
        if self.n == 0:
            raise SchemaError("model needs at least one outcome")
        if len(set(self.outcomes)) != self.n:
            raise SchemaError("outcome labels must be unique")
        if len(grid) > config.max_grid:
            raise SizeBoundError(f"grid length {len(grid)} exceeds bound {config.max_grid}")

        keys = []
        self.stages: list[Stage] = []
        for idx, label in enumerate(grid):
            t, half = parse_stage_label(label)
            self.stages.append(Stage(idx, f"{t}+" if half else str(t), t, half))
            keys.append((t, 1 if half else 0))
        if not keys:
            raise SchemaError("empty stage grid")
        if any(k2 <= k1 for k1, k2 in zip(keys, keys[1:])):
            raise SchemaError("stage grid must be strictly increasing")
        if keys[0] != (0, 0):
            raise SchemaError("stage grid must start at 0")
        if self.stages[-1].half:
            raise SchemaError("stage grid must end at a whole time")

        if len(partitions) != len(self.stages):
            raise SchemaError("need exactly one partition per stage")
        self.partitions = [_canonical_atoms(p, self.n) for p in partitions]

        ref = np.asarray(reference, dtype=float)
        if ref.shape != (self.n,):
            raise SchemaError("reference measure length does not match outcomes")
        self.reference = ref
        self.config = config
        # outcome -> atom id, one row per stage
        self._atom_index = np.empty((len(self.stages), self.n), dtype=int)
        for s, atoms in enumerate(self.partitions):
            for a, atom in enumerate(atoms):
                self._atom_index[s, list(atom)] = a

    # -- lookups ---------------------------------------------------------

    def stage(self, key) -> Stage:
        """Resolve a Stage from an index, a label or a Stage."""
        if isinstance(key, Stage):
            return self.stages[key.index]
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < len(self.stages):
                raise OutOfRangeError(f"stage index {key} out of range")
            return self.stages[key]
        t, half = parse_stage_label(key)
        for st in self.stages:
            if st.time == t and st.half == half:
                return st
        raise OutOfRangeError(f"stage {key!r} not on the grid")

    @property
    def final_stage(self) -> Stage:
        return self.stages[-1]

    def atoms(self, stage) -> list[tuple[int, ...]]:
        return self.partitions[self.stage(stage).index]

    def atom_of(self, stage, outcome: int) -> int:
        """Id of the unique atom of ``stage`` containing ``outcome``."""
        if not 0 <= outcome < self.n:
            raise OutOfRangeError(f"outcome index {outcome} out of range")
        return int(self._atom_index[self.stage(stage).index, outcome])

    def atom_ids(self, stage) -> np.ndarray:
        """Vector mapping every outcome to its atom id at ``stage``."""
        return self._atom_index[self.stage(stage).index]

    def atom_label(self, stage, atom_id: int) -> str:
        atoms = self.atoms(stage)
        if not 0 <= atom_id < len(atoms):
            raise OutOfRangeError(f"atom id {atom_id} out of range")
        return "|".join(sorted(self.outcomes[i] for i in atoms[atom_id]))

    def sub_atoms(self, coarse_stage, fine_stage, atom_id: int) -> list[int]:
        """Ids of the ``fine_stage`` atoms contained in a ``coarse_stage`` atom."""
        atom = self.atoms(coarse_stage)[atom_id]
        fine = self.atom_ids(fine_stage)
        return sorted({int(fine[i]) for i in atom})

    def is_measurable(self, values, stage, tol: Optional[float] = None) -> bool:
        """True when ``values`` is constant on every atom of ``stage``."""
        tol = self.config.tol if tol is None else tol
        v = np.asarray(values, dtype=float)
        return all(np.ptp(v[list(atom)]) <= tol for atom in self.atoms(stage))


@dataclass(frozen=True)
class Claim:
    """Payoff vector over outcomes, optionally declared measurable at a stage."""

    values: np.ndarray
    stage: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def __len__(self):
        return len(self.values)


def claim(model: ScenarioModel, values, stage=None) -> Claim:
    """Build a claim, checking length and (when declared) measurability."""
    v = np.asarray(values, dtype=float)
    if v.shape != (model.n,):
        raise SchemaError("claim length does not match outcome count")
    if stage is None:
        return Claim(v)
    st = model.stage(stage)
    if not model.is_measurable(v, st):
        raise NotMeasurableError(
            f"claim is not constant on the atoms of stage {st.label}", stage=st.label)
    return Claim(v, st.index)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate_model`; only the first violation is reported."""

    ok: bool
    code: Optional[str] = None
    message: Optional[str] = None
    stage_index: Optional[int] = None
    atom_index: Optional[int] = None

    def raise_if_invalid(self):
        if not self.ok:
            raise ModelError(self.code, self.message,
                             stage_index=self.stage_index, atom_index=self.atom_index)


def validate_model(model: ScenarioModel) -> ValidationReport:
    """Check trivial root / discrete final stage, refinement and full support."""
    first = model.partitions[0]
    if len(first) != 1 or len(first[0]) != model.n:
        return ValidationReport(False, "BAD_TERMINALS",
                                "stage-0 partition must be the single atom of all outcomes",
                                stage_index=0)
    last = model.partitions[-1]
    if len(last) != model.n:
        return ValidationReport(False, "BAD_TERMINALS",
                                "final-stage partition must be discrete",
                                stage_index=len(model.stages) - 1)
    for s in range(len(model.stages) - 1):
        coarse = model.atom_ids(s)
        fine = model.atom_ids(s + 1)
        for a, atom in enumerate(model.partitions[s + 1]):
            if len({int(coarse[i]) for i in atom}) != 1:
                return ValidationReport(
                    False, "NON_REFINING",
                    f"stage {model.stages[s + 1].label} atom {a} crosses "
                    f"stage {model.stages[s].label} atoms",
                    stage_index=s + 1, atom_index=a)
    if np.any(model.reference <= 0):
        bad = int(np.argmin(model.reference))
        return ValidationReport(False, "NO_FULL_SUPPORT",
                                f"reference weight of outcome {model.outcomes[bad]!r} "
                                "is not strictly positive",
                                atom_index=bad)
    if abs(model.reference.sum() - 1.0) > 1e-12:
        return ValidationReport(False, "NO_FULL_SUPPORT",
                                "reference weights must sum to one")
    return ValidationReport(True)


def condexp(measure, claim_like, stage, model: ScenarioModel) -> Claim:
    """Conditional expectation of a claim given the stage partition.

    On atoms the measure does not charge, the reference measure is used
    instead, so the result is total and deterministic.
    """
    w = np.asarray(getattr(measure, "weights", measure), dtype=float)
    x = np.asarray(getattr(claim_like, "values", claim_like), dtype=float)
    st = model.stage(stage)
    out = np.empty(model.n)
    for atom in model.atoms(st):
        idx = list(atom)
        mass = w[idx].sum()
        if mass > 0:
            val = float(w[idx] @ x[idx]) / mass
        else:
            ref = model.reference[idx]
            val = float(ref @ x[idx]) / ref.sum()
        out[idx] = val
    return Claim(out, st.index)
