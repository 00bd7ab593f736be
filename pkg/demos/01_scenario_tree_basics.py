# Scenario trees: outcomes, a stage grid with a half-step, refining
# partitions and a reference measure.  The bundled worked market has four
# outcomes (two intermediate states times two financial states), and the
# half-step 0+ reveals the financial coordinate first.

import numpy as np

from riskchain import Claim, condexp, validate_model
from riskchain.twobytwo import build_model

model = build_model()
print("outcomes:", model.outcomes)
print("grid:    ", [s.label for s in model.stages])
for s in model.stages:
    print(f"  atoms at {s.label}:", model.atoms(s))

report = validate_model(model)
print("valid model:", report.ok)

# conditional expectation under a tilted measure, atom by atom
tilted = np.array([0.4, 0.1, 0.1, 0.4])
payoff = Claim(np.array([1.0, 2.0, 3.0, 4.0]))
for label in ("0", "0+", "1"):
    values = condexp(tilted, payoff, label, model).values
    print(f"E[X | {label:>2}] =", np.round(values, 6))

# atoms with zero mass fall back to the reference measure, so the
# conditional expectation is always defined
sparse = np.array([0.5, 0.0, 0.5, 0.0])
print("null-atom fallback:", condexp(sparse, payoff, "0+", model).values)
