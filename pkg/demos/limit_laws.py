"""
Limit laws and the transition between them
==========================================

The family ``Lambda_c`` interpolates between the slow-regime Chernoff law
(``c -> 0``, after scaling by ``c^{2/3}``) and the fast-regime compound
Poisson law (``c -> infinity``).
"""

import numpy as np

from cpmisspec import (ModelSpec, asymptotic_constants, builtin_logistic, chernoff_spec,
                       sample_chernoff_argmax, sample_compound_argmin, spec_fast,
                       spec_intermediate, transition_diagnostic)

f = builtin_logistic(1.0)
const = asymptotic_constants(ModelSpec(f, 0.5, 1.0, alpha=1.0))

chern = sample_chernoff_argmax(chernoff_spec(const, one_parameter=True), 5000, seed=1)
fast = sample_compound_argmin(spec_fast(const), 5000, seed=2)
mid = sample_compound_argmin(spec_intermediate(const, f), 5000, seed=3)
for s in (chern, fast, mid):
    q = np.quantile(s.values, [0.05, 0.5, 0.95])
    print(f"{s.regime:>12}: 5/50/95% quantiles {np.round(q, 3)}")

print("\n     c   KS to Chernoff   KS to fast")
for row in transition_diagnostic(f, const, [0.05, 0.3, 1.0, 10.0, 100.0], 4000, seed=4):
    print(f"{row.c:6g}   {row.ks_to_chernoff:14.3f}   {row.ks_to_fast:10.3f}")
