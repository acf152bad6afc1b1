"""
When does a depolarizing qubit channel stop distributing entanglement?
=====================================================================

The qubit depolarizing generator with K = (2/3) 1 shrinks the Bloch
vector as exp(-4x/3). Its Choi state is an isotropic state, which turns
PPT when the singlet weight drops to 1/2, i.e. at x = (3/4) ln 3.
"""
import math

import numpy as np

from lindblad_pptt.generator import depolarizing_qubit, dephasing_qubit
from lindblad_pptt.pptt import pptt_search
from lindblad_pptt.propagators import PropagatorConfig

gen = depolarizing_qubit()
print("Lindblad operators (rates are the squared HS norms):")
print(np.round(gen.lindblad_ops, 4))

# scan both integrators on the same grid
for method in ("standard", "caolu"):
    res = pptt_search(gen, PropagatorConfig(method, dx=1e-3, x_max=3.0), record_trace=True)
    print(f"{method:9s} x_ppt = {res.x_ppt:.4f}   analytic {0.75 * math.log(3):.4f}")

# the recorded trace shows the negativity reaching zero
xs, neg = res.negativity_trace
for x in (0.1, 0.4, 0.8, res.x_ppt):
    i = int(np.argmin(np.abs(xs - x)))
    print(f"  x = {xs[i]:.3f}  negativity = {neg[i]:.3e}")

# pure dephasing never destroys all entanglement of the Choi state
res = pptt_search(dephasing_qubit(), PropagatorConfig("caolu", 1e-3, 5.0))
print("dephasing qubit censored at the horizon:", res.censored)
