import numpy as np

from morphobohm import geometrodynamics as gd
from morphobohm.fields import Grid, ScalarField

# 1+1 spacetime, time on axis 0
g = Grid.from_bounds([-2, -3], [2, 3], 0.02)
t, x = g.mesh()
psi = ScalarField(np.exp(-(x**2) / 2) * (1 + 0 * t), g, "|psi|")
Q = gd.relativistic_quantum_potential(psi)
print("static Q vs x^2 - 1:", np.abs(Q.values - (x**2 - 1))[g.interior()].max())

M2 = gd.quantum_mass(Q, m=1.0).M_squared
print("quantum mass^2 range:", M2.values.min(), M2.values.max())

eta = gd.minkowski(g)
gt = gd.conformal_metric(eta, Q)
print("signature kept:", gt.has_lorentzian_signature())
print("det law error:", np.abs(gt.det() - np.exp(2 * Q.values) * eta.det()).max())

# a plane wave on the shifted mass shell solves both forms of the equation
q, p = 0.4, 0.9
E = np.sqrt(np.exp(q) + p**2)
S = ScalarField(E * t - p * x, g)
Qc = ScalarField(np.full(g.shape, q), g)
for form in ("original", "conformal"):
    print(form, np.abs(gd.kg_hj_residual(eta, S, Qc, form=form).values).max())
