import numpy as np

from morphobohm import quantum_potential as qp
from morphobohm.fields import Grid, ScalarField

g = Grid.from_bounds(-4, 4, 0.01)
x = g.axis(0)
W = ScalarField(np.exp(-x**2 / 2), g, "W")

paper = qp.quantum_potential_w(W, mode="paper")
std = qp.quantum_potential_w(W, mode="standard")
inner = g.interior()
print("paper form, max error vs 1 - x^2/2:", np.abs(paper.scalar.values - (1 - x**2 / 2))[inner].max())
print("paper / standard on the interior:", np.unique(np.round(paper.scalar.values[inner] / std.scalar.values[inner], 8)))

# rescaling W leaves every log-derivative, and so Q, unchanged
Q2 = qp.quantum_potential_w(W.with_values(250.0 * W.values)).scalar.values
print("gauge change:", np.abs(Q2 - paper.scalar.values).max())

# harmonic ground state: the quantum Hamilton-Jacobi residual vanishes
rho, V, E = qp.harmonic_ground_state(g)
S = qp.stationary_phase(g, E, [0.0, 0.1])
r = qp.hj_energy_residual(S, rho, V)
print("energy residual:", np.abs(r.values)[inner].max())

# first variation of the action shrinks with eps at the ground state
gs = Grid.from_bounds(-8, 8, 2e-3)
rho, V, E = qp.harmonic_ground_state(gs)
S = qp.stationary_phase(gs, E, [0.0, 1.0])
for eps in (1e-2, 1e-3, 1e-4):
    print(f"eps={eps:g}  ratio={qp.action_stationarity(rho, S, V, eps=eps):.3e}")
