import numpy as np

from morphobohm import morphogenetic as mg

# A tall Jacobian: 3 observed coordinates depending on 2 parameters
J = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 2.0]])

Jp = mg.pseudo_inverse(J)
print("J+ =\n", Jp)
print("J+ J =\n", Jp @ J)  # identity on parameter space

# J J+ is the projector onto the column space, not the identity
Q = mg.projection_operator(J).q
print("eigenvalues of Q:", np.round(np.linalg.eigvalsh(Q), 12))

# metric and inverse metric built from the same factorization
G = mg.metric_tensor(J)
print("g =\n", G.g)
print("g_inv g =\n", np.round(G.g_inv @ G.g, 14))

# covariant and contravariant components of a vector outside the column space
v = np.array([1.0, -2.0, 0.5])
c = mg.components(J, v)
print("covariant:", c["covariant"], " contravariant:", c["contravariant"])
print("squared length", mg.quadratic_length(J, v), "==", np.linalg.norm(Q @ v) ** 2)
