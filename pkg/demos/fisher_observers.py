import numpy as np

from morphobohm import entropy_fisher as ef

# Observers at fixed points of a Gaussian; each sees W_j = 1 / rho(x_j; mu, sigma)
xs = np.array([-1.5, -0.5, 0.5, 1.5])
dist = ef.gaussian()
fam = ef.MicrostateFamily([lambda t, x=x: 1.0 / dist.density(np.array([x]), np.asarray(t))[0] for x in xs])

theta = [0.0, 1.0]
print("entropies:", ef.entropy_vector(fam, theta).s)
F = ef.fisher_matrix(fam, theta)
print("observer Fisher matrix:\n", F.f)
print("PSD:", F.is_psd())

# the distribution-level Fisher matrix by quadrature of the score
Fd = ef.score_fisher_oracle(dist, theta).f
print("score Fisher:\n", np.round(Fd, 8))

# Monte Carlo check of the Cramer-Rao bound for (mean, std)
n, trials = 2000, 300
S = ef.mc_estimator_covariance(dist, theta, lambda x: np.array([x.mean(), x.std(ddof=1)]), n, trials, seed=1)
gap = ef.cramer_rao_gap(Fd * n, S)
print(f"min eig(Sigma - (nF)^-1) = {gap:.3e}, MC stderr = {ef.covariance_stderr(S, trials):.3e}")
