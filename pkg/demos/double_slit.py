import numpy as np

from morphobohm import bohmian as bm

res = bm.double_slit_scenario(n_particles=4000, seed=42)
print(f"screen time {res.t_screen:g}, {res.ensemble.n_particles} particles")
print("trajectories crossing the axis:", res.axis_crossings)
print(f"TV distance to |psi|^2: {res.tv_distance:.4f}")

# crude text histogram of arrivals next to the exact bin probabilities
emp = res.counts / res.counts.sum()
for c, e, p in zip(res.bin_centers[::2], emp[::2], res.expected[::2]):
    print(f"{c:7.2f}  {'#' * int(400 * e):<40s} {p:.4f}")

y = res.grid.axis(0)
near = np.abs(y) < 2
print("max |Q_two - Q_one| near the axis:", np.abs(res.Q.values - res.Q_one_slit.values)[near].max())
