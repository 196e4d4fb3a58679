"""Exact running-extremum transforms on a small hand-made path.

Every transform returns a piecewise-linear path whose knots include all new
corners, so the printed knots are the whole function, not a sampled view.
"""

import numpy as np

from pathlaw import pathkit as pk
from pathlaw import transforms as tr


def show(name, path):
    knots = ", ".join(f"({s:.4g}, {v:.4g})" for s, v in path.knots())
    print(f"{name:<14} {knots}")


phi = pk.make_path([0, 1 / 3, 2 / 3, 1], [0, 2, 1, 3])  # up, down, up again
show("phi", phi)
show("prefix max", pk.envelope(phi, "prefix_max"))  # new knot at 5/6 where phi regains level 2
show("P(phi)", tr.pitman_max(phi))

# retarget the endpoint to 1 while keeping the Pitman path
m1 = tr.m_x(phi, 1.0)
show("M_1(phi)", m1)
show("P(M_1(phi))", tr.pitman_max(m1))
print("same Pitman path:", pk.sup_distance(tr.pitman_max(m1), tr.pitman_max(phi)) < 1e-12)

# N swaps the endpoints and undoes itself; note the knot at 1/6
n = tr.n_transform(phi)
show("N(phi)", n)
show("N(N(phi))", tr.n_transform(n))

# the same identities on a rough random path
rng = np.random.default_rng(1)
rough = pk.random_path(rng, n_knots=60)
print("\nrandom path with", len(rough), "knots")
print("  N(N(phi)) - phi        :", f"{pk.sup_distance(tr.n_transform(tr.n_transform(rough)), rough):.1e}")
print("  M_phi(t)(phi) - phi    :", f"{pk.sup_distance(tr.m_x(rough, rough.end), rough):.1e}")
print("  Q(N(phi)) - Q(phi)     :",
      f"{pk.sup_distance(tr.q_transform(tr.n_transform(rough)), tr.q_transform(rough)):.1e}")
