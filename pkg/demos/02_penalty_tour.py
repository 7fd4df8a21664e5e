"""A tour of the four weight penalties and what they each sparsify.

l1 and l2 act on individual connections.  The two group penalties act on
whole neurons: the incoming penalty sums the Euclidean norm of each weight
column (everything a neuron listens to), the outgoing penalty sums row
norms (everything it says).  A group norm only reaches zero when every
weight in the group does, which is exactly the condition that lets a
neuron be deleted -- and, unlike the l2 square, the square root keeps a
kink at zero, so gradient descent can actually park groups there.

Run:  python3 demos/02_penalty_tour.py
"""

import numpy as np

from neurontrim import (
    Layer,
    Network,
    RegularizerConfig,
    group_l0_counts,
    l1_value,
    l2_value,
    li_value,
    lo_value,
    regularizer_grad,
)


def one_layer(w):
    w = np.asarray(w, dtype=float)
    return Network([Layer(w, np.zeros(w.shape[1]), "linear")])


def main():
    w = np.array([
        [3.0, 0.0, 1.0],
        [4.0, 0.0, -2.0],
    ])
    net = one_layer(w)
    print("weight matrix (2 inputs -> 3 units):")
    print(w)

    print(f"\nl1 (sum |w|):               {l1_value(net, 1.0):.4f}")
    print(f"l2 (sum w^2):               {l2_value(net, 1.0):.4f}")
    print(f"incoming groups (columns):  {li_value(net, 1.0):.4f}"
          f"   <- norms {np.round(np.linalg.norm(w, axis=0), 4)}")
    print(f"outgoing groups (rows):     {lo_value(net, 1.0):.4f}"
          f"   <- norms {np.round(np.linalg.norm(w, axis=1), 4)}")

    cols, rows = group_l0_counts(net, 0.0)[0]
    print(f"\ngroup-l0 counts (the quantity the norms are a convex surrogate "
          f"for): {cols} live columns, {rows} live rows")

    # the gradient of a group norm is the unit vector of the group: every
    # member is pulled toward zero together, proportionally to its share
    cfg = RegularizerConfig(lambda_li=1.0)
    gw, _ = regularizer_grad(net, cfg)
    print("\ngradient of the incoming-group penalty:")
    print(np.round(gw[0], 4))
    print("column 1 is the unit vector of (3,4); column 2 is zero because an "
          "empty group is already dropped")

    # sanity: matches finite differences
    h = 1e-6
    fd = np.zeros_like(w)
    for idx in np.ndindex(w.shape):
        for sign in (1, -1):
            w2 = w.copy()
            w2[idx] += sign * h
            fd[idx] += sign * li_value(one_layer(w2), 1.0) / (2 * h)
    print(f"\nmax |analytic - finite difference| = {np.abs(gw[0] - fd).max():.2e}")

    # scale invariance in the right sense: penalties are absolutely homogeneous
    print(f"\nli(3W) = {li_value(one_layer(3 * w), 1.0):.4f} "
          f"= 3 * li(W) = {3 * li_value(net, 1.0):.4f}")
    print(f"li(W) = lo(W^T): {li_value(net, 1.0):.4f} "
          f"= {lo_value(one_layer(w.T), 1.0):.4f}")


if __name__ == "__main__":
    main()
