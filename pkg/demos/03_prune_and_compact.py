"""Pruning mechanics and exact network compaction.

Pruning zeroes small weights; survival analysis then finds neurons whose
incoming column or outgoing row went entirely to zero; compaction rebuilds
the network without them.  The subtle part is a removed unit that still
emitted a constant (zero incoming weights, but a bias -- and for logistic
units even a zero bias gives the constant 1/2): its contribution is folded
into the next layer's biases, so the compacted network computes exactly
the same function.

Run:  python3 demos/03_prune_and_compact.py
"""

import numpy as np

from neurontrim import (
    Layer,
    Network,
    PruneSpec,
    analyze_neurons,
    compact,
    forward,
    init_network,
    make_rng,
    prune,
)


def main():
    rng = make_rng(2024)

    # 1. pruning is monotone in the threshold and idempotent
    net = init_network(rng, [8, 6, 4], ["logistic", "linear"])
    print("nonzero weights by prune threshold:")
    for t in (0.0, 0.05, 0.1, 0.2, 0.4):
        pruned = prune(net, PruneSpec(t))
        again = prune(pruned, PruneSpec(t))
        nz = sum(int((l.weights != 0).sum()) for l in pruned.layers)
        nz2 = sum(int((l.weights != 0).sum()) for l in again.layers)
        print(f"  threshold {t:4.2f}: {nz:3d} nonzeros "
              f"(pruning twice: {nz2}, unchanged)")

    # 2. a hand-built net with every kind of dead unit
    w1 = np.array([
        [1.2, 0.0, 0.0, 0.7],
        [-0.9, 0.0, 0.0, 0.3],
        [0.0, 0.0, 0.8, -1.1],
    ])
    b1 = np.array([0.1, 0.4, -0.2, 0.0])
    w2 = np.array([
        [1.0],
        [-2.0],   # unit 2 hears nothing (zero column) but speaks: fold sigma(0.4)
        [0.0],    # unit 3 hears but is never heard (zero row): plain delete
        [0.5],
    ])
    net = Network([Layer(w1, b1, "logistic"), Layer(w2, np.zeros(1), "linear")])

    survival = analyze_neurons(net)
    print("\nsurvival masks (True = keep):")
    for stage, mask in enumerate(survival.survives):
        print(f"  stage {stage}: {mask.astype(int).tolist()}")

    small, maps = compact(net)
    print(f"\ncompacted {'-'.join(map(str, net.dims))} -> "
          f"{'-'.join(map(str, small.dims))}")
    print(f"surviving original indices per stage: {[m.tolist() for m in maps]}")
    folded = small.layers[1].biases[0]
    expected = 1.0 / (1.0 + np.exp(-0.4)) * -2.0
    print(f"next-layer bias after folding: {folded:.6f} "
          f"(= sigma(0.4) * -2.0 = {expected:.6f})")

    x = rng.standard_normal((5, 3))
    before = forward(net, x)
    after = forward(small, x[:, maps[0]])
    print(f"max |output difference| on random inputs: "
          f"{np.abs(before - after).max():.2e}")

    # 3. exactness holds across random pruned networks, not just this one
    worst = 0.0
    tried = 0
    while tried < 50:
        dims = [int(rng.integers(2, 7)) for _ in range(int(rng.integers(3, 5)))]
        acts = [("linear", "logistic", "relu")[rng.integers(0, 3)]
                for _ in dims[1:]]
        candidate = init_network(rng, dims, acts)
        for layer in candidate.layers:
            layer.biases[:] = rng.standard_normal(layer.fan_out)
            layer.weights[:, rng.random(layer.fan_out) < 0.4] = 0.0
        try:
            small, maps = compact(candidate)
        except Exception:
            continue
        x = rng.standard_normal((40, dims[0]))
        worst = max(worst, np.abs(
            forward(small, x[:, maps[0]]) - forward(candidate, x)).max())
        tried += 1
    print(f"\nacross {tried} random pruned networks, worst output deviation "
          f"after compaction: {worst:.2e}")


if __name__ == "__main__":
    main()
