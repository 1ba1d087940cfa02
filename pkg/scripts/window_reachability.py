"""Why the u in [0.5, 1.5] window is empty at t = 2 for seeds at u = -1.

Every seed has r in [-1, 0]. The script bounds du/dt over that slab (|v| <= 20)
and reports the earliest time any seed could reach u = 0.5, then
tracks when each arc of the eps ladder actually crosses u = 1.
"""

import argparse

import numpy as np

from braneflow.branes import eps_ladder, evolve_cloud, seed_semicircles
from braneflow.flow import IntegratorConfig
from braneflow.hamiltonian import HamiltonianSpec, vector_field_array


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--u-star", type=float, default=1.0)
    ap.add_argument("--window-min", type=float, default=0.5)
    ap.add_argument("--t-end", type=float, default=30.0)
    ap.add_argument("--k-max", type=int, default=10)
    args = ap.parse_args()
    spec = HamiltonianSpec.paper()

    u, v, r = np.meshgrid(np.linspace(-3, 3, 241), np.linspace(-20, 20, 801), np.linspace(-1, 0, 41), indexing="ij")
    X = vector_field_array(spec, np.stack([u, v, r, np.zeros_like(u)], -1))
    sup_du = float(X[..., 0].max())
    dist = args.window_min + args.u_star
    print(f"sup du/dt over r in [-1, 0], |v| <= 20: {sup_du:.4f}")
    print(f"earliest possible arrival at u = {args.window_min}: t >= {dist / sup_du:.3f}")

    ts = np.linspace(0, args.t_end, int(args.t_end * 20) + 1)
    cloud = seed_semicircles(args.u_star, eps_ladder(args.k_max), 64)
    ev = evolve_cloud(spec, cloud, IntegratorConfig(rel_tol=1e-9, abs_tol=1e-9, t_end=args.t_end, snapshot_times=ts))
    U = np.stack([snap.states[:, 0] for _, snap in ev.snapshots])  # (time, point)
    print("eps      first/last crossing of u = 1 within the arc")
    for eps in eps_ladder(args.k_max):
        cols = np.nonzero(cloud.eps == eps)[0]
        crossed = U[:, cols] >= 1.0
        first = [ts[np.argmax(c)] for c in crossed.T if c.any()]
        if first:
            print(f"{eps:<8.5g} {min(first):7.2f} .. {max(first):7.2f}   ({len(first)}/{len(cols)} points)")
        else:
            print(f"{eps:<8.5g} not before t = {args.t_end}")


if __name__ == "__main__":
    main()
