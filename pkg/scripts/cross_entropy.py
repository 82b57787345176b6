"""Cross entropy of sampled noisy counts against MPDO and MPS distributions of growing bond dimension.

The "experiment" is 8192 shots drawn from the exact density matrix under
the per-pair hardware depolarizing rates. Pass ``--counts`` to use a
counts file from a device instead.
"""

from pathlib import Path

import numpy as np
from _common import emit, parser

from mpdosim import circuit as cm
from mpdosim import exact, mpdo, mps
from mpdosim.analysis import ProbDist
from mpdosim.harness import counts_cross_entropy, hardware_noise, read_counts, sample_counts


def main():
    p = parser(__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--depths", type=int, nargs="+", default=[4, 8, 12, 16])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots", type=int, default=8192)
    p.add_argument("--chi", type=int, nargs="+", default=[1, 2, 4, 8, 16, 32])
    p.add_argument("--counts", type=Path, default=None)
    args = p.parse_args()

    noise = hardware_noise()
    rows = []
    for depth in args.depths:
        circ = cm.random_circuit(args.n, depth, args.seed)
        if args.counts is None:
            p_exp = exact.bitstring_distribution(exact.run_noisy(circ, noise))
            hist = sample_counts(ProbDist.from_vector(p_exp), args.shots, seed=args.seed + depth)
        else:
            hist = read_counts(args.counts)
        for chi in args.chi:
            p_d = mpdo.full_distribution(mpdo.mpdo_run(circ, noise, chi, 2 * chi))
            v = mps.to_statevector(mps.mps_run(circ, chi))
            p_s = np.abs(v) ** 2 / np.vdot(v, v).real
            rows.append({
                "depth": depth,
                "chi": chi,
                "h_mpdo": counts_cross_entropy(hist, ProbDist.from_vector(p_d)),
                "h_mps": counts_cross_entropy(hist, ProbDist.from_vector(p_s)),
            })
    emit({"kind": "cross-entropy", "n_qubits": args.n, "seed": args.seed, "rows": rows}, args.out)


if __name__ == "__main__":
    main()
