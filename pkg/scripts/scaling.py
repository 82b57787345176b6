"""Wall time of mpdo_run while doubling the qubit count or the depth at fixed caps."""

import time

from _common import emit, parser

from mpdosim import circuit as cm
from mpdosim import mpdo
from mpdosim.noise import NoiseModel


def best_time(n, depth, chi, kappa, reps):
    circ = cm.random_circuit(n, depth, 0)
    noise = NoiseModel("depolarizing", 0.01)
    best = float("inf")
    for _ in range(reps):
        t = time.perf_counter()
        mpdo.mpdo_run(circ, noise, chi, kappa)
        best = min(best, time.perf_counter() - t)
    return best


def main():
    p = parser(__doc__)
    p.add_argument("--chi", type=int, default=16)
    p.add_argument("--kappa", type=int, default=16)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32])
    p.add_argument("--depths", type=int, nargs="+", default=[8, 16, 32, 64])
    args = p.parse_args()
    rows = [{"n": n, "depth": 16, "seconds": best_time(n, 16, args.chi, args.kappa, args.reps)} for n in args.sizes]
    rows += [{"n": 16, "depth": d, "seconds": best_time(16, d, args.chi, args.kappa, args.reps)} for d in args.depths]
    # timings vary run to run, so this document is not bit-stable
    emit({"kind": "scaling", "chi_max": args.chi, "kappa_max": args.kappa, "rows": rows}, args.out)


if __name__ == "__main__":
    main()
