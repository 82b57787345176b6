"""Sorted output probabilities per backend against Porter-Thomas and depolarized references."""

from _common import emit, parser

from mpdosim import circuit as cm
from mpdosim.harness import pt_analysis


def main():
    p = parser(__doc__)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--depth", type=int, default=24)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", default="depolarizing")
    p.add_argument("--rates", type=float, nargs="+", default=[0.0, 0.005, 0.01, 0.02])
    p.add_argument("--backends", nargs="+", default=["exact-sv", "exact-dm", "mps", "mpdo"])
    p.add_argument("--chi", type=int, default=16)
    p.add_argument("--kappa", type=int, default=32)
    args = p.parse_args()

    circ = cm.random_circuit(args.n, args.depth, args.seed)
    emit(pt_analysis(circ, args.backends, args.model, args.rates, args.chi, args.kappa), args.out)


if __name__ == "__main__":
    main()
