"""Recovered fidelity of the five-qubit code memory versus gate error rate."""

from _common import emit, parser

from mpdosim.harness import QEC_RATES, qec_table

MODELS = ("dephasing", "depolarizing", "amplitude-damping", "collective-dephasing")


def main():
    p = parser(__doc__)
    p.add_argument("--rates", type=float, nargs="+", default=list(QEC_RATES))
    p.add_argument("--memory-rate", type=float, default=0.05)
    p.add_argument("--chi", type=int, default=16)
    p.add_argument("--kappa", type=int, default=32)
    args = p.parse_args()
    emit(qec_table(MODELS, args.rates, args.memory_rate, chi_max=args.chi, kappa_max=args.kappa), args.out)


if __name__ == "__main__":
    main()
