"""Calibrate gate error rates that match truncated-MPS fidelities.

For each MPS bond dimension the fidelity ``r`` of the truncated noiseless
state is measured; each noise model is then calibrated so the exact noisy
state has the same fidelity with the ideal state.
"""

from _common import emit, parser

from mpdosim import circuit as cm
from mpdosim import exact, mps
from mpdosim.harness import CALIBRATED_MODELS, calibrate_noise


def main():
    p = parser(__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--depth", type=int, default=24)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chi", type=int, nargs="+", default=[2, 4, 6, 8, 12])
    args = p.parse_args()

    circ = cm.random_circuit(args.n, args.depth, args.seed)
    psi = exact.run_pure(circ)
    rows = []
    for chi in args.chi:
        r = mps.mps_fidelity_to(mps.mps_run(circ, chi), psi)
        row = {"chi": chi, "r": r}
        for model in CALIBRATED_MODELS:
            row[model] = calibrate_noise(circ, model, r).rate
        rows.append(row)
    emit({"kind": "calibration-table", "n_qubits": args.n, "depth": args.depth, "seed": args.seed, "rows": rows}, args.out)


if __name__ == "__main__":
    main()
