#!/usr/bin/env python3
"""
Walker Heating Calibration
Fits the walker's p_heat to the dense engine run with imperfect gates

Defaults reproduce HEATING_CALIBRATION, the run behind CALIBRATED_P_HEAT in
toric.py; the summary shows the fit next to the recorded value. Other
settings are passed to walker runs through the [toric] p_heat key.
"""

import argparse
import sys

from gates import ErrorModel
from lattice import build_toric
from terminal import ReportTerminal, setup_logging
from toric import (
    CALIBRATED_P_HEAT, ESTIMATED_P_HEAT, HEATING_CALIBRATION, ToricModel, calibrate_heating,
)


def main(argv=None) -> int:
    run = HEATING_CALIBRATION
    parser = argparse.ArgumentParser(description="Fit the walker heating probability")
    parser.add_argument('--L', type=int, default=run['L'])
    parser.add_argument('--q-norm', type=float, default=run['q_norm'])
    parser.add_argument('--theta', type=float, default=run['theta'])
    parser.add_argument('--schedule', choices=('random', 'round_robin'), default=run['schedule'])
    parser.add_argument('--sweeps', type=int, default=run['sweeps'])
    parser.add_argument('--trajectories', type=int, default=run['trajectories'])
    parser.add_argument('--iterations', type=int, default=12)
    parser.add_argument('--seed', type=int, default=run['master_seed'])
    parser.add_argument('--workers', type=int, default=1)
    parser.add_argument('--verbose', '-v', action='store_true')
    args = parser.parse_args(argv)

    setup_logging(args.verbose)
    terminal = ReportTerminal()
    try:
        model = ToricModel(build_toric(args.L), theta=args.theta, schedule=args.schedule,
                           error=ErrorModel(q_norm=args.q_norm, enabled=True))
        fit = calibrate_heating(model, args.sweeps, args.trajectories, args.seed, args.workers,
                                args.iterations)
    except ValueError as e:
        terminal.print_error(str(e))
        return 1
    terminal.show_summary("Heating calibration", {
        'p_heat': fit.p_heat,
        'recorded': CALIBRATED_P_HEAT,
        'estimate': ESTIMATED_P_HEAT,
        'dense plateau': fit.dense_plateau,
        'walker plateau': fit.walker_plateau,
        'iterations': fit.iterations,
    })
    return 0


if __name__ == "__main__":
    sys.exit(main())
