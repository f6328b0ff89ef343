"""
Command Line Front End for the Digital Quantum Simulator
Runs the cooling, ramp, verification and Rydberg-parameter experiments

Features:
- Subcommands toric-cool, gauge-cool, gauge-ramp, verify and ryd-params
- --config file, --seed, --workers, --out plus per-experiment overrides
- Versioned CSV output and a JSON run summary per experiment
- Rich tables for per-sweep means, ramp errors and verification checks
- Exit codes: 0 success, 1 usage or configuration error, 2 failed verification
"""

import argparse
import logging
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from gates import ErrorModel
from gauge import GaugeModel, adiabatic_ramp, cool_gauge
from lattice import build_cubic, build_toric
from pauli import OperatorSum
from results import (
    RunSummary, model_hash, write_aggregate_csv, write_ramp_csv, write_trajectory_csv,
)
from run_config import WORKERS_ENV, RunConfig
from rydphys import RydbergParams, parameter_report
from terminal import ReportTerminal, setup_logging
from toric import ToricModel, cool_toric
from verification import run_checks

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY_FAILED = 2


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so usage errors map to exit code 1"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _override(parser: argparse.ArgumentParser, flag: str, section: str, key: str, kind,
              help_text: str, **kwargs):
    parser.add_argument(flag, dest=f"{section}__{key}", type=kind, default=None,
                        help=help_text, **kwargs)


def _dims(text: str):
    parts = [p for p in text.replace('x', ',').split(',') if p.strip()]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"need three sizes like 2,2,1, got {text!r}")
    return tuple(int(p) for p in parts)


def _floats(text: str):
    return tuple(float(p) for p in text.split(',') if p.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='digisim', description="Digital quantum simulation with Rydberg gates")
    parser.add_argument('--config', help="configuration file ([section] key = value)")
    parser.add_argument('--seed', dest='run__master_seed', type=int, default=None,
                        help="master seed for every trajectory")
    parser.add_argument('--workers', dest='run__workers', type=int, default=None,
                        help=f"trajectory worker processes (default ${WORKERS_ENV} or 1)")
    parser.add_argument('--out', dest='run__out_dir', default=None, help="output directory")
    parser.add_argument('--verbose', '-v', action='store_true', help="debug logging")
    sub = parser.add_subparsers(dest='experiment', parser_class=_Parser)
    sub.required = True

    toric = sub.add_parser('toric-cool', help="toric-code cooling with optional gate errors")
    _override(toric, '--L', 'toric', 'L', int, "linear lattice size")
    _override(toric, '--engine', 'toric', 'engine', str, "dense or walker", choices=('dense', 'walker'))
    _override(toric, '--sweeps', 'run', 'sweeps', int, "stroboscopic steps")
    _override(toric, '--trajectories', 'run', 'trajectories', int, "independent trajectories")
    _override(toric, '--traces', 'run', 'traces', int, "trajectories written in full")
    _override(toric, '--theta', 'toric', 'theta', float, "dissipative phase")
    _override(toric, '--phi', 'toric', 'phi', float, "coherent phase of the stabilizer terms")
    _override(toric, '--q-norm', 'toric', 'q_norm', float, "gate error magnitude |Q|")
    _override(toric, '--q', 'toric', 'q', str, "error operator, e.g. '0.1 * +1 Z0'")
    _override(toric, '--p-heat', 'toric', 'p_heat', float, "walker heating probability")
    _override(toric, '--schedule', 'toric', 'schedule', str, "flip-spin selection",
              choices=('random', 'round_robin'))
    _override(toric, '--walker-order', 'toric', 'walker_order', str, "walker visiting order",
              choices=('random', 'schedule'))
    toric.add_argument('--errors', dest='toric__errors', action='store_const', const=True,
                       default=None, help="imperfect many-body gates")

    gauge = sub.add_parser('gauge-cool', help="dissipative cooling to the RK point")
    _override(gauge, '--dims', 'gauge', 'dims', _dims, "cubic lattice sizes, e.g. 2,2,1")
    _override(gauge, '--sweeps', 'gauge', 'sweeps', int, "stroboscopic steps")
    _override(gauge, '--trajectories', 'gauge', 'trajectories', int, "independent trajectories")
    _override(gauge, '--traces', 'run', 'traces', int, "trajectories written in full")
    _override(gauge, '--initial', 'gauge', 'initial', str, "start state",
              choices=('all_down', 'covering'))
    _override(gauge, '--constraint-sweeps', 'gauge', 'constraint_sweeps', int,
              "constraint-only sweeps before the RK stage")
    _override(gauge, '--theta', 'gauge', 'theta', float, "dissipative phase")

    ramp = sub.add_parser('gauge-ramp', help="Trotterized ramp of the RK coupling")
    _override(ramp, '--dims', 'gauge', 'dims', _dims, "cubic lattice sizes, e.g. 2,2,1")
    _override(ramp, '--phi-scales', 'ramp', 'phi_scales', _floats, "J tau / hbar values, e.g. 0.2,0.1")
    _override(ramp, '--duration', 'ramp', 'duration', float, "ramp length in hbar / J")

    verify = sub.add_parser('verify', help="dense-matrix oracle checks")
    verify.add_argument('--skip-engines', action='store_true',
                        help="leave out the walker / dense comparison")

    ryd = sub.add_parser('ryd-params', help="gate time, blockade radius and energy scales")
    _override(ryd, '--omega-p', 'rydberg', 'omega_p', float, "probe Rabi frequency [rad/s]")
    _override(ryd, '--omega-c', 'rydberg', 'omega_c', float, "coupling Rabi frequency [rad/s]")
    _override(ryd, '--delta', 'rydberg', 'delta', float, "detuning [rad/s]")
    _override(ryd, '--c6', 'rydberg', 'c6', float, "van der Waals C6 [rad/s m^6]")
    _override(ryd, '--tau', 'rydberg', 'tau', float, "step time [s]")
    _override(ryd, '--z', 'rydberg', 'z', int, "sublattice count")
    return parser


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    for dest, value in vars(args).items():
        if value is None or '__' not in dest:
            continue
        section, key = dest.split('__', 1)
        setattr(getattr(config, section), key, value)
    config.run.experiment = args.experiment
    return config.validate()


def toric_model(config: RunConfig) -> ToricModel:
    section = config.toric
    q = OperatorSum.from_text(section.q) if section.q else None
    error = ErrorModel(q_norm=section.q_norm, q=q, enabled=section.errors)
    return ToricModel(build_toric(section.L), e0=section.e0, phi=section.phi, theta=section.theta,
                      error=error, p_heat=section.p_heat, schedule=section.schedule,
                      tau=section.tau)


def gauge_model(config: RunConfig) -> GaugeModel:
    section = config.gauge
    return GaugeModel(build_cubic(*section.dims), u=section.u, j=section.j, v=section.v,
                      theta=section.theta, tau=section.tau, ramp_duration=config.ramp.duration)


class DigitalSimulator:
    def __init__(self, terminal: Optional[ReportTerminal] = None):
        self.terminal = terminal or ReportTerminal()
        self.commands: Dict[str, Callable[[RunConfig, argparse.Namespace], int]] = {
            'toric-cool': self.cmd_toric_cool,
            'gauge-cool': self.cmd_gauge_cool,
            'gauge-ramp': self.cmd_gauge_ramp,
            'verify': self.cmd_verify,
            'ryd-params': self.cmd_ryd_params,
        }

    def execute(self, config: RunConfig, args: argparse.Namespace) -> int:
        command = config.run.experiment
        if command not in self.commands:
            raise UsageError(f"Unknown command: {command}")
        return self.commands[command](config, args)

    def _out(self, config: RunConfig, name: str) -> str:
        return os.path.join(config.run.out_dir, config.run.experiment.replace('-', '_'), name)

    def _summary(self, config: RunConfig, model: Dict[str, object]) -> RunSummary:
        return RunSummary(experiment=config.run.experiment, seed=config.run.master_seed,
                          config=config.as_dict(), model=model)

    def _finish(self, summary: RunSummary, config: RunConfig, files: Sequence[str]):
        for path in files:
            summary.add_file(path)
        summary.finish()
        path = summary.save(self._out(config, 'summary.json'))
        self.terminal.print_success(f"Results in {os.path.dirname(path)} "
                                    f"(model {summary.model_hash[:12]})")

    def cmd_toric_cool(self, config: RunConfig, args: argparse.Namespace) -> int:
        run = config.run
        model = toric_model(config)
        result = cool_toric(model, run.sweeps, run.trajectories, config.toric.engine,
                            run.master_seed, run.workers, config.toric.walker_order)
        plaquette, vertex = result.sector_means()
        means = {'density': result.mean, 'density_plaquette': plaquette, 'density_vertex': vertex}
        errors = {
            'density': result.stderr,
            'density_plaquette': _stderr(result.plaquette_densities),
            'density_vertex': _stderr(result.vertex_densities),
        }
        files = [write_aggregate_csv(self._out(config, 'mean.csv'), result.times, means, errors)]
        if run.traces:
            files.append(write_trajectory_csv(self._out(config, 'traces.csv'),
                                              result.records[:run.traces]))

        plateau, plateau_err = result.plateau()
        t_eff = result.effective_temperature(model.e0)
        summary = self._summary(config, result.model)
        summary.aggregates = {
            'final_density': float(result.mean[-1]),
            'final_density_stderr': float(result.stderr[-1]),
            'final_density_plaquette': float(plaquette[-1]),
            'final_density_vertex': float(vertex[-1]),
            'plateau_density': plateau,
            'plateau_stderr': plateau_err,
        }
        summary.derived = {
            'T_eff': t_eff,
            'stationarity_pvalue': result.stationarity_pvalue(),
            'trend_non_increasing': bool(result.mean[-1] <= result.mean[0] + 1e-12),
        }

        self.terminal.show_series(f"Toric cooling ({result.engine}, L={model.lattice.L})",
                                  result.times, means, errors)
        self.terminal.show_summary("Toric cooling", {**summary.aggregates, **summary.derived})
        self._finish(summary, config, files)
        return EXIT_OK

    def cmd_gauge_cool(self, config: RunConfig, args: argparse.Namespace) -> int:
        section = config.gauge
        model = gauge_model(config)
        result = cool_gauge(model, section.sweeps, section.trajectories, config.run.master_seed,
                            config.run.workers, section.initial, section.constraint_sweeps)
        means = {'charge_density': result.mean('charge'), 'rk_fidelity': result.mean('rk_fidelity')}
        errors = {'charge_density': result.stderr('charge'),
                  'rk_fidelity': result.stderr('rk_fidelity')}
        files = [write_aggregate_csv(self._out(config, 'mean.csv'), result.times, means, errors)]
        if config.run.traces:
            files.append(write_trajectory_csv(self._out(config, 'traces.csv'),
                                              result.records[:config.run.traces]))

        summary = self._summary(config, result.model)
        summary.aggregates = {
            'final_charge_density': float(means['charge_density'][-1]),
            'final_rk_fidelity': float(means['rk_fidelity'][-1]),
        }
        summary.derived = {
            'final_fidelity': float(means['rk_fidelity'][-1]),
            'fidelity_trend_ok': result.fidelity_trend_ok(),
            'initial': result.initial,
        }

        self.terminal.show_series(f"Gauge cooling dims={model.lattice.dims}", result.times,
                                  means, errors)
        self.terminal.show_summary("Gauge cooling", {**summary.aggregates, **summary.derived})
        self._finish(summary, config, files)
        return EXIT_OK

    def cmd_gauge_ramp(self, config: RunConfig, args: argparse.Namespace) -> int:
        model = gauge_model(config)
        results = [adiabatic_ramp(model, scale) for scale in config.ramp.phi_scales]
        files = [write_ramp_csv(self._out(config, 'ramp.csv'), results)]

        final_errors = [r.final_error for r in results]
        summary = self._summary(config, model.describe())
        summary.aggregates = {
            'final_errors': {repr(r.phi_scale): r.final_error for r in results},
            'initial_errors': {repr(r.phi_scale): float(r.errors[0]) for r in results},
        }
        summary.derived = {
            'errors_decrease': bool(all(b < a for a, b in zip(final_errors, final_errors[1:]))),
        }

        self.terminal.show_table(
            "Adiabatic ramp", ('phi_scale', 'steps', '|E - E0| at t=0', 'final |E - E0|'),
            [(r.phi_scale, int(r.steps[-1]), float(r.errors[0]), r.final_error) for r in results])
        self.terminal.show_summary("Adiabatic ramp", summary.derived)
        self._finish(summary, config, files)
        return EXIT_OK

    def cmd_verify(self, config: RunConfig, args: argparse.Namespace) -> int:
        checks = run_checks(seed=config.run.master_seed,
                            include_engines=not getattr(args, 'skip_engines', False))
        self.terminal.show_checks(checks)
        summary = self._summary(config, {})
        summary.aggregates = {c.name: {'measured': c.measured, 'tolerance': c.tolerance,
                                       'passed': c.passed} for c in checks}
        self._finish(summary, config, [])
        failed = [c for c in checks if not c.passed]
        if failed:
            self.terminal.print_error(f"{len(failed)} of {len(checks)} checks failed")
            return EXIT_VERIFY_FAILED
        self.terminal.print_success(f"All {len(checks)} checks passed")
        return EXIT_OK

    def cmd_ryd_params(self, config: RunConfig, args: argparse.Namespace) -> int:
        section = config.rydberg
        params = RydbergParams(omega_p=section.omega_p, omega_c=section.omega_c,
                               delta=section.delta, c6=section.c6, tau=section.tau, z=section.z,
                               gates_per_sublattice=section.gates_per_sublattice,
                               overhead=section.overhead)
        report = parameter_report(params, theta=config.toric.theta)
        self.terminal.console.print_json(data=report)
        return EXIT_OK


def _stderr(values: np.ndarray) -> np.ndarray:
    if values.shape[0] < 2:
        return np.zeros(values.shape[1])
    return values.std(axis=0, ddof=1) / np.sqrt(values.shape[0])


def main(argv: Optional[List[str]] = None, terminal: Optional[ReportTerminal] = None) -> int:
    """Main entry point; returns the exit code"""
    terminal = terminal or ReportTerminal()
    try:
        args = build_parser().parse_args(argv)
        setup_logging(args.verbose)
        config = RunConfig.load(args.config) if args.config else RunConfig()
        config = apply_overrides(config, args)
        logger.debug("Effective configuration (model %s):\n%s",
                     model_hash(config.as_dict())[:12], config.to_text())
        return DigitalSimulator(terminal).execute(config, args)
    except ValueError as e:
        terminal.print_error(str(e))
        return EXIT_USAGE
    except OSError as e:
        terminal.print_error(f"File error: {e}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        terminal.print_warning("Interrupted")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
