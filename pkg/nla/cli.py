"""
Command-line front end: single runs, sweeps, gain tuning and the crossover search.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

import argparse
import json
import math
import sys

import pandas as pd

from nla import __version__, config
from nla.analysis.gain import optimal_gain_setting, tune_gain_for_fidelity
from nla.analysis.oracle import monte_carlo_oracle
from nla.analysis.sweep import (EXTRA_COLUMNS, SWEEP_COLUMNS, SweepSpec, distance_from_eta,
                                eta_from_distance, find_crossover, run_sweep, write_sweep_csv)
from nla.errors import ConfigError, FitError, SimulationError
from nla.protocols.schemes import ProtocolConfig, Scheme, run_protocol
from nla.utils.helpers import get_logger, round_sig, to_json

logger = get_logger('nla.cli')

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

DEVICE_KEYS = ('eps1', 'eps2', 'delta1', 'delta2', 'dark_prob')
FLOAT_KEYS = ('tau', 't', 'eta', 'distance_km', 'visibility', 'direct_fidelity', 'max_km') + DEVICE_KEYS
INT_KEYS = ('cutoff', 'loss_segments', 'jobs', 'seed', 'shots')
BOOL_KEYS = ('pnr', 'fold_char_efficiency')
STRING_KEYS = ('scheme', 'herald_policy', 'target', 'preset', 't_mode', 'variable', 'format', 'out')
LIST_KEYS = ('grid', 'schemes')
CONFIG_KEYS = FLOAT_KEYS + INT_KEYS + BOOL_KEYS + STRING_KEYS + LIST_KEYS
FORMATS = ('csv', 'json')


def load_config_file(path):
    """Flat JSON object of configuration keys; unknown keys are rejected"""
    try:
        with open(path, 'r') as f:
            values = json.load(f)
    except OSError as e:
        raise ConfigError('config', f"Cannot read config file {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError('config', f"Config file {path} is not valid JSON: {e}")
    if not isinstance(values, dict):
        raise ConfigError('config', f"Config file {path} must hold a flat JSON object")
    for key in values:
        if key not in CONFIG_KEYS:
            raise ConfigError(key, f"Unknown configuration key '{key}'")
    return values


def _coerce(key, value):
    try:
        if key in FLOAT_KEYS:
            return float(value)
        if key in INT_KEYS:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if key in BOOL_KEYS:
            if isinstance(value, str):
                if value.lower() not in ('true', 'false'):
                    raise ValueError(value)
                return value.lower() == 'true'
            if not isinstance(value, bool):
                raise ValueError(value)
            return value
        if key in LIST_KEYS:
            return value
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"Invalid value for '{key}': {value!r}")


def parse_grid(value):
    """'lo:hi:step' (inclusive) or a comma list, or a JSON list"""
    if isinstance(value, (list, tuple)):
        return tuple(_coerce_grid_value(v) for v in value)
    text = str(value).strip()
    if ':' in text:
        parts = text.split(':')
        if len(parts) != 3:
            raise ConfigError('grid', f"Grid range must be lo:hi:step, got '{text}'")
        lo, hi, step = (_coerce_grid_value(p) for p in parts)
        if step <= 0 or hi < lo:
            raise ConfigError('grid', f"Grid range needs step > 0 and hi >= lo, got '{text}'")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return tuple(round_sig(lo + k * step) for k in range(count))
    return tuple(_coerce_grid_value(v) for v in text.split(',') if v.strip())


def _coerce_grid_value(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError('grid', f"Invalid grid value {value!r}")


def parse_schemes(value):
    names = value if isinstance(value, (list, tuple)) else str(value).split(',')
    try:
        return tuple(Scheme(name.strip()) for name in names if name.strip())
    except ValueError:
        raise ConfigError('schemes', f"Unknown scheme in {value!r}")


def resolve_values(args):
    """Config file values overridden by explicit command-line flags"""
    values = load_config_file(args.config) if args.config else {}
    for key, value in vars(args).items():
        if key in ('command', 'config') or value is None:
            continue
        values[key] = value
    return {key: _coerce(key, value) for key, value in values.items()}


def _eta(values):
    if 'distance_km' in values and 'eta' in values:
        raise ConfigError('distance_km', "Give either eta or distance_km, not both")
    if 'distance_km' in values:
        return eta_from_distance(values['distance_km'])
    return values.get('eta', 1.0)


def device_overrides(values):
    return {key: values[key] for key in DEVICE_KEYS + ('pnr', 'herald_policy') if key in values}


def build_protocol_config(values, scheme=None):
    """ProtocolConfig from resolved values; device parameters come from the preset, then explicit keys"""
    try:
        scheme = Scheme(scheme or values.get('scheme', Scheme.MIDDLE.value))
    except ValueError:
        raise ConfigError('scheme', f"Unknown scheme '{values.get('scheme')}'")
    flat = {'scheme': scheme.value, 'tau': values.get('tau', 0.5), 'eta': _eta(values)}
    if values.get('preset'):
        flat.update(config.preset_values(values['preset'], scheme.value))
    flat.update(device_overrides(values))

    extras = {key: values[key] for key in ('cutoff', 'visibility', 'target', 'direct_fidelity',
                                           'loss_segments', 'fold_char_efficiency') if key in values}
    if 't' in values:
        flat['t'] = values['t']
    elif scheme is not Scheme.DIRECT:
        flat['t'] = optimal_gain_setting(scheme, flat['tau'], flat['eta'])
    return ProtocolConfig.from_parameters(**flat, **extras)


def _output_format(values, default, allowed=FORMATS):
    fmt = values.get('format', default)
    if fmt not in allowed:
        raise ConfigError('format', f"format must be one of {allowed}, got '{fmt}'")
    return fmt


def _emit(text, values):
    if not text.endswith('\n'):
        text += '\n'
    out = values.get('out')
    if out:
        with open(out, 'w', newline='') as f:
            f.write(text)
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(text)


def command_run(values):
    protocol = build_protocol_config(values)
    result = run_protocol(protocol)
    if result.degenerate:
        raise SimulationError(f"Herald never fires for {protocol.scheme.value} at eta={protocol.eta:.6g}")

    row = result.row()
    row['distance_km'] = distance_from_eta(protocol.eta)
    if _output_format(values, 'csv') == 'csv':
        table = pd.DataFrame([row]).reindex(columns=SWEEP_COLUMNS)
        return write_sweep_csv(table)

    record = {column: row[column] for column in SWEEP_COLUMNS + EXTRA_COLUMNS[:-2]}
    record['target'] = result.target_state_id
    record['pattern_probabilities'] = result.pattern_probabilities
    if 'shots' in values:
        estimate = monte_carlo_oracle(protocol, values['shots'], values.get('seed'))
        record['oracle'] = estimate.to_dict()
    return to_json(record)


def command_sweep(values):
    template = build_protocol_config({k: v for k, v in values.items() if k not in ('eta', 'distance_km')})
    if 'grid' not in values:
        raise ConfigError('grid', "Sweep needs a grid")
    schemes = parse_schemes(values['schemes']) if 'schemes' in values else (template.scheme,)
    spec = SweepSpec(variable=values.get('variable', 'eta'), grid=parse_grid(values['grid']),
                     fixed=template, t_mode=values.get('t_mode', 'optimal'), fixed_t=values.get('t'),
                     schemes=schemes, preset=values.get('preset'), overrides=device_overrides(values))
    table = run_sweep(spec, values.get('jobs'))
    if _output_format(values, 'csv') == 'json':
        return to_json(table[SWEEP_COLUMNS + EXTRA_COLUMNS].to_dict(orient='records'))
    return write_sweep_csv(table)


def command_tune(values):
    _output_format(values, 'json', allowed=('json',))
    template = build_protocol_config(values)
    tuned = tune_gain_for_fidelity(template)
    record = tuned.to_dict()
    record['t_analytic'] = optimal_gain_setting(template.scheme, template.tau, template.eta)
    return to_json(record)


def command_crossover(values):
    _output_format(values, 'json', allowed=('json',))
    preset = values.get('preset', 'methods')
    template = build_protocol_config({k: v for k, v in values.items()
                                      if k not in ('eta', 'distance_km', 'preset')},
                                     scheme=Scheme.MIDDLE)
    report = find_crossover(template, max_km=values.get('max_km', 300.0), preset=preset,
                            t_mode=values.get('t_mode', 'optimal'), overrides=device_overrides(values),
                            fold_char_efficiency=values.get('fold_char_efficiency', True))
    return to_json(report.to_dict())


COMMANDS = {
    'run': command_run,
    'sweep': command_sweep,
    'tune': command_tune,
    'crossover': command_crossover,
}


def _common_options():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='flat JSON config file')
    common.add_argument('--preset', help='device preset: ideal, methods, methods-middle, methods-end')
    common.add_argument('--scheme', choices=[s.value for s in Scheme])
    common.add_argument('--tau', type=float, help="Alice's beam splitter transmissivity")
    common.add_argument('--t', type=float, help='ancilla transmissivity (gain setting)')
    common.add_argument('--eta', type=float, help='channel transmissivity')
    common.add_argument('--distance-km', dest='distance_km', type=float, help='fibre length in km')
    common.add_argument('--eps1', type=float, help="Alice's source efficiency")
    common.add_argument('--eps2', type=float, help="Bob's source efficiency")
    common.add_argument('--delta1', type=float, help='heralding detector efficiency')
    common.add_argument('--delta2', type=float, help='characterization detector efficiency')
    common.add_argument('--dark-prob', dest='dark_prob', type=float, help='dark click probability per window')
    common.add_argument('--pnr', action=argparse.BooleanOptionalAction, default=None,
                        help='photon-number-resolving heralding detectors')
    common.add_argument('--herald-policy', dest='herald_policy', choices=['single_pattern', 'both_patterns'])
    common.add_argument('--cutoff', type=int, help='per-state photon-number cutoff')
    common.add_argument('--visibility', type=float, help='interference visibility at the herald splitter')
    common.add_argument('--direct-fidelity', dest='direct_fidelity', type=float)
    common.add_argument('--target', choices=['D', 'input'])
    common.add_argument('--loss-segments', dest='loss_segments', type=int, choices=[1, 2])
    common.add_argument('--fold-char-efficiency', dest='fold_char_efficiency',
                        action=argparse.BooleanOptionalAction, default=None)
    common.add_argument('--format', choices=FORMATS)
    common.add_argument('--out', help='output file (default stdout)')
    return common


def build_parser():
    parser = argparse.ArgumentParser(prog='nla', description='Heralded noiseless linear amplification simulator')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', required=True)
    common = _common_options()

    run = subparsers.add_parser('run', parents=[common], help='evaluate one configuration')
    run.add_argument('--shots', type=int, help='also estimate p and X by trajectory sampling')
    run.add_argument('--seed', type=int, help='sampling seed')

    sweep = subparsers.add_parser('sweep', parents=[common], help='sweep eta or distance')
    sweep.add_argument('--variable', choices=['eta', 'distance_km'])
    sweep.add_argument('--grid', help='lo:hi:step or a comma list')
    sweep.add_argument('--schemes', help='comma list of schemes')
    sweep.add_argument('--t-mode', dest='t_mode', choices=['optimal', 'tuned', 'fixed'])
    sweep.add_argument('--jobs', type=int, help='parallel evaluation threads')

    subparsers.add_parser('tune', parents=[common], help='maximize fidelity over t')

    crossover = subparsers.add_parser('crossover', parents=[common],
                                      help='distance where the middle scheme overtakes direct transmission')
    crossover.add_argument('--max-km', dest='max_km', type=float)
    crossover.add_argument('--t-mode', dest='t_mode', choices=['optimal', 'tuned'])
    return parser


def execute(argv=None):
    """Run one subcommand and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG

    try:
        values = resolve_values(args)
        _emit(COMMANDS[args.command](values), values)
    except ConfigError as e:
        logger.error(f"Invalid configuration '{e.key}': {e}")
        return EXIT_CONFIG
    except (SimulationError, FitError) as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    return EXIT_OK


def main():
    sys.exit(execute(sys.argv[1:]))


if __name__ == '__main__':
    main()
