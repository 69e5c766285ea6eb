"""
Parameter sweeps over channel transmissivity or fibre distance, scaling fits and
the crossover against direct transmission.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score

from nla import config
from nla.analysis.gain import optimal_gain_setting, tune_gain_for_fidelity
from nla.devices.detectors import HeraldPolicy
from nla.errors import ConfigError, FitError, SimulationError
from nla.protocols.schemes import ProtocolConfig, Scheme, run_protocol
from nla.utils.helpers import get_logger

logger = get_logger('nla.analysis.sweep')

SWEEP_COLUMNS = ['scheme', 'tau', 't', 'eta', 'distance_km', 'eps1', 'eps2', 'delta1', 'delta2',
                 'dark_prob', 'pnr', 'herald_policy', 'p', 'F', 'F_full', 'X', 'pop_vac', 'pop_one',
                 'pop_two']
EXTRA_COLUMNS = ['purity', 'heralding_efficiency', 'degenerate', 'error']
VARIABLES = ('eta', 'distance_km')
T_MODES = ('optimal', 'tuned', 'fixed')


def eta_from_distance(distance_km, loss_db_per_km=config.FIBRE_LOSS_DB_PER_KM):
    """Fibre transmissivity 10^(-loss * L / 10)"""
    if distance_km < 0 or not math.isfinite(distance_km):
        raise ConfigError('distance_km', f"Distance must be finite and non-negative, got {distance_km}")
    return 10.0 ** (-loss_db_per_km * distance_km / 10.0)


def distance_from_eta(eta, loss_db_per_km=config.FIBRE_LOSS_DB_PER_KM):
    if not 0.0 < eta <= 1.0:
        raise ConfigError('eta', f"eta must lie in (0, 1], got {eta}")
    return -10.0 * math.log10(eta) / loss_db_per_km


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional sweep of a protocol template over eta or distance"""
    variable: str
    grid: tuple
    fixed: ProtocolConfig = field(default_factory=ProtocolConfig)
    t_mode: str = 'optimal'
    fixed_t: float = None
    schemes: tuple = ()
    preset: str = None
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ConfigError('variable', f"variable must be one of {VARIABLES}, got '{self.variable}'")
        if self.t_mode not in T_MODES:
            raise ConfigError('t_mode', f"t_mode must be one of {T_MODES}, got '{self.t_mode}'")
        grid = tuple(float(v) for v in self.grid)
        if not grid:
            raise ConfigError('grid', "Sweep grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError('grid', "Sweep grid must be strictly increasing")
        if self.variable == 'eta' and not all(0.0 < v <= 1.0 for v in grid):
            raise ConfigError('grid', "eta grid values must lie in (0, 1]")
        if self.variable == 'distance_km' and grid[0] < 0:
            raise ConfigError('grid', "distance grid values must be non-negative")
        object.__setattr__(self, 'grid', grid)

        schemes = tuple(Scheme(s) for s in (self.schemes or (self.fixed.scheme,)))
        object.__setattr__(self, 'schemes', schemes)
        if self.t_mode == 'fixed':
            t = self.fixed.t if self.fixed_t is None else self.fixed_t
            if not 0.0 < t < 1.0:
                raise ConfigError('t', f"t must lie in (0, 1), got {t}")
            object.__setattr__(self, 'fixed_t', float(t))

    def template_for(self, scheme):
        """Protocol template of one scheme, with the preset's device parameters when one is set"""
        flat = {'scheme': scheme.value}
        if self.preset:
            flat.update(config.preset_values(self.preset, scheme.value))
        flat.update(self.overrides)
        return self.fixed.with_parameters(**flat)


def _gain_for(template, t_mode, fixed_t):
    if template.scheme is Scheme.DIRECT:
        return template.t
    if t_mode == 'fixed':
        return fixed_t
    if t_mode == 'tuned':
        return tune_gain_for_fidelity(template).t_star
    return optimal_gain_setting(template.scheme, template.tau, template.eta)


def _failed_row(template, eta, distance_km, error):
    row = template.parameters()
    row.update({column: math.nan for column in SWEEP_COLUMNS + EXTRA_COLUMNS if column not in row})
    row.update({'eta': eta, 'distance_km': distance_km, 'degenerate': False, 'error': error})
    return row


def evaluate_point(spec, scheme, value):
    """Run one grid point; failures become a row carrying the error message"""
    template = spec.template_for(scheme)
    if spec.variable == 'eta':
        eta, distance_km = value, distance_from_eta(value)
    else:
        eta, distance_km = eta_from_distance(value), value
    if eta <= 0.0:
        return _failed_row(template, eta, distance_km, "transmissivity underflows to zero")

    try:
        at_eta = template.with_values(eta=eta)
        t = _gain_for(at_eta, spec.t_mode, spec.fixed_t)
        result = run_protocol(at_eta.with_values(t=t))
    except (SimulationError, ConfigError) as e:
        logger.warning(f"Sweep point {scheme.value} {spec.variable}={value:.6g} failed: {e}")
        return _failed_row(template, eta, distance_km, str(e))

    row = result.row()
    row['distance_km'] = distance_km
    row['error'] = 'degenerate herald' if result.degenerate else ''
    return row


def run_sweep(spec, jobs=None):
    """One row per grid point per scheme, in scheme then grid order"""
    jobs = config.SWEEP_JOBS if jobs is None else jobs
    points = [(scheme, value) for scheme in spec.schemes for value in spec.grid]
    logger.info(f"Sweeping {spec.variable} over {len(spec.grid)} points for "
                f"{', '.join(s.value for s in spec.schemes)} with {jobs} job(s)")

    rows = Parallel(n_jobs=jobs, prefer='threads')(
        delayed(evaluate_point)(spec, scheme, value) for scheme, value in points)

    table = pd.DataFrame(rows)
    columns = SWEEP_COLUMNS + EXTRA_COLUMNS
    return table.reindex(columns=columns)


def write_sweep_csv(table, path_or_buffer=None):
    """Write the sweep columns with 12 significant digits; returns the text when no target is given"""
    return table[SWEEP_COLUMNS].to_csv(path_or_buffer, index=False, float_format='%.12g',
                                       lineterminator='\n')


def read_sweep_csv(path_or_buffer):
    return pd.read_csv(path_or_buffer)


@dataclass(frozen=True)
class FitReport:
    exponent: float
    r_squared: float
    range: tuple
    intercept: float = math.nan
    points: int = 0

    def to_dict(self):
        return {'exponent': self.exponent, 'r_squared': self.r_squared, 'range': list(self.range),
                'intercept': self.intercept, 'points': self.points}


def _as_frame(rows):
    if isinstance(rows, pd.DataFrame):
        return rows
    records = [row.row() if hasattr(row, 'row') else dict(row) for row in rows]
    return pd.DataFrame(records)


def fit_scaling_exponent(rows, lo=1e-3, hi=1e-2):
    """Least-squares slope of log p against log eta over eta in [lo, hi]"""
    frame = _as_frame(rows)
    if 'eta' not in frame or 'p' not in frame:
        raise FitError("Rows need 'eta' and 'p' columns")
    window = frame[(frame['eta'] >= lo) & (frame['eta'] <= hi)]
    if len(window) < 4:
        raise FitError(f"Need at least 4 rows with eta in [{lo}, {hi}], got {len(window)}")
    p = window['p'].to_numpy(dtype=float)
    if not np.all(p > 0):
        raise FitError("Herald probability must be positive on the fit window")

    log_eta = np.log(window['eta'].to_numpy(dtype=float)).reshape(-1, 1)
    log_p = np.log(p)
    model = LinearRegression().fit(log_eta, log_p)
    r_squared = float(np.clip(r2_score(log_p, model.predict(log_eta)), 0.0, 1.0))
    report = FitReport(float(model.coef_[0]), r_squared, (lo, hi), float(model.intercept_), len(window))
    logger.info(f"Scaling exponent {report.exponent:.6g} (R^2={report.r_squared:.6g}) "
                f"over {report.points} points")
    return report


@dataclass(frozen=True)
class CrossoverReport:
    distance_km: float
    eta: float
    p_middle: float
    p_direct: float
    bracket_km: tuple
    exceeds_at_start: bool
    found: bool

    def to_dict(self):
        return {'distance_km': self.distance_km, 'eta': self.eta, 'p_middle': self.p_middle,
                'p_direct': self.p_direct, 'bracket_km': list(self.bracket_km),
                'exceeds_at_start': self.exceeds_at_start, 'found': self.found}


def find_crossover(template, max_km=300.0, step_km=5.0, preset=None, t_mode='optimal', tol_km=1e-6,
                   overrides=None, fold_char_efficiency=True, herald_policy=HeraldPolicy.SINGLE_PATTERN):
    """
    Shortest distance at which the middle scheme's herald probability exceeds
    direct transmission.

    Direct p already counts the characterization detector, so by default the
    middle scheme's p is folded with it too and heralds on a single pattern.
    Scans a distance grid for the first sign change of p(middle) - p(direct),
    then bisects the bracket down to tol_km.
    """
    if max_km <= 0 or step_km <= 0:
        raise ConfigError('max_km', "Crossover range and step must be positive")
    overrides = {'herald_policy': HeraldPolicy(herald_policy).value, **(overrides or {})}
    template = template.with_values(fold_char_efficiency=fold_char_efficiency)
    spec = SweepSpec('distance_km', (0.0, max_km), fixed=template, t_mode=t_mode,
                     schemes=(Scheme.MIDDLE, Scheme.DIRECT), preset=preset, overrides=overrides)

    def probabilities(distance_km):
        middle = evaluate_point(spec, Scheme.MIDDLE, distance_km)
        direct = evaluate_point(spec, Scheme.DIRECT, distance_km)
        if middle['error'] or direct['error']:
            raise SimulationError(f"Crossover evaluation failed at {distance_km:.6g} km: "
                                  f"{middle['error'] or direct['error']}")
        return middle['p'], direct['p']

    def report(distance_km, bracket, exceeds_at_start, found):
        p_middle, p_direct = probabilities(distance_km)
        return CrossoverReport(distance_km, eta_from_distance(distance_km), p_middle, p_direct,
                               bracket, exceeds_at_start, found)

    p_middle, p_direct = probabilities(0.0)
    if p_middle > p_direct:
        logger.info("Middle scheme already exceeds direct transmission at 0 km")
        return report(0.0, (0.0, 0.0), True, True)

    steps = int(math.ceil(max_km / step_km))
    previous = 0.0
    for k in range(1, steps + 1):
        distance_km = min(k * step_km, max_km)
        p_middle, p_direct = probabilities(distance_km)
        if p_middle > p_direct:
            lo, hi = previous, distance_km
            while hi - lo > tol_km:
                mid = 0.5 * (lo + hi)
                p_middle, p_direct = probabilities(mid)
                if p_middle > p_direct:
                    hi = mid
                else:
                    lo = mid
            logger.info(f"Crossover at {hi:.6f} km")
            return report(hi, (lo, hi), False, True)
        previous = distance_km

    logger.warning(f"No crossover found up to {max_km} km")
    return CrossoverReport(math.nan, math.nan, p_middle, p_direct, (previous, max_km), False, False)
