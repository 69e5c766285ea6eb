import math
from dataclasses import dataclass

import numpy as np

from nla.errors import ConfigError, DegenerateHeraldError
from nla.protocols.schemes import Scheme, run_protocol
from nla.utils.helpers import get_logger

logger = get_logger('nla.analysis.gain')

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2

T_LOW = 0.001
T_HIGH = 0.999
T_TOL = 1e-4
BRACKET_SAMPLES = 9
FALLBACK_GRID = 200


@dataclass(frozen=True)
class TuneResult:
    t_star: float
    F_star: float
    iterations: int
    method: str = 'golden_section'

    def to_dict(self):
        return {'t_star': self.t_star, 'F_star': self.F_star,
                'iterations': self.iterations, 'method': self.method}


def optimal_gain_setting(scheme, tau, eta):
    """Ancilla transmissivity that restores the balanced output for the given loss"""
    scheme = Scheme(scheme)
    if not 0.0 < tau < 1.0:
        raise ConfigError('tau', f"tau must lie in (0, 1), got {tau}")
    if not 0.0 < eta <= 1.0:
        raise ConfigError('eta', f"eta must lie in (0, 1], got {eta}")
    if scheme is Scheme.END:
        return tau / (eta + tau - tau * eta)
    if scheme is Scheme.MIDDLE:
        return tau
    raise ConfigError('scheme', "Direct transmission has no gain setting")


def golden_section_max(f, a, b, tol=T_TOL):
    """
    Golden-section search for the maximum of a unimodal f on [a, b].

    Returns (x, f(x), iterations) with the final bracket narrower than tol.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)
    iterations = 0
    while h > tol:
        if yc > yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)
        iterations += 1
    if yc > yd:
        return c, yc, iterations
    return d, yd, iterations


def _objective(template, scheme):
    def fidelity_at(t):
        result = run_protocol(template.with_values(scheme=scheme, t=float(t)))
        if result.degenerate or not math.isfinite(result.F):
            return -math.inf
        return result.F
    return fidelity_at


def _bracket_is_unimodal(f, lo, hi):
    interior = np.linspace(lo, hi, BRACKET_SAMPLES + 2)[1:-1]
    best_inside = max(f(t) for t in interior)
    return max(f(lo), f(hi)) <= best_inside


def tune_gain_for_fidelity(template, scheme=None, lo=T_LOW, hi=T_HIGH, tol=T_TOL):
    """Maximize the one-photon fidelity over t with every other parameter held fixed"""
    scheme = Scheme(scheme or template.scheme)
    if scheme is Scheme.DIRECT:
        raise ConfigError('scheme', "Direct transmission has no gain to tune")
    f = _objective(template, scheme)

    if _bracket_is_unimodal(f, lo, hi):
        t_star, f_star, iterations = golden_section_max(f, lo, hi, tol)
        method = 'golden_section'
    else:
        logger.warning(f"F(t) for {scheme.value} is not unimodal on [{lo}, {hi}], "
                       f"falling back to a {FALLBACK_GRID}-point grid scan")
        grid = np.linspace(lo, hi, FALLBACK_GRID)
        values = [f(t) for t in grid]
        k = int(np.argmax(values))
        t_star, f_star, iterations = golden_section_max(
            f, grid[max(k - 1, 0)], grid[min(k + 1, FALLBACK_GRID - 1)], tol)
        iterations += FALLBACK_GRID
        method = 'grid_scan'

    # The analytic setting is a candidate too
    analytic = optimal_gain_setting(scheme, template.tau, template.eta)
    if lo < analytic < hi:
        f_analytic = f(analytic)
        if f_analytic > f_star:
            t_star, f_star = analytic, f_analytic

    if not math.isfinite(f_star):
        raise DegenerateHeraldError(f"Herald never fires for {scheme.value} on t in [{lo}, {hi}]")

    logger.info(f"Tuned {scheme.value} at eta={template.eta:.6g}: t*={t_star:.6g}, F*={f_star:.9g} "
                f"after {iterations} iterations")
    return TuneResult(float(t_star), float(f_star), iterations, method)
