"""
Imperfect single-photon sources and detectors.

A source of efficiency eps emits a single photon through a beam splitter of
transmissivity eps. A detector of efficiency delta sees the signal through a
beam splitter of transmissivity delta, plus thermal background photons whose
mean nu = d / (1 - d) is calibrated so that an empty input clicks with
probability d per heralding window. The background arrives in a mode the
signal does not interfere with, so detected counts are the sum of a
binomially thinned signal count and a thermal count.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from nla import config
from nla.core.fock import DensityOperator, PovmElement, apply_loss, get_basis
from nla.errors import ConfigError, TruncationOverflowError
from nla.utils.helpers import get_logger

logger = get_logger('nla.devices.detectors')


class HeraldPolicy(str, Enum):
    SINGLE_PATTERN = 'single_pattern'
    BOTH_PATTERNS = 'both_patterns'


@dataclass(frozen=True)
class SourceModel:
    """Single-photon source with emission efficiency eps"""
    efficiency: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigError('eps', f"Source efficiency must lie in [0, 1], got {self.efficiency}")


@dataclass(frozen=True)
class DetectorModel:
    """Detector with efficiency delta, per-window dark click probability d and optional number resolution"""
    efficiency: float = 1.0
    dark_click_prob: float = 0.0
    pnr: bool = False

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigError('delta', f"Detector efficiency must lie in [0, 1], got {self.efficiency}")
        if not 0.0 <= self.dark_click_prob < 1.0:
            raise ConfigError('dark_prob', f"Dark click probability must lie in [0, 1), got {self.dark_click_prob}")

    @property
    def thermal_mean(self):
        return self.dark_click_prob / (1.0 - self.dark_click_prob)

    @property
    def click_label(self):
        return 'one' if self.pnr else 'click'

    @property
    def no_click_label(self):
        return 'zero' if self.pnr else 'no_click'

    @property
    def labels(self):
        return ('zero', 'one', 'many') if self.pnr else ('no_click', 'click')


@dataclass(frozen=True, eq=False)
class ThermalState:
    mean_photons: float
    density: DensityOperator
    tail_mass: float

    @property
    def basis(self):
        return self.density.basis

    @property
    def distribution(self):
        return np.real(np.diag(self.density.matrix))


@dataclass(frozen=True)
class HeraldPattern:
    """Accepted outcome pair of the two heralding detectors"""
    outcomes: tuple
    phase_flip: bool = False

    @property
    def name(self):
        return '/'.join(self.outcomes)


def thermal_state(mean_photons, photon_cutoff=config.DEFAULT_CUTOFF, tolerance=config.TRUNCATION_TOL):
    """Truncated single-mode thermal state P(n) = nu^n / (1 + nu)^(n + 1)"""
    if mean_photons < 0 or not np.isfinite(mean_photons):
        raise ConfigError('dark_prob', f"Thermal mean must be finite and non-negative, got {mean_photons}")
    ratio = mean_photons / (1.0 + mean_photons)
    n = np.arange(photon_cutoff + 1)
    probs = (1.0 - ratio) * ratio ** n
    tail = ratio ** (photon_cutoff + 1)
    if tail >= tolerance:
        raise TruncationOverflowError(
            f"Thermal state with mean {mean_photons:.3g} leaves {tail:.3g} above cutoff {photon_cutoff}")
    basis = get_basis(1, photon_cutoff)
    return ThermalState(mean_photons, DensityOperator(basis, np.diag(probs)), float(tail))


def lossy_single_photon(source, photon_cutoff=config.DEFAULT_CUTOFF):
    """eps |1><1| + (1 - eps) |0><0|"""
    photon = DensityOperator.from_occupation((1,), photon_cutoff)
    return apply_loss(photon, 0, source.efficiency)


def count_distribution(detector, photons, photon_cutoff=config.DEFAULT_CUTOFF):
    """Distribution of registered counts for an n-photon input, before the ideal counting stage"""
    signal = DensityOperator.from_occupation((photons,), photon_cutoff)
    thinned = np.real(np.diag(apply_loss(signal, 0, detector.efficiency).matrix))
    noise = thermal_state(detector.thermal_mean, max(photon_cutoff, 1)).distribution
    return np.convolve(thinned, noise)


@lru_cache(maxsize=None)
def detection_map(detector, photon_cutoff=config.DEFAULT_CUTOFF):
    """POVM of a detector on its local space, one element per outcome label"""
    p_zero = np.zeros(photon_cutoff + 1)
    p_one = np.zeros(photon_cutoff + 1)
    for n in range(photon_cutoff + 1):
        counts = count_distribution(detector, n, photon_cutoff)
        p_zero[n] = counts[0]
        p_one[n] = counts[1]

    if detector.pnr:
        elements = (
            PovmElement.from_diagonal(p_zero, 'zero'),
            PovmElement.from_diagonal(p_one, 'one'),
            PovmElement.from_diagonal(np.clip(1.0 - p_zero - p_one, 0.0, None), 'many'),
        )
    else:
        elements = (
            PovmElement.from_diagonal(p_zero, 'no_click'),
            PovmElement.from_diagonal(1.0 - p_zero, 'click'),
        )
    logger.debug(f"Built detection map for {detector} at cutoff {photon_cutoff}")
    return elements


def povm_element(detector, label, photon_cutoff=config.DEFAULT_CUTOFF):
    for element in detection_map(detector, photon_cutoff):
        if element.label == label:
            return element
    raise ConfigError('label', f"Detector {detector} has no outcome '{label}'")


def herald_pattern_map(detector_a, detector_b, policy=HeraldPolicy.BOTH_PATTERNS):
    """
    Outcome patterns accepted as a successful herald.

    The first pattern is (click on A, nothing on B). The mirrored pattern carries
    a pi phase error on the output, flagged for feed-forward correction.
    """
    policy = HeraldPolicy(policy)
    patterns = [HeraldPattern((detector_a.click_label, detector_b.no_click_label))]
    if policy is HeraldPolicy.BOTH_PATTERNS:
        patterns.append(HeraldPattern((detector_a.no_click_label, detector_b.click_label), phase_flip=True))
    return tuple(patterns)
