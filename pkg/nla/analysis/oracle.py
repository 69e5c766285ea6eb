"""
Trajectory sampling of photon paths and detector outcomes, used as an
independent check of the density-matrix results.
"""

import math
from dataclasses import dataclass

import numpy as np

from nla import config
from nla.devices.detectors import HeraldPolicy
from nla.errors import ConfigError
from nla.protocols.schemes import Scheme, direct_transmission_tau
from nla.utils.helpers import get_logger

logger = get_logger('nla.analysis.oracle')


@dataclass(frozen=True)
class OracleEstimate:
    p_hat: float
    p_se: float
    X_hat: float
    X_se: float
    shots: int
    heralded: int
    seed: int

    def to_dict(self):
        return {'p_hat': self.p_hat, 'p_se': self.p_se, 'X_hat': self.X_hat, 'X_se': self.X_se,
                'shots': self.shots, 'heralded': self.heralded, 'seed': self.seed}


def _survives(rng, present, efficiency):
    return present & (rng.random(present.shape) < efficiency)


def _registered_counts(rng, photons, detector):
    """Thinned signal plus geometric background with P(empty window) = 1 - d"""
    counts = rng.binomial(photons, detector.efficiency)
    background = rng.geometric(1.0 - detector.dark_click_prob, photons.shape) - 1
    return counts + background


def _clicks(counts, detector):
    return counts == 1 if detector.pnr else counts >= 1


def _ratio_estimate(n_one, n_vac):
    if n_vac == 0:
        return (math.inf if n_one else math.nan), math.nan
    x = n_one / n_vac
    if n_one == 0:
        return 0.0, math.nan
    return x, x * math.sqrt(1.0 / n_one + 1.0 / n_vac)


def _sample_direct(rng, config_, shots):
    tau = direct_transmission_tau(config_)
    delta_a = config_.char_detectors[0].efficiency
    delta_b = config_.char_detectors[1].efficiency

    emitted = rng.random(shots) < config_.source_alice.efficiency
    in_a2 = rng.random(shots) >= tau
    survived = rng.random(shots) < config_.eta
    detected = rng.random(shots) < delta_b

    accepted = emitted & survived & detected
    out_a1 = _survives(rng, emitted & ~in_a2, delta_a)
    out_a2 = emitted & in_a2 & survived & detected
    photons = out_a1.astype(int) + out_a2.astype(int)
    # No herald conditions the received state
    return accepted, np.ones(shots, dtype=bool), photons


def _sample_amplified(rng, config_, shots):
    tau, t = config_.tau, config_.t
    det_a, det_b = config_.herald_detectors
    delta_a = config_.char_detectors[0].efficiency
    delta_b = config_.char_detectors[1].efficiency

    alice = rng.random(shots) < config_.source_alice.efficiency
    alice_a2 = alice & (rng.random(shots) >= tau)
    alice_a1 = alice & ~alice_a2
    bob = rng.random(shots) < config_.source_bob.efficiency
    bob_b1 = bob & (rng.random(shots) < 1.0 - t)
    bob_b2 = bob & ~bob_b1

    if config_.scheme is Scheme.END:
        n_a2 = _survives(rng, alice_a2, config_.eta)
        n_b1 = bob_b1
    else:
        half = math.sqrt(config_.eta)
        n_a2 = _survives(rng, alice_a2, half)
        n_b1 = _survives(rng, bob_b1, half)

    # Routing through the 50:50 splitter; port A faces b1, port B faces a2
    first = rng.random(shots) < 0.5
    second = rng.random(shots) < 0.5
    overlapping = rng.random(shots) < config_.visibility
    single = n_a2 ^ n_b1
    pair = n_a2 & n_b1
    bunched = pair & overlapping
    independent = pair & ~overlapping

    into_a = np.zeros(shots, dtype=int)
    into_a += (single & first).astype(int)
    into_a += 2 * (bunched & first).astype(int)
    into_a += (independent & first).astype(int) + (independent & second).astype(int)
    total = single.astype(int) + 2 * pair.astype(int)
    into_b = total - into_a

    counts_a = _registered_counts(rng, into_a, det_a)
    counts_b = _registered_counts(rng, into_b, det_b)
    accepted = _clicks(counts_a, det_a) & (counts_b == 0)
    if config_.herald_policy is HeraldPolicy.BOTH_PATTERNS:
        accepted |= (counts_a == 0) & _clicks(counts_b, det_b)

    photons = _survives(rng, alice_a1, delta_a).astype(int) + _survives(rng, bob_b2, delta_b).astype(int)
    kept = accepted.copy()
    if config_.fold_char_efficiency:
        accepted &= photons >= 1
    return accepted, kept, photons


def monte_carlo_oracle(config_, shots, seed=None):
    """Estimate (p, X) from sampled trajectories, with binomial standard errors"""
    if shots < 1:
        raise ConfigError('shots', f"shots must be at least 1, got {shots}")
    seed = config.DEFAULT_SEED if seed is None else seed
    rng = np.random.default_rng(seed)

    if config_.scheme is Scheme.DIRECT:
        accepted, kept, photons = _sample_direct(rng, config_, shots)
    else:
        accepted, kept, photons = _sample_amplified(rng, config_, shots)

    heralded = int(accepted.sum())
    p_hat = heralded / shots
    p_se = math.sqrt(p_hat * (1.0 - p_hat) / shots)
    n_vac = int((kept & (photons == 0)).sum())
    n_one = int((kept & (photons == 1)).sum())
    x_hat, x_se = _ratio_estimate(n_one, n_vac)

    logger.info(f"Oracle {config_.scheme.value} with {shots} shots: p={p_hat:.6g} +/- {p_se:.2g}, "
                f"X={x_hat:.6g}")
    return OracleEstimate(p_hat, p_se, x_hat, x_se, shots, heralded, seed)
