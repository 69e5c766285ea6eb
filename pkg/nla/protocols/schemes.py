"""
Entanglement distillation with a quantum-scissors amplifier placed at Bob's end
or halfway along the channel, and the direct-transmission comparison.

Mode layout of the amplified schemes:
    0 a1   Alice's kept mode (lossless, output)
    1 a2   Alice's transmitted mode
    2 b1   Bob's ancilla mode sent to the herald beam splitter
    3 b2   Bob's kept mode (lossless, output)
    4, 5   distinguishable partners of a2 and b1, present only when visibility < 1

Heralding detector A watches the b1 port of the 50:50 beam splitter and detector
B the a2 port. A click on A alone leaves the output in phase with the target;
a click on B alone leaves a relative pi phase that feed-forward removes.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from nla import config
from nla.core.fock import (DensityOperator, apply_beam_splitter, apply_loss, apply_phase,
                           fidelity, measure_povm, photon_sector, purity, subspace_populations,
                           tensor_product)
from nla.devices.detectors import (DetectorModel, HeraldPolicy, SourceModel, herald_pattern_map,
                                   lossy_single_photon, povm_element)
from nla.errors import ConfigError, DegenerateHeraldError
from nla.utils.helpers import get_logger

logger = get_logger('nla.protocols.schemes')

A1, A2, B1, B2, GHOST_A2, GHOST_B1 = range(6)
TARGETS = ('D', 'input')


class Scheme(str, Enum):
    END = 'end'
    MIDDLE = 'middle'
    DIRECT = 'direct'


def _open_unit(key, value):
    if not 0.0 < value < 1.0:
        raise ConfigError(key, f"{key} must lie in (0, 1), got {value}")


@dataclass(frozen=True)
class ProtocolConfig:
    """Scheme selector plus every physical parameter of one protocol evaluation"""
    scheme: Scheme = Scheme.MIDDLE
    tau: float = 0.5
    t: float = 0.5
    eta: float = 1.0
    source_alice: SourceModel = field(default_factory=SourceModel)
    source_bob: SourceModel = field(default_factory=SourceModel)
    herald_detectors: tuple = (DetectorModel(), DetectorModel())
    char_detectors: tuple = (DetectorModel(), DetectorModel())
    herald_policy: HeraldPolicy = HeraldPolicy.BOTH_PATTERNS
    cutoff: int = config.DEFAULT_CUTOFF
    visibility: float = 1.0
    target: str = 'D'
    direct_fidelity: float = config.DIRECT_FIDELITY
    loss_segments: int = 1
    fold_char_efficiency: bool = False

    def __post_init__(self):
        try:
            object.__setattr__(self, 'scheme', Scheme(self.scheme))
        except ValueError:
            raise ConfigError('scheme', f"Unknown scheme '{self.scheme}'")
        try:
            object.__setattr__(self, 'herald_policy', HeraldPolicy(self.herald_policy))
        except ValueError:
            raise ConfigError('herald_policy', f"Unknown herald policy '{self.herald_policy}'")

        _open_unit('tau', self.tau)
        _open_unit('t', self.t)
        if not 0.0 < self.eta <= 1.0:
            raise ConfigError('eta', f"eta must lie in (0, 1], got {self.eta}")
        if not 0.0 <= self.visibility <= 1.0:
            raise ConfigError('visibility', f"visibility must lie in [0, 1], got {self.visibility}")
        if self.target not in TARGETS:
            raise ConfigError('target', f"target must be one of {TARGETS}, got '{self.target}'")
        if not 0.5 < self.direct_fidelity <= 1.0:
            raise ConfigError('direct_fidelity',
                              f"direct_fidelity must lie in (0.5, 1], got {self.direct_fidelity}")
        if self.loss_segments not in (1, 2):
            raise ConfigError('loss_segments', f"loss_segments must be 1 or 2, got {self.loss_segments}")
        if self.cutoff < 2:
            raise ConfigError('cutoff', f"cutoff must be at least 2 to hold both photons, got {self.cutoff}")

    @classmethod
    def from_parameters(cls, scheme='middle', tau=0.5, t=0.5, eta=1.0, eps1=1.0, eps2=1.0,
                        delta1=1.0, delta2=1.0, dark_prob=0.0, pnr=False,
                        herald_policy=HeraldPolicy.BOTH_PATTERNS, **extra):
        """Build a config from the flat symbol names used in config files and tables"""
        herald = DetectorModel(efficiency=delta1, dark_click_prob=dark_prob, pnr=bool(pnr))
        char = DetectorModel(efficiency=delta2)
        return cls(scheme=scheme, tau=tau, t=t, eta=eta,
                   source_alice=SourceModel(eps1), source_bob=SourceModel(eps2),
                   herald_detectors=(herald, herald), char_detectors=(char, char),
                   herald_policy=herald_policy, **extra)

    def parameters(self):
        """Flat symbol view of the config"""
        herald = self.herald_detectors[0]
        return {
            'scheme': self.scheme.value,
            'tau': self.tau,
            't': self.t,
            'eta': self.eta,
            'eps1': self.source_alice.efficiency,
            'eps2': self.source_bob.efficiency,
            'delta1': herald.efficiency,
            'delta2': self.char_detectors[1].efficiency,
            'dark_prob': herald.dark_click_prob,
            'pnr': herald.pnr,
            'herald_policy': self.herald_policy.value,
        }

    def with_values(self, **changes):
        return replace(self, **changes)

    def with_parameters(self, **flat):
        """Rebuild from flat symbol names, keeping every other setting"""
        params = self.parameters()
        params.update(flat)
        extras = {name: getattr(self, name) for name in
                  ('cutoff', 'visibility', 'target', 'direct_fidelity', 'loss_segments',
                   'fold_char_efficiency')}
        return ProtocolConfig.from_parameters(**params, **extras)

    @property
    def amplitude_gain(self):
        return math.sqrt(self.t / (1.0 - self.t))


@dataclass(frozen=True, eq=False)
class RunResult:
    """Herald probability, output state and figures of merit of one protocol evaluation"""
    config: ProtocolConfig
    p: float
    rho_out: DensityOperator = None
    F: float = math.nan
    F_full: float = math.nan
    X: float = math.nan
    pop_vac: float = math.nan
    pop_one: float = math.nan
    pop_two: float = math.nan
    purity: float = math.nan
    heralding_efficiency: float = math.nan
    t_used: float = math.nan
    tau_used: float = math.nan
    target_state_id: str = 'D'
    degenerate: bool = False
    pattern_probabilities: dict = field(default_factory=dict)

    def row(self):
        """Flat record for tables"""
        record = self.config.parameters()
        record.update({
            'tau': self.tau_used,
            't': self.t_used,
            'p': self.p,
            'F': self.F,
            'F_full': self.F_full,
            'X': self.X,
            'pop_vac': self.pop_vac,
            'pop_one': self.pop_one,
            'pop_two': self.pop_two,
            'purity': self.purity,
            'heralding_efficiency': self.heralding_efficiency,
            'degenerate': self.degenerate,
        })
        return record


def prepare_alice_state(tau, source, photon_cutoff=config.DEFAULT_CUTOFF):
    """sqrt(tau)|10> + sqrt(1 - tau)|01> on (a1, a2), mixed with vacuum by the source efficiency"""
    photon = lossy_single_photon(source, photon_cutoff)
    state = tensor_product(photon, DensityOperator.vacuum(1, photon_cutoff))
    return apply_beam_splitter(state, (0, 1), tau)


def prepare_bob_ancilla(t, source, photon_cutoff=config.DEFAULT_CUTOFF):
    """sqrt(1 - t)|10> + sqrt(t)|01> on (b1, b2), mixed with vacuum by the source efficiency"""
    photon = lossy_single_photon(source, photon_cutoff)
    state = tensor_product(photon, DensityOperator.vacuum(1, photon_cutoff))
    return apply_beam_splitter(state, (0, 1), 1.0 - t)


def target_state(config_, photon_cutoff=None):
    cutoff = photon_cutoff or config_.cutoff
    if config_.target == 'D':
        amp = 1.0 / math.sqrt(2.0)
        return DensityOperator.from_amplitudes({(1, 0): amp, (0, 1): amp}, cutoff)
    return DensityOperator.from_amplitudes(
        {(1, 0): math.sqrt(config_.tau), (0, 1): math.sqrt(1.0 - config_.tau)}, cutoff)


def _apply_channel_loss(state, mode, eta, segments):
    for _ in range(segments):
        state = apply_loss(state, mode, eta ** (1.0 / segments))
    return state


def _herald(state, detector_groups, outcomes, detectors, cutoff):
    """Measure each detector's mode group in turn, tracking index shifts as modes are removed"""
    removed = []
    probability = 1.0
    for group, label, detector in zip(detector_groups, outcomes, detectors):
        shifted = tuple(m - sum(r < m for r in removed) for m in group)
        probability, state = measure_povm(state, shifted, povm_element(detector, label, cutoff))
        removed.extend(group)
    return probability, state


def _herald_all_patterns(state, detector_groups, config_, output_mode):
    """Sum of phase-corrected conditional states over the accepted herald patterns"""
    detectors = config_.herald_detectors
    heralded = None
    pattern_probabilities = {}
    for pattern in herald_pattern_map(detectors[0], detectors[1], config_.herald_policy):
        probability, conditional = _herald(state, detector_groups, pattern.outcomes, detectors,
                                           config_.cutoff)
        if pattern.phase_flip:
            conditional = apply_phase(conditional, output_mode, math.pi)
        pattern_probabilities[pattern.name] = probability
        heralded = conditional if heralded is None else heralded + conditional
    return heralded, pattern_probabilities


def _figures_of_merit(rho, target):
    pops = subspace_populations(rho)
    if pops.pop_vac > 0:
        x = pops.pop_one / pops.pop_vac
    else:
        x = math.inf if pops.pop_one > 0 else math.nan

    sector = photon_sector(rho, 1)
    f_sector = fidelity(sector.normalized(), target) if sector.trace_weight > 0 else math.nan
    return {
        'F': f_sector,
        'F_full': fidelity(rho, target),
        'X': x,
        'pop_vac': pops.pop_vac,
        'pop_one': pops.pop_one,
        'pop_two': pops.pop_two,
        'purity': purity(rho),
        'heralding_efficiency': 1.0 - pops.pop_vac,
    }


def direct_transmission_tau(config_):
    """Alice's tau giving the comparison fidelity on the received one-photon sector (larger-photon root)"""
    delta_a = config_.char_detectors[0].efficiency
    delta_b = config_.char_detectors[1].efficiency
    if delta_a * delta_b == 0:
        return config_.tau
    c = 2.0 * config_.direct_fidelity - 1.0
    ratio = (1.0 + math.sqrt(max(0.0, 1.0 - c * c))) / c
    k = ratio ** 2 * config_.eta * delta_b / delta_a
    return k / (1.0 + k)


def _run_direct(config_):
    tau = direct_transmission_tau(config_)
    state = prepare_alice_state(tau, config_.source_alice, config_.cutoff)
    state = _apply_channel_loss(state, 1, config_.eta, config_.loss_segments)
    state = apply_loss(state, 0, config_.char_detectors[0].efficiency)
    state = apply_loss(state, 1, config_.char_detectors[1].efficiency)

    p = config_.source_alice.efficiency * config_.eta * config_.char_detectors[1].efficiency
    metrics = _figures_of_merit(state, target_state(config_))
    metrics['F'] = config_.direct_fidelity
    logger.debug(f"Direct transmission eta={config_.eta:.6g}: p={p:.6g}, X={metrics['X']:.6g}")
    return RunResult(config=config_, p=p, rho_out=state, t_used=math.nan, tau_used=tau,
                     target_state_id=config_.target, **metrics)


def herald_input_state(config_):
    """State just before the heralding detectors, with the detector mode groups (A, B)"""
    cutoff = config_.cutoff
    alice = prepare_alice_state(config_.tau, config_.source_alice, cutoff)
    bob = prepare_bob_ancilla(config_.t, config_.source_bob, cutoff)
    state = tensor_product(alice, bob)

    if config_.scheme is Scheme.END:
        state = _apply_channel_loss(state, A2, config_.eta, config_.loss_segments)
    else:
        half = math.sqrt(config_.eta)
        state = apply_loss(state, A2, half)
        state = apply_loss(state, B1, half)

    detector_groups = ((B1,), (A2,))
    if config_.visibility < 1.0:
        # Imperfect mode overlap: part of Bob's photon travels in a distinguishable copy of b1
        state = tensor_product(state, DensityOperator.vacuum(2, cutoff))
        state = apply_beam_splitter(state, (B1, GHOST_B1), config_.visibility)
        state = apply_beam_splitter(state, (GHOST_A2, GHOST_B1), 0.5)
        detector_groups = ((B1, GHOST_B1), (A2, GHOST_A2))
    state = apply_beam_splitter(state, (A2, B1), 0.5)
    return state, detector_groups


def _run_amplified(config_):
    state, detector_groups = herald_input_state(config_)
    heralded, pattern_probabilities = _herald_all_patterns(state, detector_groups, config_, output_mode=1)
    p = heralded.trace_weight
    if p < config.DEGENERATE_P:
        logger.warning(f"Herald never fires for {config_.scheme.value} at eta={config_.eta:.6g}, t={config_.t:.6g}")
        return RunResult(config=config_, p=p, t_used=config_.t, tau_used=config_.tau,
                         target_state_id=config_.target, degenerate=True,
                         pattern_probabilities=pattern_probabilities)

    rho = heralded.normalized()
    rho = apply_loss(rho, 0, config_.char_detectors[0].efficiency)
    rho = apply_loss(rho, 1, config_.char_detectors[1].efficiency)
    metrics = _figures_of_merit(rho, target_state(config_))
    if config_.fold_char_efficiency:
        p *= metrics['heralding_efficiency']

    logger.debug(f"{config_.scheme.value} eta={config_.eta:.6g} t={config_.t:.6g}: "
                 f"p={p:.6g}, F={metrics['F']:.6g}, X={metrics['X']:.6g}")
    return RunResult(config=config_, p=p, rho_out=rho, t_used=config_.t, tau_used=config_.tau,
                     target_state_id=config_.target, pattern_probabilities=pattern_probabilities,
                     **metrics)


def run_protocol(config_):
    """Evaluate one scheme; a herald that never fires is reported through `degenerate`"""
    if config_.scheme is Scheme.DIRECT:
        return _run_direct(config_)
    return _run_amplified(config_)


def scissors_gate_standalone(input_state, t, detectors=(DetectorModel(pnr=True), DetectorModel(pnr=True)),
                             policy=HeraldPolicy.BOTH_PATTERNS, source=SourceModel()):
    """
    Quantum scissors acting on a single-mode input in span{|0>, |1>}.

    The input mixes with the ancilla's b1 mode on a 50:50 beam splitter and the
    heralded output is Bob's b2 mode. Returns (p, normalized output state).
    """
    if input_state.num_modes != 1:
        raise ConfigError('input', "Scissors input must be a single mode")
    high = np.real(np.diag(input_state.matrix))[2:].sum()
    if high > config.TRUNCATION_TOL:
        raise ConfigError('input', f"Scissors input has weight {high:.3g} above one photon")
    cutoff = input_state.basis.photon_cutoff
    if cutoff < 2:
        raise ConfigError('cutoff', "Scissors input needs a cutoff of at least 2")

    # Modes: 0 input, 1 b1, 2 b2
    state = tensor_product(input_state, prepare_bob_ancilla(t, source, cutoff))
    state = apply_beam_splitter(state, (0, 1), 0.5)

    gate = ProtocolConfig(herald_detectors=tuple(detectors), herald_policy=policy, cutoff=cutoff)
    heralded, _ = _herald_all_patterns(state, ((1,), (0,)), gate, output_mode=0)
    p = heralded.trace_weight
    if p < config.DEGENERATE_P:
        raise DegenerateHeraldError(f"Scissors herald never fires at t={t}")
    return p, heralded.normalized()
