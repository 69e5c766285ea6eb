"""
Exact linear algebra on small multimode truncated Fock spaces.

States are dense density matrices on the span of all occupation vectors
(n_1, ..., n_m) whose total photon number does not exceed a global cutoff.
Every operator used here (beam splitters, phase shifters, loss Kraus
operators, photon-counting POVMs) either conserves or lowers the total photon
number, so restricting to this space is exact.

Basis order: ascending total photon number, and within one total the
occupation vectors in descending lexicographic order, e.g. for two modes
|00>, |10>, |01>, |20>, |11>, |02>, ...

Beam-splitter convention on modes (i, j) with transmissivity t:
    a_i^dag -> sqrt(t) a_i^dag + sqrt(1-t) a_j^dag
    a_j^dag -> sqrt(t) a_j^dag - sqrt(1-t) a_i^dag

Conditional states produced by measurements are left unnormalized; their
trace is the probability of the recorded outcome.
"""

import itertools
from dataclasses import dataclass, field
from functools import lru_cache, cached_property
from math import comb

import numpy as np
from scipy.linalg import expm

from nla import config
from nla.errors import (BasisMismatchError, ConfigError, PhysicalityError,
                        TruncationOverflowError)
from nla.utils.helpers import get_logger

logger = get_logger('nla.core.fock')


@dataclass(frozen=True)
class FockBasis:
    """Occupation-number basis of `num_modes` modes with at most `photon_cutoff` photons in total"""
    num_modes: int
    photon_cutoff: int

    def __post_init__(self):
        if self.num_modes < 1:
            raise ConfigError('num_modes', f"num_modes must be positive, got {self.num_modes}")
        if self.photon_cutoff < 0:
            raise ConfigError('cutoff', f"photon cutoff must be non-negative, got {self.photon_cutoff}")

    @cached_property
    def occupations(self):
        vectors = [occ for occ in itertools.product(range(self.photon_cutoff + 1), repeat=self.num_modes)
                   if sum(occ) <= self.photon_cutoff]
        vectors.sort(key=lambda occ: (sum(occ), tuple(-n for n in occ)))
        return tuple(vectors)

    @cached_property
    def occupation_array(self):
        array = np.array(self.occupations, dtype=int).reshape(len(self.occupations), self.num_modes)
        array.setflags(write=False)
        return array

    @cached_property
    def index(self):
        return {occ: i for i, occ in enumerate(self.occupations)}

    @cached_property
    def total_photons(self):
        totals = self.occupation_array.sum(axis=1)
        totals.setflags(write=False)
        return totals

    @property
    def dim(self):
        return len(self.occupations)

    def index_of(self, occupation):
        """Position of an occupation vector in the basis"""
        try:
            return self.index[tuple(occupation)]
        except KeyError:
            raise BasisMismatchError(f"Occupation {tuple(occupation)} is not in {self}")

    def check_mode(self, mode):
        if not 0 <= mode < self.num_modes:
            raise ConfigError('mode', f"Mode {mode} out of range [0, {self.num_modes - 1}]")


@lru_cache(maxsize=None)
def get_basis(num_modes, photon_cutoff=config.DEFAULT_CUTOFF):
    """Shared basis instance so that cached properties are computed once"""
    return FockBasis(num_modes, photon_cutoff)


@lru_cache(maxsize=None)
def annihilation(basis, mode):
    """Annihilation operator of one mode restricted to the truncated basis"""
    basis.check_mode(mode)
    op = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, occ in enumerate(basis.occupations):
        n = occ[mode]
        if n > 0:
            lowered = list(occ)
            lowered[mode] = n - 1
            op[basis.index[tuple(lowered)], col] = np.sqrt(n)
    op.setflags(write=False)
    return op


class DensityOperator:
    """Density matrix on a truncated Fock basis; the trace carries the weight of conditional states"""

    def __init__(self, basis, matrix):
        matrix = np.array(matrix, dtype=complex)
        if matrix.shape != (basis.dim, basis.dim):
            raise BasisMismatchError(
                f"Matrix shape {matrix.shape} does not match basis dimension {basis.dim}")
        # Hermitian part only; drift from products is far below the tolerances
        matrix = 0.5 * (matrix + matrix.conj().T)
        matrix.setflags(write=False)
        self.basis = basis
        self.matrix = matrix

    def __repr__(self):
        return (f"DensityOperator(modes={self.basis.num_modes}, cutoff={self.basis.photon_cutoff}, "
                f"trace={self.trace_weight:.6g})")

    @classmethod
    def from_ket(cls, basis, ket):
        ket = np.asarray(ket, dtype=complex).reshape(-1)
        return cls(basis, np.outer(ket, ket.conj()))

    @classmethod
    def from_occupation(cls, occupation, photon_cutoff=config.DEFAULT_CUTOFF, weight=1.0):
        basis = get_basis(len(occupation), photon_cutoff)
        return cls(basis, weight * projector(basis, occupation))

    @classmethod
    def from_amplitudes(cls, amplitudes, photon_cutoff=config.DEFAULT_CUTOFF):
        """Pure state from a mapping occupation -> amplitude"""
        num_modes = len(next(iter(amplitudes)))
        basis = get_basis(num_modes, photon_cutoff)
        ket = np.zeros(basis.dim, dtype=complex)
        for occ, amp in amplitudes.items():
            ket[basis.index_of(occ)] += amp
        return cls.from_ket(basis, ket)

    @classmethod
    def vacuum(cls, num_modes, photon_cutoff=config.DEFAULT_CUTOFF):
        return cls.from_occupation((0,) * num_modes, photon_cutoff)

    @property
    def num_modes(self):
        return self.basis.num_modes

    @property
    def trace_weight(self):
        return float(np.real(np.trace(self.matrix)))

    def scaled(self, weight):
        return DensityOperator(self.basis, self.matrix * weight)

    def normalized(self):
        weight = self.trace_weight
        if weight <= 0:
            raise PhysicalityError("Cannot normalize an operator with non-positive trace")
        return self.scaled(1.0 / weight)

    def __add__(self, other):
        _require_same_basis(self, other)
        return DensityOperator(self.basis, self.matrix + other.matrix)

    def __mul__(self, weight):
        return self.scaled(weight)

    __rmul__ = __mul__

    def allclose(self, other, atol=1e-10):
        _require_same_basis(self, other)
        return bool(np.allclose(self.matrix, other.matrix, atol=atol, rtol=0))

    def eigen_components(self, threshold=1e-14):
        """(weight, ket) pairs of the eigen-decomposition, largest weight first"""
        values, vectors = np.linalg.eigh(self.matrix)
        order = np.argsort(values)[::-1]
        return [(float(values[k]), vectors[:, k]) for k in order if values[k] > threshold]

    def validate(self):
        """Raise PhysicalityError unless the operator is Hermitian, PSD and sub-normalized"""
        asym = np.max(np.abs(self.matrix - self.matrix.conj().T)) if self.basis.dim else 0.0
        if asym > config.HERMITIAN_TOL:
            raise PhysicalityError(f"Operator not Hermitian (deviation {asym:.3g})")
        smallest = float(np.min(np.linalg.eigvalsh(self.matrix)))
        if smallest < -config.PSD_TOL:
            raise PhysicalityError(f"Operator has negative eigenvalue {smallest:.3g}")
        weight = self.trace_weight
        if weight < -config.PSD_TOL or weight > 1 + config.HERMITIAN_TOL:
            raise PhysicalityError(f"Trace {weight:.15g} outside [0, 1]")
        return self


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Completely positive trace-preserving map given by its Kraus operators"""
    basis: FockBasis
    operators: tuple = field(repr=False)

    def __post_init__(self):
        deviation = self.completeness_error()
        if deviation > config.HERMITIAN_TOL:
            raise PhysicalityError(f"Kraus operators are not complete (deviation {deviation:.3g})")

    def completeness_error(self):
        total = sum(k.conj().T @ k for k in self.operators)
        return float(np.max(np.abs(total - np.eye(self.basis.dim))))

    def apply(self, rho):
        if rho.basis != self.basis:
            raise BasisMismatchError(f"Channel on {self.basis} applied to state on {rho.basis}")
        out = sum(k @ rho.matrix @ k.conj().T for k in self.operators)
        return DensityOperator(self.basis, out)


@dataclass(frozen=True, eq=False)
class PovmElement:
    """One outcome of a measurement acting on a single mode's local space (photon counts 0..cutoff)"""
    matrix: np.ndarray = field(repr=False)
    label: str

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise PhysicalityError(f"POVM element '{self.label}' is not square")
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)
        values = np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T))
        if values.min() < -config.PSD_TOL or values.max() > 1 + config.PSD_TOL:
            raise PhysicalityError(f"POVM element '{self.label}' is not between 0 and identity")

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def is_diagonal(self):
        off = self.matrix - np.diag(np.diag(self.matrix))
        return bool(np.max(np.abs(off)) <= config.HERMITIAN_TOL) if self.dim else True

    @classmethod
    def from_diagonal(cls, values, label):
        return cls(np.diag(np.asarray(values, dtype=float)), label)


def projector(basis, occupation):
    idx = basis.index_of(occupation)
    proj = np.zeros((basis.dim, basis.dim), dtype=complex)
    proj[idx, idx] = 1.0
    return proj


def _require_same_basis(a, b):
    if a.basis != b.basis:
        raise BasisMismatchError(f"Operands live on different bases: {a.basis} vs {b.basis}")


def _check_unit_interval(name, value):
    if not 0.0 <= value <= 1.0:
        raise ConfigError(name, f"{name} must lie in [0, 1], got {value}")


def tensor_product(a, b, tolerance=config.TRUNCATION_TOL):
    """Compose two states on disjoint modes, re-truncating to the shared photon cutoff"""
    if a.basis.photon_cutoff != b.basis.photon_cutoff:
        raise BasisMismatchError(
            f"Photon cutoffs differ: {a.basis.photon_cutoff} vs {b.basis.photon_cutoff}")
    num_modes = a.num_modes + b.num_modes
    if num_modes > config.MAX_MODES:
        raise BasisMismatchError(f"{num_modes} modes exceed the supported maximum of {config.MAX_MODES}")

    basis = get_basis(num_modes, a.basis.photon_cutoff)
    select, position = _product_embedding(a.basis, b.basis, basis)

    full = np.kron(a.matrix, b.matrix)
    discarded = float(np.real(np.trace(full))) - float(np.real(np.trace(full[np.ix_(select, select)])))
    if discarded > tolerance:
        raise TruncationOverflowError(
            f"Tensor product discards {discarded:.3g} of weight above cutoff {basis.photon_cutoff}")
    if discarded > config.TRUNCATION_TOL:
        logger.warning(f"Tensor product truncation discarded {discarded:.3g} of weight")

    matrix = np.zeros((basis.dim, basis.dim), dtype=complex)
    matrix[np.ix_(position, position)] = full[np.ix_(select, select)]
    return DensityOperator(basis, matrix)


@lru_cache(maxsize=None)
def _product_embedding(basis_a, basis_b, basis):
    select, position = [], []
    for x, occ_a in enumerate(basis_a.occupations):
        for y, occ_b in enumerate(basis_b.occupations):
            occ = occ_a + occ_b
            if sum(occ) <= basis.photon_cutoff:
                select.append(x * basis_b.dim + y)
                position.append(basis.index[occ])
    return np.array(select, dtype=int), np.array(position, dtype=int)


@lru_cache(maxsize=None)
def beam_splitter_unitary(basis, i, j, t):
    basis.check_mode(i)
    basis.check_mode(j)
    if i == j:
        raise ConfigError('modes', f"Beam splitter needs two distinct modes, got ({i}, {j})")
    a_i, a_j = annihilation(basis, i), annihilation(basis, j)
    theta = np.arccos(np.sqrt(t))
    generator = a_j.conj().T @ a_i - a_i.conj().T @ a_j
    unitary = expm(theta * generator)
    unitary.setflags(write=False)
    return unitary


def beam_splitter_channel(basis, modes, t):
    """Single-element channel of a beam splitter"""
    _check_unit_interval('t', t)
    i, j = modes
    return KrausChannel(basis, (beam_splitter_unitary(basis, i, j, float(t)),))


def apply_beam_splitter(rho, modes, t):
    """Mix two modes on a beam splitter of transmissivity t"""
    return beam_splitter_channel(rho.basis, modes, t).apply(rho)


@lru_cache(maxsize=None)
def _loss_operators(basis, mode, eta):
    basis.check_mode(mode)
    operators = []
    for k in range(basis.photon_cutoff + 1):
        op = np.zeros((basis.dim, basis.dim), dtype=complex)
        for col, occ in enumerate(basis.occupations):
            n = occ[mode]
            if n >= k:
                lowered = list(occ)
                lowered[mode] = n - k
                op[basis.index[tuple(lowered)], col] = np.sqrt(comb(n, k) * eta ** (n - k) * (1 - eta) ** k)
        if np.any(op):
            op.setflags(write=False)
            operators.append(op)
    return tuple(operators)


def loss_channel(basis, mode, eta):
    """Amplitude-damping channel on one mode with transmissivity eta"""
    _check_unit_interval('eta', eta)
    return KrausChannel(basis, _loss_operators(basis, mode, float(eta)))


def apply_loss(rho, mode, eta):
    """Pass one mode through a pure-loss channel of transmissivity eta"""
    if eta == 1.0:
        rho.basis.check_mode(mode)
        return rho
    return loss_channel(rho.basis, mode, eta).apply(rho)


def apply_phase(rho, mode, phi):
    """Phase shifter exp(i phi n) on one mode"""
    rho.basis.check_mode(mode)
    phases = np.exp(1j * phi * rho.basis.occupation_array[:, mode])
    return DensityOperator(rho.basis, phases[:, None] * rho.matrix * phases.conj()[None, :])


def _embed_element(basis, modes, element):
    counts = basis.occupation_array[:, list(modes)].sum(axis=1)
    if element.dim < basis.photon_cutoff + 1:
        raise BasisMismatchError(
            f"POVM element '{element.label}' covers {element.dim} photon numbers, "
            f"cutoff {basis.photon_cutoff} needs {basis.photon_cutoff + 1}")

    if element.is_diagonal:
        root = np.sqrt(np.clip(np.real(np.diag(element.matrix)), 0.0, None))
        return np.diag(root[counts]).astype(complex)

    if len(modes) != 1:
        raise BasisMismatchError("Non-diagonal POVM elements act on a single mode only")
    values, vectors = np.linalg.eigh(element.matrix)
    local_root = (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T
    mode = modes[0]
    others = np.delete(basis.occupation_array, mode, axis=1)
    same_rest = np.all(others[:, None, :] == others[None, :, :], axis=2)
    return np.where(same_rest, local_root[counts[:, None], counts[None, :]], 0.0)


def measure_povm(rho, mode, element):
    """
    Apply one POVM outcome to a mode (or a group of modes seen by one detector) and trace the
    measured modes out.

    Returns (probability, conditional state) with the conditional state's trace equal to the
    probability. Measuring every mode leaves a single vacuum mode carrying that weight.
    """
    modes = (mode,) if isinstance(mode, (int, np.integer)) else tuple(mode)
    for m in modes:
        rho.basis.check_mode(m)

    root = _embed_element(rho.basis, modes, element)
    projected = root @ rho.matrix @ root.conj().T
    probability = float(np.real(np.trace(projected)))
    if probability < -config.PSD_TOL:
        raise PhysicalityError(f"Outcome '{element.label}' has negative probability {probability:.3g}")
    probability = max(probability, 0.0)

    projected = DensityOperator(rho.basis, projected)
    if len(modes) == rho.num_modes:
        return probability, DensityOperator.vacuum(1, rho.basis.photon_cutoff).scaled(probability)
    return probability, partial_trace(projected, modes)


@lru_cache(maxsize=None)
def _trace_groups(basis, removed):
    kept = [m for m in range(basis.num_modes) if m not in removed]
    reduced = get_basis(len(kept), basis.photon_cutoff)
    occ = basis.occupation_array
    kept_index = np.array([reduced.index[tuple(row)] for row in occ[:, kept]], dtype=int)
    groups = {}
    for x, row in enumerate(occ[:, list(removed)]):
        groups.setdefault(tuple(row), []).append(x)
    return reduced, kept_index, tuple(np.array(g, dtype=int) for g in groups.values())


def partial_trace(rho, modes_to_remove):
    """Trace out the given modes"""
    removed = tuple(sorted(set(int(m) for m in modes_to_remove)))
    if not removed:
        return rho
    for m in removed:
        rho.basis.check_mode(m)
    if len(removed) >= rho.num_modes:
        raise BasisMismatchError("Cannot trace out every mode")

    reduced, kept_index, groups = _trace_groups(rho.basis, removed)
    matrix = np.zeros((reduced.dim, reduced.dim), dtype=complex)
    for group in groups:
        target = kept_index[group]
        matrix[np.ix_(target, target)] += rho.matrix[np.ix_(group, group)]
    return DensityOperator(reduced, matrix)


def _psd_eigen(matrix):
    """Eigen-decomposition with round-off eigenvalues zeroed"""
    values, vectors = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    cutoff = max(float(values.max(initial=0.0)), 0.0) * 100 * len(values) * np.finfo(float).eps
    values = np.where(values > cutoff, values, 0.0)
    return values, vectors


def _psd_sqrt(values, vectors):
    return (vectors * np.sqrt(values)) @ vectors.conj().T


def fidelity(rho, sigma):
    """Uhlmann fidelity (Tr|sqrt(rho) sqrt(sigma)|)^2 between normalized states"""
    _require_same_basis(rho, sigma)
    for name, state in (('rho', rho), ('sigma', sigma)):
        if abs(state.trace_weight - 1.0) > config.NORMALIZATION_TOL:
            raise PhysicalityError(f"fidelity needs normalized {name}, trace is {state.trace_weight:.12g}")

    rho_values, rho_vectors = _psd_eigen(rho.matrix)
    sigma_values, sigma_vectors = _psd_eigen(sigma.matrix)
    # Pure on either side reduces to an expectation value
    for values, vectors, other in ((sigma_values, sigma_vectors, rho), (rho_values, rho_vectors, sigma)):
        if np.count_nonzero(values) == 1:
            top = int(np.argmax(values))
            ket = vectors[:, top]
            return float(np.clip(values[top] * np.real(np.vdot(ket, other.matrix @ ket)), 0.0, 1.0))

    product = _psd_sqrt(rho_values, rho_vectors) @ _psd_sqrt(sigma_values, sigma_vectors)
    singular = np.linalg.svd(product, compute_uv=False)
    return float(np.clip(np.sum(singular) ** 2, 0.0, 1.0))


@dataclass(frozen=True)
class Populations:
    pop_vac: float
    pop_one: float
    pop_two: float


def subspace_populations(rho):
    """Weights of the zero-, one- and two-photon sectors"""
    diagonal = np.real(np.diag(rho.matrix))
    totals = rho.basis.total_photons
    return Populations(
        pop_vac=float(diagonal[totals == 0].sum()),
        pop_one=float(diagonal[totals == 1].sum()),
        pop_two=float(diagonal[totals == 2].sum()),
    )


def photon_sector(rho, n):
    """Unnormalized projection onto the total-photon-number-n sector"""
    mask = (rho.basis.total_photons == n).astype(float)
    return DensityOperator(rho.basis, rho.matrix * np.outer(mask, mask))


def purity(rho):
    return float(np.real(np.trace(rho.matrix @ rho.matrix)))
