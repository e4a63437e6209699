"""Charge-graded Hilbert spaces and the linear algebra that lives on them.

A U(1) conservation law splits a finite Hilbert space into charge sectors
H = ⊕_n H_n of the number operator N.  Everything downstream (twirling,
sector-wise discrimination, conserving circuits) works in a basis ordered by
total charge, so that symmetric (twirled) states are literally block diagonal
and conservation of a unitary is a visible block structure.

Conventions
-----------
* Charges are integers, listed strictly increasing.  Basis vectors are grouped
  by charge ("charge-major" ordering); the index layout inside a sector is an
  arbitrary but fixed labelling 0..dim-1.
* All arrays are immutable after construction (``writeable=False``); every
  operation returns fresh values, so concurrent use is safe.
* ``EPS_NUM`` is the global numerical tolerance for hermiticity / positivity /
  normalization checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EPS_NUM = 1e-10

__all__ = [
    "EPS_NUM",
    "GradedSpace",
    "PureState",
    "Observable",
    "BlockState",
    "TensorMap",
    "tensor",
    "number_operator",
    "sector_projector",
    "phase_rotation",
    "g_twirl",
    "expectation",
    "variance",
    "uniform_state",
    "coherent_state",
    "opt_phase_state",
    "opt_phase_norm_squared_inverse",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GradedSpace:
    """A finite direct sum of integer charge sectors.

    ``charges`` are strictly increasing integers; ``dims[i]`` is the dimension
    of the sector with charge ``charges[i]``.
    """

    charges: tuple[int, ...]
    dims: tuple[int, ...]

    def __post_init__(self):
        if len(self.charges) != len(self.dims) or not self.charges:
            raise ValueError("charges and dims must be non-empty and aligned")
        if any(d <= 0 for d in self.dims):
            raise ValueError("sector dimensions must be positive")
        if any(b <= a for a, b in zip(self.charges, self.charges[1:])):
            raise ValueError("charges must be strictly increasing")

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    @property
    def sector_dims(self) -> dict[int, int]:
        return dict(zip(self.charges, self.dims))

    def dim_of(self, n: int) -> int:
        try:
            return self.dims[self.charges.index(n)]
        except ValueError:
            raise ValueError(f"charge {n} not present in space") from None

    def offset_of(self, n: int) -> int:
        i = self.charges.index(n)
        return sum(self.dims[:i])

    def slice_of(self, n: int) -> slice:
        off = self.offset_of(n)
        return slice(off, off + self.dim_of(n))

    def charge_labels(self) -> np.ndarray:
        """Charge of every basis vector, in basis order."""
        return _freeze(np.repeat(self.charges, self.dims).astype(np.int64))

    def basis_vector(self, n: int, k: int = 0) -> np.ndarray:
        """The k-th basis vector of sector n, as a dense complex vector."""
        if not 0 <= k < self.dim_of(n):
            raise ValueError(f"sector {n} has no basis index {k}")
        v = np.zeros(self.total_dim, dtype=complex)
        v[self.offset_of(n) + k] = 1.0
        return v

    @staticmethod
    def qubit() -> "GradedSpace":
        return GradedSpace((0, 1), (1, 1))

    @staticmethod
    def ladder(max_charge: int) -> "GradedSpace":
        """One-dimensional sectors for every charge 0..max_charge."""
        if max_charge < 0:
            raise ValueError("max_charge must be >= 0")
        return GradedSpace(tuple(range(max_charge + 1)), (1,) * (max_charge + 1))

    @staticmethod
    def trivial() -> "GradedSpace":
        return GradedSpace((0,), (1,))

    @staticmethod
    def from_charge_list(labels) -> "GradedSpace":
        """Space whose basis carries the given (unsorted) integer charges."""
        labels = sorted(int(x) for x in labels)
        if not labels:
            raise ValueError("empty charge list")
        charges = sorted(set(labels))
        return GradedSpace(tuple(charges), tuple(labels.count(c) for c in charges))


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector over the graded basis of ``space``."""

    space: GradedSpace
    amplitudes: np.ndarray
    tolerance: float = EPS_NUM

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.total_dim,):
            raise ValueError("amplitude vector does not match space dimension")
        if abs(np.linalg.norm(amps) - 1.0) > self.tolerance:
            raise ValueError("state is not normalized within tolerance")
        object.__setattr__(self, "amplitudes", _freeze(amps))

    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def sector_component(self, n: int) -> np.ndarray:
        return self.amplitudes[self.space.slice_of(n)]

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator on a graded space."""

    space: GradedSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.space.total_dim
        if m.shape != (d, d):
            raise ValueError("matrix does not match space dimension")
        if np.max(np.abs(m - m.conj().T)) > EPS_NUM:
            raise ValueError("matrix is not Hermitian within tolerance")
        object.__setattr__(self, "matrix", _freeze(m))


def _check_density(rho: np.ndarray, dim: int, tol: float = EPS_NUM) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise ValueError("density matrix does not match space dimension")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian within tolerance")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValueError("density matrix does not have unit trace")
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


@dataclass(frozen=True, eq=False)
class BlockState:
    """Density operator stored as one Hermitian PSD block per charge sector.

    This is the canonical form of any G-twirled state: coherences between
    sectors are identically zero, so only the diagonal blocks are kept.
    """

    space: GradedSpace
    blocks: dict[int, np.ndarray]

    def __post_init__(self):
        unknown = set(self.blocks) - set(self.space.charges)
        if unknown:
            raise ValueError(f"blocks for charges {sorted(unknown)} not in space")
        checked: dict[int, np.ndarray] = {}
        total = 0.0
        for n in self.space.charges:
            b = np.asarray(self.blocks.get(n, np.zeros((self.space.dim_of(n),) * 2)),
                           dtype=complex)
            d = self.space.dim_of(n)
            if b.shape != (d, d):
                raise ValueError(f"block for charge {n} has wrong shape")
            if np.max(np.abs(b - b.conj().T)) > EPS_NUM:
                raise ValueError(f"block for charge {n} is not Hermitian")
            if d and np.linalg.eigvalsh(b)[0] < -EPS_NUM:
                raise ValueError(f"block for charge {n} is not PSD")
            total += np.trace(b).real
            checked[n] = _freeze(b)
        if abs(total - 1.0) > EPS_NUM:
            raise ValueError("block traces do not sum to one")
        object.__setattr__(self, "blocks", checked)

    def block(self, n: int) -> np.ndarray:
        return self.blocks[n]

    def sector_weight(self, n: int) -> float:
        return float(np.trace(self.blocks[n]).real)

    def to_dense(self) -> np.ndarray:
        d = self.space.total_dim
        out = np.zeros((d, d), dtype=complex)
        for n in self.space.charges:
            s = self.space.slice_of(n)
            out[s, s] = self.blocks[n]
        return out


@dataclass(frozen=True, eq=False)
class TensorMap:
    """Charge-additive tensor product of two graded spaces.

    The composite basis is ordered by total charge, then by the charge of the
    first factor, then by the two intra-sector indices.  ``kron_index[g]``
    gives, for composite basis index ``g``, the index of the same product
    vector in the plain Kronecker layout ``i_a * dim_b + i_b``.
    """

    space_a: GradedSpace
    space_b: GradedSpace
    space: GradedSpace
    kron_index: np.ndarray

    def factor_indices(self) -> tuple[np.ndarray, np.ndarray]:
        db = self.space_b.total_dim
        return self.kron_index // db, self.kron_index % db

    def pure(self, a: PureState | np.ndarray, b: PureState | np.ndarray) -> PureState:
        va = a.amplitudes if isinstance(a, PureState) else np.asarray(a, dtype=complex)
        vb = b.amplitudes if isinstance(b, PureState) else np.asarray(b, dtype=complex)
        return PureState(self.space, np.kron(va, vb)[self.kron_index])

    def vector(self, kron_vec: np.ndarray) -> np.ndarray:
        return np.asarray(kron_vec, dtype=complex)[self.kron_index]

    def matrix(self, kron_mat: np.ndarray) -> np.ndarray:
        m = np.asarray(kron_mat, dtype=complex)
        return m[np.ix_(self.kron_index, self.kron_index)]

    def promote(self, op_a: np.ndarray, op_b: np.ndarray) -> np.ndarray:
        """Lift A (x) B into the composite graded basis."""
        return self.matrix(np.kron(op_a, op_b))


def tensor(a: GradedSpace, b: GradedSpace) -> TensorMap:
    """Tensor two graded spaces under charge addition.

    Sector dimensions of the composite follow the convolution
    dim(n) = sum_{n_a + n_b = n} dim_a(n_a) * dim_b(n_b).
    """
    totals = sorted({na + nb for na in a.charges for nb in b.charges})
    order: list[int] = []
    dims: list[int] = []
    db = b.total_dim
    for n in totals:
        count = 0
        for na in a.charges:
            nb = n - na
            if nb not in b.charges:
                continue
            for ia in range(a.dim_of(na)):
                ga = a.offset_of(na) + ia
                for ib in range(b.dim_of(nb)):
                    gb = b.offset_of(nb) + ib
                    order.append(ga * db + gb)
                    count += 1
        dims.append(count)
    space = GradedSpace(tuple(totals), tuple(dims))
    return TensorMap(a, b, space, _freeze(np.array(order, dtype=np.int64)))


def number_operator(space: GradedSpace) -> Observable:
    """Diagonal observable assigning its sector charge to every basis vector."""
    return Observable(space, np.diag(space.charge_labels().astype(float)))


def sector_projector(space: GradedSpace, n: int) -> Observable:
    """Orthogonal projector onto the charge-n sector."""
    d = space.total_dim
    m = np.zeros((d, d))
    s = space.slice_of(n)  # raises for unknown charge
    m[s, s] = np.eye(space.dim_of(n))
    return Observable(space, m)


def phase_rotation(space: GradedSpace, theta: float) -> np.ndarray:
    """The U(1) representation U(theta) = exp(i theta N) as a dense matrix."""
    return np.diag(np.exp(1j * theta * space.charge_labels()))


def g_twirl(rho: np.ndarray, space: GradedSpace) -> BlockState:
    """Average a state over the U(1) group action.

    For integer charges the group average equals the pinching
    sum_n P_n rho P_n, i.e. dropping every coherence between different total
    charge sectors; the result is returned in block form.  Twirling is exact
    (block extraction), hence idempotent.
    """
    rho = _check_density(rho, space.total_dim)
    blocks = {n: rho[space.slice_of(n), space.slice_of(n)] for n in space.charges}
    return BlockState(space, blocks)


def _state_matrix(state) -> tuple[np.ndarray, bool]:
    """Normalize the accepted state representations to (matrix-or-vector, is_vector)."""
    if isinstance(state, PureState):
        return state.amplitudes, True
    if isinstance(state, BlockState):
        return state.to_dense(), False
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return arr, True
    return arr, False


def expectation(obs: Observable, state) -> float:
    """<X> in a pure state, density matrix or block state."""
    mat, is_vec = _state_matrix(state)
    if is_vec:
        if mat.shape != (obs.space.total_dim,):
            raise ValueError("state dimension does not match observable")
        return float(np.real(np.vdot(mat, obs.matrix @ mat)))
    if mat.shape != obs.matrix.shape:
        raise ValueError("state dimension does not match observable")
    return float(np.real(np.trace(obs.matrix @ mat)))


def variance(obs: Observable, state) -> float:
    """<X^2> - <X>^2; clipped at zero against roundoff."""
    sq = Observable(obs.space, obs.matrix @ obs.matrix)
    v = expectation(sq, state) - expectation(obs, state) ** 2
    return max(v, 0.0)


def uniform_state(max_charge: int) -> PureState:
    """Equal superposition of the number states 0..max_charge.

    The maximally asymmetric state on its support: it tops both the variance
    and entropy asymmetry measures among states confined to these sectors.
    """
    if max_charge < 0:
        raise ValueError("max_charge must be >= 0")
    amps = np.full(max_charge + 1, 1.0 / math.sqrt(max_charge + 1))
    return PureState(GradedSpace.ladder(max_charge), amps)


def coherent_state(alpha: float, tail_mass: float = 1e-12) -> PureState:
    """Zero-phase coherent state, truncated by Poisson tail mass.

    The cutoff is the smallest C such that the discarded Poisson(alpha^2) mass
    beyond C is below ``tail_mass``; the kept amplitudes are renormalized so
    the state is exactly unit norm.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if not 0 < tail_mass < 1:
        raise ValueError("tail_mass must be in (0, 1)")
    lam = alpha * alpha
    pmf = [math.exp(-lam)]
    while 1.0 - math.fsum(pmf) >= tail_mass:
        pmf.append(pmf[-1] * lam / len(pmf))
        if len(pmf) > 100_000:  # unreachable for sane alpha
            raise ValueError("truncation did not converge")
    amps = np.sqrt(np.array(pmf))
    amps /= np.linalg.norm(amps)
    return PureState(GradedSpace.ladder(len(pmf) - 1), amps)


def opt_phase_state(max_charge: int) -> PureState:
    """Sine-profile state that is optimal for two-hypothesis MLE readout.

    Amplitudes are proportional to sin((n+1) pi / (M+2)) on charges n = 0..M,
    the top eigenvector of the nearest-neighbour coupling on the charge
    ladder.  Normalization is numerical; see
    :func:`opt_phase_norm_squared_inverse` for the closed form it agrees with.
    """
    if max_charge < 0:
        raise ValueError("max_charge must be >= 0")
    n = np.arange(max_charge + 1)
    amps = np.sin((n + 1) * math.pi / (max_charge + 2))
    amps /= np.linalg.norm(amps)
    return PureState(GradedSpace.ladder(max_charge), amps)


def opt_phase_norm_squared_inverse(max_charge: int) -> float:
    """Closed form for 1/C^2 of the sine-profile state.

    Evaluates (1/4)(1 + 2M - csc(x) sin((2M+1)x)) + sin^2((M+1)x) with
    x = pi/(M+2); simplifies to (M+2)/2 exactly.  Kept as a cross-check of the
    numerical normalization used by :func:`opt_phase_state`.
    """
    m = max_charge
    x = math.pi / (m + 2)
    return 0.25 * (1 + 2 * m - math.sin((2 * m + 1) * x) / math.sin(x)) \
        + math.sin((m + 1) * x) ** 2
