"""Explicit conserving unitary models of the optimal qubit readout.

The models couple a system qubit (conjugate observable with eigenstates
(|0> +/- |1>)/sqrt(2)) to a ladder resource and a small bank of register
qubits holding one unit of charge.  Projectors onto the twirl eigenbranches
drive register swaps, so the whole unitary is block diagonal across total
charge sectors (conservation is structural) and the pointer - which register
holds the excitation - commutes with the register charge (Yanase condition).

Wire order is (resource, system, [copy,] register qubits).  Operators are
assembled in the plain multi-wire Kronecker layout and permuted once into the
charge-major composite basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graded import (EPS_NUM, GradedSpace, Observable, _freeze,
                     number_operator, tensor, uniform_state)
from .models import noise_of_model, ozawa_bound, plus_minus_eigenstates

PLUS_MINUS_OBSERVABLE = np.array([[0.0, 1.0], [1.0, 0.0]])  # |e+><e+| - |e-><e-|
POINTER_VALUES = {"plus": 1.0, "minus": -1.0, "fail": 0.0}

__all__ = [
    "PLUS_MINUS_OBSERVABLE",
    "POINTER_VALUES",
    "CompositeSpace",
    "ConservingUnitary",
    "MeasurementModel",
    "build_ud_unitary",
    "build_mle_unitary",
    "build_repeatable_variant",
    "simulate_measurement",
    "verify_conservation",
    "verify_yanase",
    "model_manifest",
]


@dataclass(frozen=True, eq=False)
class CompositeSpace:
    """A chain of graded wires with its charge-major composite ordering.

    ``kron_index[g]`` is the flat multi-wire Kronecker index of composite
    basis vector ``g``; ``wire_dims`` are the plain wire dimensions.
    """

    wires: tuple[GradedSpace, ...]
    space: GradedSpace
    kron_index: np.ndarray

    @staticmethod
    def of(wires: tuple[GradedSpace, ...] | list[GradedSpace]) -> "CompositeSpace":
        wires = tuple(wires)
        if not wires:
            raise ValueError("need at least one wire")
        space = wires[0]
        index = np.arange(space.total_dim, dtype=np.int64)
        for wire in wires[1:]:
            tm = tensor(space, wire)
            prev, cur = divmod(tm.kron_index, wire.total_dim)
            index = index[prev] * wire.total_dim + cur
            space = tm.space
        return CompositeSpace(wires, space, _freeze(index))

    @property
    def wire_dims(self) -> tuple[int, ...]:
        return tuple(w.total_dim for w in self.wires)

    def to_graded_matrix(self, kron_mat: np.ndarray) -> np.ndarray:
        return np.asarray(kron_mat, dtype=complex)[np.ix_(self.kron_index, self.kron_index)]

    def to_kron_matrix(self, graded_mat: np.ndarray) -> np.ndarray:
        inv = np.argsort(self.kron_index)
        return np.asarray(graded_mat, dtype=complex)[np.ix_(inv, inv)]

    def to_graded_vector(self, kron_vec: np.ndarray) -> np.ndarray:
        return np.asarray(kron_vec, dtype=complex)[self.kron_index]


@dataclass(frozen=True, eq=False)
class ConservingUnitary:
    """Unitary that commutes with the total number operator."""

    space: GradedSpace
    matrix: np.ndarray
    charge_observable: Observable

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.space.total_dim
        if m.shape != (d, d):
            raise ValueError("matrix does not match space dimension")
        if np.max(np.abs(m.conj().T @ m - np.eye(d))) > EPS_NUM:
            raise ValueError("matrix is not unitary within tolerance")
        n = self.charge_observable.matrix
        if np.linalg.norm(m @ n - n @ m, 2) > EPS_NUM:
            raise ValueError("matrix does not conserve the total charge")
        object.__setattr__(self, "matrix", _freeze(m))


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    """A conserving premeasurement: wires, initial apparatus state, unitary, pointer.

    ``init`` holds one pure vector per wire, ``None`` marking the system wire
    where the input goes.  ``pointer`` maps outcome labels to diagonal 0/1
    vectors over the register-bank Kronecker basis (they partition it); the
    register wires are the trailing ``register_count`` wires.
    """

    kind: str
    m: int
    composite: CompositeSpace
    system_wire: int
    register_count: int
    init: tuple[np.ndarray | None, ...]
    unitary: ConservingUnitary
    pointer: dict[str, np.ndarray]

    def __post_init__(self):
        # register bank must start in a sharp charge state (symmetric input)
        for i in range(len(self.composite.wires) - self.register_count,
                       len(self.composite.wires)):
            labels = self.composite.wires[i].charge_labels()
            support = {int(c) for c, a in zip(labels, self.init[i])
                       if abs(a) > EPS_NUM}
            if len(support) != 1:
                raise ValueError("register wire does not start in a charge eigenstate")
        if verify_yanase(self) > EPS_NUM:  # pragma: no cover - structural
            raise ValueError("pointer violates the Yanase condition")

    @property
    def system_space(self) -> GradedSpace:
        return self.composite.wires[self.system_wire]

    def apparatus_wires(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.composite.wires)) if i != self.system_wire)

    def pointer_diagonal(self, values: dict[str, float] | None = None) -> np.ndarray:
        """Pointer observable as a diagonal over the full multi-wire basis."""
        values = POINTER_VALUES if values is None else values
        dims = self.composite.wire_dims
        reg_dim = int(np.prod(dims[-self.register_count:]))
        zreg = np.zeros(reg_dim)
        for label, mask in self.pointer.items():
            zreg += values.get(label, 0.0) * mask
        rest = int(np.prod(dims[:-self.register_count]))
        return np.kron(np.ones(rest), zreg)

    def pointer_observable(self, values: dict[str, float] | None = None) -> Observable:
        diag = self.pointer_diagonal(values)[self.composite.kron_index]
        return Observable(self.composite.space, np.diag(diag))

    def outcome_projector(self, label: str) -> np.ndarray:
        """Graded-basis projector onto the pointer eigenspace of an outcome."""
        dims = self.composite.wire_dims
        rest = int(np.prod(dims[:-self.register_count]))
        diag = np.kron(np.ones(rest), self.pointer[label])[self.composite.kron_index]
        return np.diag(diag.astype(complex))

    def system_operator_full(self, op: np.ndarray) -> np.ndarray:
        """Promote a system-wire operator to the composite graded basis."""
        mats = [np.asarray(op, dtype=complex) if i == self.system_wire
                else np.eye(d) for i, d in enumerate(self.composite.wire_dims)]
        full = mats[0]
        for m_ in mats[1:]:
            full = np.kron(full, m_)
        return self.composite.to_graded_matrix(full)

    def initial_density_full(self, system_rho: np.ndarray) -> np.ndarray:
        """rho_system (x) apparatus-init, in the composite graded basis."""
        rho = np.asarray(system_rho, dtype=complex)
        ds = self.system_space.total_dim
        if rho.shape != (ds, ds):
            raise ValueError("system state has wrong dimension")
        full = None
        for i, vec in enumerate(self.init):
            part = rho if i == self.system_wire else np.outer(vec, vec.conj())
            full = part if full is None else np.kron(full, part)
        return self.composite.to_graded_matrix(full)

    def apparatus_state_and_charge(self) -> tuple[np.ndarray, Observable, GradedSpace]:
        """Initial apparatus density, its number operator and its graded space."""
        app = CompositeSpace.of([self.composite.wires[i] for i in self.apparatus_wires()])
        vec = None
        for i in self.apparatus_wires():
            v = self.init[i]
            vec = v if vec is None else np.kron(vec, v)
        return (np.outer(vec, vec.conj())[np.ix_(app.kron_index, app.kron_index)],
                number_operator(app.space), app.space)

    def noise(self, system_rho: np.ndarray,
              values: dict[str, float] | None = None) -> float:
        """Mean squared measurement noise of this model on a system input."""
        l_full = self.system_operator_full(PLUS_MINUS_OBSERVABLE)
        z_full = self.pointer_observable(values)
        rho_full = self.initial_density_full(system_rho)
        return noise_of_model(self.unitary, l_full, z_full, rho_full)

    def noise_bound(self, system_rho: np.ndarray) -> float:
        """Commutator lower bound evaluated on rho_system (x) apparatus init."""
        app_rho, app_n, _ = self.apparatus_state_and_charge()
        qubit = GradedSpace.qubit()
        obs = Observable(qubit, PLUS_MINUS_OBSERVABLE)
        joint = np.kron(np.asarray(system_rho, dtype=complex), app_rho)
        return ozawa_bound(obs, number_operator(qubit), app_n, joint)


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

def _branch_projectors(m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Twirl-eigenbranch projectors on resource (x) system, Kronecker layout.

    P_plus/P_minus project onto span{(|n,0> +/- |n-1,1>)/sqrt(2): n=1..M},
    P_edge onto span{|0,0>, |M,1>} (the two one-dimensional total-charge
    sectors where the two twirled states coincide).
    """
    dim = 2 * (m + 1)

    def ket(r: int, s: int) -> np.ndarray:
        v = np.zeros(dim)
        v[2 * r + s] = 1.0
        return v

    p_plus = np.zeros((dim, dim))
    p_minus = np.zeros((dim, dim))
    for n in range(1, m + 1):
        phi_p = (ket(n, 0) + ket(n - 1, 1)) / math.sqrt(2.0)
        phi_m = (ket(n, 0) - ket(n - 1, 1)) / math.sqrt(2.0)
        p_plus += np.outer(phi_p, phi_p)
        p_minus += np.outer(phi_m, phi_m)
    p_edge = np.outer(ket(0, 0), ket(0, 0)) + np.outer(ket(m, 1), ket(m, 1))
    return p_plus, p_minus, p_edge


def _qubit_swap(num_wires: int, i: int, j: int) -> np.ndarray:
    """Full SWAP of register qubits i and j (0-based) on a bank of num_wires."""
    dim = 1 << num_wires
    perm = np.arange(dim)
    for idx in range(dim):
        bi = (idx >> (num_wires - 1 - i)) & 1
        bj = (idx >> (num_wires - 1 - j)) & 1
        if bi != bj:
            perm[idx] = idx ^ (1 << (num_wires - 1 - i)) ^ (1 << (num_wires - 1 - j))
    out = np.zeros((dim, dim))
    out[perm, np.arange(dim)] = 1.0
    return out


def _register_mask(num_wires: int, bits: tuple[int, ...]) -> np.ndarray:
    mask = np.zeros(1 << num_wires)
    idx = 0
    for b in bits:
        idx = (idx << 1) | b
    mask[idx] = 1.0
    return mask


def _register_basis_vector(num_wires: int, bits: tuple[int, ...]) -> np.ndarray:
    return _register_mask(num_wires, bits).astype(complex)


def _assemble(kind: str, m: int, wires: list[GradedSpace], system_wire: int,
              register_count: int, init: list[np.ndarray | None],
              v_kron: np.ndarray, pointer: dict[str, np.ndarray]) -> MeasurementModel:
    comp = CompositeSpace.of(wires)
    v_graded = comp.to_graded_matrix(v_kron)
    unitary = ConservingUnitary(comp.space, v_graded, number_operator(comp.space))
    return MeasurementModel(kind=kind, m=m, composite=comp, system_wire=system_wire,
                            register_count=register_count, init=tuple(init),
                            unitary=unitary, pointer=pointer)


def build_ud_unitary(m: int) -> MeasurementModel:
    """Unambiguous-readout circuit with three register qubits.

    The branch projectors control full register swaps: the '+' branch swaps
    registers 1,3 and the '-' branch registers 2,3, so the single excitation
    of the |001> start state ends in the register naming the outcome, and the
    two edge-sector components leave it in place (inconclusive).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    qubit = GradedSpace.qubit()
    wires = [GradedSpace.ladder(m), qubit, qubit, qubit, qubit]
    p_plus, p_minus, p_edge = _branch_projectors(m)
    v_kron = (np.kron(p_edge, np.eye(8))
              + np.kron(p_minus, _qubit_swap(3, 1, 2))
              + np.kron(p_plus, _qubit_swap(3, 0, 2)))
    plus = _register_mask(3, (1, 0, 0))
    minus = _register_mask(3, (0, 1, 0))
    pointer = {"plus": plus, "minus": minus, "fail": np.ones(8) - plus - minus}
    init = [uniform_state(m).amplitudes, None,
            _register_basis_vector(1, (0,)), _register_basis_vector(1, (0,)),
            _register_basis_vector(1, (1,))]
    return _assemble("ud", m, wires, 1, 3, init, v_kron, pointer)


def build_mle_unitary(m: int) -> MeasurementModel:
    """Minimum-error readout circuit with two register qubits.

    The Helstrom projector (the '+' branch plus the zero-eigenvalue edge
    sectors) swaps the excitation of the |01> start state into register 1;
    the '-' branch leaves it in register 2.  Pointer: 10 -> plus, 01 -> minus.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    qubit = GradedSpace.qubit()
    wires = [GradedSpace.ladder(m), qubit, qubit, qubit]
    p_plus, p_minus, p_edge = _branch_projectors(m)
    v_kron = (np.kron(p_plus + p_edge, _qubit_swap(2, 0, 1))
              + np.kron(p_minus, np.eye(4)))
    plus = _register_mask(2, (1, 0))
    pointer = {"plus": plus, "minus": np.ones(4) - plus}
    init = [uniform_state(m).amplitudes, None,
            _register_basis_vector(1, (0,)), _register_basis_vector(1, (1,))]
    return _assemble("mle", m, wires, 1, 2, init, v_kron, pointer)


def build_repeatable_variant(m: int) -> MeasurementModel:
    """Unambiguous readout that restores the system eigenstate on success.

    A copy qubit on its own resource wire starts in (|0> + |1>)/sqrt(2).
    After the discrimination step, a register-controlled stage swaps the copy
    into the system on a '+' outcome, and on a '-' outcome first flips the
    copy's relative phase (making it the '-' eigenstate) and then swaps it in.
    On the inconclusive outcome nothing is restored.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    qubit = GradedSpace.qubit()
    wires = [GradedSpace.ladder(m), qubit, qubit, qubit, qubit, qubit]
    p_plus, p_minus, p_edge = _branch_projectors(m)
    eye2, eye8 = np.eye(2), np.eye(8)
    v1 = (np.kron(p_edge, np.kron(eye2, eye8))
          + np.kron(p_minus, np.kron(eye2, _qubit_swap(3, 1, 2)))
          + np.kron(p_plus, np.kron(eye2, _qubit_swap(3, 0, 2))))

    dim_rs = 2 * (m + 1)
    eye_r = np.eye(m + 1)
    swap_sc = _qubit_swap(2, 0, 1)
    phase_then_swap = swap_sc @ np.kron(eye2, np.diag([1.0, -1.0]))
    q_plus = np.diag(_register_mask(3, (1, 0, 0)))
    q_minus = np.diag(_register_mask(3, (0, 1, 0)))
    q_rest = eye8 - q_plus - q_minus
    v2 = (np.kron(eye_r, np.kron(swap_sc, q_plus))
          + np.kron(eye_r, np.kron(phase_then_swap, q_minus))
          + np.kron(eye_r, np.kron(np.eye(4), q_rest)))
    v_kron = v2 @ v1

    plus = _register_mask(3, (1, 0, 0))
    minus = _register_mask(3, (0, 1, 0))
    pointer = {"plus": plus, "minus": minus, "fail": np.ones(8) - plus - minus}
    plus_vec, _ = plus_minus_eigenstates()
    init = [uniform_state(m).amplitudes, None, plus_vec.astype(complex),
            _register_basis_vector(1, (0,)), _register_basis_vector(1, (0,)),
            _register_basis_vector(1, (1,))]
    return _assemble("repeatable", m, wires, 1, 3, init, v_kron, pointer)


# ---------------------------------------------------------------------------
# simulation and verification
# ---------------------------------------------------------------------------

def simulate_measurement(model: MeasurementModel, system_state: np.ndarray,
                         prob_cutoff: float = 1e-14
                         ) -> dict[str, tuple[float, np.ndarray | None]]:
    """Run the premeasurement and read the pointer.

    Returns, per outcome label, the outcome probability and the normalized
    post-measurement reduced system state (``None`` when the outcome
    probability is numerically zero).  Probabilities sum to one.
    """
    rho = model.initial_density_full(system_state)
    v = model.unitary.matrix
    evolved = v @ rho @ v.conj().T

    comp = model.composite
    inv = np.argsort(comp.kron_index)
    dims = comp.wire_dims
    sys_i = model.system_wire
    ds = dims[sys_i]
    out: dict[str, tuple[float, np.ndarray | None]] = {}
    for label in model.pointer:
        q = model.outcome_projector(label)
        selected = q @ evolved @ q
        prob = float(np.real(np.trace(selected)))
        if prob <= prob_cutoff:
            out[label] = (max(prob, 0.0), None)
            continue
        kron_rho = selected[np.ix_(inv, inv)].reshape(*dims, *dims)
        # trace out every wire but the system
        keep_src = list(range(len(dims)))
        keep_dst = [i + len(dims) for i in keep_src]
        subs_in = keep_src + keep_dst
        for i in range(len(dims)):
            if i != sys_i:
                subs_in[len(dims) + i] = i
        reduced = np.einsum(kron_rho, subs_in, [sys_i, len(dims) + sys_i])
        out[label] = (prob, reduced.reshape(ds, ds) / prob)
    return out


def verify_conservation(unitary: ConservingUnitary) -> float:
    """Spectral norm of [V, N_tot]; zero for a charge-conserving unitary."""
    v, n = unitary.matrix, unitary.charge_observable.matrix
    return float(np.linalg.norm(v @ n - n @ v, 2))


def verify_yanase(model: MeasurementModel,
                  values: dict[str, float] | None = None) -> float:
    """Spectral norm of [Z_A, N_A] on the apparatus (pointer vs apparatus charge)."""
    app_wires = model.apparatus_wires()
    app = CompositeSpace.of([model.composite.wires[i] for i in app_wires])
    dims = app.wire_dims
    reg_dim = int(np.prod(dims[-model.register_count:]))
    zreg = np.zeros(reg_dim)
    vals = POINTER_VALUES if values is None else values
    for label, mask in model.pointer.items():
        zreg += vals.get(label, 0.0) * mask
    z_kron = np.kron(np.ones(int(np.prod(dims[:-model.register_count]))), zreg)
    z = np.diag(z_kron[app.kron_index])
    n = number_operator(app.space).matrix
    return float(np.linalg.norm(z @ n - n @ z, 2))


def model_manifest(model: MeasurementModel) -> dict:
    """Machine-readable description of a model (spaces, init, pointer map)."""
    from .serialize import round_sig, space_to_json

    wires = []
    for i, w in enumerate(model.composite.wires):
        entry = space_to_json(w)
        entry["role"] = ("system" if i == model.system_wire
                         else "register" if i >= len(model.composite.wires) - model.register_count
                         else "resource")
        if model.init[i] is not None:
            entry["init"] = [[round_sig(z.real), round_sig(z.imag)] for z in model.init[i]]
        wires.append(entry)
    pointer = {label: [int(round(x)) for x in mask]
               for label, mask in model.pointer.items()}
    return {"kind": model.kind, "m": model.m, "total_dim": model.composite.space.total_dim,
            "wires": wires, "pointer_masks": pointer,
            "pointer_values": {k: round_sig(v) for k, v in POINTER_VALUES.items()}}
