"""
N-switch simulation on a fixed-order register.

The register holds a target system, one working copy per gate, a control register naming
the gate of the current slot, an ancilla whose basis labels encode whole gate orders and,
optionally, a history register flagging applied gates. Control unitaries, ExUnion, SHIFT,
FINAL and the controlled-SWAPs are all basis permutations; they are built once per layout
as index maps and applied by gathering amplitudes.

Effective control labels are added modulo N, which keeps every branch a bijection of cE.
"""
import itertools
import math
from functools import lru_cache
from typing import List, Optional, Sequence, Union

import numpy as np

from app.core.logging_config import get_logger
from app.models.circuit import DensityMatrix, GateSpec, StateVector
from app.models.switch import (
    BasisOrder,
    ControlPrep,
    Mixture,
    Permutation,
    PreparationBlock,
    Superposition,
    SwitchLayout,
)
from app.simulation.qcore import (
    BasisPermutation,
    apply_matrix,
    embed,
    gate_matrix,
    reduced_density,
)
from app.utils.error_handlers import ConfigurationError, PermutationRangeError, ValidationError

logger = get_logger('app.simulation.switch')


# Permutation encoding

def perm_index(p: Permutation) -> int:
    """Lexicographic rank of a permutation."""
    remaining = sorted(p.slots)
    rank = 0
    for position, gate in enumerate(p.slots):
        smaller = remaining.index(gate)
        rank += smaller * math.factorial(p.n - 1 - position)
        remaining.pop(smaller)
    return rank


def index_perm(i: int, n: int) -> Permutation:
    """Permutation of lexicographic rank i among the n! orders."""
    if not 0 <= i < math.factorial(n):
        raise PermutationRangeError(i, n)
    remaining = list(range(n))
    slots = []
    for position in range(n):
        block = math.factorial(n - 1 - position)
        slots.append(remaining.pop(i // block))
        i %= block
    return Permutation(slots=tuple(slots))


def all_orders(n: int) -> List[Permutation]:
    return [Permutation(slots=p) for p in itertools.permutations(range(n))]


# Sub-system index maps. Sub-index layout is little-endian over the listed registers:
# (c, alpha) -> c + 2^n_c * alpha ; (c, C_H) -> c + 2^n_c * K

def _order_tables(layout: SwitchLayout):
    """(first gate, next-gate table, last gate) for every effective ancilla label."""
    orders = [index_perm(a, layout.n_gates) for a in layout.effective_orders]
    first = [p.gate_at(0) for p in orders]
    last = [p.gate_at(layout.n_gates - 1) for p in orders]
    following = [[p.next_gate(j) for j in layout.effective_controls] for p in orders]
    return first, following, last


def _control_alpha_images(layout: SwitchLayout, rule) -> np.ndarray:
    n_ctrl = 2 ** layout.n_c
    images = np.arange(n_ctrl * 2 ** layout.n_alpha)
    for alpha in layout.effective_orders:
        for j in layout.effective_controls:
            images[j + n_ctrl * alpha] = rule(alpha, j) + n_ctrl * alpha
    return images


def _u1_images(layout: SwitchLayout) -> np.ndarray:
    first, _, _ = _order_tables(layout)
    return _control_alpha_images(layout, lambda a, i: (first[a] + i) % layout.n_gates)


def _shift_images(layout: SwitchLayout) -> np.ndarray:
    _, following, _ = _order_tables(layout)
    return _control_alpha_images(layout, lambda a, j: following[a][j])


def _final_images(layout: SwitchLayout) -> np.ndarray:
    _, _, last = _order_tables(layout)
    # |j><pi(N)+j| sends label m to m - pi(N)
    return _control_alpha_images(layout, lambda a, m: (m - last[a]) % layout.n_gates)


def _exunion_images(layout: SwitchLayout) -> np.ndarray:
    if not layout.include_history:
        raise ConfigurationError("ExUnion needs the history register", details={"include_history": False})
    n_ctrl = 2 ** layout.n_c
    images = np.arange(n_ctrl * 2 ** layout.n_history)
    for history in range(2 ** layout.n_history):
        for i in layout.effective_controls:
            images[i + n_ctrl * history] = i + n_ctrl * (history ^ (1 << i))
    return images


def _lift(layout: SwitchLayout, sub_images: np.ndarray, qubits: Sequence[int]) -> BasisPermutation:
    """Full-register basis map acting as `sub_images` on `qubits`."""
    index = np.arange(2 ** layout.n_qubits)
    sub = np.zeros_like(index)
    for k, q in enumerate(qubits):
        sub |= ((index >> q) & 1) << k
    new_sub = np.asarray(sub_images)[sub]
    image = index.copy()
    for k, q in enumerate(qubits):
        bit = (new_sub >> k) & 1
        image = (image & ~(1 << q)) | (bit << q)
    return BasisPermutation(image)


def build_exunion(layout: SwitchLayout) -> np.ndarray:
    """ExUnion on (c, C_H): control label i in cE toggles history bit i."""
    return BasisPermutation(_exunion_images(layout)).matrix()


def build_shift(layout: SwitchLayout) -> np.ndarray:
    """SHIFT on (c, alpha): the gate of the current slot becomes the gate of the next slot."""
    return BasisPermutation(_shift_images(layout)).matrix()


def build_final(layout: SwitchLayout) -> np.ndarray:
    """FINAL on (c, alpha): the last gate of the order is mapped back to label 0."""
    return BasisPermutation(_final_images(layout)).matrix()


@lru_cache(maxsize=32)
def control_permutations(layout: SwitchLayout):
    """(U_1, U_n, U_{N+1}) as full-register basis maps."""
    control_alpha = layout.control_qubits + layout.ancilla_qubits
    u1 = _lift(layout, _u1_images(layout), control_alpha)
    shift = _lift(layout, _shift_images(layout), control_alpha)
    final = _lift(layout, _final_images(layout), control_alpha)
    if layout.include_history:
        exunion = _lift(layout, _exunion_images(layout), layout.control_qubits + layout.history_qubits)
        un, ufinal = exunion.then(shift), exunion.then(final)
    else:
        un, ufinal = shift, final
    logger.debug(f"🔧 Built control maps for {layout.n_gates}-switch on {layout.n_qubits} qubits")
    return u1, un, ufinal


@lru_cache(maxsize=32)
def controlled_swap_permutation(layout: SwitchLayout) -> BasisPermutation:
    """Control |k> in cE swaps target t with working system t_k; cR leaves both alone."""
    index = np.arange(2 ** layout.n_qubits)
    width = layout.n_target_qubits
    control = layout.field(index, layout.control_start, layout.n_c)
    target = layout.field(index, 0, width)
    image = index.copy()
    for k in layout.effective_controls:
        start = layout.working_qubits(k)[0]
        working = layout.field(index, start, width)
        swapped = index - target - (working << start) + working + (target << start)
        image = np.where(control == k, swapped, image)
    return BasisPermutation(image)


def build_u1(layout: SwitchLayout) -> np.ndarray:
    return control_permutations(layout)[0].matrix()


def build_un(layout: SwitchLayout) -> np.ndarray:
    return control_permutations(layout)[1].matrix()


def build_ufinal(layout: SwitchLayout) -> np.ndarray:
    return control_permutations(layout)[2].matrix()


# Slot operator

def slot_matrices(layout: SwitchLayout, gates: Sequence[GateSpec]) -> np.ndarray:
    """(N, d, d) unitaries of the slot gates on the N_t-qubit target system."""
    if len(gates) != layout.n_gates:
        raise ValidationError("gates", f"Expected {layout.n_gates} gates, got {len(gates)}")
    matrices = []
    for spec in gates:
        if any(t >= layout.n_target_qubits for t in spec.targets):
            raise ValidationError("gates", f"Gate {spec.kind.value} on {spec.targets} exceeds the "
                                           f"{layout.n_target_qubits}-qubit target system")
        matrices.append(embed(gate_matrix(spec), spec.targets, layout.n_target_qubits))
    return np.stack(matrices)


def _apply_working_gates(layout: SwitchLayout, amplitudes: np.ndarray, matrices: np.ndarray) -> np.ndarray:
    # matrices: (N, d, d) shared or (B, N, d, d) per sample
    for k in range(layout.n_gates):
        matrix = matrices[..., k, :, :]
        amplitudes = apply_matrix(amplitudes, matrix, layout.working_qubits(k), layout.n_qubits)
    return amplitudes


def build_slot(layout: SwitchLayout, gates: Sequence[GateSpec], omit_return_swap: bool = False) -> np.ndarray:
    """Dense slot operator: controlled-SWAP, A_k on every t_k, controlled-SWAP."""
    matrices = slot_matrices(layout, gates)
    cswap = controlled_swap_permutation(layout).matrix()
    working = _apply_working_gates(layout, np.eye(2 ** layout.n_qubits, dtype=complex), matrices).T
    return working @ cswap if omit_return_swap else cswap @ working @ cswap


# Pipeline

def ancilla_amplitudes(layout: SwitchLayout, prep: ControlPrep) -> np.ndarray:
    """Ancilla state vector for a pure order-control preparation."""
    dim = 2 ** layout.n_alpha
    amplitudes = np.zeros(dim, dtype=complex)
    if isinstance(prep, BasisOrder):
        if prep.order.n != layout.n_gates:
            raise ValidationError("order", f"Order {prep.order} does not have {layout.n_gates} gates")
        amplitudes[perm_index(prep.order)] = 1.0
    elif isinstance(prep, Superposition):
        if len(prep.amplitudes) > layout.n_orders:
            raise ValidationError("amplitudes", f"Superposition support exceeds the {layout.n_orders} effective orders")
        amplitudes[:len(prep.amplitudes)] = prep.amplitudes
    elif isinstance(prep, PreparationBlock):
        amplitudes[0] = 1.0
        ancilla = layout.ancilla_qubits
        for spec in prep.gates:
            if any(t not in ancilla for t in spec.targets):
                raise ValidationError("gates", f"Preparation gate on {spec.targets} leaves the ancilla {ancilla}")
            local = [t - layout.ancilla_start for t in spec.targets]
            amplitudes = apply_matrix(amplitudes, gate_matrix(spec), local, layout.n_alpha)
    else:
        raise ValidationError("prep", f"{type(prep).__name__} has no pure ancilla state")
    return amplitudes


def initial_amplitudes(layout: SwitchLayout, target: np.ndarray, ancilla: np.ndarray) -> np.ndarray:
    """|psi_0>: target and ancilla as given; working systems, control and history at zero."""
    target = np.asarray(target, dtype=complex)
    ancilla = np.asarray(ancilla, dtype=complex)
    batch = np.broadcast_shapes(target.shape[:-1], ancilla.shape[:-1])
    block = np.zeros((*batch, 2 ** layout.n_alpha, 2 ** layout.ancilla_start), dtype=complex)
    block[..., :2 ** layout.n_target_qubits] = ancilla[..., :, None] * target[..., None, :]
    psi = np.zeros((*batch, 2 ** layout.n_qubits), dtype=complex)
    psi[..., :2 ** layout.history_start] = block.reshape(*batch, -1)
    return psi


def propagate(layout: SwitchLayout, amplitudes: np.ndarray, matrices: np.ndarray,
              omit_return_swap: bool = False) -> np.ndarray:
    """U_{N+1} A' U_N ... U_2 A' U_1 applied to (possibly batched) register amplitudes."""
    u1, un, ufinal = control_permutations(layout)
    cswap = controlled_swap_permutation(layout)
    psi = u1.apply(amplitudes)
    for slot in range(layout.n_gates):
        psi = cswap.apply(psi)
        psi = _apply_working_gates(layout, psi, matrices)
        if not omit_return_swap:
            psi = cswap.apply(psi)
        psi = (un if slot < layout.n_gates - 1 else ufinal).apply(psi)
    return psi


def run_switch(layout: SwitchLayout, gates: Sequence[GateSpec], prep: ControlPrep, target_in: StateVector,
               omit_return_swap: bool = False) -> Union[StateVector, DensityMatrix]:
    """Final register state; a density matrix when the order control is a classical mixture."""
    if target_in.n_qubits != layout.n_target_qubits:
        raise ValidationError("target_in", f"Target has {target_in.n_qubits} qubits, layout expects "
                                           f"{layout.n_target_qubits}")
    matrices = slot_matrices(layout, gates)

    if isinstance(prep, Mixture):
        if len(prep.probabilities) > layout.n_orders:
            raise ValidationError("probabilities", f"Mixture support exceeds the {layout.n_orders} effective orders")
        dim = 2 ** layout.n_qubits
        rho = np.zeros((dim, dim), dtype=complex)
        for label, p in enumerate(prep.probabilities):
            if p == 0:
                continue
            ancilla = np.zeros(2 ** layout.n_alpha, dtype=complex)
            ancilla[label] = 1.0
            psi = propagate(layout, initial_amplitudes(layout, target_in.amplitudes, ancilla), matrices,
                            omit_return_swap)
            rho += p * np.outer(psi, psi.conj())
        return DensityMatrix(n_qubits=layout.n_qubits, entries=rho)

    psi0 = initial_amplitudes(layout, target_in.amplitudes, ancilla_amplitudes(layout, prep))
    psi = propagate(layout, psi0, matrices, omit_return_swap)
    return StateVector(n_qubits=layout.n_qubits, amplitudes=psi)


def run_switch_batch(layout: SwitchLayout, matrices: np.ndarray, ancilla: np.ndarray,
                     target: Optional[np.ndarray] = None, omit_return_swap: bool = False) -> np.ndarray:
    """
    Pipeline over a batch: `matrices` is (B, N, d, d), `ancilla` is (2^n_alpha,) or
    (B, 2^n_alpha), `target` is (d,) or (B, d) and defaults to |0...0>. Returns (B, 2^n)
    amplitudes.
    """
    matrices = np.asarray(matrices, dtype=complex)
    if matrices.ndim != 4 or matrices.shape[1] != layout.n_gates:
        raise ValidationError("matrices", f"Expected (B, {layout.n_gates}, d, d) slot matrices, got {matrices.shape}")
    if target is None:
        target = np.zeros(2 ** layout.n_target_qubits, dtype=complex)
        target[0] = 1.0
    psi0 = initial_amplitudes(layout, target, ancilla)
    psi0 = np.broadcast_to(psi0, (matrices.shape[0], 2 ** layout.n_qubits))
    return propagate(layout, psi0, matrices, omit_return_swap)


# Readout

def sector_expectation(layout: SwitchLayout, amplitudes: np.ndarray, ancilla_op: np.ndarray,
                       target_op: np.ndarray) -> np.ndarray:
    """<psi| A^alpha (x) 1 (x) B^t |psi> for (possibly batched) register amplitudes."""
    shape = layout.sector_shape()
    psi = np.asarray(amplitudes).reshape(-1, *shape)
    values = np.einsum('bhamt,ac,tu,bhcmu->b', psi.conj(), ancilla_op, target_op, psi, optimize=True)
    values = np.real(values)
    return values if np.ndim(amplitudes) > 1 else float(values[0])


def embedded_observable(layout: SwitchLayout, ancilla_op: np.ndarray, target_op: np.ndarray) -> np.ndarray:
    """Dense A^alpha (x) 1 (x) B^t on the full register."""
    return embed(np.kron(ancilla_op, target_op), layout.target_qubits + layout.ancilla_qubits, layout.n_qubits)


def target_state(layout: SwitchLayout, final_state: StateVector) -> DensityMatrix:
    return reduced_density(final_state, layout.target_qubits)


def ordered_product(matrices: Sequence[np.ndarray], order: Permutation) -> np.ndarray:
    """A_{pi(N)} ... A_{pi(1)}: the gate in slot 0 acts first."""
    product = np.eye(np.asarray(matrices[0]).shape[-1], dtype=complex)
    for gate in order.slots:
        product = matrices[gate] @ product
    return product


def ancilla_operator(layout: SwitchLayout, coherent: bool = False) -> np.ndarray:
    """
    Order-control observable part on the ancilla: the projector onto E, or with
    `coherent` the all-ones E x E block that also reads |pi_i><pi_j| coherences.
    """
    operator = np.zeros((2 ** layout.n_alpha, 2 ** layout.n_alpha), dtype=complex)
    effective = layout.n_orders
    if coherent:
        operator[:effective, :effective] = 1.0
    else:
        operator[np.arange(effective), np.arange(effective)] = 1.0
    return operator


def order_coherence(layout: SwitchLayout, left: np.ndarray, left_label: int, right: np.ndarray,
                    right_label: int, target_op: np.ndarray) -> np.ndarray:
    """
    <psi_left|B^t|psi_right> between the target branches of two final states, each read
    at its own ancilla label. Working, control and history factors are contracted.
    """
    shape = layout.sector_shape()
    bra = np.asarray(left).reshape(-1, *shape)[:, :, left_label]
    ket = np.asarray(right).reshape(-1, *shape)[:, :, right_label]
    values = np.einsum('bhmt,tu,bhmu->b', bra.conj(), target_op, ket, optimize=True)
    return values if np.ndim(left) > 1 else values[0]


def target_branch(layout: SwitchLayout, amplitudes: np.ndarray, label: int) -> np.ndarray:
    """(B, rest, d) amplitudes of the ancilla-|label> branch with the target axis last."""
    history, _, middle, target = layout.sector_shape()
    psi = np.asarray(amplitudes).reshape(-1, *layout.sector_shape())[:, :, label]
    return psi.reshape(-1, history * middle, target)


def target_fidelity(layout: SwitchLayout, amplitudes: np.ndarray, label: int, expected: np.ndarray) -> np.ndarray:
    """<phi|rho_t|phi> of the target in the |label> branch against expected states phi (B, d)."""
    branch = target_branch(layout, amplitudes, label)
    overlaps = np.einsum('bkt,bt->bk', branch, np.asarray(expected).conj())
    return np.sum(np.abs(overlaps) ** 2, axis=1)


def field_probability(layout: SwitchLayout, amplitudes: np.ndarray, start: int, width: int, value: int) -> np.ndarray:
    """Probability that register field [start, start + width) reads `value`."""
    probabilities = np.abs(np.atleast_2d(amplitudes)) ** 2
    mask = layout.field(np.arange(probabilities.shape[-1]), start, width) == value
    return probabilities[:, mask].sum(axis=1)
