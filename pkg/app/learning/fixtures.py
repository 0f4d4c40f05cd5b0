"""
Published optimal parameter vectors, replayed verbatim.

The switch-model vectors were obtained with an ancilla entangler whose CNOT topology is
not documented; replaying them through the chain-plus-skip block used here is reported,
not asserted.
"""
from typing import Dict, List

from app.models.learning import ModelKind
from app.models.switch import Permutation

# U(theta, phi, lam) R_Y(x2) R_Z(x1); reported accuracy 50%
FIXED_ORDER_PARAMS: List[float] = [1.6623, 0.8838, 1.5971]

# Order [1, 0, 2]: U R_Z(x1) R_Y(x2)
FIXED_ORDER_102_PARAMS: List[float] = [1.6623, 1.5971, 0.7883]
FIXED_ORDER_102 = Permutation.of(1, 0, 2)

# Classical 3-switch; reported accuracy 62%
CLASSICAL_PARAMS: List[float] = [
    1.7567, 2.2360, 0.7842,
    0.9630, 0.2881, 0.7284, 1.8383, 0.8536, -0.0387, 0.0011, 0.4796, 0.7081,
]

# Quantum 3-switch; reported accuracy 86%
QUANTUM_PARAMS: List[float] = [
    1.6628, 1.6813, 1.3400,
    1.4326, 1.5209, 0.0921, 0.5260, 0.9382, 1.2003, 1.5877, -0.3781, -0.5879,
]

REPORTED_ACCURACY: Dict[ModelKind, float] = {
    ModelKind.FIXED: 0.50,
    ModelKind.CLASSICAL: 0.62,
    ModelKind.QUANTUM: 0.86,
    ModelKind.REUPLOAD: 0.78,
}

REPLAY_PARAMS: Dict[ModelKind, List[float]] = {
    ModelKind.FIXED: FIXED_ORDER_PARAMS,
    ModelKind.CLASSICAL: CLASSICAL_PARAMS,
    ModelKind.QUANTUM: QUANTUM_PARAMS,
}
