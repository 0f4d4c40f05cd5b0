from typing import Callable, Dict, List, Literal, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from app.models.circuit import SPECTRAL_ATOL
from app.models.switch import Permutation
from app.utils.error_handlers import ValidationError


class FourierSeries(BaseModel):
    """
    Coefficients c_w of f(x) = sum_w c_w exp(i w x).

    Series of real-valued functions satisfy c_{-w} = conj(c_w); single coherence terms
    <psi_a|O|psi_b> between different orders are complex and are built with
    real_valued=False.
    """
    model_config = ConfigDict(frozen=True)

    terms: Dict[float, complex]
    real_valued: bool = True

    @model_validator(mode="after")
    def _check_reality(self):
        if self.real_valued:
            for omega, c in self.terms.items():
                partner = self.coefficient(-omega)
                if abs(partner - np.conj(c)) > SPECTRAL_ATOL:
                    raise ValidationError("terms", f"c({-omega}) != conj(c({omega})): {partner} vs {c}")
        return self

    def coefficient(self, omega: float, tol: float = 1e-6) -> complex:
        for key, c in self.terms.items():
            if abs(key - omega) <= tol:
                return complex(c)
        return 0j

    def frequencies(self) -> List[float]:
        return sorted(self.terms)

    def support(self, threshold: float = 1e-8) -> List[float]:
        """Frequencies carrying a coefficient above threshold."""
        return [omega for omega in self.frequencies() if abs(self.terms[omega]) > threshold]

    def max_abs_beyond(self, max_freq: float) -> float:
        beyond = [abs(c) for omega, c in self.terms.items() if abs(omega) > max_freq + 1e-9]
        return max(beyond, default=0.0)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape, dtype=complex)
        for omega, c in self.terms.items():
            total += c * np.exp(1j * omega * x)
        return total.real if self.real_valued else total

    def to_frame(self) -> pd.DataFrame:
        omegas = self.frequencies()
        return pd.DataFrame({
            "frequency": omegas,
            "re": [float(np.real(self.terms[w])) for w in omegas],
            "im": [float(np.imag(self.terms[w])) for w in omegas],
            "abs": [float(abs(self.terms[w])) for w in omegas],
        })


class ModelFunction:
    """
    A real function of the encoded input x, vectorized over numpy arrays.

    `bound` is the operator norm of the measured observable; evaluations beyond it
    indicate a broken model.
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], description: str,
                 bound: float = np.inf):
        self._fn = fn
        self.description = description
        self.bound = bound

    def __call__(self, x) -> np.ndarray:
        x_arr = np.asarray(x, dtype=float)
        values = np.asarray(self._fn(np.atleast_1d(x_arr)), dtype=float).reshape(np.atleast_1d(x_arr).shape)
        if np.any(np.abs(values) > self.bound + SPECTRAL_ATOL):
            raise ValidationError("bound", f"{self.description} exceeds its observable norm {self.bound}")
        return values if x_arr.ndim else values[0]

    def __repr__(self) -> str:
        return f"ModelFunction({self.description})"


class OrderMode(BaseModel):
    """Which order pair a coefficient computation refers to: fixed(pi) or cross(pi', pi)."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["fixed", "cross"]
    order: Permutation
    left: Optional[Permutation] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "cross" and self.left is None:
            raise ValidationError("left", "Cross mode needs the bra order")
        if self.left is not None and self.left.n != self.order.n:
            raise ValidationError("left", "Both orders must permute the same gates")
        return self

    @classmethod
    def fixed(cls, order: Permutation) -> "OrderMode":
        return cls(kind="fixed", order=order)

    @classmethod
    def cross(cls, left: Permutation, right: Permutation) -> "OrderMode":
        return cls(kind="cross", order=right, left=left)

    @property
    def bra(self) -> Permutation:
        return self.left if self.kind == "cross" else self.order
