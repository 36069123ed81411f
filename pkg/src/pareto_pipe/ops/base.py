from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any

import numpy as np
from loguru import logger
from pydantic import (
    BaseModel,
    ConfigDict,
    ValidationError,
    model_validator,
)


class ParamsBase(BaseModel):
    """Base model for operator parameters that logs warnings for missing optional parameters."""

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="before")
    @classmethod
    def _log_missing_optional_params(cls, data: Any) -> Any:
        """Checks for optional fields that are missing from the input data and logs a warning.

        Args:
            data: The input dictionary of parameters.

        Returns:
            The input dictionary.
        """
        if not isinstance(data, dict):
            return data

        for field_name, field_info in cls.model_fields.items():
            default_value = field_info.get_default()
            if default_value is not None and field_name not in data:
                logger.warning(
                    f"{cls.__qualname__}: Parameter {field_name} not provided. Using default value: {default_value}."
                )

        return data


class BaseOp(ABC):
    """Common base of the pluggable operators (risk and weight functions).

    Attributes:
        kind: Operator category ("risk_functional" or "weight_function").
            Assigned by the registry.
        type_name: Name under which the operator is registered (e.g. "max").
            Assigned by the registry.
        cfg: Raw keyword configuration.
        params: Validated ``Params`` instance.
    """

    kind: str
    type_name: str

    class _NoParamsModel(BaseModel):
        model_config = ConfigDict(extra="forbid")

    Params: type[BaseModel] = _NoParamsModel

    def __init__(self, **cfg: Any) -> None:
        self.cfg = dict(cfg)
        self.validate_config()

    def validate_config(self) -> None:
        """Validates configuration using the class's 'Params' model.

        Raises:
            ValueError: If the configuration is invalid according to the Params model.
        """
        try:
            self.params = self.Params(**self.cfg)
        except ValidationError as e:
            raise ValueError(
                f"Parameters for '{self.type_name}' are not correct: {e}"
            ) from e

    def __repr__(self) -> str:
        """Returns an unambiguous, developer-oriented representation of the object."""
        return (
            f"<{self.__class__.__name__}("
            f"kind='{getattr(self, 'kind', '?')}', "
            f"type='{getattr(self, 'type_name', '?')}', "
            f"cfg={self.cfg})>"
        )

    def __str__(self) -> str:
        """Returns a human-friendly string representation of the object."""
        return f"{self.kind}:{self.type_name} {self.cfg}"


class RiskFunctional(BaseOp):
    """A 1-homogeneous map from a field on the D sites to a scalar risk.

    Capability flags:
        LINEAR: The functional is a weighted sum of site values; episodes
            can be drawn with the mixture sampler.
        THETA_ONE: The exceedance set ``{r >= 1}`` has unit exponent measure
            under standardized margins, so the likelihood needs no
            normaliser.
        DIFFERENTIABLE: ``gradient`` is available on the positive orthant.
    """

    LINEAR: bool = False
    THETA_ONE: bool = False
    DIFFERENTIABLE: bool = False

    @abstractmethod
    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """Risk of each field in ``z`` (shape ``(..., D)``)."""
        ...

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.evaluate(np.asarray(z, dtype=float))

    def validate_dimension(self, n_sites: int) -> None:
        """Checks that the functional is defined on ``n_sites`` sites.

        Raises:
            ValueError: If the parameters do not fit the site count.
        """
        if n_sites < 1:
            raise ValueError("A risk functional needs at least one site.")

    def gradient(self, z: np.ndarray) -> np.ndarray:
        """Partial derivatives of the risk, same shape as ``z``."""
        raise ValueError(
            f"Risk functional '{self.type_name}' is not differentiable."
        )

    def linear_weights(self, n_sites: int) -> np.ndarray:
        """Site weights of a linear functional."""
        raise ValueError(f"Risk functional '{self.type_name}' is not linear.")

    @abstractmethod
    def dominating_constant(self, n_sites: int) -> float:
        """Smallest ``M`` with ``r(z) <= M * mean(z)`` for all ``z >= 0``."""
        ...


class WeightFunction(BaseOp):
    """Weights of the gradient score and their partial derivatives."""

    @abstractmethod
    def evaluate(
        self, z: np.ndarray, risk: RiskFunctional
    ) -> tuple[np.ndarray, np.ndarray]:
        """Returns ``(w, dw)`` with ``dw[..., j] = d w_j / d z_j``.

        Args:
            z: Episodes, shape ``(n, D)``.
            risk: Risk functional of the episodes.
        """
        ...
