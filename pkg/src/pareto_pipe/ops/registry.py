"""Name lookup for risk functionals and weight functions.

Risk functionals (``mean``, ``max``, ``site``, ...) and gradient-score
weight functions register themselves here at import time. The config
schema builds its discriminated unions from :data:`REGISTRY`, and the CLI
offers the registered risk names as ``--risk`` choices.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, Literal

from loguru import logger
from pydantic import BaseModel

from pareto_pipe.ops.base import BaseOp


@dataclass
class RegistryEntry:
    """A registered functional and the model validating its parameters.

    Attributes:
        op_class: Risk functional or weight function class.
        param_model: Its ``Params`` model, or a bare ``BaseModel`` when the
            functional takes no parameters.
    """

    op_class: type[BaseOp]
    param_model: type[BaseModel]


Kind = Literal[
    "risk_functional",
    "weight_function",
]

REGISTRY: dict[Kind, dict[str, RegistryEntry]] = {
    "risk_functional": {},
    "weight_function": {},
}


def register(kind: Kind, name: str) -> Callable[[type[BaseOp]], type[BaseOp]]:
    """Class decorator adding a functional to :data:`REGISTRY`.

    Args:
        kind: ``"risk_functional"`` or ``"weight_function"``.
        name: Config name, e.g. ``"lp_norm"``; unique within ``kind``.

    Raises:
        ValueError: If another class already holds ``name``.
    """

    def deco(cls: type[BaseOp]) -> type[BaseOp]:
        taken = REGISTRY[kind].get(name)
        if taken is not None and taken.op_class is not cls:
            logger.error(f"Duplicate {kind} name '{name}'.")
            raise ValueError(
                f"{kind} '{name}' is already registered by "
                f"{taken.op_class.__name__}."
            )
        param_model = getattr(cls, "Params", BaseModel)
        REGISTRY[kind][name] = RegistryEntry(
            op_class=cls, param_model=param_model
        )
        cls.kind = kind
        cls.type_name = name
        return cls

    return deco


def build_op(kind: Kind, name: str, **cfg: Any) -> BaseOp:
    """Instantiates a registered risk functional or weight function.

    Args:
        kind: ``"risk_functional"`` or ``"weight_function"``.
        name: Registered name.
        **cfg: Parameters, validated by the class's ``Params`` model.

    Raises:
        ValueError: If ``kind`` or ``name`` is unknown.
    """
    if kind not in REGISTRY:
        kinds = ", ".join(sorted(REGISTRY))
        raise ValueError(f"Unknown kind '{kind}'. Available kinds: {kinds}")

    entries = REGISTRY[kind]
    if name not in entries:
        names = ", ".join(sorted(entries)) or "(none)"
        raise ValueError(f"Unknown {kind} '{name}'. Available: {names}")

    return entries[name].op_class(**cfg)
