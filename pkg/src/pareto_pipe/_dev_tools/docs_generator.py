from __future__ import annotations

import inspect
import sys
from pathlib import Path

# Ensure the package is in the path so we can import it relative to this script
sys.path.append(str(Path(__file__).parents[2]))

from pydantic import BaseModel  # noqa: E402
from pydantic_core import PydanticUndefined  # noqa: E402

# Importing the package triggers the @register decorators
from pareto_pipe.ops import REGISTRY  # noqa: E402

CAPABILITIES = ("LINEAR", "THETA_ONE", "DIFFERENTIABLE")


def _parameter_lines(params_model: type[BaseModel] | None) -> list[str]:
    if (
        not params_model
        or params_model is BaseModel
        or not params_model.model_fields
    ):
        return ["*   **Parameters**: None."]

    lines = ["*   **Parameters**:"]
    for field_name, field_info in params_model.model_fields.items():
        desc = field_info.description or "No description."
        default_val = field_info.get_default()
        default_str = ""
        if default_val is not None and default_val != PydanticUndefined:
            default_str = f", default=`{default_val}`"
        type_name = str(field_info.annotation).replace("typing.", "")
        lines.append(f"    *   `{field_name}` ({type_name}{default_str}): {desc}")
    return lines


def generate_operators_docs() -> str:
    """Generates Markdown documentation for all registered operators.

    Returns:
        A string containing the generated Markdown documentation.
    """
    output = ["# Risk functionals and weight functions"]
    output.append(
        "Select them in the configuration with `type:` and `parameters:` "
        "under `risk` and `fit.weights`."
    )
    output.append("")

    for kind in sorted(REGISTRY.keys()):
        operators = REGISTRY[kind]
        if not operators:
            continue

        output.append("---")
        output.append(f"## {kind.replace('_', ' ').title()}s")
        output.append("")

        for name in sorted(operators.keys()):
            entry = operators[name]
            cls = entry.op_class

            output.append(f"### `{name}`")
            output.append("")
            doc = inspect.getdoc(cls)
            if doc:
                output.append(doc)
                output.append("")

            output.append('<details markdown="1">')
            output.append("<summary><b>Technical Specs</b></summary>")
            output.append("")
            flags = [f for f in CAPABILITIES if getattr(cls, f, False)]
            if kind == "risk_functional":
                output.append(
                    f"*   **Capabilities**: {', '.join(flags) or 'none'}"
                )
            output.extend(_parameter_lines(entry.param_model))
            output.append("</details>")
            output.append("")

    return "\n".join(output)


def main() -> None:
    """Main entry point for generating documentation."""
    docs_dir = Path(__file__).parents[3] / "docs"
    ops_path = docs_dir / "usage" / "operators.md"
    new_content = generate_operators_docs()

    current_content = ""
    if ops_path.exists():
        current_content = ops_path.read_text(encoding="utf-8")

    # Only write if the content is truly different
    if new_content.strip() != current_content.strip():
        ops_path.write_text(new_content, encoding="utf-8")
        print(f"Generated: {ops_path}")
    else:
        print(f"No changes detected in {ops_path.name}")


if __name__ == "__main__":
    main()
