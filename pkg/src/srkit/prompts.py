"""Prompt assembly for chat-backed equation search.

The output is an OpenAI-style message list: a fixed system message, then one
user message holding the instruction block, the optional memory block, and the
data block. Rendering is deterministic so prompts can be golden-tested.
"""

from __future__ import annotations

from .memory import MemoryBank
from .sampling import DataMatrix

SYSTEM_PROMPT = (
    "You are an exceptional symbolic regression assistant.\n"
    "Your specialty lies in analyzing numerical relationships among data and variables.\n"
    "When provided with mathematical questions or data from humans, you carefully "
    "comprehend the essence of the problem, methodically clarify relationships among variables.\n"
    "Ultimately, you output a precise, concise, and interpretable mathematical formula."
)

INSTRUCTION_PROMPT = (
    "You will be provided with a set of input-output pairs.\n"
    "Based on these data, infer the mathematical relationship between y and "
    "multiple input variables.\n"
    "Please note that the possible mathematical operations include: "
    "+, -, *, /, exp, log, sqrt, sin, arcsin, and constant terms."
)

MEMORY_HEADER = (
    "You can refer to the previously proposed formulas and their corresponding "
    "fitness scores (higher is better), which are stored in pred_dict:"
)

MEMORY_FOOTER = "Please consider these suggestions when generating new formulas."

DATA_HEADER = "The input sample data are as follows:"

DATA_MIDDLE = (
    "Based on the above data, please infer the possible formula.\n"
    "Ensure that your inference applies to all the provided data points, and "
    "consider both linear and nonlinear combinations.\n"
    "Verify whether your formula applies to the following new data point and "
    "adjust it to ensure accuracy:"
)

DATA_FOOTER = (
    "Finally, please output only the formula string you inferred "
    "(e.g. y = 2.52*x_0 + x_1 + 5.4), without any additional information.\n"
    "Do not include any explanation, text, or extra information, only return "
    "the expression string."
)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _row_line(x_row, y_val) -> str:
    parts = [f"x_{j}={_fmt(x_row[j])}" for j in range(len(x_row))]
    parts.append(f"y={_fmt(y_val)}")
    return ", ".join(parts)


def _memory_block(bank: MemoryBank) -> str:
    lines = [MEMORY_HEADER]
    for i, entry in enumerate(bank.entries):
        lines.append(f"{i}: [{entry.equation}, {_fmt(entry.score)}]")
    suggestions = [e.comments for e in bank.entries if e.comments]
    if suggestions:
        lines.append("Based on the analysis, here are some suggestions for improvement:")
        for comment in suggestions:
            lines.append(f"- {comment}")
    lines.append(MEMORY_FOOTER)
    return "\n".join(lines)


def _data_block(data: DataMatrix, prompt_points: int, verify_points: int) -> str:
    k = data.k
    n_show = min(prompt_points, k)
    n_verify = min(verify_points, k - n_show)
    lines = [DATA_HEADER]
    for i in range(n_show):
        lines.append(_row_line(data.x[i], data.y[i]))
    lines.append(DATA_MIDDLE)
    for i in range(n_show, n_show + n_verify):
        lines.append(_row_line(data.x[i], data.y[i]))
    lines.append(DATA_FOOTER)
    return "\n".join(lines)


def build_prompt(
    data: DataMatrix,
    bank: MemoryBank | None,
    prompt_points: int = 40,
    verify_points: int = 5,
) -> list[dict]:
    """Message sequence for one hypothesis request. The memory block appears
    only when the bank holds entries, rendered best-first."""
    blocks = [INSTRUCTION_PROMPT]
    if bank is not None and len(bank) > 0:
        blocks.append(_memory_block(bank))
    blocks.append(_data_block(data, prompt_points, verify_points))
    return [
        {"role": "system", "content": SYSTEM_PROMPT},
        {"role": "user", "content": "\n\n".join(blocks)},
    ]
