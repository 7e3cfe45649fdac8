"""Judge prompt templates and verdict parsing for LLM-as-a-judge scoring."""

from __future__ import annotations

import json
import re
from importlib import resources
from pathlib import Path

from ..datasets import Sample, format_prompt
from ..errors import UnknownTemplate

TEMPLATE_IDS = ("default_ko", "honorific_ko")
EMPTY_RESPONSE = "(응답 없음)"
JSON_ONLY_SUFFIX = "\n\nJSON만 출력하세요."

_PLACEHOLDER = re.compile(r"\{\{(question|reference|response)\}\}")
_CORRECT_KEY = re.compile(r"[\"']correct[\"']\s*:")


def load_template(template_id: str) -> str:
    if template_id in TEMPLATE_IDS:
        return resources.files("kheval.data.templates").joinpath(f"{template_id}.txt").read_text(encoding="utf-8")
    path = Path(template_id)
    if path.suffix == ".txt" and path.is_file():
        return path.read_text(encoding="utf-8")
    raise UnknownTemplate(f"unknown judge template {template_id!r}; built-in: {', '.join(TEMPLATE_IDS)}")


def render_template(template: str, question: str, reference: str, response: str) -> str:
    values = {"question": question, "reference": reference, "response": response}
    # single pass, so braces inside the filled-in text are never re-expanded
    return _PLACEHOLDER.sub(lambda m: values[m.group(1)], template)


def _reference_text(sample: Sample) -> str:
    idx = sample.answer_index
    if idx is not None and sample.reference != sample.options[idx]:
        return f"{sample.reference}. {sample.options[idx]}"
    return sample.reference


def build_judge_prompt(sample: Sample, output: str, template_id: str = "default_ko") -> str:
    template = load_template(template_id)
    response = output if output.strip() else EMPTY_RESPONSE
    return render_template(template, format_prompt(sample), _reference_text(sample), response)


def parse_judge_verdict(judge_text: str) -> tuple[bool, bool]:
    """Return ``(correct, valid)`` from a judge reply.

    The first JSON object with a boolean ``correct`` wins. Otherwise a keyword
    scan decides, checking the negative words first since "incorrect"
    contains "correct".
    """
    decoder = json.JSONDecoder()
    for m in re.finditer(r"\{", judge_text):
        try:
            obj, _ = decoder.raw_decode(judge_text, m.start())
        except ValueError:
            continue
        if isinstance(obj, dict) and isinstance(obj.get("correct"), bool):
            return obj["correct"], True
    # a malformed object like {"correct": "no"} must not vote via its own key
    folded = _CORRECT_KEY.sub(" ", judge_text.lower())
    if "incorrect" in folded or "오답" in folded:
        return False, True
    if "correct" in folded or "정답" in folded:
        return True, True
    return False, False
