from __future__ import annotations

from .core import (
    DEFAULT_PENALTY_THRESHOLD,
    Evaluator,
    LLMJudgeEvaluator,
    LogLikelihoodEvaluator,
    MathVerifyEvaluator,
    StringMatchEvaluator,
    Verdict,
    apply_language_penalty,
    llm_judge_eval,
    loglikelihood_eval,
    math_verify_eval,
    string_match_eval,
)
from .judge import TEMPLATE_IDS, build_judge_prompt, parse_judge_verdict
from .mathverify import parse_math_value, render_math_value, values_equal
from .text import (
    DEFAULT_RULES,
    EXTRACTION_RULES_VERSION,
    ExtractionRules,
    extract_answer,
    hangul_ratio,
    normalize_text,
)

__all__ = [
    "DEFAULT_PENALTY_THRESHOLD",
    "DEFAULT_RULES",
    "EXTRACTION_RULES_VERSION",
    "Evaluator",
    "ExtractionRules",
    "LLMJudgeEvaluator",
    "LogLikelihoodEvaluator",
    "MathVerifyEvaluator",
    "StringMatchEvaluator",
    "TEMPLATE_IDS",
    "Verdict",
    "apply_language_penalty",
    "build_judge_prompt",
    "extract_answer",
    "hangul_ratio",
    "llm_judge_eval",
    "loglikelihood_eval",
    "math_verify_eval",
    "normalize_text",
    "parse_judge_verdict",
    "parse_math_value",
    "render_math_value",
    "string_match_eval",
    "values_equal",
]


def register(registry) -> None:
    from ..registry import ComponentEntry, ComponentKind

    def entry(name: str, factory, description: str) -> None:
        registry.register(ComponentKind.EVALUATOR, name, ComponentEntry(name, factory, description))

    entry("string_match", lambda p: StringMatchEvaluator(), "normalised exact match on the extracted answer")
    entry(
        "log_likelihood",
        lambda p: LogLikelihoodEvaluator(bool(p.get("length_normalize", False))),
        "argmax of option continuation logprobs",
    )
    entry("math_verify", lambda p: MathVerifyEvaluator(), "numeric equivalence of parsed answers")
    entry(
        "llm_judge",
        lambda p: LLMJudgeEvaluator(p.get("judge_template", "default_ko"), p.get("judge_backend")),
        "judge model verdict from a rendered template",
    )
