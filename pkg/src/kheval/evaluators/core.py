from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Any

from ..backends.base import Backend, GenerationParams
from ..datasets import OPTION_SEPARATOR, Sample
from ..errors import ParseFailure
from .judge import JSON_ONLY_SUFFIX, build_judge_prompt, parse_judge_verdict
from .mathverify import parse_math_value, values_equal
from .text import DEFAULT_RULES, ExtractionRules, extract_answer, hangul_ratio, letter_index, normalize_text

DEFAULT_PENALTY_THRESHOLD = 0.5


@dataclass(frozen=True)
class Verdict:
    sample_id: str
    raw_output: str
    extracted: str
    correct: bool
    method: str
    score: float | None = None
    penalty_applied: bool = False
    hangul_ratio: float = 1.0
    judge_raw: str | None = None
    judge_valid: bool | None = None
    infra_error: bool = False
    option_scores: tuple[float, ...] | None = None
    vote_tally: dict[str, int] | None = None

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        if self.option_scores is not None:
            out["option_scores"] = list(self.option_scores)
        return out


def _binary(sample: Sample, output: str, extracted: str, correct: bool, method: str) -> Verdict:
    return Verdict(
        sample_id=sample.id,
        raw_output=output,
        extracted=extracted,
        correct=correct,
        method=method,
        score=1.0 if correct else 0.0,
        hangul_ratio=hangul_ratio(output),
    )


def string_match_eval(sample: Sample, output: str, rules: ExtractionRules = DEFAULT_RULES) -> Verdict:
    extracted = extract_answer(output, rules)
    correct = extracted == normalize_text(sample.reference)
    if not correct and sample.options is not None:
        idx = letter_index(extracted)
        correct = idx is not None and idx == sample.answer_index
    return _binary(sample, output, extracted, correct, "string_match")


def math_verify_eval(sample: Sample, output: str, rules: ExtractionRules = DEFAULT_RULES) -> Verdict:
    # a literal match is trivially equivalent, so string_match hits stay hits
    # (letter answers, non-numeric references); otherwise compare values
    literal = string_match_eval(sample, output, rules)
    if literal.correct:
        return _binary(sample, output, literal.extracted, True, "math_verify")
    extracted = literal.extracted
    try:
        correct = values_equal(parse_math_value(sample.reference), parse_math_value(extracted))
    except ParseFailure:
        correct = False
    return _binary(sample, output, extracted, correct, "math_verify")


def loglikelihood_eval(
    sample: Sample,
    backend: Backend,
    length_normalize: bool = False,
    separator: str = OPTION_SEPARATOR,
) -> Verdict:
    """Pick the option whose continuation the backend finds most likely.

    With *length_normalize* each total is divided by the option's character
    length. Ties go to the lowest index.
    """
    if sample.options is None:
        raise ValueError(f"sample {sample.id} has no options to score")
    context = sample.input + separator
    scores = []
    for option in sample.options:
        total, _ = backend.score_continuation(context, option)
        scores.append(total / max(1, len(option)) if length_normalize else total)
    predicted = max(range(len(scores)), key=lambda i: (scores[i], -i))
    correct = predicted == sample.answer_index
    text = sample.options[predicted]
    return Verdict(
        sample_id=sample.id,
        raw_output=text,
        extracted=text,
        correct=correct,
        method="log_likelihood",
        score=1.0 if correct else 0.0,
        hangul_ratio=hangul_ratio(text),
        option_scores=tuple(scores),
    )


def llm_judge_eval(
    sample: Sample,
    output: str,
    judge_backend: Backend,
    template_id: str = "default_ko",
    rules: ExtractionRules = DEFAULT_RULES,
) -> Verdict:
    prompt = build_judge_prompt(sample, output, template_id)
    params = GenerationParams(temperature=0.0, n=1)
    reply = judge_backend.judge(prompt, params).text
    correct, valid = parse_judge_verdict(reply)
    if not valid:
        reply = judge_backend.judge(prompt + JSON_ONLY_SUFFIX, params).text
        correct, valid = parse_judge_verdict(reply)
    correct = correct and valid
    return Verdict(
        sample_id=sample.id,
        raw_output=output,
        extracted=extract_answer(output, rules),
        correct=correct,
        method="llm_judge",
        score=1.0 if correct else 0.0,
        hangul_ratio=hangul_ratio(output),
        judge_raw=reply,
        judge_valid=valid,
    )


def apply_language_penalty(verdict: Verdict, ratio: float, threshold: float = DEFAULT_PENALTY_THRESHOLD) -> Verdict:
    """Force a verdict incorrect when its Hangul ratio falls below *threshold*."""
    if not 0 <= threshold <= 1:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    if ratio < threshold:
        return replace(verdict, correct=False, score=0.0, penalty_applied=True, hangul_ratio=ratio)
    return replace(verdict, hangul_ratio=ratio)


class Evaluator:
    """Registry-facing wrapper around one scoring function."""

    name = "evaluator"
    needs_generation = True

    def evaluate(self, sample: Sample, output: str | None, backend: Backend | None = None) -> Verdict:
        raise NotImplementedError

    def describe(self) -> dict[str, Any]:
        return {"method": self.name}


class StringMatchEvaluator(Evaluator):
    name = "string_match"

    def __init__(self, rules: ExtractionRules = DEFAULT_RULES):
        self.rules = rules

    def evaluate(self, sample, output, backend=None):
        return string_match_eval(sample, output or "", self.rules)


class MathVerifyEvaluator(Evaluator):
    name = "math_verify"

    def __init__(self, rules: ExtractionRules = DEFAULT_RULES):
        self.rules = rules

    def evaluate(self, sample, output, backend=None):
        return math_verify_eval(sample, output or "", self.rules)


class LogLikelihoodEvaluator(Evaluator):
    name = "log_likelihood"
    needs_generation = False

    def __init__(self, length_normalize: bool = False):
        self.length_normalize = length_normalize

    def evaluate(self, sample, output, backend=None):
        if backend is None:
            raise ValueError("log_likelihood scoring needs a backend")
        return loglikelihood_eval(sample, backend, self.length_normalize)

    def describe(self):
        return {"method": self.name, "length_normalize": self.length_normalize}


class LLMJudgeEvaluator(Evaluator):
    name = "llm_judge"

    def __init__(self, template_id: str = "default_ko", judge_backend: Backend | None = None):
        self.template_id = template_id
        self.judge_backend = judge_backend

    def evaluate(self, sample, output, backend=None):
        judge = self.judge_backend or backend
        if judge is None:
            raise ValueError("llm_judge needs a judge backend")
        return llm_judge_eval(sample, output or "", judge, self.template_id)

    def describe(self):
        return {"method": self.name, "judge_template": self.template_id}
