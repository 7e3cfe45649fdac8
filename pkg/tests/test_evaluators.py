from __future__ import annotations

import unicodedata
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kheval.backends import MockBackend
from kheval.datasets import Sample, scoring_context
from kheval.errors import ParseFailure, UnknownTemplate
from kheval.evaluators import (
    apply_language_penalty,
    build_judge_prompt,
    extract_answer,
    hangul_ratio,
    llm_judge_eval,
    loglikelihood_eval,
    math_verify_eval,
    normalize_text,
    parse_judge_verdict,
    parse_math_value,
    string_match_eval,
)
from kheval.evaluators.core import Verdict
from kheval.evaluators.judge import EMPTY_RESPONSE, JSON_ONLY_SUFFIX
from kheval.evaluators.mathverify import render_math_value

# -- normalisation and extraction --------------------------------------------


@pytest.mark.parametrize(
    "raw,want",
    [
        ("  Answer:  B.  ", "answer: b"),
        ("정답은  서울 ", "정답은 서울"),
        ("가", "가"),
        ('"(서울)"', "서울"),
        ("ÀB", "àb"),
    ],
)
def test_normalize_text(raw, want):
    assert normalize_text(raw) == want


def test_normalize_leaves_hangul_bytes_alone():
    text = "세종대왕은 한글을 만들었다"
    assert normalize_text(text).encode() == text.encode()


@pytest.mark.parametrize(
    "text,want",
    [
        ("풀이: 3+39를 계산하면 따라서 정답: 42", "42"),
        ("I think the answer is (B)", "b"),
        ("x = 3이고 y = 7", "7"),
        ("정답은 B입니다", "b"),
        ("정답: C) 서울", "c"),
        ("보기 A와 D 중에서 D가 맞다", "d"),
        ("정답: 100도", "100도"),
        ("잘 모르겠습니다", "잘 모르겠습니다"),
        ("", ""),
        ("정답:\n\n  3,000원\n다음 줄", "3,000원"),
    ],
)
def test_extract_answer(text, want):
    assert extract_answer(text) == want


def test_last_marker_wins():
    assert extract_answer("답: 1 ... 다시 보니 정답: 2") == "2"


# -- string match ------------------------------------------------------------


def test_string_match_examples():
    assert string_match_eval(Sample("a", "?", "4"), "정답: 4").correct
    assert not string_match_eval(Sample("a", "?", "1/2"), "...so the answer is 0.5").correct
    mcq = Sample("a", "?", "B", options=("A) 3", "B) 5"))
    assert string_match_eval(mcq, "답: B").correct
    text_ref = Sample("a", "?", "서울", options=("서울", "부산"))
    assert string_match_eval(text_ref, "답: A").correct
    assert string_match_eval(text_ref, "정답: 서울").correct


@given(
    pad=st.text(alphabet=" \t\n", max_size=4),
    tail=st.sampled_from(["", ".", "!", " .", "?"]),
)
def test_string_match_ignores_normalised_noise(pad, tail):
    s = Sample("a", "?", "서울")
    assert string_match_eval(s, f"{pad}정답: 서울{tail}{pad}").correct


# -- math --------------------------------------------------------------------


@pytest.mark.parametrize(
    "text,want",
    [
        ("3,000원", Fraction(3000)),
        ("\\frac{1}{2}", Fraction(1, 2)),
        ("35%", Fraction(35, 100)),
        ("-2.5", Fraction(-5, 2)),
        ("$\\dfrac{3}{4}$", Fraction(3, 4)),
        ("\\sqrt{16}", Fraction(4)),
        ("2^{10}", Fraction(1024)),
        ("(1/2)^2", Fraction(1, 4)),
        ("\\boxed{7}", Fraction(7)),
        ("₩1,200", Fraction(1200)),
        ("12 km", Fraction(12)),
        ("1/2 + 1/3", Fraction(5, 6)),
    ],
)
def test_parse_math_value(text, want):
    value = parse_math_value(text)
    assert isinstance(value, Fraction)
    assert value == want


def test_non_square_root_is_float():
    v = parse_math_value("\\sqrt{2}")
    assert isinstance(v, float) and abs(v - 2**0.5) < 1e-12


@pytest.mark.parametrize("text", ["", "서울", "1/0", "3 +", "\\frac{1}"])
def test_parse_failures(text):
    with pytest.raises(ParseFailure):
        parse_math_value(text)


def test_math_verify_examples():
    assert math_verify_eval(Sample("a", "?", "1/2"), "0.5").correct
    assert math_verify_eval(Sample("a", "?", "3000"), "정답: 3,000원").correct
    assert not math_verify_eval(Sample("a", "?", "3000"), "정답: 모름").correct
    # literal hits carry over, unparseable non-matches stay wrong
    assert math_verify_eval(Sample("a", "?", "B", options=("x", "y")), "답: B").correct
    assert not math_verify_eval(Sample("a", "?", "서울"), "정답: 부산").correct


def test_two_thirds_vs_rounded_decimal():
    # the gap is far above the relative tolerance, so this must be incorrect
    mpmath.mp.dps = 40
    gap = abs(mpmath.mpf("0.6667") - mpmath.mpf(2) / 3)
    tol = max(mpmath.mpf("1e-9"), mpmath.mpf("1e-6") * mpmath.mpf("0.6667"))
    assert gap > 40 * tol
    assert not math_verify_eval(Sample("a", "?", "2/3"), "0.6667").correct
    # a float side within tolerance does match
    assert math_verify_eval(Sample("a", "?", "\\sqrt{2}"), "1.41421356237").correct


def test_math_round_trip_on_fixture(math_items):
    for s in math_items:
        value = parse_math_value(s.reference)
        assert parse_math_value(render_math_value(value)) == value


# -- log-likelihood ----------------------------------------------------------


def _scored(sample, scores):
    ctx = scoring_context(sample)
    return MockBackend(score_table={(ctx, o): v for o, v in zip(sample.options, scores)})


def test_loglikelihood_argmax_and_ties():
    s = Sample("a", "?", "B", options=("x", "y", "z"))
    v = loglikelihood_eval(s, _scored(s, [-5.0, -2.0, -9.0]))
    assert v.correct and v.extracted == "y" and v.option_scores == (-5.0, -2.0, -9.0)
    tie = loglikelihood_eval(s, _scored(s, [-1.0, -1.0, -1.0]))
    assert tie.extracted == "x" and not tie.correct


@given(st.lists(st.floats(-50, 0), min_size=4, max_size=4), st.floats(-10, 10))
def test_loglikelihood_shift_invariance(scores, shift):
    s = Sample("a", "?", "A", options=("p", "q", "r", "s"))
    scores = [round(x, 3) for x in scores]
    base = loglikelihood_eval(s, _scored(s, scores)).extracted
    shifted = loglikelihood_eval(s, _scored(s, [x + round(shift, 3) for x in scores])).extracted
    # exact float ties can only be created, never broken, by rounding the sum
    if len(set(scores)) == 4 and len({x + round(shift, 3) for x in scores}) == 4:
        assert base == shifted


def test_length_normalisation_flag():
    s = Sample("a", "?", "A", options=("긴 보기입니다", "짧"))
    backend = _scored(s, [-6.0, -3.0])
    assert loglikelihood_eval(s, backend).extracted == "짧"
    assert loglikelihood_eval(s, backend, length_normalize=True).extracted == "긴 보기입니다"


# -- judge -------------------------------------------------------------------


def test_judge_prompt_templates(gen_items):
    s = gen_items[0]
    default = build_judge_prompt(s, "세종대왕이 만들었습니다")
    assert s.input in default and s.reference in default and "세종대왕이 만들었습니다" in default
    assert '"correct"' in default
    honorific = build_judge_prompt(s, "세종대왕이 만들었음", "honorific_ko")
    assert "높임법" in honorific and "높임법" not in default
    assert EMPTY_RESPONSE in build_judge_prompt(s, "   ")
    with pytest.raises(UnknownTemplate):
        build_judge_prompt(s, "x", "nope")


def test_judge_prompt_does_not_expand_placeholders_in_output():
    s = Sample("a", "{{reference}}?", "정답")
    prompt = build_judge_prompt(s, "{{question}}")
    assert prompt.count("{{question}}") == 1 and prompt.count("{{reference}}") == 1


def test_custom_template_file(tmp_path):
    path = tmp_path / "mine.txt"
    path.write_text("Q={{question}} R={{reference}} A={{response}}", encoding="utf-8")
    assert build_judge_prompt(Sample("a", "질문", "답"), "응답", str(path)) == "Q=질문 R=답 A=응답"


@pytest.mark.parametrize(
    "text,want",
    [
        ('{"correct": true, "reason": "일치"}', (True, True)),
        ('판정 결과는 다음과 같습니다 {"correct": false, "reason": "불일치"} 끝', (False, True)),
        ('{"score": 1} {"correct": true}', (True, True)),
        ("판정: 오답입니다", (False, True)),
        ("This is INCORRECT", (False, True)),
        ("정답으로 판단함", (True, True)),
        ("I cannot evaluate this.", (False, False)),
        ('{"correct": "yes"}', (False, False)),
        ('{"correct": "no"} 오답', (False, True)),
    ],
)
def test_parse_judge_verdict(text, want):
    assert parse_judge_verdict(text) == want


def test_llm_judge_retry_path(gen_items):
    s = gen_items[0]
    prompt = build_judge_prompt(s, "답변")
    judge = MockBackend(judge_responses={prompt: "잘 모르겠네요", prompt + JSON_ONLY_SUFFIX: '{"correct": true}'})
    v = llm_judge_eval(s, "답변", judge)
    assert v.correct and v.judge_valid and v.judge_raw == '{"correct": true}'
    assert judge.calls == 2


def test_llm_judge_still_invalid(gen_items):
    s = gen_items[0]
    judge = MockBackend(judge_responses={build_judge_prompt(s, "답변"): "??", build_judge_prompt(s, "답변") + JSON_ONLY_SUFFIX: "!!"})
    v = llm_judge_eval(s, "답변", judge)
    assert not v.correct and v.judge_valid is False and v.judge_raw == "!!"


# -- Hangul ratio and penalty ------------------------------------------------


def _script_count(text):
    letters = [c for c in text if unicodedata.category(c).startswith("L")]
    hangul = [c for c in letters if unicodedata.name(c).startswith("HANGUL")]
    return Fraction(len(hangul), len(letters)) if letters else Fraction(1)


@pytest.mark.parametrize(
    "text,want",
    [("안녕하세요", Fraction(1)), ("hello", Fraction(0)), ("안녕 hello", Fraction(2, 7)), ("정답: B", Fraction(2, 3)), ("42 + 7", Fraction(1))],
)
def test_hangul_ratio(text, want):
    assert _script_count(text) == want
    assert hangul_ratio(text) == float(want)


def test_hangul_ratio_counts_jamo_blocks():
    assert hangul_ratio("ㅋㅋ ok") == 0.5
    assert hangul_ratio("가") == 1.0


def test_language_penalty():
    v = Verdict("a", "hello", "hello", True, "string_match", score=1.0)
    hit = apply_language_penalty(v, 0.1)
    assert (hit.correct, hit.penalty_applied, hit.score, hit.hangul_ratio) == (False, True, 0.0, 0.1)
    assert apply_language_penalty(hit, 0.1) == hit
    ok = apply_language_penalty(v, 0.9)
    assert ok.correct and not ok.penalty_applied and ok.hangul_ratio == 0.9
    assert apply_language_penalty(v, 0.0, threshold=0.0).correct
    with pytest.raises(ValueError):
        apply_language_penalty(v, 0.5, threshold=1.5)
