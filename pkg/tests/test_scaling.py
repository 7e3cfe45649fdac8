from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

import pytest

from kheval.backends import BackendCapabilities, Candidate, GenerationParams, MockBackend
from kheval.backends.base import Backend
from kheval.errors import CapabilityError, MissingLogprobs
from kheval.scaling import (
    ScalingOutcome,
    Scaler,
    beam_search,
    best_of_n,
    identity_decode,
    majority_vote,
    self_consistency,
)

from .conftest import SELF_CONSISTENCY_EXACT, toy_chain


class Scripted(Backend):
    """Returns a fixed candidate list regardless of the prompt."""

    def __init__(self, cands):
        self.cands = list(cands)

    def generate(self, prompt, params):
        return self.cands[: params.n]


def cand(text, *lps):
    return Candidate(text, tuple((f"t{i}", lp) for i, lp in enumerate(lps)))


def test_outcome_invariants():
    a, b = Candidate("a"), Candidate("b")
    with pytest.raises(ValueError):
        ScalingOutcome(Candidate("c"), (a, b), "x")
    with pytest.raises(ValueError):
        ScalingOutcome(a, (a, b), "x", vote_tally={"a": 1})


def test_identity():
    mock = MockBackend(responses={"p": "정답: 4"})
    out = identity_decode("p", mock, GenerationParams())
    assert out.final.text == "정답: 4" and out.all_candidates == (out.final,)
    assert out.vote_tally is None and out.method == "identity"


def test_best_of_n_uses_per_token_mean():
    # normalised scores -1.2, -0.8, -3.0; raw sums would pick the first
    cands = [cand("a", -1.2), cand("b", -0.8, -0.8), cand("c", -3.0)]
    out = best_of_n("p", Scripted(cands), GenerationParams(), 3)
    assert out.final_index == 1 and out.final.text == "b"


def test_best_of_n_tie_and_missing():
    out = best_of_n("p", Scripted([cand("a", -1.0), cand("b", -0.5, -1.5)]), GenerationParams(), 2)
    assert out.final.text == "a"
    with pytest.raises(MissingLogprobs):
        best_of_n("p", Scripted([Candidate("x")]), GenerationParams(), 1)


def test_best_of_one_equals_identity():
    mock = MockBackend(responses={"p": "하나"})
    assert best_of_n("p", mock, GenerationParams(), 1).final == identity_decode("p", mock, GenerationParams()).final


def test_majority_vote():
    assert majority_vote(["4", "4", "5"]) == ("4", {"4": 2, "5": 1})
    assert majority_vote(["a", "b"])[0] == "a"
    assert majority_vote(["", "x", ""])[0] == ""


def test_self_consistency_tally_and_final():
    cands = [Candidate("정답: 5"), Candidate("정답: 4"), Candidate("답: 4")]
    out = self_consistency("p", Scripted(cands), GenerationParams(), 3)
    assert out.vote_tally == {"5": 1, "4": 2}
    assert out.final.text == "정답: 4" and out.final_index == 1


def test_self_consistency_permutation_invariant_with_strict_majority():
    texts = ["정답: 1", "정답: 2", "정답: 1", "정답: 3", "정답: 1"]
    finals = set()
    for perm in itertools.permutations(texts):
        out = self_consistency("p", Scripted(Candidate(t) for t in perm), GenerationParams(), 5)
        finals.add(out.final.text)
    assert finals == {"정답: 1"}


def test_exact_majority_probability_by_enumeration():
    # independent recomputation of the frozen constant
    probs = [Fraction(2, 5)] + [Fraction(1, 5)] * 3
    total = Fraction(0)
    for seq in itertools.product(range(4), repeat=5):
        winner, _ = majority_vote([str(x) for x in seq])
        if winner == "0":
            total += math.prod((probs[x] for x in seq), start=Fraction(1))
    assert total == Fraction(1592, 3125)
    assert float(total) == SELF_CONSISTENCY_EXACT
    assert total > Fraction(2, 5)


def test_sampling_falls_back_to_one_request_per_sample():
    caps = BackendCapabilities(supports_n_sampling=False)
    mock = MockBackend(distributions={"p": {"정답: 1": 0.5, "정답: 2": 0.5}}, capabilities=caps)
    out = self_consistency("p", mock, GenerationParams(temperature=1.0, seed=3), 4)
    assert len(out.all_candidates) == 4 and mock.calls == 4
    again = self_consistency("p", mock, GenerationParams(temperature=1.0, seed=3), 4)
    assert again.all_candidates == out.all_candidates


# -- beam search -------------------------------------------------------------


def test_three_token_chain_prefers_late_eos():
    # greedy: a then EOS = ln(0.5 * 0.1); alternative: b then EOS = ln(0.4 * 0.9)
    table = {"": {"a": 0.5, "b": 0.4, "</s>": 0.1}, "a": {"</s>": 0.1}, "b": {"</s>": 0.9}}
    mock = MockBackend(next_token=table)
    assert beam_search("", mock, 1, 4).final.text == "a"
    out = beam_search("", mock, 2, 4)
    assert out.final.text == "b"
    assert out.final.cumulative_logprob == pytest.approx(math.log(0.4 * 0.9), abs=1e-12)


def _greedy(table):
    prefix = ""
    while True:
        tok = min(table[prefix].items(), key=lambda kv: (-kv[1], kv[0]))[0]
        if tok == "</s>":
            return prefix
        prefix += tok


def _enumerate(table, prefix=""):
    for tok, p in table[prefix].items():
        if tok == "</s>":
            yield prefix, math.log(p)
        else:
            for text, lp in _enumerate(table, prefix + tok):
                yield text, math.log(p) + lp


def test_toy_chain_oracle_values():
    # frozen from scripts/oracles.py
    table = toy_chain()
    paths = sorted(_enumerate(table), key=lambda kv: -kv[1])
    assert len(paths) == 85
    assert paths[0][0] == "bda" and paths[0][1] == pytest.approx(-2.686497054686819, abs=1e-12)
    assert _greedy(table) == "bbb"


@pytest.mark.parametrize("seed", [1, 9, 20, 26, 31])
def test_beam_width_one_is_greedy(seed):
    table = toy_chain(seed)
    assert beam_search("", MockBackend(next_token=table), 1, 8).final.text == _greedy(table)


def test_full_width_beam_finds_enumerated_optimum():
    table = toy_chain()
    best_text, best_lp = max(_enumerate(table), key=lambda kv: kv[1])
    out = beam_search("", MockBackend(next_token=table), 5, 4)
    assert out.final.text == best_text
    assert out.final.cumulative_logprob == pytest.approx(best_lp, abs=1e-12)


def test_finished_beams_are_never_evicted():
    # the early EOS path (0.3) beats every continuation of "a" (0.5 * 0.2),
    # although "a" outranks it for one step
    table = {"": {"a": 0.5, "</s>": 0.3, "b": 0.2}, "a": {"x": 0.2, "y": 0.2, "z": 0.1}}
    for u in "xyz":
        table["a" + u] = {"</s>": 1.0}
    out = beam_search("", MockBackend(next_token=table), 2, 5)
    assert out.final.text == ""
    assert out.final.cumulative_logprob == pytest.approx(math.log(0.3))
    assert [c.text for c in out.all_candidates][0] == ""


def test_beam_respects_max_steps_and_returns_live_beam():
    table = {"": {"a": 0.9, "</s>": 0.1}, "a": {"a": 0.9, "</s>": 0.1}, "aa": {"a": 1.0}}
    out = beam_search("", MockBackend(next_token=table), 1, 2)
    assert out.final.text == "aa"


def test_beam_search_preconditions():
    mock = MockBackend()
    with pytest.raises(ValueError):
        beam_search("", mock, 1, 0)
    with pytest.raises(ValueError):
        beam_search("", mock, 0, 1)
    with pytest.raises(CapabilityError):
        beam_search("", MockBackend(capabilities=BackendCapabilities(supports_next_token_topk=False)), 1, 1)


def test_beam_on_scripted_response_reproduces_it():
    mock = MockBackend(responses={"P": "따라서 정답: C"})
    assert beam_search("P", mock, 3, 16).final.text == "따라서 정답: C"


def test_scaler_dispatch_and_degenerate_agreement():
    mock = MockBackend(responses={"P": "정답: 4"})
    params = GenerationParams()
    texts = {
        m: Scaler(m, n=1, beam_width=1).run("P", mock, params).final.text
        for m in ("identity", "best_of_n", "self_consistency", "beam_search")
    }
    assert set(texts.values()) == {"정답: 4"}
    assert Scaler("self_consistency").stochastic and not Scaler("beam_search").stochastic
    with pytest.raises(ValueError):
        Scaler("nope").run("P", mock, params)


def test_vote_counts_from_seeded_mock_are_reproducible():
    table = {"정답: A": 0.4, "정답: B": 0.2, "정답: C": 0.2, "정답: D": 0.2}
    mock = MockBackend(distributions={"q": table}, seed=7)
    params = GenerationParams(temperature=0.7)
    a = self_consistency("q", mock, params, 5)
    b = self_consistency("q", mock, params, 5)
    assert a.vote_tally == b.vote_tally
    assert sum(a.vote_tally.values()) == 5
    assert Counter(c.text[-1].lower() for c in a.all_candidates) == a.vote_tally
