from __future__ import annotations

import itertools
import json
import random

import pytest

from kheval.datasets import Sample, dump_jsonl, load_fixture

LETTERS = "ABCD"

# exact P(correct) of a 5-vote majority on the 0.4 / 0.2 / 0.2 / 0.2 mock,
# from brute-force enumeration of all 4**5 ordered outcomes (scripts/oracles.py)
SELF_CONSISTENCY_EXACT = 1592 / 3125


def stochastic_samples(count: int = 500, p_correct: float = 0.4) -> list[Sample]:
    """MCQ items whose mock answers are drawn from {gold: 0.4, others: 0.2}."""
    wrong = (1.0 - p_correct) / 3
    out = []
    for i in range(count):
        gold = i % 4
        dist = {f"정답: {LETTERS[j]}": (p_correct if j == gold else wrong) for j in range(4)}
        out.append(
            Sample(
                id=f"stoch-{i:03d}",
                input=f"{i}번 문제입니다. 알맞은 답을 고르세요.",
                reference=LETTERS[gold],
                options=("가", "나", "다", "라"),
                metadata={"mock_distribution": json.dumps(dist, ensure_ascii=False)},
            )
        )
    return out


def toy_chain(seed: int = 1, vocab=("a", "b", "c", "d"), depth: int = 3) -> dict[str, dict[str, float]]:
    """Random chain model over 4 letters plus EOS; EOS is forced after *depth* letters."""
    rng = random.Random(seed)
    table = {}
    for d in range(depth):
        for prefix in itertools.product(vocab, repeat=d):
            w = [rng.randint(1, 20) for _ in vocab] + [rng.randint(1, 4)]
            s = sum(w)
            table["".join(prefix)] = dict(zip((*vocab, "</s>"), [x / s for x in w]))
    for prefix in itertools.product(vocab, repeat=depth):
        table["".join(prefix)] = {"</s>": 1.0}
    return table


@pytest.fixture(scope="session")
def mcq():
    return load_fixture("fixture_mcq")


@pytest.fixture(scope="session")
def math_items():
    return load_fixture("fixture_math")


@pytest.fixture(scope="session")
def gen_items():
    return load_fixture("fixture_gen")


@pytest.fixture
def write_jsonl(tmp_path):
    def write(samples, name="data.jsonl"):
        path = tmp_path / name
        dump_jsonl(samples, path)
        return str(path)

    return write
