"""Independent oracles for the frozen expected values in tests/.

Nothing here imports kheval: each value is recomputed from first principles
(raw fixture JSON, exact fractions, brute-force enumeration) so the test
expectations do not inherit bugs from the implementation.

    python scripts/oracles.py
"""

from __future__ import annotations

import itertools
import json
import math
import random
import unicodedata
from collections import Counter
from fractions import Fraction
from pathlib import Path

import mpmath

DATA = Path(__file__).resolve().parents[1] / "src" / "kheval" / "data"


def rows(name):
    return [json.loads(line) for line in (DATA / f"{name}.jsonl").read_text(encoding="utf-8").splitlines() if line]


def self_consistency_exact(p_correct=Fraction(2, 5), wrong=(Fraction(1, 5),) * 3, n=5):
    """P(majority of n draws is the correct answer), first-occurrence tie-break."""
    probs = (p_correct, *wrong)
    total = Fraction(0)
    for seq in itertools.product(range(len(probs)), repeat=n):
        counts = Counter(seq)
        top = max(counts.values())
        winner = next(x for x in seq if counts[x] == top)
        if winner == 0:
            pr = Fraction(1)
            for x in seq:
                pr *= probs[x]
            total += pr
    return total


def math_gap():
    mpmath.mp.dps = 50
    a = mpmath.mpf("0.6667")
    b = mpmath.mpf(2) / 3
    gap = abs(a - b)
    tol = max(mpmath.mpf("1e-9"), mpmath.mpf("1e-6") * max(abs(a), abs(b)))
    return gap, tol


def hangul_count(text):
    # classify by Unicode character name rather than code point ranges
    alpha = [c for c in text if unicodedata.category(c).startswith("L")]
    hangul = [c for c in alpha if unicodedata.name(c).startswith(("HANGUL", "HANGUL SYLLABLE"))]
    return len(hangul), len(alpha)


def ll_oracle():
    preds = []
    for r in rows("fixture_mcq"):
        scores = json.loads(r["metadata"]["mock_scores"])
        best = 0
        for i in range(1, len(scores)):
            if scores[i] > scores[best]:
                best = i
        preds.append((r["id"], "ABCD"[best], r["reference"]))
    return preds


PARTICLES = ["에서는", "으로는", "까지", "부터", "에서", "에게", "께서", "으로",
             "은", "는", "이", "가", "을", "를", "에", "의", "와", "과", "도", "만", "로"]


def segment(text):
    out = []
    for word in text.split():
        for p in sorted(PARTICLES, key=len, reverse=True):
            stem = word[: -len(p)]
            if word.endswith(p) and stem and any("가" <= c <= "힣" for c in stem):
                out += [stem, p]
                break
        else:
            out.append(word)
    return out


def gen_diagnostics():
    correct_tokens, wrong_tokens = [], []
    omission = {}
    for r in rows("fixture_gen"):
        response = r["metadata"]["mock_response"]
        ok = r["reference"].replace(" ", "") in response.replace(" ", "")
        (correct_tokens if ok else wrong_tokens).extend(segment(response))
        for k in r["keywords"]:
            o, n = omission.get(k, (0, 0))
            omission[k] = (o + (k not in response), n + 1)
    ttr = lambda t: Fraction(len(set(t)), len(t))  # noqa: E731
    return ttr(correct_tokens), ttr(wrong_tokens), omission, len(correct_tokens), len(wrong_tokens)


def toy_chain(seed=1, vocab=("a", "b", "c", "d"), depth=3):
    """Random 5-symbol chain model: 4 letters plus EOS, EOS forced at *depth*."""
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


def enumerate_paths(table, prefix=""):
    for tok, p in table[prefix].items():
        if tok == "</s>":
            yield prefix, math.log(p)
        else:
            for text, lp in enumerate_paths(table, prefix + tok):
                yield text, math.log(p) + lp


def greedy(table):
    prefix, lp = "", 0.0
    while True:
        tok, p = max(table[prefix].items(), key=lambda kv: (kv[1], [-ord(c) for c in kv[0]]))
        lp += math.log(p)
        if tok == "</s>":
            return prefix, lp
        prefix += tok


def seeded_draw(seed, prompt, texts, probs, n):
    rng = random.Random(f"{seed}\x1f{prompt}")
    cum = list(itertools.accumulate(probs))
    out = []
    for _ in range(n):
        u = rng.random() * cum[-1]
        out.append(next(i for i, c in enumerate(cum) if u < c))
    return out


def main():
    sc = self_consistency_exact()
    print("self-consistency n=5 exact:", sc, float(sc))
    gap, tol = math_gap()
    print("0.6667 vs 2/3 gap:", mpmath.nstr(gap, 12), "tolerance:", mpmath.nstr(tol, 12))
    for s in ("안녕 hello", "정답: B", "Korean 한국어 OK"):
        h, a = hangul_count(s)
        print(f"hangul {s!r}: {h}/{a}")
    preds = ll_oracle()
    print("LL predictions:", "".join(p for _, p, _ in preds))
    print("LL accuracy:", Fraction(sum(p == ref for _, p, ref in preds), len(preds)))
    ttr_ok, ttr_bad, omission, n_ok, n_bad = gen_diagnostics()
    print(f"TTR correct {ttr_ok} over {n_ok} tokens, incorrect {ttr_bad} over {n_bad} tokens")
    for k, v in sorted(omission.items(), key=lambda kv: (-kv[1][0] / kv[1][1], -kv[1][0], kv[0])):
        if v[0]:
            print("  omitted", k, v)
    table = toy_chain()
    paths = sorted(enumerate_paths(table), key=lambda t: -t[1])
    print("toy paths:", len(paths), "best:", paths[0], "second:", paths[1])
    print("toy greedy:", greedy(table))
    hits = 0
    for seed in range(300):
        t = toy_chain(seed)
        hits += max(enumerate_paths(t), key=lambda x: x[1])[0] == greedy(t)[0]
    print("greedy already optimal on", hits, "of 300 random toy models")
    print("draw seed 7:", seeded_draw(7, "2+2=?", ["4", "3", "5", "6"], [0.4, 0.2, 0.2, 0.2], 5))


if __name__ == "__main__":
    main()
