"""Regenerate the bundled synthetic fixtures under src/kheval/data/.

Output is deterministic; rerunning must leave the files byte-identical.
"""

from __future__ import annotations

import json
import random
from fractions import Fraction
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "kheval" / "data"
LETTERS = "ABCD"

CULTURE = [
    ("조선을 건국한 인물은 누구입니까?", "이성계", ["왕건", "주몽", "김유신"]),
    ("한글을 창제한 왕은 누구입니까?", "세종대왕", ["태조", "정조", "광개토대왕"]),
    ("대한민국의 수도는 어디입니까?", "서울", ["부산", "인천", "대구"]),
    ("추석에 주로 먹는 떡은 무엇입니까?", "송편", ["가래떡", "인절미", "시루떡"]),
    ("설날에 먹는 대표적인 음식은 무엇입니까?", "떡국", ["냉면", "삼계탕", "팥죽"]),
    ("제주도의 전통 돌 조각상을 무엇이라 부릅니까?", "돌하르방", ["장승", "솟대", "석등"]),
    ("거북선을 만든 것으로 알려진 장군은 누구입니까?", "이순신", ["강감찬", "을지문덕", "권율"]),
    ("한국의 전통 현악기로 열두 줄을 가진 것은 무엇입니까?", "가야금", ["해금", "거문고", "아쟁"]),
    ("경복궁이 위치한 도시는 어디입니까?", "서울", ["경주", "전주", "수원"]),
    ("한국에서 가장 높은 산은 무엇입니까?", "한라산", ["설악산", "지리산", "북한산"]),
    ("신라의 수도였던 도시는 어디입니까?", "경주", ["공주", "부여", "개성"]),
    ("동지에 먹는 전통 음식은 무엇입니까?", "팥죽", ["떡국", "송편", "화전"]),
    ("훈민정음이 반포된 세기는 언제입니까?", "15세기", ["13세기", "17세기", "19세기"]),
    ("한국의 국화는 무엇입니까?", "무궁화", ["진달래", "개나리", "벚꽃"]),
]

COMPREHENSION = [
    ("민수는 아침에 우유를 마시고 학교에 갔다. 민수가 아침에 마신 것은?", "우유", ["주스", "커피", "물"]),
    ("영희는 도서관에서 책을 세 권 빌렸다. 영희가 책을 빌린 곳은?", "도서관", ["서점", "학교", "집"]),
    ("철수는 비가 와서 우산을 챙겼다. 철수가 우산을 챙긴 이유는?", "비가 와서", ["더워서", "추워서", "바람이 불어서"]),
    ("지민은 토요일에 할머니 댁을 방문했다. 지민이 방문한 날은?", "토요일", ["일요일", "금요일", "월요일"]),
    ("수진은 버스를 타고 회사에 출근했다. 수진의 출근 수단은?", "버스", ["지하철", "택시", "자전거"]),
    ("준호는 배가 고파서 김밥을 샀다. 준호가 산 음식은?", "김밥", ["라면", "떡볶이", "만두"]),
    ("하나는 공원에서 강아지와 산책했다. 하나가 산책한 장소는?", "공원", ["해변", "시장", "운동장"]),
    ("태민은 시험 공부를 위해 일찍 일어났다. 태민이 일찍 일어난 목적은?", "시험 공부", ["운동", "여행", "요리"]),
    ("은지는 생일 선물로 꽃을 받았다. 은지가 받은 선물은?", "꽃", ["책", "시계", "가방"]),
    ("동현은 겨울에 스키를 타러 갔다. 동현이 스키를 탄 계절은?", "겨울", ["여름", "봄", "가을"]),
    ("소연은 피아노 학원에 다닌다. 소연이 배우는 악기는?", "피아노", ["바이올린", "기타", "드럼"]),
    ("민재는 감기에 걸려 병원에 갔다. 민재가 병원에 간 이유는?", "감기", ["골절", "두통", "치통"]),
    ("유나는 친구에게 편지를 썼다. 유나가 쓴 것은?", "편지", ["일기", "소설", "시"]),
]


def _reasoning_items(rng: random.Random, count: int):
    items = []
    for _ in range(count):
        a, b = rng.randint(12, 89), rng.randint(12, 89)
        answer = a + b
        distractors = sorted({answer + d for d in (-10, -1, 1, 10, 2, -2)} - {answer})
        rng.shuffle(distractors)
        items.append((f"{a}와 {b}의 합은 얼마입니까?", str(answer), [str(d) for d in distractors[:3]]))
    return items


def make_mcq(rng: random.Random):
    pool = (
        [("culture", *x) for x in CULTURE]
        + [("comprehension", *x) for x in COMPREHENSION]
        + [("reasoning", *x) for x in _reasoning_items(rng, 13)]
    )
    assert len(pool) == 40
    letters = [LETTERS[i % 4] for i in range(40)]
    rng.shuffle(letters)
    rows = []
    for i, ((subset, question, answer, distractors), letter) in enumerate(zip(pool, letters)):
        gold = LETTERS.index(letter)
        options = list(distractors)
        options.insert(gold, answer)
        scores = [round(-rng.uniform(1.5, 6.0), 2) for _ in options]
        mode = i % 8
        if mode < 6:
            # model prefers the gold option
            scores[gold] = round(max(scores) + rng.uniform(0.2, 1.5), 2)
        elif mode == 6:
            wrong = (gold + 1 + rng.randrange(3)) % 4
            scores[wrong] = round(max(scores) + rng.uniform(0.2, 1.5), 2)
        else:
            # exact tie at the top: lowest index wins
            top = round(max(scores) + 0.5, 2)
            tied = sorted(rng.sample(range(4), 2))
            for t in tied:
                scores[t] = top
        predicted = max(range(4), key=lambda k: (scores[k], -k))
        pred_letter = LETTERS[predicted]
        if i % 3 == 0:
            response = f"보기를 하나씩 검토해 보겠습니다. 따라서 정답: {pred_letter}"
        elif i % 3 == 1:
            response = f"정답은 {pred_letter}입니다"
        else:
            response = f"답: {pred_letter}"
        rows.append(
            {
                "id": f"mcq-{i + 1:03d}",
                "input": question,
                "options": options,
                "reference": letter,
                "subset": subset,
                "metadata": {
                    "mock_scores": json.dumps(scores),
                    "mock_response": response,
                },
            }
        )
    return rows


def _decimal(value: Fraction) -> str:
    # every denominator used below divides a power of ten
    for digits in range(0, 7):
        scaled = value * 10**digits
        if scaled.denominator == 1:
            text = f"{scaled.numerator / 10**digits:.{digits}f}"
            return text
    raise ValueError(value)


def make_math(rng: random.Random):
    rows = []
    denominators = [2, 4, 5, 8, 10, 16, 20, 25, 40, 50]
    seen = set()
    i = 0
    while len(rows) < 20:
        den = denominators[i % len(denominators)]
        num = rng.randint(1, 3 * den)
        i += 1
        value = Fraction(num, den)
        if value.denominator == 1 or value in seen:
            continue
        seen.add(value)
        reference = f"{value.numerator}/{value.denominator}"
        if len(rows) % 2 == 0:
            question = f"피자 한 판을 {value.denominator}조각으로 나누었을 때 {value.numerator}조각은 몇 판입니까? 분수로 답하세요."
            subset = "fraction"
        else:
            question = f"{value.numerator}을 {value.denominator}로 나눈 값을 기약분수로 나타내세요."
            subset = "division"
        response = f"{value.numerator}÷{value.denominator}을 계산하면 됩니다. 따라서 정답: {_decimal(value)}"
        rows.append(
            {
                "id": f"math-{len(rows) + 1:03d}",
                "input": question,
                "reference": reference,
                "subset": subset,
                "metadata": {"mock_response": response},
            }
        )
    return rows


GEN = [
    ("history", "한글을 만든 왕과 그 목적을 설명하세요.", "세종대왕", ["세종대왕", "백성"],
     "세종대왕은 백성이 글을 쉽게 익히도록 한글을 만들었습니다."),
    ("history", "임진왜란에서 활약한 장군을 소개하세요.", "이순신", ["이순신", "거북선"],
     "이순신 장군은 거북선으로 큰 승리를 거두었습니다."),
    ("history", "고려를 세운 인물은 누구인가요?", "왕건", ["왕건", "고려"],
     "고려는 태조가 세웠습니다."),
    ("history", "조선의 마지막 왕조 이름을 설명하세요.", "대한제국", ["대한제국", "고종"],
     "고종은 대한제국을 선포하였습니다."),
    ("history", "삼국 시대의 세 나라를 말하세요.", "고구려", ["고구려", "백제", "신라"],
     "백제와 신라가 있었습니다."),
    ("history", "신라의 삼국 통일에 기여한 장군은?", "김유신", ["김유신", "신라"],
     "김유신 장군이 신라의 통일을 도왔습니다."),
    ("history", "팔만대장경이 보관된 절은 어디인가요?", "해인사", ["해인사", "팔만대장경"],
     "팔만대장경은 불국사에 있습니다."),
    ("culture", "추석에 하는 일을 설명하세요.", "송편", ["송편", "차례"],
     "추석에는 가족이 모여 송편을 빚고 차례를 지냅니다."),
    ("culture", "한국의 대표적인 발효 음식을 소개하세요.", "김치", ["김치", "발효"],
     "김치는 배추를 발효시켜 만든 음식입니다."),
    ("culture", "한복의 특징을 설명하세요.", "저고리", ["저고리", "치마"],
     "한복은 색이 곱고 선이 아름답습니다."),
    ("culture", "설날의 대표적인 풍습을 말하세요.", "세배", ["세배", "떡국"],
     "설날에는 어른께 세배를 드리고 떡국을 먹습니다."),
    ("culture", "판소리에 대해 설명하세요.", "소리꾼", ["소리꾼", "고수"],
     "판소리는 소리꾼과 고수가 함께 공연합니다."),
    ("culture", "한국의 전통 가옥을 무엇이라 하나요?", "한옥", ["한옥", "온돌"],
     "한옥은 온돌로 난방을 합니다."),
    ("science", "물의 끓는점은 몇 도인가요?", "100도", ["100도", "섭씨"],
     "물은 섭씨 100도에서 끓습니다."),
    ("science", "식물이 빛으로 양분을 만드는 과정을 무엇이라 하나요?", "광합성", ["광합성", "엽록체"],
     "식물은 잎에서 양분을 만듭니다."),
    ("science", "지구가 태양 주위를 도는 것을 무엇이라 하나요?", "공전", ["공전", "태양"],
     "지구는 일 년에 한 번 태양 주위를 공전합니다."),
    ("science", "사람의 혈액을 순환시키는 기관은?", "심장", ["심장", "혈액"],
     "심장은 혈액을 온몸으로 보냅니다."),
    ("science", "달의 모양이 바뀌는 이유를 설명하세요.", "위상", ["위상", "햇빛"],
     "달은 스스로 빛을 내지 않고 햇빛을 반사합니다."),
    ("science", "얼음이 녹아 물이 되는 현상은?", "융해", ["융해", "온도"],
     "얼음은 온도가 오르면 녹아서 물이 됩니다. 이를 융해라고 합니다."),
    ("science", "공기 중에 가장 많은 기체는 무엇인가요?", "질소", ["질소", "산소"],
     "공기에는 산소가 가장 많습니다."),
]


def make_gen():
    rows = []
    for i, (subset, question, reference, keywords, response) in enumerate(GEN):
        rows.append(
            {
                "id": f"gen-{i + 1:03d}",
                "input": question,
                "reference": reference,
                "subset": subset,
                "keywords": keywords,
                "metadata": {"mock_response": response},
            }
        )
    return rows


def write(name: str, rows) -> None:
    path = OUT / f"{name}.jsonl"
    text = "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in rows)
    path.write_text(text, encoding="utf-8", newline="\n")
    print(f"wrote {len(rows)} rows to {path}")


def main() -> None:
    rng = random.Random(20251016)
    write("fixture_mcq", make_mcq(rng))
    write("fixture_math", make_math(rng))
    write("fixture_gen", make_gen())


if __name__ == "__main__":
    main()
