#!/usr/bin/env python3
"""Regenerates the synthetic fixture corpora under data/fixtures/.

The grammar is deliberately small and closed: eight emoji families, each
with a fixed clause pool, joined by a handful of conjunctions. Boundary
labels derived from this corpus are a pure function of the word following
the decision token, so a capacity check can reach 100% training accuracy.
Run from the repository root; output is deterministic.
"""

import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "fixtures"

# family index == label index in data/emoji_labels.tsv
FAMILIES = {
    0: ("🎂", [
        "yesterday is mine birthday",
        "today is my birthday",
        "we cut the cake at midnight",
        "she baked a chocolate cake",
        "the party was full of balloons",
        "everyone sang at the celebration",
        "he got so many gifts",
        "the anniversary dinner was lovely",
    ]),
    1: ("🌧", [
        "its was raining",
        "it was raining",
        "the rain did not stop",
        "clouds covered the whole sky",
        "the storm lasted all night",
        "it rained heavily in the evening",
        "the forecast said more showers",
        "thunder woke me at dawn",
    ]),
    2: ("🏢", [
        "i came late to office",
        "i went to the office early",
        "the meeting ran very long",
        "my manager approved the report",
        "the deadline is on monday",
        "we finished the project today",
        "the presentation went well",
        "i stayed late at work",
    ]),
    3: ("❤", [
        "i love you so much",
        "she misses him every day",
        "they got engaged last week",
        "my heart beats for you",
        "he wrote her a love letter",
        "i adore spending time with you",
        "the couple walked hand in hand",
        "you mean everything to me",
    ]),
    4: ("😂", [
        "the joke made me laugh",
        "we laughed hard at the skit",
        "the comedy show was hilarious",
        "his funny story had us howling",
        "i could not stop laughing",
        "the prank was so funny",
        "her giggle is contagious",
        "the blooper reel was comedy gold",
    ]),
    5: ("😢", [
        "i feel so sad today",
        "he cried after the news",
        "the movie ending made me cry",
        "she has been gloomy all week",
        "tears rolled down his face",
        "i felt lonely all evening",
        "the farewell left us in tears",
        "grief hit him very hard",
    ]),
    6: ("🍕", [
        "we ordered pizza for dinner",
        "the pasta tasted amazing",
        "he cooked a delicious curry",
        "lunch was a fresh salad",
        "the bakery smells wonderful",
        "i ate too much dessert",
        "the soup needs more salt",
        "breakfast was warm toast with jam",
    ]),
    7: ("⚽", [
        "our team won the match",
        "he scored the winning goal",
        "the game went to extra time",
        "she trains for the marathon",
        "the stadium was packed tonight",
        "we played football all afternoon",
        "the coach praised the defense",
        "the final whistle sparked wild cheers",
    ]),
}

MID_JOINS = ["because", "but", "and", "while", "although"]
LEAD_SUBS = ["because", "while", "although"]

PAPER_BOUNDARY_LINES = [
    "i came late to office because its was raining.",
    "because it was raining i came late to office.",
]


def pick_clause(rng, family=None):
    fam = family if family is not None else rng.choice(list(FAMILIES))
    return fam, rng.choice(FAMILIES[fam][1])


def gen_boundary_corpus(rng):
    lines = list(PAPER_BOUNDARY_LINES)
    while len(lines) < 200:
        roll = rng.random()
        if roll < 0.60:
            _, c1 = pick_clause(rng)
            _, c2 = pick_clause(rng)
            join = rng.choice(MID_JOINS)
            lines.append(f"{c1} {join} {c2}.")
        elif roll < 0.76:
            _, c1 = pick_clause(rng)
            _, c2 = pick_clause(rng)
            sub = rng.choice(LEAD_SUBS)
            lines.append(f"{sub} {c2} {c1}.")
        else:
            _, c1 = pick_clause(rng)
            lines.append(f"{c1}.")
    (OUT / "boundary_corpus.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def gen_emoji_train(rng):
    rows = [
        (2, "because it was raining i came late to office"),
        (2, "because its was raining i came late to office"),
        (2, "i came late to office"),
        (1, "because its was raining"),
        (1, "because it was raining"),
        (0, "yesterday is mine birthday"),
    ]
    families = list(FAMILIES)
    while len(rows) < 500:
        fam = families[len(rows) % len(families)]
        roll = rng.random()
        if roll < 0.35:
            _, c = pick_clause(rng, fam)
            rows.append((fam, c))
        elif roll < 0.80:
            _, c = pick_clause(rng, fam)
            join = rng.choice(MID_JOINS)
            rows.append((fam, f"{join} {c}"))
        else:
            _, c1 = pick_clause(rng, fam)
            _, c2 = pick_clause(rng, fam)
            join = rng.choice(MID_JOINS)
            rows.append((fam, f"{c1} {join} {c2}"))
    text = "\n".join(f"{label}\t{t}" for label, t in rows) + "\n"
    (OUT / "emoji_train.tsv").write_text(text, encoding="utf-8")


def gen_pipeline_gold(rng):
    rows = [
        "because it was raining i came late to office\t8:🏢",
        "i came late to office because its was raining\t4:🏢,8:🌧",
        "do you really think i am happy\t6:🙄",
        "yesterday is mine birthday\t3:🎂",
    ]
    while len(rows) < 50:
        if rng.random() < 0.40:
            fam, c = pick_clause(rng)
            pos = len(c.split()) - 1
            rows.append(f"{c}\t{pos}:{FAMILIES[fam][0]}")
        else:
            f1, c1 = pick_clause(rng)
            f2, c2 = pick_clause(rng)
            join = rng.choice(MID_JOINS)
            p1 = len(c1.split()) - 1
            p2 = len(c1.split()) + 1 + len(c2.split()) - 1
            rows.append(f"{c1} {join} {c2}\t{p1}:{FAMILIES[f1][0]},{p2}:{FAMILIES[f2][0]}")
    (OUT / "pipeline_gold.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")


def gen_bench_texts(rng):
    texts = []
    while len(texts) < 12:
        _, c = pick_clause(rng)
        words = c.split()
        if len(words) > 6:
            words = words[:6]
        while len(words) < 6:
            _, extra = pick_clause(rng)
            words += extra.split()
            words = words[:6]
        texts.append(" ".join(words))
    (OUT / "bench_texts.txt").write_text("\n".join(texts) + "\n", encoding="utf-8")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(42)
    gen_boundary_corpus(rng)
    gen_emoji_train(rng)
    gen_pipeline_gold(rng)
    gen_bench_texts(rng)
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
