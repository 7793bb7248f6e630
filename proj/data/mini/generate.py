#!/usr/bin/env python3
"""Regenerates the synthetic mini-corpus in this directory.

Five concepts with 60 invented items each, 40 profiles with tweets that
reuse each concept's cue words, a small synonym lexicon and stopwords.
Output is deterministic (random.Random(42)); rerunning rewrites the same bytes.
"""

import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent

# (concept, pos item count, neg item count)
SPLITS = [
    ("openness", 28, 32),
    ("conscientiousness", 31, 29),
    ("extraversion", 36, 24),
    ("agreeableness", 24, 36),
    ("neuroticism", 33, 27),
]

CUES = {
    "openness": (
        ["daydream", "poetry", "art", "ideas", "fantasy", "museums", "novelty", "imagination"],
        ["routine", "tradition", "habits", "familiar", "conventional", "plain", "predictable", "ordinary"],
    ),
    "conscientiousness": (
        ["plans", "schedule", "tidy", "deadlines", "lists", "order", "details", "chores"],
        ["mess", "procrastinate", "clutter", "forget", "chaos", "late", "shortcuts", "slack"],
    ),
    "extraversion": (
        ["parties", "crowds", "friends", "chatting", "dancing", "strangers", "events", "attention"],
        ["solitude", "quiet", "alone", "silence", "reading", "background", "privacy", "distance"],
    ),
    "agreeableness": (
        ["helping", "kindness", "trust", "sharing", "comfort", "forgive", "others", "cooperation"],
        ["arguing", "insults", "suspicion", "revenge", "criticism", "rivals", "grudges", "conflict"],
    ),
    "neuroticism": (
        ["worry", "panic", "stress", "fear", "anxious", "gloom", "tension", "dread"],
        ["calm", "relaxed", "steady", "composed", "easygoing", "serene", "settled", "untroubled"],
    ),
}

POS_FRAMES = [
    "I enjoy {a}.",
    "I love {a} and {b}.",
    "I often think about {a}.",
    "I seek out {a}.",
    "I am drawn to {a} and {b}.",
    "I get excited by {a}.",
]
NEG_FRAMES = [
    "I prefer {a}.",
    "I stick to {a} and {b}.",
    "I rarely question {a}.",
    "I am comfortable with {a}.",
    "I tend toward {a} and {b}.",
    "I feel at home with {a}.",
]

TWEET_FRAMES = [
    "today was all about {a} lol",
    "can't stop thinking about {a} and {b}",
    "another weekend of {a} #life",
    "honestly {a} is the best",
    "so much {a} this week, again",
    "just me and some {a} tonight",
    "why does everyone talk about {b}",
    "coffee first, then {a}",
]
FILLER = [
    "the bus was late again",
    "new phone who dis",
    "watching the game tonight",
    "pizza for dinner",
    "rainy monday mood",
    "good morning everyone",
]

LEXICON = {
    "enjoy": ["love", "like", "relish"],
    "love": ["adore", "enjoy"],
    "often": ["frequently", "regularly"],
    "rarely": ["seldom", "hardly"],
    "prefer": ["favor", "choose"],
    "think": ["reflect", "ponder"],
    "seek": ["pursue", "look"],
    "excited": ["thrilled", "eager"],
    "comfortable": ["content", "easy"],
    "drawn": ["attracted", "pulled"],
    "stick": ["cling", "keep"],
    "feel": ["sense", "seem"],
    "home": ["house", "ease"],
    "tend": ["lean", "incline"],
    "question": ["doubt", "challenge"],
}

STOPWORDS = ["i", "a", "an", "the", "and", "to", "of", "by", "with", "at", "am", "about", "out", "get"]


def make_items(rng):
    items = []
    for concept, n_pos, n_neg in SPLITS:
        pos_cues, neg_cues = CUES[concept]
        for polarity, n, cues, frames in (("pos", n_pos, pos_cues, POS_FRAMES), ("neg", n_neg, neg_cues, NEG_FRAMES)):
            seen = set()
            k = 0
            while k < n:
                a, b = rng.sample(cues, 2)
                text = rng.choice(frames).format(a=a, b=b)
                if text in seen:
                    continue
                seen.add(text)
                k += 1
                items.append({
                    "id": f"{concept[:3]}-{polarity}-{k:02d}",
                    "text": text,
                    "concept": concept,
                    "polarity": polarity,
                })
    return items


def make_profiles(rng):
    profiles = []
    for u in range(40):
        scores = {}
        for concept, _, _ in SPLITS:
            s = round(rng.uniform(-0.5, 0.5), 2)
            if rng.random() < 0.08:
                s = 0.0
            scores[concept] = s
        tweets = []
        for _ in range(rng.randint(6, 12)):
            if rng.random() < 0.25:
                tweets.append(rng.choice(FILLER))
                continue
            concept = rng.choice(SPLITS)[0]
            pos_cues, neg_cues = CUES[concept]
            s = scores[concept]
            agree = rng.random() < 0.8
            side = pos_cues if (s > 0) == agree else neg_cues
            a, b = rng.sample(side, 2)
            tweets.append(rng.choice(TWEET_FRAMES).format(a=a, b=b))
        profiles.append({"user_id": f"user{u:03d}", "tweets": tweets, "scores": scores})
    return profiles


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def main():
    rng = random.Random(42)
    write_jsonl(HERE / "items.jsonl", make_items(rng))
    write_jsonl(HERE / "profiles.jsonl", make_profiles(rng))
    with open(HERE / "lexicon.tsv", "w", encoding="utf-8", newline="\n") as f:
        for word, syns in LEXICON.items():
            f.write(f"{word}\t{','.join(syns)}\n")
    with open(HERE / "stopwords.txt", "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(STOPWORDS) + "\n")


if __name__ == "__main__":
    main()
