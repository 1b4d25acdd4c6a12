#!/usr/bin/env python3
# Copyright 2026 The fimedit Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the synthetic mini corpus used by tests (data/mini_corpus.jsonl).

Each document is a short news-like text about one subject. The reference
summary reuses the document's most on-topic sentences, so an extractive
backend has something to find.
"""

import argparse
import json
import random

SUBJECTS = [
    ("council", "the city council", ["budget", "vote", "parks", "taxes", "housing"]),
    ("river", "the river authority", ["flood", "levee", "rainfall", "barrier", "pumps"]),
    ("storm", "the weather service", ["storm", "wind", "coast", "warning", "shelters"]),
    ("clinic", "the regional clinic", ["patients", "vaccine", "nurses", "clinic", "wait"]),
    ("school", "the school board", ["teachers", "classes", "exams", "funding", "pupils"]),
    ("rail", "the rail operator", ["trains", "delays", "tracks", "fares", "signals"]),
    ("harbor", "the harbor office", ["ships", "cargo", "dock", "cranes", "tides"]),
    ("museum", "the city museum", ["exhibit", "paintings", "visitors", "curator", "gallery"]),
    ("farm", "the farmers union", ["harvest", "wheat", "drought", "prices", "tractors"]),
    ("bridge", "the transport agency", ["bridge", "repairs", "traffic", "lanes", "steel"]),
]

VERBS = ["approved", "announced", "reported", "delayed", "reviewed", "expanded", "debated",
         "confirmed", "criticized", "planned"]
FILLER = [
    "Residents gathered outside on a cold morning",
    "Local shops stayed open later than usual",
    "A spokesperson declined to give further details",
    "Several neighbors said they had expected the news",
    "The announcement came after weeks of speculation",
    "Officials are expected to meet again next month",
    "Critics said the timeline was too ambitious",
    "Supporters welcomed the decision on Tuesday",
]
NUMBERS = ["two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "twelve"]


def topical_sentence(rng, actor, terms):
    a, b = rng.sample(terms, 2)
    verb = rng.choice(VERBS)
    n = rng.choice(NUMBERS)
    return f"{actor.capitalize()} {verb} {n} new {a} measures after the {b} review."


def make_record(rng, index):
    key, actor, terms = SUBJECTS[index % len(SUBJECTS)]
    topical = []
    while len(topical) < 4:
        s = topical_sentence(rng, actor, terms)
        if s not in topical:
            topical.append(s)
    filler = [s + "." for s in rng.sample(FILLER, 4)]
    sentences = topical + filler
    rng.shuffle(sentences)
    # Repeat the lead topical sentence so it carries the most weight.
    document = " ".join(sentences + [topical[0]])
    summary = " ".join(topical[:3])
    return {"id": f"mini-{index:03d}-{key}", "document": document, "summary": summary}


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="data/mini_corpus.jsonl")
    parser.add_argument("--count", type=int, default=50)
    parser.add_argument("--seed", type=int, default=20261014)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    with open(args.out, "w", encoding="utf-8") as f:
        for i in range(args.count):
            f.write(json.dumps(make_record(rng, i)) + "\n")


if __name__ == "__main__":
    main()
