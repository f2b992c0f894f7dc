"""Dataset file handling and synthetic corpus generation.

Dataset files are line-delimited JSON records::

    {"tokenized_text": ["Alain", "Farley", "works"], "ner": [[0, 1, "person"]]}

Span indices are inclusive word indices. The synthetic generator fills slot
templates from small per-type lexicons, producing sentences with known gold
spans; it is the desk-scale stand-in for a large annotated corpus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .decoder import EntityMention
from .errors import ConfigError, DataError
from .trainer import TrainingExample

DEFAULT_LEXICONS = {
    "person": ["alain farley", "marie curie", "john smith", "ada lovelace",
               "grace hopper", "alan turing", "rosa parks", "amelia earhart"],
    "organization": ["mcgill university", "acme corp", "red cross", "united nations",
                     "bell labs", "mit", "the world bank", "interpol"],
    "location": ["montreal", "paris", "mount fuji", "lake geneva",
                 "new york", "the sahara desert", "oslo", "kyoto"],
    "date": ["monday", "july fourth", "last winter", "next year",
             "the nineties", "midnight", "early spring", "friday evening"],
    "product": ["the roadster", "model x", "a laptop", "the new phone",
                "a vintage camera", "the espresso machine", "a drone", "the console"],
    "event": ["the olympics", "the world cup", "the summit", "the annual gala",
              "the marathon", "the eclipse", "the premiere", "the career fair"],
    "disease": ["malaria", "influenza", "measles", "cholera",
                "diabetes", "asthma", "tuberculosis", "anemia"],
    "language": ["french", "japanese", "swahili", "portuguese",
                 "mandarin", "icelandic", "tamil", "quechua"],
    "award": ["the nobel prize", "an oscar", "the fields medal", "a grammy",
              "the turing award", "a gold medal", "the booker prize", "an emmy"],
    "currency": ["dollars", "yen", "euros", "swiss francs",
                 "pounds", "rupees", "pesos", "krona"],
}

# "{ent}" marks an entity slot; the first slot carries the featured type.
DEFAULT_TEMPLATES = [
    ["{ent}", "works", "at", "{ent}"],
    ["{ent}", "visited", "{ent}", "on", "{ent}"],
    ["{ent}", "won", "{ent}"],
    ["{ent}", "speaks", "{ent}", "fluently"],
    ["{ent}", "bought", "{ent}", "for", "a", "thousand", "{ent}"],
    ["{ent}", "attended", "{ent}", "in", "{ent}"],
    ["doctors", "treated", "{ent}", "near", "{ent}"],
    ["{ent}", "announced", "{ent}", "during", "{ent}"],
    ["the", "committee", "gave", "{ent}", "to", "{ent}"],
    ["{ent}", "was", "diagnosed", "with", "{ent}"],
]


@dataclass
class SynthSpec:
    types: list = field(default_factory=lambda: sorted(DEFAULT_LEXICONS))
    lexicons: dict = field(default_factory=lambda: dict(DEFAULT_LEXICONS))
    templates: list = field(default_factory=lambda: [list(t) for t in DEFAULT_TEMPLATES])
    max_span_width: int = 12


def load_dataset(path):
    """Parse and validate a dataset file into TrainingExamples."""
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                words = list(rec["tokenized_text"])
                ner = rec.get("ner", [])
            except (KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: missing tokenized_text") from exc
            gold = []
            for item in ner:
                if len(item) < 3:
                    raise DataError(f"{path}:{lineno}: malformed ner entry {item!r}")
                start, end, etype = int(item[0]), int(item[1]), str(item[2])
                if not (0 <= start <= end < len(words)):
                    raise DataError(f"{path}:{lineno}: span [{start},{end}] out of bounds "
                                    f"for {len(words)} words")
                gold.append(EntityMention(start, end, etype))
            try:
                examples.append(TrainingExample(words=words, gold=gold))
            except Exception as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return examples


def save_dataset(examples, path):
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            rec = {"tokenized_text": list(ex.words),
                   "ner": [[m.start, m.end, m.type] for m in ex.gold]}
            fh.write(json.dumps(rec) + "\n")


def _fill_template(template, slot_types, lexicons, rng):
    words = []
    gold = []
    slot_i = 0
    for token in template:
        if token == "{ent}":
            etype = slot_types[slot_i]
            slot_i += 1
            surface = lexicons[etype][rng.integers(len(lexicons[etype]))]
            parts = surface.split()
            gold.append(EntityMention(len(words), len(words) + len(parts) - 1, etype))
            words.extend(parts)
        else:
            words.append(token)
    return TrainingExample(words=words, gold=gold)


def synth_dataset(spec=None, train_size=50, dev_size=20, seed=0):
    """Deterministic synthetic corpus with known gold spans.

    Sentence i features type ``types[i % |types|]`` in its first slot, so
    every type appears at least floor(size / |types|) times per split.
    Remaining slots draw random types. Returns (train, dev) example lists.
    """
    spec = spec or SynthSpec()
    if len(spec.types) < 2:
        raise ConfigError("need at least 2 entity types")
    if not spec.templates:
        raise ConfigError("need at least 1 template")
    for etype in spec.types:
        surfaces = spec.lexicons.get(etype)
        if not surfaces:
            raise ConfigError(f"no lexicon entries for type {etype!r}")
        widest = max(len(s.split()) for s in surfaces)
        if widest > spec.max_span_width:
            raise ConfigError(f"lexicon for {etype!r} has spans wider than "
                              f"max_span_width={spec.max_span_width}")

    rng = np.random.default_rng(seed)

    def make_split(size, offset):
        examples = []
        for i in range(size):
            featured = spec.types[(offset + i) % len(spec.types)]
            template = spec.templates[rng.integers(len(spec.templates))]
            n_slots = sum(1 for t in template if t == "{ent}")
            others = [spec.types[j] for j in rng.integers(len(spec.types), size=n_slots - 1)]
            examples.append(_fill_template(template, [featured] + others,
                                           spec.lexicons, rng))
        return examples

    return make_split(train_size, 0), make_split(dev_size, 0)


def vocab_corpus(examples, entity_types=()):
    """Sentences plus type phrases, the input for vocabulary building."""
    corpus = [list(ex.words) for ex in examples]
    for etype in entity_types:
        corpus.append(etype.split())
    return corpus
