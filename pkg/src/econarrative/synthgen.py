"""Synthetic corpora and series for counterfactual checks.

Three text sources bracket a model's use of narrative content: random
word salad (no signal), date-shuffled corpora (signal destroyed), and
planted cue sentences whose polarity matches the indicator's next move
(perfect signal, tunable via the alignment probability).
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .harness import direction_of
from .ingest import FinancialSeries, TweetCorpus, TweetRecord

POSITIVE_CUES = (
    "markets rally as optimism and confidence keep growing",
    "strong gains today with investors upbeat about growth",
    "great profits and a healthy recovery lift every sector",
    "impressive rebound as traders celebrate rising prosperity",
    "bullish surge brings relief and renewed trust in the economy",
    "robust growth and solid progress cheer wealthy investors",
)

NEGATIVE_CUES = (
    "markets plunge as fear and panic keep spreading",
    "heavy losses today with investors worried about recession",
    "terrible declines and a gloomy slump hurt every sector",
    "dismal crash as traders suffer rising turmoil",
    "bearish selloff brings distress and deep doubt about the economy",
    "weak growth and grim stagnation scare anxious investors",
)


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    wordlist: tuple[str, ...] | None = None
    sentence_length: tuple[int, int] = (5, 12)
    alignment_p: float = 1.0
    per_day: int = 3
    positive_cues: tuple[str, ...] = POSITIVE_CUES
    negative_cues: tuple[str, ...] = NEGATIVE_CUES

    def __post_init__(self) -> None:
        if not 0.0 <= self.alignment_p <= 1.0:
            raise ValueError("alignment_p must lie in [0, 1]")
        lo, hi = self.sentence_length
        if lo < 1 or hi < lo:
            raise ValueError("sentence_length must be a positive (lo, hi) range")
        if self.per_day < 1:
            raise ValueError("per_day must be >= 1")

    def words(self) -> tuple[str, ...]:
        return self.wordlist if self.wordlist is not None else load_wordlist()


@lru_cache(maxsize=1)
def load_wordlist(path: str | None = None) -> tuple[str, ...]:
    if path is None:
        raw = resources.files("econarrative.assets").joinpath("wordlist.txt").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    words = tuple(w.strip() for w in raw.splitlines() if w.strip())
    if not words:
        raise ValueError("wordlist is empty")
    return words


def _corpus(records: list[TweetRecord], provenance: dict) -> TweetCorpus:
    records.sort(key=lambda r: r.date)
    date_range = (records[0].date, records[-1].date) if records else None
    return TweetCorpus(records=tuple(records), date_range=date_range, provenance=provenance)


def gen_random_texts(cfg: SynthConfig, dates: Sequence[date]) -> TweetCorpus:
    """Uniform word-salad sentences for every date; no planted signal."""
    words = cfg.words()
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.sentence_length
    records = []
    for d in sorted(dates):
        for i in range(cfg.per_day):
            length = int(rng.integers(lo, hi + 1))
            text = " ".join(words[int(j)] for j in rng.integers(0, len(words), size=length))
            records.append(
                TweetRecord(
                    id=f"rnd-{d.isoformat()}-{i}",
                    date=d,
                    text=text,
                    followers=1000,
                    user_id="synthetic",
                )
            )
    return _corpus(records, {"source": "gen_random_texts", "seed": cfg.seed})


def shuffle_dates(corpus: TweetCorpus, seed: int) -> TweetCorpus:
    """Reassign dates across records by a uniform permutation.

    The multiset of texts and the multiset of dates are both preserved;
    only the pairing between them is destroyed.
    """
    distinct = {r.date for r in corpus.records}
    if len(distinct) < 2:
        raise ValueError("need at least 2 distinct dates to shuffle")
    rng = np.random.default_rng(seed)
    dates = [r.date for r in corpus.records]
    order = rng.permutation(len(dates))
    records = [
        TweetRecord(
            id=rec.id,
            date=dates[order[i]],
            text=rec.text,
            followers=rec.followers,
            topic=rec.topic,
            user_id=rec.user_id,
        )
        for i, rec in enumerate(corpus.records)
    ]
    provenance = dict(corpus.provenance)
    provenance["shuffled_seed"] = seed
    return _corpus(records, provenance)


def gen_synthetic_narratives(series: FinancialSeries, horizon: int, cfg: SynthConfig) -> TweetCorpus:
    """Cue sentences aligned (with probability p) to the next move's sign."""
    values = series.values
    dates = series.dates
    if len(values) <= horizon:
        raise ValueError(f"series of length {len(values)} cannot support horizon {horizon}")
    rng = np.random.default_rng(cfg.seed)
    records = []
    for i in range(len(values) - horizon):
        up = direction_of(values[i + horizon - 1], values[i + horizon]) == "increase"
        for j in range(cfg.per_day):
            aligned = rng.random() < cfg.alignment_p
            positive = up if aligned else not up
            pool = cfg.positive_cues if positive else cfg.negative_cues
            text = pool[int(rng.integers(0, len(pool)))]
            records.append(
                TweetRecord(
                    id=f"cue-{dates[i].isoformat()}-{j}",
                    date=dates[i],
                    text=text,
                    followers=1000,
                    user_id="synthetic",
                )
            )
    return _corpus(
        records,
        {"source": "gen_synthetic_narratives", "seed": cfg.seed, "alignment_p": cfg.alignment_p},
    )


def gen_random_walk(
    n: int, sigma: float, v0: float, seed: int, start: date = date(2015, 1, 5), name: str = "SYNTH"
) -> FinancialSeries:
    """Geometric random walk on consecutive weekdays; strictly positive."""
    if n < 2:
        raise ValueError("need at least 2 points")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if v0 <= 0:
        raise ValueError("v0 must be positive")
    rng = np.random.default_rng(seed)
    steps = rng.standard_normal(n - 1)
    values = [float(v0)]
    for z in steps:
        values.append(values[-1] * float(np.exp(sigma * z)))
    dates = []
    d = start
    while len(dates) < n:
        if d.weekday() < 5:
            dates.append(d)
        d += timedelta(days=1)
    return FinancialSeries(name=name, points=tuple(zip(dates, values)))
