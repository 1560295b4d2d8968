"""Content corpus: categories, items, and biased feed generation.

A corpus is a flat pool of short-form posts, each tagged with exactly one
category. Feeds are drawn from the pool by ``generate_biased_feed``, which
concentrates most of the feed in a couple of dominant categories and scatters
the remainder thinly enough that every other category stays underrepresented.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CapacityError, ParseError, ValidationError

DEFAULT_CATEGORIES = [
    ("food", "Food"),
    ("fashion", "Fashion"),
    ("skincare", "Skincare"),
    ("travel", "Travel"),
    ("fitness", "Fitness"),
    ("home_decor", "Home Decor"),
    ("photography", "Photography"),
    ("technology", "Technology"),
    ("reading", "Reading"),
    ("pets", "Pets"),
    ("outdoor", "Outdoor Activities"),
    ("art", "Art"),
    ("music", "Music"),
    ("parenting", "Parenting"),
]

DEFAULT_CORPUS_SIZE = 320

CATEGORY_SYNONYMS = {
    "food": ["food", "cooking", "recipes", "restaurants", "eating", "meals", "baking"],
    "fashion": ["fashion", "outfits", "clothes", "clothing", "style", "wardrobe"],
    "skincare": ["skincare", "skin care", "beauty", "sunscreen", "serum"],
    "travel": ["travel", "trips", "vacation", "getaway", "destinations", "traveling"],
    "fitness": ["fitness", "workout", "workouts", "exercise", "gym", "running"],
    "home_decor": ["home decor", "decor", "interior", "furniture", "decorating"],
    "photography": ["photography", "photos", "photo", "cameras", "shooting"],
    "technology": ["technology", "tech", "gadgets", "keyboards", "computers"],
    "reading": ["reading", "books", "novels", "literature"],
    "pets": ["pets", "cats", "dogs", "pet", "kitten", "puppy"],
    "outdoor": ["outdoor", "outdoors", "hiking", "camping", "nature", "trails"],
    "art": ["art", "drawing", "painting", "sketching", "illustration"],
    "music": ["music", "songs", "guitar", "vinyl", "concerts"],
    "parenting": ["parenting", "kids", "toddler", "children", "family"],
}


@dataclass(frozen=True)
class Category:
    id: str
    display_name: str


@dataclass(frozen=True)
class ContentItem:
    item_id: str
    title: str
    cover_ref: str
    author: str
    engagement_count: int
    category: str

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "title": self.title,
            "cover_ref": self.cover_ref,
            "author": self.author,
            "engagement_count": self.engagement_count,
            "category": self.category,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ContentItem":
        return cls(
            item_id=str(data["item_id"]),
            title=str(data["title"]),
            cover_ref=str(data.get("cover_ref", "")),
            author=str(data.get("author", "")),
            engagement_count=int(data.get("engagement_count", 0)),
            category=str(data["category"]),
        )


@dataclass(frozen=True)
class FeedSpec:
    """Recipe for a biased feed: which categories dominate and how hard."""

    dominant_categories: tuple
    concentration: float = 0.80
    length: int = 35

    def to_dict(self) -> dict:
        return {
            "dominant_categories": list(self.dominant_categories),
            "concentration": self.concentration,
            "length": self.length,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeedSpec":
        return cls(
            dominant_categories=tuple(data["dominant_categories"]),
            concentration=float(data.get("concentration", 0.80)),
            length=int(data.get("length", 35)),
        )


@dataclass
class Corpus:
    categories: list
    items: list
    by_category: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.items:
            raise ValidationError("corpus has no items")
        known = {c.id for c in self.categories}
        index: dict = {c.id: [] for c in self.categories}
        for item in self.items:
            if item.category not in known:
                raise ValidationError(
                    f"item {item.item_id} has unknown category {item.category!r}"
                )
            index[item.category].append(item)
        self.by_category = index

    def category_ids(self) -> list:
        return [c.id for c in self.categories]

    def __len__(self) -> int:
        return len(self.items)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


_TITLE_TEMPLATES = {
    "food": [
        "Late night noodle shop found on {n} street",
        "My {n}-minute breakfast bowl routine",
        "Rating every dumpling spot in the old town, part {n}",
        "Spicy hotpot night with friends, round {n}",
        "Baking sourdough attempt #{n}, finally airy",
    ],
    "fashion": [
        "Autumn layering looks, outfit {n}",
        "Thrifted blazer styling, take {n}",
        "One skirt five ways, day {n}",
        "Capsule wardrobe check-in, week {n}",
        "Street style snaps from the {n}th arrondissement",
    ],
    "skincare": [
        "Barrier repair diary, day {n}",
        "Sunscreen shootout: contender {n}",
        "Minimal routine for oily skin, v{n}",
        "Retinol beginner notes, week {n}",
        "Sheet mask marathon night {n}",
    ],
    "travel": [
        "48 hours in a mountain town, stop {n}",
        "Overnight train to the coast, car {n}",
        "Hidden alleys of the old quarter, walk {n}",
        "Budget island hop, leg {n}",
        "Sunrise hike above the clouds, trail {n}",
    ],
    "fitness": [
        "5k progress log, week {n}",
        "Kettlebell basics, session {n}",
        "Mobility flow for desk workers, day {n}",
        "Climbing gym problems I failed, set {n}",
        "Post-run stretch routine v{n}",
    ],
    "home_decor": [
        "Rental-friendly shelf makeover, step {n}",
        "Warm lamp corner build, part {n}",
        "Plant wall progress, month {n}",
        "Tiny balcony reading nook, iteration {n}",
        "Decluttering the entryway, pass {n}",
    ],
    "photography": [
        "Shooting neon rain at night, roll {n}",
        "35mm film scans, batch {n}",
        "Golden hour portraits, set {n}",
        "Street frames from the market, walk {n}",
        "Editing moody blues, preset v{n}",
    ],
    "technology": [
        "Mechanical keyboard build log {n}",
        "E-ink tablet note workflow, v{n}",
        "Homelab rack update, month {n}",
        "Testing budget earbuds, pair {n}",
        "Automating my desk lights, script {n}",
    ],
    "reading": [
        "Quiet novels for rainy weeks, pick {n}",
        "Annotated margins, chapter {n}",
        "Monthly reading wrap-up no. {n}",
        "Secondhand bookshop haul, stack {n}",
        "Slow reread of a classic, part {n}",
    ],
    "pets": [
        "Cat shelf engineering, attempt {n}",
        "Morning walk with the corgi, day {n}",
        "Foster kitten week {n} update",
        "Teaching recall at the park, try {n}",
        "Aquarium rescape, tank {n}",
    ],
    "outdoor": [
        "Weekend ridge scramble, route {n}",
        "Campfire cooking experiments, night {n}",
        "Kayak dawn paddle, trip {n}",
        "Trail running the river loop, lap {n}",
        "First frost camping notes, site {n}",
    ],
    "art": [
        "Gouache study of the harbor, sketch {n}",
        "Life drawing session notes, pose {n}",
        "Linocut print pulls, edition {n}",
        "Ceramics glaze test tiles, kiln {n}",
        "Daily doodle challenge, day {n}",
    ],
    "music": [
        "Bedroom guitar cover, take {n}",
        "Vinyl dig finds, crate {n}",
        "Learning jazz voicings, week {n}",
        "Synth patch from scratch, preset {n}",
        "Concert field notes, row {n}",
    ],
    "parenting": [
        "Toddler snack experiments, tray {n}",
        "Bedtime story rotation, night {n}",
        "Rainy day crafts, project {n}",
        "First bike lesson, lap {n}",
        "Lunchbox ideas for picky eaters, box {n}",
    ],
}

_AUTHORS = [
    "willowmist", "citysparrow", "inkandoats", "quietharbor", "pinefield",
    "lanternfox", "driftwoodjo", "mapleletters", "cloudvendor", "novatrail",
]


def synthesize_corpus(n_items: int = DEFAULT_CORPUS_SIZE, seed: int = 0) -> Corpus:
    """Build a deterministic synthetic corpus with near-uniform category counts."""
    categories = [Category(cid, name) for cid, name in DEFAULT_CATEGORIES]
    if n_items < len(categories):
        raise ValidationError("corpus must cover every category at least once")
    rng = random.Random(seed)
    base, extra = divmod(n_items, len(categories))
    items = []
    counter = 0
    for idx, cat in enumerate(categories):
        count = base + (1 if idx < extra else 0)
        templates = _TITLE_TEMPLATES[cat.id]
        for k in range(count):
            counter += 1
            title = templates[k % len(templates)].format(n=k + 1)
            items.append(
                ContentItem(
                    item_id=f"{cat.id}-{k + 1:03d}",
                    title=title,
                    cover_ref=f"covers/{cat.id}/{k + 1:03d}.jpg",
                    author=rng.choice(_AUTHORS),
                    engagement_count=rng.randint(40, 9500),
                    category=cat.id,
                )
            )
    return Corpus(categories=categories, items=items)


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {"categories": [[c.id, c.display_name] for c in corpus.categories]}
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
        for item in corpus.items:
            fh.write(json.dumps(item.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")


def load_corpus(path: str | Path) -> Corpus:
    """Read a corpus JSONL file: header line with categories, then one item per line."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError(f"{path}: empty corpus file", line=0)
    try:
        header = json.loads(lines[0])
        categories = [Category(cid, name) for cid, name in header["categories"]]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: bad corpus header: {exc}", line=1)
    items = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            items.append(ContentItem.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path} line {lineno}: bad item record: {exc}", line=lineno)
    return Corpus(categories=categories, items=items)


def _scatter_counts(n_scatter: int, nondominant: list, length: int,
                    threshold: float, rng: random.Random) -> dict:
    """Distribute scattered items so each category count stays strictly under
    threshold * length. Falls back to the smallest feasible cap when the
    threshold cap cannot absorb the remainder."""
    cap = 0
    while (cap + 1) < threshold * length:
        cap += 1
    if cap * len(nondominant) < n_scatter:
        cap = math.ceil(n_scatter / len(nondominant))
    order = list(nondominant)
    rng.shuffle(order)
    counts = {cid: 0 for cid in order}
    remaining = n_scatter
    while remaining > 0:
        progressed = False
        for cid in order:
            if remaining == 0:
                break
            if counts[cid] < cap:
                counts[cid] += 1
                remaining -= 1
                progressed = True
        if not progressed:
            raise CapacityError("cannot scatter remainder under per-category cap")
    return counts


def generate_biased_feed(corpus: Corpus, spec: FeedSpec, seed: int,
                         underrep_threshold: float = 0.05) -> list:
    """Draw a feed whose dominant categories hold ~``concentration`` of the
    items while every other represented category stays underrepresented
    (strictly below ``underrep_threshold`` of the feed)."""
    if not spec.dominant_categories:
        raise ValidationError("feed spec needs at least one dominant category")
    known = set(corpus.category_ids())
    for cid in spec.dominant_categories:
        if cid not in known:
            raise ValidationError(f"unknown dominant category {cid!r}")
    if len(set(spec.dominant_categories)) != len(spec.dominant_categories):
        raise ValidationError("dominant categories must be distinct")
    if not 0 < spec.concentration <= 1:
        raise ValidationError("concentration must be in (0, 1]")
    if spec.length < 1:
        raise ValidationError("feed length must be >= 1")

    rng = random.Random(seed)
    n_dom = min(round_half_up(spec.concentration * spec.length), spec.length)
    n_scatter = spec.length - n_dom

    dom = list(spec.dominant_categories)
    base, extra = divmod(n_dom, len(dom))
    dom_counts = {cid: base + (1 if i < extra else 0) for i, cid in enumerate(dom)}

    nondominant = [cid for cid in corpus.category_ids() if cid not in dom_counts]
    if n_scatter > 0 and not nondominant:
        raise CapacityError("no non-dominant categories available for scattered items")
    scatter_counts = (
        _scatter_counts(n_scatter, nondominant, spec.length, underrep_threshold, rng)
        if n_scatter > 0
        else {}
    )

    picked = []
    for cid, count in list(dom_counts.items()) + list(scatter_counts.items()):
        pool = list(corpus.by_category.get(cid, []))
        if len(pool) < count:
            raise CapacityError(
                f"category {cid!r} has {len(pool)} items, need {count}"
            )
        picked.extend(rng.sample(pool, count))
    rng.shuffle(picked)
    return picked


def search_corpus(corpus: Corpus, query: str) -> list:
    """Rank corpus items against a keyword query.

    Title matches are case-insensitive substrings; category matches are exact
    against the category's synonym list and dominate the ranking. Ties break
    by engagement count, then item id, so results are deterministic. No match
    at all yields an empty list.
    """
    normalized = re.sub(r"[^a-z0-9]+", " ", query.lower()).strip()
    tokens = normalized.split()
    if not tokens:
        raise ValidationError("search query is empty")
    scored = []
    for item in corpus.items:
        title = item.title.lower()
        synonyms = CATEGORY_SYNONYMS.get(item.category, [item.category])
        score = 0
        for token in tokens:
            if token in synonyms:
                score += 2
            if token in title:
                score += 1
        for phrase in synonyms:
            if " " in phrase and phrase in normalized:
                score += 2
        if score > 0:
            scored.append((score, item))
    scored.sort(key=lambda pair: (-pair[0], -pair[1].engagement_count, pair[1].item_id))
    return [item for _, item in scored]


def feed_spec_permutations() -> list:
    """The three stock dominant-category pairings used by the study harness."""
    return [
        FeedSpec(dominant_categories=("food", "fashion")),
        FeedSpec(dominant_categories=("skincare", "fitness")),
        FeedSpec(dominant_categories=("home_decor", "photography")),
    ]
