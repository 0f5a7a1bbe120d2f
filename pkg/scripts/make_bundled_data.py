#!/usr/bin/env python3
"""Regenerate the data files bundled with topicsim.

Outputs (committed to src/topicsim/data/):
  taxonomy_v1.tsv    349 topics under 24 root categories, v1-shaped
  static_mapping.tsv 9254 hand-annotation-style domain->topics rows

Both files are deterministic; rerunning this script must be a no-op.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from topicsim.taxonomy import TAXONOMY_HEADER  # noqa: E402

OUT_DIR = ROOT / "src" / "topicsim" / "data"

# Root category -> nested children. A plain string is a leaf; a tuple is
# (name, [children]). Subtree sizes (root included) are pinned by
# EXPECTED_SUBTREE_SIZES below and asserted before writing.
TAXONOMY_TREE = {
    "Arts & Entertainment": [
        "Acting & Theater",
        "Anime & Manga",
        "Cartoons",
        "Comics",
        "Concerts & Music Festivals",
        "Dance",
        "Entertainment Industry",
        "Fun & Trivia",
        ("Humor", ["Live Comedy"]),
        "Magic",
        "Movie Listings & Theater Showtimes",
        ("Movies", [
            "Action & Adventure Films",
            "Animated Films",
            "Comedy Films",
            "Cult & Indie Films",
            "Documentary Films",
            "Drama Films",
            "Family Films",
            "Horror Films",
            "Romance Films",
            "Sci-Fi & Fantasy Films",
            "Thriller, Crime & Mystery Films",
        ]),
        ("Music & Audio", [
            "Blues",
            "Classical Music",
            "Country Music",
            "Dance & Electronic Music",
            "Folk & Traditional Music",
            "Jazz",
            "Music Streams & Downloads",
            "Music Videos",
            "Musical Instruments",
            "Pop Music",
            "Radio",
            "Rap & Hip-Hop",
            "Rock Music",
            "Samples & Sound Libraries",
            "Soul & R&B",
            "World Music",
        ]),
        "Online Image Galleries",
        "Online Video",
        "Opera",
        ("TV & Video", [
            "TV Comedies",
            "TV Documentary & Nonfiction",
            "TV Dramas",
            "TV Family-Oriented Shows",
            "TV Reality Shows",
            "TV Sci-Fi & Fantasy Shows",
        ]),
        ("Visual Art & Design", [
            "Design",
            "Painting",
            "Photographic & Digital Arts",
        ]),
    ],
    "Autos & Vehicles": [
        ("Bicycles & Accessories", ["BMX Bikes", "Mountain Bikes", "Road Bikes"]),
        "Boats & Watercraft",
        "Campers & RVs",
        "Classic Vehicles",
        ("Commercial Vehicles", ["Cargo Trucks & Trailers"]),
        "Custom & Performance Vehicles",
        "Electric & Plug-In Vehicles",
        "Gas Prices & Vehicle Fueling",
        "Motorcycles",
        "Off-Road Vehicles",
        "Personal Aircraft",
        "Scooters & Mopeds",
        ("Trucks & SUVs", ["Pickup Trucks", "SUVs & Crossovers", "Vans & Minivans"]),
        "Vehicle Codes & Driving Laws",
        ("Vehicle Parts & Accessories", ["Vehicle Wheels & Tires"]),
        ("Vehicle Repair & Maintenance", ["Oil Changes & Tune-Ups"]),
        ("Vehicle Shopping", ["Used Vehicles"]),
        "Vehicle Shows",
    ],
    "Beauty & Fitness": [
        "Body Art",
        "Cosmetic Procedures",
        "Cosmetology & Beauty Professionals",
        ("Face & Body Care", ["Make-Up & Cosmetics", "Perfumes & Fragrances", "Skin & Nail Care"]),
        ("Fashion & Style", ["Fashion Designers & Collections"]),
        ("Fitness", ["High Intensity Interval Training", "Yoga & Pilates"]),
        "Hair Care",
    ],
    "Books & Literature": [
        "Children's Literature",
        "Poetry",
    ],
    "Business & Industrial": [
        ("Advertising & Marketing", ["Sales"]),
        "Aerospace & Defense",
        ("Agriculture & Forestry", ["Food Production"]),
        "Automotive Industry",
        "Aviation Industry",
        ("Business Operations", ["Flexible Work Arrangements", "Human Resources"]),
        ("Business Services", ["Office Services"]),
        "Construction & Maintenance",
        ("Energy & Utilities", ["Renewable & Alternative Energy"]),
        "Hospitality Industry",
        "Manufacturing",
        "Metals & Mining",
        "Pharmaceuticals & Biotech",
        "Printing & Publishing",
        "Retail Trade",
        "Shipping & Logistics",
    ],
    "Computers & Electronics": [
        ("Computer Hardware", ["Computer Components", "Computer Peripherals", "Laptops & Notebooks"]),
        ("Computer Security", ["Antivirus & Malware", "Network Security"]),
        ("Consumer Electronics", [
            "Audio Equipment",
            "Camera & Photo Equipment",
            "Drones & RC Aircraft",
            "GPS & Navigation",
            "Game Systems & Consoles",
            "Home Automation",
            "TV & Video Equipment",
        ]),
        ("Networking", ["Distributed & Cloud Computing"]),
        "Programming",
        ("Software", ["Audio & Music Software", "Graphics & Animation Software", "Operating Systems"]),
    ],
    "Finance": [
        ("Accounting & Auditing", ["Tax Preparation & Planning"]),
        ("Banking", ["Money Transfer & Wire Services"]),
        ("Credit & Lending", ["Credit Cards", "Home Financing", "Personal Loans", "Student Loans"]),
        "Currencies & Foreign Exchange",
        ("Financial Planning & Management", ["Retirement & Pension"]),
        ("Grants, Scholarships & Financial Aid", ["Study Grants & Scholarships"]),
        ("Insurance", ["Auto Insurance", "Health Insurance", "Home Insurance", "Life Insurance"]),
        ("Investing", ["Commodities & Futures Trading", "Stocks & Bonds"]),
    ],
    "Food & Drink": [
        ("Beverages", ["Coffee & Tea"]),
        ("Cooking & Recipes", ["Desserts", "Vegetarian & Vegan Cuisine"]),
        ("Food Service", ["Restaurants"]),
    ],
    "Games": [
        ("Board Games", ["Chess & Abstract Strategy Games"]),
        ("Card Games", ["Collectible Card Games"]),
        ("Computer & Video Games", [
            "Action & Platform Games",
            "Adventure Games",
            "Casual Games",
            "Competitive Video Gaming",
            "Massively Multiplayer Games",
            "Simulation Games",
            "Sports Games",
            "Strategy Games",
        ]),
        "Puzzles & Brainteasers",
        "Roleplaying Games",
    ],
    "Hobbies & Leisure": [
        "Birdwatching",
        ("Crafts", ["Fiber & Textile Arts"]),
        "Flower Arranging",
        "Genealogy & Ancestry",
        "Merit Prizes & Contests",
        "Model Trains & Railroads",
        ("Outdoors", ["Camping & Hiking", "Fishing"]),
    ],
    "Home & Garden": [
        "Gardening",
        "Home & Interior Decor",
        "Home Appliances",
        ("Home Improvement", ["Plumbing"]),
        "Home Safety & Security",
        "Landscape Design",
    ],
    "Internet & Telecom": [
        ("Email & Messaging", ["Text & Instant Messaging", "Voice & Video Chat"]),
        "ISPs",
        ("Mobile & Wireless", ["Mobile Apps & Add-Ons", "Mobile Phones"]),
        "Search Engines",
        ("Web Services", ["Web Design & Development"]),
    ],
    "Jobs & Education": [
        ("Education", [
            "Colleges & Universities",
            "Distance Learning",
            "Early Childhood Education",
            "Homeschooling",
            "Standardized & Admissions Tests",
            "Teaching & Classroom Resources",
            "Vocational & Continuing Education",
        ]),
        ("Jobs", ["Career Resources & Planning", "Job Listings", "Resumes & Portfolios"]),
    ],
    "Law & Government": [
        "Government",
        "Legal Services",
        "Military",
    ],
    "News": [
        ("Business News", ["Economy News", "Financial Markets News"]),
        "Local News",
        "Politics",
        "Weather",
    ],
    "Online Communities": [
        "Clip Art & Animated GIFs",
        "Photo & Image Sharing",
        "Social Networks",
    ],
    "People & Society": [
        ("Family & Relationships", ["Family", "Marriage", "Parenting", "Romance"]),
        "Self-Help & Motivational",
        "Seniors & Retirement",
        "Social Issues & Advocacy",
    ],
    "Pets & Animals": [
        "Pet Food & Pet Care Supplies",
        ("Pets", ["Birds", "Cats", "Dogs", "Fish & Aquaria", "Reptiles & Amphibians"]),
        "Veterinarians",
    ],
    "Real Estate": [
        "Real Estate Listings",
        "Real Estate Services",
    ],
    "Reference": [
        "Foreign Language Study",
        "General Reference",
        "Libraries & Museums",
    ],
    "Science": [
        "Astronomy",
        ("Biological Sciences", ["Genetics"]),
        "Chemistry",
        ("Ecology & Environment", ["Climate Change & Global Warming"]),
        "Geology",
        "Mathematics",
        "Physics",
    ],
    "Shopping": [
        "Antiques & Collectibles",
        ("Apparel", [
            "Children's Clothing",
            "Costumes",
            "Men's Clothing",
            "Shoes & Footwear",
            "Women's Clothing",
        ]),
        ("Consumer Resources", ["Coupons & Discount Offers"]),
    ],
    "Sports": [
        "American Football",
        "Baseball",
        "Basketball",
        "Bowling",
        "Boxing",
        "College Sports",
        "Cricket",
        "Cycling",
        "Equestrian",
        ("Extreme Sports", ["Climbing & Mountaineering", "Skateboarding"]),
        "Fantasy Sports",
        "Golf",
        "Gymnastics",
        "Hockey",
        "Martial Arts",
        "Motor Sports",
        "Olympics",
        "Rugby",
        "Running & Walking",
        "Soccer",
        ("Sporting Goods", ["Sports Memorabilia"]),
        "Sports Coaching & Training",
        "Swimming",
        "Tennis",
        "Volleyball",
        "Water Sports",
        ("Winter Sports", ["Ice Skating", "Skiing & Snowboarding"]),
    ],
    "Travel & Transportation": [
        "Air Travel",
        "Business Travel",
        "Car Rentals",
        "Cruises & Charters",
        ("Hotels & Accommodations", ["Vacation Rentals & Short-Term Stays"]),
        "Luggage & Travel Accessories",
        "Public Transportation",
        "Rail Travel",
        ("Tourist Destinations", [
            "Beaches & Islands",
            "Mountain & Ski Resorts",
            "Theme Parks",
            "Zoos, Aquariums & Preserves",
        ]),
        "Traffic & Route Planners",
        "Travel Agencies & Services",
        "Travel Guides & Travelogues",
    ],
}

EXPECTED_SUBTREE_SIZES = {
    "/Arts & Entertainment": 56,
    "/Autos & Vehicles": 29,
    "/Beauty & Fitness": 14,
    "/Books & Literature": 3,
    "/Business & Industrial": 23,
    "/Computers & Electronics": 23,
    "/Finance": 23,
    "/Food & Drink": 8,
    "/Games": 16,
    "/Hobbies & Leisure": 11,
    "/Home & Garden": 8,
    "/Internet & Telecom": 11,
    "/Jobs & Education": 13,
    "/Law & Government": 4,
    "/News": 7,
    "/Online Communities": 4,
    "/People & Society": 9,
    "/Pets & Animals": 9,
    "/Real Estate": 3,
    "/Reference": 4,
    "/Science": 10,
    "/Shopping": 10,
    "/Sports": 33,
    "/Travel & Transportation": 18,
}

# Per-domain topic-count histogram of the hand-annotated mapping.
STATIC_MAPPING_HISTOGRAM = {0: 1344, 1: 4135, 2: 2350, 3: 1073, 4: 270, 5: 59, 6: 20, 7: 3}
STATIC_MAPPING_UNUSED_TOPICS = 95
STATIC_MAPPING_SEED = 20230530

_WORDS_A = [
    "alpha", "arctic", "atlas", "aurora", "bay", "beacon", "blue", "bold", "bramble", "bright",
    "canyon", "cedar", "citrus", "cobalt", "copper", "coral", "crest", "crimson", "daily", "dawn",
    "delta", "drift", "east", "echo", "ember", "fable", "fern", "first", "forge", "fox",
    "gale", "glade", "gold", "granite", "grove", "harbor", "haven", "hazel", "height", "hollow",
    "ical", "iron", "ivory", "jade", "juniper", "keen", "lake", "larch", "ledge", "lunar",
    "maple", "meadow", "mint", "misty", "north", "nova", "oak", "ocean", "onyx", "opal",
    "orchard", "pebble", "pine", "pioneer", "prime", "quartz", "rapid", "raven", "ridge", "river",
    "rustic", "sable", "sage", "shade", "silver", "slate", "solar", "south", "spark", "spring",
    "stone", "summit", "sunny", "swift", "terra", "thorn", "tidal", "timber", "topaz", "torch",
    "trail", "true", "tulip", "umber", "urban", "vale", "velvet", "vista", "west", "willow",
]
_WORDS_B = [
    "active", "advice", "arcade", "atelier", "avenue", "bakery", "bazaar", "board", "boutique",
    "bridge", "bulletin", "cast", "channel", "chart", "circle", "city", "class", "clinic", "club",
    "coach", "corner", "course", "craft", "crew", "daily", "depot", "desk", "digest", "dispatch",
    "dock", "express", "factory", "field", "film", "flow", "forum", "frame", "garage", "garden",
    "gazette", "guide", "hall", "herald", "house", "hub", "journal", "kitchen", "lab", "ledger",
    "lens", "line", "list", "loft", "log", "lounge", "market", "media", "mill", "monitor",
    "nest", "network", "notes", "office", "outlet", "pages", "parlor", "path", "pixel", "planet",
    "point", "port", "post", "press", "pulse", "quarter", "radar", "ranch", "report", "review",
    "road", "room", "scope", "shelf", "shop", "signal", "source", "space", "sphere", "spot",
    "stack", "stage", "stand", "station", "store", "stream", "studio", "tables", "times", "tribune",
    "vault", "view", "voice", "wire", "works", "yard", "zone",
]
_TLDS = ["com"] * 10 + ["net"] * 3 + ["org"] * 3 + ["io", "co", "info", "biz", "us", "co.uk", "de", "fr"]


def _walk(prefix: str, entries) -> list[str]:
    names = []
    for entry in entries:
        if isinstance(entry, tuple):
            name, children = entry
        else:
            name, children = entry, []
        path = f"{prefix}/{name}"
        names.append(path)
        names.extend(_walk(path, children))
    return names


def build_taxonomy_rows() -> list[tuple[int, str]]:
    names = []
    for root, entries in TAXONOMY_TREE.items():
        root_path = f"/{root}"
        names.append(root_path)
        names.extend(_walk(root_path, entries))
    assert len(names) == len(set(names)), "duplicate topic paths"
    for root_path, expected in EXPECTED_SUBTREE_SIZES.items():
        size = sum(1 for n in names if n == root_path or n.startswith(root_path + "/"))
        assert size == expected, f"{root_path}: {size} != {expected}"
    assert len(names) == sum(EXPECTED_SUBTREE_SIZES.values()) == 349
    return [(i + 1, name) for i, name in enumerate(sorted(names))]


def build_static_mapping(n_topics: int) -> list[tuple[str, list[int]]]:
    rng = np.random.default_rng(STATIC_MAPPING_SEED)
    n_domains = sum(STATIC_MAPPING_HISTOGRAM.values())

    # Domain names: word-word.tld, deduplicated with a numeric suffix fallback.
    names: list[str] = []
    seen = set()
    while len(names) < n_domains:
        a = _WORDS_A[rng.integers(len(_WORDS_A))]
        b = _WORDS_B[rng.integers(len(_WORDS_B))]
        tld = _TLDS[rng.integers(len(_TLDS))]
        sep = "" if rng.random() < 0.55 else "-"
        name = f"{a}{sep}{b}.{tld}"
        if name in seen:
            name = f"{a}{sep}{b}{len(names) % 97}.{tld}"
        if name in seen:
            continue
        seen.add(name)
        names.append(name)

    # Skewed topic popularity: a fraction of topics never appears at all,
    # the rest follow a power law, matching the shape of hand annotations.
    used = rng.permutation(np.arange(1, n_topics + 1))[: n_topics - STATIC_MAPPING_UNUSED_TOPICS]
    weights = (np.arange(1, len(used) + 1, dtype=float)) ** -1.1
    weights /= weights.sum()

    counts = np.repeat(
        list(STATIC_MAPPING_HISTOGRAM.keys()), list(STATIC_MAPPING_HISTOGRAM.values())
    )
    rng.shuffle(counts)

    rows = []
    for name, k in zip(names, counts):
        if k == 0:
            rows.append((name, []))
            continue
        picks = rng.choice(len(used), size=int(k), replace=False, p=weights)
        rows.append((name, sorted(int(used[i]) for i in picks)))
    return rows


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)

    rows = build_taxonomy_rows()
    tax_lines = [TAXONOMY_HEADER] + [f"{tid}\t{name}" for tid, name in rows]
    (OUT_DIR / "taxonomy_v1.tsv").write_text("\n".join(tax_lines) + "\n", encoding="utf-8")
    print(f"taxonomy_v1.tsv: {len(rows)} topics")

    mapping = build_static_mapping(n_topics=len(rows))
    map_lines = [f"{d}\t{','.join(map(str, ts))}" for d, ts in mapping]
    (OUT_DIR / "static_mapping.tsv").write_text("\n".join(map_lines) + "\n", encoding="utf-8")
    empty = sum(1 for _, ts in mapping if not ts)
    print(f"static_mapping.tsv: {len(mapping)} domains, {empty} without topics")


if __name__ == "__main__":
    main()
