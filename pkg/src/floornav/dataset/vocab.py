"""Region-type catalog and stop-condition phrase bank for generated data."""

# 30 indoor region types; the renderer's palette is sized to match.
REGION_TYPES = (
    "balcony",
    "bar",
    "bathroom",
    "bedroom",
    "classroom",
    "closet",
    "dining booth",
    "dining room",
    "entryway",
    "family room",
    "game room",
    "garage",
    "gym",
    "hallway",
    "junk room",
    "kitchen",
    "laundry room",
    "library",
    "living room",
    "lounge",
    "meeting room",
    "office",
    "other room",
    "porch",
    "spa",
    "stairs",
    "toilet",
    "tv room",
    "utility room",
    "workshop",
)

CORRIDOR_TYPE = "hallway"

# Stop conditions for generated episodes, keyed by goal region type. Real
# deployments extract these from human instructions; an import path accepts
# pre-written phrases instead.
STOP_PHRASES = {
    "bathroom": ("near the sink", "next to the bathtub", "by the door"),
    "bedroom": ("next to the bed", "in front of the wardrobe", "by the window"),
    "dining room": ("next to the dining table", "by the chairs"),
    "kitchen": ("next to the stove", "by the sink", "at the counter"),
    "living room": ("by the sofa", "next to the coffee table", "in front of the tv"),
    "meeting room": ("at the head of the table", "next to the whiteboard"),
    "office": ("next to the desk", "by the bookshelf"),
    "library": ("next to the bookshelves", "by the reading desk"),
    "gym": ("next to the treadmill", "by the weights"),
}

DEFAULT_STOP_PHRASES = (
    "in the middle of the room",
    "near the door",
    "at the center of the room",
    "just inside the entrance",
)


def stop_phrases_for(region_type: str) -> tuple[str, ...]:
    return STOP_PHRASES.get(region_type, DEFAULT_STOP_PHRASES)
