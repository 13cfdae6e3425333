"""Survey instruments and response validation.

Item kinds: ("int", lo, hi) required Likert rating, ("bool",) required
yes/no, ("text",) optional free text.
"""

from __future__ import annotations


class SchemaError(ValueError):
    pass


INSTRUMENTS: dict[str, dict[str, tuple]] = {
    "intraday": {
        # 1 = Very Calm ... 5 = Very Active
        "activity_rating": ("int", 1, 5),
        "activity_text": ("text",),
    },
    "end_of_day": {
        "medication_taken": ("bool",),
        "communication_rating": ("int", 1, 5),
        "reflection_text": ("text",),
    },
    "end_of_week": {
        "behavior_text": ("text",),
        "efficacy_confident": ("int", 1, 5),
        "efficacy_overwhelmed": ("int", 1, 5),
        "efficacy_supported": ("int", 1, 5),
        "relationship_closeness": ("int", 1, 5),
        "relationship_positive_reinforcement": ("int", 1, 5),
        "tech_notification_awareness": ("int", 1, 5),
        "tech_connection_quality": ("int", 1, 5),
        "tech_manageability": ("int", 1, 5),
        "tech_helped_connect": ("int", 1, 5),
        "reflection_learning_text": ("text",),
        "reflection_change_text": ("text",),
    },
    # Stored verbatim at onboarding; never scored.
    "pre_study": {
        "vadrs_1": ("int", 0, 3),
        "vadrs_2": ("int", 0, 3),
        "vadrs_3": ("int", 0, 3),
        "vadrs_4": ("int", 0, 3),
        "vadrs_5": ("int", 0, 3),
    },
}


def validate_items(kind: str, items: dict) -> dict:
    """Check keys/types/ranges against the instrument; returns a canonical
    copy. Text items may be omitted; rating and yes/no items may not."""
    schema = INSTRUMENTS.get(kind)
    if schema is None:
        raise SchemaError(f"unknown survey kind {kind!r}")
    unknown = set(items) - set(schema)
    if unknown:
        raise SchemaError(f"unknown items for {kind}: {sorted(unknown)}")
    out = {}
    for key, spec in schema.items():
        if spec[0] == "text":
            if key in items:
                if not isinstance(items[key], str):
                    raise SchemaError(f"{key} must be text")
                out[key] = items[key]
            continue
        if key not in items:
            raise SchemaError(f"missing required item {key}")
        val = items[key]
        if spec[0] == "bool":
            if not isinstance(val, bool):
                raise SchemaError(f"{key} must be yes/no")
            out[key] = val
        else:
            lo, hi = spec[1], spec[2]
            if not isinstance(val, int) or isinstance(val, bool) or not (lo <= val <= hi):
                raise SchemaError(f"{key} must be an integer in [{lo},{hi}]")
            out[key] = val
    return out
