"""The eight zero-shot gender-scoring prompts, four per class.

The ids are part of the similarity interchange contract with the main
pipeline and must match its prompt manifest exactly.
"""

SCORING_PROMPTS = {
    "photo_of_man": "a photo of a man",
    "portrait_of_male_person": "a portrait of a male person",
    "picture_of_man": "a picture of a man",
    "male_face": "a male face",
    "photo_of_woman": "a photo of a woman",
    "portrait_of_female_person": "a portrait of a female person",
    "picture_of_woman": "a picture of a woman",
    "female_face": "a female face",
}


def load_prompt_manifest(path) -> dict[str, str]:
    """Optional override: a JSON prompt manifest of the pipeline's shape
    ({"prompts": {id: {"text": ..., "class": ...}}}) or a flat id->text map."""
    import json

    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if "prompts" in raw:
        return {pid: entry["text"] for pid, entry in raw["prompts"].items()}
    return dict(raw)
