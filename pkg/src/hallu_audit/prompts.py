"""Registry of the five augmentation prompt templates.

Templates are shipped as text assets; ``{text}`` marks where the input goes.
"""

from __future__ import annotations

from importlib import resources

from .errors import UnknownPromptId

PROMPT_IDS = ("verbose", "concise", "numeric-facts", "related-entities", "free")


def require_prompt_id(prompt_id: str) -> str:
    if prompt_id not in PROMPT_IDS:
        raise UnknownPromptId(
            f"prompt id {prompt_id!r} is not registered; known ids: {', '.join(PROMPT_IDS)}"
        )
    return prompt_id


def get_prompt(prompt_id: str) -> str:
    """The raw template text for a registered prompt id."""
    require_prompt_id(prompt_id)
    ref = resources.files("hallu_audit").joinpath("templates", f"{prompt_id}.txt")
    return ref.read_text(encoding="utf-8")


def render_prompt(prompt_id: str, text: str) -> str:
    """The template with the input text substituted in."""
    return get_prompt(prompt_id).replace("{text}", text)
