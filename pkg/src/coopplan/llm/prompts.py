"""Prompt templates with ``$NAME$`` placeholders."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping

PLACEHOLDER = re.compile(r"\$([A-Z][A-Z_]*)\$")

TEMPLATE_NAMES = (
    "planner",
    "message_generator",
    "reflector",
    "planner_transport",
    "message_generator_transport",
    "reflector_transport",
)


class TemplateError(ValueError):
    pass


class UnboundPlaceholder(TemplateError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name


class UnknownBinding(TemplateError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str

    @property
    def required(self) -> frozenset[str]:
        return frozenset(PLACEHOLDER.findall(self.body))


@lru_cache(maxsize=None)
def load_template(name: str) -> PromptTemplate:
    if name not in TEMPLATE_NAMES:
        raise TemplateError(f"unknown template {name!r}")
    text = resources.files("coopplan.llm").joinpath("templates", f"{name}.txt").read_text()
    return PromptTemplate(name, text.rstrip("\n"))


def template_for(role: str, task_kind: str = "household") -> PromptTemplate:
    return load_template(role if task_kind == "household" else f"{role}_transport")


def render_template(template: PromptTemplate, bindings: Mapping[str, str], strict: bool = False) -> str:
    """Substitute every placeholder in one pass.

    Values are inserted literally, so a value that itself contains ``$GOAL$``
    is not expanded again.
    """
    required = template.required
    for name in sorted(required):
        if name not in bindings:
            raise UnboundPlaceholder(name)
    if strict:
        for name in sorted(bindings):
            if name not in required:
                raise UnknownBinding(name)
    return PLACEHOLDER.sub(lambda m: str(bindings[m.group(1)]), template.body)
