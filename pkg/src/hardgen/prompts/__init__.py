"""Versioned prompt templates and the parsers for their response formats.

Templates use ``string.Template`` placeholders (``${name}``) so that braces in
LaTeX content never collide with the substitution syntax.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from string import Template

PROMPT_VERSION = "v1"

JUDGE_TAGS = (
    "valid_problem",
    "valid_solution",
    "seed_anchored",
    "not_trivial_copy",
    "complete_final_answer",
)

SETTER_FIELDS = ("Generated Problem", "Generated Reference Solution", "Final Answer")


@lru_cache(maxsize=None)
def load(name: str, version: str = PROMPT_VERSION) -> Template:
    text = resources.files(__name__).joinpath(f"{name}_{version}.txt").read_text(encoding="utf-8")
    return Template(text)


def render_setter(seed_problem: str, seed_solution: str, task_kind: str, variable: str = "x") -> str:
    extra_name = "setter_integral" if task_kind == "integral" else "setter_general"
    extra = load(extra_name).substitute(variable=variable)
    return load("setter").substitute(
        task_instructions=extra, seed_problem=seed_problem, seed_solution=seed_solution
    )


def render_solver(problem: str) -> str:
    return load("solver").substitute(problem=problem)


def render_judge(seed_problem: str, seed_solution: str, derived_problem: str, modified_solution: str) -> str:
    return load("judge").substitute(
        seed_problem=seed_problem,
        seed_solution=seed_solution,
        derived_problem=derived_problem,
        modified_solution=modified_solution,
    )


_FIELD_RE = re.compile(
    r"^(Generated Problem|Generated Reference Solution|Final Answer)\s*:", re.MULTILINE
)


def parse_setter_output(text: str) -> dict[str, str]:
    """Split setter output into its labelled fields.

    Each field runs until the next label. Raises ``ValueError`` when a label is
    missing or repeated.
    """
    matches = list(_FIELD_RE.finditer(text))
    found: dict[str, str] = {}
    for i, m in enumerate(matches):
        label = m.group(1)
        if label in found:
            raise ValueError(f"field {label!r} appears more than once")
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        found[label] = text[m.end() : end].strip()
    missing = [f for f in SETTER_FIELDS if not found.get(f)]
    if missing:
        raise ValueError(f"missing setter field(s): {', '.join(missing)}")
    return found


_TAG_LINE = re.compile(r"^([a-z_]+)\s*:\s*(true|false)\s*$")


def parse_judge_output(text: str) -> tuple[str, dict[str, bool]]:
    """Parse the strict judge format: an explanation paragraph, then five tag lines.

    Raises ``ValueError`` on any deviation: missing explanation, missing,
    repeated or unknown tags, or trailing content after the tag block.
    """
    lines = [ln.strip() for ln in text.strip().splitlines()]
    # the tag block is the trailing run of non-empty lines matching key: bool
    i = len(lines)
    while i > 0 and _TAG_LINE.match(lines[i - 1].lower() if lines[i - 1] else "x"):
        i -= 1
    tag_lines = lines[i:]
    explanation = "\n".join(lines[:i]).strip()
    if not explanation:
        raise ValueError("judge response has no explanation before the tags")
    tags: dict[str, bool] = {}
    for ln in tag_lines:
        key, value = _TAG_LINE.match(ln.lower()).groups()
        if key not in JUDGE_TAGS:
            raise ValueError(f"unknown judge tag {key!r}")
        if key in tags:
            raise ValueError(f"judge tag {key!r} repeated")
        tags[key] = value == "true"
    missing = [t for t in JUDGE_TAGS if t not in tags]
    if missing:
        raise ValueError(f"judge response missing tag(s): {', '.join(missing)}")
    return explanation, tags


def format_judge_output(explanation: str, tags: dict[str, bool]) -> str:
    body = "\n".join(f"{t}: {'true' if tags[t] else 'false'}" for t in JUDGE_TAGS)
    return f"{explanation.strip()}\n{body}\n"
