from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from hardgen import prompts
from hardgen.mocks import format_setter_output


def test_setter_template_fields():
    text = prompts.render_setter("integrate cos(x)", "sin(x)", "integral", "t")
    for label in ("Generated Problem:", "Generated Reference Solution:", "Final Answer:"):
        assert label in text
    assert "integrate cos(x)" in text and "sin(x)" in text and "t" in text
    assert "${" not in text


def test_general_setter_template_differs():
    a = prompts.render_setter("p", "s", "integral")
    b = prompts.render_setter("p", "s", "general_math")
    assert a != b


def test_templates_keep_latex_braces():
    text = prompts.render_solver("Evaluate \\frac{1}{2} + \\boxed{x}")
    assert "\\frac{1}{2}" in text and "\\boxed{...}" in text


def test_judge_template_lists_all_tags():
    text = prompts.render_judge("a", "b", "c", "d")
    for tag in prompts.JUDGE_TAGS:
        assert f"{tag}:" in text


def test_parse_setter_output():
    fields = prompts.parse_setter_output(format_setter_output("P?", "Because. \\boxed{3}", "3"))
    assert fields == {"Generated Problem": "P?", "Generated Reference Solution": "Because. \\boxed{3}", "Final Answer": "3"}


def test_parse_setter_output_multiline_fields():
    raw = "Generated Problem: line one\nline two\nGenerated Reference Solution: s\nFinal Answer: 1"
    assert prompts.parse_setter_output(raw)["Generated Problem"] == "line one\nline two"


@pytest.mark.parametrize(
    "raw",
    [
        "Generated Reference Solution: s\nFinal Answer: 1",
        "Generated Problem: p\nGenerated Problem: q\nGenerated Reference Solution: s\nFinal Answer: 1",
        "Generated Problem:\nGenerated Reference Solution: s\nFinal Answer: 1",
        "",
    ],
)
def test_parse_setter_output_rejects(raw):
    with pytest.raises(ValueError):
        prompts.parse_setter_output(raw)


def test_judge_round_trip():
    tags = {t: i % 2 == 0 for i, t in enumerate(prompts.JUDGE_TAGS)}
    explanation, parsed = prompts.parse_judge_output(prompts.format_judge_output("Reasoning here.", tags))
    assert explanation == "Reasoning here." and parsed == tags


def test_judge_parser_tolerates_case_and_spacing():
    body = "\n".join(f"{t.upper()} :  TRUE" for t in prompts.JUDGE_TAGS)
    _, tags = prompts.parse_judge_output("Checked.\n\n" + body + "\n\n")
    assert all(tags.values())


@given(st.dictionaries(st.sampled_from(prompts.JUDGE_TAGS), st.booleans()))
def test_judge_parser_requires_all_five(tags):
    text = "Reasoning.\n" + "\n".join(f"{k}: {str(v).lower()}" for k, v in tags.items())
    if len(tags) == len(prompts.JUDGE_TAGS):
        assert prompts.parse_judge_output(text)[1] == tags
    else:
        with pytest.raises(ValueError):
            prompts.parse_judge_output(text)


def test_prompt_version():
    assert prompts.PROMPT_VERSION == "v1"
    assert prompts.load("solver") is prompts.load("solver")
