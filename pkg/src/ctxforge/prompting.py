"""Few-shot prompt assembly for interest-based rewrites.

The default template carries three worked input/output exemplar problems and
three rules; rendering is a pure function of the template, problem and
interest, so identical calls produce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .model import Interest, ProblemTemplate


class TemplateError(Exception):
    pass


@dataclass(frozen=True)
class Exemplar:
    input_problem: str
    outputs: tuple[tuple[str, str], ...]  # (interest label, output text)

    def __post_init__(self):
        if not self.outputs:
            raise TemplateError("an exemplar needs at least one output")


@dataclass(frozen=True)
class PromptTemplate:
    preamble: str
    exemplars: tuple[Exemplar, ...]
    rules: tuple[str, ...]

    def __post_init__(self):
        if not self.rules:
            raise TemplateError("a template needs at least one rule")
        canonical = [r for r in DEFAULT_RULES if r in self.rules]
        positions = [self.rules.index(r) for r in canonical]
        if positions != sorted(positions):
            raise TemplateError("the default rules must keep their original order")


_EXEMPLAR_1_INPUT = """Chaz and Nikki are standing in a long line to buy rock concert tickets. Nikki is 8 feet ahead of Chaz in the line. Let's compare Chaz's distance to Nikki's distance from the front of the line.

When Nikki is 20 feet from the front of the line, how far away is Chaz?

When Nikki is 16 feet from the front of the line, how far away is Chaz?

In the row labeled "Expression", define a variable for Nikki's distance and use that variable to write an expression that will allow you to calculate Chaz's distance."""

_EXEMPLAR_1_VIDEO_GAMES = """In a video game, two players, Mario and Luigi, are standing at different points in a level. Luigi is 8 units ahead of Mario in the game. Let's compare Mario's distance to Luigi's distance from the level's end.

When Luigi is 20 units from the end of the level, how far away is Mario?

When Luigi is 16 units from the end of the level, how far away is Mario?

In the row labeled "Expression", define a variable for Mario's distance and use that variable to write an expression that will allow you to calculate Luigi's distance."""

_EXEMPLAR_1_BASKETBALL = """During a basketball game, two players, Jordan and Kobe, are standing at different positions on the court. Jordan is 12 feet ahead of Kobe on the court. Let's compare Jordan's distance to Kobe's distance from the basket.

When Kobe is 20 feet away from the basket, how far away is Jordan from the basket?

When Kobe is 16 feet away from the basket, how far away is Jordan from the basket?

In the row labeled "Expression", define a variable for Kobe's distance and use that variable to write an expression that will allow you to calculate Jordan's distance."""

_EXEMPLAR_2_INPUT = "You are a product inspector for a company that produces light bulbs. You find that two out of every 300 bulbs are defective: they don’t work properly."

_EXEMPLAR_2_WOW = "You enjoy playing World of Warcraft on your computer. You notice that two out of every 300 times you defeat a monster, the monster has an epic item: a treasure that you want to collect."

_EXEMPLAR_3_INPUT = """y = 80 - 6x

If x = 10, what is y?

If x = 7, what is y?

If y = 8, what is x?

Write a story that could go along with the equation y = 80 - 6x."""

_EXEMPLAR_3_VIDEO_GAMES = """You are playing your favorite war game on the Xbox 360. When you started playing today, there were 80 enemies left in the locust horde. You kill an average of 6 enemies every minute.

(a) How many enemies are left after 10 minutes?

(b) How many enemies are left after 7 minutes?

(c) Write an algebra rule that represents this situation using symbols.

(d) If there are only 8 enemies left, how long have you been playing today?"""

DEFAULT_PREAMBLE = "Your task is to change context based on interest for a problem, for example:"

DEFAULT_RULES = (
    "don't change values",
    "we want to have deeper contextualization not surface details based on Using Adaptive Learning Technologies to Personalize Instruction to Student Interests: The Impact of Relevant Contexts on Performance and Learning Outcomes",
    "output question should ask same thing as input question, don't ask any additional question or complicate the info by adding unnecessary details",
)


def default_template() -> PromptTemplate:
    """The built-in template: preamble, three exemplars, three rules."""
    return PromptTemplate(
        preamble=DEFAULT_PREAMBLE,
        exemplars=(
            Exemplar(
                input_problem=_EXEMPLAR_1_INPUT,
                outputs=(
                    ("Video Games", _EXEMPLAR_1_VIDEO_GAMES),
                    ("basketball", _EXEMPLAR_1_BASKETBALL),
                ),
            ),
            Exemplar(
                input_problem=_EXEMPLAR_2_INPUT,
                outputs=(("World of Warcraft", _EXEMPLAR_2_WOW),),
            ),
            Exemplar(
                input_problem=_EXEMPLAR_3_INPUT,
                outputs=(("Video Games", _EXEMPLAR_3_VIDEO_GAMES),),
            ),
        ),
        rules=DEFAULT_RULES,
    )


def build_prompt(template: PromptTemplate, problem: ProblemTemplate, interest: Interest) -> str:
    """Render the full prompt for one problem and one interest."""
    if not interest.label.strip():
        raise TemplateError("interest label must not be empty")
    blocks = [template.preamble]
    for i, exemplar in enumerate(template.exemplars, 1):
        blocks.append(f"Input Problem {i}:")
        blocks.append(exemplar.input_problem)
        for label, output in exemplar.outputs:
            blocks.append(f'Output Problem {i} based on interest "{label}":')
            blocks.append(output)
    blocks.append("Now give output for")
    blocks.append(f"input problem: {problem.full_text()}")
    blocks.append(f"Interest: {interest.label}")
    blocks.append("Some rules to follow:")
    blocks.append("\n".join(f"{i}. {rule}" for i, rule in enumerate(template.rules, 1)))
    return "\n\n".join(blocks)


def load_template(path: str | Path) -> PromptTemplate:
    """Load a template override from {preamble, exemplars[], rules[]} JSON."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return PromptTemplate(
            preamble=data["preamble"],
            exemplars=tuple(
                Exemplar(
                    input_problem=e["input_problem"],
                    outputs=tuple((o[0], o[1]) for o in e["outputs"]),
                )
                for e in data["exemplars"]
            ),
            rules=tuple(data["rules"]),
        )
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise TemplateError(f"template file does not match the schema: {exc}") from exc
