"""Parsers for raw model responses to the elicitation prompts.

Every parser is strict: it either maps the text losslessly onto a value or
raises :class:`ParseError` (or :class:`RangeError` for out-of-range
numbers) describing the defect. Labels are matched case-insensitively and
may appear in any order; blank lines and surrounding whitespace are ignored.
"""

import math
import re

from .core import Action, CostVector
from .exceptions import ParseError, RangeError

__all__ = [
    "PROBABILITY_SUM_TOLERANCE",
    "parse_decision_lines",
    "parse_decision_response",
    "parse_probability_response",
    "parse_self_report",
]

PROBABILITY_SUM_TOLERANCE = 0.02

_LINE = re.compile(r"^\s*([A-Za-z][A-Za-z ]*?)\s*:\s*(.*?)\s*$")


def _labeled_lines(text, labels, what):
    """Split ``text`` into ``{label: raw value}`` for exactly ``labels``."""
    if not isinstance(text, str):
        raise ParseError(f"{what}: expected text, got {type(text).__name__}")
    canon = {label.lower(): label for label in labels}
    found = {}
    lines = [line for line in text.splitlines() if line.strip()]
    for lineno, line in enumerate(lines, 1):
        m = _LINE.match(line)
        if not m:
            raise ParseError(f"{what}: line {lineno} is not '<label>: <value>': {line.strip()!r}", line=lineno)
        key = canon.get(" ".join(m.group(1).split()).lower())
        if key is None:
            raise ParseError(f"{what}: unexpected label {m.group(1)!r} on line {lineno}", line=lineno)
        if key in found:
            raise ParseError(f"{what}: label {key!r} appears more than once", line=lineno)
        found[key] = m.group(2)
    missing = [label for label in labels if label not in found]
    if missing:
        raise ParseError(f"{what}: missing line(s) for {', '.join(missing)}", field=missing[0])
    return found


def _number(raw, label, what):
    try:
        value = float(raw)
    except ValueError:
        raise ParseError(f"{what}: value for {label!r} is not numeric: {raw!r}", field=label) from None
    if not math.isfinite(value):
        raise ParseError(f"{what}: value for {label!r} is not finite: {raw!r}", field=label)
    return value


def parse_probability_response(text) -> float:
    """Return P(Yes) from a two-line ``No: <p>`` / ``Yes: <p>`` response.

    The pair must sum to 1 within :data:`PROBABILITY_SUM_TOLERANCE`; the Yes
    value is then divided by the sum.
    """
    what = "probability response"
    fields = _labeled_lines(text, ("No", "Yes"), what)
    no = _number(fields["No"], "No", what)
    yes = _number(fields["Yes"], "Yes", what)
    for label, value in (("No", no), ("Yes", yes)):
        if not 0.0 <= value <= 1.0:
            raise RangeError(f"{what}: {label} = {value} is outside [0, 1]", field=label)
    total = no + yes
    if abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE:
        raise ParseError(
            f"{what}: No + Yes = {total:g} is not within {PROBABILITY_SUM_TOLERANCE} of 1"
        )
    return yes / total


_YES_NO = {"yes": True, "no": False}


def _yes_no(raw, label, what):
    value = _YES_NO.get(raw.strip().lower())
    if value is None:
        raise ParseError(f"{what}: {label!r} must be Yes or No, got {raw!r}", field=label)
    return value


def parse_decision_lines(text):
    """Return ``(can_decide, forced_choice)`` from a decision response.

    ``forced_choice`` is the diagnosis given on the second line, kept even
    when the agent declined to decide.
    """
    what = "decision response"
    fields = _labeled_lines(text, ("Can decide", "Decision"), what)
    can_decide = _yes_no(fields["Can decide"], "Can decide", what)
    forced = Action.POSITIVE if _yes_no(fields["Decision"], "Decision", what) else Action.NEGATIVE
    return can_decide, forced


def parse_decision_response(text) -> Action:
    """Map a decision response to an action; ``Can decide: No`` means defer."""
    can_decide, forced = parse_decision_lines(text)
    return forced if can_decide else Action.DEFER


def parse_self_report(text) -> CostVector:
    what = "self-report"
    labels = ("False Positive", "False Negative", "Deferral")
    fields = _labeled_lines(text, labels, what)
    values = []
    for label in labels:
        value = _number(fields[label], label, what)
        if value < 0:
            raise RangeError(f"{what}: {label} cost {value:g} is negative", field=label)
        values.append(value)
    return CostVector(*values)
