import pytest

from revealed_loss.core import Action, CostVector
from revealed_loss.exceptions import ParseError, RangeError
from revealed_loss.parsing import (
    parse_decision_lines,
    parse_decision_response,
    parse_probability_response,
    parse_self_report,
)


class TestProbability:
    @pytest.mark.parametrize("text, expected", [
        ("No: 0.30\nYes: 0.70", 0.70),
        ("No: 0.50\nYes: 0.50", 0.50),
        ("  Yes: 0.70  \n\n no : 0.30\n", 0.70),
        ("No: 0.33\nYes: 0.66", 0.66 / 0.99),
        ("No: 0\nYes: 1", 1.0),
    ])
    def test_accepts(self, text, expected):
        assert parse_probability_response(text) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("text, error", [
        ("No: 0.40\nYes: 0.70", ParseError),
        ("Yes: 0.70", ParseError),
        ("No: 0.30\nYes: seventy", ParseError),
        ("No: 0.30\nYes: 0.70\nMaybe: 0.1", ParseError),
        ("No: 0.30\nYes: 0.70\nextra text", ParseError),
        ("No: 0.30\nNo: 0.30\nYes: 0.70", ParseError),
        ("No: nan\nYes: 0.70", ParseError),
        ("No: -0.20\nYes: 1.20", RangeError),
        ("", ParseError),
    ])
    def test_rejects(self, text, error):
        with pytest.raises(error):
            parse_probability_response(text)


class TestDecision:
    @pytest.mark.parametrize("text, expected", [
        ("Can decide: Yes\nDecision: Yes", Action.POSITIVE),
        ("Can decide: Yes\nDecision: No", Action.NEGATIVE),
        ("Can decide: No\nDecision: Yes", Action.DEFER),
        ("Can decide: No\nDecision: No", Action.DEFER),
        ("decision: yes\ncan  decide: YES", Action.POSITIVE),
    ])
    def test_accepts(self, text, expected):
        assert parse_decision_response(text) is expected

    def test_forced_choice_retained(self):
        assert parse_decision_lines("Can decide: No\nDecision: Yes") == (False, Action.POSITIVE)

    @pytest.mark.parametrize("text", [
        "Can decide: Maybe\nDecision: Yes",
        "Can decide: Yes\nDecision: Defer",
        "Can decide: Yes",
        "Decision: Yes",
        "Can decide: Yes\nDecision: Yes\nReason: obvious",
        "Yes\nYes",
    ])
    def test_rejects(self, text):
        with pytest.raises(ParseError):
            parse_decision_response(text)


class TestSelfReport:
    def test_template(self):
        text = "False Positive: 1\nFalse Negative: 10\nDeferral: 2"
        assert parse_self_report(text) == CostVector(1, 10, 2)

    def test_reordered_lines(self):
        text = "Deferral: 2\nFalse Positive: 1\nFalse Negative: 10"
        assert parse_self_report(text) == CostVector(1, 10, 2)

    def test_negative_value(self):
        with pytest.raises(RangeError):
            parse_self_report("False Positive: -1\nFalse Negative: 10\nDeferral: 2")

    @pytest.mark.parametrize("text", [
        "False Positive: 1\nFalse Negative: 10",
        "False Positive: one\nFalse Negative: 10\nDeferral: 2",
        "False Positive: 1\nFalse Negative: 10\nDeferral: 2\nTrue Positive: 0",
    ])
    def test_malformed(self, text):
        with pytest.raises(ParseError):
            parse_self_report(text)
