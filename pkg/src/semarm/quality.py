"""Rule quality metrics over a transaction table: support, confidence, rule
coverage, data coverage, and Zhang's association-strength metric.

All metrics are exact integer counts followed by one final division, so
independent row-scan recomputations agree bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .extract import Rule, rule_to_doc
from .transact import Feature, TransactionTable

__all__ = [
    "RuleStats",
    "RuleQualityReport",
    "support",
    "confidence",
    "rule_coverage",
    "data_coverage",
    "zhang",
    "evaluate",
    "annotate_rules",
    "report_to_doc",
    "format_report",
    "REPORT_SCHEMA",
]


def _items_mask(table: TransactionTable, items) -> np.ndarray:
    mask = np.ones(table.n_rows, dtype=bool)
    for item in items:
        mask &= table.rows[:, item.feature] == item.class_index
    return mask


def _counts(rule: Rule, table: TransactionTable) -> tuple[int, int, int]:
    """(antecedent count, antecedent+consequent count, consequent count)."""
    x_mask = _items_mask(table, rule.antecedent)
    y_mask = table.rows[:, rule.consequent.feature] == rule.consequent.class_index
    return int(x_mask.sum()), int((x_mask & y_mask).sum()), int(y_mask.sum())


def support(rule: Rule, table: TransactionTable) -> float:
    """Fraction of transactions containing every item of the rule."""
    _, n_xy, _ = _counts(rule, table)
    return n_xy / table.n_rows


def confidence(rule: Rule, table: TransactionTable) -> float:
    """Fraction of antecedent transactions also containing the consequent;
    0 when the antecedent never occurs."""
    n_x, n_xy, _ = _counts(rule, table)
    return n_xy / n_x if n_x else 0.0


def rule_coverage(rule: Rule, table: TransactionTable) -> float:
    """Fraction of transactions containing the antecedent."""
    x_mask = _items_mask(table, rule.antecedent)
    return int(x_mask.sum()) / table.n_rows


def data_coverage(rules, table: TransactionTable) -> float:
    """Fraction of transactions matched by at least one rule's antecedent."""
    if not rules:
        return 0.0
    union = np.zeros(table.n_rows, dtype=bool)
    for rule in rules:
        union |= _items_mask(table, rule.antecedent)
    return int(union.sum()) / table.n_rows


def zhang(rule: Rule, table: TransactionTable) -> float:
    """Association strength in [-1, 1]: positive for association, 0 for
    independence, negative for dissociation.

    Computed as (conf(X->Y) - conf(X'->Y)) / max(conf(X->Y), conf(X'->Y))
    with X' the transactions lacking X. Returns 0 when X covers every row
    (X' is empty) or when both confidences are 0.
    """
    n = table.n_rows
    n_x, n_xy, n_y = _counts(rule, table)
    if n_x == n:
        return 0.0
    conf_x = n_xy / n_x if n_x else 0.0
    conf_not_x = (n_y - n_xy) / (n - n_x)
    denom = max(conf_x, conf_not_x)
    if denom == 0.0:
        return 0.0
    return (conf_x - conf_not_x) / denom


@dataclass
class RuleStats:
    rule: Rule
    support: float
    confidence: float
    rule_coverage: float
    zhang: float


@dataclass
class RuleQualityReport:
    """Per-rule metrics plus set-level aggregates for one rule list."""

    per_rule: list[RuleStats]
    rule_count: int
    mean_support: float
    mean_confidence: float
    mean_coverage: float
    mean_zhang: float
    data_coverage: float


def evaluate(rules, table: TransactionTable) -> RuleQualityReport:
    """Measure every metric for every rule; empty rule lists yield a valid
    all-zero report."""
    per_rule = [
        RuleStats(
            rule,
            support(rule, table),
            confidence(rule, table),
            rule_coverage(rule, table),
            zhang(rule, table),
        )
        for rule in rules
    ]
    count = len(per_rule)

    def mean(values):
        return sum(values) / count if count else 0.0

    return RuleQualityReport(
        per_rule=per_rule,
        rule_count=count,
        mean_support=mean([s.support for s in per_rule]),
        mean_confidence=mean([s.confidence for s in per_rule]),
        mean_coverage=mean([s.rule_coverage for s in per_rule]),
        mean_zhang=mean([s.zhang for s in per_rule]),
        data_coverage=data_coverage(rules, table),
    )


def annotate_rules(rules, table: TransactionTable) -> list[Rule]:
    """Copies of the rules with measured support/confidence/zhang attached."""
    return [
        Rule(
            rule.antecedent,
            rule.consequent,
            support=support(rule, table),
            confidence=confidence(rule, table),
            zhang=zhang(rule, table),
        )
        for rule in rules
    ]


def report_to_doc(report: RuleQualityReport, features: list[Feature]) -> dict:
    doc = {
        "rule_count": report.rule_count,
        "mean_support": report.mean_support,
        "mean_confidence": report.mean_confidence,
        "mean_coverage": report.mean_coverage,
        "mean_zhang": report.mean_zhang,
        "data_coverage": report.data_coverage,
        "rules": [],
    }
    for stats in report.per_rule:
        entry = rule_to_doc(stats.rule, features)
        entry.update(
            support=stats.support,
            confidence=stats.confidence,
            coverage=stats.rule_coverage,
            zhang=stats.zhang,
        )
        doc["rules"].append(entry)
    return doc


def format_report(report: RuleQualityReport, features: list[Feature], max_rules: int = 50) -> str:
    """Aligned-column text report: aggregates first, then per-rule rows."""
    lines = []
    header = f"{'Rules':>8} {'Support':>9} {'Confidence':>11} {'Coverage':>9} {'Data cov.':>10} {'Zhang':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    lines.append(
        f"{report.rule_count:>8d} {report.mean_support:>9.4f} {report.mean_confidence:>11.4f} "
        f"{report.mean_coverage:>9.4f} {report.data_coverage:>10.4f} {report.mean_zhang:>8.4f}"
    )
    if report.per_rule:
        lines.append("")
        lines.append(f"{'support':>9} {'conf':>7} {'cover':>7} {'zhang':>7}  rule")
        for stats in report.per_rule[:max_rules]:
            lines.append(
                f"{stats.support:>9.4f} {stats.confidence:>7.4f} {stats.rule_coverage:>7.4f} "
                f"{stats.zhang:>7.4f}  {stats.rule.render(features)}"
            )
        if report.rule_count > max_rules:
            lines.append(f"... ({report.rule_count - max_rules} more)")
    return "\n".join(lines) + "\n"


_ITEM_SCHEMA = {
    "type": "object",
    "properties": {"feature": {"type": "string"}, "class": {"type": "string"}},
    "required": ["feature", "class"],
}

REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "properties": {
        "rule_count": {"type": "integer", "minimum": 0},
        "mean_support": {"type": "number", "minimum": 0, "maximum": 1},
        "mean_confidence": {"type": "number", "minimum": 0, "maximum": 1},
        "mean_coverage": {"type": "number", "minimum": 0, "maximum": 1},
        "mean_zhang": {"type": "number", "minimum": -1, "maximum": 1},
        "data_coverage": {"type": "number", "minimum": 0, "maximum": 1},
        "rules": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "antecedent": {"type": "array", "items": _ITEM_SCHEMA, "minItems": 1},
                    "consequent": _ITEM_SCHEMA,
                    "support": {"type": "number"},
                    "confidence": {"type": "number"},
                    "coverage": {"type": "number"},
                    "zhang": {"type": "number"},
                },
                "required": ["antecedent", "consequent"],
            },
        },
        "timings": {"type": "object"},
    },
    "required": [
        "rule_count",
        "mean_support",
        "mean_confidence",
        "mean_coverage",
        "mean_zhang",
        "data_coverage",
        "rules",
    ],
}
