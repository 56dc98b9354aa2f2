"""Cross-column association rules over themed evidence: the knowledge model.

Each selected page is a transaction whose items are ``(attribute, theme)``
pairs. Frequent itemsets come from a level-wise Apriori search; rules are
every antecedent/consequent split of a frequent itemset whose two sides
share no attribute.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

Item = tuple[str, str]
Itemset = tuple[Item, ...]

_EPS = 1e-12


@dataclass(frozen=True)
class Transaction:
    doc_id: str
    items: frozenset[Item]

    @property
    def attributes(self) -> set[str]:
        return {a for a, _ in self.items}


@dataclass(frozen=True)
class AssociationRule:
    antecedent: Itemset
    consequent: Itemset
    support: float
    confidence: float
    lift: float

    def to_dict(self) -> dict:
        return {
            "antecedent": [list(i) for i in self.antecedent],
            "consequent": [list(i) for i in self.consequent],
            "support": self.support,
            "confidence": self.confidence,
            "lift": self.lift,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AssociationRule":
        return cls(tuple(tuple(i) for i in d["antecedent"]), tuple(tuple(i) for i in d["consequent"]),
                   d["support"], d["confidence"], d["lift"])

    def __str__(self) -> str:
        fmt = lambda side: ", ".join(f"{a}:{t}" for a, t in side)  # noqa: E731
        return f"{fmt(self.antecedent)} => {fmt(self.consequent)}"


def build_transactions(table, themes) -> list[Transaction]:
    """One transaction per evidence-table row, holding every theme its segments landed in."""
    theme_of: dict[tuple[str, int], Item] = {}
    for theme in themes.themes():
        for ref in theme.member_refs:
            theme_of[ref] = (theme.attribute, theme.label)
    out = []
    for doc_id in table.rows:
        items = {theme_of[s.ref] for a in table.columns for s in table.cell(doc_id, a) if s.ref in theme_of}
        out.append(Transaction(doc_id, frozenset(items)))
    return out


def _as_sets(transactions) -> list[frozenset]:
    return [t.items if isinstance(t, Transaction) else frozenset(t) for t in transactions]


def mine_frequent_itemsets(transactions: Sequence, min_support: float,
                           max_itemset_size: int | None = None) -> list[tuple[Itemset, float]]:
    """Level-wise Apriori.

    Size-``n`` candidates are unions of two frequent ``(n-1)``-itemsets that
    share their first ``n-2`` items, kept only if every ``(n-1)``-subset is
    frequent. Returns ``(itemset, support)`` pairs sorted lexicographically by
    itemset (items inside an itemset are sorted too).

    Raises:
        ValueError: ``min_support`` is outside (0, 1] or there are no transactions.
    """
    if not 0 < min_support <= 1:
        raise ValueError(f"min_support must be in (0, 1], got {min_support}")
    baskets = _as_sets(transactions)
    if not baskets:
        raise ValueError("no transactions")
    n = len(baskets)
    limit = max_itemset_size if max_itemset_size is not None else max(len(b) for b in baskets)

    def frequent(count: int) -> bool:
        return count / n >= min_support - _EPS

    counts: dict[Item, int] = {}
    for b in baskets:
        for item in b:
            counts[item] = counts.get(item, 0) + 1
    level = {(item,): c for item, c in counts.items() if frequent(c)}
    result = dict(level)

    size = 1
    while level and size < limit:
        size += 1
        prev = sorted(level)
        prev_set = set(prev)
        candidates = []
        for i in range(len(prev)):
            for j in range(i + 1, len(prev)):
                a, b = prev[i], prev[j]
                if a[:-1] != b[:-1]:
                    break  # sorted, so no later b shares the prefix either
                cand = a + (b[-1],)
                if all(sub in prev_set for sub in combinations(cand, size - 1)):
                    candidates.append(cand)
        level = {}
        for cand in candidates:
            cset = frozenset(cand)
            c = sum(1 for b in baskets if cset <= b)
            if frequent(c):
                level[cand] = c
        result.update(level)

    return [(itemset, result[itemset] / n) for itemset in sorted(result)]


def _attrs(side: Iterable[Item]) -> set[str]:
    return {a for a, _ in side}


def is_cross_column(antecedent: Iterable[Item], consequent: Iterable[Item]) -> bool:
    return not (_attrs(antecedent) & _attrs(consequent))


def _rule_key(r: AssociationRule):
    return (-r.lift, -r.support, r.antecedent, r.consequent)


def generate_rules(frequent: Sequence[tuple[Itemset, float]], min_confidence: float) -> list[AssociationRule]:
    """Every cross-column split of every frequent itemset that meets ``min_confidence``.

    Sorted by lift, then support (both descending), then the itemsets.
    """
    support = {tuple(sorted(s)): v for s, v in frequent}
    rules = []
    for itemset, supp in support.items():
        if len(itemset) < 2:
            continue
        for r in range(1, len(itemset)):
            for ante in combinations(itemset, r):
                cons = tuple(i for i in itemset if i not in ante)
                if not is_cross_column(ante, cons):
                    continue
                confidence = supp / support[ante]
                if confidence < min_confidence - _EPS:
                    continue
                rules.append(AssociationRule(ante, cons, supp, confidence, confidence / support[cons]))
    return sorted(rules, key=_rule_key)


@dataclass(frozen=True)
class KnowledgeModel:
    themes: object  # ThemeSet
    rules: tuple[AssociationRule, ...]
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "themes": self.themes.to_dict(),
            "rules": [r.to_dict() for r in self.rules],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KnowledgeModel":
        from webreview.synthesis.themes import ThemeSet

        return cls(ThemeSet.from_dict(d["themes"]), tuple(AssociationRule.from_dict(r) for r in d["rules"]),
                   d.get("provenance", {}))

    def rules_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["antecedent", "consequent", "support", "confidence", "lift"])
        for r in self.rules:
            w.writerow([
                "; ".join(f"{a}:{t}" for a, t in r.antecedent),
                "; ".join(f"{a}:{t}" for a, t in r.consequent),
                repr(r.support), repr(r.confidence), repr(r.lift),
            ])
        return buf.getvalue()

    def rules_dot(self) -> str:
        """Graphviz description: themes as nodes, one edge per (antecedent item, consequent item) of a rule."""
        def node(item):
            return '"' + f"{item[0]}:{item[1]}".replace('"', r'\"') + '"'

        lines = ["digraph knowledge_model {", "  rankdir=LR;"]
        for theme in self.themes.themes():
            lines.append(f"  {node((theme.attribute, theme.label))} "
                         f"[label={node((theme.attribute, theme.label))}, group=\"{theme.attribute}\"];")
        for i, r in enumerate(self.rules, start=1):
            for a in r.antecedent:
                for c in r.consequent:
                    lines.append(f"  {node(a)} -> {node(c)} [weight={r.lift!r}, label=\"r{i} "
                                 f"lift={r.lift:.3f}\"];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def assemble_model(themes, rules: Iterable[AssociationRule], manifest: dict | None = None) -> KnowledgeModel:
    """Bundle themes and rules, sorting rules and checking every item names a theme.

    Raises:
        ValueError: a rule item has no matching theme, or a rule appears twice.
    """
    known = {(t.attribute, t.label) for t in themes.themes()}
    ordered = sorted(rules, key=_rule_key)
    seen = set()
    for r in ordered:
        for item in r.antecedent + r.consequent:
            if tuple(item) not in known:
                raise ValueError(f"rule {r} references unknown theme {item[0]}:{item[1]}")
        key = (r.antecedent, r.consequent)
        if key in seen:
            raise ValueError(f"duplicate rule {r}")
        seen.add(key)
    return KnowledgeModel(themes, tuple(ordered), dict(manifest or {}))
