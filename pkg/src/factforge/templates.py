"""Rule-based baseline: one hand-written (or corpus-derived) single-sentence
template per frequent property, concatenated in a fixed priority order.

The rule file is data, not code, so the inventory can be regenerated per
corpus: one rule per line, "priority<TAB>property<TAB>template", where the
template may contain the slots [NAME] and [VALUE]. The entity name is spelled
out at first mention with its initials in parentheses and abbreviated to the
initials afterwards.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path

from .corpus import AlignmentSet, CorpusError, Document, PropertySet

__all__ = [
    "TemplateRule",
    "load_rules",
    "save_rules",
    "derive_rules",
    "realise_template",
]

NAME_SLOT = "[NAME]"
VALUE_SLOT = "[VALUE]"


@dataclass(frozen=True)
class TemplateRule:
    priority: float
    property_name: str
    template: str

    def __post_init__(self):
        if VALUE_SLOT not in self.template and NAME_SLOT not in self.template:
            raise CorpusError(
                f"rule for {self.property_name!r} has no [NAME]/[VALUE] slot"
            )


def load_rules(path: str | Path) -> list[TemplateRule]:
    rules = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise CorpusError(
                    f"{path}:{lineno}: expected priority<TAB>property<TAB>template"
                )
            rules.append(TemplateRule(float(parts[0]), parts[1], parts[2]))
    return rules


def save_rules(path: str | Path, rules: list[TemplateRule]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rule in sorted(rules, key=lambda r: (r.priority, r.property_name)):
            fh.write(f"{rule.priority:g}\t{rule.property_name}\t{rule.template}\n")


def derive_rules(
    corpus: list[tuple[PropertySet, Document]],
    alignments: dict[str, AlignmentSet] | None = None,
    top_k: int = 50,
) -> list[TemplateRule]:
    """Build a rule table from corpus statistics.

    The top_k most frequent properties get a rule each. When alignments are
    available, a property's priority is its mean normalized first-mention
    position (earlier mentions order first); properties never seen mentioned
    share an equal priority after all mentioned ones. Templates default to a
    neutral "[NAME] 's <property> was [VALUE] ." realisation.
    """
    freq: Counter[str] = Counter()
    for pset, _ in corpus:
        for pair in pset.pairs:
            if not pair.is_empty_relation:
                freq[" ".join(pair.property)] += 1
    top = [name for name, _ in sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]]

    positions: dict[str, list[float]] = defaultdict(list)
    if alignments:
        for pset, doc in corpus:
            aset = alignments.get(pset.entity_id)
            if aset is None or doc.n_sentences == 0:
                continue
            first_mention: dict[int, int] = {}
            for sent_idx, _, prop_idx in aset.links:
                cur = first_mention.get(prop_idx)
                if cur is None or sent_idx < cur:
                    first_mention[prop_idx] = sent_idx
            for prop_idx, sent_idx in first_mention.items():
                if prop_idx >= len(pset.pairs):
                    continue
                name = " ".join(pset.pairs[prop_idx].property)
                positions[name].append(sent_idx / max(doc.n_sentences - 1, 1))

    mentioned = {
        name: sum(vals) / len(vals) for name, vals in positions.items() if vals
    }
    posterior = (max(mentioned.values()) if mentioned else 0.0) + 1.0
    rules = []
    for name in top:
        if name == "name":
            continue  # the name realises inside every sentence, not alone
        priority = mentioned.get(name, posterior)
        rules.append(
            TemplateRule(round(priority, 4), name, f"{NAME_SLOT} 's {name} was {VALUE_SLOT} .")
        )
    return rules


def _initials(name_tokens: list[str]) -> str:
    return "".join(t[0].upper() for t in name_tokens if t)


def _title(tokens: list[str]) -> str:
    return " ".join(t.capitalize() for t in tokens)


def entity_name_tokens(pset: PropertySet) -> list[str]:
    for pair in pset.pairs:
        if pair.property == ("name",):
            return list(pair.value)
    return [pset.entity_id]


def realise_template(
    pset: PropertySet, rules: list[TemplateRule]
) -> tuple[str, int]:
    """Concatenate one sentence per realisable property value.

    Values are ordered by (rule priority, property name); properties without
    a rule are skipped and counted in the second return value. The first
    sentence introduces the entity as "Full Name (FN)", later ones say "FN".
    """
    by_prop: dict[str, TemplateRule] = {}
    for rule in rules:
        by_prop.setdefault(rule.property_name, rule)
    name_tokens = entity_name_tokens(pset)
    full = _title(name_tokens)
    abbrev = _initials(name_tokens)

    items = []
    skipped = 0
    for idx, pair in enumerate(pset.pairs):
        if pair.is_empty_relation or pair.property == ("name",):
            continue
        prop_name = " ".join(pair.property)
        rule = by_prop.get(prop_name)
        if rule is None:
            skipped += 1
            continue
        items.append((rule.priority, prop_name, idx, pair, rule))
    items.sort(key=lambda it: (it[0], it[1], it[2]))

    sentences = []
    for n, (_, _, _, pair, rule) in enumerate(items):
        if n == 0:
            # Introduce the abbreviation only when it will be used again.
            name_str = f"{full} ({abbrev})" if len(items) > 1 else full
        else:
            name_str = abbrev
        sentence = rule.template.replace(NAME_SLOT, name_str).replace(
            VALUE_SLOT, " ".join(pair.value)
        )
        sentence = sentence.strip()
        if not sentence.endswith("."):
            sentence += " ."
        sentences.append(sentence)
    return " ".join(sentences), skipped
