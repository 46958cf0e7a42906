"""Seeded synthetic corpus with planted word-property alignments.

Each entity gets a property set drawn from a fixed inventory; every
verbalised property becomes one sentence realised from a property-specific
template, and every token of that sentence (except the final period) carries
a gold link to the property. Distractor sentences verbalise properties the
entity does not have (unsupported facts), so their words are unaligned, and
a configurable fraction of properties stays unverbalised to exercise content
selection. The file formats match the real corpus exactly, so all downstream
code is corpus-agnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .types import AlignmentSet, CorpusError, Document, PropertySet, PropertyValue

__all__ = ["SyntheticProperty", "SyntheticSpec", "default_spec", "generate_synthetic_corpus"]

VALUE_SLOT = "<V>"


@dataclass(frozen=True)
class SyntheticProperty:
    name: str
    template: tuple[str, ...]
    values: tuple[tuple[str, ...], ...]

    def realise(self, value: tuple[str, ...]) -> list[str]:
        out: list[str] = []
        for tok in self.template:
            if tok == VALUE_SLOT:
                out.extend(value)
            else:
                out.append(tok)
        out.append(".")
        return out


@dataclass
class SyntheticSpec:
    properties: list[SyntheticProperty]
    distractor_rate: float = 0.3
    dropout_rate: float = 0.25
    props_per_entity: tuple[int, int] = (8, 9)
    min_content: int = 6
    max_content: int | None = 7
    noise_phrases: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        if not self.properties:
            raise CorpusError("synthetic spec needs at least one property")
        if not 0.0 <= self.distractor_rate < 1.0:
            raise CorpusError("distractor rate must be in [0, 1)")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise CorpusError("dropout rate must be in [0, 1)")
        if self.distractor_rate > 0 and not self.noise_phrases:
            raise CorpusError("a nonzero distractor rate needs noise phrases")


_FIRST_NAMES = (
    "marlo", "tessa", "ivor", "brena", "caldo", "rinae", "soren", "vella",
    "dario", "melor", "yanni", "frida", "olen", "petra", "silas", "wren",
)
_LAST_NAMES = (
    "vexni", "harlan", "obrecht", "salter", "minsky", "farrow", "quillon",
    "drover", "ellwood", "banes", "corvin", "lanart", "moxley", "pryce",
    "stroud", "teller",
)

# Template words are unique across properties so that planted alignments are
# recoverable; shared function words would have no single gold property.
_INVENTORY: list[tuple[str, tuple[str, ...], tuple[str, ...]]] = [
    ("name", ("titled", VALUE_SLOT), ()),
    ("birth place", ("hails", "from", VALUE_SLOT), (
        "aldora", "brinmoor", "cresvale", "dunhollow", "eastmere", "fenwick")),
    ("occupation", ("works", "as", VALUE_SLOT), (
        "sculptor", "falconer", "archivist", "glassblower", "cartographer", "apiarist")),
    ("team", ("plays", "alongside", VALUE_SLOT), (
        "redhawks", "mariners", "lynxes", "harriers", "wolverines", "petrels")),
    ("genre", ("performs", "lively", VALUE_SLOT, "tunes"), (
        "skiffle", "zydeco", "klezmer", "bolero", "madrigal", "calypso")),
    ("award", ("received", "shiny", VALUE_SLOT, "medal"), (
        "laurel", "comet", "garnet", "beacon", "zephyr", "ember")),
    ("spouse", ("married", "to", VALUE_SLOT), (
        "jorvik", "maribel", "thandor", "lisbet", "corwin", "adelheid")),
    ("instrument", ("strums", "a", VALUE_SLOT), (
        "cittern", "oud", "balalaika", "dulcimer", "theorbo", "nyckelharpa")),
    ("nationality", ("citizen", "of", VALUE_SLOT), (
        "veldania", "norlund", "casperia", "trevale", "umbria", "skellig")),
    ("field", ("studies", "advanced", VALUE_SLOT), (
        "mycology", "glaciology", "phonetics", "heraldry", "limnology", "seismology")),
    ("club", ("belongs", "with", VALUE_SLOT, "circle"), (
        "rovers", "wanderers", "corsairs", "pilgrims", "nomads", "voyagers")),
    ("position", ("fields", "at", VALUE_SLOT), (
        "sweeper", "anchor", "flanker", "pivot", "keeper", "winger")),
    ("alma mater", ("graduated", "inside", VALUE_SLOT), (
        "greystone", "ashford", "windmere", "oakhurst", "larkspur", "thornfield")),
    ("residence", ("resides", "near", VALUE_SLOT), (
        "millbrook", "stonegate", "ferndale", "hollyridge", "clearbrook", "maplewood")),
    ("language", ("speaks", "fluent", VALUE_SLOT), (
        "veldic", "norlish", "casperan", "trevalese", "umbrish", "skelligan")),
    ("religion", ("follows", "devout", VALUE_SLOT), (
        "solarism", "tidefaith", "emberway", "stonecreed", "mistpath", "dawnrite")),
    ("sport", ("competes", "during", VALUE_SLOT), (
        "curling", "fencing", "rowing", "archery", "biathlon", "orienteering")),
    ("label", ("records", "under", VALUE_SLOT), (
        "sunspire", "moonvale", "starforge", "cloudline", "rainmark", "frostline")),
    ("era", ("active", "throughout", VALUE_SLOT), (
        "gilded", "baroque", "meridian", "halcyon", "verdant", "twilight")),
    ("hometown", ("grew", "around", VALUE_SLOT), (
        "pinecrest", "saltmarsh", "ironbridge", "coppervale", "birchfield", "lowmeadow")),
    ("employer", ("serves", "beside", VALUE_SLOT), (
        "lanternworks", "tidemill", "forgehall", "spindleton", "gearhaven", "brasscage")),
    ("death place", ("perished", "within", VALUE_SLOT), (
        "ravenmoor", "duskwall", "palegate", "wintermere", "shadowfen", "greyharbor")),
    ("since", ("debuted", "on", VALUE_SLOT), (
        "1941", "1942", "1943", "1944", "1945", "1946")),
]

# Stock off-topic sentences, reused corpus-wide. Their vocabulary is disjoint
# from every template and value pool, mimicking independently edited text:
# frequent subsequences the language model will happily memorise, yet with no
# supporting property. Some carry bare numbers that delexicalise to
# YEAR/NUMERIC.
_NOISE_PHRASES: tuple[tuple[str, ...], ...] = (
    ("meanwhile", "rumors", "swirled", "across", "town", "."),
    ("critics", "praised", "every", "public", "appearance", "."),
    ("archives", "mention", "little", "else", "about", "that", "period", "."),
    ("several", "letters", "were", "lost", "before", "2310", "."),
    ("journalists", "kept", "asking", "unanswered", "questions", "."),
    ("biographers", "disagree", "over", "minor", "details", "."),
    ("newspapers", "ran", "83", "stories", "that", "season", "."),
    ("historians", "still", "debate", "those", "accounts", "."),
    ("neighbours", "recalled", "quiet", "evening", "walks", "."),
    ("museums", "later", "displayed", "various", "memorabilia", "."),
    ("admirers", "sent", "countless", "postcards", "overseas", "."),
    ("chroniclers", "noted", "nothing", "remarkable", "otherwise", "."),
)


def default_spec(
    distractor_rate: float = 0.3,
    dropout_rate: float = 0.25,
) -> SyntheticSpec:
    """The standard 23-property inventory, under 500 distinct tokens total."""
    props: list[SyntheticProperty] = []
    for name, template, pool in _INVENTORY:
        if name == "name":
            values = tuple(
                (first, last) for first in _FIRST_NAMES for last in _LAST_NAMES
            )
        else:
            values = tuple((v,) for v in pool)
        props.append(SyntheticProperty(name, template, values))
    return SyntheticSpec(
        props,
        distractor_rate,
        dropout_rate,
        noise_phrases=_NOISE_PHRASES if distractor_rate > 0 else (),
    )


def _choose_verbalised(rng: np.random.Generator, n: int, spec: SyntheticSpec) -> np.ndarray:
    """Bernoulli-keep mask over the entity's properties, retried to honour
    the minimum content-sentence count."""
    lo = min(spec.min_content, n)
    for _ in range(64):
        mask = rng.random(n) >= spec.dropout_rate
        if mask.sum() >= lo:
            break
    else:
        mask = np.ones(n, dtype=bool)
    if spec.max_content is not None and mask.sum() > spec.max_content:
        keep = np.flatnonzero(mask)
        drop = rng.choice(keep, size=int(mask.sum()) - spec.max_content, replace=False)
        mask[drop] = False
    return mask


def generate_synthetic_corpus(
    seed: int,
    n_entities: int,
    spec: SyntheticSpec | None = None,
) -> list[tuple[PropertySet, Document, AlignmentSet]]:
    """Deterministically generate aligned (property set, document, gold) triples."""
    if spec is None:
        spec = default_spec()
    if n_entities <= 0:
        raise CorpusError("n_entities must be positive")
    rng = np.random.default_rng(seed)
    by_name = {p.name: i for i, p in enumerate(spec.properties)}
    inventory = spec.properties
    records: list[tuple[PropertySet, Document, AlignmentSet]] = []
    for ei in range(n_entities):
        entity_id = f"e{ei:04d}"
        lo, hi = spec.props_per_entity
        n_props = int(rng.integers(lo, hi + 1))
        all_names = [p.name for p in inventory]
        chosen = list(
            rng.choice(len(all_names), size=min(n_props, len(all_names)), replace=False)
        )
        prop_names = [all_names[i] for i in sorted(chosen)]

        pairs: list[PropertyValue] = []
        for pname in prop_names:
            prop = inventory[by_name[pname]]
            value = prop.values[int(rng.integers(len(prop.values)))]
            pairs.append(PropertyValue(tuple(pname.split()), value))
        pset = PropertySet(entity_id, pairs)

        mask = _choose_verbalised(rng, len(pairs), spec)
        content: list[tuple[int, list[str]]] = []
        for idx, pair in enumerate(pairs):
            if not mask[idx]:
                continue
            prop = inventory[by_name[" ".join(pair.property)]]
            content.append((idx, prop.realise(pair.value)))

        sentences: list[list[str]] = []
        aset = AlignmentSet(entity_id)
        for prop_idx, tokens in content:
            while spec.noise_phrases and rng.random() < spec.distractor_rate:
                phrase = spec.noise_phrases[int(rng.integers(len(spec.noise_phrases)))]
                sentences.append(list(phrase))
            sent_idx = len(sentences)
            sentences.append(tokens)
            for word_idx, tok in enumerate(tokens):
                if tok == ".":
                    continue
                aset.add(sent_idx, word_idx, prop_idx, surface=tok)
        doc = Document(sentences)
        records.append((pset, doc, aset))
    return records


def content_reference(doc: Document, gold: AlignmentSet) -> list[list[str]]:
    """Distractor-free reference: only sentences that carry gold links."""
    linked = {s for (s, _, _) in gold.links}
    return [s for i, s in enumerate(doc.sentences) if i in linked]
