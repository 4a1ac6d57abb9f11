"""Ontology model, similarity features and the bundled knowledge functions.

Concept matching works on a cross-product candidate table. Each pair gets
a 7-component feature vector and a row of votes from weak and strong
knowledge functions; the votes feed the generative label model.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from .errors import DanglingParent, DuplicateConcept, MalformedDocument, ParentCycle
from .infusion.labelmodel import ABSTAIN, MATCH, NO_MATCH, ColumnMeta, LabelMatrix
from .infusion.matching import pair_id

FEATURE_NAMES = (
    "exactName",
    "levSim",
    "tokenJaccard",
    "propertyJaccard",
    "parentSim",
    "childOverlap",
    "descOverlap",
)

_TOKEN_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+")


@dataclass(frozen=True)
class ConceptProperty:
    """One property slot of a concept; range is a type name or a concept name."""

    name: str
    range: str = "text"
    synonyms: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"name": self.name, "range": self.range}
        if self.synonyms:
            doc["synonyms"] = list(self.synonyms)
        return doc


@dataclass(frozen=True)
class Concept:
    name: str
    iri: str | None = None
    description: str | None = None
    parents: tuple[str, ...] = ()
    properties: tuple[ConceptProperty, ...] = ()
    synonyms: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise MalformedDocument("concept name must be non-empty")
        names = [p.name for p in self.properties]
        if len(names) != len(set(names)):
            raise MalformedDocument(f"duplicate property names in concept {self.name!r}")

    def property_names(self) -> set[str]:
        return {p.name for p in self.properties}

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"name": self.name}
        if self.iri:
            doc["iri"] = self.iri
        if self.description:
            doc["description"] = self.description
        if self.parents:
            doc["parents"] = list(self.parents)
        doc["properties"] = [p.to_dict() for p in self.properties]
        if self.synonyms:
            doc["synonyms"] = list(self.synonyms)
        return doc


@dataclass
class Ontology:
    name: str
    concepts: dict[str, Concept] = field(default_factory=dict)

    def children(self, concept_name: str) -> list[str]:
        return sorted(
            c.name for c in self.concepts.values() if concept_name in c.parents
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "concepts": [self.concepts[k].to_dict() for k in sorted(self.concepts)],
        }


def load_ontology(document: Mapping[str, Any]) -> Ontology:
    """Validate and build an Ontology from its file document."""
    if not isinstance(document, Mapping) or "concepts" not in document:
        raise MalformedDocument("ontology document needs a 'concepts' list")
    concepts: dict[str, Concept] = {}
    for entry in document["concepts"]:
        concept = Concept(
            name=entry["name"],
            iri=entry.get("iri"),
            description=entry.get("description"),
            parents=tuple(entry.get("parents", [])),
            properties=tuple(
                ConceptProperty(
                    name=p["name"],
                    range=p.get("range", "text"),
                    synonyms=tuple(p.get("synonyms", [])),
                )
                for p in entry.get("properties", [])
            ),
            synonyms=tuple(entry.get("synonyms", [])),
        )
        if concept.name in concepts:
            raise DuplicateConcept(f"concept {concept.name!r} defined twice")
        concepts[concept.name] = concept

    for concept in concepts.values():
        for parent in concept.parents:
            if parent not in concepts:
                raise DanglingParent(
                    f"concept {concept.name!r} references unknown parent {parent!r}"
                )

    # cycle check: walk up from every node with a visited set
    state: dict[str, int] = {}  # 0 visiting, 1 done

    def visit(name: str, trail: tuple[str, ...]) -> None:
        if state.get(name) == 1:
            return
        if state.get(name) == 0:
            raise ParentCycle(f"parent cycle through {name!r}: {' -> '.join(trail)}")
        state[name] = 0
        for parent in concepts[name].parents:
            visit(parent, trail + (parent,))
        state[name] = 1

    for name in concepts:
        visit(name, (name,))

    return Ontology(name=document.get("name", ""), concepts=concepts)


def load_ontology_file(path: str) -> Ontology:
    with open(path, encoding="utf-8") as fh:
        return load_ontology(json.load(fh))


# --- name features -------------------------------------------------------------

def tokenize_name(name: str) -> list[str]:
    """camelCase/underscore/hyphen/space split, digits as tokens, lowercased."""
    return [t.lower() for t in _TOKEN_RE.findall(name)]


def normalize_name(name: str) -> str:
    """Case- and separator-insensitive form: joined lowercase tokens."""
    return "".join(tokenize_name(name))


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb))
            )
        previous = current
    return previous[len(b)]


def name_similarity(a: str, b: str) -> float:
    """1 − Levenshtein(lowercased)/max length."""
    if not a or not b:
        return 0.0
    return 1.0 - levenshtein(a.lower(), b.lower()) / max(len(a), len(b))


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def _token_set(names: Iterable[str]) -> set[str]:
    out: set[str] = set()
    for name in names:
        out.update(tokenize_name(name))
    return out


def extract_features(
    src: Concept, tgt: Concept, src_ont: Ontology, tgt_ont: Ontology
) -> np.ndarray:
    """The 7 symmetric components, each in [0,1], in FEATURE_NAMES order."""
    exact = 1.0 if src.name.lower() == tgt.name.lower() else 0.0
    lev = name_similarity(src.name, tgt.name)
    tokens = _jaccard(set(tokenize_name(src.name)), set(tokenize_name(tgt.name)))
    props = _jaccard(
        {normalize_name(p) for p in src.property_names()},
        {normalize_name(p) for p in tgt.property_names()},
    )
    if src.parents and tgt.parents:
        parent_sim = max(
            name_similarity(sp, tp) for sp in src.parents for tp in tgt.parents
        )
    else:
        parent_sim = 0.0
    child_overlap = _jaccard(
        _token_set(src_ont.children(src.name)), _token_set(tgt_ont.children(tgt.name))
    )
    desc_overlap = 0.0
    if src.description and tgt.description:
        desc_overlap = _jaccard(
            set(tokenize_name(src.description)), set(tokenize_name(tgt.description))
        )
    return np.array(
        [exact, lev, tokens, props, parent_sim, child_overlap, desc_overlap], dtype=float
    )


@dataclass(frozen=True)
class CandidatePair:
    pair_id: str
    src: Concept
    tgt: Concept
    features: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        return {
            "pairId": self.pair_id,
            "src": self.src.name,
            "tgt": self.tgt.name,
            "features": {k: float(v) for k, v in zip(FEATURE_NAMES, self.features)},
        }


def build_candidate_table(src_ont: Ontology, tgt_ont: Ontology) -> list[CandidatePair]:
    """All |src|·|tgt| combinations, ordered by (srcName, tgtName)."""
    table: list[CandidatePair] = []
    for src_name in sorted(src_ont.concepts):
        src = src_ont.concepts[src_name]
        for tgt_name in sorted(tgt_ont.concepts):
            tgt = tgt_ont.concepts[tgt_name]
            table.append(
                CandidatePair(
                    pair_id=pair_id(src_name, tgt_name),
                    src=src,
                    tgt=tgt,
                    features=extract_features(src, tgt, src_ont, tgt_ont),
                )
            )
    return table


# --- knowledge functions ---------------------------------------------------------

@dataclass(frozen=True)
class KnowledgeFunction:
    """A deterministic voter over candidate pairs."""

    id: str
    strength: str  # "weak" | "strong"
    vote: Callable[[CandidatePair], int]


def _synonym_pool(concept: Concept) -> set[str]:
    pool = {normalize_name(concept.name)}
    pool.update(normalize_name(s) for s in concept.synonyms)
    return pool


def bundled_knowledge_functions(
    disjoint: Iterable[tuple[str, str]] | None = None,
) -> list[KnowledgeFunction]:
    """The 8-function suite; strong ones also override at inference time."""
    disjoint_set = {(s, t) for s, t in (disjoint or [])}

    def name_exact(pair: CandidatePair) -> int:
        return MATCH if pair.features[0] == 1.0 else ABSTAIN

    def name_sim(pair: CandidatePair) -> int:
        if pair.features[1] >= 0.85:
            return MATCH
        if pair.features[1] <= 0.25:
            return NO_MATCH
        return ABSTAIN

    def synonym(pair: CandidatePair) -> int:
        if _synonym_pool(pair.src) & _synonym_pool(pair.tgt):
            return MATCH
        return ABSTAIN

    def token(pair: CandidatePair) -> int:
        return MATCH if pair.features[2] >= 0.5 else ABSTAIN

    def props(pair: CandidatePair) -> int:
        if pair.features[3] >= 0.4:
            return MATCH
        if pair.features[3] == 0.0 and len(pair.src.properties) >= 3 and len(pair.tgt.properties) >= 3:
            return NO_MATCH
        return ABSTAIN

    def parent(pair: CandidatePair) -> int:
        return MATCH if pair.features[4] >= 0.85 and pair.features[1] >= 0.5 else ABSTAIN

    def iri(pair: CandidatePair) -> int:
        if pair.src.iri and pair.tgt.iri and pair.src.iri == pair.tgt.iri:
            return MATCH
        return ABSTAIN

    def disjoint_vote(pair: CandidatePair) -> int:
        return NO_MATCH if (pair.src.name, pair.tgt.name) in disjoint_set else ABSTAIN

    return [
        KnowledgeFunction("KF-NAME-EXACT", "weak", name_exact),
        KnowledgeFunction("KF-NAME-SIM", "weak", name_sim),
        KnowledgeFunction("KF-SYNONYM", "weak", synonym),
        KnowledgeFunction("KF-TOKEN", "weak", token),
        KnowledgeFunction("KF-PROPS", "weak", props),
        KnowledgeFunction("KF-PARENT", "weak", parent),
        KnowledgeFunction("KF-IRI", "strong", iri),
        KnowledgeFunction("KF-DISJOINT", "strong", disjoint_vote),
    ]


def apply_knowledge_functions(
    table: list[CandidatePair], kfs: list[KnowledgeFunction]
) -> LabelMatrix:
    if not kfs:
        raise ValueError("need at least one knowledge function")
    votes = np.zeros((len(table), len(kfs)), dtype=np.int8)
    for i, pair in enumerate(table):
        for j, kf in enumerate(kfs):
            votes[i, j] = kf.vote(pair)
    return LabelMatrix(
        votes=votes,
        columns=tuple(ColumnMeta(id=kf.id, strength=kf.strength) for kf in kfs),
        pair_ids=tuple(pair.pair_id for pair in table),
    )


def load_disjoint_file(path: str) -> list[tuple[str, str]]:
    """Lines of `srcName<TAB>tgtName`; blank lines and #-comments skipped."""
    pairs: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            src, sep, tgt = line.partition("\t")
            if not sep:
                raise MalformedDocument(f"disjointness line lacks a tab: {line!r}")
            pairs.append((src.strip(), tgt.strip()))
    return pairs
