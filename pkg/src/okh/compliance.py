"""Executable documentation-content criteria for open source hardware.

Maps the four rights of open source (study, modify, make, distribute) to
checkable evidence requirements.  Rulesets are data (`.tsdc` files), the
licence allowlist is data (`licenses.csv`), and the checker evaluates the
evidence a manifest declares, not the documents behind the links.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Any, Callable

from . import miniyaml
from .manifest import Manifest, canonical_id

RIGHTS = ("study", "modify", "make", "distribute")

# Ordered by required-information depth: broader audiences add criteria.
RECIPIENT_GROUPS = ("specialist", "skilled_generalist", "layperson")

LIFECYCLE_PHASES = ("raw_material", "manufacture", "use", "maintenance", "end_of_life")

SEVERITIES = ("mandatory", "recommended")

# Closed evidence-class vocabulary shared by all rulesets.
EVIDENCE_CLASSES = frozenset(
    {
        "design-files",
        "bom",
        "assembly-instructions",
        "risk-assessment",
        "quality-control",
        "maintenance",
        "end-of-life-guide",
        "licence-grant",
    }
)

LICENSE_CLASSES = ("approved", "approved_sharealike", "non_open", "unknown")

VERDICT_PASS = "pass"
VERDICT_FAIL = "fail"
VERDICT_NOT_APPLICABLE = "not_applicable"


class ComplianceError(Exception):
    pass


class RulesetParseError(ComplianceError):
    pass


class DuplicateCriterionId(ComplianceError):
    def __init__(self, criterion_id: str):
        super().__init__(f"duplicate criterion id '{criterion_id}'")
        self.criterion_id = criterion_id


class RightWithoutMandatoryCriterion(ComplianceError):
    def __init__(self, rights: tuple[str, ...]):
        super().__init__(f"rights without a mandatory criterion: {', '.join(rights)}")
        self.rights = rights


class UnknownEvidenceClass(ComplianceError):
    def __init__(self, token: str):
        super().__init__(f"unknown evidence class '{token}'")
        self.token = token


@dataclass(frozen=True)
class Criterion:
    criterion_id: str
    right: str
    min_recipient: str
    required_evidence: str
    severity: str
    lifecycle: str


@dataclass(frozen=True)
class TsdcRuleset:
    ruleset_id: str
    technology_tags: tuple[str, ...]
    criteria: tuple[Criterion, ...]


@dataclass(frozen=True)
class EvidenceEntry:
    evidence_class: str
    location: str
    resolvable: bool | None = None  # None: declared but unprobed (offline)


@dataclass(frozen=True)
class DocumentInventory:
    entries: tuple[EvidenceEntry, ...] = ()

    def classes(self) -> frozenset[str]:
        return frozenset(e.evidence_class for e in self.entries)


@dataclass(frozen=True)
class ComplianceReport:
    manifest_id: str
    ruleset_id: str
    recipient_group: str
    verdicts: tuple[tuple[str, str], ...]  # (criterion_id, verdict) in ruleset order
    rights_summary: tuple[tuple[str, bool], ...]
    lifecycle_coverage: tuple[str, ...]
    manufacture_missing: bool
    score: float

    def verdict_of(self, criterion_id: str) -> str:
        for cid, verdict in self.verdicts:
            if cid == criterion_id:
                return verdict
        raise KeyError(criterion_id)

    def to_wire(self) -> dict[str, Any]:
        return {
            "manifest_id": self.manifest_id,
            "ruleset_id": self.ruleset_id,
            "recipient_group": self.recipient_group,
            "verdicts": {cid: v for cid, v in self.verdicts},
            "rights_summary": {r: ok for r, ok in self.rights_summary},
            "lifecycle_coverage": list(self.lifecycle_coverage),
            "manufacture_missing": self.manufacture_missing,
            "score": self.score,
        }


def _require_scalar(item: dict[str, str], key: str, where: str) -> str:
    if key not in item:
        raise RulesetParseError(f"{where}: missing '{key}'")
    return item[key]


def _require_member(value: str, domain: tuple[str, ...], key: str, where: str) -> str:
    if value not in domain:
        raise RulesetParseError(
            f"{where}: '{value}' is not a valid {key} (expected one of {', '.join(domain)})"
        )
    return value


def load_tsdc(text: str) -> TsdcRuleset:
    """Parse and check a `.tsdc` ruleset document."""
    try:
        doc = miniyaml.parse(text)
    except miniyaml.MarkupError as exc:
        raise RulesetParseError(str(exc)) from exc
    ruleset_id = doc.get("ruleset-id")
    if not isinstance(ruleset_id, str) or not ruleset_id:
        raise RulesetParseError("ruleset-id: required text value")
    tags = doc.get("technology-tags", [])
    if not isinstance(tags, list) or any(not isinstance(t, str) for t in tags):
        raise RulesetParseError("technology-tags: expected an inline list")
    raw_criteria = doc.get("criteria", [])
    if raw_criteria == {}:  # an empty block reads as an empty mapping
        raw_criteria = []
    if not isinstance(raw_criteria, list):
        raise RulesetParseError("criteria: expected a block list")

    criteria: list[Criterion] = []
    seen: set[str] = set()
    for n, item in enumerate(raw_criteria, start=1):
        if not isinstance(item, dict):
            raise RulesetParseError(f"criteria[{n}]: expected a mapping item")
        where = f"criteria[{n}]"
        cid = _require_scalar(item, "id", where)
        if cid in seen:
            raise DuplicateCriterionId(cid)
        seen.add(cid)
        right = _require_member(_require_scalar(item, "right", where), RIGHTS, "right", where)
        group = _require_member(
            _require_scalar(item, "min-recipient", where), RECIPIENT_GROUPS, "min-recipient", where
        )
        evidence = _require_scalar(item, "evidence", where)
        if evidence not in EVIDENCE_CLASSES:
            raise UnknownEvidenceClass(evidence)
        severity = _require_member(
            _require_scalar(item, "severity", where), SEVERITIES, "severity", where
        )
        lifecycle = _require_member(
            _require_scalar(item, "lifecycle", where), LIFECYCLE_PHASES, "lifecycle", where
        )
        criteria.append(Criterion(cid, right, group, evidence, severity, lifecycle))

    missing = tuple(
        r for r in RIGHTS
        if not any(c.right == r and c.severity == "mandatory" for c in criteria)
    )
    if missing:
        raise RightWithoutMandatoryCriterion(missing)
    return TsdcRuleset(ruleset_id, tuple(tags), tuple(criteria))


def load_bundled_tsdc(name: str = "generic-mech") -> TsdcRuleset:
    text = resources.files("okh.data").joinpath(f"{name}.tsdc").read_text("utf-8")
    return load_tsdc(text)


_EVIDENCE_FIELD_MAP = (
    ("documentation_home", "design-files"),
    ("bom", "bom"),
    ("health_and_safety", "risk-assessment"),
    ("quality_instructions", "quality-control"),
    ("maintenance_instructions", "maintenance"),
    ("license", "licence-grant"),
)


def derive_inventory(
    m: Manifest, prober: Callable[[str], bool] | None = None
) -> DocumentInventory:
    """Map manifest fields to declared evidence entries.

    The prober, when given, marks http(s) locations resolvable or not;
    without one every entry stays declared-but-unprobed (offline mode).
    """
    entries: list[EvidenceEntry] = []
    for attr, evidence_class in _EVIDENCE_FIELD_MAP:
        value = getattr(m, attr)
        if value is None:
            continue
        resolvable: bool | None = None
        if prober is not None and value.startswith(("http://", "https://")):
            resolvable = bool(prober(value))
        entries.append(EvidenceEntry(evidence_class, value, resolvable))
    return DocumentInventory(tuple(entries))


def _load_allowlist() -> dict[str, str]:
    text = resources.files("okh.data").joinpath("licenses.csv").read_text("utf-8")
    table: dict[str, str] = {}
    for row in csv.DictReader(text.splitlines()):
        table[row["id"].strip().casefold()] = row["class"].strip()
    return table


_ALLOWLIST: dict[str, str] | None = None


def check_license_openness(license_id: str) -> str:
    """Classify a licence identifier against the allowlist
    (case-insensitive).  Unknown identifiers are a value, not an error."""
    global _ALLOWLIST
    if _ALLOWLIST is None:
        _ALLOWLIST = _load_allowlist()
    return _ALLOWLIST.get(license_id.strip().casefold(), "unknown")


def _group_rank(group: str) -> int:
    return RECIPIENT_GROUPS.index(group)


def assess_compliance(
    m: Manifest,
    inventory: DocumentInventory,
    ruleset: TsdcRuleset,
    group: str = "specialist",
) -> ComplianceReport:
    """Evaluate every criterion applicable to the recipient group.

    A criterion applies when its minimum recipient group is at most the
    requested group (broader audiences only add requirements).  It passes
    when its evidence class is declared; distribute-right criteria also
    require an approved licence class.
    """
    if group not in RECIPIENT_GROUPS:
        raise ValueError(f"unknown recipient group '{group}'")
    for token in sorted(inventory.classes()):
        if token not in EVIDENCE_CLASSES:
            raise UnknownEvidenceClass(token)

    declared = inventory.classes()
    license_ok = check_license_openness(m.license) in ("approved", "approved_sharealike")
    rank = _group_rank(group)

    verdicts: list[tuple[str, str]] = []
    for c in ruleset.criteria:
        if _group_rank(c.min_recipient) > rank:
            verdicts.append((c.criterion_id, VERDICT_NOT_APPLICABLE))
            continue
        ok = c.required_evidence in declared
        if c.right == "distribute":
            ok = ok and license_ok
        verdicts.append((c.criterion_id, VERDICT_PASS if ok else VERDICT_FAIL))

    by_id = dict(verdicts)
    rights_summary = tuple(
        (
            r,
            all(
                by_id[c.criterion_id] == VERDICT_PASS
                for c in ruleset.criteria
                if c.right == r and c.severity == "mandatory"
                and by_id[c.criterion_id] != VERDICT_NOT_APPLICABLE
            ),
        )
        for r in RIGHTS
    )

    mandatory = [
        c for c in ruleset.criteria
        if c.severity == "mandatory" and by_id[c.criterion_id] != VERDICT_NOT_APPLICABLE
    ]
    passed = sum(1 for c in mandatory if by_id[c.criterion_id] == VERDICT_PASS)
    score = float(Fraction(passed, len(mandatory))) if mandatory else 1.0

    covered = tuple(
        phase
        for phase in LIFECYCLE_PHASES
        if any(
            c.lifecycle == phase and by_id[c.criterion_id] == VERDICT_PASS
            for c in ruleset.criteria
        )
    )
    return ComplianceReport(
        manifest_id=canonical_id(m),
        ruleset_id=ruleset.ruleset_id,
        recipient_group=group,
        verdicts=tuple(verdicts),
        rights_summary=rights_summary,
        lifecycle_coverage=covered,
        manufacture_missing="manufacture" not in covered,
        score=score,
    )


def lifecycle_coverage(report: ComplianceReport, ruleset: TsdcRuleset) -> frozenset[str]:
    """Recompute the covered lifecycle phases from the stored verdicts."""
    by_id = dict(report.verdicts)
    return frozenset(
        c.lifecycle
        for c in ruleset.criteria
        if by_id.get(c.criterion_id) == VERDICT_PASS
    )
