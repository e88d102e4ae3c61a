from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from okh.manifest import (
    ContactInfo,
    Manifest,
    MissingRequiredKey,
    ParseFailure,
    canonical_id,
    manifest_from_wire,
    manifest_to_wire,
    normalize_url,
    parse_manifest,
    serialize_manifest,
    validate_manifest,
)

from genmanifest import random_manifest

FIXTURES = Path(__file__).parent / "fixtures"

MINIMAL = (
    "okhv: 1.0\n"
    "title: Pump\n"
    "license: CERN-OHL-S-2.0\n"
    "documentation-home: https://ex.org/d\n"
    "contact:\n"
    "  name: A\n"
)

FULL_MANIFEST = Manifest(
    okhv="1.0",
    title="Open Flow Pump",
    contact=ContactInfo(
        name="Ada Ferris", email="ada@example.org", affiliation="Open Hardware Lab"
    ),
    license="CERN-OHL-S-2.0",
    documentation_home="https://docs.example.org/openflow",
    description="A fully documented peristaltic pump for laboratory use.",
    documentation_language="en",
    bom="https://docs.example.org/openflow/bom.csv",
    project_homepage="https://openflow.example.org",
    intended_use="Laboratory fluid handling and dosing.",
    keywords=("pump", "peristaltic", "lab", "fluidics"),
    development_stage="product",
    health_and_safety="https://docs.example.org/openflow/risk.pdf",
    quality_instructions="https://docs.example.org/openflow/qa.md",
    maintenance_instructions="https://docs.example.org/openflow/maintenance.md",
    version="2.1",
    variant_of="https://docs.example.org/openflow-mini",
    derivative_of="https://docs.example.org/classicflow",
)


def test_parse_minimal_document():
    m = parse_manifest(MINIMAL)
    assert m.okhv == "1.0"
    assert m.title == "Pump"
    assert m.license == "CERN-OHL-S-2.0"
    assert m.documentation_home == "https://ex.org/d"
    assert m.contact == ContactInfo(name="A")
    for attr in (
        "description", "documentation_language", "bom", "project_homepage",
        "intended_use", "keywords", "development_stage", "health_and_safety",
        "quality_instructions", "maintenance_instructions", "version",
        "variant_of", "derivative_of",
    ):
        assert getattr(m, attr) is None
    assert m.unknown == ()


def test_missing_title_is_reported_first():
    text = MINIMAL.replace("title: Pump\n", "")
    with pytest.raises(MissingRequiredKey) as exc:
        parse_manifest(text)
    assert exc.value.key == "title"


def test_missing_contact_name():
    text = MINIMAL.replace("contact:\n  name: A\n", "contact:\n  email: a@b.c\n")
    with pytest.raises(MissingRequiredKey) as exc:
        parse_manifest(text)
    assert exc.value.key == "contact.name"


def test_parse_failure_carries_position():
    with pytest.raises(ParseFailure) as exc:
        parse_manifest((FIXTURES / "broken.okh").read_text())
    assert exc.value.line == 2


def test_oversized_input_rejected():
    filler = "x" * (1024 * 1024)
    with pytest.raises(ParseFailure):
        parse_manifest(MINIMAL + f"note: {filler}\n")


def test_unknown_keys_preserved_in_order():
    text = MINIMAL + "zeta-key: z\nalpha-key: [a, b]\n"
    m = parse_manifest(text)
    assert m.unknown == (("zeta-key", "z"), ("alpha-key", ["a", "b"]))


def test_full_fixture_matches_expected_record():
    m = parse_manifest((FIXTURES / "full.okh").read_text())
    assert m == FULL_MANIFEST
    # Round-trip oracle: parse . serialize . parse == parse
    assert parse_manifest(serialize_manifest(m)) == m


def test_full_fixture_is_canonical_golden():
    text = (FIXTURES / "full.okh").read_text()
    assert serialize_manifest(parse_manifest(text)) == text


def test_serialize_is_key_order_independent():
    shuffled = (
        "documentation-home: https://ex.org/d\n"
        "license: CERN-OHL-S-2.0\n"
        "contact:\n"
        "  name: A\n"
        "okhv: 1.0\n"
        "title: Pump\n"
    )
    assert serialize_manifest(parse_manifest(shuffled)) == serialize_manifest(
        parse_manifest(MINIMAL)
    )


def test_round_trip_fixtures():
    for name in ("full.okh",):
        m = parse_manifest((FIXTURES / name).read_text())
        assert parse_manifest(serialize_manifest(m)) == m


def test_round_trip_randomized_manifests():
    rng = random.Random(20260810)
    for _ in range(250):
        m = random_manifest(rng)
        assert parse_manifest(serialize_manifest(m)) == m


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2**48))
def test_round_trip_property(seed):
    m = random_manifest(random.Random(seed))
    assert parse_manifest(serialize_manifest(m)) == m


def test_wire_round_trip():
    m = parse_manifest((FIXTURES / "full.okh").read_text())
    assert manifest_from_wire(manifest_to_wire(m)) == m


# --- validation ---------------------------------------------------------


def test_minimal_manifest_validates_clean():
    report = validate_manifest(parse_manifest(MINIMAL))
    assert report.issues == ()
    assert report.valid


def test_bad_development_stage_yields_enum_error():
    m = parse_manifest(MINIMAL + "development-stage: beta\n")
    report = validate_manifest(m)
    assert len(report.errors()) == 1
    issue = report.errors()[0]
    assert issue.code == "ENUM_VALUE"
    assert issue.field == "development-stage"


def _valid() -> Manifest:
    return parse_manifest(MINIMAL)


BREAKERS = {
    "EMPTY_TITLE": lambda m: _replace(m, title="   "),
    "EMPTY_CONTACT_NAME": lambda m: _replace(m, contact=ContactInfo(name=" ")),
    "EMAIL_FORMAT": lambda m: _replace(m, contact=ContactInfo(name="A", email="no-at-sign")),
    "INVALID_URL": lambda m: _replace(m, documentation_home="ftp://ex.org/d"),
    "EMPTY_KEYWORD": lambda m: _replace(m, keywords=("pump", "")),
    "DUPLICATE_KEYWORD": lambda m: _replace(m, keywords=("pump", "Pump")),
    "ENUM_VALUE": lambda m: _replace(m, development_stage="beta"),
    "SELF_REFERENCE": lambda m: _replace(m, variant_of=m.documentation_home),
}


def _replace(m: Manifest, **kw) -> Manifest:
    import dataclasses

    return dataclasses.replace(m, **kw)


@pytest.mark.parametrize("code", sorted(BREAKERS))
def test_validation_completeness_per_invariant(code):
    broken = BREAKERS[code](_valid())
    report = validate_manifest(broken)
    errors = report.errors()
    assert len(errors) == 1, f"{code}: {errors}"
    assert errors[0].code == code


def test_self_reference_detected_after_normalization():
    m = _replace(_valid(), derivative_of="HTTPS://Ex.Org:443/d/")
    m = _replace(m, documentation_home="https://ex.org/d")
    errors = validate_manifest(m).errors()
    assert [e.code for e in errors] == ["SELF_REFERENCE"]


def test_unknown_key_is_warning_not_error():
    m = parse_manifest(MINIMAL + "made-up: 1\n")
    report = validate_manifest(m)
    assert report.valid
    assert [w.code for w in report.warnings()] == ["UNKNOWN_KEY"]


def test_issue_order_is_deterministic():
    m = _replace(
        _valid(),
        title=" ",
        development_stage="beta",
        contact=ContactInfo(name=""),
    )
    codes = [i.code for i in validate_manifest(m).issues]
    assert codes == ["EMPTY_TITLE", "EMPTY_CONTACT_NAME", "ENUM_VALUE"]


# --- canonical identity --------------------------------------------------


def test_canonical_id_normalizes_equivalent_urls():
    a = _replace(_valid(), documentation_home="HTTPS://Ex.Org:443/d/")
    b = _replace(_valid(), documentation_home="https://ex.org/d")
    assert canonical_id(a) == canonical_id(b) == "https://ex.org/d"


def test_canonical_id_distinct_for_distinct_urls():
    a = _replace(_valid(), documentation_home="https://ex.org/d1")
    b = _replace(_valid(), documentation_home="https://ex.org/d2")
    assert canonical_id(a) != canonical_id(b)


def test_canonical_id_fallback_without_documentation_home():
    m = Manifest(
        okhv="1.0", title="Pump", contact=ContactInfo(name="A"),
        license="MIT", documentation_home=None,
    )
    first = canonical_id(m)
    assert first.startswith("sha256:")
    assert canonical_id(m) == first


def test_normalize_url_keeps_non_default_ports_and_query():
    assert normalize_url("http://Ex.org:8080/a/?q=1") == "http://ex.org:8080/a?q=1"
    assert normalize_url("https://ex.org/#frag") == "https://ex.org"


def test_corpus_has_37_distinct_ids(corpus_dir, ledger):
    ids = set()
    for path in sorted(corpus_dir.glob("*.okh")):
        try:
            ids.add(canonical_id(parse_manifest(path.read_text())))
        except Exception:
            assert path.name in ledger["parse_failed"]
    assert len(ids) == ledger["distinct_ids_among_parseable"] == 37
