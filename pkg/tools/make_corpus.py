#!/usr/bin/env python3
"""Build the 40-manifest fixture corpus and its planted-defect ledger.

The corpus plants, by construction:
  * one malformed file (unparseable markup),
  * one invalid manifest carrying exactly 12 semantic defects,
  * three duplicate pairs (one broken because its second member is the
    malformed file), leaving 37 distinct project identities,
  * two derivative-of links, two variant-of links, and one version pair,
    so the post-dedupe index holds exactly 5 relation edges.

`ledger.json` records all planted facts; tests treat it as ground truth.
Output is deterministic: rerunning the script reproduces identical bytes.
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from okh import miniyaml  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "corpus"

SEED_HOST = "http://127.0.0.1:8943"

P = []


def project(slug, title, doc, *, desc=None, kw=None, use=None, stage=None,
            license="CERN-OHL-S-2.0", version=None, lang=None, bom=None,
            homepage=None, safety=None, quality=None, maintenance=None,
            variant_of=None, derivative_of=None, contact=("Noa Vale", "noa@ohlab.org"),
            unknown=None):
    P.append(dict(
        slug=slug, title=title, doc=doc, desc=desc, kw=kw, use=use, stage=stage,
        license=license, version=version, lang=lang, bom=bom, homepage=homepage,
        safety=safety, quality=quality, maintenance=maintenance,
        variant_of=variant_of, derivative_of=derivative_of, contact=contact,
        unknown=unknown or [],
    ))


D = "https://docs.ohlab.org"
W = "https://projects.openhw.example"

project("p01-open-flow-pump", "Open Flow Pump", f"{D}/open-flow-pump",
        desc="A fully documented peristaltic pump for laboratory liquid handling.",
        kw=["pump", "peristaltic", "fluidics", "lab"], use="Laboratory fluid handling and dosing.",
        stage="product", version="2.1", lang="en", bom=f"{D}/open-flow-pump/bom.csv",
        safety=f"{D}/open-flow-pump/risk.pdf", maintenance=f"{D}/open-flow-pump/service.md")
project("p02-handy-prosthetic", "Handy Prosthetic Hand", f"{W}/handy-prosthetic",
        desc="3D printed upper-limb prosthetic hand with printable sockets.",
        kw=["prosthetic", "hand", "3d-printing"], use="Low-cost upper-limb prosthetics.",
        stage="product", license="CERN-OHL-W-2.0", version="4.0", bom=f"{W}/handy-prosthetic/bom")
project("p03-axial-drone", "Axial Survey Drone", f"{D}/axial-drone",
        desc="Modular quadcopter for aerial field surveys and mapping.",
        kw=["drone", "survey", "uav"], use="Aerial surveys of agricultural plots.",
        stage="product", version="3.2", bom=f"{D}/axial-drone/bom.csv",
        quality=f"{D}/axial-drone/qa.md")
project("p04-field-microscope", "Field Microscope", f"{D}/field-microscope",
        desc="Portable field microscope for water quality surveys.",
        kw=["microscope", "optics", "field"], stage="product", version="1.4",
        license="CERN-OHL-P-2.0", safety=f"{D}/field-microscope/safety.md")
project("p05-solar-heater", "Solar Water Heater", "https://Solar.Example.ORG/heater/",
        desc="Thermosiphon solar water heater built from plate collectors.",
        kw=["solar", "water", "heater"], stage="prototype", version="1.2")
project("p06-cargo-bicycle", "Cargo Bicycle Frame", f"{W}/cargo-bicycle",
        desc="Welded steel cargo bicycle frame with modular racks.",
        kw=["bicycle", "cargo", "frame"], stage="product", version="2.0",
        bom=f"{W}/cargo-bicycle/parts.csv")
project("p07-bench-lathe", "Bench Micro Lathe", f"{D}/bench-lathe",
        desc="Small bench lathe for precision machining of brass and steel.",
        kw=["lathe", "machining", "bench"], stage="product", version="1.1",
        maintenance=f"{D}/bench-lathe/maintenance.md")
project("p08-air-sentinel", "Air Quality Sentinel", f"{W}/air-sentinel",
        desc="Arduino based air quality sensor node for particulate matter.",
        kw=["air", "quality", "sensor", "arduino"], stage="prototype", version="0.9",
        license="MIT", lang="en")
project("p09-open-ventilator", "Open Ventilator", "http://vent.example.org:80/docs",
        desc="Emergency ventilator with open pneumatic design.",
        kw=["ventilator", "medical", "emergency"], stage="prototype", version="2.0",
        safety="http://vent.example.org/risk.pdf")
project("p10-soft-gripper", "Soft Robotic Gripper", f"{D}/soft-gripper",
        desc="Cast silicone soft robotic gripper with pneumatic actuation.",
        kw=["robot", "gripper", "soft-robotics"], stage="prototype", version="0.3")
project("p11-seed-spreader", "Precision Seed Spreader", f"{W}/seed-spreader",
        desc="Precision seed spreader for market gardens.",
        kw=["agriculture", "seeder", "garden"], stage="product", version="1.0",
        unknown=[("field-tested", "yes")])
project("p12-axial-mapper", "Axial Mapper Drone", f"{D}/axial-mapper",
        desc="Lidar mapping drone derived from the Axial Survey Drone.",
        kw=["drone", "mapping", "lidar"], stage="prototype", version="0.8",
        derivative_of=f"{D}/axial-drone")
project("p13-spectro-kit", "Open Spectrometer Kit", f"{W}/spectro-kit",
        desc="Visible light spectrometer kit with 3d printed housing.",
        kw=["spectrometer", "optics", "diy"], stage="product", version="2.3",
        license="CERN-OHL-P-2.0")
project("p14-axial-heavy", "Axial Heavy-Lift Drone", f"{D}/axial-heavy",
        desc="Heavy-lift variant of the Axial Survey Drone for payloads.",
        kw=["drone", "heavy-lift", "payload"], stage="idea",
        variant_of=f"{D}/axial-drone")
project("p15-water-filter", "Gravity Water Filter", f"{W}/water-filter",
        desc="Gravity fed ceramic water filter for off-grid purification.",
        kw=["water", "filter", "purification"], stage="product", version="1.5",
        license="CC-BY-SA-4.0")
project("p16-greenhouse-brain", "Greenhouse Controller", f"{D}/greenhouse-brain",
        desc="Arduino greenhouse controller with humidity and soil sensors.",
        kw=["greenhouse", "controller", "arduino", "sensors"], stage="product",
        version="3.0", license="MIT", bom=f"{D}/greenhouse-brain/bom.csv")
project("p17-vertical-mill", "Vertical CNC Mill", "https://mill.example.org/vertical",
        desc="Rigid vertical CNC mill with ballscrew axes.",
        kw=["cnc", "mill", "machining"], stage="product", version="1.6")
project("p18-openpump-v1", "OpenPump Dosing Pump", "https://openpump.example.org/docs/v1",
        desc="First release of the OpenPump precision dosing pump.",
        kw=["pump", "dosing"], stage="product", version="1")
project("p19-openpump-v2", "OpenPump Dosing Pump", "https://openpump.example.org/docs/v2",
        desc="Second release of the OpenPump precision dosing pump with syringe module.",
        kw=["pump", "dosing", "syringe"], stage="product", version="2")
project("p20-laser-cutter", "Tabletop Laser Cutter", f"{W}/laser-cutter",
        desc="Tabletop diode laser cutter with interlocked enclosure.",
        kw=["laser", "cutter", "cnc"], stage="prototype", version="0.7",
        safety=f"{W}/laser-cutter/safety.md")
project("p21-egg-incubator", "Egg Incubator", f"{D}/egg-incubator",
        desc="Forced-air egg incubator with thermostatic control.",
        kw=["incubator", "poultry", "temperature"], stage="product", version="1.3")
project("p22-lathe-cnc", "CNC Bench Lathe Conversion", f"{D}/lathe-cnc",
        desc="CNC conversion of the Bench Micro Lathe with stepper drives.",
        kw=["lathe", "cnc", "conversion"], stage="prototype", version="0.5",
        derivative_of=f"{D}/bench-lathe")
project("p23-wind-mini", "Mini Wind Turbine", f"{W}/wind-mini",
        desc="Small axial flux wind turbine for battery charging.",
        kw=["wind", "turbine", "energy"], stage="prototype", version="1.0")
project("p24-syringe-pump", "Syringe Pump", f"{D}/syringe-pump",
        desc="Arduino syringe pump for microliter dosing in the lab.",
        kw=["syringe", "pump", "lab", "arduino"], stage="product", version="2.2",
        license="CERN-OHL-P-2.0", bom=f"{D}/syringe-pump/bom.csv")
project("p25-solar-heater-mk2", "Solar Water Heater", "https://solar.example.org/heater",
        desc="Thermosiphon solar water heater, revised collector geometry.",
        kw=["solar", "water", "heater"], stage="prototype", version="1.10")
project("p26-open-rov", "Open Underwater ROV", f"{W}/open-rov",
        desc="Tethered underwater robot for shallow water inspection.",
        kw=["rov", "underwater", "robot"], stage="prototype", version="0.6")
project("p27-braille-writer", "Braille Label Writer", f"{D}/braille-writer",
        desc="Hand-operated braille label writer for accessibility.",
        kw=["braille", "accessibility", "labels"], stage="product", version="1.0")
project("p28-bee-monitor", "Beehive Monitor", f"{W}/bee-monitor",
        desc="Hive scale and sensor pack for monitoring bee colonies.",
        kw=["bees", "monitor", "sensor"], stage="prototype", version="0.4",
        license="MIT")
project("p29-ventilator-patch", "Open Ventilator", "http://vent.example.org/docs",
        desc="Emergency ventilator with open pneumatic design, patched valves.",
        kw=["ventilator", "medical", "emergency"], stage="prototype", version="2.0.1",
        safety="http://vent.example.org/risk.pdf")
project("p30-compost-tumbler", "Compost Tumbler", f"{D}/compost-tumbler",
        desc="Dual chamber compost tumbler from recycled drums.",
        kw=["compost", "garden"], stage="product", version="1.0",
        license="CC-BY-NC-4.0")
project("p31-lathe-cnc-metric", "CNC Bench Lathe Conversion Metric", f"{D}/lathe-cnc-metric",
        desc="Metric leadscrew variant of the CNC bench lathe conversion.",
        kw=["lathe", "cnc", "metric"], stage="idea",
        variant_of=f"{D}/lathe-cnc")
project("p32-microfluidics", "Microfluidic Mixer Chip", f"{W}/microfluidics",
        desc="PDMS microfluidic mixer chip for lab on chip experiments.",
        kw=["microfluidics", "lab", "chip"], stage="prototype", version="0.2")
project("p33-weather-station", "Open Weather Station", f"{D}/weather-station",
        desc="Solar powered weather station with open sensor bus.",
        kw=["weather", "station", "sensor", "solar"], stage="product", version="2.0",
        license="MIT", bom=f"{D}/weather-station/bom.csv")
project("p34-robot-arm", "Desktop Robot Arm", f"{W}/robot-arm",
        desc="Five axis desktop robot arm with servo drives.",
        kw=["robot", "arm", "servo"], stage="prototype", version="0.9")
project("p35-ph-doser", "pH Auto Doser", f"{D}/ph-doser",
        desc="Peristaltic pH dosing pump for aquariums and hydroponics.",
        kw=["ph", "doser", "aquarium", "pump"], stage="product", version="1.1")
# p36: the invalid manifest; emitted explicitly below with 12 planted defects.
# p37: the malformed file; raw bytes below.
project("p38-pocket-printer", "Pocket 3D Printer", f"{W}/pocket-printer",
        desc="Folding pocket sized 3d printer for field repairs.",
        kw=["3d", "printer", "portable"], stage="idea")
project("p39-mesh-radio", "Mesh Radio Node", f"{D}/mesh-radio",
        desc="Long range mesh radio node for off-grid communication.",
        kw=["radio", "mesh", "communication"], stage="prototype", version="0.5",
        license="MIT")
project("p40-open-loom", "Open Jacquard Loom", f"{W}/open-loom",
        desc="Computer controlled jacquard loom for open source weaving.",
        kw=["loom", "textile", "weaving"], stage="prototype", version="0.8",
        license="HomeBrew-1.0")

INVALID_FILE = "p36-murky-turbine.okh"
INVALID_DOC = {
    "okhv": "1.0",
    "title": "   ",
    "description": "Hydro turbine with murky documentation.",
    "contact": {"name": "", "email": "contact.example.org"},
    "license": "CERN-OHL-S-2.0",
    "documentation-home": "https://files.example.org/murky-turbine/",
    "bom": "parts list.xlsx",
    "project-homepage": "example.org/murky",
    "intended-use": "Micro hydro power.",
    "keywords": ["hydro", "", "turbine", "Turbine"],
    "development-stage": "beta",
    "health-and-safety": "ftp://files.example.org/risk.pdf",
    "quality-instructions": "/qa/checklist",
    "version": "0.1",
    "variant-of": "https://files.example.org/murky-turbine/",
    "derivative-of": "https://files.example.org/murky-turbine",
}
INVALID_DEFECTS = [
    {"field": "title", "code": "EMPTY_TITLE"},
    {"field": "contact.name", "code": "EMPTY_CONTACT_NAME"},
    {"field": "contact.email", "code": "EMAIL_FORMAT"},
    {"field": "bom", "code": "INVALID_URL"},
    {"field": "project-homepage", "code": "INVALID_URL"},
    {"field": "health-and-safety", "code": "INVALID_URL"},
    {"field": "quality-instructions", "code": "INVALID_URL"},
    {"field": "keywords", "code": "EMPTY_KEYWORD"},
    {"field": "keywords", "code": "DUPLICATE_KEYWORD"},
    {"field": "development-stage", "code": "ENUM_VALUE"},
    {"field": "variant-of", "code": "SELF_REFERENCE"},
    {"field": "derivative-of", "code": "SELF_REFERENCE"},
]

MALFORMED_FILE = "p37-vertical-mill-mirror.okh"
MALFORMED_TEXT = (
    "okhv: 1.0\n"
    "title: Vertical CNC Mill Mirror\n"
    "documentation-home: https://mill.example.org/vertical\n"
    "contact:\n"
    "\tname: broken tab indent\n"
    "license: CERN-OHL-S-2.0\n"
)


def build_doc(p: dict) -> dict:
    doc: dict = {"okhv": "1.0", "title": p["title"]}
    if p["desc"]:
        doc["description"] = p["desc"]
    contact = {"name": p["contact"][0]}
    if p["contact"][1]:
        contact["email"] = p["contact"][1]
    doc["contact"] = contact
    doc["license"] = p["license"]
    if p["lang"]:
        doc["documentation-language"] = p["lang"]
    doc["documentation-home"] = p["doc"]
    if p["bom"]:
        doc["bom"] = p["bom"]
    if p["homepage"]:
        doc["project-homepage"] = p["homepage"]
    if p["use"]:
        doc["intended-use"] = p["use"]
    if p["kw"]:
        doc["keywords"] = p["kw"]
    if p["stage"]:
        doc["development-stage"] = p["stage"]
    if p["safety"]:
        doc["health-and-safety"] = p["safety"]
    if p["quality"]:
        doc["quality-instructions"] = p["quality"]
    if p["maintenance"]:
        doc["maintenance-instructions"] = p["maintenance"]
    if p["version"]:
        doc["version"] = p["version"]
    if p["variant_of"]:
        doc["variant-of"] = p["variant_of"]
    if p["derivative_of"]:
        doc["derivative-of"] = p["derivative_of"]
    for k, v in p["unknown"]:
        doc[k] = v
    return doc


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(3105)
    filenames: list[str] = []
    for p in P:
        doc = build_doc(p)
        # Shuffle key order in roughly a fifth of the files: hand-authored
        # manifests rarely follow the canonical order.
        if rng.random() < 0.2:
            keys = list(doc.keys())
            rng.shuffle(keys)
            doc = {k: doc[k] for k in keys}
        name = f"{p['slug']}.okh"
        header = "# Open Know-How manifest\n" if rng.random() < 0.3 else ""
        (OUT / name).write_text(header + miniyaml.emit(doc), encoding="utf-8")
        filenames.append(name)

    (OUT / INVALID_FILE).write_text(miniyaml.emit(INVALID_DOC), encoding="utf-8")
    filenames.append(INVALID_FILE)
    (OUT / MALFORMED_FILE).write_text(MALFORMED_TEXT, encoding="utf-8")
    filenames.append(MALFORMED_FILE)
    filenames.sort()

    seeds = ["name,url"]
    for name in filenames:
        seeds.append(f"{Path(name).stem},{SEED_HOST}/{name}")
    (OUT / "seeds.csv").write_text("\n".join(seeds) + "\n", encoding="utf-8")

    ledger = {
        "total_files": len(filenames),
        "parse_failed": [MALFORMED_FILE],
        "invalid": {INVALID_FILE: INVALID_DEFECTS},
        "planted_error_count": len(INVALID_DEFECTS),
        "duplicate_pairs": [
            {"loser": "p05-solar-heater.okh", "winner": "p25-solar-heater-mk2.okh",
             "id": "https://solar.example.org/heater"},
            {"loser": "p09-open-ventilator.okh", "winner": "p29-ventilator-patch.okh",
             "id": "http://vent.example.org/docs"},
        ],
        "broken_duplicate_pair": {
            "kept": "p17-vertical-mill.okh",
            "malformed": MALFORMED_FILE,
            "id": "https://mill.example.org/vertical",
        },
        "records_after_crawl": 39,
        "records_after_dedupe": 37,
        "distinct_ids_among_parseable": 37,
        "edges": [
            {"from": f"{D}/axial-mapper", "to": f"{D}/axial-drone", "kind": "derivative_of"},
            {"from": f"{D}/lathe-cnc", "to": f"{D}/bench-lathe", "kind": "derivative_of"},
            {"from": f"{D}/axial-heavy", "to": f"{D}/axial-drone", "kind": "variant_of"},
            {"from": f"{D}/lathe-cnc-metric", "to": f"{D}/lathe-cnc", "kind": "variant_of"},
            {"from": "https://openpump.example.org/docs/v2",
             "to": "https://openpump.example.org/docs/v1", "kind": "version_of"},
        ],
        "crawl_report": {"attempted": 40, "succeeded": 38, "parse_failed": 1,
                         "invalid": 1, "network_failed": 0},
    }
    (OUT / "ledger.json").write_text(
        json.dumps(ledger, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(filenames)} manifests + seeds.csv + ledger.json to {OUT}")


if __name__ == "__main__":
    main()
