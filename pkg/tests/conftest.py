import json
from pathlib import Path

import pytest

from hijackguard.cli import bundled_path
from hijackguard.manifest import load_manifest
from hijackguard.policy import collect_primitives
from hijackguard.sim import DeviceModel, emit_binder_chain, install, request_from_json
from hijackguard.syscatalog import default_catalog

DATA = bundled_path()
FIXTURES = DATA / "fixtures"
TEST_DATA = Path(__file__).parent / "data"

# filled by test_acceptance, printed once at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cat():
    return default_catalog()


def fixture_manifest(stem):
    return load_manifest(FIXTURES / f"{stem}.xml")


def case_studies():
    return json.loads((DATA / "case_studies.json").read_text())


def case_device(cat=None, installs=None, seed=2018):
    scenario = case_studies()
    device = DeviceModel(cat, seed=seed)
    for rel in installs or scenario["installs"]:
        install(device, load_manifest(DATA / rel))
    return device


def case_primitives(cat=None):
    """(id, Primitives) for every bundled case study, assembled the way dispatch does."""
    device = case_device(cat)
    out = []
    for obj in case_studies()["requests"]:
        req = request_from_json(obj)
        window = emit_binder_chain(
            device, device.pid_of(req.caller_package), device.app(req.callee_package).pid, 2
        )
        out.append((obj["id"], collect_primitives(req, device, log=window)))
    return out


def benign_corpus():
    lines = (TEST_DATA / "benign_provider_args.txt").read_text().splitlines()
    return [ln for ln in lines if ln and not ln.startswith("#")]
