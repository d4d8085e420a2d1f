"""Command line interface: ``scan``, ``simulate``, ``binder``, ``stub-estimate``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .binderlog import DEFAULT_WINDOW, parse_process_table, parse_transaction_log, recover_caller
from .errors import HijackGuardError
from .manifest import AppManifest, load_manifest
from .risk import KIND_ORDER, RiskReport, entry_functions, estimate_stub_lines, identify_risky
from .sim import DecisionOracle, load_scenario, outcome_lines, run_scenario
from .syscatalog import SystemCatalog, default_catalog

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_RISKY = 2

SCAN_COLUMNS = (
    "package", "activity", "service", "receiver", "provider",
    "custom_permissions", "custom_perm_components", "risky", "stub_lines",
)


def bundled_path(*parts: str) -> Path:
    return Path(str(resources.files(__package__).joinpath("data", *parts)))


def bundled_fixtures() -> list[Path]:
    return sorted(p for p in bundled_path("fixtures").glob("*.xml") if p.stem != "attacker")


@dataclass
class ScanRow:
    manifest: AppManifest
    report: RiskReport
    custom_perm_components: tuple[int, int, int, int]
    stub_lines: int

    @property
    def package(self) -> str:
        return self.manifest.package

    def cells(self) -> list[str]:
        c = self.report.counts
        return [
            self.package,
            *(c[k].exported_cell() for k in KIND_ORDER),
            str(len(self.manifest.defined_permissions)),
            ",".join(map(str, self.custom_perm_components)),
            self.report.risky_cell(),
            str(self.stub_lines),
        ]


def scan_manifest(m: AppManifest, cat: SystemCatalog, legacy: bool = False) -> ScanRow:
    report = identify_risky(m, cat, legacy=legacy)
    guarded = [0, 0, 0, 0]
    for comp in m.components:
        if comp.permission_guard and not cat.is_sys_perm(comp.permission_guard):
            guarded[KIND_ORDER.index(comp.kind)] += 1
    return ScanRow(m, report, tuple(guarded), estimate_stub_lines(report, m))


def cmd_scan(
    paths: Sequence[str | Path], cat: SystemCatalog, legacy: bool = False
) -> tuple[list[ScanRow], list[str]]:
    """Scan manifests; returns rows sorted by package plus per-file error messages."""
    rows, errors = [], []
    for path in paths:
        try:
            rows.append(scan_manifest(load_manifest(path), cat, legacy))
        except (OSError, HijackGuardError) as exc:
            errors.append(f"{path}: {exc}")
    rows.sort(key=lambda r: r.package)
    return rows, errors


def format_scan(rows: Sequence[ScanRow]) -> str:
    lines = ["\t".join(SCAN_COLUMNS)] + ["\t".join(r.cells()) for r in rows]
    return "\n".join(lines) + "\n"


def _catalog(args) -> SystemCatalog:
    return default_catalog(getattr(args, "catalog", None))


def _run_scan(args) -> int:
    cat = _catalog(args)
    paths = list(args.manifests) + (bundled_fixtures() if args.bundled else [])
    rows, errors = cmd_scan(paths, cat, legacy=args.legacy_rules)
    sys.stdout.write(format_scan(rows))
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    if args.figures and rows:
        from .plotting import plot_exposure

        out = plot_exposure([r.report for r in rows], Path(args.figures) / "exposure.png")
        print(f"figure: {out}", file=sys.stderr)
    if errors:
        return EXIT_ERROR
    return EXIT_RISKY if any(r.report.risky_total for r in rows) else EXIT_OK


def _run_simulate(args) -> int:
    path = args.scenario or bundled_path("case_studies.json")
    try:
        scenario, base = load_scenario(path)
        oracle = DecisionOracle.parse(args.oracle) if args.oracle else None
        records, ok = run_scenario(scenario, base, seed=args.seed, oracle=oracle, catalog=_catalog(args))
    except (OSError, ValueError, KeyError, HijackGuardError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    sys.stdout.write(outcome_lines(records))
    return EXIT_OK if ok else EXIT_ERROR


def _run_binder(args) -> int:
    try:
        log = parse_transaction_log(Path(args.log).read_text(encoding="utf-8"))
        procs = parse_process_table(Path(args.procs).read_text(encoding="utf-8"))
        who = recover_caller(log, args.callee, procs, _catalog(args), window=args.window)
    except (OSError, HijackGuardError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    pid = next(p for p, e in procs.items() if e.package == who.package and e.uid == who.uid)
    print(f"{pid}\t{who.uid}\t{who.package}")
    return EXIT_OK


def _run_stub_estimate(args) -> int:
    try:
        m = load_manifest(args.manifest)
    except (OSError, HijackGuardError) as exc:
        print(f"error: {args.manifest}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    report = identify_risky(m, _catalog(args), legacy=args.legacy_rules)
    print("component\tkind\tentries\tstub_lines")
    for name in report.risky_names:
        comp = m.component(name)
        n = len(entry_functions(comp))
        print(f"{name}\t{comp.kind.value}\t{n}\t{2 * n}")
    print(f"total\t\t\t{estimate_stub_lines(report, m)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hijackguard",
        description="In-app access control against Android component hijacking (desk simulator).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def catalog_flag(p):
        p.add_argument("--catalog", help="system catalog file (default: $HIJACKGUARD_CATALOG or bundled)")

    p = sub.add_parser("scan", help="risky-component report (TSV); exit 2 if anything is risky")
    p.add_argument("manifests", nargs="*", help="manifest files")
    catalog_flag(p)
    p.add_argument("--legacy-rules", action="store_true", help="use the earlier risk rule variant")
    p.add_argument("--bundled", action="store_true", help="also scan the bundled ten-app fixtures")
    p.add_argument("--figures", metavar="DIR", help="write exposure.png into DIR")
    p.set_defaults(func=_run_scan)

    p = sub.add_parser("simulate", help="run an IPC scenario, one JSON outcome per line")
    p.add_argument("--scenario", help="scenario JSON (default: bundled case studies)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--oracle", help="allow | deny | prompt | script:FILE (overrides per-request oracles)")
    catalog_flag(p)
    p.set_defaults(func=_run_simulate)

    p = sub.add_parser("binder", help="recover the caller app from a transaction_log")
    p.add_argument("--log", required=True)
    p.add_argument("--procs", required=True, help="process table: 'pid uid package' lines")
    p.add_argument("--callee", required=True, type=int, metavar="PID")
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    catalog_flag(p)
    p.set_defaults(func=_run_binder)

    p = sub.add_parser("stub-estimate", help="stub-code lines needed for a manifest's risky components")
    p.add_argument("--manifest", required=True)
    p.add_argument("--legacy-rules", action="store_true")
    catalog_flag(p)
    p.set_defaults(func=_run_stub_estimate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HijackGuardError as exc:
        # catalog problems surface here
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
