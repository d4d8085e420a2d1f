"""Compile-time phase: which components need interception, and at what cost."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .manifest import (
    AppManifest,
    ComponentDecl,
    ComponentKind,
    ExportMode,
    ExportStatus,
    resolve_export,
)
from .syscatalog import SystemCatalog, is_custom_action

KIND_ORDER = (
    ComponentKind.ACTIVITY,
    ComponentKind.SERVICE,
    ComponentKind.RECEIVER,
    ComponentKind.PROVIDER,
)

ACTIVITY_ENTRIES = ("onCreate", "onStart", "onNewIntent")
SERVICE_ENTRIES = ("onCreate", "onStartCommand", "onHandleIntent", "onBind", "onRebind")
RECEIVER_ENTRIES = ("onReceive",)
PROVIDER_ENTRIES = ("query", "insert", "bulkInsert", "update", "delete", "openFile")
# old-SDK spelling of onStartCommand
LEGACY_SERVICE_ENTRY = "onStart"

STUB_LINES_PER_ENTRY = 2


class RiskReason(enum.Enum):
    EXPORTED_CUSTOM_ACTION = "exported-custom-action"
    IMPLICIT_EXPORT = "implicit-export"
    EXPLICIT_CUSTOM_ACTION = "explicit-custom-action"
    EXPLICIT_SYSTEM_ONLY_ACTION = "explicit-system-only-action"
    PROVIDER_NOT_UNEXPORTED = "provider-not-unexported"
    NOT_RISKY = "not-risky"


@dataclass(frozen=True)
class ComponentRisk:
    kind: ComponentKind
    export: ExportStatus
    reason: RiskReason

    @property
    def risky(self) -> bool:
        return self.reason is not RiskReason.NOT_RISKY


@dataclass
class KindCounts:
    explicit: int = 0
    implicit: int = 0
    total: int = 0
    risky: int = 0

    def exported_cell(self) -> str:
        return f"({self.explicit},{self.implicit})/{self.total}"


@dataclass
class RiskReport:
    package: str
    per_component: dict[str, ComponentRisk] = field(default_factory=dict)
    counts: dict[ComponentKind, KindCounts] = field(
        default_factory=lambda: {k: KindCounts() for k in KIND_ORDER}
    )

    def add(self, name: str, risk: ComponentRisk) -> None:
        self.per_component[name] = risk
        c = self.counts[risk.kind]
        c.total += 1
        c.explicit += risk.export.mode is ExportMode.EXPLICIT
        c.implicit += risk.export.mode is ExportMode.IMPLICIT
        c.risky += risk.risky

    @property
    def risky_names(self) -> list[str]:
        return [n for n, r in self.per_component.items() if r.risky]

    @property
    def risky_total(self) -> int:
        return sum(c.risky for c in self.counts.values())

    def risky_cell(self) -> str:
        return ",".join(str(self.counts[k].risky) for k in KIND_ORDER)


def classify(c: ComponentDecl, export: ExportStatus, cat: SystemCatalog) -> RiskReason:
    actions = c.actions
    custom = any(is_custom_action(a, cat) for a in actions)
    explicit = export.mode is ExportMode.EXPLICIT
    implicit = export.mode is ExportMode.IMPLICIT

    if c.kind is ComponentKind.ACTIVITY:
        if export.effective and custom:
            return RiskReason.EXPORTED_CUSTOM_ACTION
    elif c.kind is ComponentKind.SERVICE:
        if explicit and custom:
            return RiskReason.EXPLICIT_CUSTOM_ACTION
        if implicit:
            return RiskReason.IMPLICIT_EXPORT
    elif c.kind is ComponentKind.RECEIVER:
        if explicit and custom:
            return RiskReason.EXPLICIT_CUSTOM_ACTION
        if explicit and any(a in cat.sys_only_actions for a in actions):
            return RiskReason.EXPLICIT_SYSTEM_ONLY_ACTION
        if implicit:
            return RiskReason.IMPLICIT_EXPORT
    elif c.raw_exported is not False:
        return RiskReason.PROVIDER_NOT_UNEXPORTED
    return RiskReason.NOT_RISKY


def classify_legacy(c: ComponentDecl, export: ExportStatus, cat: SystemCatalog) -> RiskReason:
    """Earlier published variant: Service/Receiver risky only when implicitly exported."""
    custom = any(is_custom_action(a, cat) for a in c.actions)
    if c.kind is ComponentKind.ACTIVITY:
        if export.effective and custom:
            return RiskReason.EXPORTED_CUSTOM_ACTION
    elif c.kind is ComponentKind.PROVIDER:
        if c.raw_exported is not False:
            return RiskReason.PROVIDER_NOT_UNEXPORTED
    elif c.raw_exported is None and export.effective:
        return RiskReason.IMPLICIT_EXPORT
    return RiskReason.NOT_RISKY


def identify_risky(m: AppManifest, cat: SystemCatalog, legacy: bool = False) -> RiskReport:
    rule = classify_legacy if legacy else classify
    report = RiskReport(m.package)
    for c in m.components:
        export = resolve_export(c, m.target_sdk)
        report.add(c.name, ComponentRisk(c.kind, export, rule(c, export, cat)))
    return report


def entry_functions(c: ComponentDecl, include_legacy: bool = False) -> list[str]:
    if c.kind is ComponentKind.ACTIVITY:
        return list(ACTIVITY_ENTRIES)
    if c.kind is ComponentKind.SERVICE:
        entries = list(SERVICE_ENTRIES)
        if include_legacy:
            entries.append(LEGACY_SERVICE_ENTRY)
        return entries + list(c.bound_interfaces)
    if c.kind is ComponentKind.RECEIVER:
        return list(RECEIVER_ENTRIES)
    return list(PROVIDER_ENTRIES)


def estimate_stub_lines(report: RiskReport, m: AppManifest) -> int:
    total = 0
    for name in report.risky_names:
        c = m.component(name)
        if c is not None:
            total += STUB_LINES_PER_ENTRY * len(entry_functions(c))
    return total
