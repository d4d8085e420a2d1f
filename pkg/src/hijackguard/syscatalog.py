"""System-defined permissions, Intent actions and system binaries.

Catalog files are line oriented::

    # comment
    [sys_perms]
    android.permission.INTERNET normal
    android.permission.BIND_JOB_SERVICE signature system-only
    [sys_actions]
    android.intent.action.MAIN
    [sys_only_actions]
    android.intent.action.BOOT_COMPLETED
    [system_binaries]
    system_server
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import MalformedDocument, SysOnlyNotSubset
from .manifest import PermissionDecl, ProtectionLevel

CATALOG_ENV = "HIJACKGUARD_CATALOG"
_SECTIONS = ("sys_perms", "sys_actions", "sys_only_actions", "system_binaries")


@dataclass(frozen=True)
class SystemCatalog:
    sys_perms: frozenset[PermissionDecl] = frozenset()
    sys_actions: frozenset[str] = frozenset()
    sys_only_actions: frozenset[str] = frozenset()
    system_binaries: frozenset[str] = frozenset()

    def __post_init__(self):
        missing = self.sys_only_actions - self.sys_actions
        if missing:
            raise SysOnlyNotSubset(f"system-only actions not in sys_actions: {sorted(missing)}")
        for p in self.sys_perms:
            if not p.system_defined:
                raise MalformedDocument(f"{p.name}: catalog permission must be system-defined")
        # name index, built once; membership checks sit on the evaluate() hot path
        object.__setattr__(self, "_perm_index", {p.name: p for p in self.sys_perms})

    def sys_perm(self, name: str) -> PermissionDecl | None:
        return self._perm_index.get(name)

    def is_sys_perm(self, name: str) -> bool:
        return name in self._perm_index


def load_catalog(source: str) -> SystemCatalog:
    sets: dict[str, set] = {s: set() for s in _SECTIONS}
    section = None
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or line[1:-1] not in sets:
                raise MalformedDocument(f"line {lineno}: unknown section {line!r}")
            section = line[1:-1]
            continue
        if section is None:
            raise MalformedDocument(f"line {lineno}: entry outside any section")
        fields = line.split()
        if section == "sys_perms":
            if len(fields) not in (2, 3) or (len(fields) == 3 and fields[2] != "system-only"):
                raise MalformedDocument(f"line {lineno}: expected 'name level [system-only]'")
            try:
                level = ProtectionLevel(fields[1])
            except ValueError:
                raise MalformedDocument(f"line {lineno}: bad level {fields[1]!r}") from None
            sets[section].add(
                PermissionDecl(fields[0], level, system_defined=True, system_only=len(fields) == 3)
            )
        else:
            if len(fields) != 1:
                raise MalformedDocument(f"line {lineno}: expected a single name")
            sets[section].add(fields[0])
    return SystemCatalog(*(frozenset(sets[s]) for s in _SECTIONS))


def default_catalog_text() -> str:
    return resources.files(__package__).joinpath("data/default_catalog.txt").read_text("utf-8")


def default_catalog(path: str | os.PathLike | None = None) -> SystemCatalog:
    """Load ``path``, else ``$HIJACKGUARD_CATALOG``, else the bundled catalog."""
    path = path or os.environ.get(CATALOG_ENV)
    if path:
        return load_catalog(Path(path).read_text(encoding="utf-8"))
    return load_catalog(default_catalog_text())


def is_custom_action(action: str, cat: SystemCatalog) -> bool:
    return action not in cat.sys_actions
