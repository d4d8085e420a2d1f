"""App/component/permission model and the simplified manifest format.

The document format is a strict XML subset::

    <manifest package="com.example" targetSdk="23" signature="cert">
      <permission name="com.example.READ" level="dangerous"/>
      <uses-permission name="android.permission.INTERNET"/>
      <activity name="com.example.Main" exported="true" permission="...">
        <intent-filter>
          <action name="android.intent.action.MAIN"/>
          <category name="android.intent.category.LAUNCHER"/>
        </intent-filter>
      </activity>
      <service name="com.example.Remote" interfaces="getPid,getName"/>
    </manifest>

Unknown elements or attributes raise :class:`MalformedDocument`.
"""

from __future__ import annotations

import enum
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import DuplicateComponent, FilterWithoutAction, MalformedDocument

SYSTEM_UID_LIMIT = 10000
# Android 4.2; Providers stopped being exported by default at this API level.
PROVIDER_DEFAULT_UNEXPORT_SDK = 17


class ComponentKind(enum.Enum):
    ACTIVITY = "activity"
    SERVICE = "service"
    RECEIVER = "receiver"
    PROVIDER = "provider"

    @property
    def letter(self) -> str:
        return self.value[0].upper()


class ProtectionLevel(enum.Enum):
    NORMAL = "normal"
    DANGEROUS = "dangerous"
    SIGNATURE = "signature"


class ExportMode(enum.Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"
    NOT_EXPORTED = "not-exported"


@dataclass(frozen=True)
class AppIdentity:
    package: str
    signature: str = ""
    uid: int = 0

    @property
    def is_system(self) -> bool:
        return self.uid < SYSTEM_UID_LIMIT


@dataclass(frozen=True)
class PermissionDecl:
    name: str
    level: ProtectionLevel = ProtectionLevel.NORMAL
    system_defined: bool = False
    system_only: bool = False

    def __post_init__(self):
        if self.system_only and not self.system_defined:
            raise ValueError(f"{self.name}: system_only requires system_defined")


@dataclass(frozen=True)
class IntentFilterDecl:
    actions: tuple[str, ...]
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.actions:
            raise FilterWithoutAction("intent-filter declares no action")


@dataclass(frozen=True)
class ComponentDecl:
    name: str
    kind: ComponentKind
    raw_exported: Optional[bool] = None  # None: attribute absent
    filters: tuple[IntentFilterDecl, ...] = ()
    permission_guard: Optional[str] = None
    bound_interfaces: tuple[str, ...] = ()

    def __post_init__(self):
        if self.bound_interfaces and self.kind is not ComponentKind.SERVICE:
            raise MalformedDocument(f"{self.name}: interfaces only allowed on services")
        if self.filters and self.kind is ComponentKind.PROVIDER:
            raise MalformedDocument(f"{self.name}: providers take no intent-filter")

    @property
    def actions(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for f in self.filters:
            for a in f.actions:
                seen.setdefault(a)
        return tuple(seen)


@dataclass(frozen=True)
class ExportStatus:
    effective: bool
    mode: ExportMode


@dataclass(frozen=True)
class AppManifest:
    identity: AppIdentity
    target_sdk: int
    defined_permissions: tuple[PermissionDecl, ...] = ()
    used_permissions: tuple[str, ...] = ()
    components: tuple[ComponentDecl, ...] = field(default=())

    def __post_init__(self):
        names = set()
        for c in self.components:
            if c.name in names:
                raise DuplicateComponent(f"duplicate component {c.name!r}")
            names.add(c.name)

    @property
    def package(self) -> str:
        return self.identity.package

    def component(self, name: str) -> Optional[ComponentDecl]:
        for c in self.components:
            if c.name == name:
                return c
        return None

    def defined_permission(self, name: str) -> Optional[PermissionDecl]:
        for p in self.defined_permissions:
            if p.name == name:
                return p
        return None


def resolve_export(c: ComponentDecl, target_sdk: int) -> ExportStatus:
    if c.raw_exported is True:
        return ExportStatus(True, ExportMode.EXPLICIT)
    if c.raw_exported is False:
        return ExportStatus(False, ExportMode.NOT_EXPORTED)
    if c.kind is ComponentKind.PROVIDER:
        implicit = target_sdk < PROVIDER_DEFAULT_UNEXPORT_SDK
    else:
        implicit = bool(c.filters)
    if implicit:
        return ExportStatus(True, ExportMode.IMPLICIT)
    return ExportStatus(False, ExportMode.NOT_EXPORTED)


# -- parsing ---------------------------------------------------------------

_MANIFEST_ATTRS = {"package", "targetSdk", "signature"}
_COMPONENT_ATTRS = {"name", "exported", "permission", "interfaces"}
_NAME_ONLY = {"name"}


def _check_attrs(el: ET.Element, allowed: set[str], required: set[str] = _NAME_ONLY):
    extra = set(el.attrib) - allowed
    if extra:
        raise MalformedDocument(f"<{el.tag}>: unknown attribute(s) {sorted(extra)}")
    missing = required - set(el.attrib)
    if missing:
        raise MalformedDocument(f"<{el.tag}>: missing attribute(s) {sorted(missing)}")
    for key in required:
        if not el.attrib[key].strip():
            raise MalformedDocument(f"<{el.tag}>: empty {key!r}")


def _parse_bool(el: ET.Element, value: str) -> bool:
    if value == "true":
        return True
    if value == "false":
        return False
    raise MalformedDocument(f"<{el.tag} name={el.get('name')!r}>: exported={value!r}")


def _parse_filter(el: ET.Element) -> IntentFilterDecl:
    _check_attrs(el, set(), set())
    actions, categories = [], []
    for child in el:
        if child.tag == "action":
            _check_attrs(child, _NAME_ONLY)
            actions.append(child.attrib["name"])
        elif child.tag == "category":
            _check_attrs(child, _NAME_ONLY)
            categories.append(child.attrib["name"])
        else:
            raise MalformedDocument(f"<intent-filter>: unexpected <{child.tag}>")
    if not actions:
        raise FilterWithoutAction("intent-filter without <action>")
    return IntentFilterDecl(tuple(actions), tuple(categories))


def _parse_component(el: ET.Element, kind: ComponentKind) -> ComponentDecl:
    _check_attrs(el, _COMPONENT_ATTRS)
    raw = el.get("exported")
    exported = None if raw is None else _parse_bool(el, raw)
    filters = []
    for child in el:
        if child.tag != "intent-filter":
            raise MalformedDocument(f"<{el.tag}>: unexpected <{child.tag}>")
        filters.append(_parse_filter(child))
    interfaces = el.get("interfaces")
    bound = tuple(s.strip() for s in interfaces.split(",") if s.strip()) if interfaces else ()
    return ComponentDecl(
        name=el.attrib["name"],
        kind=kind,
        raw_exported=exported,
        filters=tuple(filters),
        permission_guard=el.get("permission") or None,
        bound_interfaces=bound,
    )


def parse_manifest(text: str) -> AppManifest:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise MalformedDocument(f"XML syntax error: {exc}") from exc
    if root.tag != "manifest":
        raise MalformedDocument(f"root element must be <manifest>, got <{root.tag}>")
    _check_attrs(root, _MANIFEST_ATTRS, {"package", "targetSdk"})
    try:
        target_sdk = int(root.attrib["targetSdk"])
    except ValueError:
        raise MalformedDocument(f"targetSdk={root.attrib['targetSdk']!r}") from None

    defined, used, components = [], [], []
    for el in root:
        if el.tag == "permission":
            _check_attrs(el, {"name", "level"})
            try:
                level = ProtectionLevel(el.get("level", "normal"))
            except ValueError:
                raise MalformedDocument(f"permission level {el.get('level')!r}") from None
            defined.append(PermissionDecl(el.attrib["name"], level))
        elif el.tag == "uses-permission":
            _check_attrs(el, _NAME_ONLY)
            used.append(el.attrib["name"])
        else:
            try:
                kind = ComponentKind(el.tag)
            except ValueError:
                raise MalformedDocument(f"unknown element <{el.tag}>") from None
            components.append(_parse_component(el, kind))

    if len({p.name for p in defined}) != len(defined):
        raise MalformedDocument("permission defined twice")
    identity = AppIdentity(root.attrib["package"], root.get("signature", ""))
    return AppManifest(identity, target_sdk, tuple(defined), tuple(used), tuple(components))


def load_manifest(path: str | Path) -> AppManifest:
    return parse_manifest(Path(path).read_text(encoding="utf-8"))


def serialize_manifest(m: AppManifest) -> str:
    root = ET.Element("manifest", {"package": m.package, "targetSdk": str(m.target_sdk)})
    if m.identity.signature:
        root.set("signature", m.identity.signature)
    for p in m.defined_permissions:
        ET.SubElement(root, "permission", {"name": p.name, "level": p.level.value})
    for name in m.used_permissions:
        ET.SubElement(root, "uses-permission", {"name": name})
    for c in m.components:
        el = ET.SubElement(root, c.kind.value, {"name": c.name})
        if c.raw_exported is not None:
            el.set("exported", "true" if c.raw_exported else "false")
        if c.permission_guard:
            el.set("permission", c.permission_guard)
        if c.bound_interfaces:
            el.set("interfaces", ",".join(c.bound_interfaces))
        for f in c.filters:
            fel = ET.SubElement(el, "intent-filter")
            for a in f.actions:
                ET.SubElement(fel, "action", {"name": a})
            for cat in f.categories:
                ET.SubElement(fel, "category", {"name": cat})
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"
