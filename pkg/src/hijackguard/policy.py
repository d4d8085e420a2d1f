"""Enforcement primitives and the P1-P6 mandatory access control engine."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping, MutableMapping, Optional, Union

from .errors import (
    CallerUnrecoverable,
    HijackGuardError,
    IllegalEntry,
    NoAppCallerFound,
    UnknownCallee,
    UnknownComponent,
)
from .manifest import (
    AppIdentity,
    ComponentDecl,
    ComponentKind,
    ExportMode,
    ExportStatus,
    PermissionDecl,
    ProtectionLevel,
    resolve_export,
)
from .risk import PROVIDER_ENTRIES
from .syscatalog import SystemCatalog, is_custom_action

if TYPE_CHECKING:
    from .sim import DeviceModel, IpcRequest


# -- inputs ----------------------------------------------------------------

@dataclass(frozen=True)
class IntentInput:
    action: Optional[str] = None
    uri: Optional[str] = None
    categories: tuple[str, ...] = ()
    extras: Mapping[str, str] = field(default_factory=dict)

    kind = "intent"


@dataclass(frozen=True)
class ProviderCall:
    entry: str
    uri: str
    args: tuple[Optional[str], ...] = ()

    kind = "provider"

    def __post_init__(self):
        if self.entry not in PROVIDER_ENTRIES:
            raise IllegalEntry(f"{self.entry!r} is not a Provider entry")


@dataclass(frozen=True)
class BoundCall:
    interface: str
    args: tuple[str, ...] = ()

    kind = "bound"


IpcInput = Union[IntentInput, ProviderCall, BoundCall]


def input_to_json(inp: IpcInput) -> dict:
    if isinstance(inp, IntentInput):
        return {
            "kind": "intent",
            "action": inp.action,
            "uri": inp.uri,
            "categories": list(inp.categories),
            "extras": dict(inp.extras),
        }
    if isinstance(inp, ProviderCall):
        return {"kind": "provider", "uri": inp.uri, "args": list(inp.args)}
    return {"kind": "bound", "args": list(inp.args)}


def input_from_json(obj: Mapping, entry: str) -> IpcInput:
    kind = obj.get("kind", "intent")
    if kind == "intent":
        extras = obj.get("extras") or {}
        return IntentInput(
            action=obj.get("action"),
            uri=obj.get("uri"),
            categories=tuple(obj.get("categories") or ()),
            extras={str(k): str(v) for k, v in extras.items()},
        )
    if kind == "provider":
        return ProviderCall(entry, obj.get("uri", ""), tuple(obj.get("args") or ()))
    if kind == "bound":
        return BoundCall(entry, tuple(str(a) for a in obj.get("args") or ()))
    raise ValueError(f"unknown input kind {kind!r}")


# -- verdicts --------------------------------------------------------------

class Decision(enum.Enum):
    ALLOW = "allow"
    DENY = "deny"
    ALERT = "alert"


class Policy(enum.Enum):
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    P4 = "P4"
    P5 = "P5"
    P6 = "P6"


DENY_POLICIES = frozenset({Policy.P1, Policy.P2, Policy.P5, Policy.P6})
ALERT_POLICIES = frozenset({Policy.P3, Policy.P4})


@dataclass(frozen=True)
class Verdict:
    decision: Decision
    policy: Optional[Policy] = None
    detail: str = ""

    def __post_init__(self):
        if (self.decision is Decision.ALLOW) != (self.policy is None):
            raise ValueError("Allow carries no policy; Deny/Alert must name one")


ALLOW_TRUSTED = Verdict(Decision.ALLOW, None, "trusted caller")
ALLOW_DEFAULT = Verdict(Decision.ALLOW, None, "no policy matched")


# -- primitives ------------------------------------------------------------

@dataclass(frozen=True)
class Primitives:
    caller: AppIdentity
    callee: AppIdentity
    same_developer: bool
    component: ComponentDecl
    export: ExportStatus
    callee_perm: Optional[PermissionDecl]
    caller_claims_perm: bool
    input: IpcInput
    # the callee declared its guard at signature level but another app's
    # earlier definition now governs it
    perm_downgraded: bool = False

    @property
    def trusted(self) -> bool:
        return (
            self.caller.package == self.callee.package
            or self.same_developer
            or self.caller.is_system
        )


# system identity for broadcasts and calls with no app upstream
SYSTEM_IDENTITY = AppIdentity("android", "platform", 1000)

_INTENT_ENTRIES_DIRECT_CALLER = (ProviderCall, BoundCall)


def collect_primitives(req: "IpcRequest", device: "DeviceModel", log=None) -> Primitives:
    """Assemble primitives for ``req`` against ``device``.

    Intent-based entries recover the caller from ``log`` (defaults to the
    device's whole binder log); Provider and bound-interface calls read the
    caller identity directly.
    """
    app = device.app(req.callee_package)
    if app is None:
        raise UnknownCallee(f"package {req.callee_package!r} not installed")
    comp = app.manifest.component(req.callee_component)
    if comp is None:
        raise UnknownComponent(f"{req.callee_package}/{req.callee_component}")
    callee = app.identity

    if isinstance(req.input, _INTENT_ENTRIES_DIRECT_CALLER):
        caller = device.identity_of(req.caller_package)
    else:
        from .binderlog import callee_initiated, recover_caller

        log = device.binder_log if log is None else log
        try:
            if callee_initiated(log, app.pid, device.log_window):
                caller = callee
            else:
                recovered = recover_caller(
                    log, app.pid, device.pid_map, device.catalog, window=device.log_window
                )
                caller = device.identity_of(recovered.package)
        except NoAppCallerFound:
            caller = SYSTEM_IDENTITY
        except HijackGuardError as exc:
            raise CallerUnrecoverable(str(exc)) from exc

    same_dev = bool(caller.signature) and caller.signature == callee.signature

    callee_perm, claims, downgraded = None, False, False
    guard = comp.permission_guard
    if guard:
        sys_perm = device.catalog.sys_perm(guard)
        if sys_perm is not None:
            callee_perm = sys_perm
        else:
            owned = device.permission_registry.get(guard)
            if owned is not None:
                owner, callee_perm = owned
                claims = owner == caller.package and owner != callee.package
                declared = app.manifest.defined_permission(guard)
                downgraded = (
                    declared is not None
                    and declared.level is ProtectionLevel.SIGNATURE
                    and callee_perm.level is not ProtectionLevel.SIGNATURE
                )

    return Primitives(
        caller=caller,
        callee=callee,
        same_developer=same_dev,
        component=comp,
        export=resolve_export(comp, app.manifest.target_sdk),
        callee_perm=callee_perm,
        caller_claims_perm=claims,
        input=req.input,
        perm_downgraded=downgraded,
    )


# -- injection / traversal filters -----------------------------------------

_FROM_CLAUSE = re.compile(r"\bfrom\s+[A-Za-z_][A-Za-z0-9_.]*\s*;", re.IGNORECASE)
_STACKED = re.compile(r";\s*(select|drop|insert|update|delete)\b", re.IGNORECASE)
# a ".." path segment, with either dot or separator optionally percent-encoded
_SEP = r"(?:[/\\]|%2f|%5c)"
_TRAVERSAL = re.compile(rf"(?:^|{_SEP})(?:\.|%2e){{2}}(?:{_SEP}|$)", re.IGNORECASE)


def match_injection(arg: str) -> bool:
    return bool(_FROM_CLAUSE.search(arg) or _STACKED.search(arg))


def match_traversal(path: str) -> bool:
    return bool(_TRAVERSAL.search(path))


# -- predicates ------------------------------------------------------------

def _p1(p: Primitives, cat: SystemCatalog) -> bool:
    return p.component.kind is ComponentKind.PROVIDER and p.component.raw_exported is None


def _p2(p: Primitives, cat: SystemCatalog) -> bool:
    perm = p.callee_perm
    if perm is None or cat.is_sys_perm(perm.name):
        return False
    return p.caller_claims_perm or p.perm_downgraded


def _p3(p: Primitives, cat: SystemCatalog) -> bool:
    if p.component.kind is ComponentKind.PROVIDER or p.export.mode is not ExportMode.IMPLICIT:
        return False
    return any(is_custom_action(a, cat) for a in p.component.actions)


def _p4(p: Primitives, cat: SystemCatalog) -> bool:
    return p.component.kind is ComponentKind.PROVIDER and p.component.raw_exported is True


def _p5(p: Primitives, cat: SystemCatalog) -> bool:
    if p.component.kind is not ComponentKind.RECEIVER or not isinstance(p.input, IntentInput):
        return False
    sys_only = [a for a in p.component.actions if a in cat.sys_only_actions]
    return bool(sys_only) and p.input.action not in sys_only


def _p6(p: Primitives, cat: SystemCatalog) -> bool:
    if p.component.kind is not ComponentKind.PROVIDER or not isinstance(p.input, ProviderCall):
        return False
    if any(isinstance(a, str) and match_injection(a) for a in p.input.args):
        return True
    if p.input.entry == "openFile":
        return match_traversal(p.input.uri) or any(
            isinstance(a, str) and match_traversal(a) for a in p.input.args
        )
    return False


# Denies before alerts. P6 leads the denies: an input-level attack match is
# the most specific explanation and must not be masked by P1 on the same
# by-default exported Provider.
EVALUATION_ORDER = (
    (Policy.P6, Decision.DENY, _p6, "attack pattern in provider input"),
    (Policy.P1, Decision.DENY, _p1, "provider exported by default"),
    (Policy.P2, Decision.DENY, _p2, "custom permission pre-claimed by caller"),
    (Policy.P5, Decision.DENY, _p5, "input action is not the declared system-only action"),
    (Policy.P3, Decision.ALERT, _p3, "implicitly exported component with custom action"),
    (Policy.P4, Decision.ALERT, _p4, "explicitly exported provider"),
)


def applicable_policies(p: Primitives, cat: SystemCatalog) -> frozenset[Policy]:
    """Every policy whose predicate holds, ignoring the trust rule and order."""
    return frozenset(pol for pol, _, pred, _ in EVALUATION_ORDER if pred(p, cat))


def evaluate(
    p: Primitives,
    cat: SystemCatalog,
    trace: Optional[MutableMapping[str, int]] = None,
) -> Verdict:
    """Return the first matching verdict; trusted callers skip every predicate.

    ``trace``, when given, counts each predicate consulted under
    ``"predicates"``.
    """
    if p.trusted:
        return ALLOW_TRUSTED
    for pol, decision, pred, detail in EVALUATION_ORDER:
        if trace is not None:
            trace["predicates"] = trace.get("predicates", 0) + 1
        if pred(p, cat):
            return Verdict(decision, pol, detail)
    return ALLOW_DEFAULT
