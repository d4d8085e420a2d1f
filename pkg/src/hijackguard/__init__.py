"""hijackguard: in-app mandatory access control against Android component hijacking."""

from .errors import HijackGuardError
from .manifest import (
    AppIdentity,
    AppManifest,
    ComponentDecl,
    ComponentKind,
    ExportMode,
    ExportStatus,
    IntentFilterDecl,
    PermissionDecl,
    ProtectionLevel,
    parse_manifest,
    resolve_export,
)
from .policy import Decision, Policy, Verdict, evaluate, match_injection
from .risk import entry_functions, estimate_stub_lines, identify_risky
from .syscatalog import SystemCatalog, default_catalog, is_custom_action, load_catalog

__version__ = "0.1.0"

__all__ = [
    "AppIdentity",
    "AppManifest",
    "ComponentDecl",
    "ComponentKind",
    "Decision",
    "ExportMode",
    "ExportStatus",
    "HijackGuardError",
    "IntentFilterDecl",
    "PermissionDecl",
    "Policy",
    "ProtectionLevel",
    "SystemCatalog",
    "Verdict",
    "default_catalog",
    "entry_functions",
    "estimate_stub_lines",
    "evaluate",
    "identify_risky",
    "is_custom_action",
    "load_catalog",
    "match_injection",
    "parse_manifest",
    "resolve_export",
]
