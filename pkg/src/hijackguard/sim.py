"""Device model and simulated inter-component IPC dispatch.

A single-threaded, seeded simulator: apps are installed in order, each
dispatched request emits a synthetic Binder chain (caller, 0-3 system relay
hops, callee) interleaved with background traffic, the callee-side guard
recovers the caller from that log, evaluates the policies, and applies the
verdict with alert/timeout/replay semantics.
"""

from __future__ import annotations

import enum
import json
import random
import select
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from .binderlog import DEFAULT_WINDOW, BinderTransaction, ProcessEntry, ProcessTable
from .errors import (
    DuplicatePackage,
    HijackGuardError,
    IllegalEntry,
    UnknownCallee,
    UnknownCaller,
    UnknownComponent,
    UnknownPid,
)
from .manifest import SYSTEM_UID_LIMIT, AppIdentity, AppManifest, ComponentKind, load_manifest
from .policy import (
    SYSTEM_IDENTITY,
    BoundCall,
    Decision,
    IntentInput,
    IpcInput,
    ProviderCall,
    Verdict,
    collect_primitives,
    evaluate,
    input_from_json,
)
from .risk import PROVIDER_ENTRIES, entry_functions
from .syscatalog import SystemCatalog, default_catalog

SYSTEM_PROCESSES = {
    1100: ProcessEntry(1000, "servicemanager"),
    1203: ProcessEntry(1000, "surfaceflinger"),
    1307: ProcessEntry(1013, "mediaserver"),
    1500: ProcessEntry(1000, "system_server"),
}
SYSTEM_SERVER_PID = 1500
RELAY_PIDS = (1203, 1500, 1100, 1307)
FIRST_APP_PID = 6700
APP_PID_STEP = 67
FIRST_APP_UID = SYSTEM_UID_LIMIT
FIRST_TXID = 177000
FIRST_BINDER_TID = 20000
MAX_HOPS = 3
MAX_NOISE_CHAINS = 2

TIME_SENSITIVE_ENTRIES = frozenset({"onCreate", "onStart", "onNewIntent", "onReceive"})


@dataclass
class InstalledApp:
    manifest: AppManifest
    identity: AppIdentity
    pid: int


class DeviceModel:
    def __init__(
        self,
        catalog: Optional[SystemCatalog] = None,
        seed: int = 0,
        log_window: int = DEFAULT_WINDOW,
    ):
        self.catalog = catalog if catalog is not None else default_catalog()
        self.installed: list[InstalledApp] = []
        self.pid_map = ProcessTable(SYSTEM_PROCESSES)
        self.binder_log: list[BinderTransaction] = []
        self.permission_registry: dict[str, tuple[str, object]] = {}
        self.log_window = log_window
        self.rng = random.Random(seed)
        self._by_package: dict[str, InstalledApp] = {}
        self._next_txid = FIRST_TXID
        self._next_tid = FIRST_BINDER_TID
        self._next_node = 1

    # lookups

    def app(self, package: str) -> Optional[InstalledApp]:
        return self._by_package.get(package)

    def identity_of(self, package: str) -> AppIdentity:
        if package == SYSTEM_IDENTITY.package:
            return SYSTEM_IDENTITY
        app = self._by_package.get(package)
        if app is None:
            raise UnknownCaller(f"package {package!r} not installed")
        return app.identity

    def pid_of(self, package: str) -> int:
        if package == SYSTEM_IDENTITY.package:
            return SYSTEM_SERVER_PID
        app = self._by_package.get(package)
        if app is None:
            raise UnknownCaller(f"package {package!r} not installed")
        return app.pid

    def snapshot(self) -> tuple[BinderTransaction, ...]:
        return tuple(self.binder_log)

    # mutation

    def install(self, m: AppManifest) -> "DeviceModel":
        return install(self, m)

    def fresh_tid(self) -> int:
        tid = self._next_tid
        self._next_tid += 1
        return tid


def install(device: DeviceModel, m: AppManifest) -> DeviceModel:
    if m.package in device._by_package or m.package == SYSTEM_IDENTITY.package:
        raise DuplicatePackage(f"{m.package} already installed")
    n = len(device.installed)
    uid = FIRST_APP_UID + n
    pid = FIRST_APP_PID + APP_PID_STEP * n
    identity = AppIdentity(m.package, m.identity.signature, uid)
    app = InstalledApp(m, identity, pid)
    device.installed.append(app)
    device._by_package[m.package] = app
    device.pid_map[pid] = ProcessEntry(uid, m.package)
    for perm in m.defined_permissions:
        if perm.name not in device.permission_registry and not device.catalog.is_sys_perm(perm.name):
            device.permission_registry[perm.name] = (m.package, perm)
    return device


# -- synthetic binder traffic ----------------------------------------------

# (action, from_pid, from_tid, to_pid, to_tid)
PendingTx = tuple[str, int, int, int, int]


def build_chain(
    device: DeviceModel,
    caller_pid: int,
    callee_pid: int,
    hops: int,
    via: Optional[Sequence[int]] = None,
    rng: Optional[random.Random] = None,
) -> list[PendingTx]:
    """Calls caller -> relays -> callee, then the replies back down the chain."""
    if not 0 <= hops <= MAX_HOPS:
        raise ValueError(f"hops must be in [0, {MAX_HOPS}], got {hops}")
    for pid in (caller_pid, callee_pid, *(via or ())):
        if pid not in device.pid_map:
            raise UnknownPid(f"pid {pid} not in process table")
    if via is None:
        candidates = [p for p in RELAY_PIDS if p not in (caller_pid, callee_pid)]
        via = (rng or device.rng).sample(candidates, hops)
    elif len(via) != hops:
        raise ValueError("len(via) must equal hops")
    path = [caller_pid, *via, callee_pid]
    # the caller issues from its main thread; every relay and the callee
    # handle the call on a fresh Binder thread
    tids = [caller_pid] + [device.fresh_tid() for _ in path[1:]]
    calls = [("call", path[i], tids[i], path[i + 1], tids[i + 1]) for i in range(len(path) - 1)]
    replies = [
        ("reply", path[i + 1], tids[i + 1], path[i], tids[i]) for i in reversed(range(len(path) - 1))
    ]
    return calls + replies


def interleave(chains: Sequence[Sequence[PendingTx]], rng: random.Random) -> list[tuple[int, PendingTx]]:
    """Uniformly random merge that preserves each chain's internal order."""
    pos = [0] * len(chains)
    remaining = [len(c) for c in chains]
    out = []
    while any(remaining):
        pick = rng.randrange(sum(remaining))
        for i, r in enumerate(remaining):
            if pick < r:
                break
            pick -= r
        out.append((i, chains[i][pos[i]]))
        pos[i] += 1
        remaining[i] -= 1
    return out


def commit(device: DeviceModel, pending: Sequence[PendingTx]) -> list[BinderTransaction]:
    appended = []
    for action, fp, ft, tp, tt in pending:
        tx = BinderTransaction(device._next_txid, action, fp, ft, tp, tt, f"node {device._next_node}")
        device._next_txid += 1
        device._next_node += 1
        device.binder_log.append(tx)
        appended.append(tx)
    return appended


def emit_binder_chain(
    device: DeviceModel,
    caller_pid: int,
    callee_pid: int,
    hops: int,
    via: Optional[Sequence[int]] = None,
) -> list[BinderTransaction]:
    return commit(device, build_chain(device, caller_pid, callee_pid, hops, via))


def emit_interleaved(
    device: DeviceModel, chains: Sequence[Sequence[PendingTx]]
) -> tuple[list[BinderTransaction], list[int]]:
    """Commit several chains interleaved; returns the slice and a chain label per tx."""
    merged = interleave(chains, device.rng)
    return commit(device, [tx for _, tx in merged]), [i for i, _ in merged]


# -- user decisions --------------------------------------------------------

class OracleMode(enum.Enum):
    ALWAYS_ALLOW = "allow"
    ALWAYS_DENY = "deny"
    SCRIPTED = "script"
    PROMPT = "prompt"


def _stdin_prompt(message: str, timeout_s: float) -> Optional[bool]:
    sys.stderr.write(f"{message} [a]llow/[d]eny ({timeout_s:g}s): ")
    sys.stderr.flush()
    ready, _, _ = select.select([sys.stdin], [], [], timeout_s)
    if not ready:
        sys.stderr.write("timeout\n")
        return None
    answer = sys.stdin.readline().strip().lower()
    return answer in ("a", "allow", "y", "yes")


@dataclass
class DecisionOracle:
    """Stands in for the user's answer to an alert dialog.

    ``decide`` returns True (allow), False (deny) or None (timeout). An
    exhausted script behaves as a timeout.
    """

    mode: OracleMode = OracleMode.ALWAYS_DENY
    script: list[bool] = field(default_factory=list)
    timeout_s: int = 30
    prompt_fn: Callable[[str, float], Optional[bool]] = _stdin_prompt

    def decide(self, req: "IpcRequest", verdict: Verdict) -> Optional[bool]:
        if self.mode is OracleMode.ALWAYS_ALLOW:
            return True
        if self.mode is OracleMode.ALWAYS_DENY:
            return False
        if self.mode is OracleMode.SCRIPTED:
            return self.script.pop(0) if self.script else None
        msg = (
            f"{req.caller_package} -> {req.callee_package}/{req.callee_component}."
            f"{req.entry} ({verdict.policy.value}: {verdict.detail})"
        )
        return self.prompt_fn(msg, self.timeout_s)

    @classmethod
    def parse(cls, spec) -> "DecisionOracle":
        """Accepts 'allow', 'deny', 'prompt', 'script:FILE' or {'script': [...]}."""
        if isinstance(spec, Mapping):
            return cls(OracleMode.SCRIPTED, [_as_decision(v) for v in spec["script"]])
        if spec.startswith("script:"):
            text = Path(spec[len("script:"):]).read_text(encoding="utf-8")
            return cls(OracleMode.SCRIPTED, [_as_decision(t) for t in text.split()])
        return cls(OracleMode(spec))


def _as_decision(v) -> bool:
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("allow", "true", "yes"):
        return True
    if str(v).lower() in ("deny", "false", "no"):
        return False
    raise ValueError(f"bad scripted decision {v!r}")


# -- dispatch --------------------------------------------------------------

@dataclass(frozen=True)
class IpcRequest:
    caller_package: str
    callee_package: str
    callee_component: str
    entry: str
    input: IpcInput
    origin_flag: Optional[str] = None  # reserved, not enforced
    hops: Optional[int] = None


@dataclass
class DispatchOutcome:
    verdict: Verdict
    executed: bool
    replayed: bool = False
    user_decision: Optional[bool] = None
    caller: Optional[AppIdentity] = None
    replay_input: Optional[IpcInput] = None
    trace: list[BinderTransaction] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict.decision.value,
            "policy": self.verdict.policy.value if self.verdict.policy else None,
            "executed": self.executed,
            "replayed": self.replayed,
        }


def _check_entry(req: IpcRequest, comp) -> None:
    kind = comp.kind
    if req.entry not in entry_functions(comp):
        raise IllegalEntry(f"{req.entry!r} is not an entry of {req.callee_component} ({kind.value})")
    if req.entry in PROVIDER_ENTRIES and kind is ComponentKind.PROVIDER:
        ok = isinstance(req.input, ProviderCall) and req.input.entry == req.entry
    elif req.entry in comp.bound_interfaces:
        ok = isinstance(req.input, BoundCall) and req.input.interface == req.entry
    else:
        ok = isinstance(req.input, IntentInput)
    if not ok:
        raise IllegalEntry(f"{type(req.input).__name__} input cannot enter {req.entry}")


def _noise_chains(device: DeviceModel, callee_pid: int) -> list[list[PendingTx]]:
    senders = [p for p in device.pid_map if p != callee_pid]
    chains = []
    for _ in range(device.rng.randint(0, MAX_NOISE_CHAINS)):
        src = device.rng.choice(senders)
        targets = [a.pid for a in device.installed if a.pid not in (callee_pid, src)]
        if not targets:
            break
        dst = device.rng.choice(targets)
        chains.append(build_chain(device, src, dst, device.rng.randint(0, MAX_HOPS)))
    return chains


def dispatch(device: DeviceModel, req: IpcRequest, oracle: DecisionOracle) -> DispatchOutcome:
    app = device.app(req.callee_package)
    if app is None:
        raise UnknownCallee(f"package {req.callee_package!r} not installed")
    comp = app.manifest.component(req.callee_component)
    if comp is None:
        raise UnknownComponent(f"{req.callee_package}/{req.callee_component}")
    _check_entry(req, comp)

    caller_pid = device.pid_of(req.caller_package)
    hops = req.hops if req.hops is not None else device.rng.randint(0, MAX_HOPS)
    chains = [build_chain(device, caller_pid, app.pid, hops)] + _noise_chains(device, app.pid)
    window, _ = emit_interleaved(device, chains)

    prims = collect_primitives(req, device, log=window)
    verdict = evaluate(prims, device.catalog)
    out = DispatchOutcome(verdict, executed=False, caller=prims.caller, trace=window)

    if verdict.decision is Decision.ALLOW:
        out.executed = True
    elif verdict.decision is Decision.ALERT:
        decision = oracle.decide(req, verdict)
        out.user_decision = decision
        if req.entry in TIME_SENSITIVE_ENTRIES:
            # returned to the component as denied; a later allow re-sends
            # the same content on the caller's behalf
            if decision is True:
                out.replayed = True
                out.executed = True
                out.replay_input = req.input
        else:
            out.executed = decision is True
    return out


# -- scenario files --------------------------------------------------------

def request_from_json(obj: Mapping) -> IpcRequest:
    entry = obj["entry"]
    return IpcRequest(
        caller_package=obj["caller"],
        callee_package=obj["callee"],
        callee_component=obj["component"],
        entry=entry,
        input=input_from_json(obj.get("input") or {}, entry),
        origin_flag=obj.get("origin_flag"),
        hops=obj.get("hops"),
    )


def run_scenario(
    scenario: Mapping,
    base_dir: Path = Path("."),
    seed: Optional[int] = None,
    oracle: Optional[DecisionOracle] = None,
    catalog: Optional[SystemCatalog] = None,
) -> tuple[list[dict], bool]:
    """Run every request; returns (outcome records, all_ok)."""
    device = DeviceModel(catalog, seed=scenario.get("seed", 0) if seed is None else seed)
    for path in scenario.get("installs", []):
        install(device, load_manifest(base_dir / path))

    records, ok = [], True
    for i, obj in enumerate(scenario.get("requests", [])):
        head = {"id": obj["id"]} if "id" in obj else {}
        try:
            req = request_from_json(obj)
            o = oracle if oracle is not None else DecisionOracle.parse(obj.get("oracle", "deny"))
            records.append({**head, **dispatch(device, req, o).to_json()})
        except (HijackGuardError, KeyError, ValueError, TypeError) as exc:
            ok = False
            records.append({**head, "request": i, "error": f"{type(exc).__name__}: {exc}"})
    return records, ok


def load_scenario(path: str | Path) -> tuple[dict, Path]:
    path = Path(path)
    return json.loads(path.read_text(encoding="utf-8")), path.parent


def outcome_lines(records: Sequence[dict]) -> str:
    return "".join(json.dumps(r, separators=(", ", ": ")) + "\n" for r in records)
