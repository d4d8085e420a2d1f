"""Binder ``transaction_log`` parsing and caller-identity recovery.

Line grammar (one transaction per line)::

    <txid>: <action> from <pid>:<tid> to <pid>:<tid> <node_info>

Process table grammar: ``pid uid package`` per line, ``#`` comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import CalleeNotInLog, MalformedDocument, MalformedLine, NoAppCallerFound, NonMonotoneTxid
from .manifest import SYSTEM_UID_LIMIT, AppIdentity
from .syscatalog import SystemCatalog

DEFAULT_WINDOW = 128
REPLY = "reply"

_LINE_RE = re.compile(
    r"^(?P<txid>\d+): (?P<action>[A-Za-z_]+) "
    r"from (?P<fp>\d+):(?P<ft>\d+) to (?P<tp>\d+):(?P<tt>\d+)(?: (?P<node>.*))?$"
)


@dataclass(frozen=True)
class BinderTransaction:
    txid: int
    action: str
    from_pid: int
    from_tid: int
    to_pid: int
    to_tid: int
    node_info: str = ""

    @property
    def source(self) -> tuple[int, int]:
        return (self.from_pid, self.from_tid)

    @property
    def target(self) -> tuple[int, int]:
        return (self.to_pid, self.to_tid)

    def format(self) -> str:
        line = (
            f"{self.txid}: {self.action} from {self.from_pid}:{self.from_tid} "
            f"to {self.to_pid}:{self.to_tid}"
        )
        return f"{line} {self.node_info}" if self.node_info else line


@dataclass(frozen=True)
class ProcessEntry:
    uid: int
    package: str


class ProcessTable(dict):
    """pid -> ProcessEntry."""


def parse_transaction_log(text: str) -> list[BinderTransaction]:
    out: list[BinderTransaction] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        m = _LINE_RE.match(line.rstrip("\r"))
        if m is None:
            raise MalformedLine(lineno, line)
        pids = [int(m[g]) for g in ("fp", "ft", "tp", "tt")]
        if min(pids) <= 0:
            raise MalformedLine(lineno, line)
        tx = BinderTransaction(int(m["txid"]), m["action"], *pids, m["node"] or "")
        if out and tx.txid <= out[-1].txid:
            raise NonMonotoneTxid(lineno, tx.txid, out[-1].txid)
        out.append(tx)
    return out


def format_transaction_log(log: Iterable[BinderTransaction]) -> str:
    return "".join(tx.format() + "\n" for tx in log)


def parse_process_table(text: str) -> ProcessTable:
    table = ProcessTable()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 3:
            raise MalformedDocument(f"process table line {lineno}: expected 'pid uid package'")
        try:
            pid, uid = int(fields[0]), int(fields[1])
        except ValueError:
            raise MalformedDocument(f"process table line {lineno}: non-numeric pid/uid") from None
        if pid in table:
            raise MalformedDocument(f"process table line {lineno}: duplicate pid {pid}")
        table[pid] = ProcessEntry(uid, fields[2])
    return table


def is_system_process(pid: int, procs: Mapping[int, ProcessEntry], cat: SystemCatalog) -> bool:
    entry = procs.get(pid)
    if entry is None:
        # unknown processes cannot be attributed to an app
        return True
    return entry.uid < SYSTEM_UID_LIMIT or entry.package in cat.system_binaries


def _inbound(
    log: Sequence[BinderTransaction], before: int, lo: int, endpoint: tuple[int, int], pid_only_ok: bool
):
    """Nearest non-reply transaction into ``endpoint`` at index < ``before``.

    Matches the exact pid:tid. The callee's entry functions often run on a
    different thread than the Binder thread that received the call, so for
    the callee hop a pid-only match is accepted as a fallback. Relays forward
    on the receiving thread.
    """
    pid_only = None
    for j in range(before - 1, lo - 1, -1):
        tx = log[j]
        if tx.action == REPLY or tx.to_pid != endpoint[0]:
            continue
        if tx.to_tid == endpoint[1]:
            return j
        if pid_only_ok and pid_only is None:
            pid_only = j
    return pid_only


def locate_first_from(log: Sequence[BinderTransaction], callee_pid: int) -> int:
    for i, tx in enumerate(log):
        if tx.from_pid == callee_pid:
            return i
    raise CalleeNotInLog(f"pid {callee_pid} never appears as a sender")


def callee_initiated(
    log: Sequence[BinderTransaction], callee_pid: int, window: int = DEFAULT_WINDOW
) -> bool:
    """True when no call reached ``callee_pid`` before its first outgoing transaction.

    That shape is an IPC the callee's own process started, i.e. an intra-app call.
    """
    idx = locate_first_from(log, callee_pid)
    lo = max(0, idx - window + 1)
    return not any(tx.to_pid == callee_pid and tx.action != REPLY for tx in log[lo:idx])


def recover_caller(
    log: Sequence[BinderTransaction],
    callee_pid: int,
    procs: Mapping[int, ProcessEntry],
    cat: SystemCatalog,
    window: int = DEFAULT_WINDOW,
) -> AppIdentity:
    """Identify the app process that initiated the call reaching ``callee_pid``.

    Locates the callee's first outgoing transaction, then follows inbound call
    links upstream through system processes until an app process is found.
    When a link is missing the search degrades to a nearest-first scan over
    both participants of earlier transactions.
    """
    idx = locate_first_from(log, callee_pid)
    lo = max(0, idx - window + 1)

    def app_pid(pid: int) -> bool:
        return pid != callee_pid and not is_system_process(pid, procs, cat)

    endpoint = log[idx].source
    pos = idx
    while True:
        # j < pos on every step, so the walk terminates
        j = _inbound(log, pos, lo, endpoint, pid_only_ok=pos == idx)
        if j is None:
            break
        upstream = log[j].from_pid
        if app_pid(upstream):
            return _identity(procs, upstream)
        endpoint, pos = log[j].source, j

    for j in range(pos - 1, lo - 1, -1):
        tx = log[j]
        for pid in (tx.to_pid, tx.from_pid):
            if app_pid(pid):
                return _identity(procs, pid)
    raise NoAppCallerFound(f"no app process upstream of pid {callee_pid}")


def _identity(procs: Mapping[int, ProcessEntry], pid: int) -> AppIdentity:
    e = procs[pid]
    return AppIdentity(e.package, "", e.uid)

