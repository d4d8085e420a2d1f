"""Exception hierarchy shared by every hijackguard module."""

from __future__ import annotations


class HijackGuardError(Exception):
    """Base class for all errors raised by this package."""


# manifest / catalog documents

class MalformedDocument(HijackGuardError):
    pass


class DuplicateComponent(MalformedDocument):
    pass


class FilterWithoutAction(MalformedDocument):
    pass


class SysOnlyNotSubset(MalformedDocument):
    pass


# binder logs

class MalformedLine(HijackGuardError):
    def __init__(self, line_no: int, text: str = ""):
        self.line_no = line_no
        self.text = text
        super().__init__(f"malformed transaction_log line {line_no}: {text!r}")


class NonMonotoneTxid(HijackGuardError):
    def __init__(self, line_no: int, txid: int, previous: int):
        self.line_no = line_no
        super().__init__(
            f"line {line_no}: txid {txid} does not follow previous txid {previous}"
        )


class CalleeNotInLog(HijackGuardError):
    pass


class NoAppCallerFound(HijackGuardError):
    """Every upstream participant is a system process."""


# device model / dispatch

class DuplicatePackage(HijackGuardError):
    pass


class UnknownCallee(HijackGuardError):
    pass


class UnknownComponent(UnknownCallee):
    pass


class UnknownCaller(HijackGuardError):
    pass


class IllegalEntry(HijackGuardError):
    pass


class UnknownPid(HijackGuardError):
    pass


class CallerUnrecoverable(HijackGuardError):
    pass
