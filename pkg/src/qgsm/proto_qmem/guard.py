"""Consumption accounting against memory-exhaustion requests."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ..runtime import WindowRequest
from .memory import QuantumMemoryBank


@dataclass(frozen=True)
class GuardStatus:
    remaining: int
    window_usage: int
    rate_exceeded: bool

    @property
    def flag(self) -> str:
        return "RateExceeded" if self.rate_exceeded else "Ok"


class DepletionGuard:
    """Tracks window requests per logical tick and flags bursts.

    A burst is more than ``max_positions`` positions requested within the
    last ``span`` ticks.  Ticks are supplied by the caller or count requests.
    With ``block`` set, a request that would exceed the rate is refused
    instead of being served.
    """

    def __init__(self, bank: QuantumMemoryBank, max_positions: int = 100, span: int = 10, block: bool = False):
        if max_positions < 1 or span < 1:
            raise ValueError("max_positions and span must be >= 1")
        self.bank = bank
        self.max_positions = max_positions
        self.span = span
        self.block = block
        self.log: list[tuple[int, WindowRequest]] = []
        self._recent: deque[tuple[int, int]] = deque()
        self._tick = 0

    def _usage(self, tick: int) -> int:
        while self._recent and self._recent[0][0] <= tick - self.span:
            self._recent.popleft()
        return sum(m for _, m in self._recent)

    def status(self, tick: int | None = None) -> GuardStatus:
        tick = self._tick if tick is None else tick
        usage = self._usage(tick)
        return GuardStatus(self.bank.remaining, usage, usage > self.max_positions)

    def admit(self, request: WindowRequest, tick: int | None = None) -> GuardStatus:
        """Check a request, log it, and report the rate verdict.

        Reuse of consumed cells always raises, whatever the rate.
        """
        tick = self._tick + 1 if tick is None else tick
        if tick < self._tick:
            raise ValueError("ticks must not go backwards")
        self._tick = tick
        self.bank.check_window(request)
        usage = self._usage(tick) + request.m
        exceeded = usage > self.max_positions
        if exceeded and self.block:
            return GuardStatus(self.bank.remaining, usage - request.m, True)
        self._recent.append((tick, request.m))
        self.log.append((tick, request))
        return GuardStatus(self.bank.remaining, usage, exceeded)


__all__ = ["DepletionGuard", "GuardStatus"]
