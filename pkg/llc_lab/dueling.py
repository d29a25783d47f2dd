"""
Set dueling between two insertion behaviours.

SetDuel dedicates leader sets to each constituency and steers followers with a
saturating PSEL counter. Caches too small to spare leader sets use ShadowDuel,
which runs both constituent policies on private shadow caches fed every access.
"""
from __future__ import annotations

import logging

from ._data import LEADER_SETS, PSEL_BITS
from ._errors import InvalidSpecError
from .engine import HIT, Cache

logger = logging.getLogger(__name__)

A = 0
B = 1


class _Psel:
    __slots__ = ("value", "max", "mid")

    def __init__(self, bits: int) -> None:
        if bits < 1:
            raise InvalidSpecError(f"PSEL width must be >= 1 bit, got {bits}")
        self.max = (1 << bits) - 1
        self.mid = 1 << (bits - 1)
        self.value = self.mid

    def a_missed(self) -> None:
        if self.value < self.max:
            self.value += 1

    def b_missed(self) -> None:
        if self.value > 0:
            self.value -= 1

    @property
    def winner(self) -> int:
        return B if self.value > self.mid else A


class SetDuel:
    """Leader sets evenly strided through the cache; constituency B sits half a stride after A."""

    __slots__ = ("psel", "leader_sets_a", "leader_sets_b", "_role", "_last_winner")

    def __init__(self, num_sets: int, leaders: int = LEADER_SETS, psel_bits: int = PSEL_BITS) -> None:
        if leaders < 1 or num_sets < 2 * leaders:
            raise InvalidSpecError(f"{num_sets} sets cannot host 2 x {leaders} leader sets")
        stride = num_sets // leaders
        self.psel = _Psel(psel_bits)
        self.leader_sets_a = [i * stride for i in range(leaders)]
        self.leader_sets_b = [i * stride + stride // 2 for i in range(leaders)]
        self._role: dict[int, int] = {s: A for s in self.leader_sets_a}
        self._role.update({s: B for s in self.leader_sets_b})
        self._last_winner = A

    def observe(self, access) -> None:
        pass

    def record_miss(self, set_index: int) -> None:
        role = self._role.get(set_index)
        if role == A:
            self.psel.a_missed()
        elif role == B:
            self.psel.b_missed()

    def choice(self, set_index: int) -> int:
        role = self._role.get(set_index)
        if role is not None:
            return role
        winner = self.psel.winner
        if winner != self._last_winner:
            logger.debug("set duel: followers switch to %s (psel=%d)", "AB"[winner], self.psel.value)
            self._last_winner = winner
        return winner

    def is_leader(self, set_index: int) -> bool:
        return set_index in self._role


class ShadowDuel:
    """Both constituencies shadow the whole access stream; every real set is a follower."""

    __slots__ = ("psel", "_caches")

    def __init__(self, geometry, policy_a, policy_b, rng, psel_bits: int = PSEL_BITS) -> None:
        self.psel = _Psel(psel_bits)
        self._caches = (Cache(geometry, policy_a, rng.fork()), Cache(geometry, policy_b, rng.fork()))

    def observe(self, access) -> None:
        a, b = self._caches
        if a.access(access) != HIT:
            self.psel.a_missed()
        if b.access(access) != HIT:
            self.psel.b_missed()

    def record_miss(self, set_index: int) -> None:
        pass

    def choice(self, set_index: int) -> int:
        return self.psel.winner

    def is_leader(self, set_index: int) -> bool:
        return False


def make_duel(geometry, make_a, make_b, rng, leaders: int = LEADER_SETS, psel_bits: int = PSEL_BITS):
    """SetDuel when the cache has room for the leader sets, ShadowDuel otherwise."""
    if geometry.num_sets >= 2 * leaders:
        return SetDuel(geometry.num_sets, leaders, psel_bits)
    logger.debug("%s too small for %d leader sets per side; dueling on shadow caches", geometry, leaders)
    return ShadowDuel(geometry, make_a(), make_b(), rng, psel_bits)
