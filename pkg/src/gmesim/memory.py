"""Cache-coherent shared memory with remote-memory-reference accounting.

Models a single global memory module plus one local cache per process.
A read hits the cache when the register is validly cached (0 RMR) and
otherwise fetches from global memory (1 RMR) and fills the cache.  A
write always goes to global memory (1 RMR) and invalidates every other
process's cached copy; the writer's own cache keeps a valid copy of the
new value, so re-reading a register you just wrote is free.

Caches never evict: a cached register stays cached until some other
process writes it.  There is no capacity, latency, or DSM modeling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from .errors import KindMismatchError, StaleHandleError, UnknownRegisterError

# Token / GlobalColor colors.  BOTTOM is the "no color yet" marker.
BLACK = "black"
WHITE = "white"
BOTTOM = "bottom"

# Register value kinds.
KIND_INT = "int"
KIND_BOOL = "bool"
KIND_COLOR = "color"
KIND_TRIPLE = "triple"  # (session, color, number), read/written atomically


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def check_kind(kind: str, v: Any) -> bool:
    """True iff value v is a well-formed cell value of the given kind."""
    if kind == KIND_INT:
        return _is_int(v)
    if kind == KIND_BOOL:
        return isinstance(v, bool)
    if kind == KIND_COLOR:
        return v in (BLACK, WHITE, BOTTOM)
    if kind == KIND_TRIPLE:
        return (
            isinstance(v, tuple)
            and len(v) == 3
            and _is_int(v[0])
            and v[0] >= 0
            and v[1] in (BLACK, WHITE, BOTTOM)
            and _is_int(v[2])
            and v[2] >= 0
        )
    return False


@dataclass(frozen=True)
class RegisterId:
    """A register family name plus an index when the family is an array.

    Scalar registers (GlobalColor) carry index None; array registers
    carry a 1-based process index.
    """

    family: str
    index: Optional[int] = None

    def __str__(self) -> str:
        if self.index is None:
            return self.family
        return f"{self.family}[{self.index}]"


@dataclass(frozen=True)
class RegisterDecl:
    """Declaration of one register family: kind, arity, and initial value."""

    family: str
    kind: str
    count: Optional[int]  # None for a scalar register
    initial: Any

    def ids(self):
        if self.count is None:
            yield RegisterId(self.family)
        else:
            for i in range(1, self.count + 1):
                yield RegisterId(self.family, i)


@dataclass(frozen=True)
class MemSnapshot:
    """Bit-exact capture of store, caches, and RMR totals."""

    fingerprint: Any
    store: tuple
    caches: tuple  # per process: tuple of (slot, value) pairs
    totals: tuple


class Memory:
    """Global store + per-process caches + per-process RMR totals.

    Slots are resolved once from RegisterId to a dense integer index;
    the algorithm step machines use the slot-level entry points directly.
    """

    __slots__ = ("n", "decls", "names", "kinds", "slot_of", "store", "caches", "totals", "access_count", "_fingerprint")

    def __init__(self, n: int, decls: list[RegisterDecl]):
        self.n = n
        self.decls = list(decls)
        self.names: list[str] = []
        self.kinds: list[str] = []
        self.slot_of: dict[tuple[str, Optional[int]], int] = {}
        initials = []
        for decl in decls:
            for reg in decl.ids():
                self.slot_of[(reg.family, reg.index)] = len(self.names)
                self.names.append(str(reg))
                self.kinds.append(decl.kind)
                initials.append(decl.initial)
        self.store: list[Any] = initials
        # Cache = per process dict slot -> last-known value.  Keeping the
        # value (not just membership) lets the coherence invariant be a
        # real check rather than true by construction.
        self.caches: list[dict[int, Any]] = [dict() for _ in range(n)]
        self.totals: list[int] = [0] * n
        self.access_count = 0
        self._fingerprint = (n, tuple(self.names), tuple(self.kinds))

    # -- resolution ---------------------------------------------------

    def resolve(self, reg: RegisterId) -> int:
        try:
            return self.slot_of[(reg.family, reg.index)]
        except KeyError:
            raise UnknownRegisterError(f"no such register: {reg}") from None

    # -- public register-level interface ------------------------------

    def read(self, pid: int, reg: RegisterId):
        """Read a register as process pid.  Returns (value, rmr)."""
        return self.read_slot(pid - 1, self.resolve(reg))

    def write(self, pid: int, reg: RegisterId, value: Any) -> None:
        """Write a register as process pid.  Always costs one RMR."""
        self.write_slot(pid - 1, self.resolve(reg), value)

    # -- slot-level hot path (0-based process index) -------------------

    def read_slot(self, p: int, slot: int):
        self.access_count += 1
        cache = self.caches[p]
        value = self.store[slot]
        if slot in cache:
            if cache[slot] != value:
                raise AssertionError(
                    f"coherence broken: P{p + 1} cached {self.names[slot]}={cache[slot]!r} "
                    f"but store holds {value!r}"
                )
            return value, False
        cache[slot] = value
        self.totals[p] += 1
        return value, True

    def write_slot(self, p: int, slot: int, value: Any) -> None:
        if not check_kind(self.kinds[slot], value):
            raise KindMismatchError(
                f"{self.names[slot]} holds {self.kinds[slot]}, got {value!r}"
            )
        self.access_count += 1
        self.store[slot] = value
        for q, cache in enumerate(self.caches):
            if q != p:
                cache.pop(slot, None)
        self.caches[p][slot] = value
        self.totals[p] += 1

    # -- invariants ----------------------------------------------------

    def check_coherence(self) -> None:
        """Assert every cached value matches the global store."""
        for p, cache in enumerate(self.caches):
            for slot, value in cache.items():
                if value != self.store[slot]:
                    raise AssertionError(
                        f"coherence broken: P{p + 1} cached {self.names[slot]}={value!r} "
                        f"but store holds {self.store[slot]!r}"
                    )

    # -- snapshots -----------------------------------------------------

    def snapshot(self) -> MemSnapshot:
        return MemSnapshot(
            fingerprint=self._fingerprint,
            store=tuple(self.store),
            caches=tuple(tuple(sorted(c.items())) for c in self.caches),
            totals=tuple(self.totals),
        )

    def restore(self, snap: MemSnapshot) -> None:
        if snap.fingerprint != self._fingerprint:
            raise StaleHandleError("snapshot does not belong to this memory configuration")
        self.store = list(snap.store)
        self.caches = [dict(items) for items in snap.caches]
        self.totals = list(snap.totals)
