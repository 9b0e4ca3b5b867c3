"""Dependency graph between cells.

Static edges mirror the references in each cell's formula; spill edges link
a region's child cells to their origin. Forward and reverse maps are kept
in lockstep.
"""

from __future__ import annotations

from .cells import CellAddress


class DependencyGraph:
    def __init__(self) -> None:
        self._forward: dict[CellAddress, frozenset[CellAddress]] = {}
        self._reverse: dict[CellAddress, set[CellAddress]] = {}

    def set_edges(self, addr: CellAddress, reads: frozenset[CellAddress]) -> None:
        old = self._forward.get(addr, frozenset())
        for gone in old - reads:
            readers = self._reverse.get(gone)
            if readers is not None:
                readers.discard(addr)
                if not readers:
                    del self._reverse[gone]
        for added in reads - old:
            self._reverse.setdefault(added, set()).add(addr)
        if reads:
            self._forward[addr] = reads
        else:
            self._forward.pop(addr, None)

    def clear(self, addr: CellAddress) -> None:
        self.set_edges(addr, frozenset())

    def reads(self, addr: CellAddress) -> frozenset[CellAddress]:
        return self._forward.get(addr, frozenset())

    def readers(self, addr: CellAddress) -> frozenset[CellAddress]:
        return frozenset(self._reverse.get(addr, ()))

    def transitive_readers(self, seeds: set[CellAddress]) -> set[CellAddress]:
        seen: set[CellAddress] = set()
        stack = list(seeds)
        while stack:
            addr = stack.pop()
            for reader in self._reverse.get(addr, ()):
                if reader not in seen:
                    seen.add(reader)
                    stack.append(reader)
        return seen

    def transitive_reads(self, addr: CellAddress) -> set[CellAddress]:
        seen: set[CellAddress] = set()
        stack = [addr]
        while stack:
            node = stack.pop()
            for read in self._forward.get(node, ()):
                if read not in seen:
                    seen.add(read)
                    stack.append(read)
        return seen
