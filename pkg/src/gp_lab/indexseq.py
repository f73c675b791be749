"""Indexed sequence with O(log n) positional access, insert and delete.

A treap keyed implicitly by position: ``kth`` descends by subtree sizes,
``index_of`` walks parent pointers back up.  Node handles stay valid
across unrelated edits, which is what lets per-variable occurrence lists
track leaf order without rescans.

Priorities come from a private fixed-seed stream so the shape of the
structure never consumes randomness from (or depends on) a run's stream.
"""

from __future__ import annotations

from typing import Any, Iterator

from .rng import RngStream

_PRIORITY_SEED = 0x51B77A7E6D5EC001


class SeqNode:
    __slots__ = ("value", "prio", "size", "left", "right", "parent")

    def __init__(self, value: Any, prio: int) -> None:
        self.value = value
        self.prio = prio
        self.size = 1
        self.left: SeqNode | None = None
        self.right: SeqNode | None = None
        self.parent: SeqNode | None = None


def _size(node: SeqNode | None) -> int:
    return node.size if node is not None else 0


class IndexedSequence:
    """Positional container; all indices are 0-based."""

    def __init__(self) -> None:
        self._root: SeqNode | None = None
        self._prio = RngStream(_PRIORITY_SEED)

    def __len__(self) -> int:
        return _size(self._root)

    # -- internal treap plumbing -------------------------------------

    def _update(self, node: SeqNode) -> None:
        node.size = 1 + _size(node.left) + _size(node.right)

    def _rotate_up(self, node: SeqNode) -> None:
        """One rotation moving node above its parent, fixing sizes/parents."""
        p = node.parent
        assert p is not None
        g = p.parent
        if p.left is node:
            p.left = node.right
            if node.right is not None:
                node.right.parent = p
            node.right = p
        else:
            p.right = node.left
            if node.left is not None:
                node.left.parent = p
            node.left = p
        p.parent = node
        node.parent = g
        if g is None:
            self._root = node
        elif g.left is p:
            g.left = node
        else:
            g.right = node
        self._update(p)
        self._update(node)

    def _node_at(self, idx: int) -> SeqNode:
        node = self._root
        while node is not None:
            ls = _size(node.left)
            if idx < ls:
                node = node.left
            elif idx == ls:
                return node
            else:
                idx -= ls + 1
                node = node.right
        raise IndexError("sequence index out of range")

    # -- public API ----------------------------------------------------

    def node_at(self, idx: int) -> SeqNode:
        if not 0 <= idx < len(self):
            raise IndexError("sequence index out of range")
        return self._node_at(idx)

    def __getitem__(self, idx: int) -> Any:
        return self.node_at(idx).value

    def index_of(self, node: SeqNode) -> int:
        """Current position of a live node handle."""
        idx = _size(node.left)
        cur = node
        while cur.parent is not None:
            if cur.parent.right is cur:
                idx += _size(cur.parent.left) + 1
            cur = cur.parent
        return idx

    def insert(self, idx: int, value: Any) -> SeqNode:
        """Insert value so it ends up at position idx; returns its handle."""
        if not 0 <= idx <= len(self):
            raise IndexError("insert index out of range")
        node = SeqNode(value, self._prio.next_u64())
        if self._root is None:
            self._root = node
            return node
        # descend to the leaf slot for position idx
        cur = self._root
        while True:
            cur.size += 1
            ls = _size(cur.left)
            if idx <= ls:
                if cur.left is None:
                    cur.left = node
                    node.parent = cur
                    break
                cur = cur.left
            else:
                idx -= ls + 1
                if cur.right is None:
                    cur.right = node
                    node.parent = cur
                    break
                cur = cur.right
        while node.parent is not None and node.prio > node.parent.prio:
            self._rotate_up(node)
        return node

    def remove_node(self, node: SeqNode) -> Any:
        """Detach a live handle from the sequence; returns its value."""
        # rotate the node down until it is a leaf
        while node.left is not None or node.right is not None:
            child = node.left
            if child is None or (node.right is not None and node.right.prio > child.prio):
                child = node.right
            assert child is not None
            self._rotate_up(child)
        p = node.parent
        if p is None:
            self._root = None
        else:
            if p.left is node:
                p.left = None
            else:
                p.right = None
            cur = p
            while cur is not None:
                cur.size -= 1
                cur = cur.parent
        node.parent = None
        return node.value

    def pop(self, idx: int) -> Any:
        return self.remove_node(self.node_at(idx))

    def __iter__(self) -> Iterator[Any]:
        node = self._root
        stack: list[SeqNode] = []
        while stack or node is not None:
            while node is not None:
                stack.append(node)
                node = node.left
            node = stack.pop()
            yield node.value
            node = node.right

    def check_invariants(self) -> None:
        """Debug validation of sizes, parent pointers and heap order."""

        def rec(node: SeqNode | None, parent: SeqNode | None) -> int:
            if node is None:
                return 0
            assert node.parent is parent
            if parent is not None:
                assert node.prio <= parent.prio
            s = 1 + rec(node.left, node) + rec(node.right, node)
            assert node.size == s
            return s

        rec(self._root, None)
