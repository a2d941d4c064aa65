"""Oriented anonymous ring topology and robot placement.

Nodes are numbered 0..n-1 for simulation bookkeeping only; the protocol
layer never sees node identities.  Port 0 leads to the predecessor,
port 1 to the successor, uniformly at every node.
"""

from __future__ import annotations

PORT_ZERO = 0
PORT_ONE = 1

MIN_RING_SIZE = 3  # a 2-cycle degenerates port semantics


class ConfigurationError(Exception):
    """Raised when a placement operation references an unknown robot."""


def check_ring_size(n: int) -> int:
    if n < MIN_RING_SIZE:
        raise ValueError(f"ring size must be >= {MIN_RING_SIZE}, got {n}")
    return n


def succ(n: int, v: int) -> int:
    """Node reached from v through port 1."""
    return (v + 1) % n


def pred(n: int, v: int) -> int:
    """Node reached from v through port 0."""
    return (v - 1) % n


def move_target(n: int, v: int, port: int) -> int:
    return succ(n, v) if port == PORT_ONE else pred(n, v)


class Placement:
    """Bidirectional robot-to-node map with value semantics.

    ``by_robot`` maps robot label -> node, ``by_node`` maps node -> set of
    labels.  The two views are kept consistent by construction.
    """

    __slots__ = ("n", "by_robot", "by_node")

    def __init__(self, n: int, by_robot: dict[int, int]):
        self.n = n
        self.by_robot = dict(by_robot)
        by_node: dict[int, set[int]] = {}
        for label, node in self.by_robot.items():
            by_node.setdefault(node, set()).add(label)
        self.by_node = by_node

    def node_of(self, label: int) -> int:
        return self.by_robot[label]

    def count_at(self, node: int) -> int:
        group = self.by_node.get(node)
        return len(group) if group else 0

    def occupied_nodes(self) -> list[int]:
        return sorted(node for node, group in self.by_node.items() if group)

    def occupancy_vector(self) -> tuple[int, ...]:
        return tuple(self.count_at(v) for v in range(self.n))

    def all_distinct(self) -> bool:
        return all(len(group) <= 1 for group in self.by_node.values())

    def apply_moves(self, moves: dict[int, int]) -> "Placement":
        """Apply all moves simultaneously; ``moves`` maps label -> port.

        Robots crossing the same edge in opposite directions swap nodes
        without interacting.  Robots absent from ``moves`` stay put.
        """
        new_by_robot = dict(self.by_robot)
        for label, port in moves.items():
            if label not in new_by_robot:
                raise ConfigurationError(f"unknown robot {label} in move set")
            new_by_robot[label] = move_target(self.n, new_by_robot[label], port)
        return Placement(self.n, new_by_robot)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Placement)
            and self.n == other.n
            and self.by_robot == other.by_robot
        )

    def __repr__(self) -> str:
        return f"Placement(n={self.n}, by_robot={self.by_robot!r})"


def ring_distance(n: int, a: int, b: int) -> int:
    d = abs(a - b) % n
    return min(d, n - d)
