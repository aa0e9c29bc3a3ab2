import random
from array import array

import pytest


class BaseTree:
    """Minimal full binary base tree for driving a TST directly."""

    def __init__(self):
        self.parent = array("i", [-1])
        self.left = array("i", [-1])
        self.right = array("i", [-1])
        self.root = 0

    @classmethod
    def three(cls):
        t = cls()
        t.parent = array("i", [-1, 0, 0])
        t.left = array("i", [1, -1, -1])
        t.right = array("i", [2, -1, -1])
        return t

    def splice(self, u):
        """Put a new internal vertex above non-root ``u`` with a new left leaf."""
        p = self.parent[u]
        w = len(self.parent)
        x = w + 1
        self.parent.extend((p, w))
        self.left.extend((x, -1))
        self.right.extend((u, -1))
        if self.left[p] == u:
            self.left[p] = w
        else:
            self.right[p] = w
        self.parent[u] = w
        return w, x

    def ancestors(self, u):
        out = []
        while u != -1:
            out.append(u)
            u = self.parent[u]
        return out


@pytest.fixture
def rng():
    return random.Random(12345)


def random_tree_parents(T, rng):
    return {t: rng.randint(1, t - 1) for t in range(2, T + 1)}


CRITERIA = {}


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for an acceptance criterion and assert it."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
        CRITERIA[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[number])
