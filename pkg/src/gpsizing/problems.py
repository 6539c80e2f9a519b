"""The three model problems: expression semantics, fitness, block bookkeeping.

Each problem defines how leaf material becomes *expressed* (contributes to
fitness):

* ORDER-style (`OrderProblem`): an inorder scan expresses the first occurrence
  of each complementary terminal pair; later occurrences of either member are
  inert. At most one expression per block per tree.
* LOUD-style (`LoudProblem`): every non-zero leaf is expressed every time it
  occurs.
* ON-OFF (`OnOffProblem`): a leaf is expressed iff every ancestor carries the
  expressing function; the suppressing function mutes its whole subtree. The
  expression frequency is tuned by the probability of drawing the expressing
  function at initialization.

Fitness direction differs by problem (count maximized vs deviation
minimized), so evaluations carry an explicit direction and are compared via
``Evaluation.beats``, never by raw sign. ``correct_bb_count`` maps every
problem onto "how many blocks are right", which is what the bisection success
criterion consumes.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

from .trees import PrimitiveSet, ProgramTree


class Direction(str, Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


@dataclass(frozen=True)
class Evaluation:
    fitness: float
    direction: Direction
    correct_bb_count: int
    is_optimal: bool

    def beats(self, other: "Evaluation") -> bool:
        """Strictly better than `other` in this problem's direction."""
        if self.direction is Direction.MAXIMIZE:
            return self.fitness > other.fitness
        return self.fitness < other.fitness


class Problem(ABC):
    """A problem binds a primitive set to an evaluation rule."""

    name: str
    m: int
    direction: Direction

    @property
    @abstractmethod
    def primitives(self) -> PrimitiveSet: ...

    @abstractmethod
    def evaluate(self, tree: ProgramTree) -> Evaluation: ...

    @property
    def kolmogorov_size(self) -> int:
        """Size of the most compact perfect solution: 2m - 1 leaves-and-joins."""
        return 2 * self.m - 1


def kolmogorov_size(problem: Problem) -> int:
    return problem.kolmogorov_size


# ---------------------------------------------------------------------------
# ORDER


class OrderProblem(Problem):
    """m complementary terminal pairs under a single join function.

    Terminal codes interleave: code 2i is the positive member of pair i,
    code 2i + 1 its complement.
    """

    direction = Direction.MAXIMIZE

    def __init__(self, m: int):
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        self.name = "order"
        self.m = m

    @cached_property
    def primitives(self) -> PrimitiveSet:
        terminals = []
        for i in range(1, self.m + 1):
            terminals += [f"X{i}", f"~X{i}"]
        return PrimitiveSet(functions=("JOIN",), terminals=tuple(terminals))

    def evaluate(self, tree: ProgramTree) -> Evaluation:
        fit = _order_fitness(tree.nodes, self.m)
        return Evaluation(
            fitness=fit,
            direction=self.direction,
            correct_bb_count=fit,
            is_optimal=fit == self.m,
        )


def _order_fitness(nodes: list[int], m: int) -> int:
    # hot path: one pass over the preorder array, first-occurrence per pair
    seen = bytearray(m)
    fit = 0
    for code in nodes:
        if code >= 0:
            pair = code >> 1
            if not seen[pair]:
                seen[pair] = 1
                if not code & 1:
                    fit += 1
    return fit


def express_order(tree: ProgramTree, problem: OrderProblem) -> set[str]:
    """Expressed terminals under first-occurrence inorder semantics."""
    terminals = problem.primitives.terminals
    seen = bytearray(problem.m)
    out: set[str] = set()
    for code in tree.leaf_codes():
        if not 0 <= code < 2 * problem.m:
            raise ValueError(f"terminal code {code} is foreign to this problem")
        pair = code >> 1
        if not seen[pair]:
            seen[pair] = 1
            out.add(terminals[code])
    return out


def fitness_order(tree: ProgramTree, problem: OrderProblem) -> Evaluation:
    return problem.evaluate(tree)


# ---------------------------------------------------------------------------
# LOUD


_LOUD_TERMINALS = ("0", "1", "4")
_CODE_ONE = 1
_CODE_FOUR = 2


class LoudProblem(Problem):
    """Find m4 fours and m1 ones under addition; zeros are expressed but worthless."""

    direction = Direction.MINIMIZE

    def __init__(self, m4: int, m1: int):
        if m4 < 0 or m1 < 0 or m4 + m1 < 1:
            raise ValueError(f"need m4, m1 >= 0 and m4 + m1 >= 1, got {m4}, {m1}")
        self.name = "loud"
        self.m4 = m4
        self.m1 = m1
        self.m = m4 + m1

    @cached_property
    def primitives(self) -> PrimitiveSet:
        return PrimitiveSet(functions=("add",), terminals=_LOUD_TERMINALS)

    def evaluate(self, tree: ProgramTree) -> Evaluation:
        # list.count runs in C and function codes are negative, so counting
        # over the whole preorder array is safe and fast
        fours = tree.nodes.count(_CODE_FOUR)
        ones = tree.nodes.count(_CODE_ONE)
        f = abs(fours - self.m4) + abs(ones - self.m1)
        return Evaluation(
            fitness=f,
            direction=self.direction,
            correct_bb_count=self.m - min(f, self.m),
            is_optimal=f == 0,
        )


def fitness_loud(tree: ProgramTree, problem: LoudProblem) -> Evaluation:
    return problem.evaluate(tree)


# ---------------------------------------------------------------------------
# ON-OFF


_CODE_EXP = -1  # function index 0
_CODE_SUPPRESS = -2  # function index 1
_ONOFF_TERMINALS = ("X1", "X2")


class OnOffProblem(Problem):
    """Tunable expression: the suppressing function mutes its subtree.

    ``p_exp`` is the probability that an internal node drawn at
    initialization is the expressing function; it rides along in the
    primitive set's function weights.
    """

    direction = Direction.MINIMIZE

    def __init__(self, m_x1: int, m_x2: int, p_exp: float = 1.0):
        if m_x1 < 0 or m_x2 < 0 or m_x1 + m_x2 < 1:
            raise ValueError(f"need m_x1, m_x2 >= 0 and m_x1 + m_x2 >= 1, got {m_x1}, {m_x2}")
        if not 0.0 <= p_exp <= 1.0:
            raise ValueError(f"p_exp must lie in [0, 1], got {p_exp}")
        self.name = "onoff"
        self.m_x1 = m_x1
        self.m_x2 = m_x2
        self.m = m_x1 + m_x2
        self.p_exp = p_exp

    @cached_property
    def primitives(self) -> PrimitiveSet:
        return PrimitiveSet(
            functions=("EXP", "~EXP"),
            terminals=_ONOFF_TERMINALS,
            function_weights=(self.p_exp, 1.0 - self.p_exp),
        )

    def evaluate(self, tree: ProgramTree) -> Evaluation:
        x1, x2 = _onoff_expressed_counts(tree.nodes)
        f = abs(x1 - self.m_x1) + abs(x2 - self.m_x2)
        return Evaluation(
            fitness=f,
            direction=self.direction,
            correct_bb_count=self.m - min(f, self.m),
            is_optimal=f == 0,
        )


def _onoff_expressed_counts(nodes: list[int]) -> tuple[int, int]:
    x1 = x2 = 0
    stack: list[list] = []  # [children_left, subtree_suppressed] per open node
    for code in nodes:
        suppressed = stack[-1][1] if stack else False
        if code < 0:
            stack.append([2, suppressed or code == _CODE_SUPPRESS])
        else:
            if not suppressed:
                if code == 0:
                    x1 += 1
                else:
                    x2 += 1
            while stack and stack[-1][0] == 1:
                stack.pop()
            if stack:
                stack[-1][0] -= 1
    return x1, x2


def express_onoff(tree: ProgramTree, problem: OnOffProblem) -> Counter:
    """Multiset of expressed terminals (every unsuppressed occurrence counts)."""
    for code in tree.nodes:
        if code > 1 or code < _CODE_SUPPRESS:
            raise ValueError(f"node code {code} is foreign to this problem")
    x1, x2 = _onoff_expressed_counts(tree.nodes)
    out: Counter = Counter()
    if x1:
        out["X1"] = x1
    if x2:
        out["X2"] = x2
    return out


def fitness_onoff(tree: ProgramTree, problem: OnOffProblem) -> Evaluation:
    return problem.evaluate(tree)


# ---------------------------------------------------------------------------


def make_problem(name: str, m: int, p_exp: float = 1.0) -> Problem:
    """Factory used by the CLI and experiment configs.

    Splits m across the two target counts as evenly as possible for the
    deviation problems (the second target takes the odd block).
    """
    name = name.lower()
    if name == "order":
        return OrderProblem(m)
    if name == "loud":
        return LoudProblem(m4=m // 2, m1=m - m // 2)
    if name == "onoff":
        return OnOffProblem(m_x1=m // 2, m_x2=m - m // 2, p_exp=p_exp)
    raise ValueError(f"unknown problem {name!r}; expected order, loud or onoff")
