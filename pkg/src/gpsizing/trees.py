"""Binary program trees: representation, random initialization, size theory.

Trees are stored as flat preorder arrays of integer codes: a terminal with
index t is stored as ``t`` (>= 0), a function with index f as ``-1 - f``.
All functions are binary, so a tree of size s always has (s+1)/2 leaves and
(s-1)/2 internal nodes, and any subtree occupies a contiguous slice of the
array. Crossover and evaluation never build node objects.

Height counts edges from the root: the smallest legal tree (one function,
two terminal children) has height 1 and size 3. Generated trees are never a
single leaf.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import math
from statistics import fmean

from .rng import SeededRng


class ConfigError(ValueError):
    """Invalid primitive set or initialization parameters."""


@dataclass(frozen=True)
class PrimitiveSet:
    """Function and terminal alphabets for one problem.

    ``function_weights``, when given, biases the function draw at tree
    creation (used by problems that tune the frequency of one function,
    e.g. an expression-suppressing primitive). Terminal draws are uniform.
    """

    functions: tuple[str, ...]
    terminals: tuple[str, ...]
    function_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(self.functions) < 1 or len(self.terminals) < 1:
            raise ConfigError("need at least one function and one terminal")
        symbols = list(self.functions) + list(self.terminals)
        if len(set(symbols)) != len(symbols):
            raise ConfigError(f"duplicate symbols in primitive set: {symbols}")
        if self.function_weights is not None:
            w = self.function_weights
            if len(w) != len(self.functions):
                raise ConfigError("function_weights length must match functions")
            if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
                raise ConfigError("function_weights must be nonnegative and sum to 1")

    @property
    def chi_f(self) -> int:
        return len(self.functions)

    @property
    def chi_t(self) -> int:
        return len(self.terminals)

    def terminal_frequency(self) -> float:
        """chi_t / (chi_f + chi_t): the implicit terminal-draw probability."""
        return self.chi_t / (self.chi_f + self.chi_t)

    def draw_function(self, rng: SeededRng) -> int:
        if self.function_weights is None:
            f = 0 if self.chi_f == 1 else rng.randrange(self.chi_f)
        else:
            r = rng.random()
            acc = 0.0
            f = len(self.function_weights) - 1  # roundoff fallthrough lands here
            for i, w in enumerate(self.function_weights):
                acc += w
                if r < acc:
                    f = i
                    break
        return -1 - f

    def draw_terminal(self, rng: SeededRng) -> int:
        return rng.randrange(self.chi_t)


@dataclass(frozen=True)
class TreeFragment:
    """A tree-shaped similarity template, summarized by its symbol counts."""

    n_functions: int
    n_terminals: int

    def __post_init__(self):
        if self.n_functions < 0 or self.n_terminals < 0 or self.k < 1:
            raise ConfigError("fragment needs k = n_functions + n_terminals >= 1")

    @property
    def k(self) -> int:
        return self.n_functions + self.n_terminals


class ProgramTree:
    """Immutable-by-convention binary program tree (preorder code array)."""

    __slots__ = ("nodes", "_height")

    def __init__(self, nodes: list[int]):
        self.nodes = nodes
        self._height = -1

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def leaf_count(self) -> int:
        return (len(self.nodes) + 1) // 2

    @property
    def internal_count(self) -> int:
        return (len(self.nodes) - 1) // 2

    @property
    def height(self) -> int:
        if self._height < 0:
            self._height = _preorder_height(self.nodes)
        return self._height

    def leaf_codes(self) -> list[int]:
        """Terminal codes in left-to-right (inorder) leaf order."""
        return [c for c in self.nodes if c >= 0]

    def subtree_end(self, i: int) -> int:
        """End index (exclusive) of the subtree rooted at node i."""
        nodes = self.nodes
        need = 1
        j = i
        while need:
            need += 1 if nodes[j] < 0 else -1
            j += 1
        return j

    def render(self, prims: PrimitiveSet) -> str:
        """S-expression form, for diagnostics."""
        pos = 0

        def walk() -> str:
            nonlocal pos
            code = self.nodes[pos]
            pos += 1
            if code >= 0:
                return prims.terminals[code]
            name = prims.functions[-1 - code]
            left = walk()
            right = walk()
            return f"({name} {left} {right})"

        return walk()

    def __eq__(self, other) -> bool:
        return isinstance(other, ProgramTree) and self.nodes == other.nodes

    def __hash__(self):
        return hash(tuple(self.nodes))

    def __repr__(self) -> str:
        return f"ProgramTree(size={self.size}, height={self.height})"


def tree_from_sexpr(prims: PrimitiveSet, text: str) -> ProgramTree:
    """Parse "(JOIN (JOIN X1 ~X1) X2)"-style expressions. Test/CLI helper."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    f_codes = {name: -1 - i for i, name in enumerate(prims.functions)}
    t_codes = {name: i for i, name in enumerate(prims.terminals)}
    nodes: list[int] = []
    pos = 0

    def parse() -> None:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            name = tokens[pos]
            pos += 1
            if name not in f_codes:
                raise ConfigError(f"unknown function {name!r}")
            nodes.append(f_codes[name])
            parse()
            parse()
            if tokens[pos] != ")":
                raise ConfigError("functions take exactly two arguments")
            pos += 1
        else:
            if tok not in t_codes:
                raise ConfigError(f"unknown terminal {tok!r}")
            nodes.append(t_codes[tok])

    parse()
    if pos != len(tokens):
        raise ConfigError(f"trailing tokens: {tokens[pos:]}")
    return ProgramTree(nodes)


def _preorder_height(nodes: list[int]) -> int:
    max_depth = 0
    stack: list[int] = []  # children still unvisited per open internal node
    for code in nodes:
        if code < 0:
            stack.append(2)
        else:
            if len(stack) > max_depth:
                max_depth = len(stack)
            while stack and stack[-1] == 1:
                stack.pop()
            if stack:
                stack[-1] -= 1
    return max_depth


class InitMethod(str, Enum):
    FULL = "full"
    GROW = "grow"
    RAMPED_FULL = "ramped_full"
    RAMPED_GROW = "ramped_grow"
    RAMPED_HALF_HALF = "ramped_half_half"


_RAMPED = {InitMethod.RAMPED_FULL, InitMethod.RAMPED_GROW, InitMethod.RAMPED_HALF_HALF}


@dataclass(frozen=True)
class InitConfig:
    """How an initial population is drawn.

    ``q`` is the probability that a q-eligible position becomes a terminal;
    None means "use the terminal frequency of the primitive set". Ramped
    methods spread tree height caps over ``ramp = (h_lo, h_hi)``.
    """

    method: InitMethod = InitMethod.RAMPED_HALF_HALF
    q: float | None = None
    max_height: int = 6
    ramp: tuple[int, int] | None = None

    def __post_init__(self):
        if self.max_height < 1:
            raise ConfigError("max_height must be >= 1")
        if self.q is not None and not 0.0 <= self.q <= 1.0:
            raise ConfigError("q must lie in [0, 1]")
        if self.method in _RAMPED:
            if self.ramp is None:
                raise ConfigError(f"{self.method.value} requires a ramp height range")
            lo, hi = self.ramp
            if not 1 <= lo <= hi <= self.max_height:
                raise ConfigError(f"need 1 <= h_lo <= h_hi <= max_height, got {self.ramp}")
        elif self.ramp is not None:
            raise ConfigError(f"{self.method.value} does not take a ramp range")


def _sample_full_height(q: float, h_max: int, rng: SeededRng) -> int:
    # terminate the full tree at the first depth whose q-draw fires;
    # depth h_max never draws (terminals are forced there)
    for depth in range(1, h_max):
        if rng.random() < q:
            return depth
    return h_max


def create_tree_full(prims: PrimitiveSet, q: float, h_max: int, rng: SeededRng) -> ProgramTree:
    """Random full tree: all leaves at one depth h, 1 <= h <= h_max.

    The depth is geometric in q (each level below the root stops the tree
    with probability q) truncated at h_max. q=1 always gives the minimal
    3-node tree, q=0 always the complete tree of height h_max.
    """
    _check_qh(q, h_max)
    h = _sample_full_height(q, h_max, rng)
    nodes: list[int] = []

    def build(depth: int) -> None:
        if depth == h:
            nodes.append(prims.draw_terminal(rng))
        else:
            nodes.append(prims.draw_function(rng))
            build(depth + 1)
            build(depth + 1)

    build(0)
    return ProgramTree(nodes)


def create_tree_grow(prims: PrimitiveSet, q: float, h_max: int, rng: SeededRng) -> ProgramTree:
    """Random not-necessarily-full tree of height <= h_max, never a single leaf.

    The root is always a function. Every child position independently becomes
    a terminal with probability q, except at depth h_max where terminals are
    forced.
    """
    _check_qh(q, h_max)
    nodes: list[int] = [prims.draw_function(rng)]

    def grow(depth: int) -> None:
        if depth == h_max or rng.random() < q:
            nodes.append(prims.draw_terminal(rng))
        else:
            nodes.append(prims.draw_function(rng))
            grow(depth + 1)
            grow(depth + 1)

    grow(1)
    grow(1)
    return ProgramTree(nodes)


def _check_qh(q: float, h_max: int) -> None:
    if not 0.0 <= q <= 1.0:
        raise ConfigError(f"q must lie in [0, 1], got {q}")
    if h_max < 1:
        raise ConfigError(f"h_max must be >= 1, got {h_max}")


def create_ramped_population(
    prims: PrimitiveSet, cfg: InitConfig, n: int, rng: SeededRng
) -> list[ProgramTree]:
    """Draw n trees per the init config.

    Ramped methods partition n as evenly as possible across the ramp heights,
    assigning remainder trees to the smallest heights first. RAMPED_HALF_HALF
    additionally splits each height's allotment between full and grow trees
    (full gets the odd tree).
    """
    if n < 1:
        raise ConfigError("population size must be >= 1")
    q = cfg.q if cfg.q is not None else prims.terminal_frequency()

    if cfg.method in _RAMPED:
        lo, hi = cfg.ramp  # type: ignore[misc]  # validated in InitConfig
        heights = list(range(lo, hi + 1))
    else:
        heights = [cfg.max_height]

    base, rem = divmod(n, len(heights))
    trees: list[ProgramTree] = []
    for idx, h in enumerate(heights):
        count = base + (1 if idx < rem else 0)
        if cfg.method == InitMethod.RAMPED_HALF_HALF:
            n_full = (count + 1) // 2
            for _ in range(n_full):
                trees.append(create_tree_full(prims, q, h, rng))
            for _ in range(count - n_full):
                trees.append(create_tree_grow(prims, q, h, rng))
        elif cfg.method in (InitMethod.FULL, InitMethod.RAMPED_FULL):
            for _ in range(count):
                trees.append(create_tree_full(prims, q, h, rng))
        else:
            for _ in range(count):
                trees.append(create_tree_grow(prims, q, h, rng))
    return trees


# ---------------------------------------------------------------------------
# analytic size estimators


def avg_size_full_analytic(q: float, h_max: int) -> float:
    """Closed-form expected size of a full tree with termination probability q.

    At q = 1/2 the closed form is 0/0; the removable-singularity limit is
    2*h_max + 1. q = 0 concentrates all mass at height h_max, so the complete
    size 2**(h_max+1) - 1 is returned directly.
    """
    _check_qh(q, h_max)
    if q == 0.0:
        return float(2 ** (h_max + 1) - 1)
    if abs(2.0 * q - 1.0) < 1e-9:
        return 2.0 * h_max + 1.0
    return (2.0 * q - 2.0 * (2.0 * (1.0 - q)) ** h_max + 1.0) / (2.0 * q - 1.0)


def full_height_pmf(q: float, h_max: int) -> dict[int, float]:
    """P(height = h) for full trees; geometric truncated at h_max."""
    _check_qh(q, h_max)
    pmf = {h: q * (1.0 - q) ** (h - 1) for h in range(1, h_max)}
    pmf[h_max] = (1.0 - q) ** (h_max - 1)
    return pmf


def sample_full_sizes(q: float, h_max: int, count: int, rng: SeededRng) -> list[int]:
    """Monte-Carlo sizes of full trees, using the same height draw as
    create_tree_full but skipping symbol materialization (a full tree's size
    is fixed by its height)."""
    return [2 ** (_sample_full_height(q, h_max, rng) + 1) - 1 for _ in range(count)]


def sample_grow_shape(q: float, h_max: int, rng: SeededRng) -> tuple[int, int]:
    """One (size, height) draw from the grow process, without building a tree."""
    _check_qh(q, h_max)
    size = 1
    height = 1
    stack = [1, 1]  # depths of pending child positions
    while stack:
        depth = stack.pop()
        size += 1
        if depth == h_max or rng.random() < q:
            if depth > height:
                height = depth
        else:
            stack.append(depth + 1)
            stack.append(depth + 1)
    return size, height


def grow_size_pmf(q: float, h_max: int) -> dict[int, float]:
    """Exact size distribution of grow trees, by convolution over depth.

    Independent of both the sampler and the recipe estimator, so it serves as
    an oracle for either. Support doubles per level; capped at h_max <= 12.
    """
    _check_qh(q, h_max)
    if h_max > 12:
        raise ConfigError("exact grow pmf capped at h_max <= 12")
    pmf = {1: 1.0}  # subtree size at depth h_max: forced leaf
    for _ in range(h_max - 1):  # lift to depths h_max-1 .. 1
        pair = _convolve(pmf, pmf)
        lifted = {1: q}
        for s, p in pair.items():
            lifted[s + 1] = lifted.get(s + 1, 0.0) + (1.0 - q) * p
        pmf = lifted
    root = _convolve(pmf, pmf)
    return {s + 1: p for s, p in root.items()}


def _convolve(a: dict[int, float], b: dict[int, float]) -> dict[int, float]:
    out: dict[int, float] = {}
    for sa, pa in a.items():
        for sb, pb in b.items():
            key = sa + sb
            out[key] = out.get(key, 0.0) + pa * pb
    return out


def _shape_counts(h_cap: int) -> list[dict[int, int]]:
    # counts[h][s] = number of binary tree shapes with s nodes, height <= h
    counts: list[dict[int, int]] = [{1: 1}]
    for h in range(1, h_cap + 1):
        prev = counts[h - 1]
        cur: dict[int, int] = {1: 1}
        for sa, ca in prev.items():
            for sb, cb in prev.items():
                s = sa + sb + 1
                cur[s] = cur.get(s, 0) + ca * cb
        counts.append(cur)
    return counts


def avg_size_grow_analytic(
    q: float,
    h_max: int,
    shape_multiplicity: bool = True,
    samples: int = 100_000,
    rng: SeededRng | None = None,
) -> float:
    """Expected grow-tree size via the staged recipe.

    Trees of height h < h_max contribute through per-(size, height) weights
    (1-q)**(f_s - 1) * q**t_s; ``shape_multiplicity`` controls whether each
    weight is multiplied by the number of tree shapes realizing that (size,
    height) pair (True gives the exact distribution below h_max; False takes
    each (s, h) cell once, which undercounts branched shapes). The height =
    h_max stratum, where forced terminals break the weight formula, is
    estimated by conditional Monte Carlo; if no sample reaches h_max its
    conservative minimum size 2*h_max + 1 stands in.
    """
    _check_qh(q, h_max)
    if q == 0.0 or q == 1.0:
        raise ConfigError("grow estimator needs 0 < q < 1")
    if h_max == 1:
        return 3.0
    if shape_multiplicity and h_max > 12:
        raise ConfigError("shape multiplicity capped at h_max <= 12")

    shapes = _shape_counts(h_max - 1) if shape_multiplicity else None
    weight_total = 0.0
    weight_size = 0.0
    for h in range(1, h_max):
        s_lo, s_hi = 2 * h + 1, 2 ** (h + 1) - 1
        for s in range(s_lo, s_hi + 1, 2):
            t_s = (s + 1) // 2
            f_s = (s - 1) // 2
            w = (1.0 - q) ** (f_s - 1) * q**t_s
            if shapes is not None:
                mult = shapes[h].get(s, 0) - shapes[h - 1].get(s, 0)
                if mult == 0:
                    continue
                w *= mult
            weight_total += w
            weight_size += w * s

    p_below = min(weight_total, 1.0)
    mean_below = weight_size / weight_total if weight_total > 0 else 0.0

    rng = rng if rng is not None else SeededRng(0x67726F77)
    at_cap = []
    for _ in range(samples):
        size, height = sample_grow_shape(q, h_max, rng)
        if height == h_max:
            at_cap.append(size)
    mean_cap = fmean(at_cap) if at_cap else float(2 * h_max + 1)

    return p_below * mean_below + (1.0 - p_below) * mean_cap


def avg_size_ramped_analytic(prims: PrimitiveSet, cfg: InitConfig) -> float:
    """Expected tree size for a ramped init: equal-weight mix over heights
    (and over the full/grow halves for half-and-half)."""
    q = cfg.q if cfg.q is not None else prims.terminal_frequency()
    if cfg.method in _RAMPED:
        lo, hi = cfg.ramp  # type: ignore[misc]
        heights = range(lo, hi + 1)
    else:
        heights = range(cfg.max_height, cfg.max_height + 1)

    def one(h: int) -> float:
        if cfg.method in (InitMethod.FULL, InitMethod.RAMPED_FULL):
            return avg_size_full_analytic(q, h)
        if cfg.method in (InitMethod.GROW, InitMethod.RAMPED_GROW):
            return _grow_mean(q, h)
        return 0.5 * (avg_size_full_analytic(q, h) + _grow_mean(q, h))

    return fmean(one(h) for h in heights)


def _grow_mean(q: float, h: int) -> float:
    if q == 0.0:
        return float(2 ** (h + 1) - 1)
    if q == 1.0:
        return 3.0
    pmf = grow_size_pmf(q, h)
    return sum(s * p for s, p in pmf.items())


# ---------------------------------------------------------------------------
# fragment calculus


def competition_size(frag: TreeFragment, prims: PrimitiveSet) -> int:
    """Number of competing instantiations of a fragment template."""
    return prims.chi_f**frag.n_functions * prims.chi_t**frag.n_terminals


def fragment_quantity(k: int, lam: float) -> float:
    """Expected instances of a k-symbol fragment in a size-lam full binary tree."""
    if k < 1:
        raise ConfigError("defining length k must be >= 1")
    if lam < 1:
        raise ConfigError("tree size must be >= 1")
    return 2.0**-k * lam


@dataclass(frozen=True)
class TreeStats:
    count: int
    mean_size: float
    mean_height: float
    mean_leaves: float


def tree_statistics(trees: list[ProgramTree]) -> TreeStats:
    if not trees:
        raise ValueError("tree_statistics needs a non-empty list")
    return TreeStats(
        count=len(trees),
        mean_size=fmean(t.size for t in trees),
        mean_height=fmean(t.height for t in trees),
        mean_leaves=fmean(t.leaf_count for t in trees),
    )
