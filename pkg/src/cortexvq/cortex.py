"""Cortex tree: online codebook training over wavelet coefficient vectors.

Each level of the tree holds one scalar coefficient.  A node owns two sorted
child lists: mature *cortex* children that inputs can descend into, and
*spine* candidates that accumulate maturity until they are promoted.  Lookups
use binary search over a parallel list of child values.

Training is single-writer; a finalized :class:`Codebook` is immutable and
safe to share between readers.
"""
from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import CodebookLookupError, ConfigurationError, ShapeError, UndertrainedTreeError
from .transform import NormalizationSpec

PerLevel = Union[float, Sequence[float]]


@dataclass
class CortexParams:
    """Training hyperparameters.

    ``r_init``, ``r_limit``, ``l_level`` and ``k_l_learning`` may be a scalar
    (same for every level) or one value per level.  When ``l_level`` is None it
    follows ``1 + l_base / level``; when ``k_l_learning`` is None it follows
    ``k_base * 2 ** (level - 1)``.  ``energy_epsilon`` defaults to
    ``1e-6 * r_init`` of the level.
    """

    r_init: PerLevel
    r_limit: PerLevel
    maturity_threshold: float
    k_adapt: float = 0.75
    n_power: float = 0.5
    k_range_power: float = 1.0
    l_base: float = 1.0
    l_level: Optional[PerLevel] = None
    k_base: float = 1.0
    k_l_learning: Optional[PerLevel] = None
    energy_epsilon: Optional[PerLevel] = None

    def resolve(self, depth):
        """Per-level tables (index 0 is level 1) after validation."""
        if depth < 1:
            raise ConfigurationError("depth must be >= 1")
        levels = range(1, depth + 1)
        r_init = _broadcast(self.r_init, depth, "r_init")
        r_limit = _broadcast(self.r_limit, depth, "r_limit")
        if self.l_level is None:
            l_level = [1.0 + self.l_base / lv for lv in levels]
        else:
            l_level = _broadcast(self.l_level, depth, "l_level")
        if self.k_l_learning is None:
            k_l = [self.k_base * 2.0 ** (lv - 1) for lv in levels]
        else:
            k_l = _broadcast(self.k_l_learning, depth, "k_l_learning")
        if self.energy_epsilon is None:
            eps = [1e-6 * r for r in r_init]
        else:
            eps = _broadcast(self.energy_epsilon, depth, "energy_epsilon")

        for ri, rl in zip(r_init, r_limit):
            if not (rl > 0 and ri > rl):
                raise ConfigurationError(f"need 0 < r_limit < r_init, got {rl} / {ri}")
        if not 0 < self.k_adapt < 1:
            raise ConfigurationError("k_adapt must lie in (0, 1)")
        if not 0.5 <= self.n_power <= 1:
            raise ConfigurationError("n_power must lie in [0.5, 1]")
        if not self.k_range_power > 0:
            raise ConfigurationError("k_range_power must be positive")
        if any(not l > 1 for l in l_level):
            raise ConfigurationError("every l_level must exceed 1")
        if any(not k > 0 for k in k_l):
            raise ConfigurationError("k_l_learning must be positive")
        if any(not e > 0 for e in eps):
            raise ConfigurationError("energy_epsilon must be positive")
        if not self.maturity_threshold > 0:
            raise ConfigurationError("maturity_threshold must be positive")
        return _LevelTables(r_init, r_limit, l_level, k_l, eps)

    def to_dict(self):
        d = asdict(self)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("r_init", "r_limit", "l_level", "k_l_learning", "energy_epsilon"):
            if isinstance(d.get(key), list):
                d[key] = tuple(d[key])
        return cls(**d)


def _broadcast(value, depth, name):
    if isinstance(value, (int, float)):
        return [float(value)] * depth
    out = [float(v) for v in value]
    if len(out) != depth:
        raise ConfigurationError(f"{name} has {len(out)} entries, tree depth is {depth}")
    return out


@dataclass
class _LevelTables:
    r_init: list
    r_limit: list
    l_level: list
    k_l: list
    eps: list


class CortexNode:
    __slots__ = ("value", "range", "pass_count", "level",
                 "cortex", "cortex_keys", "spines", "spine_keys", "index")

    def __init__(self, value=None, range_=math.inf, pass_count=0, level=0):
        self.value = value
        self.range = range_
        self.pass_count = pass_count
        self.level = level
        self.cortex = []
        self.cortex_keys = []
        self.spines = []
        self.spine_keys = []
        self.index = None

    def __repr__(self):
        return (f"CortexNode(level={self.level}, value={self.value!r}, range={self.range!r}, "
                f"w={self.pass_count}, cortex={len(self.cortex)}, spines={len(self.spines)})")


class SpineNode:
    __slots__ = ("value", "range", "pass_count", "maturity", "level")

    def __init__(self, value, range_, level, pass_count=0, maturity=0.0):
        self.value = value
        self.range = range_
        self.pass_count = pass_count
        self.maturity = maturity
        self.level = level

    def __repr__(self):
        return (f"SpineNode(level={self.level}, value={self.value!r}, range={self.range!r}, "
                f"w={self.pass_count}, maturity={self.maturity!r})")


def nearest_index(keys, x):
    """Index of the value in sorted ``keys`` closest to ``x``; ties go to the lower value."""
    i = bisect_left(keys, x)
    n = len(keys)
    if i == n:
        return n - 1
    if i == 0:
        return 0
    return i - 1 if x - keys[i - 1] <= keys[i] - x else i


def select_child(node: CortexNode, coeff: float):
    """The cortex child, else the spine, that is nearest to ``coeff`` and covers it."""
    keys = node.cortex_keys
    if keys:
        i = nearest_index(keys, coeff)
        child = node.cortex[i]
        if abs(keys[i] - coeff) <= child.range:
            return child
    keys = node.spine_keys
    if keys:
        j = nearest_index(keys, coeff)
        spine = node.spines[j]
        if abs(keys[j] - coeff) <= spine.range:
            return spine
    return None


def update_value(node, coeff, k_adapt, l_level, n_power):
    """Move ``node.value`` toward ``coeff``; damping uses the pre-update pass count."""
    c = node.value
    node.value = c + (1.0 - k_adapt) * (coeff - c) / (node.pass_count * l_level + 1.0) ** n_power
    node.pass_count += 1
    return node.value


def update_range(node, r_init, r_limit, k_range_power, l_level):
    """Narrow the covering range from the (already incremented) pass count."""
    r = r_init / (node.pass_count ** k_range_power * l_level)
    if r <= r_limit:
        r = r_limit
    if r < node.range:
        node.range = r
    return node.range


def update_maturity(spine, coeff, k_l, energy_epsilon):
    dist = abs(coeff - spine.value)
    if dist < energy_epsilon:
        dist = energy_epsilon
    spine.maturity += k_l / dist
    return spine.maturity


def track_sequence(inputs, k_adapt=0.75, l_level=2.0, n_power=0.5):
    """Values of a single node created at ``inputs[0]`` and updated by every later input."""
    node = SpineNode(float(inputs[0]), math.inf, 1)
    out = [node.value]
    for x in inputs[1:]:
        out.append(update_value(node, float(x), k_adapt, l_level, n_power))
    return np.array(out)


class TrainTrace:
    """What one training frame did to the tree."""

    __slots__ = ("depth", "created_level", "promoted", "updated", "visits", "fallbacks")

    def __init__(self):
        self.depth = 0              # cortex levels descended into
        self.created_level = None   # level of a newly created spine, if any
        self.promoted = []          # levels at which a spine was promoted
        self.updated = 0            # nodes whose value/range changed
        self.visits = 0             # one per level plus ceil(log2 m) halvings per m-key search
        self.fallbacks = 0          # levels where the cortex search missed and spines were searched

    def __repr__(self):
        return (f"TrainTrace(depth={self.depth}, created_level={self.created_level}, "
                f"promoted={self.promoted}, updated={self.updated}, visits={self.visits}, "
                f"fallbacks={self.fallbacks})")


class CortexTree:
    def __init__(self, depth: int, params: CortexParams):
        self.depth = int(depth)
        self.params = params
        self._t = params.resolve(self.depth)
        self.root = CortexNode(level=0)
        self.n_cortex = 0
        self.n_spines = 0
        self.n_frames = 0

    def train_frame(self, coeffs) -> TrainTrace:
        if len(coeffs) != self.depth:
            raise ShapeError(f"expected {self.depth} coefficients, got {len(coeffs)}")
        p = self.params
        t = self._t
        k_adapt, n_power, k_pow = p.k_adapt, p.n_power, p.k_range_power
        trace = TrainTrace()
        self.n_frames += 1
        node = self.root
        for li in range(self.depth):
            x = float(coeffs[li])
            level = li + 1
            l_level = t.l_level[li]
            trace.visits += 1

            keys = node.cortex_keys
            if keys:
                trace.visits += (len(keys) - 1).bit_length()
                i = nearest_index(keys, x)
                child = node.cortex[i]
                if abs(keys[i] - x) <= child.range:
                    keys[i] = update_value(child, x, k_adapt, l_level, n_power)
                    update_range(child, t.r_init[li], t.r_limit[li], k_pow, l_level)
                    trace.updated += 1
                    trace.depth += 1
                    node = child
                    continue

            skeys = node.spine_keys
            if skeys:
                if keys:
                    trace.fallbacks += 1
                trace.visits += (len(skeys) - 1).bit_length()
                j = nearest_index(skeys, x)
                spine = node.spines[j]
                if abs(skeys[j] - x) <= spine.range:
                    update_maturity(spine, x, t.k_l[li], t.eps[li])
                    skeys[j] = update_value(spine, x, k_adapt, l_level, n_power)
                    update_range(spine, t.r_init[li], t.r_limit[li], k_pow, l_level)
                    trace.updated += 1
                    if spine.maturity <= p.maturity_threshold:
                        break
                    node = self._promote(node, j)
                    trace.promoted.append(level)
                    trace.depth += 1
                    continue

            spine = SpineNode(x, t.r_init[li], level)
            j = bisect_left(skeys, x)
            skeys.insert(j, x)
            node.spines.insert(j, spine)
            self.n_spines += 1
            trace.created_level = level
            break
        return trace

    def _promote(self, parent, j):
        spine = parent.spines.pop(j)
        del parent.spine_keys[j]
        self.n_spines -= 1
        keys = parent.cortex_keys
        i = bisect_left(keys, spine.value)
        if i < len(keys) and keys[i] == spine.value:
            # exact collision with an existing cortex child: fold the spine into it
            existing = parent.cortex[i]
            existing.pass_count += spine.pass_count
            existing.range = min(existing.range, spine.range)
            return existing
        node = CortexNode(spine.value, spine.range, spine.pass_count, spine.level)
        keys.insert(i, spine.value)
        parent.cortex.insert(i, node)
        self.n_cortex += 1
        return node

    def train(self, coeff_batch, epochs=1):
        """Train on every row of ``coeff_batch``; returns cortex nodes created per epoch.

        Same updates as calling :meth:`train_frame` row by row, without the trace.
        """
        rows = np.atleast_2d(np.asarray(coeff_batch, dtype=np.float64))
        if rows.shape[1] != self.depth:
            raise ShapeError(f"expected {self.depth} coefficients, got {rows.shape[1]}")
        rows = rows.tolist()
        created = []
        for _ in range(epochs):
            before = self.n_cortex
            self._train_rows(rows)
            created.append(self.n_cortex - before)
        return created

    def _train_rows(self, rows):
        p = self.params
        t = self._t
        k1 = 1.0 - p.k_adapt
        n_power, k_pow, thr = p.n_power, p.k_range_power, p.maturity_threshold
        levels = list(zip(range(1, self.depth + 1), t.l_level, t.r_init, t.r_limit, t.k_l, t.eps))
        root = self.root
        promote = self._promote
        for row in rows:
            node = root
            for (level, l_level, r_init, r_limit, k_l, eps), x in zip(levels, row):
                keys = node.cortex_keys
                n = len(keys)
                if n:
                    i = bisect_left(keys, x)
                    if i == n or (i and x - keys[i - 1] <= keys[i] - x):
                        i -= 1
                    child = node.cortex[i]
                    c = keys[i]
                    if abs(c - x) <= child.range:
                        w = child.pass_count
                        c = c + k1 * (x - c) / (w * l_level + 1.0) ** n_power
                        child.value = keys[i] = c
                        w += 1
                        child.pass_count = w
                        r = r_init / (w ** k_pow * l_level)
                        if r <= r_limit:
                            r = r_limit
                        if r < child.range:
                            child.range = r
                        node = child
                        continue
                skeys = node.spine_keys
                n = len(skeys)
                if n:
                    j = bisect_left(skeys, x)
                    if j == n or (j and x - skeys[j - 1] <= skeys[j] - x):
                        j -= 1
                    spine = node.spines[j]
                    c = skeys[j]
                    d = abs(c - x)
                    if d <= spine.range:
                        spine.maturity += k_l / (d if d >= eps else eps)
                        w = spine.pass_count
                        c = c + k1 * (x - c) / (w * l_level + 1.0) ** n_power
                        spine.value = skeys[j] = c
                        w += 1
                        spine.pass_count = w
                        r = r_init / (w ** k_pow * l_level)
                        if r <= r_limit:
                            r = r_limit
                        if r < spine.range:
                            spine.range = r
                        if spine.maturity <= thr:
                            break
                        node = promote(node, j)
                        continue
                j = bisect_left(skeys, x)
                skeys.insert(j, x)
                node.spines.insert(j, SpineNode(x, r_init, level))
                self.n_spines += 1
                break
        self.n_frames += len(rows)

    def iter_nodes(self):
        """Depth-first, value-ordered traversal of cortex nodes (root excluded)."""
        stack = list(reversed(self.root.cortex))
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.cortex))

    def max_children(self):
        m = max(len(self.root.cortex), len(self.root.spines))
        for node in self.iter_nodes():
            m = max(m, len(node.cortex), len(node.spines))
        return m

    def full_paths(self):
        """Value lists of every root-to-leaf cortex path that reaches full depth."""
        paths = []

        def walk(node, prefix):
            if len(prefix) == self.depth:
                paths.append(list(prefix))
                return
            for child in node.cortex:
                prefix.append(child.value)
                walk(child, prefix)
                prefix.pop()

        walk(self.root, [])
        return paths

    def finalize(self, normalization: Optional[NormalizationSpec] = None) -> "Codebook":
        """Delete spines, index complete paths in traversal order, snapshot a codebook."""
        self.root.spines.clear()
        self.root.spine_keys.clear()
        for node in self.iter_nodes():
            node.spines.clear()
            node.spine_keys.clear()
            node.index = None
        self.n_spines = 0

        index = 0
        codewords = []

        def walk(node, prefix):
            nonlocal index
            if node.level == self.depth:
                node.index = index
                index += 1
                codewords.append(list(prefix))
                return
            for child in node.cortex:
                prefix.append(child.value)
                walk(child, prefix)
                prefix.pop()

        walk(self.root, [])
        if not codewords:
            raise UndertrainedTreeError("tree has no full-depth cortex path")
        return Codebook(np.array(codewords), params=self.params, normalization=normalization)


class _TrieNode:
    __slots__ = ("keys", "children", "index", "uid")

    def __init__(self):
        self.keys = []
        self.children = []
        self.index = -1
        self.uid = -1


class Codebook:
    """Indexed set of full-depth codewords with greedy tree encoding."""

    def __init__(self, codewords, params=None, normalization=None):
        cw = np.array(codewords, dtype=np.float64, copy=True)
        if cw.ndim != 2 or cw.shape[0] == 0:
            raise ShapeError("codewords must be a non-empty 2-D array")
        cw.setflags(write=False)
        self.codewords = cw
        self.params = params
        self.normalization = normalization
        self._root, self._level_sizes = self._build_trie(cw)

    @property
    def depth(self):
        return self.codewords.shape[1]

    @property
    def K(self):
        return self.codewords.shape[0]

    def __len__(self):
        return self.K

    @staticmethod
    def _build_trie(cw):
        root = _TrieNode()
        sizes = [0] * cw.shape[1]
        for idx, word in enumerate(cw.tolist()):
            node = root
            for li, v in enumerate(word):
                i = bisect_left(node.keys, v)
                if i < len(node.keys) and node.keys[i] == v:
                    node = node.children[i]
                    continue
                child = _TrieNode()
                child.uid = sizes[li]
                sizes[li] += 1
                node.keys.insert(i, v)
                node.children.insert(i, child)
                node = child
            if node.index >= 0:
                raise ShapeError(f"duplicate codeword at index {idx}")
            node.index = idx
        return root, sizes

    def _walk(self, coeffs):
        node = self._root
        for x in coeffs:
            i = nearest_index(node.keys, x)
            node = node.children[i]
            yield node

    def encode(self, coeffs) -> int:
        """Index of the leaf reached by nearest-child descent (ranges ignored)."""
        if len(coeffs) != self.depth:
            raise ShapeError(f"expected {self.depth} coefficients, got {len(coeffs)}")
        node = None
        for node in self._walk([float(c) for c in coeffs]):
            pass
        return node.index

    def encode_batch(self, coeff_batch) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(coeff_batch, dtype=np.float64))
        if rows.shape[1] != self.depth:
            raise ShapeError(f"expected {self.depth} coefficients per row, got {rows.shape[1]}")
        out = np.empty(rows.shape[0], dtype=np.int64)
        root = self._root
        for r, row in enumerate(rows.tolist()):
            node = root
            for x in row:
                node = node.children[nearest_index(node.keys, x)]
            out[r] = node.index
        return out

    def decode(self, index) -> np.ndarray:
        index = int(index)
        if not 0 <= index < self.K:
            raise CodebookLookupError(f"index {index} outside [0, {self.K})")
        return self.codewords[index].copy()

    def decode_batch(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.K):
            raise CodebookLookupError(f"indices outside [0, {self.K})")
        return self.codewords[idx]

    def dissipated_energy(self, coeffs, index) -> float:
        """Sum over levels of the squared gap between input and the indexed path."""
        diff = np.asarray(coeffs, dtype=np.float64) - self.decode(index)
        return float(np.dot(diff, diff))

    def level_visit_counts(self, coeff_batch):
        """Per-level visit counts of trie nodes under greedy encoding."""
        counts = [np.zeros(n, dtype=np.int64) for n in self._level_sizes]
        rows = np.atleast_2d(np.asarray(coeff_batch, dtype=np.float64)).tolist()
        for row in rows:
            for li, node in enumerate(self._walk(row)):
                counts[li][node.uid] += 1
        return counts

    def nodes_per_level(self):
        return list(self._level_sizes)


def greedy_gap(codebook: Codebook, coeffs):
    """(greedy path energy, best path energy) for one coefficient vector.

    The best path is found by exhaustive search over all codewords.
    """
    c = np.asarray(coeffs, dtype=np.float64)
    greedy = codebook.dissipated_energy(c, codebook.encode(c))
    best = float(((codebook.codewords - c) ** 2).sum(axis=1).min())
    return greedy, best
