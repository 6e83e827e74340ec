"""Random Forest classifier built in-repo: seeded CART trees over bootstrap
samples, with out-of-bag error, vote-fraction scores, permutation feature
importance, and a self-describing text serialization.

Determinism is a hard requirement: every random draw comes from a PCG64
generator seeded through ``SeedSequence(seed, spawn_key=...)`` substreams,
one per tree (and one per tree/feature pair for importance permutations),
so training is bit-reproducible and independent of any scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FORMAT_TAG = "spamprof-forest"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """A serialized model stream could not be parsed."""


def _substream(seed: int, key: tuple[int, ...]) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class ForestParams:
    """Training parameters; the defaults mirror stock classification forests."""

    n_trees: int = 500
    mtry: int | None = None  # None resolves to floor(sqrt(m)) at fit time
    min_node_size: int = 1
    max_depth: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError(f"mtry must be >= 1, got {self.mtry}")
        if self.min_node_size < 1:
            raise ValueError(f"min_node_size must be >= 1, got {self.min_node_size}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def resolve_mtry(self, m: int) -> int:
        mtry = self.mtry if self.mtry is not None else max(1, math.isqrt(m))
        if mtry > m:
            raise ValueError(f"mtry {mtry} exceeds feature count {m}")
        return mtry


@dataclass
class DecisionTree:
    """CART tree stored as parallel node arrays.

    Internal nodes route ``x[feature] <= threshold`` to ``left`` and the
    rest to ``right``; leaves have ``feature == -1`` and carry the training
    class counts that reached them. ``majority`` caches each leaf's winning
    class (ties resolved toward the earlier class).
    """

    feature: np.ndarray  # int32, -1 on leaves
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    counts: np.ndarray  # int64 (n_nodes, n_classes), zero on internal nodes
    majority: np.ndarray  # int32 per node

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_for(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of X."""
        cur = np.zeros(X.shape[0], dtype=np.int32)
        while True:
            pending = np.flatnonzero(self.feature[cur] >= 0)
            if pending.size == 0:
                return cur
            nodes = cur[pending]
            go_left = X[pending, self.feature[nodes]] <= self.threshold[nodes]
            cur[pending] = np.where(go_left, self.left[nodes], self.right[nodes])

    def used_features(self) -> np.ndarray:
        return np.unique(self.feature[self.feature >= 0])


def _best_split(X, idx, ys, cnt, rng, mtry):
    """Best Gini split among mtry sampled features, or None.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values. Minimizing the weighted Gini impurity is equivalent to
    maximizing sum_children (sum_c count_c^2) / n_child, which needs no
    per-candidate normalization; a split is kept only if it strictly beats
    the unsplit node. Ties go to the earlier sampled feature and then the
    smaller threshold, which keeps training deterministic.
    """
    n = idx.size
    feats = rng.choice(X.shape[1], size=mtry, replace=False)
    n_classes = cnt.size
    cnt_f = cnt.astype(np.float64)
    best_score = float((cnt_f ** 2).sum()) / n  # the parent's own score
    best = None
    for f in feats:
        col = X[idx, f]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        if xs[0] == xs[-1]:
            continue
        yo = ys[order]
        cut = np.flatnonzero(xs[1:] != xs[:-1])
        nl = (cut + 1).astype(np.float64)
        nr = n - nl
        if n_classes == 2:
            lp = np.cumsum(yo)[cut].astype(np.float64)
            ln = nl - lp
            rp = cnt_f[1] - lp
            rn = nr - rp
            score = (lp * lp + ln * ln) / nl + (rp * rp + rn * rn) / nr
        else:
            onehot = np.zeros((n, n_classes))
            onehot[np.arange(n), yo] = 1.0
            left_counts = np.cumsum(onehot, axis=0)[cut]
            right_counts = cnt_f - left_counts
            score = ((left_counts ** 2).sum(axis=1) / nl
                     + (right_counts ** 2).sum(axis=1) / nr)
        i = int(np.argmax(score))
        if score[i] > best_score:
            lo = float(xs[cut[i]])
            hi = float(xs[cut[i] + 1])
            thr = (lo + hi) / 2.0
            if not lo <= thr < hi:  # midpoint rounded onto hi: fall back
                thr = lo
            best_score = float(score[i])
            best = (int(f), thr)
    return best


def _grow(X, y, n_classes, rng, mtry, min_node_size, max_depth) -> DecisionTree:
    """Grow one CART tree to purity (or the configured stops) on (X, y)."""
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    counts: list[np.ndarray] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.zeros(n_classes, dtype=np.int64))
        return len(feature) - 1

    stack = [(new_node(), np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        cnt = np.bincount(ys, minlength=n_classes).astype(np.int64)
        n = idx.size
        splittable = (
            n >= max(2, min_node_size)
            and int(cnt.max()) < n
            and (max_depth is None or depth < max_depth)
        )
        best = _best_split(X, idx, ys, cnt, rng, mtry) if splittable else None
        if best is None:
            counts[node] = cnt
            continue
        f, thr = best
        feature[node] = f
        threshold[node] = thr
        go_left = X[idx, f] <= thr
        lid, rid = new_node(), new_node()
        left[node], right[node] = lid, rid
        stack.append((rid, idx[~go_left], depth + 1))
        stack.append((lid, idx[go_left], depth + 1))

    count_arr = np.vstack(counts)
    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        counts=count_arr,
        majority=count_arr.argmax(axis=1).astype(np.int32),
    )


@dataclass
class Forest:
    """Trained ensemble plus the bookkeeping needed for OOB estimates."""

    trees: list[DecisionTree]
    classes: list[str]
    oob_masks: np.ndarray  # bool (n_trees, n_train); True = excluded from bootstrap
    m: int
    params: ForestParams

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def class_codes(self, labels) -> np.ndarray:
        code = {c: i for i, c in enumerate(self.classes)}
        try:
            return np.fromiter((code[l] for l in labels), dtype=np.int64, count=len(labels))
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} not among model classes {self.classes}") from None


def _as_matrix(features, m: int | None = None) -> np.ndarray:
    X = np.ascontiguousarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d feature matrix, got shape {X.shape}")
    if m is not None and X.shape[1] != m:
        raise ValueError(f"feature dimension {X.shape[1]} does not match model dimension {m}")
    return X


def train(features, labels, params: ForestParams = ForestParams()) -> Forest:
    """Train a forest of seeded CART trees on bootstrap samples.

    Rejects datasets with fewer than two samples or classes and any
    non-finite feature value. Identical inputs and seed give a
    bit-identical forest.
    """
    X = _as_matrix(features)
    n, m = X.shape
    labels = [str(l) for l in labels]
    if len(labels) != n:
        raise ValueError(f"{len(labels)} labels for {n} samples")
    if n < 2:
        raise ValueError("training needs at least 2 samples")
    if not np.isfinite(X).all():
        raise ValueError("training features contain non-finite values")
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValueError(f"training needs at least 2 distinct classes, got {classes}")
    code = {c: i for i, c in enumerate(classes)}
    y = np.fromiter((code[l] for l in labels), dtype=np.int64, count=n)
    mtry = params.resolve_mtry(m)

    trees = []
    oob = np.zeros((params.n_trees, n), dtype=bool)
    for t in range(params.n_trees):
        rng = _substream(params.seed, (t,))
        boot = rng.integers(0, n, size=n)
        mask = np.ones(n, dtype=bool)
        mask[boot] = False
        oob[t] = mask
        trees.append(_grow(X[boot], y[boot], len(classes), rng,
                           mtry, params.min_node_size, params.max_depth))
    return Forest(trees=trees, classes=classes, oob_masks=oob, m=m, params=params)


def _profile_vector(profile, m: int) -> np.ndarray:
    values = getattr(profile, "values", profile)
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or len(x) != m:
        raise ValueError(f"profile dimension {x.shape} does not match model dimension {m}")
    return x


def predict_scores_matrix(forest: Forest, X) -> np.ndarray:
    """Per-class vote fractions for every row of X; each row sums to 1."""
    X = _as_matrix(X, forest.m)
    votes = np.zeros((X.shape[0], forest.n_classes), dtype=np.int64)
    rows = np.arange(X.shape[0])
    for tree in forest.trees:
        votes[rows, tree.majority[tree.leaf_for(X)]] += 1
    return votes / forest.n_trees


def predict_scores(forest: Forest, profile) -> np.ndarray:
    """Fraction of trees voting for each class, in class order."""
    x = _profile_vector(profile, forest.m)
    return predict_scores_matrix(forest, x[None, :])[0]


def predict(forest: Forest, profile, spam_threshold: float | None = None,
            positive_class: str = "spam") -> str:
    """Classify one profile.

    Without a threshold the argmax class wins (ties to the earlier class).
    With a threshold the forest must be binary: the positive class is
    predicted iff its score is >= the threshold.
    """
    scores = predict_scores(forest, profile)
    if spam_threshold is None:
        return forest.classes[int(np.argmax(scores))]
    if not 0.0 <= spam_threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {spam_threshold}")
    if forest.n_classes != 2:
        raise ValueError("thresholded prediction requires a binary forest")
    if positive_class not in forest.classes:
        raise ValueError(f"positive class {positive_class!r} not among {forest.classes}")
    pos = forest.classes.index(positive_class)
    return forest.classes[pos] if scores[pos] >= spam_threshold else forest.classes[1 - pos]


@dataclass(frozen=True)
class OobReport:
    """Out-of-bag error plus how many samples could actually be scored."""

    error: float
    n_evaluated: int
    n_skipped: int


def _oob_votes(forest: Forest, X: np.ndarray) -> np.ndarray:
    votes = np.zeros((X.shape[0], forest.n_classes), dtype=np.int64)
    for t, tree in enumerate(forest.trees):
        rows = np.flatnonzero(forest.oob_masks[t])
        if rows.size == 0:
            continue
        votes[rows, tree.majority[tree.leaf_for(X[rows])]] += 1
    return votes


def oob_error(forest: Forest, features, labels) -> OobReport:
    """Error of majority vote restricted to each sample's out-of-bag trees.

    Must be called with the training set. Samples that were in-bag for
    every tree cannot be scored; they are skipped and counted.
    """
    X = _as_matrix(features, forest.m)
    if X.shape[0] != forest.oob_masks.shape[1]:
        raise ValueError(
            f"dataset has {X.shape[0]} rows but the forest was trained on "
            f"{forest.oob_masks.shape[1]}"
        )
    y = forest.class_codes([str(l) for l in labels])
    votes = _oob_votes(forest, X)
    evaluated = votes.sum(axis=1) > 0
    n_eval = int(evaluated.sum())
    if n_eval == 0:
        return OobReport(error=0.0, n_evaluated=0, n_skipped=X.shape[0])
    pred = votes.argmax(axis=1)
    error = float(np.mean(pred[evaluated] != y[evaluated]))
    return OobReport(error=error, n_evaluated=n_eval, n_skipped=X.shape[0] - n_eval)


@dataclass(frozen=True)
class ImportanceReport:
    """Mean decrease of accuracy per feature, plus the descending ranking."""

    importances: np.ndarray
    ranking: np.ndarray


def permutation_importance(forest: Forest, features, labels, seed: int = 0) -> ImportanceReport:
    """Per-feature mean decrease of out-of-bag accuracy.

    For every tree, each feature column is permuted within the tree's OOB
    samples and the accuracy drop is recorded; the importance is the mean
    drop over all trees with OOB samples. Features a tree never splits on
    cannot change its predictions and contribute zero for that tree.
    Permutations are seeded per (tree, feature), so the result does not
    depend on evaluation order.
    """
    X = _as_matrix(features, forest.m)
    if X.shape[0] != forest.oob_masks.shape[1]:
        raise ValueError(
            f"dataset has {X.shape[0]} rows but the forest was trained on "
            f"{forest.oob_masks.shape[1]}"
        )
    y = forest.class_codes([str(l) for l in labels])
    delta = np.zeros(forest.m)
    trees_used = 0
    for t, tree in enumerate(forest.trees):
        rows = np.flatnonzero(forest.oob_masks[t])
        if rows.size == 0:
            continue
        trees_used += 1
        Xo = X[rows].copy()
        yo = y[rows]
        base_acc = float(np.mean(tree.majority[tree.leaf_for(Xo)] == yo))
        for f in tree.used_features():
            f = int(f)
            perm = _substream(seed, (t, f)).permutation(rows.size)
            saved = Xo[:, f].copy()
            Xo[:, f] = saved[perm]
            acc = float(np.mean(tree.majority[tree.leaf_for(Xo)] == yo))
            Xo[:, f] = saved
            delta[f] += base_acc - acc
    if trees_used == 0:
        raise ValueError("no tree has out-of-bag samples; cannot estimate importance")
    importances = delta / trees_used
    ranking = np.argsort(-importances, kind="stable")
    return ImportanceReport(importances=importances, ranking=ranking)


def select_top_k(report: ImportanceReport, k: int) -> np.ndarray:
    """First k entries of the importance ranking, order preserved."""
    m = len(report.ranking)
    if not 1 <= k <= m:
        raise ValueError(f"k must be in 1..{m}, got {k}")
    return report.ranking[:k].copy()


def serialize(forest: Forest) -> bytes:
    """Serialize to a self-describing text format.

    Layout: version tag, params, feature count, class list, training size,
    then per tree its OOB bitmask (hex) and node array. Stable: the same
    forest always produces the same bytes.
    """
    for c in forest.classes:
        if not c or any(ch.isspace() for ch in c):
            raise ValueError(f"class name {c!r} cannot be serialized (whitespace)")
    p = forest.params
    out = [
        f"{FORMAT_TAG} v{FORMAT_VERSION}",
        "params n_trees={} mtry={} min_node_size={} max_depth={} seed={}".format(
            p.n_trees,
            "-" if p.mtry is None else p.mtry,
            p.min_node_size,
            "-" if p.max_depth is None else p.max_depth,
            p.seed,
        ),
        f"features {forest.m}",
        "classes " + " ".join(forest.classes),
        f"samples {forest.oob_masks.shape[1]}",
    ]
    for t, tree in enumerate(forest.trees):
        out.append(f"tree {t} nodes {tree.n_nodes}")
        out.append("oob " + np.packbits(forest.oob_masks[t]).tobytes().hex())
        for i in range(tree.n_nodes):
            if tree.feature[i] >= 0:
                out.append(
                    f"i {tree.feature[i]} {float(tree.threshold[i])!r} "
                    f"{tree.left[i]} {tree.right[i]}"
                )
            else:
                out.append("l " + " ".join(str(int(c)) for c in tree.counts[i]))
    out.append("end")
    return ("\n".join(out) + "\n").encode("ascii")


class _Reader:
    def __init__(self, data: bytes):
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError as exc:
            raise ModelFormatError(f"model stream is not ASCII text: {exc}") from None
        self.lines = text.split("\n")
        self.pos = 0

    def next(self, expect: str | None = None) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            self.pos += 1
            if line:
                if expect is not None and not line.startswith(expect + " ") and line != expect:
                    self.fail(f"expected {expect!r} line, got {line!r}")
                return line
        self.fail("unexpected end of stream" + (f" (wanted {expect!r})" if expect else ""))

    def fail(self, msg: str) -> None:
        raise ModelFormatError(f"line {self.pos}: {msg}")


def _parse_int(reader: _Reader, token: str, minimum: int | None = None) -> int:
    try:
        value = int(token)
    except ValueError:
        reader.fail(f"expected integer, got {token!r}")
    if minimum is not None and value < minimum:
        reader.fail(f"expected integer >= {minimum}, got {value}")
    return value


def deserialize(data: bytes) -> Forest:
    """Parse a serialized forest; malformed input raises ModelFormatError
    with the offending line number."""
    r = _Reader(data)

    head = r.next()
    if head != f"{FORMAT_TAG} v{FORMAT_VERSION}":
        r.fail(f"unsupported model header {head!r} "
               f"(expected '{FORMAT_TAG} v{FORMAT_VERSION}')")

    parts = r.next("params").split()
    kv = {}
    for part in parts[1:]:
        if "=" not in part:
            r.fail(f"malformed params token {part!r}")
        key, value = part.split("=", 1)
        kv[key] = value
    try:
        params = ForestParams(
            n_trees=int(kv["n_trees"]),
            mtry=None if kv["mtry"] == "-" else int(kv["mtry"]),
            min_node_size=int(kv["min_node_size"]),
            max_depth=None if kv["max_depth"] == "-" else int(kv["max_depth"]),
            seed=int(kv["seed"]),
        )
    except (KeyError, ValueError) as exc:
        r.fail(f"bad params line: {exc}")

    m = _parse_int(r, r.next("features").split()[1], minimum=1)
    classes = r.next("classes").split()[1:]
    if len(classes) < 2:
        r.fail(f"need at least 2 classes, got {classes}")
    n_samples = _parse_int(r, r.next("samples").split()[1], minimum=1)

    trees: list[DecisionTree] = []
    oob = np.zeros((params.n_trees, n_samples), dtype=bool)
    for t in range(params.n_trees):
        tokens = r.next("tree").split()
        if len(tokens) != 4 or tokens[2] != "nodes":
            r.fail(f"malformed tree header {' '.join(tokens)!r}")
        if _parse_int(r, tokens[1]) != t:
            r.fail(f"expected tree {t}, got {tokens[1]}")
        n_nodes = _parse_int(r, tokens[3], minimum=1)

        oob_line = r.next("oob").split()
        if len(oob_line) != 2:
            r.fail("malformed oob line")
        try:
            packed = np.frombuffer(bytes.fromhex(oob_line[1]), dtype=np.uint8)
        except ValueError:
            r.fail("oob mask is not valid hex")
        bits = np.unpackbits(packed)
        if len(bits) < n_samples:
            r.fail(f"oob mask holds {len(bits)} bits, need {n_samples}")
        oob[t] = bits[:n_samples].astype(bool)

        feature = np.full(n_nodes, -1, dtype=np.int32)
        threshold = np.zeros(n_nodes, dtype=np.float64)
        left = np.full(n_nodes, -1, dtype=np.int32)
        right = np.full(n_nodes, -1, dtype=np.int32)
        counts = np.zeros((n_nodes, len(classes)), dtype=np.int64)
        for i in range(n_nodes):
            tokens = r.next().split()
            if tokens[0] == "i":
                if len(tokens) != 5:
                    r.fail(f"internal node needs 4 fields, got {len(tokens) - 1}")
                feature[i] = _parse_int(r, tokens[1], minimum=0)
                if feature[i] >= m:
                    r.fail(f"split feature {feature[i]} out of range (m={m})")
                try:
                    threshold[i] = float(tokens[2])
                except ValueError:
                    r.fail(f"bad threshold {tokens[2]!r}")
                left[i] = _parse_int(r, tokens[3], minimum=0)
                right[i] = _parse_int(r, tokens[4], minimum=0)
                if left[i] >= n_nodes or right[i] >= n_nodes:
                    r.fail(f"child index out of range in node {i}")
                # grown trees only ever point forward; anything else is
                # corruption and could make routing loop
                if left[i] <= i or right[i] <= i:
                    r.fail(f"node {i} has non-forward child link")
            elif tokens[0] == "l":
                if len(tokens) != len(classes) + 1:
                    r.fail(f"leaf needs {len(classes)} counts, got {len(tokens) - 1}")
                counts[i] = [_parse_int(r, tok, minimum=0) for tok in tokens[1:]]
            else:
                r.fail(f"unknown node tag {tokens[0]!r}")
        trees.append(DecisionTree(
            feature=feature, threshold=threshold, left=left, right=right,
            counts=counts, majority=counts.argmax(axis=1).astype(np.int32),
        ))

    if r.next() != "end":
        r.fail("missing 'end' sentinel")
    for rest in r.lines[r.pos:]:
        if rest:
            r.fail(f"trailing content after 'end': {rest!r}")
    return Forest(trees=trees, classes=classes, oob_masks=oob, m=m, params=params)
