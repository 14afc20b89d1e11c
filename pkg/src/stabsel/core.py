"""Shared vocabulary: problem shapes, selections, group structures and datasets.

Indices are 0-based in memory. Every external format (CSV, JSON, CLI) uses
1-based indices; conversion happens only in the I/O helpers below.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

Pair = Tuple[int, int]


class DataError(ValueError):
    """Raised for malformed or degenerate input data."""


@dataclass(frozen=True)
class ProblemShape:
    n_inputs: int
    n_outputs: int
    n_samples: int

    def __post_init__(self):
        if self.n_inputs < 1 or self.n_outputs < 1:
            raise ValueError(f"need d >= 1 and t >= 1, got {self.n_inputs}, {self.n_outputs}")
        if self.n_samples < 2:
            raise ValueError(f"need N >= 2, got {self.n_samples}")

    @property
    def n_elements(self) -> int:
        """Size of the selection set K (all input-output pairs)."""
        return self.n_inputs * self.n_outputs

    def pairs(self) -> Iterable[Pair]:
        for i in range(self.n_inputs):
            for j in range(self.n_outputs):
                yield (i, j)


@dataclass(frozen=True)
class Selection:
    """A set of (input, output) pairs, 0-based."""

    shape: ProblemShape
    members: frozenset = frozenset()

    def __post_init__(self):
        members = frozenset((int(i), int(j)) for i, j in self.members)
        d, t = self.shape.n_inputs, self.shape.n_outputs
        for i, j in members:
            if not (0 <= i < d and 0 <= j < t):
                raise ValueError(f"pair {(i, j)} outside shape d={d}, t={t}")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_mask(cls, shape: ProblemShape, mask) -> "Selection":
        mask = np.asarray(mask, dtype=bool).reshape(shape.n_inputs, shape.n_outputs)
        rows, cols = np.nonzero(mask)
        return cls(shape, frozenset(zip(rows.tolist(), cols.tolist())))

    @classmethod
    def from_pairs(cls, shape: ProblemShape, pairs: Iterable[Sequence[int]], one_based: bool = True):
        off = 1 if one_based else 0
        return cls(shape, frozenset((int(i) - off, int(j) - off) for i, j in pairs))

    def to_mask(self) -> np.ndarray:
        mask = np.zeros((self.shape.n_inputs, self.shape.n_outputs), dtype=bool)
        for i, j in self.members:
            mask[i, j] = True
        return mask

    def to_pairs(self, one_based: bool = True) -> list:
        off = 1 if one_based else 0
        return [[i + off, j + off] for i, j in sorted(self.members)]

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.members

    def __iter__(self):
        return iter(sorted(self.members))


@dataclass(frozen=True)
class GroundTruth:
    positives: Selection

    @property
    def shape(self) -> ProblemShape:
        return self.positives.shape

    @property
    def negatives(self) -> Selection:
        everything = frozenset(self.shape.pairs())
        return Selection(self.shape, everything - self.positives.members)


@dataclass(frozen=True)
class ConfusionCounts:
    true_positives: int
    false_positives: int

    @property
    def size(self) -> int:
        return self.true_positives + self.false_positives


def _same_grid(a: ProblemShape, b: ProblemShape) -> bool:
    # Subsample fits carry a smaller N; only (d, t) must agree.
    return a.n_inputs == b.n_inputs and a.n_outputs == b.n_outputs


def confusion(selection: Selection, truth: GroundTruth) -> ConfusionCounts:
    """Count true positives T = |S* ∩ S| and false positives V = |N* ∩ S|."""
    if not _same_grid(selection.shape, truth.shape):
        raise ValueError(f"shape mismatch: selection {selection.shape} vs truth {truth.shape}")
    tp = len(selection.members & truth.positives.members)
    return ConfusionCounts(tp, len(selection.members) - tp)


def confusion_mask(mask: np.ndarray, truth_mask: np.ndarray) -> ConfusionCounts:
    """Array version of :func:`confusion` for hot loops."""
    mask = np.asarray(mask, dtype=bool)
    tp = int(np.count_nonzero(mask & truth_mask))
    return ConfusionCounts(tp, int(np.count_nonzero(mask)) - tp)


@dataclass(frozen=True)
class GroupStructure:
    """Input groups G (subsets of inputs) and output groups H (subsets of outputs).

    Groups may overlap and need not cover every index. Empty weight tuples
    mean "use the algorithm's default" (see :meth:`weights`).
    """

    input_groups: tuple = ()
    output_groups: tuple = ()
    input_weights: tuple = ()
    output_weights: tuple = ()

    def __post_init__(self):
        ig = tuple(tuple(sorted(set(int(i) for i in g))) for g in self.input_groups)
        og = tuple(tuple(sorted(set(int(i) for i in g))) for g in self.output_groups)
        iw = tuple(float(w) for w in self.input_weights)
        ow = tuple(float(w) for w in self.output_weights)
        if (iw and len(iw) != len(ig)) or (ow and len(ow) != len(og)):
            raise ValueError("weight lists must match their group lists in length")
        if any(len(g) == 0 for g in ig + og):
            raise ValueError("groups must be non-empty")
        if any(not (w > 0 and math.isfinite(w)) for w in iw + ow):
            raise ValueError("group weights must be positive and finite")
        object.__setattr__(self, "input_groups", ig)
        object.__setattr__(self, "output_groups", og)
        object.__setattr__(self, "input_weights", iw)
        object.__setattr__(self, "output_weights", ow)

    def weights(self, default: str = "unit") -> Tuple[np.ndarray, np.ndarray]:
        """Resolved (input, output) weights; ``default`` is ``"unit"`` or ``"sqrt"`` (sqrt of group size)."""

        def resolve(given, groups):
            if given:
                return np.array(given, dtype=float)
            if default == "sqrt":
                return np.sqrt([float(len(g)) for g in groups])
            return np.ones(len(groups))

        return resolve(self.input_weights, self.input_groups), resolve(self.output_weights, self.output_groups)

    @property
    def is_empty(self) -> bool:
        return not self.input_groups and not self.output_groups

    def validate(self, n_inputs: int, n_outputs: int) -> None:
        for g in self.input_groups:
            if g[0] < 0 or g[-1] >= n_inputs:
                raise ValueError(f"input group {g} out of range for d={n_inputs}")
        for h in self.output_groups:
            if h[0] < 0 or h[-1] >= n_outputs:
                raise ValueError(f"output group {h} out of range for t={n_outputs}")

    def is_partition(self, n_inputs: int) -> bool:
        """True if the input groups are disjoint and cover range(n_inputs)."""
        seen = [i for g in self.input_groups for i in g]
        return len(seen) == n_inputs and sorted(seen) == list(range(n_inputs))

    def to_json(self) -> dict:
        return {
            "input_groups": [[i + 1 for i in g] for g in self.input_groups],
            "output_groups": [[j + 1 for j in h] for h in self.output_groups],
            "input_weights": list(self.input_weights),
            "output_weights": list(self.output_weights),
        }

    @classmethod
    def from_json(cls, obj: Optional[Mapping[str, Any]]) -> "GroupStructure":
        if not obj:
            return cls()
        return cls(
            input_groups=[[i - 1 for i in g] for g in obj.get("input_groups", [])],
            output_groups=[[j - 1 for j in h] for h in obj.get("output_groups", [])],
            input_weights=obj.get("input_weights", []),
            output_weights=obj.get("output_weights", []),
        )


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DatasetBundle:
    """Design matrix X (N×d), response Y (N×t), groups, optional truth and provenance."""

    design: np.ndarray
    response: np.ndarray
    groups: GroupStructure = field(default_factory=GroupStructure)
    truth: Optional[GroundTruth] = None
    meta: Mapping[str, Any] = field(default_factory=dict)
    beta_true: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.design, dtype=float)
        Y = np.asarray(self.response, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.ndim != 2:
            raise DataError("design must be a 2-d matrix")
        if X.shape[0] != Y.shape[0]:
            raise DataError(f"design has {X.shape[0]} rows but response has {Y.shape[0]}")
        object.__setattr__(self, "design", _readonly(X))
        object.__setattr__(self, "response", _readonly(Y))
        if self.beta_true is not None:
            object.__setattr__(self, "beta_true", _readonly(np.asarray(self.beta_true).reshape(X.shape[1], Y.shape[1])))
        shape = self.shape  # validates dimensions
        self.groups.validate(shape.n_inputs, shape.n_outputs)
        if self.truth is not None and not _same_grid(self.truth.shape, shape):
            raise DataError("ground truth shape does not match data")

    @property
    def shape(self) -> ProblemShape:
        N, d = self.design.shape
        return ProblemShape(d, self.response.shape[1], N)

    @property
    def truth_mask(self) -> Optional[np.ndarray]:
        return None if self.truth is None else self.truth.positives.to_mask()

    def subset(self, rows) -> "DatasetBundle":
        """Bundle restricted to the given rows (no re-standardization)."""
        rows = np.asarray(rows)
        return DatasetBundle(self.design[rows], self.response[rows], self.groups, self.truth, self.meta, self.beta_true)

    def with_response(self, response) -> "DatasetBundle":
        return DatasetBundle(self.design, response, self.groups, self.truth, self.meta, self.beta_true)


def standardize_columns(A: np.ndarray, label: str = "column") -> np.ndarray:
    """Center each column and scale it to population standard deviation 1."""
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise DataError(f"non-finite values in {label}s")
    mean = A.mean(axis=0)
    centered = A - mean
    sd = np.sqrt(np.mean(centered**2, axis=0))
    scale = np.maximum(np.abs(mean), 1.0)
    bad = np.flatnonzero(sd <= 1e-12 * scale)
    if bad.size:
        raise DataError(f"constant {label} {int(bad[0]) + 1} cannot be standardized")
    return centered / sd


def standardize(bundle: DatasetBundle) -> DatasetBundle:
    X = standardize_columns(bundle.design, "design column")
    Y = standardize_columns(bundle.response, "response column")
    return DatasetBundle(X, Y, bundle.groups, bundle.truth, bundle.meta, bundle.beta_true)


def is_standardized(bundle: DatasetBundle, mean_tol: float = 1e-8, sd_tol: float = 1e-6) -> bool:
    for A in (bundle.design, bundle.response):
        if np.max(np.abs(A.mean(axis=0))) > mean_tol:
            return False
        if np.max(np.abs(A.std(axis=0) - 1.0)) > sd_tol:
            return False
    return True


# ---------------------------------------------------------------------------
# directory format: X.csv, Y.csv, meta.json


def _read_matrix(path: Path, rows: int, cols: int) -> np.ndarray:
    try:
        A = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if A.shape != (rows, cols):
        raise DataError(f"{path.name} is {A.shape[0]}x{A.shape[1]}, meta.json declares {rows}x{cols}")
    return A


def save_bundle(bundle: DatasetBundle, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "X.csv", bundle.design, delimiter=",", fmt="%.17g")
    np.savetxt(out / "Y.csv", bundle.response, delimiter=",", fmt="%.17g")
    shape = bundle.shape
    meta = {
        "shape": {"n_inputs": shape.n_inputs, "n_outputs": shape.n_outputs, "n_samples": shape.n_samples},
        "groups": bundle.groups.to_json(),
        "truth": None if bundle.truth is None else bundle.truth.positives.to_pairs(),
    }
    extra = dict(bundle.meta)
    meta["seed"] = extra.pop("seed", None)
    meta["config"] = extra.pop("config", None)
    meta["provenance"] = extra
    with open(out / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
    return out


def load_bundle(in_dir) -> DatasetBundle:
    src = Path(in_dir)
    try:
        with open(src / "meta.json") as fh:
            meta = json.load(fh)
        sh = meta["shape"]
        d, t, N = int(sh["n_inputs"]), int(sh["n_outputs"]), int(sh["n_samples"])
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad or missing meta.json in {src}: {exc}") from exc
    X = _read_matrix(src / "X.csv", N, d)
    Y = _read_matrix(src / "Y.csv", N, t)
    shape = ProblemShape(d, t, N)
    truth = None
    if meta.get("truth") is not None:
        truth = GroundTruth(Selection.from_pairs(shape, meta["truth"]))
    info = dict(meta.get("provenance") or {})
    info["seed"] = meta.get("seed")
    info["config"] = meta.get("config")
    return DatasetBundle(X, Y, GroupStructure.from_json(meta.get("groups")), truth, info)
