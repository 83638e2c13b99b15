"""
Finite-difference gradient checking

Compares analytic gradients from backward() with central differences.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np

from pyprbgan.autodiff.tensor import Node, backward, topological_order, zero_grads

logger = logging.getLogger(__name__)


@dataclass
class GradCheckResult:
    """
    Outcome of a gradient check

    Attributes:
        max_rel_error: Largest element-wise relative error seen
        n_checked: Number of parameter entries compared
        tolerance: Threshold the check was run against
        per_param: Largest relative error per parameter index
        n_skipped: Entries left out because a +-h step crossed a kink
    """
    max_rel_error: float
    n_checked: int
    tolerance: float
    per_param: Dict[int, float] = field(default_factory=dict)
    n_skipped: int = 0

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """|a - n| / max(|a|, |n|, floor), element-wise"""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def kink_pattern(root: Node) -> List[np.ndarray]:
    """
    Side of every kink the graph sits on

    Signs of leaky_relu inputs and the row order of every sort_columns
    input. Two graphs of the same structure with equal patterns lie on the
    same smooth piece.
    """
    pattern: List[np.ndarray] = []
    for node in topological_order(root):
        if node.op == "leaky_relu":
            pattern.append(np.sign(node.parents[0].value))
        elif node.op == "sort_columns":
            pattern.append(np.argsort(node.parents[0].value, axis=0, kind="stable"))
    return pattern


def _same_pattern(a: List[np.ndarray], b: List[np.ndarray]) -> bool:
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def smooth_numerical_gradient(
    build_loss: Callable[[], Node],
    param: Node,
    h: float = 1e-5,
    indices: Optional[Sequence[int]] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Central differences that flag steps crossing a kink

    Returns:
        (derivatives, smooth) where smooth[k] is False when the +h or -h
        graph has a different kink pattern from the unperturbed one
    """
    base = kink_pattern(build_loss())
    flat = param.value.reshape(-1)
    if indices is None:
        indices = range(flat.size)

    result = np.zeros(len(indices))
    smooth = np.ones(len(indices), dtype=bool)
    for k, i in enumerate(indices):
        original = flat[i]
        flat[i] = original + h
        plus = build_loss()
        flat[i] = original - h
        minus = build_loss()
        flat[i] = original
        result[k] = (plus.item() - minus.item()) / (2.0 * h)
        smooth[k] = _same_pattern(kink_pattern(plus), base) and _same_pattern(kink_pattern(minus), base)
    return result, smooth


def numerical_gradient(
    loss_fn: Callable[[], float],
    param: Node,
    h: float = 1e-5,
    indices: Optional[Sequence[int]] = None
) -> np.ndarray:
    """
    Central-difference gradient of loss_fn with respect to param

    Args:
        loss_fn: Recomputes the scalar loss from the current parameter values
        param: Leaf whose value is perturbed in place
        h: Step size
        indices: Flat indices to evaluate (default: all)

    Returns:
        Flat array of derivatives for the requested indices
    """
    flat = param.value.reshape(-1)
    if indices is None:
        indices = range(flat.size)

    result = np.zeros(len(indices))
    for k, i in enumerate(indices):
        original = flat[i]
        flat[i] = original + h
        plus = loss_fn()
        flat[i] = original - h
        minus = loss_fn()
        flat[i] = original
        result[k] = (plus - minus) / (2.0 * h)
    return result


def check_gradients(
    build_loss: Callable[[], Node],
    params: Sequence[Node],
    h: float = 1e-5,
    tolerance: float = 1e-4,
    max_entries: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    skip_kinks: bool = False
) -> GradCheckResult:
    """
    Compare backward() against central differences for every parameter

    Args:
        build_loss: Builds a fresh graph and returns its scalar root
        params: Leaves to check
        h: Finite-difference step
        tolerance: Relative error threshold
        max_entries: Check at most this many random entries per parameter
        rng: Generator used to pick entries (required with max_entries)
        skip_kinks: Leave out entries whose +-h step crosses a leaky_relu
            kink or reorders a sort

    Returns:
        GradCheckResult
    """
    zero_grads(params)
    backward(build_loss())
    analytic = [p.grad.reshape(-1).copy() for p in params]

    def loss_value() -> float:
        return build_loss().item()

    per_param: Dict[int, float] = {}
    n_checked = 0
    n_skipped = 0
    for index, param in enumerate(params):
        size = param.value.size
        if max_entries is not None and size > max_entries:
            if rng is None:
                rng = np.random.default_rng(0)
            entries: List[int] = sorted(rng.choice(size, size=max_entries, replace=False).tolist())
        else:
            entries = list(range(size))

        if skip_kinks:
            numeric, smooth = smooth_numerical_gradient(build_loss, param, h=h, indices=entries)
            n_skipped += int((~smooth).sum())
            entries = [e for e, keep in zip(entries, smooth) if keep]
            numeric = numeric[smooth]
        else:
            numeric = numerical_gradient(loss_value, param, h=h, indices=entries)
        errors = relative_error(analytic[index][entries], numeric)
        per_param[index] = float(errors.max()) if errors.size else 0.0
        n_checked += len(entries)

    zero_grads(params)
    worst = max(per_param.values()) if per_param else 0.0
    logger.debug(f"Gradient check: {n_checked} entries ({n_skipped} skipped at kinks), "
                 f"max relative error {worst:.3e}")
    return GradCheckResult(max_rel_error=worst, n_checked=n_checked, tolerance=tolerance,
                           per_param=per_param, n_skipped=n_skipped)
