from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError

# Denominator floor. Finite differences carry an absolute roundoff of
# roughly eps * |loss| / step, so entries far below the largest gradient
# entry are compared against a floor tied to that largest entry.
REL_FLOOR = 1e-6
SCALE_FLOOR = 1e-4


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    worst_index: tuple
    n_checked: int
    tolerance: float

    @property
    def passed(self):
        return self.max_rel_error <= self.tolerance


def relative_error(a, b, floor=REL_FLOOR):
    return abs(a - b) / max(abs(a), abs(b), floor)


def grad_check(model, loss_fn, tolerance=1e-5, step=1e-6, max_entries=None, rng=None):
    """Compare analytic gradients against central finite differences.

    ``model.params`` maps names to arrays that ``loss_fn(model)`` reads;
    ``loss_fn`` returns ``(loss, grads)`` with ``grads`` keyed like
    ``model.params``. Errors are relative, with the denominator floored
    at ``SCALE_FLOOR`` times the largest analytic entry. When
    ``max_entries`` is set, at most that many entries per parameter are
    probed, chosen with ``rng``.
    """
    loss, grads = loss_fn(model)
    if not np.isfinite(loss):
        raise NumericError(f"non-finite loss {loss}")
    gmax = max((float(np.max(np.abs(g))) for g in grads.values() if np.size(g)), default=0.0)
    floor = max(REL_FLOOR, SCALE_FLOOR * gmax)
    worst = (0.0, "", ())
    checked = 0
    for name, p in model.params.items():
        flat = p.reshape(-1)
        if not np.all(np.isfinite(flat)):
            raise NumericError(f"parameter {name} is not finite")
        gflat = np.asarray(grads[name]).reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            rng = rng if rng is not None else np.random.default_rng(0)
            idx = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        for k in idx:
            old = flat[k]
            flat[k] = old + step
            lp, _ = loss_fn(model)
            flat[k] = old - step
            lm, _ = loss_fn(model)
            flat[k] = old
            if not (np.isfinite(lp) and np.isfinite(lm)):
                raise NumericError(f"non-finite loss while perturbing {name}[{k}]")
            num = (lp - lm) / (2.0 * step)
            err = relative_error(gflat[k], num, floor)
            checked += 1
            if err > worst[0]:
                worst = (err, name, np.unravel_index(k, p.shape))
    return GradCheckReport(worst[0], worst[1], tuple(int(i) for i in worst[2]), checked, tolerance)
