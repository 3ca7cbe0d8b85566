"""Independent reference computations used to freeze expected test values.

Everything here deliberately avoids the library's own differentiation,
rollout, and metric code paths: finite differences for gradients, scalar
loops for the GRU and the metrics, scipy for rotations.
"""

import numpy as np


def finite_difference_grads(closure, store, step=1e-5):
    """Central finite differences of a scalar closure w.r.t. every entry."""
    grads = {}
    for name, entry in store.entries():
        base = entry.value.numpy()
        flat = base.reshape(-1)
        g = np.zeros_like(flat)
        for i in range(flat.size):
            up = flat.copy()
            up[i] += step
            store.set_value(name, up.reshape(base.shape))
            f_up = closure().item()
            down = flat.copy()
            down[i] -= step
            store.set_value(name, down.reshape(base.shape))
            f_down = closure().item()
            g[i] = (f_up - f_down) / (2 * step)
        store.set_value(name, base)
        grads[name] = g.reshape(base.shape)
    return grads


def max_rel_error(analytic, numeric):
    a = np.asarray(analytic).reshape(-1)
    n = np.asarray(numeric).reshape(-1)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def scalar_gru_step(x, h, wz, bz, wr, br, wh, bh):
    """Reference GRU step with explicit index loops, one batch row."""
    din, dh = len(x), len(h)
    xh = list(x) + list(h)

    def affine(w, b, vec):
        out = []
        for j in range(dh):
            acc = b[j]
            for i in range(len(vec)):
                acc += vec[i] * w[i][j]
            out.append(acc)
        return out

    def sig(v):
        return [1.0 / (1.0 + np.exp(-u)) for u in v]

    z = sig(affine(wz, bz, xh))
    r = sig(affine(wr, br, xh))
    xrh = list(x) + [r[j] * h[j] for j in range(dh)]
    cand = [np.tanh(u) for u in affine(wh, bh, xrh)]
    return [(1 - z[j]) * h[j] + z[j] * cand[j] for j in range(dh)]


def scalar_sequence_l2(pred, truth):
    """Mean over frames of the squared distance, trivially recomputed."""
    total = 0.0
    for p, y in zip(pred, truth):
        for a, b in zip(np.asarray(p).reshape(-1), np.asarray(y).reshape(-1)):
            total += (a - b) ** 2
    return total / len(pred)


def scipy_frame_euler_error(pred, truth, spec):
    """Metric recomputed joint by joint with scipy's rotation conversions."""
    from scipy.spatial.transform import Rotation

    total = 0.0
    for joint in spec.joints:
        if joint.is_global:
            continue
        sl = slice(joint.start, joint.start + joint.length)
        # scipy 'ZYX' intrinsic euler returns (z, y, x); reorder to (x, y, z)
        ep = Rotation.from_rotvec(pred[sl]).as_euler("ZYX")[::-1]
        et = Rotation.from_rotvec(truth[sl]).as_euler("ZYX")[::-1]
        total += float(np.sum((ep - et) ** 2))
    return float(np.sqrt(total))
