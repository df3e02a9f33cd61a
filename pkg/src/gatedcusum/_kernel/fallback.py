"""Pure-Python/NumPy kernels, semantically and bitwise equal to the compiled core.

Where an exact vectorization exists (sequential accumulate operations) NumPy
is used; the inherently sequential recursions (battery level, gate chain) run
as plain Python loops.  Operation order matches the Cython core exactly so
both backends produce identical floating-point trajectories.
"""

from __future__ import annotations

import numpy as np


def fp_ungated(z, s, m, h):
    """Advance the reflected walk through chunk z; stop on first W > h.

    Returns (hit, s, m): hit is the local index of the crossing slot or -1,
    s the walk value and m its running minimum (both through the last slot
    processed).  W = s - m.
    """
    acc = np.add.accumulate(np.concatenate(([s], np.asarray(z))))[1:]
    mins = np.minimum.accumulate(np.concatenate(([m], acc)))[1:]
    crossed = acc - mins > h
    if crossed.any():
        i = int(np.argmax(crossed))
        return i, float(acc[i]), float(mins[i])
    return -1, float(acc[-1]), float(mins[-1])


def fp_battery(z, hv, es, b, s, m, h):
    hit = -1
    for i, (zi, hi) in enumerate(zip(z.tolist(), hv.tolist())):
        if b >= es:
            s = s + zi
            if s < m:
                m = s
            b = b + hi - es
        else:
            b = b + hi
        if s - m > h:
            hit = i
            break
    return hit, b, s, m


def fp_chain(z, u, alpha, beta, xi, s, m, h):
    hit = -1
    for i, (zi, ui) in enumerate(zip(z.tolist(), u.tolist())):
        if xi == 1:
            s = s + zi
            if s < m:
                m = s
            xi = 1 if ui < beta else 0
        else:
            xi = 0 if ui < alpha else 1
        if s - m > h:
            hit = i
            break
    return hit, xi, s, m


def battery_gates(hv, es, b, gates_out):
    for i, hi in enumerate(hv.tolist()):
        if b >= es:
            gates_out[i] = 1
            b = b + hi - es
        else:
            gates_out[i] = 0
            b = b + hi
    return b


def battery_hist(hv, es, b, counts, inv_step, trans, prev_gate):
    nbins = counts.shape[0]
    for hi in hv.tolist():
        j = int(b * inv_step)
        if j >= nbins:
            j = nbins - 1
        counts[j] += 1
        g = 1 if b >= es else 0
        if prev_gate >= 0:
            trans[prev_gate, g] += 1
        prev_gate = g
        b = b + hi - es if g else b + hi
    return b, prev_gate


def ladder_walk(z, direction, thr, heights, epochs, i_rep, s, steps, n_reps, cap):
    """Run back-to-back ladder replications through chunk z.

    direction > 0 stops a replication when the walk exceeds thr, direction < 0
    when it drops to thr or below.  Returns
    (i_rep, s, steps, consumed, cap_hit).
    """
    consumed = 0
    cap_hit = False
    for zi in z.tolist():
        consumed += 1
        s = s + zi
        steps += 1
        if (direction > 0 and s > thr) or (direction < 0 and s <= thr):
            heights[i_rep] = s
            epochs[i_rep] = steps
            i_rep += 1
            s = 0.0
            steps = 0
            if i_rep == n_reps:
                break
        elif steps >= cap:
            cap_hit = True
            break
    return i_rep, s, steps, consumed, cap_hit


def ladder_walk_chain(z, u, alpha, beta, direction, thr, heights, epochs,
                      i_rep, xi, s, steps, n_reps, cap):
    """Gated ladder replications; each replication restarts the chain at 1."""
    consumed = 0
    cap_hit = False
    for zi, ui in zip(z.tolist(), u.tolist()):
        consumed += 1
        steps += 1
        g = xi
        if xi == 1:
            s = s + zi
            xi = 1 if ui < beta else 0
        else:
            xi = 0 if ui < alpha else 1
        if g == 1 and ((direction > 0 and s > thr) or (direction < 0 and s < thr)):
            heights[i_rep] = s
            epochs[i_rep] = steps
            i_rep += 1
            s = 0.0
            steps = 0
            xi = 1
            if i_rep == n_reps:
                break
        elif steps >= cap:
            cap_hit = True
            break
    return i_rep, xi, s, steps, consumed, cap_hit


def running_min_block(z, horizon, out_half, out_full, i0, nrep):
    """Record -min of the walk at horizon//2 and horizon for nrep walks."""
    zb = np.asarray(z).reshape(nrep, horizon)
    acc = np.add.accumulate(zb, axis=1)
    mins = np.minimum(np.minimum.accumulate(acc, axis=1), 0.0)
    half = horizon // 2
    out_full[i0 : i0 + nrep] = -mins[:, -1]
    out_half[i0 : i0 + nrep] = -mins[:, half - 1] if half >= 1 else 0.0
    return None


def running_min_chain_block(z, u, alpha, beta, horizon, out_half, out_full, i0, nrep):
    half = horizon // 2
    zl = z.tolist()
    ul = u.tolist()
    for r in range(nrep):
        base = r * horizon
        s = 0.0
        mn = 0.0
        mh = 0.0
        xi = 1
        for k in range(horizon):
            if xi == 1:
                s = s + zl[base + k]
                if s < mn:
                    mn = s
                xi = 1 if ul[base + k] < beta else 0
            else:
                xi = 0 if ul[base + k] < alpha else 1
            if k == half - 1:
                mh = mn
        out_half[i0 + r] = -mh
        out_full[i0 + r] = -mn
    return None
