# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot-loop kernels.

Each function mirrors gatedcusum._kernel.fallback exactly (same operation
order, same branch structure) so the two backends are bit-identical; the
fallback module carries the reference docstrings.
"""


def fp_ungated(const double[::1] z, double s, double m, double h):
    cdef Py_ssize_t i, n = z.shape[0]
    cdef Py_ssize_t hit = -1
    with nogil:
        for i in range(n):
            s = s + z[i]
            if s < m:
                m = s
            if s - m > h:
                hit = i
                break
    return hit, s, m


def fp_battery(const double[::1] z, const double[::1] hv, double es,
               double b, double s, double m, double h):
    cdef Py_ssize_t i, n = z.shape[0]
    cdef Py_ssize_t hit = -1
    with nogil:
        for i in range(n):
            if b >= es:
                s = s + z[i]
                if s < m:
                    m = s
                b = b + hv[i] - es
            else:
                b = b + hv[i]
            if s - m > h:
                hit = i
                break
    return hit, b, s, m


def fp_chain(const double[::1] z, const double[::1] u, double alpha, double beta,
             int xi, double s, double m, double h):
    cdef Py_ssize_t i, n = z.shape[0]
    cdef Py_ssize_t hit = -1
    with nogil:
        for i in range(n):
            if xi == 1:
                s = s + z[i]
                if s < m:
                    m = s
                xi = 1 if u[i] < beta else 0
            else:
                xi = 0 if u[i] < alpha else 1
            if s - m > h:
                hit = i
                break
    return hit, xi, s, m


def battery_gates(const double[::1] hv, double es, double b,
                  unsigned char[::1] gates_out):
    cdef Py_ssize_t i, n = hv.shape[0]
    with nogil:
        for i in range(n):
            if b >= es:
                gates_out[i] = 1
                b = b + hv[i] - es
            else:
                gates_out[i] = 0
                b = b + hv[i]
    return b


def battery_hist(const double[::1] hv, double es, double b,
                 long long[::1] counts, double inv_step,
                 long long[:, ::1] trans, int prev_gate):
    cdef Py_ssize_t i, j, n = hv.shape[0]
    cdef Py_ssize_t nbins = counts.shape[0]
    cdef int g
    with nogil:
        for i in range(n):
            j = <Py_ssize_t>(b * inv_step)
            if j >= nbins:
                j = nbins - 1
            counts[j] += 1
            g = 1 if b >= es else 0
            if prev_gate >= 0:
                trans[prev_gate, g] += 1
            prev_gate = g
            if g:
                b = b + hv[i] - es
            else:
                b = b + hv[i]
    return b, prev_gate


def ladder_walk(const double[::1] z, int direction, double thr,
                double[::1] heights, long long[::1] epochs,
                Py_ssize_t i_rep, double s, long long steps,
                Py_ssize_t n_reps, long long cap):
    cdef Py_ssize_t i, n = z.shape[0]
    cdef Py_ssize_t consumed = 0
    cdef bint cap_hit = False
    with nogil:
        for i in range(n):
            consumed += 1
            s = s + z[i]
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


def ladder_walk_chain(const double[::1] z, const double[::1] u,
                      double alpha, double beta, int direction, double thr,
                      double[::1] heights, long long[::1] epochs,
                      Py_ssize_t i_rep, int xi, double s, long long steps,
                      Py_ssize_t n_reps, long long cap):
    cdef Py_ssize_t i, n = z.shape[0]
    cdef Py_ssize_t consumed = 0
    cdef bint cap_hit = False
    cdef int g
    with nogil:
        for i in range(n):
            consumed += 1
            steps += 1
            g = xi
            if xi == 1:
                s = s + z[i]
                xi = 1 if u[i] < beta else 0
            else:
                xi = 0 if u[i] < alpha else 1
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


def running_min_block(const double[::1] z, Py_ssize_t horizon,
                      double[::1] out_half, double[::1] out_full,
                      Py_ssize_t i0, Py_ssize_t nrep):
    cdef Py_ssize_t r, k, base
    cdef Py_ssize_t half = horizon // 2
    cdef double s, mn, mh
    with nogil:
        for r in range(nrep):
            base = r * horizon
            s = 0.0
            mn = 0.0
            mh = 0.0
            for k in range(horizon):
                s = s + z[base + k]
                if s < mn:
                    mn = s
                if k == half - 1:
                    mh = mn
            out_half[i0 + r] = -mh
            out_full[i0 + r] = -mn
    return None


def running_min_chain_block(const double[::1] z, const double[::1] u,
                            double alpha, double beta, Py_ssize_t horizon,
                            double[::1] out_half, double[::1] out_full,
                            Py_ssize_t i0, Py_ssize_t nrep):
    cdef Py_ssize_t r, k, base
    cdef Py_ssize_t half = horizon // 2
    cdef double s, mn, mh
    cdef int xi
    with nogil:
        for r in range(nrep):
            base = r * horizon
            s = 0.0
            mn = 0.0
            mh = 0.0
            xi = 1
            for k in range(horizon):
                if xi == 1:
                    s = s + z[base + k]
                    if s < mn:
                        mn = s
                    xi = 1 if u[base + k] < beta else 0
                else:
                    xi = 0 if u[base + k] < alpha else 1
                if k == half - 1:
                    mh = mn
            out_half[i0 + r] = -mh
            out_full[i0 + r] = -mn
    return None
