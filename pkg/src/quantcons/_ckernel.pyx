# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled array kernel. Same contract as ``_pykernel.run`` but on int64.

Callers must make sure ``sum(|values|)`` fits in int64; every mass and state
component is bounded by it.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()


def run(out_ptr_in, out_idx_in, values_in, long max_rounds, long confirm_rounds):
    cdef int64_t[::1] out_ptr = np.ascontiguousarray(out_ptr_in, dtype=np.int64)
    cdef int64_t[::1] out_idx = np.ascontiguousarray(out_idx_in, dtype=np.int64)
    cdef int64_t[::1] values = np.ascontiguousarray(values_in, dtype=np.int64)
    cdef Py_ssize_t n = values.shape[0]

    y_a = np.array(values, dtype=np.int64)
    z_a = np.ones(n, dtype=np.int64)
    ys_a = np.array(values, dtype=np.int64)
    zs_a = np.ones(n, dtype=np.int64)
    tx_a = np.ones(n, dtype=np.int64)
    comp_a = np.ones(n, dtype=np.int64)
    bc_a = np.ones(n, dtype=np.int64)
    dr_a = np.zeros(n, dtype=np.int64)
    mg_a = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] y = y_a, z = z_a, ys = ys_a, zs = zs_a
    cdef int64_t[::1] tx = tx_a, comp = comp_a, bc = bc_a, dr = dr_a, mg = mg_a
    cdef int64_t[::1] cur = np.zeros(n, dtype=np.int64)

    cdef int64_t[::1] pb = np.ones(n, dtype=np.int64)
    cdef int64_t[::1] pby = np.array(values, dtype=np.int64)
    cdef int64_t[::1] pbz = np.ones(n, dtype=np.int64)
    cdef int64_t[::1] pd = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] pdt = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] pdy = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] pdz = np.zeros(n, dtype=np.int64)

    cdef int64_t[::1] has = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] bz = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] by = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] iy = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] iz = np.zeros(n, dtype=np.int64)

    changes = []
    tx_series = []
    sender_series = []
    cdef long converged = 0, rnd = 0, quiet = -1
    cdef int status = 0
    cdef long pending = n, deliveries, emitted, senders
    cdef Py_ssize_t s, j, l, t, e, deg
    cdef int64_t sy, sz
    cdef bint sbr, mtr

    while True:
        if pending == 0:
            if quiet < 0:
                quiet = confirm_rounds
            if quiet == 0:
                break
            quiet -= 1
        elif rnd >= max_rounds:
            status = 1
            break

        for j in range(n):
            has[j] = 0
            bz[j] = 0
            by[j] = 0
            iy[j] = 0
            iz[j] = 0
        deliveries = 0
        for s in range(n):
            if pb[s]:
                sy = pby[s]
                sz = pbz[s]
                for e in range(out_ptr[s], out_ptr[s + 1]):
                    l = out_idx[e]
                    has[l] = 1
                    if sz > bz[l] or (sz == bz[l] and sy > by[l]):
                        bz[l] = sz
                        by[l] = sy
                    deliveries += 1
                pb[s] = 0
            if pd[s]:
                t = pdt[s]
                has[t] = 1
                iy[t] += pdy[s]
                iz[t] += pdz[s]
                deliveries += 1
                pd[s] = 0

        emitted = 0
        senders = 0
        pending = 0
        for j in range(n):
            if not has[j]:
                continue
            comp[j] += 1
            if iz[j]:
                y[j] += iy[j]
                z[j] += iz[j]
                mg[j] += 1
            sbr = False
            if bz[j] > zs[j] or (bz[j] == zs[j] and by[j] > ys[j]):
                zs[j] = bz[j]
                ys[j] = by[j]
                sbr = True
            if z[j] > zs[j] or (z[j] == zs[j] and y[j] > ys[j]):
                zs[j] = z[j]
                ys[j] = y[j]
                sbr = True
            mtr = (0 < z[j] and z[j] < zs[j]) or (z[j] == zs[j] and y[j] < ys[j])
            if sbr:
                changes.append((rnd, j, ys[j], zs[j]))
                pb[j] = 1
                pby[j] = ys[j]
                pbz[j] = zs[j]
                bc[j] += 1
                tx[j] += 1
                emitted += 1
                pending += 1
            if mtr:
                deg = out_ptr[j + 1] - out_ptr[j]
                if deg == 0:
                    status = 2
                    break
                pd[j] = 1
                pdt[j] = out_idx[out_ptr[j] + cur[j]]
                pdy[j] = y[j]
                pdz[j] = z[j]
                y[j] = 0
                z[j] = 0
                cur[j] = (cur[j] + 1) % deg
                dr[j] += 1
                tx[j] += 1
                emitted += 1
                pending += 1
            if sbr or mtr:
                senders += 1
        if status:
            break
        if deliveries:
            converged = rnd
        tx_series.append(emitted)
        sender_series.append(senders)
        rnd += 1

    finals = (y_a.tolist(), z_a.tolist(), ys_a.tolist(), zs_a.tolist())
    counters = (tx_a.tolist(), comp_a.tolist(), bc_a.tolist(), dr_a.tolist(), mg_a.tolist())
    return status, converged, rnd, finals, counters, changes, tx_series, sender_series
