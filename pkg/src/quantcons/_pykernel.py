"""Pure-Python array kernel; same contract as the compiled ``_ckernel``.

Works on Python ints, so it also covers values too large for int64.
"""


def run(out_ptr, out_idx, values, max_rounds, confirm_rounds):
    """Run from initialization to quiescence plus ``confirm_rounds`` silent rounds.

    ``out_idx[out_ptr[j]:out_ptr[j + 1]]`` lists node j's out-neighbors in
    round-robin order. Returns ``(status, converged, rounds, finals, counters,
    changes, tx_series, sender_series)``; status 0 is success, 1 means the
    round budget ran out, 2 means a node had to unicast with no out-edge.
    """
    n = len(values)
    y = [int(v) for v in values]
    z = [1] * n
    ys = list(y)
    zs = [1] * n
    cur = [0] * n
    tx = [1] * n
    comp = [1] * n
    bc = [1] * n
    dr = [0] * n
    mg = [0] * n

    pb = [True] * n
    pby = list(y)
    pbz = [1] * n
    pd = [False] * n
    pdt = [0] * n
    pdy = [0] * n
    pdz = [0] * n

    changes = []
    tx_series = []
    sender_series = []
    converged = 0
    rnd = 0
    quiet = -1  # confirm rounds left once quiescent
    status = 0
    pending = n

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

        has = [False] * n
        bz = [0] * n
        by = [0] * n
        iy = [0] * n
        iz = [0] * n
        deliveries = 0
        for s in range(n):
            if pb[s]:
                sy, sz = pby[s], pbz[s]
                for e in range(out_ptr[s], out_ptr[s + 1]):
                    l = out_idx[e]
                    has[l] = True
                    if sz > bz[l] or (sz == bz[l] and sy > by[l]):
                        bz[l] = sz
                        by[l] = sy
                    deliveries += 1
                pb[s] = False
            if pd[s]:
                t = pdt[s]
                has[t] = True
                iy[t] += pdy[s]
                iz[t] += pdz[s]
                deliveries += 1
                pd[s] = False

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
            mtr = 0 < z[j] < zs[j] or (z[j] == zs[j] and y[j] < ys[j])
            if sbr:
                changes.append((rnd, j, ys[j], zs[j]))
                pb[j] = True
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
                pd[j] = True
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

    finals = (y, z, ys, zs)
    counters = (tx, comp, bc, dr, mg)
    return status, converged, rnd, finals, counters, changes, tx_series, sender_series
