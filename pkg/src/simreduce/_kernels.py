"""Numba kernels for k-lookahead simulation games.

Spoiler's attacks are enumerated depth first.  At depth ``d`` the kernel
keeps the set of Duplicator states reachable by responses of length ``d``
that have not violated the winning condition yet (the pebbles).  A branch
is cut as soon as one pebble reaches a configuration that Duplicator wins;
Spoiler wins the round if some maximal attack is never cut.

Graphs are passed in CSR form: ``ptr[p * nsym + a]`` delimits the
``a``-successors of ``p`` in ``idx`` and ``sym`` holds the symbol of every
slot, so all edges of ``p`` lie in ``ptr[p * nsym]..ptr[(p + 1) * nsym]``.
"""

import numpy as np
from numba import njit

# pebble filters for the plain operator
FILTER_F = 1
FILTER_I = 2


@njit(cache=True, nogil=True)
def _attack_plain(p, q, k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx,
                  s_f, s_i, d_f, d_i, filt, W, peb, cnt, it, end, mark, stamp):
    s0 = s_ptr[p * nsym]
    e0 = s_ptr[(p + 1) * nsym]
    if s0 == e0:
        return False, stamp
    use_f = (filt & FILTER_F) != 0
    use_i = (filt & FILTER_I) != 0
    peb[0, 0] = q
    cnt[0] = 1
    d = 0
    it[0] = s0
    end[0] = e0
    while d >= 0:
        if it[d] == end[d]:
            d -= 1
            continue
        e = it[d]
        it[d] += 1
        a = s_sym[e]
        p2 = s_idx[e]
        stamp += 1
        need_f = use_f and s_f[p2]
        need_i = use_i and s_i[p2]
        c = 0
        good = False
        for i in range(cnt[d]):
            b = peb[d, i] * nsym + a
            for j in range(d_ptr[b], d_ptr[b + 1]):
                r2 = d_idx[j]
                if mark[r2] == stamp:
                    continue
                mark[r2] = stamp
                if need_f and not d_f[r2]:
                    continue
                if need_i and not d_i[r2]:
                    continue
                if not W[p2, r2]:
                    good = True
                    break
                peb[d + 1, c] = r2
                c += 1
            if good:
                break
        if good:
            continue
        if c == 0 or d + 1 == k:
            return True, stamp
        s1 = s_ptr[p2 * nsym]
        e1 = s_ptr[(p2 + 1) * nsym]
        if s1 == e1:
            return True, stamp
        d += 1
        cnt[d] = c
        it[d] = s1
        end[d] = e1
    return False, stamp


@njit(cache=True, nogil=True)
def solve_plain(k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, s_i, d_f, d_i, filt, W):
    """Least fixpoint ``mu W. CPre(W)`` computed in place on ``W``."""
    ns, nd = W.shape
    peb = np.empty((k + 1, nd), dtype=np.int64)
    cnt = np.zeros(k + 1, dtype=np.int64)
    it = np.zeros(k + 1, dtype=np.int64)
    end = np.zeros(k + 1, dtype=np.int64)
    mark = np.zeros(nd, dtype=np.int64)
    stamp = 0
    changed = True
    while changed:
        changed = False
        for p in range(ns):
            for q in range(nd):
                if W[p, q]:
                    continue
                win, stamp = _attack_plain(p, q, k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx,
                                           s_f, s_i, d_f, d_i, filt, W, peb, cnt, it, end,
                                           mark, stamp)
                if win:
                    W[p, q] = True
                    changed = True


# Flags of a pebble in the three-argument operator, encoded as bit (g * 2 + h):
# g: Duplicator visited an accepting state during the round;
# h: no Spoiler accepting visit is pending (unanswered) at the current position.

@njit(cache=True, nogil=True)
def _normalize(mask):
    if mask & 8:
        return 8
    if mask & 6:
        return mask & 6
    return mask


@njit(cache=True, nogil=True)
def _good(mask, p2, r2, X, Y, Z):
    if Z[p2, r2]:
        return False
    for g in range(2):
        for h in range(2):
            if mask & (1 << (g * 2 + h)):
                if (h == 1 or not X[p2, r2]) and (g == 1 or not Y[p2, r2]):
                    return True
    return False


@njit(cache=True, nogil=True)
def _attack_flags(p, q, k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, d_f,
                  X, Y, Z, peb, pmask, cnt, it, end, mark, pos, stamp):
    s0 = s_ptr[p * nsym]
    e0 = s_ptr[(p + 1) * nsym]
    if s0 == e0:
        return False, stamp
    g0 = 1 if d_f[q] else 0
    h0 = (1 if d_f[q] else 0) if s_f[p] else 1
    peb[0, 0] = q
    pmask[0, 0] = 1 << (g0 * 2 + h0)
    cnt[0] = 1
    d = 0
    it[0] = s0
    end[0] = e0
    while d >= 0:
        if it[d] == end[d]:
            d -= 1
            continue
        e = it[d]
        it[d] += 1
        a = s_sym[e]
        p2 = s_idx[e]
        acc_p = s_f[p2]
        stamp += 1
        c = 0
        good = False
        for i in range(cnt[d]):
            r = peb[d, i]
            m = pmask[d, i]
            b = r * nsym + a
            for j in range(d_ptr[b], d_ptr[b + 1]):
                r2 = d_idx[j]
                acc_r = d_f[r2]
                nm = 0
                for g in range(2):
                    for h in range(2):
                        if m & (1 << (g * 2 + h)):
                            g2 = 1 if (g == 1 or acc_r) else 0
                            if acc_p:
                                h2 = 1 if acc_r else 0
                            else:
                                h2 = 1 if (h == 1 or acc_r) else 0
                            nm |= 1 << (g2 * 2 + h2)
                if mark[r2] == stamp:
                    slot = pos[r2]
                    old = pmask[d + 1, slot]
                    nm = _normalize(old | nm)
                    if nm == old:
                        continue
                    pmask[d + 1, slot] = nm
                else:
                    mark[r2] = stamp
                    nm = _normalize(nm)
                    pos[r2] = c
                    peb[d + 1, c] = r2
                    pmask[d + 1, c] = nm
                    c += 1
                if _good(nm, p2, r2, X, Y, Z):
                    good = True
                    break
            if good:
                break
        if good:
            continue
        if c == 0 or d + 1 == k:
            return True, stamp
        s1 = s_ptr[p2 * nsym]
        e1 = s_ptr[(p2 + 1) * nsym]
        if s1 == e1:
            return True, stamp
        d += 1
        cnt[d] = c
        it[d] = s1
        end[d] = e1
    return False, stamp


@njit(cache=True, nogil=True)
def _lfp_flags(k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, d_f, X, Y, Z, target,
               peb, pmask, cnt, it, end, mark, pos, stamp):
    """Grow ``target`` in place to the least fixpoint of the given operator.

    ``target`` aliases the argument (X, Y or Z) that is being iterated.
    """
    ns, nd = target.shape
    changed = True
    while changed:
        changed = False
        for p in range(ns):
            for q in range(nd):
                if target[p, q]:
                    continue
                win, stamp = _attack_flags(p, q, k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx,
                                           s_f, d_f, X, Y, Z, peb, pmask, cnt, it, end,
                                           mark, pos, stamp)
                if win:
                    target[p, q] = True
                    changed = True
    return stamp


@njit(cache=True, nogil=True)
def _gfp_flags(k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, d_f, X, Y, Z, target,
               peb, pmask, cnt, it, end, mark, pos, stamp):
    """Shrink ``target`` in place to the greatest fixpoint of the given operator."""
    ns, nd = target.shape
    changed = True
    while changed:
        changed = False
        for p in range(ns):
            for q in range(nd):
                if not target[p, q]:
                    continue
                win, stamp = _attack_flags(p, q, k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx,
                                           s_f, d_f, X, Y, Z, peb, pmask, cnt, it, end,
                                           mark, pos, stamp)
                if not win:
                    target[p, q] = False
                    changed = True
    return stamp


@njit(cache=True, nogil=True)
def _cpre_flags_once(k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, d_f, X, Y, Z, out,
                     peb, pmask, cnt, it, end, mark, pos, stamp):
    """``out := CPre(X, Y, Z)`` evaluated pairwise without feedback."""
    ns, nd = out.shape
    for p in range(ns):
        for q in range(nd):
            win, stamp = _attack_flags(p, q, k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx,
                                       s_f, d_f, X, Y, Z, peb, pmask, cnt, it, end,
                                       mark, pos, stamp)
            out[p, q] = win
    return stamp


@njit(cache=True, nogil=True)
def solve_fair(k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, d_f, Z):
    """``mu Z. nu X. mu Y. CPre(X, Y, Z)``; ``Z`` holds a sound seed and the result."""
    ns, nd = Z.shape
    peb = np.empty((k + 1, nd), dtype=np.int64)
    pmask = np.zeros((k + 1, nd), dtype=np.int64)
    cnt = np.zeros(k + 1, dtype=np.int64)
    it = np.zeros(k + 1, dtype=np.int64)
    end = np.zeros(k + 1, dtype=np.int64)
    mark = np.zeros(nd, dtype=np.int64)
    pos = np.zeros(nd, dtype=np.int64)
    stamp = 0
    while True:
        X = np.ones((ns, nd), dtype=np.bool_)
        while True:
            # mu Y from Z: Z is below the least fixpoint while X contains Z
            Y = Z.copy()
            stamp = _lfp_flags(k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, d_f,
                               X, Y, Z, Y, peb, pmask, cnt, it, end, mark, pos, stamp)
            if np.array_equal(X, Y):
                break
            X = Y
        if np.array_equal(X, Z):
            break
        Z[:, :] = X


@njit(cache=True, nogil=True)
def solve_delayed(k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, d_f, W):
    """``mu W. CPre1(nu X. CPre2(X, W), W)``; ``W`` holds a sound seed and the result."""
    ns, nd = W.shape
    peb = np.empty((k + 1, nd), dtype=np.int64)
    pmask = np.zeros((k + 1, nd), dtype=np.int64)
    cnt = np.zeros(k + 1, dtype=np.int64)
    it = np.zeros(k + 1, dtype=np.int64)
    end = np.zeros(k + 1, dtype=np.int64)
    mark = np.zeros(nd, dtype=np.int64)
    pos = np.zeros(nd, dtype=np.int64)
    empty = np.zeros((ns, nd), dtype=np.bool_)
    stamp = 0
    while True:
        # nu X. CPre(empty, X, W), refined downwards in place
        X = np.ones((ns, nd), dtype=np.bool_)
        stamp = _gfp_flags(k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, d_f,
                           empty, X, W, X, peb, pmask, cnt, it, end, mark, pos, stamp)
        # one application of CPre(X, empty, W), accumulated into W
        grown = np.zeros((ns, nd), dtype=np.bool_)
        stamp = _cpre_flags_once(k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, d_f,
                                 X, empty, W, grown, peb, pmask, cnt, it, end, mark, pos,
                                 stamp)
        grown |= W
        if np.array_equal(grown, W):
            break
        W[:, :] = grown


# Counting-backward game.  T[p, q] is the least Duplicator credit (accepting
# visits of Duplicator minus those of Spoiler) needed at (p, q); INF marks a
# Spoiler win.  Credits are capped at ``cap``.

@njit(cache=True, nogil=True)
def _attack_count(p, q, k, nsym, cap, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, s_i, d_f, d_i,
                  T, floor, peb, pD, pM, cnt, it, end, sp_cnt, dval, mark, pos, stamp):
    """Max over Spoiler attacks of the min credit requirement over responses."""
    INF = cap + 1
    s0 = s_ptr[p * nsym]
    e0 = s_ptr[(p + 1) * nsym]
    if s0 == e0:
        return 0, stamp
    best = floor
    kk = k + 1
    peb[0, 0] = q
    pD[0, 0] = 0
    pM[0, 0] = 0
    cnt[0] = 1
    sp_cnt[0] = 0
    dval[0] = INF
    d = 0
    it[0] = s0
    end[0] = e0
    while d >= 0:
        if it[d] == end[d]:
            d -= 1
            continue
        e = it[d]
        it[d] += 1
        a = s_sym[e]
        p2 = s_idx[e]
        S = sp_cnt[d] + (1 if s_f[p2] else 0)
        chk = s_i[p2]
        stamp += 1
        c = 0
        dv = dval[d]
        for i in range(cnt[d]):
            r = peb[d, i]
            D0 = pD[d, i]
            M0 = pM[d, i]
            b = r * nsym + a
            for j in range(d_ptr[b], d_ptr[b + 1]):
                r2 = d_idx[j]
                if chk and not d_i[r2]:
                    continue
                D = D0 + (1 if d_f[r2] else 0)
                delta = S - D
                M = M0
                if chk and delta > M:
                    M = delta
                if M > cap:
                    continue
                key = r2 * kk + D
                if mark[key] == stamp:
                    slot = pos[key]
                    if pM[d + 1, slot] <= M:
                        continue
                    pM[d + 1, slot] = M
                else:
                    mark[key] = stamp
                    pos[key] = c
                    peb[d + 1, c] = r2
                    pD[d + 1, c] = D
                    pM[d + 1, c] = M
                    c += 1
                t = T[p2, r2]
                if t < INF:
                    req = delta + t
                    if req < M:
                        req = M
                    if req < 0:
                        req = 0
                    if req <= cap and req < dv:
                        dv = req
        if dv <= best:
            continue
        s1 = s_ptr[p2 * nsym]
        e1 = s_ptr[(p2 + 1) * nsym]
        if c == 0 or d + 1 == k or s1 == e1:
            best = dv
            if best >= INF:
                return INF, stamp
            continue
        d += 1
        cnt[d] = c
        sp_cnt[d] = S
        dval[d] = dv
        it[d] = s1
        end[d] = e1
    return best, stamp


@njit(cache=True, nogil=True)
def solve_counting(k, nsym, cap, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, s_i, d_f, d_i, T):
    """Least fixpoint of the credit requirements, computed in place on ``T``."""
    ns, nd = T.shape
    kk = k + 1
    peb = np.empty((k + 1, nd * kk), dtype=np.int64)
    pD = np.empty((k + 1, nd * kk), dtype=np.int64)
    pM = np.empty((k + 1, nd * kk), dtype=np.int64)
    cnt = np.zeros(k + 1, dtype=np.int64)
    it = np.zeros(k + 1, dtype=np.int64)
    end = np.zeros(k + 1, dtype=np.int64)
    sp_cnt = np.zeros(k + 1, dtype=np.int64)
    dval = np.zeros(k + 1, dtype=np.int64)
    mark = np.zeros(nd * kk, dtype=np.int64)
    pos = np.zeros(nd * kk, dtype=np.int64)
    INF = cap + 1
    stamp = 0
    changed = True
    while changed:
        changed = False
        for p in range(ns):
            for q in range(nd):
                if T[p, q] >= INF:
                    continue
                v, stamp = _attack_count(p, q, k, nsym, cap, s_ptr, s_idx, s_sym, d_ptr, d_idx,
                                         s_f, s_i, d_f, d_i, T, T[p, q], peb, pD, pM, cnt, it,
                                         end, sp_cnt, dval, mark, pos, stamp)
                if v > T[p, q]:
                    T[p, q] = v
                    changed = True
