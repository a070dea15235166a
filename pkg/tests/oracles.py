"""Independent reference computations used by the tests.

Each oracle recomputes a quantity by a route that shares no code with the
package: brute-force enumeration, calendar arithmetic by hand, or a
different linear-algebra routine.
"""

import itertools
import math

import numpy as np

WEEK = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


def zeller_weekday(year: int, month: int, day: int) -> str:
    """Gregorian weekday by Zeller's congruence."""
    if month < 3:
        month += 12
        year -= 1
    k, j = year % 100, year // 100
    h = (day + (13 * (month + 1)) // 5 + k + k // 4 + j // 4 + 5 * j) % 7
    # h: 0 = Saturday, 1 = Sunday, 2 = Monday, ...
    return WEEK[(h + 5) % 7]


def period_by_interval(hour: int) -> str:
    table = [(range(7, 14), "Mor"), (range(14, 20), "Aft"), (range(20, 24), "Eve"), (range(0, 7), "Eve")]
    for hours, name in table:
        if hour in hours:
            return name
    raise ValueError(hour)


def _days_from_civil(y: int, m: int, d: int) -> int:
    """Days since 1970-01-01 (proleptic Gregorian)."""
    y -= m <= 2
    era = y // 400
    yoe = y - era * 400
    doy = (153 * (m + (-3 if m > 2 else 9)) + 2) // 5 + d - 1
    doe = yoe * 365 + yoe // 4 - yoe // 100 + doy
    return era * 146097 + doe - 719468


def minutes_since_epoch(stamp: str) -> float:
    date, time = stamp.split(" ")
    y, mo, d = (int(x) for x in date.split("-"))
    hh, mm, ss = (int(x) for x in time.split(":"))
    return _days_from_civil(y, mo, d) * 1440 + hh * 60 + mm + ss / 60


def augment_by_hand(lines):
    """Expected augmented records of raw lines already in timestamp order."""
    out = []
    prev = None
    for line in lines:
        user, stamp, subref = line.replace(",", "\t").split("\t")
        date = stamp.split(" ")[0]
        y, mo, d = (int(x) for x in date.split("-"))
        hour = int(stamp.split(" ")[1].split(":")[0])
        wd = zeller_weekday(y, mo, d)
        now = minutes_since_epoch(stamp)
        gap = 1440 if prev is None else min(1440, math.floor(now - prev))
        prev = now
        out.append({
            "subref_id": int(subref),
            "week_day": wd,
            "work_day": 0 if wd in ("Sat", "Sun") else 1,
            "conn_time": hour,
            "day_period": period_by_interval(hour),
            "prev_call": gap,
        })
    return out


def conductance_cq(W: np.ndarray, subset) -> float:
    """1 - cut / min(vol) by explicit double loops over node pairs."""
    n = W.shape[0]
    S = set(subset)
    cut = 0.0
    vol_s = vol_r = 0.0
    for a in range(n):
        deg = 0.0
        for b in range(n):
            if a == b:
                continue
            deg += W[a, b]
            if a in S and b not in S:
                cut += W[a, b]
        if a in S:
            vol_s += deg
        else:
            vol_r += deg
    return 1.0 - cut / min(vol_s, vol_r)


def all_proper_subsets(n: int):
    for r in range(1, n):
        yield from itertools.combinations(range(n), r)


def conductance_all_subsets(W: np.ndarray):
    """(subsets, CQ) for every proper non-empty subset, as bit-mask matrix products.

    Row r of the indicator matrix is the binary expansion of r + 1, so the
    cut of each subset is x^T W (1 - x) and its volume x^T W 1.
    """
    n = W.shape[0]
    codes = np.arange(1, 2**n - 1)
    X = ((codes[:, None] >> np.arange(n)) & 1).astype(np.float64)
    deg = W.sum(axis=1)
    cut = np.einsum("ri,ij,rj->r", X, W, 1.0 - X)
    vol = X @ deg
    cq = 1.0 - cut / np.minimum(vol, deg.sum() - vol)
    subsets = [tuple(np.flatnonzero(row)) for row in X.astype(bool)]
    return subsets, cq


def subspace_from_svd(C: np.ndarray, k: int = 3) -> np.ndarray:
    """Leading right singular vectors of the centred matrix (N x k basis)."""
    A = np.asarray(C, dtype=np.float64)
    A = A - A.mean(axis=0)
    _, _, vt = np.linalg.svd(A, full_matrices=False)
    return vt[:k].T


def principal_angles(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    qu, _ = np.linalg.qr(U)
    qv, _ = np.linalg.qr(V)
    s = np.linalg.svd(qu.T @ qv, compute_uv=False)
    # arcsin of the sine route is accurate near zero, unlike arccos(s)
    sines = np.linalg.svd(qv - qu @ (qu.T @ qv), compute_uv=False)
    return np.arcsin(np.clip(np.sort(sines)[::-1][: len(s)], 0.0, 1.0))


def greedy_pairing_oracle(table):
    """Max-first greedy pairing by scanning all remaining cells each round."""
    table = [list(r) for r in table]
    rows = set(range(len(table)))
    cols = set(range(len(table[0]))) if table else set()
    pairs = []
    while rows and cols:
        best = None
        for i in sorted(rows):
            for j in sorted(cols):
                if best is None or table[i][j] > best[2]:
                    best = (i, j, table[i][j])
        pairs.append(best)
        rows.discard(best[0])
        cols.discard(best[1])
    return pairs


def exhaustive_assignment(dist: np.ndarray, block: int = 10):
    """Minimum-total assignment of points to medoids by enumerating every labelling.

    ``dist`` is (k, N). The objective is a sum over points, so points are
    enumerated in blocks of ``block`` and the per-block minima concatenated;
    within a block all k**block labellings are scored and the first minimal
    labelling in lexicographic order wins.
    """
    k, n = dist.shape
    labels = []
    for lo in range(0, n, block):
        cols = range(lo, min(n, lo + block))
        best, best_lab = None, None
        for lab in itertools.product(range(k), repeat=len(cols)):
            total = sum(dist[l, c] for l, c in zip(lab, cols))
            if best is None or total < best:
                best, best_lab = total, lab
        labels.extend(best_lab)
    return np.asarray(labels)


def expected_jaccard_random(n: int, planted: int, found: int) -> float:
    """Exact mean Jaccard between a fixed planted set and a uniform random set."""
    P = set(range(planted))
    total = 0.0
    count = 0
    for F in itertools.combinations(range(n), found):
        F = set(F)
        total += len(P & F) / len(P | F)
        count += 1
    return total / count
