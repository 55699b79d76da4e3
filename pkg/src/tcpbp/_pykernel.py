"""Pure-Python per-slot scheduling kernel.

Reference twin of ``_ckernel.pyx``: both must return identical results for
identical inputs, including every tie-break, so any change here has to be
mirrored there (tests/test_kernel.py checks this on random instances).

Array arguments (numpy):
    U, V       int64[N, S]  own backlogs / neighbours' reported backlogs
    K          float64[N]   per-node floor; 0 reproduces classical backpressure
    src, dst   int64[L]
    rate       float64[L]   per-link rate multiplier used in the weight
    on         uint8[L]     channel state
    adm        uint8[L, S]  flow may use link
    flow_key   float64[S]   tie-break rank, lower wins
    link_key   float64[L]   tie-break rank, lower wins
"""

NAME = "python"
MAX_EXACT = 64  # hard cap on enumerated candidates, mirrors the C side


def select_flows(U, V, K, src, dst, adm, flow_key):
    U = U.tolist()
    V = V.tolist()
    K = K.tolist()
    src = src.tolist()
    dst = dst.tolist()
    adm = adm.tolist()
    fkey = flow_key.tolist()
    n_flows = len(fkey)
    flows = []
    diffs = []
    for l in range(len(src)):
        i = src[l]
        Ui = U[i]
        Vj = V[dst[l]]
        k = K[i]
        a = adm[l]
        best = 0.0
        bs = -1
        for s in range(n_flows):
            u = Ui[s]
            if not a[s] or u <= 0:
                continue
            d = (k if k > u else float(u)) - Vj[s]
            if bs < 0 or d > best or (d == best and fkey[s] < fkey[bs]):
                best = d
                bs = s
        flows.append(bs)
        diffs.append(float(best) if bs >= 0 else 0.0)
    return flows, diffs


def activate(src, dst, weight, on, link_key, n_nodes, exact_limit):
    """Max-weight node-exclusive activation; returns (sorted link ids, exact?)."""
    src = src.tolist() if hasattr(src, "tolist") else list(src)
    dst = dst.tolist() if hasattr(dst, "tolist") else list(dst)
    weight = weight.tolist() if hasattr(weight, "tolist") else list(weight)
    on = on.tolist() if hasattr(on, "tolist") else list(on)
    lkey = link_key.tolist() if hasattr(link_key, "tolist") else list(link_key)
    n_on = sum(1 for x in on if x)
    cand = [l for l in range(len(src)) if on[l] and weight[l] > 0.0]
    used = [False] * n_nodes

    if n_on > exact_limit or len(cand) > MAX_EXACT:
        cand.sort(key=lambda l: (-weight[l], lkey[l], l))
        chosen = []
        for l in cand:
            a, b = src[l], dst[l]
            if not used[a] and not used[b]:
                used[a] = used[b] = True
                chosen.append(l)
        return sorted(chosen), False

    cand.sort(key=lambda l: (lkey[l], l))
    n = len(cand)
    w = [weight[l] for l in cand]
    suffix = [0.0] * (n + 1)
    for k in range(n - 1, -1, -1):
        suffix[k] = suffix[k + 1] + w[k]
    best_w = 0.0
    best: list[int] = []
    cur: list[int] = []

    def dfs(k, cur_w):
        nonlocal best_w, best
        if cur_w + suffix[k] <= best_w:
            return
        if k == n:
            best_w = cur_w
            best = cur[:]
            return
        l = cand[k]
        a, b = src[l], dst[l]
        if not used[a] and not used[b]:
            used[a] = used[b] = True
            cur.append(l)
            dfs(k + 1, cur_w + w[k])
            cur.pop()
            used[a] = used[b] = False
        dfs(k + 1, cur_w)

    dfs(0, 0.0)
    return sorted(best), True


def decide(U, V, K, src, dst, rate, on, adm, flow_key, link_key, n_nodes, exact_limit):
    """Flow selection plus activation for one slot.

    Returns ``(flows, diffs, active, exact)``: per-link chosen flow (-1 when
    none) and its differential, the activated link ids, and whether the exact
    enumeration ran.
    """
    flows, diffs = select_flows(U, V, K, src, dst, adm, flow_key)
    r = rate.tolist()
    weight = [diffs[l] * r[l] if flows[l] >= 0 and diffs[l] > 0.0 else 0.0
              for l in range(len(flows))]
    active, exact = activate(src, dst, weight, on, link_key, n_nodes, exact_limit)
    return flows, diffs, active, exact


class Decider:
    """``decide`` with the per-scenario arrays bound once.

    ``rank[l, s]`` (optional, integer-valued) is added to the activation
    tie-break key of link l when it carries flow s, so that among equal
    weights lower ranks win before the random key is consulted.
    """

    def __init__(self, K, src, dst, adm, n_nodes, exact_limit, rank=None):
        self.args = (K, src, dst, adm, n_nodes, exact_limit)
        self.rank = None if rank is None else [list(map(float, r)) for r in rank]

    def decide(self, U, V, rate, on, flow_key, link_key):
        K, src, dst, adm, n_nodes, exact_limit = self.args
        flows, diffs = select_flows(U, V, K, src, dst, adm, flow_key)
        weight = [d * r if f >= 0 and d > 0 else 0.0
                  for f, d, r in zip(flows, diffs, rate.tolist())]
        keys = link_key.tolist()
        if self.rank is not None:
            keys = [k + self.rank[l][f] if f >= 0 else k
                    for l, (k, f) in enumerate(zip(keys, flows))]
        active, exact = activate(src, dst, weight, on, keys, n_nodes, exact_limit)
        return flows, diffs, active, exact
