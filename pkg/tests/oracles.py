"""Brute-force reference computations, independent of the package internals."""
from collections import defaultdict, deque
from itertools import combinations


def flood_fill_components(n, pairs):
    """Connected components of an undirected graph by BFS over an adjacency list."""
    adj = defaultdict(set)
    for a, b in pairs:
        adj[a].add(b)
        adj[b].add(a)
    label = [-1] * n
    for s in range(n):
        if label[s] >= 0:
            continue
        label[s] = s
        q = deque([s])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if label[v] < 0:
                    label[v] = s
                    q.append(v)
    return label


def partition(labels, elements=None):
    """Frozen set-of-sets view of a labelling, for label-free comparison."""
    groups = defaultdict(set)
    items = enumerate(labels) if elements is None else ((e, labels[e]) for e in elements)
    for x, lab in items:
        groups[lab].add(x)
    return frozenset(frozenset(g) for g in groups.values())


def join_partitions(n, *partitions):
    """Finest partition coarser than every input partition (transitive closure)."""
    pairs = []
    for p in partitions:
        for block in p:
            members = sorted(block)
            pairs.extend(zip(members, members[1:]))
    return partition(flood_fill_components(n, pairs))


def all_pairs_scores(clusters, entities):
    """Pairwise precision/recall by literal O(n^2) enumeration."""
    idx = range(len(clusters))
    tp = fp = fn = 0
    for i, j in combinations(idx, 2):
        same_c = clusters[i] == clusters[j]
        same_e = entities[i] == entities[j]
        tp += same_c and same_e
        fp += same_c and not same_e
        fn += same_e and not same_c
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return precision, recall


def h1_pairs(txs):
    """Co-spend links: every pair of non-script inputs in each transaction."""
    from eutxo_cluster.address_model import AddressKind

    for tx in txs:
        keys = [i.id for i in tx.inputs if i.kind != AddressKind.SHELLEY_SCRIPT]
        yield from combinations(keys, 2)


def h2_pairs(txs):
    """Shared-stake links: every pair of addresses carrying the same stake key."""
    by_stake = defaultdict(set)
    for tx in txs:
        for info in list(tx.inputs) + [o for o, _ in tx.outputs]:
            if info.stake_key is not None:
                by_stake[info.stake_key].add(info.id)
    for members in by_stake.values():
        yield from combinations(sorted(members), 2)
