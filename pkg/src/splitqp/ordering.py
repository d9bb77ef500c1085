"""Fill-reducing orderings for the quasi-definite factorization.

minimum_degree_order implements quotient-graph minimum degree with
approximate external degrees and element absorption. Element boundaries
are immutable while the element is alive (a boundary member dies only by
absorbing the element), so per-node degree contributions are maintained
as cached sums instead of being recomputed. Quality is within the usual
minimum-degree family; downstream correctness never depends on the
ordering, so exactness tests may run the natural (identity) ordering.
"""

import heapq

import numpy as np


def natural_order(n):
    return np.arange(n, dtype=np.int64)


def minimum_degree_order(n, colptr, rowind):
    """Approximate minimum degree permutation for a symmetric pattern.

    The pattern is given by the upper triangle in CSC arrays. Returns perm
    with perm[k] = original index eliminated at step k. Deterministic:
    ties break on the smallest node index.
    """
    if n <= 1:
        return natural_order(n)

    adj = [set() for _ in range(n)]
    for j in range(n):
        for p in range(colptr[j], colptr[j + 1]):
            i = rowind[p]
            if i != j:
                adj[i].add(j)
                adj[j].add(i)

    elem_bound = {}                  # element id -> boundary set (alive vars)
    elem_size = {}                   # element id -> |boundary| - 1
    node_elems = [set() for _ in range(n)]
    esum = [0] * n                   # sum of elem_size over node_elems
    degree = [len(adj[v]) for v in range(n)]
    alive = np.ones(n, dtype=bool)
    heap = [(degree[v], v) for v in range(n)]
    heapq.heapify(heap)

    perm = np.empty(n, dtype=np.int64)
    for k in range(n):
        while True:
            d, v = heapq.heappop(heap)
            if alive[v] and d == degree[v]:
                break
        # boundary of the new element: direct neighbours plus the union of
        # the boundaries of every element v belongs to
        bound = set(adj[v])
        absorbed = node_elems[v]
        for e in absorbed:
            bound |= elem_bound[e]
        bound.discard(v)

        perm[k] = v
        alive[v] = False
        bsize = len(bound)
        eid = k

        for u in bound:
            au = adj[u]
            if len(au) <= bsize:
                au.discard(v)
                adj[u] = au - bound
                au = adj[u]
            else:
                au -= bound
                au.discard(v)
            ne = node_elems[u]
            if absorbed:
                common = ne & absorbed
                if common:
                    esum[u] -= sum(elem_size[e] for e in common)
                    ne -= common
            ne.add(eid)
            esum[u] += bsize - 1
            d = len(au) + esum[u]
            degree[u] = d
            heapq.heappush(heap, (d, u))

        for e in absorbed:
            del elem_bound[e]
            del elem_size[e]
        elem_bound[eid] = bound
        elem_size[eid] = bsize - 1
        node_elems[v] = set()
        adj[v] = set()
    return perm
