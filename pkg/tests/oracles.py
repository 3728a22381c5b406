"""Independent reference computations used by the tests."""

import itertools

# Exterior algebra on s_1..s_n (odd degree) modulo the ideal generated by the
# cyclic relation, dimensions found by brute-force rank over F_p.


def _rank_mod(rows, p):
    rows = [list(r) for r in rows]
    rank, col = 0, 0
    ncols = len(rows[0]) if rows else 0
    while rank < len(rows) and col < ncols:
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] % p), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][col], p - 2, p)
        rows[rank] = [v * inv % p for v in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][col] % p:
                f = rows[i][col]
                rows[i] = [(a - f * b) % p for a, b in zip(rows[i], rows[rank])]
        rank += 1
        col += 1
    return rank


def _wedge(a, b):
    """Product of sorted index tuples in an exterior algebra: (sign, tuple) or None."""
    if set(a) & set(b):
        return None
    seq = list(a + b)
    sign = 1
    for i in range(len(seq)):
        for j in range(len(seq) - 1 - i):
            if seq[j] > seq[j + 1]:
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
                sign = -sign
    return sign, tuple(seq)


def oracle_plane_betti(n, p):
    # cyclic relation for n = p generators: sum over k of s_k s_{k+1} ... (n-1 factors)
    rel = {}
    for k in range(n):
        word = [(k + j) % n for j in range(n - 1)]
        sign, mono = 1, ()
        for g in word:
            s, mono = _wedge(mono, (g,))
            sign *= s
        rel[mono] = (rel.get(mono, 0) + sign) % p
    table = {}
    for deg in range(n + 1):
        basis = list(itertools.combinations(range(n), deg))
        index = {m: i for i, m in enumerate(basis)}
        rows = []
        for mult in itertools.combinations(range(n), deg - (n - 1)) if deg >= n - 1 else []:
            row = [0] * len(basis)
            for mono, c in rel.items():
                r = _wedge(mult, mono)
                if r is not None:
                    row[index[r[1]]] = (row[index[r[1]]] + r[0] * c) % p
            rows.append(row)
        table[deg] = len(basis) - (_rank_mod(rows, p) if rows else 0)
    return {k: v for k, v in table.items() if v}
