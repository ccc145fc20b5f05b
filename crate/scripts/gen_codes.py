"""Writes systematic generator matrices of the shipped cyclic codes.

Each file holds `n k d_min` and the n rows of G (n x k, c = G u). The
first k codeword bits equal u; the remaining n - k are the remainder of
u(x) x^(n-k) modulo the generator polynomial.
"""

import pathlib

CODES = {
    # name: (n, k, generator polynomial in octal, d_min)
    "hamming_7_4": (7, 4, "13", 3),
    "bch_15_7": (15, 7, "721", 5),
    "bch_31_16": (31, 16, "107657", 7),
    "bch_63_30": (63, 30, "157464165547", 13),
}


def poly_mod(a, g):
    dg = g.bit_length() - 1
    while a and a.bit_length() - 1 >= dg:
        a ^= g << (a.bit_length() - 1 - dg)
    return a


def generator(n, k, g):
    cols = []
    for i in range(k):
        parity = poly_mod(1 << (n - k + i), g)
        col = [1 if j == i else 0 for j in range(k)]
        col += [(parity >> j) & 1 for j in range(n - k)]
        cols.append(col)
    return [[cols[i][j] for i in range(k)] for j in range(n)]


def min_distance(rows, k):
    masks = [sum(b << i for i, b in enumerate(r)) for r in rows]
    best = len(rows)
    for u in range(1, 1 << k):
        w = sum(bin(m & u).count("1") & 1 for m in masks)
        best = min(best, w)
    return best


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "data"
    out.mkdir(parents=True, exist_ok=True)
    (out / "repetition_3_1.txt").write_text("3 1 3\n1\n1\n1\n")
    for name, (n, k, octal, d) in CODES.items():
        g = int(octal, 8)
        assert g.bit_length() - 1 == n - k, name
        rows = generator(n, k, g)
        if k <= 20:
            assert min_distance(rows, k) == d, name
        lines = [f"{n} {k} {d}"] + [" ".join(map(str, r)) for r in rows]
        (out / f"{name}.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
