#!/usr/bin/env python3
"""Print the capacity landscape for a grid of code shapes.

For each (n, m): the symmetric-retrieval capacity 1 - m/n, the shared-
randomness floor m/(n-m), and how the plain private-retrieval capacity
approaches the symmetric one as the file count grows.
"""

from fractions import Fraction

from spir_mds import rates


def main():
    shapes = [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2), (4, 3), (5, 2), (5, 3), (6, 3)]
    ks = [1, 2, 3, 5, 10, 20]
    header = ["n", "m", "capacity", "floor"] + [f"pir(k={k})" for k in ks]
    rows = [header]
    for n, m in shapes:
        floor = rates.secrecy_floor(n, m)
        cap = rates.spir_capacity(n, m, floor)
        row = [str(n), str(m), str(cap), str(floor)]
        row += [str(rates.pir_capacity_mds(n, m, k)) for k in ks]
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    for r in rows:
        print("  ".join(cell.rjust(widths[i]) for i, cell in enumerate(r)))

    print("\ngap to the symmetric capacity at (4,2), shrinking geometrically:")
    half = Fraction(1, 2)
    for k in (1, 2, 4, 8, 16, 30):
        gap = rates.pir_capacity_mds(4, 2, k) - half
        print(f"  k={k:>2}: gap = {gap}  (< (1/2)^{k - 1} = {half ** (k - 1)})")


if __name__ == "__main__":
    main()
