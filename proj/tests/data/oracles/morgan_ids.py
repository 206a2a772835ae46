"""Hand-run of the circular identifier update for three small molecules.

Atom invariants and bonds are typed in by hand (not taken from the C++
parser); the printed identifiers are frozen into featurize_test.cpp.
"""
import struct


def fnv1a32(ints):
    h = 2166136261
    for v in ints:
        for byte in struct.pack("<i", v if v < 2**31 else v - 2**32):
            h = ((h ^ byte) * 16777619) & 0xFFFFFFFF
    return h


def run(atoms, bonds, radius):
    # atoms: (Z, heavy degree, H count, charge, isotope, in ring)
    nbr = {i: [] for i in range(len(atoms))}
    for a, b, code in bonds:
        nbr[a].append((code, b))
        nbr[b].append((code, a))
    ids = [[fnv1a32(t) for t in atoms]]
    for r in range(1, radius + 1):
        prev = ids[-1]
        cur = []
        for i in range(len(atoms)):
            env = sorted((code, prev[j]) for code, j in nbr[i])
            flat = [r, prev[i]]
            for code, j in env:
                flat += [code, j]
            cur.append(fnv1a32(flat))
        ids.append(cur)
    return ids


MOLS = {
    "ethanol": ([(6, 1, 3, 0, 0, 0), (6, 2, 2, 0, 0, 0), (8, 1, 1, 0, 0, 0)],
                [(0, 1, 1), (1, 2, 1)]),
    "benzene": ([(6, 2, 1, 0, 0, 1)] * 6,
                [(i, (i + 1) % 6, 4) for i in range(6)]),
    # N[C@@H](C)C(=O)O
    "alanine": ([(7, 1, 2, 0, 0, 0), (6, 3, 1, 0, 0, 0), (6, 1, 3, 0, 0, 0),
                 (6, 3, 0, 0, 0, 0), (8, 1, 0, 0, 0, 0), (8, 1, 1, 0, 0, 0)],
                [(0, 1, 1), (1, 2, 1), (1, 3, 1), (3, 4, 2), (3, 5, 1)]),
}

for name, (atoms, bonds) in MOLS.items():
    ids = run(atoms, bonds, 2)
    print(name)
    for r, row in enumerate(ids):
        print("  r%d {%s}" % (r, ", ".join("%du" % v for v in row)))
    bits = sorted({v % 1024 for row in ids for v in row})
    print("  bits1024", bits)
