#!/usr/bin/env python3
"""Writes a random connected orientable closed gluing of N tetrahedra.

All tetrahedra are taken positively oriented, so every gluing permutation is
odd. Usage: make_fixture.py N SEED > out.tri
"""
import itertools
import random
import sys


def odd(p):
    inv = sum(1 for i in range(4) for j in range(i + 1, 4) if p[i] > p[j])
    return inv % 2 == 1


def make(n, seed):
    rng = random.Random(seed)
    while True:
        faces = [(t, f) for t in range(n) for f in range(4)]
        rng.shuffle(faces)
        glue = {}
        for a, b in zip(faces[0::2], faces[1::2]):
            choices = [p for p in itertools.permutations(range(4)) if p[a[1]] == b[1] and odd(p)]
            p = rng.choice(choices)
            inv = [0] * 4
            for i, x in enumerate(p):
                inv[x] = i
            glue[a] = (b, p)
            glue[b] = (a, tuple(inv))
        seen, stack = {0}, [0]
        while stack:
            t = stack.pop()
            for f in range(4):
                u = glue[(t, f)][0][0]
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        if len(seen) == n:
            return glue


def main():
    n, seed = int(sys.argv[1]), int(sys.argv[2])
    glue = make(n, seed)
    print(f"# random orientable gluing, {n} tetrahedra, seed {seed}")
    print(f"tets {n}")
    for t in range(n):
        for f in range(4):
            (u, g), p = glue[(t, f)]
            print(f"glue {t} {f} -> {u} {g} perm:{''.join(map(str, p))}")


if __name__ == "__main__":
    main()
