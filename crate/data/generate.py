#!/usr/bin/env python3
"""Regenerate the bundled maps in this directory.

The empty maps are exact copies of the benchmark layouts. The random, maze,
city and game maps are seeded synthetic stand-ins with the same dimensions
and obstacle density as their benchmark namesakes; drop the real MovingAI
files into $MAPF_LAB_DATA to use those instead.
"""
import random
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parent


def write(name, rows):
    h, w = len(rows), len(rows[0])
    text = f"type octile\nheight {h}\nwidth {w}\nmap\n" + "\n".join("".join(r) for r in rows) + "\n"
    (OUT / name).write_text(text)


def empty(n):
    return [["."] * n for _ in range(n)]


def random_map(n, blocked, seed):
    rng = random.Random(seed)
    rows = empty(n)
    for c in rng.sample(range(n * n), blocked):
        rows[c // n][c % n] = "@"
    return rows


def maze(n, corridor, wall, seed):
    """Perfect maze carved by randomized DFS with corridors `corridor` wide."""
    rng = random.Random(seed)
    pitch = corridor + wall
    cells = (n - wall) // pitch
    rows = [["@"] * n for _ in range(n)]

    def carve(cx, cy, dx=0, dy=0):
        x0, y0 = wall + cx * pitch, wall + cy * pitch
        for y in range(y0 - (wall if dy else 0), y0 + corridor):
            for x in range(x0 - (wall if dx else 0), x0 + corridor):
                rows[y][x] = "."

    seen = {(0, 0)}
    stack = [(0, 0)]
    carve(0, 0)
    while stack:
        cx, cy = stack[-1]
        nbrs = [(cx + dx, cy + dy, dx, dy) for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
                if 0 <= cx + dx < cells and 0 <= cy + dy < cells and (cx + dx, cy + dy) not in seen]
        if not nbrs:
            stack.pop()
            continue
        nx, ny, dx, dy = rng.choice(nbrs)
        seen.add((nx, ny))
        # carve the wall between the two cells from the side of the higher index
        if dx < 0 or dy < 0:
            carve(cx, cy, -dx, -dy)
            carve(nx, ny)
        else:
            carve(nx, ny, dx, dy)
        stack.append((nx, ny))
    return rows


def city(n, seed):
    """Street grid of building blocks with two open plazas and a park."""
    rng = random.Random(seed)
    rows = empty(n)
    block, street = 6, 2
    for by in range(street, n - street, block + street):
        for bx in range(street, n - street, block + street):
            if rng.random() < 0.15:
                continue
            for y in range(by, min(by + block, n - street)):
                for x in range(bx, min(bx + block, n - street)):
                    rows[y][x] = "T" if rng.random() < 0.02 else "@"
    for (px, py, size) in ((10, 10, 18), (40, 38, 16)):
        for y in range(py, min(py + size, n)):
            for x in range(px, min(px + size, n)):
                rows[y][x] = "."
    return rows


def game(n, seed):
    """Rooms of varying size joined by one-cell doors and corridors."""
    rng = random.Random(seed)
    rows = [["@"] * n for _ in range(n)]
    rooms = [(3, 3, 14, 10), (22, 2, 20, 16), (4, 20, 10, 22), (20, 24, 24, 20), (2, 44, 12, 3)]
    for x0, y0, w, h in rooms:
        for y in range(y0, min(y0 + h, n - 1)):
            for x in range(x0, min(x0 + w, n - 1)):
                rows[y][x] = "."
    def corridor(a, b):
        (x0, y0), (x1, y1) = a, b
        x, y = x0, y0
        while x != x1:
            rows[y][x] = "."
            x += 1 if x1 > x else -1
        while y != y1:
            rows[y][x] = "."
            y += 1 if y1 > y else -1
        rows[y][x] = "."
    corridor((16, 8), (22, 8))
    corridor((8, 12), (8, 20))
    corridor((14, 30), (20, 30))
    corridor((32, 17), (32, 24))
    corridor((8, 41), (8, 44))
    for _ in range(12):
        x, y = rng.randrange(1, n - 1), rng.randrange(1, n - 1)
        rows[y][x] = "@"
    return rows


def main():
    for n in (8, 16, 32, 48):
        write(f"empty-{n}-{n}.map", empty(n))
    write("random-32-32-10.map", random_map(32, 102, seed=10))
    write("maze-32-32-2.map", maze(32, 2, 1, seed=2))
    write("city-64-64.map", city(64, seed=7))
    write("game-48-48.map", game(48, seed=3))


if __name__ == "__main__":
    sys.exit(main())
