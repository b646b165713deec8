#!/usr/bin/env python3
"""Generate the synthetic congested map and the experiment-grid scenarios.

The map is rubble-strewn ground with a few long walls. A route through it is
kept open as a band seven cells wide, with clear plazas at its turns. It
stands in for brc202d, which is not redistributable (see fetch_brc202d.sh).

Each grid scenario moves the goal pattern along the route every k ticks, about
twenty cells ahead of where the agents are expected to be, the way a player
would keep clicking ahead of the team.

With --map, an existing map is used unchanged and the route is picked
automatically (used for brc202d).

Output is deterministic for a given seed.
"""

import argparse
import random
from collections import deque
from pathlib import Path

W, H = 120, 80

WIDE = [
    [(-4, -1), (0, -1), (4, -1)],
    [(-9, 0), (-6, 0), (6, 0), (9, 0)],
    [(-3, 1), (0, 1), (3, 1)],
]
NARROW = [
    [(-2, -2), (0, -2), (2, -2)],
    [(-3, -1), (-3, 1), (3, -1), (3, 1)],
    [(-1, 1), (1, 1), (0, 2)],
]
PATTERNS = {"wide": WIDE, "narrow": NARROW}
GROUP_NAMES = ["warriors", "rogues", "mages"]
FREQUENCIES = (4, 8, 12)

# Route waypoints on the synthetic map.
WAYPOINTS = [(20, 66), (20, 30), (50, 22), (90, 22), (98, 50)]
LEAD = 20      # cells between the agents' expected position and the goals
SPEED = 0.75   # expected cells per tick of the formation


def rotate(o, rot):
    dx, dy = o
    return {0: (dx, dy), 90: (-dy, dx), 180: (-dx, -dy), 270: (dy, -dx)}[rot]


def footprint(pattern, anchor, rot):
    return [(anchor[0] + r[0], anchor[1] + r[1])
            for group in pattern for r in (rotate(o, rot) for o in group)]


def heading(a, b):
    dx, dy = b[0] - a[0], b[1] - a[1]
    if abs(dx) >= abs(dy):
        return 90 if dx > 0 else 270
    return 180 if dy > 0 else 0


def neighbors(grid, c):
    x, y = c
    for nx, ny in ((x + 1, y), (x, y + 1), (x - 1, y), (x, y - 1)):
        if 0 <= ny < len(grid) and 0 <= nx < len(grid[0]) and grid[ny][nx]:
            yield nx, ny


def bfs(grid, src):
    dist = {src: 0}
    parent = {src: None}
    q = deque([src])
    while q:
        c = q.popleft()
        for n in neighbors(grid, c):
            if n not in dist:
                dist[n] = dist[c] + 1
                parent[n] = c
                q.append(n)
    return dist, parent


def path_to(parent, dst):
    out = []
    while dst is not None:
        out.append(dst)
        dst = parent[dst]
    return out[::-1]


def carve(grid, x0, y0, x1, y1):
    for y in range(max(0, y0), min(len(grid), y1 + 1)):
        for x in range(max(0, x0), min(len(grid[0]), x1 + 1)):
            grid[y][x] = True


def make_map(seed):
    rng = random.Random(seed)
    grid = [[True] * W for _ in range(H)]
    # Rubble: clumps of one to six blocked cells.
    for _ in range(900):
        x, y = rng.randrange(W), rng.randrange(H)
        for _ in range(rng.randint(1, 6)):
            if 0 <= x < W and 0 <= y < H:
                grid[y][x] = False
            x += rng.choice((-1, 0, 1))
            y += rng.choice((-1, 0, 1))
    # Long walls with occasional gaps.
    for _ in range(14):
        horizontal = rng.random() < 0.5
        length = rng.randint(10, 30)
        x, y = rng.randrange(W), rng.randrange(H)
        for i in range(length):
            cx, cy = (x + i, y) if horizontal else (x, y + i)
            if 0 <= cx < W and 0 <= cy < H and rng.random() > 0.1:
                grid[cy][cx] = False

    for a, b in zip(WAYPOINTS, WAYPOINTS[1:]):
        # Band seven cells wide: horizontal leg, then vertical leg.
        carve(grid, min(a[0], b[0]) - 3, a[1] - 3, max(a[0], b[0]) + 3, a[1] + 3)
        carve(grid, b[0] - 3, min(a[1], b[1]) - 3, b[0] + 3, max(a[1], b[1]) + 3)
    for x, y in WAYPOINTS:
        carve(grid, x - 10, y - 10, x + 10, y + 10)
    # Some rubble back inside the band so formations have to squeeze.
    for _ in range(60):
        a, b = rng.sample(range(len(WAYPOINTS)), 2)
        x = rng.randint(min(WAYPOINTS[a][0], WAYPOINTS[b][0]), max(WAYPOINTS[a][0], WAYPOINTS[b][0]))
        y = rng.randint(min(WAYPOINTS[a][1], WAYPOINTS[b][1]), max(WAYPOINTS[a][1], WAYPOINTS[b][1]))
        if all(abs(x - wx) > 10 or abs(y - wy) > 10 for wx, wy in WAYPOINTS):
            grid[y][x] = False

    # Keep only the component containing the start.
    dist, _ = bfs(grid, WAYPOINTS[0])
    return [[(x, y) in dist for x in range(W)] for y in range(H)]


def fits(grid, cells):
    return all(0 <= y < len(grid) and 0 <= x < len(grid[0]) and grid[y][x] for x, y in cells)


def route_through(grid, waypoints):
    route = [waypoints[0]]
    for b in waypoints[1:]:
        _, parent = bfs(grid, route[-1])
        if b not in parent:
            raise SystemExit(f"waypoint {b} unreachable")
        route += path_to(parent, b)[1:]
    return route


def route_heading(route, i):
    j = min(len(route) - 1, i + 6)
    if j == i:
        return heading(route[max(0, i - 6)], route[i])
    return heading(route[i], route[j])


def place(grid, pattern, route, s):
    # Prefer the route cell at s facing along the route, then nearby cells
    # and the other rotations; the formation lines up across the heading
    # and turns lengthwise only where it does not fit.
    h = route_heading(route, s)
    rots = [h, (h + 180) % 360, (h + 90) % 360, (h + 270) % 360]
    for radius in range(0, 7):
        for rot in rots:
            for ds in (0, 1, -1, 2, -2, 3, -3, 4, -4):
                i = min(len(route) - 1, max(0, s + ds))
                cx, cy = route[i]
                for dy in range(-radius, radius + 1):
                    for dx in range(-radius, radius + 1):
                        if max(abs(dx), abs(dy)) != radius:
                            continue
                        anchor = (cx + dx, cy + dy)
                        if fits(grid, footprint(pattern, anchor, rot)):
                            return anchor, rot
    return None


def schedule(grid, pattern, route, k):
    out = []
    i = 0
    while True:
        s = min(len(route) - 1, LEAD + round(SPEED * i * k))
        p = place(grid, pattern, route, s)
        if p is None:
            p = out[-1] if out else None
        if p is None:
            raise SystemExit("no placement near the route start")
        out.append(p)
        if s == len(route) - 1:
            return out
        i += 1


def pattern_block(name, pattern):
    lines = [f"pattern {name}"]
    for gid, offsets in enumerate(pattern):
        lines.append(f"  goals {gid} " + " ".join(f"{dx},{dy}" for dx, dy in offsets))
    lines.append("end")
    return lines


def scenario_text(map_name, start, start_rot, pattern_name, k, specs):
    lines = [
        "tapf-scenario 1",
        "# Ten agents in three groups following a route; the goals move about",
        "# twenty cells ahead of the team every k ticks.",
        "# Patterns are representative layouts with bounding-box widths 19 and 7.",
        f"map {map_name}",
        f"k {k}",
        "window 30 30 2",
        "max_ticks 10000",
    ]
    for gid, group in enumerate(NARROW):
        cells = " ".join(f"{start[0] + r[0]},{start[1] + r[1]}" for r in (rotate(o, start_rot) for o in group))
        lines.append(f"group {gid} {GROUP_NAMES[gid]} {cells}")
    lines += pattern_block("wide", WIDE)
    lines += pattern_block("narrow", NARROW)
    for anchor, rot in specs:
        lines.append(f"spec {pattern_name} {anchor[0]},{anchor[1]} {rot}")
    return "\n".join(lines) + "\n"


def read_map(path):
    lines = Path(path).read_text().splitlines()
    body = lines[lines.index("map") + 1:]
    return [[ch in ".G" for ch in row] for row in body if row]


def auto_route(grid, length=160):
    # Start at the open cell nearest the map center where both patterns fit
    # facing north, then follow a shortest path to a cell about `length` away
    # where the wide pattern fits.
    h, w = len(grid), len(grid[0])
    cells = sorted(((x, y) for y in range(h) for x in range(w) if grid[y][x]),
                   key=lambda c: (abs(c[0] - w // 2) + abs(c[1] - h // 2), c[1], c[0]))
    for start in cells:
        if not (fits(grid, footprint(NARROW, start, 0)) and fits(grid, footprint(WIDE, start, 0))):
            continue
        dist, parent = bfs(grid, start)
        far = [c for c, d in dist.items() if length <= d <= length + 20]
        far.sort(key=lambda c: (dist[c], c[1], c[0]))
        for end in far:
            if any(fits(grid, footprint(WIDE, end, r)) for r in (0, 90, 180, 270)):
                return path_to(parent, end)
    raise SystemExit("no usable route found")


def write_grid(out_dir, map_name, grid, route):
    out_dir.mkdir(parents=True, exist_ok=True)
    start = route[0]
    start_rot = route_heading(route, 0)
    if not fits(grid, footprint(NARROW, start, start_rot)):
        start_rot = 0
    for name, pattern in PATTERNS.items():
        for k in FREQUENCIES:
            specs = schedule(grid, pattern, route, k)
            (out_dir / f"{name}-{k}.scn").write_text(
                scenario_text(map_name, start, start_rot, name, k, specs))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=4242)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "fixtures")
    ap.add_argument("--map", type=Path, help="use this map and pick a route automatically")
    args = ap.parse_args()

    if args.map:
        grid = read_map(args.map)
        write_grid(args.out / "scn" / args.map.stem, args.map.name, grid, auto_route(grid))
        return

    grid = make_map(args.seed)
    route = route_through(grid, WAYPOINTS)
    maps = args.out / "maps"
    maps.mkdir(parents=True, exist_ok=True)
    rows = ["".join("." if c else "@" for c in row) for row in grid]
    with open(maps / "synthetic_caves.map", "w") as f:
        f.write(f"type octile\nheight {H}\nwidth {W}\nmap\n")
        f.write("\n".join(rows) + "\n")
    write_grid(args.out / "scn" / "synthetic_caves", "synthetic_caves.map", grid, route)
    blocked = sum(r.count("@") for r in rows)
    print(f"synthetic_caves.map: {W}x{H}, {100.0 * blocked / (W * H):.1f}% blocked, route {len(route) - 1} steps")


if __name__ == "__main__":
    main()
