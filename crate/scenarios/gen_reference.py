#!/usr/bin/env python3
"""Regenerates reference-topology.json, baseline.json and attack.json.

Layout: a ten-router ring R0..R9 with tree branches. P0 hangs off R3 and P1
off R8. Each attacker sits on its own access router (R20, R28, R10) next to
R3, next to two P0 consumers, so every attack path converges on R3.
FIB routes follow shortest paths (ties broken by neighbour name).
"""
import collections
import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent
P0_NS = "/nsf/fia/p0/video"
P1_NS = "/nsf/fia/p1/audio"

routers = [f"R{i}" for i in range(30)]
edges = [(f"R{i}", f"R{(i + 1) % 10}") for i in range(10)]
branches = {
    "R11": "R1", "R12": "R2", "R13": "R4", "R14": "R5", "R15": "R6",
    "R16": "R7", "R17": "R9", "R18": "R0", "R19": "R11", "R21": "R13",
    "R22": "R14", "R23": "R15", "R24": "R16", "R25": "R17", "R26": "R18",
    "R27": "R19", "R29": "R12",
}
edges += [(parent, child) for child, parent in branches.items()]
edges += [("R3", "R20"), ("R3", "R28"), ("R3", "R10")]

hosts = {"P0": "R3", "P1": "R8", "A0": "R20", "A1": "R28", "A2": "R10"}
p0_sites = ["R20", "R20", "R28", "R28", "R10", "R10", "R13", "R26"]
p1_sites = ["R19", "R21", "R23", "R24", "R25", "R17", "R16", "R15"]
consumers = [(f"C{k}", r, P0_NS) for k, r in enumerate(p0_sites)]
consumers += [(f"C{k + 8}", r, P1_NS) for k, r in enumerate(p1_sites)]
for c, r, _ in consumers:
    hosts[c] = r
edges += [(r, h) for h, r in hosts.items()]

roles = {"P": "producer", "A": "attacker", "C": "consumer"}
nodes = [{"id": r, "role": "router"} for r in routers]
nodes += [{"id": h, "role": roles[h[0]]} for h in hosts]

next_iface = collections.Counter()
links = []
adj = collections.defaultdict(list)
for a, b in edges:
    ia, ib = next_iface[a], next_iface[b]
    next_iface[a] += 1
    next_iface[b] += 1
    links.append({"a": a, "a_iface": ia, "b": b, "b_iface": ib})
    adj[a].append((b, ia))
    adj[b].append((a, ib))

fib = {r: [] for r in routers}
for producer, ns in (("P0", P0_NS), ("P1", P1_NS)):
    dist = {producer: 0}
    queue = collections.deque([producer])
    while queue:
        u = queue.popleft()
        for v, _ in sorted(adj[u]):
            if v not in dist and v.startswith("R"):
                dist[v] = dist[u] + 1
                queue.append(v)
    for r in routers:
        _, _, iface = min((dist[v], v, i) for v, i in adj[r] if v in dist)
        fib[r].append({"prefix": ns, "iface": iface})

topology = {"nodes": nodes, "links": links, "fib": fib}
baseline = {
    "topology": "reference-topology.json",
    "seed": 1,
    "horizon_ms": 30000,
    "poseidon": {"mode": "off"},
    "consumers": [{"node": c, "target_prefix": ns} for c, _, ns in consumers],
    "producers": [{"node": "P0", "namespace": P0_NS}, {"node": "P1", "namespace": P1_NS}],
}
attack = dict(baseline)
attack["attackers"] = [
    {"node": a, "strategy": "non_existent", "target_prefix": P0_NS} for a in ("A0", "A1", "A2")
]

for name, doc in (("reference-topology.json", topology), ("baseline.json", baseline), ("attack.json", attack)):
    (HERE / name).write_text(json.dumps(doc, indent=1) + "\n")
