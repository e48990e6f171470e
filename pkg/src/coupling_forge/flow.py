"""Dinic max-flow on real-valued capacities.

Residual capacities at or below ``eps`` count as saturated; the same
threshold drives the residual reachability used for minimum cuts, so the
cut returned always matches the flow found.
"""

from __future__ import annotations

import math
from collections import deque


class FlowNetwork:
    def __init__(self, num_nodes: int, eps: float = 1e-15):
        self.num_nodes = num_nodes
        self.eps = eps
        self.adj = [[] for _ in range(num_nodes)]
        self.to = []
        self.cap = []
        self._original = []

    def add_edge(self, u: int, v: int, capacity: float = math.inf) -> int:
        """Add ``u -> v`` and return its edge id (the reverse edge is ``id ^ 1``)."""
        eid = len(self.to)
        self.to += [v, u]
        self.cap += [float(capacity), 0.0]
        self._original += [float(capacity), 0.0]
        self.adj[u].append(eid)
        self.adj[v].append(eid + 1)
        return eid

    def flow(self, eid: int) -> float:
        """Flow currently pushed along edge ``eid``."""
        return self.cap[eid ^ 1]

    def _levels(self, s, t):
        level = [-1] * self.num_nodes
        level[s] = 0
        queue = deque([s])
        eps, to, cap = self.eps, self.to, self.cap
        while queue:
            u = queue.popleft()
            for e in self.adj[u]:
                v = to[e]
                if level[v] < 0 and cap[e] > eps:
                    level[v] = level[u] + 1
                    queue.append(v)
        return level if level[t] >= 0 else None

    def _blocking_flow(self, s, t, level):
        eps, to, cap, adj = self.eps, self.to, self.cap, self.adj
        it = [0] * self.num_nodes
        pushed = 0.0
        path = []  # edge ids from s to the current node
        u = s
        while True:
            if u == t:
                bottleneck = min(cap[e] for e in path)
                for e in path:
                    cap[e] -= bottleneck
                    cap[e ^ 1] += bottleneck
                pushed += bottleneck
                # retreat to the tail of the first saturated edge
                k = next(k for k, e in enumerate(path) if cap[e] <= eps)
                del path[k:]
                u = to[path[-1]] if path else s
                continue
            edges = adj[u]
            while it[u] < len(edges):
                e = edges[it[u]]
                v = to[e]
                if cap[e] > eps and level[v] == level[u] + 1:
                    break
                it[u] += 1
            if it[u] < len(edges):
                e = edges[it[u]]
                path.append(e)
                u = to[e]
                continue
            # dead end
            level[u] = -1
            if not path:
                return pushed
            e = path.pop()
            u = to[e ^ 1]
            it[u] += 1

    def max_flow(self, s: int, t: int) -> float:
        total = 0.0
        while True:
            level = self._levels(s, t)
            if level is None:
                return total
            pushed = self._blocking_flow(s, t, level)
            if pushed <= 0.0:
                return total
            total += pushed

    def residual_reachable(self, s: int) -> set[int]:
        """Nodes reachable from ``s`` through edges with residual above ``eps``."""
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for e in self.adj[u]:
                v = self.to[e]
                if v not in seen and self.cap[e] > self.eps:
                    seen.add(v)
                    stack.append(v)
        return seen
