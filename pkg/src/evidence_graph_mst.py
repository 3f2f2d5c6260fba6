#!/usr/bin/env python3
"""
Evidence Graph MST Decoder
==========================
Baseline joint decoder: combine sub-task scores into a weighted directed
multigraph, take the maximum spanning arborescence (Chu-Liu/Edmonds) and
read labels off the tree.

Edge convention: an edge src -> dst means "dst attaches to src", so src is
the parent of dst in the arborescence. The virtual root has index n.

Features:
- Chu-Liu/Edmonds with recursive cycle contraction
- Deterministic ties: edges are scanned in (src, dst, tag) order
- Microtext decoding with one forced central claim per candidate
- Essay decoding with the beta-mixed premise/support edge score
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx

from argument_corpus import (
    ATTACK, CLAIM, NONE, PREMISE, SUPPORT,
    EssayInstance, EssayLabels, JointWeights, MicrotextInstance, MicrotextLabels,
)

logger = logging.getLogger(__name__)

CENTRAL_CLAIM_TAG = "cc"
CLAIM_TAG = "claim"


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    weight: float
    tag: str


@dataclass(frozen=True)
class EvidenceGraph:
    """Segments 0..n-1 plus the virtual root n; parallel edges allowed."""
    n_nodes: int
    edges: Tuple[Edge, ...]

    @property
    def root(self) -> int:
        return self.n_nodes - 1

    def check(self):
        for edge in self.edges:
            if edge.src == edge.dst:
                raise ValueError(f"self-loop on node {edge.src}")
            if not (0 <= edge.src < self.n_nodes and 0 <= edge.dst < self.n_nodes):
                raise ValueError(f"edge {edge.src}->{edge.dst} outside 0..{self.n_nodes - 1}")
            if not math.isfinite(edge.weight):
                raise ValueError(f"edge {edge.src}->{edge.dst} has weight {edge.weight!r}")


@dataclass(frozen=True)
class Arborescence:
    root: int
    head: Dict[int, int] = field(default_factory=dict)
    edge_tag: Dict[int, str] = field(default_factory=dict)
    total_weight: float = 0.0

    def children(self, node: int) -> List[int]:
        return sorted(v for v, h in self.head.items() if h == node)

    def to_networkx(self) -> nx.DiGraph:
        tree = nx.DiGraph()
        tree.add_node(self.root)
        for node, parent in self.head.items():
            tree.add_edge(parent, node, tag=self.edge_tag[node])
        return tree

    def is_valid(self, n_nodes: int) -> bool:
        """One head per non-root node, acyclic, spanning all n_nodes."""
        tree = self.to_networkx()
        if set(tree.nodes) != set(range(n_nodes)) or self.root in self.head:
            return False
        return nx.is_arborescence(tree)


# =============================================================================
# CHU-LIU / EDMONDS
# =============================================================================

def _find_cycle(nodes: Sequence[int], root: int, parent: Dict[int, int]) -> List[int]:
    done = set()
    for start in sorted(nodes):
        path: List[int] = []
        on_path: Dict[int, int] = {}
        v = start
        while v != root and v not in done and v not in on_path:
            on_path[v] = len(path)
            path.append(v)
            v = parent[v]
        if v in on_path:
            return path[on_path[v]:]
        done.update(path)
    return []


def _edmonds(nodes: List[int], root: int, edges: List[Tuple[int, int, float]]) -> Dict[int, int]:
    """
    Returns:
        dst -> index into edges of the chosen incoming edge
    """
    best: Dict[int, int] = {}
    for k, (src, dst, weight) in enumerate(edges):
        if dst == root or src == dst:
            continue
        if dst not in best or weight > edges[best[dst]][2]:
            best[dst] = k

    missing = [v for v in nodes if v != root and v not in best]
    if missing:
        raise ValueError(f"nodes unreachable from root {root}: {missing}")

    cycle = _find_cycle(nodes, root, {v: edges[k][0] for v, k in best.items()})
    if not cycle:
        return best

    in_cycle = set(cycle)
    supernode = max(nodes) + 1
    contracted: List[Tuple[int, int, float]] = []
    origin: List[int] = []
    for k, (src, dst, weight) in enumerate(edges):
        s = supernode if src in in_cycle else src
        d = supernode if dst in in_cycle else dst
        if s == d:
            continue
        if dst in in_cycle:
            weight = weight - edges[best[dst]][2]
        contracted.append((s, d, weight))
        origin.append(k)

    inner = _edmonds([v for v in nodes if v not in in_cycle] + [supernode], root, contracted)

    chosen = {v: best[v] for v in cycle}
    for index in inner.values():
        k = origin[index]
        # the edge entering the supernode breaks the cycle at its original dst
        chosen[edges[k][1]] = k
    return chosen


def max_arborescence(graph: EvidenceGraph, root: Optional[int] = None) -> Arborescence:
    """
    Maximum-weight spanning arborescence rooted at root (default: graph.root).

    Raises:
        ValueError: malformed graph, or a node unreachable from root
    """
    graph.check()
    root = graph.root if root is None else root
    edges = sorted(graph.edges, key=lambda e: (e.src, e.dst, e.tag))
    chosen = _edmonds(list(range(graph.n_nodes)), root, [(e.src, e.dst, e.weight) for e in edges])
    head = {v: edges[k].src for v, k in sorted(chosen.items())}
    tags = {v: edges[k].tag for v, k in sorted(chosen.items())}
    total = math.fsum(edges[k].weight for k in chosen.values())
    return Arborescence(root=root, head=head, edge_tag=tags, total_weight=total)


# =============================================================================
# MICROTEXT
# =============================================================================

def build_graph_microtext(instance: MicrotextInstance, weights: JointWeights) -> EvidenceGraph:
    n = instance.n
    scores = instance.scores
    edges: List[Edge] = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            base = weights.w4 * scores.at[i, j]
            edges.append(Edge(j, i, float(base + weights.w3 * scores.fu[i, 0]), SUPPORT))
            edges.append(Edge(j, i, float(base + weights.w3 * scores.fu[i, 1]), ATTACK))
    for i in range(n):
        weight = weights.w1 * scores.cc[i] + weights.w3 * scores.fu[i, 2]
        edges.append(Edge(n, i, float(weight), CENTRAL_CLAIM_TAG))
    return EvidenceGraph(n_nodes=n + 1, edges=tuple(edges))


def _propagate_roles(arb: Arborescence, n: int) -> List[bool]:
    roles: Dict[int, bool] = {}

    def role(node: int) -> bool:
        chain = []
        while node not in roles and arb.head[node] != arb.root:
            chain.append(node)
            node = arb.head[node]
        if node not in roles:
            roles[node] = True
        current = roles[node]
        for child in reversed(chain):
            current = current if arb.edge_tag[child] == SUPPORT else not current
            roles[child] = current
        return roles[chain[0]] if chain else current

    return [role(i) for i in range(n)]


def read_off_microtext(arb: Arborescence, instance: MicrotextInstance) -> MicrotextLabels:
    """
    Root children are central claims (function none, proponent); every other
    segment takes its incoming edge tag as function and its parent as target.
    Support copies the parent's role, attack flips it.
    """
    n = instance.n
    cc = tuple(arb.head[i] == arb.root for i in range(n))
    fu = tuple(NONE if cc[i] else arb.edge_tag[i] for i in range(n))
    at = tuple(tuple(not cc[i] and arb.head[i] == j for j in range(n)) for i in range(n))
    return MicrotextLabels(cc=cc, ro=tuple(_propagate_roles(arb, n)), fu=fu, at=at)


def decode_mst_microtext(instance: MicrotextInstance, weights: JointWeights) -> Tuple[MicrotextLabels, Arborescence]:
    """
    Decode once per candidate central claim k (root edge root->k only) and
    keep the best tree weight plus w2 * RO of the proponent segments.
    Ties go to the smaller k.
    """
    graph = build_graph_microtext(instance, weights)
    root = graph.root
    best: Optional[Tuple[float, MicrotextLabels, Arborescence]] = None
    for k in range(instance.n):
        edges = tuple(e for e in graph.edges if e.src != root or e.dst == k)
        arb = max_arborescence(EvidenceGraph(graph.n_nodes, edges))
        labels = read_off_microtext(arb, instance)
        role_score = math.fsum(float(instance.scores.ro[i]) for i in range(instance.n) if labels.ro[i])
        score = arb.total_weight + weights.w2 * role_score
        if best is None or score > best[0]:
            best = (score, labels, arb)
    if best is None:
        raise ValueError(f"{instance.id}: cannot decode an empty text")
    logger.debug(f"[DECODE] {instance.id}: mst score {best[0]:.6f}")
    return best[1], best[2]


# =============================================================================
# ESSAYS
# =============================================================================

def build_graph_essays(instance: EssayInstance, beta: float) -> EvidenceGraph:
    """Edge j->i (i supports j): beta * P_i + (1 - beta) * SUP_ij; root->i: beta * C_i."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta={beta!r} outside [0, 1]")
    n = instance.n
    scores = instance.scores
    edges: List[Edge] = []
    for i in range(n):
        for j in range(n):
            if i != j:
                weight = beta * scores.premise[i] + (1.0 - beta) * scores.sup[i, j]
                edges.append(Edge(j, i, float(weight), SUPPORT))
    for i in range(n):
        edges.append(Edge(n, i, float(beta * scores.claim[i]), CLAIM_TAG))
    return EvidenceGraph(n_nodes=n + 1, edges=tuple(edges))


def read_off_essays(arb: Arborescence, instance: EssayInstance) -> EssayLabels:
    n = instance.n
    claims = [arb.head[i] == arb.root for i in range(n)]
    return EssayLabels(
        ctype=tuple(CLAIM if claims[i] else PREMISE for i in range(n)),
        rel=tuple(tuple(not claims[i] and arb.head[i] == j for j in range(n)) for i in range(n)),
    )


def decode_mst_essays(instance: EssayInstance, beta: float) -> Tuple[EssayLabels, Arborescence]:
    arb = max_arborescence(build_graph_essays(instance, beta))
    return read_off_essays(arb, instance), arb
