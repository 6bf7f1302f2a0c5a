"""Discrete Bayesian networks with exact inference by variable elimination.

Network documents are JSON objects::

    {
      "nodes":   [{"name": "A", "states": ["lo", "hi"], "parents": []}, ...],
      "cpts":    [{"node": "A", "rows": [[0.7, 0.3]]}, ...],
      "outcome": {"node": "Infection", "state": "yes"},          # optional
      "risk_bins": {"node": "PIR", "edges": [0, .25, .5, .75, 1]} # optional
    }

CPT rows are ordered row-major over the parents in declared order
(the last parent varies fastest), and each row lists the node's
probabilities in declared state order.  A node without parents has a
single row.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from itertools import product
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    DomainError,
    ImpossibleEvidenceError,
    InputParseError,
    NetworkValidationError,
)

ROW_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Node:
    name: str
    states: tuple[str, ...]
    parents: tuple[str, ...] = ()

    @property
    def cardinality(self) -> int:
        return len(self.states)


# -- validation --------------------------------------------------------------


def _find_cycle(parents: Mapping[str, Sequence[str]]) -> list[str] | None:
    """Return one directed cycle as a node list (first node repeated at the end)."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in parents}
    stack: list[str] = []

    def visit(n):
        color[n] = GREY
        stack.append(n)
        for p in parents[n]:
            if p not in color:
                continue
            if color[p] == GREY:
                return stack[stack.index(p):] + [p]
            if color[p] == WHITE:
                found = visit(p)
                if found:
                    return found
        stack.pop()
        color[n] = BLACK
        return None

    for n in sorted(parents):
        if color[n] == WHITE:
            cycle = visit(n)
            if cycle:
                # edges run parent -> child, the walk went child -> parent
                return cycle[::-1]
    return None


def validate_network(nodes, cpts, outcome=None, risk_bins=None) -> list[str]:
    """Check a raw network description and list every problem found.

    Arguments are the parsed ``nodes``, ``cpts``, ``outcome`` and
    ``risk_bins`` members of a network document.  An empty list means
    the network is valid.  Malformed input of any shape is reported,
    never raised.
    """
    errors: list[str] = []
    declared: dict[str, list[str]] = {}
    parent_map: dict[str, list[str]] = {}

    if not isinstance(nodes, list):
        errors.append("nodes: must be a list")
        nodes = []
    for i, nd in enumerate(nodes):
        where = f"nodes[{i}]"
        if not isinstance(nd, Mapping):
            errors.append(f"{where}: must be an object")
            continue
        name = nd.get("name")
        if not isinstance(name, str) or not name:
            errors.append(f"{where}: missing or non-string name")
            continue
        where = f"{where} ({name})"
        if name in declared:
            errors.append(f"{where}: duplicate node name")
            continue
        states = nd.get("states")
        if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
            errors.append(f"{where}: states must be a list of strings")
            states = []
        else:
            if len(states) < 2:
                errors.append(f"{where}: needs at least 2 states, has {len(states)}")
            if len(set(states)) != len(states):
                errors.append(f"{where}: duplicate state labels")
        parents = nd.get("parents", [])
        if not isinstance(parents, list) or not all(isinstance(p, str) for p in parents):
            errors.append(f"{where}: parents must be a list of node names")
            parents = []
        elif len(set(parents)) != len(parents):
            errors.append(f"{where}: duplicate parents")
        if name in parents:
            errors.append(f"{where}: node lists itself as a parent")
        declared[name] = list(states)
        parent_map[name] = list(parents)

    for name, parents in parent_map.items():
        for p in parents:
            if p not in declared:
                errors.append(f"node {name}: unknown parent {p!r}")

    cycle = _find_cycle({n: [p for p in ps if p in declared and p != n] for n, ps in parent_map.items()})
    if cycle:
        errors.append("cycle: " + " -> ".join(cycle))

    seen_cpt: set[str] = set()
    if not isinstance(cpts, list):
        errors.append("cpts: must be a list")
        cpts = []
    for i, cpt in enumerate(cpts):
        where = f"cpts[{i}]"
        if not isinstance(cpt, Mapping):
            errors.append(f"{where}: must be an object")
            continue
        node = cpt.get("node")
        if node not in declared:
            errors.append(f"{where}: CPT for unknown node {node!r}")
            continue
        where = f"{where} ({node})"
        if node in seen_cpt:
            errors.append(f"{where}: duplicate CPT for node {node}")
            continue
        seen_cpt.add(node)
        rows = cpt.get("rows")
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            errors.append(f"{where}: rows must be a list of lists")
            continue
        n_rows = math.prod(len(declared.get(p, [])) for p in parent_map[node])
        # unknown parents are already reported; a row count against them is meaningless
        if all(p in declared for p in parent_map[node]) and len(rows) != n_rows:
            errors.append(f"{where}: has {len(rows)} rows, expected {n_rows}")
        width = len(declared[node])
        for r, row in enumerate(rows):
            rw = f"{where} row {r}"
            if len(row) != width:
                errors.append(f"{rw}: has {len(row)} entries, expected {width}")
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row):
                errors.append(f"{rw}: non-numeric entry")
                continue
            if not all(math.isfinite(v) for v in row):
                errors.append(f"{rw}: non-finite entry")
                continue
            if any(v < 0 for v in row):
                errors.append(f"{rw}: negative probability")
            total = math.fsum(row)
            if abs(total - 1.0) > ROW_SUM_TOLERANCE:
                errors.append(f"{rw}: row sums to {total:.12g}, not 1")
    for name in declared:
        if name not in seen_cpt:
            errors.append(f"node {name}: no CPT")

    if outcome is not None:
        if not isinstance(outcome, Mapping):
            errors.append("outcome: must be an object with node and state")
        elif outcome.get("node") not in declared:
            errors.append(f"outcome: unknown node {outcome.get('node')!r}")
        elif outcome.get("state") not in declared[outcome["node"]]:
            errors.append(
                f"outcome: node {outcome['node']} has no state {outcome.get('state')!r}"
            )

    if risk_bins is not None:
        if not isinstance(risk_bins, Mapping) or risk_bins.get("node") not in declared:
            errors.append("risk_bins: must name a declared node")
        else:
            k = len(declared[risk_bins["node"]])
            edges = risk_bins.get("edges")
            if edges is not None:
                if (
                    not isinstance(edges, list)
                    or not all(isinstance(e, (int, float)) for e in edges)
                    or len(edges) != k + 1
                    or any(b <= a for a, b in zip(edges, edges[1:]))
                ):
                    errors.append(
                        f"risk_bins: edges must be {k + 1} strictly increasing numbers"
                    )
    return errors


# -- the network ------------------------------------------------------------


class BayesNet:
    """An immutable, validated discrete Bayesian network."""

    def __init__(self, nodes, cpts, outcome=None, risk_bins=None):
        node_docs = nodes
        if isinstance(nodes, (list, tuple)):
            node_docs = [
                {"name": n.name, "states": list(n.states), "parents": list(n.parents)}
                if isinstance(n, Node)
                else n
                for n in nodes
            ]
        if isinstance(cpts, Mapping):
            cpt_docs = [
                {"node": k, "rows": np.asarray(v, dtype=float).reshape(-1, np.shape(v)[-1]).tolist()}
                for k, v in cpts.items()
            ]
        else:
            cpt_docs = cpts
        errors = validate_network(node_docs, cpt_docs, outcome, risk_bins)
        if errors:
            raise NetworkValidationError(errors)

        self.nodes: dict[str, Node] = {
            d["name"]: Node(d["name"], tuple(d["states"]), tuple(d.get("parents", [])))
            for d in node_docs
        }
        self.cpts: dict[str, np.ndarray] = {}
        for c in cpt_docs:
            node = self.nodes[c["node"]]
            shape = [self.nodes[p].cardinality for p in node.parents] + [node.cardinality]
            table = np.array(c["rows"], dtype=float).reshape(shape)
            table.setflags(write=False)
            self.cpts[node.name] = table
        self.outcome = (outcome["node"], outcome["state"]) if outcome else None
        self.risk_bins = None
        if risk_bins is not None:
            k = self.nodes[risk_bins["node"]].cardinality
            edges = risk_bins.get("edges") or list(np.linspace(0.0, 1.0, k + 1))
            self.risk_bins = (risk_bins["node"], tuple(float(e) for e in edges))

    @classmethod
    def from_dict(cls, doc) -> "BayesNet":
        if not isinstance(doc, Mapping):
            raise NetworkValidationError(["document: must be a JSON object"])
        return cls(doc.get("nodes"), doc.get("cpts"), doc.get("outcome"), doc.get("risk_bins"))

    def to_dict(self) -> dict:
        doc = {
            "nodes": [
                {"name": n.name, "states": list(n.states), "parents": list(n.parents)}
                for n in self.nodes.values()
            ],
            "cpts": [
                {"node": name, "rows": t.reshape(-1, t.shape[-1]).tolist()}
                for name, t in self.cpts.items()
            ],
        }
        if self.outcome:
            doc["outcome"] = {"node": self.outcome[0], "state": self.outcome[1]}
        if self.risk_bins:
            doc["risk_bins"] = {"node": self.risk_bins[0], "edges": list(self.risk_bins[1])}
        return doc

    def topological_order(self) -> list[str]:
        order, done = [], set()

        def visit(n):
            if n in done:
                return
            for p in self.nodes[n].parents:
                visit(p)
            done.add(n)
            order.append(n)

        for n in self.nodes:
            visit(n)
        return order

    def state_index(self, node: str, state: str) -> int:
        if node not in self.nodes:
            raise ConfigurationError(f"unknown node {node!r}")
        try:
            return self.nodes[node].states.index(state)
        except ValueError:
            raise DomainError(f"node {node} has no state {state!r}") from None

    def risk_state(self, risk: float) -> str:
        """State label of the risk-bin node that contains ``risk``."""
        if self.risk_bins is None:
            raise ConfigurationError("network declares no risk_bins node")
        name, edges = self.risk_bins
        if not edges[0] <= risk <= edges[-1]:
            raise DomainError(f"risk {risk!r} outside bin range [{edges[0]}, {edges[-1]}]")
        # right-closed last bin
        i = min(int(np.searchsorted(edges, risk, side="right")) - 1, len(edges) - 2)
        return self.nodes[name].states[i]


def load_network(path: str | Path) -> BayesNet:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputParseError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    return BayesNet.from_dict(doc)


def demo_network() -> BayesNet:
    """Illustrative network with the factor-group layout (CPT values are invented)."""
    return BayesNet.from_dict(
        json.loads((resources.files("hcprisk") / "data" / "demo_network.json").read_text())
    )


# -- inference -----------------------------------------------------------------


class Factor:
    __slots__ = ("vars", "values")

    def __init__(self, vars: Sequence[str], values: np.ndarray):
        self.vars = tuple(vars)
        self.values = values

    def _aligned(self, out_vars, cards):
        perm = [self.vars.index(v) for v in out_vars if v in self.vars]
        shape = [cards[v] if v in self.vars else 1 for v in out_vars]
        return self.values.transpose(perm).reshape(shape)

    def __mul__(self, other: "Factor") -> "Factor":
        out = list(self.vars) + [v for v in other.vars if v not in self.vars]
        cards = dict(zip(self.vars, self.values.shape))
        cards.update(zip(other.vars, other.values.shape))
        return Factor(out, self._aligned(out, cards) * other._aligned(out, cards))

    def sum_out(self, var: str) -> "Factor":
        axis = self.vars.index(var)
        return Factor(self.vars[:axis] + self.vars[axis + 1 :], self.values.sum(axis=axis))

    def reduce(self, evidence: Mapping[str, int]) -> "Factor":
        idx = tuple(evidence.get(v, slice(None)) for v in self.vars)
        return Factor([v for v in self.vars if v not in evidence], self.values[idx])


def _cpt_factor(net: BayesNet, name: str) -> Factor:
    return Factor(net.nodes[name].parents + (name,), net.cpts[name])


def min_degree_order(scopes: Sequence[Sequence[str]], eliminate: Sequence[str]) -> list[str]:
    """Greedy min-degree elimination order with lexicographic tie-breaking."""
    adj: dict[str, set[str]] = {}
    for scope in scopes:
        for v in scope:
            adj.setdefault(v, set()).update(u for u in scope if u != v)
    remaining = set(eliminate)
    order = []
    while remaining:
        v = min(remaining, key=lambda u: (len(adj.get(u, ())), u))
        nbrs = adj.pop(v, set())
        for a in nbrs:
            adj[a].discard(v)
            adj[a].update(nbrs - {a})
        remaining.remove(v)
        order.append(v)
    return order


def _parse_evidence(net: BayesNet, evidence: Mapping | None) -> dict[str, int]:
    out = {}
    for k, v in (evidence or {}).items():
        if k not in net.nodes:
            raise ConfigurationError(f"evidence on unknown node {k!r}")
        if net.risk_bins and k == net.risk_bins[0] and isinstance(v, (int, float)):
            v = net.risk_state(float(v))
        out[k] = net.state_index(k, v)
    return out


def infer_posterior(
    net: BayesNet,
    query: str,
    evidence: Mapping[str, str] | None = None,
    order: Sequence[str] | None = None,
) -> dict[str, float]:
    """Exact posterior ``P(query | evidence)`` by variable elimination.

    ``order`` overrides the min-degree elimination order; it must list
    exactly the non-query, non-evidence nodes.
    """
    if query not in net.nodes:
        raise ConfigurationError(f"unknown query node {query!r}")
    ev = _parse_evidence(net, evidence)
    states = net.nodes[query].states

    if query in ev:
        rest = {k: v for k, v in (evidence or {}).items() if k != query}
        # P(query=q, rest) > 0 iff P(rest) > 0 and P(query=q | rest) > 0
        marginal = infer_posterior(net, query, rest)
        if marginal[states[ev[query]]] == 0.0:
            raise ImpossibleEvidenceError("evidence has probability zero")
        return {s: float(i == ev[query]) for i, s in enumerate(states)}

    factors = [_cpt_factor(net, n).reduce(ev) for n in net.nodes]
    hidden = [n for n in net.nodes if n != query and n not in ev]
    if order is None:
        order = min_degree_order([f.vars for f in factors], hidden)
    elif sorted(order) != sorted(hidden):
        raise ConfigurationError("elimination order must list exactly the hidden nodes")

    for var in order:
        touching = [f for f in factors if var in f.vars]
        if not touching:
            continue
        factors = [f for f in factors if var not in f.vars]
        prod = touching[0]
        for f in touching[1:]:
            prod = prod * f
        factors.append(prod.sum_out(var))

    result = Factor((query,), np.ones(len(states)))
    for f in factors:
        result = result * f
    values = result._aligned((query,), {query: len(states)})
    total = float(values.sum())
    if not total > 0.0:
        raise ImpossibleEvidenceError("evidence has probability zero")
    return {s: float(v / total) for s, v in zip(states, values)}


def joint_probability(net: BayesNet, assignment: Mapping[str, str]) -> float:
    """Chain-rule probability of a full assignment of every node."""
    missing = [n for n in net.nodes if n not in assignment]
    if missing:
        raise ConfigurationError(f"assignment lacks node(s) {', '.join(missing)}")
    idx = {n: net.state_index(n, assignment[n]) for n in net.nodes}
    p = 1.0
    for name, node in net.nodes.items():
        key = tuple(idx[q] for q in node.parents) + (idx[name],)
        p *= float(net.cpts[name][key])
    return p


def all_assignments(net: BayesNet):
    names = list(net.nodes)
    for combo in product(*(net.nodes[n].states for n in names)):
        yield dict(zip(names, combo))


def population_risk_posterior(
    net: BayesNet,
    evidence: Mapping[str, str] | None = None,
    individual_risk: float | None = None,
) -> float:
    """Posterior probability of the designated outcome state.

    ``individual_risk`` (a probability) is binned into the state of the
    network's risk-bin node and added to the evidence.
    """
    if net.outcome is None:
        raise ConfigurationError("network has no designated outcome node")
    evidence = dict(evidence or {})
    if individual_risk is not None:
        if net.risk_bins is None:
            raise ConfigurationError("network declares no risk_bins node for individual risk")
        evidence[net.risk_bins[0]] = net.risk_state(individual_risk)
    node, state = net.outcome
    return infer_posterior(net, node, evidence)[state]
