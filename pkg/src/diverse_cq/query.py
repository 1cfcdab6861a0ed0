"""Conjunctive queries, join trees, and free-connex structure.

A query is one rule `Q(x,y) <- R(x,z), S(z,y).` with variables only;
constants are rejected at parse time.  A repeated variable inside a
single atom is rewritten to a fresh variable plus an equality filter on
the two columns (`eq_positions` on the atom), which the engines apply
when they pull candidate facts.  Flags such as `is_full` are defined on
the variables as written, so `Q(x) <- R(x,x)` still counts as full.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InputError, LoadError, QueryParseError


@dataclass(frozen=True, order=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Atom:
    """One body atom; `vars` is duplicate-free, `source_vars` is as written."""

    relation: str
    vars: tuple[Variable, ...]
    source_vars: tuple[Variable, ...]
    eq_positions: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        if len(self.vars) != len(self.source_vars):
            raise InputError(f"atom {self.relation}: variable lists disagree in length")
        if len(set(self.vars)) != len(self.vars):
            raise InputError(f"atom {self.relation}: normalized variables must be distinct")
        pairs = []
        for pos, v in enumerate(self.source_vars):
            first = self.source_vars.index(v)
            if first != pos:
                pairs.append((first, pos))
        object.__setattr__(self, "eq_positions", tuple(pairs))

    @property
    def arity(self) -> int:
        return len(self.vars)

    def text(self) -> str:
        return f"{self.relation}({','.join(v.name for v in self.source_vars)})"


@dataclass(frozen=True)
class ConjunctiveQuery:
    head_name: str
    head_vars: tuple[Variable, ...]
    atoms: tuple[Atom, ...]

    def __post_init__(self):
        if not self.atoms:
            raise InputError("query body must contain at least one atom")
        body = self.original_body_variables
        for v in self.head_vars:
            if v not in body:
                raise InputError(f"head variable {v.name} does not occur in the body")

    @property
    def original_body_variables(self) -> frozenset:
        return frozenset(v for a in self.atoms for v in a.source_vars)

    @property
    def variables(self) -> frozenset:
        """All variables after duplicate rewriting."""
        return frozenset(v for a in self.atoms for v in a.vars)

    @property
    def is_full(self) -> bool:
        return self.original_body_variables <= frozenset(self.head_vars)

    @property
    def is_self_join_free(self) -> bool:
        return len({a.relation for a in self.atoms}) == len(self.atoms)

    def to_text(self) -> str:
        head = f"{self.head_name}({','.join(v.name for v in self.head_vars)})"
        body = ", ".join(a.text() for a in self.atoms)
        return f"{head} <- {body}."

    def __str__(self):
        return self.to_text()

    @classmethod
    def build(cls, head_name: str, head_vars: Sequence[str],
              body: Sequence[tuple[str, Sequence[str]]]) -> "ConjunctiveQuery":
        """Assemble a query from plain names, applying duplicate rewriting."""
        used = {name for _, vs in body for name in vs} | set(head_vars)
        atoms = []
        for rel, names in body:
            source = tuple(Variable(n) for n in names)
            seen: set[str] = set()
            normal = []
            for n in names:
                if n not in seen:
                    seen.add(n)
                    normal.append(Variable(n))
                else:
                    k = 2
                    while f"{n}_{k}" in used:
                        k += 1
                    fresh = f"{n}_{k}"
                    used.add(fresh)
                    normal.append(Variable(fresh))
            atoms.append(Atom(rel, tuple(normal), source))
        return cls(head_name, tuple(Variable(n) for n in head_vars), tuple(atoms))


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<arrow><-)"
    r"|(?P<lpar>\()"
    r"|(?P<rpar>\))"
    r"|(?P<comma>,)"
    r"|(?P<dot>\.)"
    r"|(?P<number>[+-]?\d[\w.]*)"
    r"|(?P<string>'[^']*'|\"[^\"]*\")"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QueryParseError(f"unexpected character {text[pos]!r}", pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos + 1))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, schema=None):
        self.tokens = _tokenize(text)
        self.i = 0
        self.schema = schema

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: str, what: str):
        tok = self.tokens[self.i]
        if tok[0] != kind:
            raise QueryParseError(f"expected {what}, got {tok[1]!r}" if tok[1] else
                                  f"expected {what}, got end of input", tok[2])
        self.i += 1
        return tok

    def atom(self, is_head: bool):
        name = self.take("ident", "a relation name")[1]
        self.take("lpar", "'('")
        names: list[str] = []
        if self.peek()[0] != "rpar":
            while True:
                tok = self.peek()
                if tok[0] in ("number", "string"):
                    raise QueryParseError(
                        "constants are not supported in queries; use variables only", tok[2])
                names.append(self.take("ident", "a variable name")[1])
                if self.peek()[0] == "comma":
                    self.i += 1
                    continue
                break
        self.take("rpar", "')'")
        if not is_head and self.schema is not None:
            if name not in self.schema:
                raise QueryParseError(f"relation {name!r} is not declared in the schema",
                                      self.tokens[self.i - 1][2])
            expected = self.schema.arity(name)
            if expected != len(names):
                raise QueryParseError(
                    f"relation {name} expects {expected} arguments, got {len(names)}",
                    self.tokens[self.i - 1][2])
        return name, names

    def query(self) -> ConjunctiveQuery:
        head_name, head_vars = self.atom(is_head=True)
        self.take("arrow", "'<-'")
        body = [self.atom(is_head=False)]
        while self.peek()[0] == "comma":
            self.i += 1
            body.append(self.atom(is_head=False))
        self.take("dot", "'.'")
        self.take("end", "end of input")
        try:
            return ConjunctiveQuery.build(head_name, head_vars, body)
        except InputError as exc:
            raise QueryParseError(str(exc), len_hint(self.tokens)) from exc


def len_hint(tokens) -> int:
    return tokens[-1][2]


def parse_cq(text: str, schema=None) -> ConjunctiveQuery:
    """Parse one rule; raises QueryParseError with a 1-based position."""
    return _Parser(text, schema=schema).query()


# ---------------------------------------------------------------------------
# Tree decompositions


@dataclass(frozen=True)
class TDNode:
    ident: int
    bag: frozenset
    parent: int | None
    atoms: tuple[int, ...] = ()


@dataclass(frozen=True)
class TreeDecomposition:
    """Rooted decomposition; node ids equal their positions in `nodes`."""

    nodes: tuple[TDNode, ...]
    width: Fraction = Fraction(1)

    def __post_init__(self):
        roots = [n.ident for n in self.nodes if n.parent is None]
        for i, n in enumerate(self.nodes):
            if n.ident != i:
                raise InputError("tree decomposition node ids must be 0..n-1 in order")
            if n.parent is not None and not (0 <= n.parent < len(self.nodes)):
                raise InputError(f"node {i}: parent {n.parent} out of range")
            if n.parent == i:
                raise InputError(f"node {i}: node cannot be its own parent")
        if len(roots) != 1:
            raise InputError(f"expected exactly one root, found {len(roots)}")
        # Reachability from the root doubles as a cycle check.
        seen = set()
        stack = [roots[0]]
        kids = self.children()
        while stack:
            u = stack.pop()
            seen.add(u)
            stack.extend(kids[u])
        if len(seen) != len(self.nodes):
            raise InputError("tree decomposition edges contain a cycle or disconnect")

    @property
    def root_id(self) -> int:
        return next(n.ident for n in self.nodes if n.parent is None)

    def children(self) -> dict[int, list[int]]:
        kids: dict[int, list[int]] = {n.ident: [] for n in self.nodes}
        for n in self.nodes:
            if n.parent is not None:
                kids[n.parent].append(n.ident)
        for lst in kids.values():
            lst.sort()
        return kids

    def key(self, ident: int) -> frozenset:
        """Bag intersection with the parent bag (empty at the root)."""
        node = self.nodes[ident]
        if node.parent is None:
            return frozenset()
        return node.bag & self.nodes[node.parent].bag

    def subtree_ids(self, ident: int) -> list[int]:
        kids = self.children()
        out = []
        stack = [ident]
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(kids[u])
        return sorted(out)

    def subtree_vars(self, ident: int) -> frozenset:
        vs: set = set()
        for u in self.subtree_ids(ident):
            vs |= self.nodes[u].bag
        return frozenset(vs)

    def rerooted(self, new_root: int) -> "TreeDecomposition":
        """Same tree with parent pointers oriented away from `new_root`."""
        adj: dict[int, set[int]] = {n.ident: set() for n in self.nodes}
        for n in self.nodes:
            if n.parent is not None:
                adj[n.ident].add(n.parent)
                adj[n.parent].add(n.ident)
        parent: dict[int, int | None] = {new_root: None}
        order = [new_root]
        seen = {new_root}
        queue = [new_root]
        while queue:
            u = queue.pop(0)
            for v in sorted(adj[u]):
                if v not in seen:
                    seen.add(v)
                    parent[v] = u
                    queue.append(v)
                    order.append(v)
        nodes = tuple(
            TDNode(n.ident, n.bag, parent[n.ident], n.atoms) for n in self.nodes)
        return TreeDecomposition(nodes, self.width)


@dataclass(frozen=True)
class TDViolation:
    """First failure found when checking decomposition validity."""

    kind: str  # "structure" | "coverage" | "connectedness"
    detail: str


def validate_tree_decomposition(q: ConjunctiveQuery, td: TreeDecomposition) -> TDViolation | None:
    """Return None when valid, else the first violation with a witness."""
    qvars = q.variables
    for n in td.nodes:
        stray = n.bag - qvars
        if stray:
            names = ",".join(sorted(v.name for v in stray))
            return TDViolation("structure", f"node {n.ident} mentions unknown variables {names}")
    for i, atom in enumerate(q.atoms):
        need = frozenset(atom.vars)
        if not any(need <= n.bag for n in td.nodes):
            return TDViolation("coverage", f"atom {i} ({atom.text()}) is covered by no bag")
    adj: dict[int, set[int]] = {n.ident: set() for n in td.nodes}
    for n in td.nodes:
        if n.parent is not None:
            adj[n.ident].add(n.parent)
            adj[n.parent].add(n.ident)
    for v in sorted(qvars):
        holders = {n.ident for n in td.nodes if v in n.bag}
        if not holders:
            continue
        start = min(holders)
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w in holders and w not in seen:
                    seen.add(w)
                    stack.append(w)
        missing = holders - seen
        if missing:
            return TDViolation(
                "connectedness",
                f"variable {v.name}: bags {start} and {min(missing)} are not connected "
                f"through bags containing it")
    return None


def _gyo_reduce(edges: Sequence[frozenset]) -> list[int] | None:
    """GYO ear removal over hyperedges; returns parent indices or None.

    An edge is an ear when all vertices shared with other remaining
    edges fit inside a single witness edge; the witness becomes its
    parent in the join tree.  Deterministic: lowest-index ear with the
    lowest-index witness is removed first.
    """
    n = len(edges)
    parent = [-1] * n
    active = set(range(n))
    while len(active) > 1:
        removed = None
        for e in sorted(active):
            rest = sorted(active - {e})
            shared = frozenset()
            for o in rest:
                shared |= edges[e] & edges[o]
            witness = next((o for o in rest if shared <= edges[o]), None)
            if witness is not None:
                parent[e] = witness
                removed = e
                break
        if removed is None:
            return None
        active.remove(removed)
    return parent


def gyo_join_tree(q: ConjunctiveQuery) -> TreeDecomposition | None:
    """Width-1 join tree with one node per atom, or None when cyclic."""
    edges = [frozenset(a.vars) for a in q.atoms]
    parent = _gyo_reduce(edges)
    if parent is None:
        return None
    nodes = tuple(
        TDNode(i, edges[i], parent[i] if parent[i] >= 0 else None, (i,))
        for i in range(len(edges)))
    return TreeDecomposition(nodes, Fraction(1))


@dataclass(frozen=True)
class FreeConnexDecomposition:
    """A decomposition plus the connected node set covering the head."""

    td: TreeDecomposition
    connex: frozenset  # node ids; contains td.root_id

    def hanging_components(self) -> list[list[int]]:
        """Connected groups of non-connex nodes, each hanging off the connex part."""
        outside = [n.ident for n in self.td.nodes if n.ident not in self.connex]
        adj: dict[int, set[int]] = {i: set() for i in outside}
        for n in self.td.nodes:
            if n.ident in self.connex or n.parent is None:
                continue
            if n.parent not in self.connex:
                adj[n.ident].add(n.parent)
                adj[n.parent].add(n.ident)
        comps = []
        seen: set[int] = set()
        for start in sorted(outside):
            if start in seen:
                continue
            comp = [start]
            seen.add(start)
            stack = [start]
            while stack:
                u = stack.pop()
                for w in adj[u]:
                    if w not in seen:
                        seen.add(w)
                        comp.append(w)
                        stack.append(w)
            comps.append(sorted(comp))
        return comps


def _connex_from_root(td: TreeDecomposition, headset: frozenset) -> frozenset | None:
    """Maximal root-containing subtree with bags inside the head set."""
    root = td.root_id
    if not td.nodes[root].bag <= headset:
        return None
    kids = td.children()
    ids = {root}
    stack = [root]
    union = set(td.nodes[root].bag)
    while stack:
        u = stack.pop()
        for c in kids[u]:
            if td.nodes[c].bag <= headset:
                ids.add(c)
                union |= td.nodes[c].bag
                stack.append(c)
    if frozenset(union) == headset:
        return frozenset(ids)
    return None


def free_connex_subtree(q: ConjunctiveQuery, td: TreeDecomposition) -> FreeConnexDecomposition | None:
    """Find a connex subtree whose bags union to exactly the head variables.

    Tries the decomposition as given, then every re-rooting, and finally
    rebuilds from scratch by running GYO on the body hypergraph extended
    with one edge for the head (the inserted root bag is a subset trick:
    its bag is exactly the head set).  Returns None when no such subtree
    exists, which for acyclic queries means the head splits a join path.
    """
    violation = validate_tree_decomposition(q, td)
    if violation is not None:
        raise InputError(f"invalid tree decomposition: {violation.kind}: {violation.detail}")
    headset = frozenset(q.head_vars)
    ids = _connex_from_root(td, headset)
    if ids is not None:
        return FreeConnexDecomposition(td, ids)
    for r in range(len(td.nodes)):
        if r == td.root_id:
            continue
        td2 = td.rerooted(r)
        ids = _connex_from_root(td2, headset)
        if ids is not None:
            return FreeConnexDecomposition(td2, ids)
    return extended_gyo_decomposition(q)


def extended_gyo_decomposition(q: ConjunctiveQuery) -> FreeConnexDecomposition | None:
    """Join tree of the body hypergraph extended with one edge for the head.

    The head edge becomes the root, so the connex part always exists when
    the extended hypergraph is acyclic; every non-connex node is a body
    atom, which downstream planning relies on.
    """
    headset = frozenset(q.head_vars)
    edges = [frozenset(a.vars) for a in q.atoms] + [headset]
    parent = _gyo_reduce(edges)
    if parent is None:
        return None
    m = len(q.atoms)
    nodes = tuple(
        TDNode(i, edges[i], parent[i] if parent[i] >= 0 else None,
               (i,) if i < m else ())
        for i in range(len(edges)))
    td3 = TreeDecomposition(nodes, Fraction(1)).rerooted(m)
    ids = _connex_from_root(td3, headset)
    if ids is None:  # pragma: no cover - root bag equals the head set
        return None
    return FreeConnexDecomposition(td3, ids)


def assign_atoms(q: ConjunctiveQuery, td: TreeDecomposition) -> TreeDecomposition:
    """Return a copy where every atom is assigned to one covering node."""
    assignment: dict[int, list[int]] = {n.ident: [] for n in td.nodes}
    for i, atom in enumerate(q.atoms):
        need = frozenset(atom.vars)
        home = next((n.ident for n in td.nodes if need <= n.bag), None)
        if home is None:
            raise InputError(f"atom {i} ({atom.text()}) is covered by no bag")
        assignment[home].append(i)
    nodes = tuple(
        TDNode(n.ident, n.bag, n.parent, tuple(assignment[n.ident])) for n in td.nodes)
    return TreeDecomposition(nodes, td.width)


def td_from_json(data, width: Fraction | int = 1) -> TreeDecomposition:
    """Build a decomposition from `{"nodes": [{"id", "bag", "parent"}]}`."""
    if isinstance(data, (str, Path)):
        path = Path(data)
        if not path.is_file():
            raise LoadError(f"missing tree decomposition file {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise LoadError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict) or "nodes" not in data:
        raise LoadError("tree decomposition JSON must be an object with a 'nodes' list")
    raw = data["nodes"]
    try:
        entries = sorted(raw, key=lambda e: e["id"])
        nodes = tuple(
            TDNode(e["id"], frozenset(Variable(v) for v in e["bag"]),
                   e.get("parent"), ())
            for e in entries)
    except (TypeError, KeyError) as exc:
        raise LoadError(f"malformed tree decomposition node entry: {exc}") from exc
    return TreeDecomposition(nodes, Fraction(width))
