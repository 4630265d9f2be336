#!/usr/bin/env python3
"""Independent reference walker for the fixture ASTs.

Recomputes the full edge multiset of every fixture from the raw compiler
JSON with its own traversal logic and writes one golden file per fixture
under tests/fixtures/golden/. The unit tests compare the C++ graph builder
against these files byte-for-byte (after canonical sorting), so keep this
script free of any dependency on the C++ sources.
"""

import json
import pathlib
import sys

NON_CHILD_KEYS = {"id", "nodeType", "src", "typeDescriptions"}


def is_node(v):
    return isinstance(v, dict) and isinstance(v.get("nodeType"), str)


class Walker:
    def __init__(self):
        self.next_synthetic = -1
        self.nodes = {}  # id -> (json, role)
        self.children = {}  # id -> [child ids]
        self.edges = []

    def assign_ids(self, j, role):
        if isinstance(j.get("id"), int):
            nid = j["id"]
        else:
            nid = self.next_synthetic
            self.next_synthetic -= 1
        if nid in self.nodes:
            raise SystemExit(f"duplicate id {nid}")
        self.nodes[nid] = (j, role)
        self.children[nid] = []
        for key, v in j.items():
            if key in NON_CHILD_KEYS:
                continue
            if is_node(v):
                self.children[nid].append(self.assign_ids(v, key))
            elif isinstance(v, list):
                for elem in v:
                    if is_node(elem):
                        self.children[nid].append(self.assign_ids(elem, key))
        return nid

    def child_by_role(self, nid, role):
        for c in self.children[nid]:
            if self.nodes[c][1] == role:
                return c
        return None

    def first_ref(self, nid):
        j = self.nodes[nid][0]
        if isinstance(j.get("referencedDeclaration"), int):
            return j["referencedDeclaration"]
        for c in self.children[nid]:
            r = self.first_ref(c)
            if r is not None:
                return r
        return None

    def walk(self, root):
        self.assign_ids(root, "")
        for nid in self.nodes:
            j = self.nodes[nid][0]
            ntype = j["nodeType"]
            if ntype == "DoWhileStatement":
                ntype = "WhileStatement"
            elif ntype == "UncheckedBlock":
                ntype = "Block"

            for c in self.children[nid]:
                self.edges.append([nid, c, "Child"])
                self.edges.append([c, nid, "Parent"])

            if j["nodeType"] in ("Identifier", "MemberAccess"):
                ref = j.get("referencedDeclaration")
                if isinstance(ref, int) and ref in self.nodes:
                    self.edges.append([nid, ref, "ReferencedDeclaration"])

            if j["nodeType"] == "FunctionDefinition":
                rets = self.child_by_role(nid, "returnParameters")
                if rets is not None:
                    for p in self.children[rets]:
                        if self.nodes[p][0]["nodeType"] == "VariableDeclaration":
                            self.edges.append([nid, p, "FunctionReturnParameter"])
                for b in j.get("baseFunctions", []):
                    base = b if isinstance(b, int) else b.get("id")
                    if base in self.nodes:
                        self.edges.append([nid, base, "SuperFunction"])

            if j["nodeType"] == "Assignment":
                lhs = self.child_by_role(nid, "leftHandSide")
                if lhs is not None:
                    decl = self.first_ref(lhs)
                    if decl is not None and decl in self.nodes:
                        self.edges.append([nid, decl, "Assignment"])

            if ntype == "IfStatement":
                t = self.child_by_role(nid, "trueBody")
                f = self.child_by_role(nid, "falseBody")
                if t is not None:
                    self.edges.append([nid, t, "CondTrue"])
                if f is not None:
                    self.edges.append([nid, f, "CondFalse"])
            elif ntype in ("WhileStatement", "ForStatement"):
                cond = self.child_by_role(nid, "condition")
                if cond is not None:
                    kind = "While" if ntype == "WhileStatement" else "For"
                    self.edges.append([nid, cond, kind + "Execution"])
                    body = self.child_by_role(nid, "body")
                    if body is not None:
                        self.edges.append([cond, body, kind + "Next"])
            elif ntype == "Block":
                stmts = [c for c in self.children[nid] if self.nodes[c][1] == "statements"]
                for a, b in zip(stmts, stmts[1:]):
                    self.edges.append([a, b, "NextStatement"])

        # Edges live in an ordered, deduplicated set on the C++ side.
        uniq = sorted({tuple(e) for e in self.edges})
        return [list(e) for e in uniq]


def main():
    fixtures = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path("tests/fixtures")
    golden = fixtures / "golden"
    golden.mkdir(exist_ok=True)
    for path in sorted(fixtures.glob("*.ast.json")):
        with open(path) as fh:
            doc = json.load(fh)
        edges = Walker().walk(doc)
        out = golden / (path.name.replace(".ast.json", "") + ".edges.json")
        with open(out, "w") as fh:
            json.dump(edges, fh, indent=1)
            fh.write("\n")
        print(f"{path.name}: {len(edges)} edges -> {out}")


if __name__ == "__main__":
    main()
