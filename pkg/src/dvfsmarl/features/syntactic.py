"""Lexical feature counter for C sources with OpenMP pragmas.

Counting rules
--------------
Comments and string/char literals are removed first; pragma lines (with
backslash continuations joined) are counted separately from code.

Pragma counters look at the directive text after ``#pragma omp``:

* ``parallel_regions``: directive starts with ``parallel``
* ``worksharing_loops``: starts with ``for`` or ``parallel for``
* ``task_constructs``: starts with ``task`` as a whole word
* ``taskwait``, ``critical``, ``atomic``, ``barrier``: starts with that word
* ``single_master``: starts with ``single`` or ``master``
* ``shared_vars`` / ``private_vars`` / ``reduction_vars``: number of names
  listed in ``shared(...)``, ``private``/``firstprivate``/``lastprivate(...)``
  and ``reduction(op: ...)`` clauses

Code counters come from a small statement parser over the token stream:

* ``loop_count``: ``for``, ``while`` and ``do`` statements (the ``while``
  closing a ``do`` is not counted twice)
* ``max_loop_depth``: deepest loop nesting; ``nested_loops``: loops whose
  nesting depth is at least 2
* ``if_count``: ``if`` statements
* ``function_count``: top-level ``name(...) { ... }`` definitions
* ``loc``: nonblank lines after comment removal
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, fields

SYNTACTIC_KEYS = (
    "max_loop_depth", "loop_count", "nested_loops", "parallel_regions", "worksharing_loops",
    "task_constructs", "taskwait", "critical", "atomic", "barrier", "single_master",
    "shared_vars", "private_vars", "reduction_vars", "function_count", "if_count", "loc",
)


@dataclass(frozen=True)
class SyntacticFeatureVector:
    max_loop_depth: int = 0
    loop_count: int = 0
    nested_loops: int = 0
    parallel_regions: int = 0
    worksharing_loops: int = 0
    task_constructs: int = 0
    taskwait: int = 0
    critical: int = 0
    atomic: int = 0
    barrier: int = 0
    single_master: int = 0
    shared_vars: int = 0
    private_vars: int = 0
    reduction_vars: int = 0
    function_count: int = 0
    if_count: int = 0
    loc: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))


_COMMENT_OR_LITERAL = re.compile(
    r'//[^\n]*|/\*.*?\*/|"(?:\\.|[^"\\\n])*"|\'(?:\\.|[^\'\\\n])*\'', re.S)
_TOKEN = re.compile(r"[A-Za-z_]\w*|\d[\w.]*|\S")


def _strip(source: str) -> str:
    def repl(mt):
        s = mt.group(0)
        if s.startswith("/*"):
            return "\n" * s.count("\n")  # keep line numbering stable
        if s.startswith("//"):
            return ""
        return '""'
    return _COMMENT_OR_LITERAL.sub(repl, source)


def _names(clause_bodies: list[str]) -> int:
    return sum(len([v for v in body.split(",") if v.strip()]) for body in clause_bodies)


class _Walker:
    def __init__(self, toks: list[str]):
        self.t = toks
        self.loops = 0
        self.nested = 0
        self.max_depth = 0
        self.ifs = 0
        self.functions = 0

    def _loop(self, depth: int) -> None:
        self.loops += 1
        self.max_depth = max(self.max_depth, depth)
        if depth >= 2:
            self.nested += 1

    def _skip_group(self, i: int, open_: str, close: str) -> int:
        if i >= len(self.t) or self.t[i] != open_:
            return i
        level = 0
        while i < len(self.t):
            if self.t[i] == open_:
                level += 1
            elif self.t[i] == close:
                level -= 1
                if level == 0:
                    return i + 1
            i += 1
        return i

    def block(self, i: int, depth: int, top: bool = False) -> int:
        """Parse statements until a closing brace (consumed) or end of input."""
        t = self.t
        while i < len(t):
            if t[i] == "}":
                if top:
                    i += 1
                    continue
                return i + 1
            j = self.stmt(i, depth, top)
            i = j if j > i else i + 1
        return i

    def stmt(self, i: int, depth: int, top: bool = False) -> int:
        t = self.t
        if i >= len(t):
            return i
        tok = t[i]
        if tok == "{":
            return self.block(i + 1, depth)
        if tok in ("for", "while"):
            self._loop(depth + 1)
            return self.stmt(self._skip_group(i + 1, "(", ")"), depth + 1)
        if tok == "do":
            self._loop(depth + 1)
            i = self.stmt(i + 1, depth + 1)
            if i < len(t) and t[i] == "while":
                i = self._skip_group(i + 1, "(", ")")
                if i < len(t) and t[i] == ";":
                    i += 1
            return i
        if tok == "if":
            self.ifs += 1
            i = self.stmt(self._skip_group(i + 1, "(", ")"), depth)
            if i < len(t) and t[i] == "else":
                i = self.stmt(i + 1, depth)
            return i
        if tok == "switch":
            return self.stmt(self._skip_group(i + 1, "(", ")"), depth)
        if tok == ";":
            return i + 1
        # expression, declaration or definition
        j, par, saw_eq = i, 0, False
        while j < len(t):
            x = t[j]
            if x in "([":
                par += 1
            elif x in ")]":
                par -= 1
            elif par == 0 and x == ";":
                return j + 1
            elif par == 0 and x == "=":
                saw_eq = True
            elif par == 0 and x == "}":
                return j
            elif par == 0 and x == "{":
                if saw_eq:
                    j = self._skip_group(j, "{", "}")
                    continue
                is_function = top and j > i and t[j - 1] == ")"
                if is_function:
                    self.functions += 1
                    return self.block(j + 1, depth)
                j = self.block(j + 1, depth)
                continue
            j += 1
        return j


def count_syntactic(source_code: str) -> SyntacticFeatureVector:
    text = _strip(source_code.replace("\\\r\n", " ").replace("\\\n", " "))
    pragmas: list[str] = []
    code_lines: list[str] = []
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("#"):
            mt = re.match(r"#\s*pragma\s+omp\s+(.*)", s)
            if mt:
                pragmas.append(mt.group(1).strip())
        else:
            code_lines.append(line)
    loc = sum(1 for line in text.splitlines() if line.strip())

    def starts(word: str) -> int:
        return sum(1 for d in pragmas if re.match(rf"{word}\b", d))

    counts = {
        "parallel_regions": starts("parallel"),
        "worksharing_loops": sum(1 for d in pragmas if re.match(r"(parallel\s+)?for\b", d)),
        "task_constructs": starts("task"),
        "taskwait": starts("taskwait"),
        "critical": starts("critical"),
        "atomic": starts("atomic"),
        "barrier": starts("barrier"),
        "single_master": starts("single") + starts("master"),
        "shared_vars": _names([b for d in pragmas for b in re.findall(r"\bshared\s*\(([^)]*)\)", d)]),
        "private_vars": _names([b for d in pragmas
                                for b in re.findall(r"\b(?:first|last)?private\s*\(([^)]*)\)", d)]),
        "reduction_vars": _names([b for d in pragmas
                                  for b in re.findall(r"\breduction\s*\([^:()]*:([^)]*)\)", d)]),
    }
    w = _Walker(_TOKEN.findall("\n".join(code_lines)))
    w.block(0, 0, top=True)
    return SyntacticFeatureVector(
        max_loop_depth=w.max_depth, loop_count=w.loops, nested_loops=w.nested,
        function_count=w.functions, if_count=w.ifs, loc=loc, **counts)
