"""Shared fixtures: the worked-example classifiers and small helpers."""

from __future__ import annotations

import sys
import textwrap

import pytest
from hypothesis import HealthCheck, settings

from xplain.circuit import make_instance, parse_fbdd, parse_nnf
from xplain.frp_mono import LinearThresholdModel, make_model_instance

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("suite")


# (x1 and (x2 or x4)) or (not x1 and x3 and x4), with the inner OR made
# deterministic as x2 or (not x2 and x4); root OR splits on x1.
DEMO_NNF = """\
nnf 13 12 4
L 1
L 2
L -2
L 4
A 2 2 3
O 2 2 1 4
A 2 0 5
L -1
L 3
L 4
A 2 8 9
A 2 7 10
O 1 2 6 11
"""

# The same boolean function as a read-once branching program.
DEMO_FBDD = """\
fbdd 6 4
T 1
T 0
N 4 1 0
N 2 2 0
N 3 1 2
N 1 4 3
"""

# Class 1 iff at least two of the first three features are 1; feature 4 inert.
VOTE_MODEL_TEXT = """\
monotone 4 2
d 1 0 1
d 2 0 1
d 3 0 1
d 4 0 1
linear 1 1 1 0 : 2
"""


def demo_formula(point) -> int:
    x1, x2, x3, x4 = (bool(v) for v in point)
    return int((x1 and (x2 or x4)) or ((not x1) and x3 and x4))


@pytest.fixture(scope="session")
def demo_circuit():
    return parse_nnf(DEMO_NNF)


@pytest.fixture(scope="session")
def demo_fbdd():
    return parse_fbdd(DEMO_FBDD)


@pytest.fixture()
def demo_instance(demo_circuit):
    return make_instance(demo_circuit, (0, 1, 0, 0), 0)


@pytest.fixture()
def vote_model():
    return LinearThresholdModel([1, 1, 1, 0], [2])


@pytest.fixture()
def vote_instance(vote_model):
    return make_model_instance(vote_model, (1, 1, 1, 1), 1)


@pytest.fixture()
def demo_nnf_file(tmp_path):
    path = tmp_path / "demo.nnf"
    path.write_text(DEMO_NNF)
    return str(path)


@pytest.fixture()
def vote_model_file(tmp_path):
    path = tmp_path / "vote.mono"
    path.write_text(VOTE_MODEL_TEXT)
    return str(path)


DPLL_SCRIPT = textwrap.dedent(
    '''
    #!/usr/bin/env python3
    """Tiny independent DPLL used to cross-check the external-solver adapter."""
    import sys

    def parse(path):
        num_vars, clauses, current = 0, [], []
        for line in open(path):
            line = line.strip()
            if not line or line.startswith("c"):
                continue
            if line.startswith("p"):
                num_vars = int(line.split()[2])
                continue
            for token in line.split():
                value = int(token)
                if value == 0:
                    clauses.append(current)
                    current = []
                else:
                    current.append(value)
        return num_vars, clauses

    def dpll(clauses, assign):
        changed = True
        while changed:
            changed = False
            remaining = []
            for clause in clauses:
                undecided = []
                satisfied = False
                for lit in clause:
                    value = assign.get(abs(lit))
                    if value is None:
                        undecided.append(lit)
                    elif (lit > 0) == value:
                        satisfied = True
                        break
                if satisfied:
                    continue
                if not undecided:
                    return None
                if len(undecided) == 1:
                    assign[abs(undecided[0])] = undecided[0] > 0
                    changed = True
                else:
                    remaining.append(undecided)
            clauses = remaining
        if not clauses:
            return assign
        var = abs(clauses[0][0])
        for value in (True, False):
            trial = dict(assign)
            trial[var] = value
            result = dpll([list(c) for c in clauses], trial)
            if result is not None:
                return result
        return None

    num_vars, clauses = parse(sys.argv[1])
    result = dpll(clauses, {})
    if result is None:
        print("s UNSATISFIABLE")
    else:
        lits = [v if result.get(v, False) else -v for v in range(1, num_vars + 1)]
        print("s SATISFIABLE")
        print("v " + " ".join(map(str, lits)) + " 0")
    '''
).strip()


@pytest.fixture(scope="session")
def dpll_command(tmp_path_factory):
    path = tmp_path_factory.mktemp("extsolver") / "mini_dpll.py"
    path.write_text(DPLL_SCRIPT + "\n")
    return f"{sys.executable} {path}"
