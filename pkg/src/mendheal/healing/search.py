"""Seeded evolutionary repair over the shared mutation operators.

Individuals are programs differing from the input only inside the region
function. Each offspring is its tournament-selected parent with exactly one
operator applied; survivors are the best of parents and offspring.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from ..faults.mutate import enumerate_mutations, mutate
from ..faults.taxonomy import BugClass, FaultError
from ..fnv import fnv1a64
from ..minilang.formatter import format_function
from ..minilang.interpreter import RuntimeEnv, run_tests
from ..minilang.nodes import NodePath, Program
from ..rng import SplitMix64, derive_seed
from .candidate import Origin, PatchCandidate
from .treediff import tree_edits

DEFAULT_POPULATION = 20
DEFAULT_GENERATIONS = 10
TOURNAMENT = 3
MAX_SOLUTIONS = 3


@dataclass(frozen=True)
class SearchBudget:
    population: int = DEFAULT_POPULATION
    generations: int = DEFAULT_GENERATIONS


class BudgetExhausted(Exception):
    def __init__(self, message: str, partials: Sequence[PatchCandidate] = ()):
        super().__init__(message)
        self.partials = list(partials)


@dataclass
class _Individual:
    program: Program
    key: str
    fitness: float
    size: int


def _edit_size(original: Program, program: Program) -> Tuple[int, int]:
    edits = tree_edits(original, program)
    return len(edits), sum(len(e.replacement) for e in edits)


def search_repair(program: Program, failing_tests: Sequence[str], region: NodePath,
                  budget: SearchBudget = SearchBudget(), seed: int = 0, env: Optional[RuntimeEnv] = None,
                  predicted_class: BugClass = BugClass.WrongOperator) -> List[PatchCandidate]:
    """Up to three fitness-1.0 candidates, smallest edit first."""
    env = env or RuntimeEnv()
    if budget.population <= 0 or budget.generations <= 0:
        raise ValueError("search budget must be positive")
    fi = region[0]
    if program.functions[fi].is_test or not enumerate_mutations(program, [fi]):
        raise BudgetExhausted("no applicable operators in region", [])
    rng = SplitMix64(derive_seed(seed, fnv1a64(program.functions[fi].name)))
    cache: Dict[str, float] = {}

    def evaluate(p: Program) -> _Individual:
        key = format_function(p.functions[fi])
        if key not in cache:
            report = run_tests(p, env)
            total = len(report.results)
            cache[key] = 1.0 if total == 0 else sum(r.status == "pass" for r in report.results) / total
        return _Individual(p, key, cache[key], sum(_edit_size(program, p)))

    def offspring(parent: Program) -> Optional[Program]:
        moves = enumerate_mutations(parent, [fi])
        if not moves:
            return None
        op, site, s = moves[rng.below(len(moves))]
        try:
            return mutate(parent, op, site, s)
        except FaultError:
            return None

    def rank(ind: _Individual):
        return (-ind.fitness, ind.size, ind.key)

    population: List[_Individual] = []
    for _ in range(budget.population):
        child = offspring(program)
        if child is not None:
            population.append(evaluate(child))
    solutions: Dict[str, _Individual] = {}
    seen: Dict[str, _Individual] = {}
    for generation in range(budget.generations + 1):
        for ind in population:
            seen.setdefault(ind.key, ind)
            if ind.fitness >= 1.0:
                solutions.setdefault(ind.key, ind)
        if solutions or generation == budget.generations or not population:
            break
        children = []
        for _ in range(budget.population):
            contenders = [population[rng.below(len(population))] for _ in range(TOURNAMENT)]
            parent = min(contenders, key=rank)
            child = offspring(parent.program)
            if child is not None:
                children.append(evaluate(child))
        merged = {ind.key: ind for ind in population + children}
        population = sorted(merged.values(), key=rank)[:budget.population]

    def as_candidate(ind: _Individual, partial: bool) -> PatchCandidate:
        edits = tuple(tree_edits(program, ind.program))
        return PatchCandidate(0, edits, Origin.search,
                              f"evolved in {program.functions[fi].name} (fitness {ind.fitness:.3f})",
                              predicted_class, partial=partial, fitness=ind.fitness)

    if solutions:
        best = sorted(solutions.values(), key=rank)[:MAX_SOLUTIONS]
        return [as_candidate(ind, False) for ind in best]
    partials = sorted(seen.values(), key=rank)[:1]
    raise BudgetExhausted("no candidate passed every test", [as_candidate(ind, True) for ind in partials])
