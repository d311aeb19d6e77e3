"""Mutation-testing guard against patches that bypass the tested logic."""

from __future__ import annotations

from typing import Mapping, Optional

from ..faults.mutate import enumerate_mutations, mutate
from ..faults.taxonomy import FaultError
from ..minilang.formatter import format_function
from ..minilang.interpreter import RuntimeEnv
from ..minilang.nodes import NodePath, Program
from ..rng import SplitMix64, derive_seed
from .sandbox import sandbox_run

DEFAULT_N_MUTANTS = 20
DEFAULT_KILL_THRESHOLD = 0.6


def mutation_score(patched: Program, region: NodePath, n_mutants: int = DEFAULT_N_MUTANTS, seed: int = 0,
                   env: Optional[RuntimeEnv] = None, quarantine: Optional[Mapping[str, int]] = None
                   ) -> Optional[float]:
    """killed / generated over up to ``n_mutants`` distinct mutants of the region function.

    None (not run) when the region admits no mutant.
    """
    env = env or RuntimeEnv()
    fi = region[0]
    moves = enumerate_mutations(patched, [fi])
    if not moves:
        return None
    order = SplitMix64(derive_seed(seed, fi)).shuffled(moves)
    seen = {format_function(patched.functions[fi])}
    generated = killed = 0
    for op, site, s in order:
        if generated >= n_mutants:
            break
        try:
            mutant = mutate(patched, op, site, s)
        except FaultError:
            continue
        key = format_function(mutant.functions[fi])
        if key in seen:
            continue
        seen.add(key)
        generated += 1
        if not sandbox_run(mutant, env, quarantine).passed:
            killed += 1
    if generated == 0:
        return None
    return killed / generated
