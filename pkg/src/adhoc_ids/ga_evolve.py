"""Genetic search over CA rules (8-bit tables) or n x n dependency matrices."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

from .ca_engine import CaRule, DependencyMatrix, binary_attractor, matrix_attractor
from .patterns import PatternVector, relevance_index

RngLike = Union[int, random.Random]


class GaError(ValueError):
    pass


def _rng(seed: RngLike) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


@dataclass(frozen=True)
class Chromosome:
    genome: tuple[int, ...]
    fitness: Optional[float] = None

    def __str__(self) -> str:
        return "".join(map(str, self.genome))


# Rule genomes are written most significant bit first, so the genome read as a
# binary numeral is the Wolfram rule number (neighborhood 111 first).
def rule_genome(rule: CaRule) -> tuple[int, ...]:
    return tuple(reversed(rule.table))


def genome_rule(genome: Sequence[int]) -> CaRule:
    if len(genome) != 8:
        raise GaError(f"rule genome must have 8 bits, got {len(genome)}")
    return CaRule.from_table(tuple(reversed(tuple(genome))))


def genome_matrix(genome: Sequence[int], n: int) -> DependencyMatrix:
    """Row-major n*n genome to a dependency matrix; an all-zero row gets its diagonal set."""
    if len(genome) != n * n:
        raise GaError(f"matrix genome must have {n * n} bits, got {len(genome)}")
    rows = []
    for i in range(n):
        row = list(genome[i * n:(i + 1) * n])
        if not any(row):
            row[i] = 1
        rows.append(tuple(row))
    return DependencyMatrix(tuple(rows))


@dataclass(frozen=True)
class Encoding:
    """How a genome is decoded into a CA and how that CA labels a pattern."""

    kind: str = "rule"  # "rule" or "matrix"
    cells: int = 0  # lattice size, needed for the matrix encoding

    def __post_init__(self) -> None:
        if self.kind not in ("rule", "matrix"):
            raise GaError(f"unknown encoding {self.kind!r}")
        if self.kind == "matrix" and self.cells < 1:
            raise GaError("matrix encoding needs the lattice size")

    @property
    def length(self) -> int:
        return 8 if self.kind == "rule" else self.cells * self.cells

    def decode(self, genome: Sequence[int]) -> CaRule | DependencyMatrix:
        if self.kind == "rule":
            return genome_rule(genome)
        return genome_matrix(genome, self.cells)


RULE_ENCODING = Encoding("rule")


def attractor_of(ca: CaRule | DependencyMatrix, cells: Sequence[int]) -> int:
    if isinstance(ca, CaRule):
        return binary_attractor(ca, cells)
    return matrix_attractor(ca, cells)


def basin_distribution(ca, train: Sequence[PatternVector]) -> dict[int, dict[int, int]]:
    dist: dict[int, dict[int, int]] = {}
    for p in train:
        hist = dist.setdefault(attractor_of(ca, p.cells), {})
        hist[p.label] = hist.get(p.label, 0) + 1
    return dist


def fitness(c: Chromosome, train: Sequence[PatternVector], encoding: Encoding = RULE_ENCODING) -> float:
    """Relevance index of the basin distribution the chromosome's CA induces on ``train``."""
    if not train:
        raise GaError("fitness needs a nonempty training set")
    return relevance_index(basin_distribution(encoding.decode(c.genome), train))


def crossover(a: Chromosome, b: Chromosome, seed: RngLike = 0, cut: Optional[int] = None) -> Chromosome:
    """Single-point crossover: ``a[:cut] + b[cut:]`` with cut uniform in [1, len-1]."""
    if len(a.genome) != len(b.genome):
        raise GaError("parents have different genome lengths")
    n = len(a.genome)
    if n < 2:
        return Chromosome(a.genome)
    if cut is None:
        cut = _rng(seed).randint(1, n - 1)
    elif not 1 <= cut <= n - 1:
        raise GaError(f"cut must be in [1, {n - 1}]")
    return Chromosome(a.genome[:cut] + b.genome[cut:])


def mutate(c: Chromosome, rate: float, seed: RngLike = 0) -> Chromosome:
    if not 0.0 <= rate <= 1.0:
        raise GaError(f"mutation rate must be in [0, 1], got {rate}")
    rng = _rng(seed)
    return Chromosome(tuple(g ^ 1 if rng.random() < rate else g for g in c.genome))


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 40
    generations: int = 50
    mutation_rate: float = 0.02
    elite_fraction: float = 0.1
    cull_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise GaError("population_size must be >= 2")
        if self.generations < 0:
            raise GaError("generations must be >= 0")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise GaError("mutation_rate must be in [0, 1]")
        if not 0.0 < self.elite_fraction < 1.0 or not 0.0 < self.cull_fraction < 1.0:
            raise GaError("elite_fraction and cull_fraction must be in (0, 1)")
        if self.elite_fraction + self.cull_fraction > 1.0:
            raise GaError("elite_fraction + cull_fraction must be <= 1")

    def with_seed(self, seed: int) -> "GaConfig":
        return replace(self, seed=seed)


@dataclass
class EvolutionResult:
    best: Chromosome
    history: list[float]
    population: list[Chromosome] = field(default_factory=list)


def _rank(pop: list[Chromosome]) -> list[Chromosome]:
    return sorted(pop, key=lambda c: (-c.fitness, c.genome))


def _roulette(pool: list[Chromosome], rng: random.Random) -> Chromosome:
    total = sum(c.fitness for c in pool)
    if total <= 0:
        return pool[rng.randrange(len(pool))]
    x = rng.random() * total
    acc = 0.0
    for c in pool:
        acc += c.fitness
        if x < acc:
            return c
    return pool[-1]


def evolve(
    config: GaConfig,
    train: Sequence[PatternVector],
    encoding: Encoding = RULE_ENCODING,
    score: Optional[Callable[[Chromosome], float]] = None,
) -> EvolutionResult:
    """Run the GA and return the best chromosome, per-generation best fitness, and final population.

    ``history[0]`` is the initial population's best; one entry per generation
    follows. The top ``elite_fraction`` survive unchanged, the bottom
    ``cull_fraction`` are dropped, and the remaining slots are refilled with
    mutated single-point crossovers of roulette-selected survivors.
    """
    if not train:
        raise GaError("evolve needs a nonempty training set")
    if score is None:
        score = lambda c: fitness(c, train, encoding)  # noqa: E731
    rng = random.Random(config.seed)
    cache: dict[tuple[int, ...], float] = {}

    def evaluate(genome: tuple[int, ...]) -> Chromosome:
        if genome not in cache:
            cache[genome] = score(Chromosome(genome))
        return Chromosome(genome, cache[genome])

    size = config.population_size
    n_elite = max(1, math.ceil(config.elite_fraction * size))
    n_cull = math.floor(config.cull_fraction * size)

    pop = _rank([
        evaluate(tuple(rng.randint(0, 1) for _ in range(encoding.length))) for _ in range(size)
    ])
    history = [pop[0].fitness]
    for _ in range(config.generations):
        elites = pop[:n_elite]
        survivors = pop[: size - n_cull]
        children = []
        while len(elites) + len(children) < size:
            a = _roulette(survivors, rng)
            b = _roulette(survivors, rng)
            child = mutate(crossover(a, b, rng), config.mutation_rate, rng)
            children.append(evaluate(child.genome))
        pop = _rank(elites + children)
        if len(pop) != size:
            raise GaError("population size drifted")
        if pop[0].fitness < history[-1]:
            raise GaError("elitism violated: best fitness decreased")
        history.append(pop[0].fitness)
    return EvolutionResult(pop[0], history, pop)
