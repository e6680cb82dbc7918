"""Compare the numba, numpy and pure-Python backends on the two hot kernels:
one Kleene solve of a random min-plus system and one Bellman-Ford run.

    python benchmarks/bench_kernels.py --vars 2000 --edges 20000
"""
import argparse
import random
import time

from wpdskit.fixpoint import Monomial, PolynomialSystem, safe_kleene
from wpdskit.semiring import MIN_PLUS
from wpdskit.wautomata import Transition, WAutomaton, bellman_ford_extremal

BACKENDS = ("numba", "numpy", "python")


def random_system(rng, n, monomials):
    polys = []
    for _ in range(n):
        row = [Monomial((rng.randint(0, 9),))]
        for _ in range(monomials):
            deg = rng.randint(1, 2)
            vars_ = tuple(rng.randrange(n) for _ in range(deg))
            row.append(Monomial(tuple(rng.randint(0, 9) for _ in range(deg + 1)), vars_))
        polys.append(tuple(row))
    return PolynomialSystem(MIN_PLUS, tuple(polys))


def random_graph(rng, nodes, edges):
    names = [f"s{i}" for i in range(nodes)]
    trans = tuple(Transition(rng.choice(names), "X", rng.randint(0, 20), rng.choice(names))
                  for _ in range(edges))
    return WAutomaton(MIN_PLUS, tuple(names), trans, frozenset(names[:10]), frozenset(names[-5:]))


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--vars", type=int, default=2000)
    ap.add_argument("--monomials", type=int, default=3)
    ap.add_argument("--nodes", type=int, default=2000)
    ap.add_argument("--edges", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-python", action="store_true", help="skip the slow reference path")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    system = random_system(rng, args.vars, args.monomials)
    graph = random_graph(rng, args.nodes, args.edges)
    backends = [b for b in BACKENDS if not (args.skip_python and b == "python")]

    # compile once so the numba column measures steady-state time
    safe_kleene(random_system(rng, 40, 2), backend="numba")
    bellman_ford_extremal(random_graph(rng, 40, 100), backend="numba")

    results = {}
    print(f"{'kernel':<14}{'backend':<9}{'seconds':>10}")
    for backend in backends:
        t_solve = best_of(lambda: safe_kleene(system, backend=backend), args.repeat)
        t_bf = best_of(lambda: bellman_ford_extremal(graph, backend=backend), args.repeat)
        results[backend] = (safe_kleene(system, backend=backend),
                            bellman_ford_extremal(graph, backend=backend).values)
        print(f"{'kleene':<14}{backend:<9}{t_solve:>10.4f}")
        print(f"{'bellman-ford':<14}{backend:<9}{t_bf:>10.4f}")
    ref = results[backends[0]]
    agree = all(r == ref for r in results.values())
    print(f"backends agree: {agree}")


if __name__ == "__main__":
    main()
